//! Parser regression corpus: one JSON object per line in
//! `tests/fixtures/parser_corpus.jsonl`.

use std::path::PathBuf;

use serde::Deserialize;

use vtg_harness::parsing::{parse_prediction, ParseConfig};
use vtg_harness::ParseStatus;

#[derive(Deserialize)]
pub struct Case {
    pub name: String,
    pub raw: String,
    pub style: String,
    pub duration: f64,
    #[serde(default)]
    pub num_options: usize,
    #[serde(default)]
    pub take_first_only: bool,
    pub windows: Vec<(f64, f64)>,
    pub status: ParseStatus,
    #[serde(default)]
    pub answer: Option<usize>,
}

pub fn load() -> Vec<Case> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/parser_corpus.jsonl");
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("{l}: {e}")))
        .collect()
}

/// Replay one case; the error names what differed.
pub fn check(c: &Case) -> Result<(), String> {
    let mut cfg = ParseConfig::new(c.style.parse().map_err(|e| format!("{}: {e}", c.name))?, c.duration)
        .with_options(c.num_options);
    cfg.take_first_only = c.take_first_only;
    let p = parse_prediction(&c.raw, &cfg);
    let got: Vec<(f64, f64)> = p.windows.iter().map(|w| (w.start_s(), w.end_s())).collect();
    let same = got.len() == c.windows.len()
        && got
            .iter()
            .zip(&c.windows)
            .all(|(g, e)| (g.0 - e.0).abs() < 1e-9 && (g.1 - e.1).abs() < 1e-9);
    if !same {
        return Err(format!("{}: windows {got:?}, expected {:?}", c.name, c.windows));
    }
    if p.parse_status != c.status {
        return Err(format!("{}: status {}, expected {}", c.name, p.parse_status, c.status));
    }
    if p.answer_index != c.answer {
        return Err(format!("{}: answer {:?}, expected {:?}", c.name, p.answer_index, c.answer));
    }
    if p.raw_text != c.raw {
        return Err(format!("{}: raw text not preserved", c.name));
    }
    Ok(())
}

/// Render random grid-aligned windows in style `code`, parse them back and
/// compare. Grid: whole seconds, tenths, or hundredths of the duration.
pub fn random_round_trip<R: rand::Rng>(rng: &mut R, code: &str) -> Result<(), String> {
    use vtg_harness::blueprint::{render_windows, TimestampStyle};
    use vtg_harness::TimeInterval;

    let style: TimestampStyle = code.parse().map_err(|e| format!("{e}"))?;
    let d: u32 = rng.gen_range(5..300);
    let dur = f64::from(d);
    let (max, to_s): (u32, Box<dyn Fn(u32) -> f64>) = match code {
        "abs-int" => (d, Box::new(f64::from)),
        "abs-dec" => (d * 10, Box::new(|v| f64::from(v) / 10.0)),
        _ => (100, Box::new(move |v| f64::from(v) / 100.0 * dur)),
    };
    let mut grid: Vec<(u32, u32)> = (0..rng.gen_range(1..6))
        .map(|_| {
            let (a, b) = (rng.gen_range(0..=max), rng.gen_range(0..=max));
            (a.min(b), a.max(b))
        })
        .collect();
    grid.sort();
    grid.dedup();
    let windows: Vec<TimeInterval> = grid
        .iter()
        .map(|&(a, b)| TimeInterval::new(to_s(a), to_s(b)).unwrap())
        .collect();
    let text = render_windows(&style, &windows, dur).map_err(|e| e.to_string())?;
    let p = parse_prediction(&text, &ParseConfig::new(style, dur));
    if p.windows != windows {
        return Err(format!("{code} d={d}: {text} parsed to {:?}", p.windows));
    }
    Ok(())
}
