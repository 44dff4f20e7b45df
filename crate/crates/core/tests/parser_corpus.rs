mod common;

use common::corpus;
use proptest::prelude::*;

use vtg_harness::blueprint::{render_windows, TimestampStyle};
use vtg_harness::parsing::{parse_prediction, ParseConfig};
use vtg_harness::{ParseStatus, TimeInterval};

#[test]
fn corpus_replays() {
    let cases = corpus::load();
    assert!(cases.len() >= 30);
    for c in &cases {
        corpus::check(c).unwrap();
    }
}

const STYLES: [&str; 4] = ["abs-int", "abs-dec", "rel-int", "rel-dec"];

/// Seconds for a style-space grid value: whole seconds, tenths, percent, or hundredths.
fn grid_seconds(style: &str, v: u32, d: f64) -> f64 {
    match style {
        "abs-int" => f64::from(v),
        "abs-dec" => f64::from(v) / 10.0,
        _ => f64::from(v) / 100.0 * d,
    }
}

fn grid_max(style: &str, d: u32) -> u32 {
    match style {
        "abs-int" => d,
        "abs-dec" => d * 10,
        _ => 100,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn render_then_parse_reproduces_windows(
        style_idx in 0usize..4,
        d in 5u32..300,
        raw in prop::collection::vec((0u32..=1000, 0u32..=1000), 1..6),
    ) {
        let code = STYLES[style_idx];
        let style: TimestampStyle = code.parse().unwrap();
        let dur = f64::from(d);
        let max = grid_max(code, d);
        let mut grid: Vec<(u32, u32)> = raw
            .iter()
            .map(|&(a, b)| {
                let (a, b) = (a % (max + 1), b % (max + 1));
                (a.min(b), a.max(b))
            })
            .collect();
        grid.sort();
        grid.dedup();
        let windows: Vec<TimeInterval> = grid
            .iter()
            .map(|&(a, b)| TimeInterval::new(grid_seconds(code, a, dur), grid_seconds(code, b, dur)).unwrap())
            .collect();
        let text = render_windows(&style, &windows, dur).unwrap();
        let p = parse_prediction(&text, &ParseConfig::new(style, dur));
        prop_assert_eq!(&p.windows, &windows, "{} -> {}", code, text);
        prop_assert_ne!(p.parse_status, ParseStatus::Failed);
    }

    #[test]
    fn prose_around_a_strict_list_only_changes_status(
        before in "[a-z ,.!?\n]{0,40}",
        after in "[a-z ,.!?\n]{0,40}",
        pairs in prop::collection::vec((0u32..60, 0u32..60), 1..4),
    ) {
        let body = pairs
            .iter()
            .map(|&(a, b)| format!("[{}, {}]", a.min(b), a.max(b)))
            .collect::<Vec<_>>()
            .join(", ");
        let strict = format!("[{body}]");
        let cfg = ParseConfig::new(TimestampStyle::default(), 60.0);
        let plain = parse_prediction(&strict, &cfg);
        let wrapped = parse_prediction(&format!("{before}{strict}{after}"), &cfg);
        prop_assert_eq!(plain.windows, wrapped.windows);
    }

    #[test]
    fn parsed_windows_always_valid(raw in ".{0,200}", d in 1u32..500, style_idx in 0usize..4) {
        let dur = f64::from(d);
        let p = parse_prediction(&raw, &ParseConfig::new(STYLES[style_idx].parse().unwrap(), dur));
        for w in &p.windows {
            prop_assert!(w.start_s() >= 0.0 && w.end_s() <= dur && w.start_s() <= w.end_s());
        }
        prop_assert_eq!(p.windows.is_empty(), p.parse_status == ParseStatus::Failed);
    }
}
