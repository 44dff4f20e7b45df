//! Tolerant conversion of raw completions into [`Prediction`]s.
//!
//! The expected output is a nested list `[[s1, e1], [s2, e2], ...]`, but
//! models wrap it in prose, code fences, or an `ANSWER:` line, emit a flat
//! pair, swap bounds, append units, or overshoot the video. The pipeline:
//!
//! 1. keep only the text after the last answer marker (if any) and pick the
//!    last standalone option letter there for multiple-choice samples;
//! 2. strip code fences;
//! 3. collect every innermost `[a, b]` pair (falling back to `(a, b)`);
//! 4. coerce numbers, tolerating unit suffixes and thousands separators;
//! 5. per window: swap reversed bounds, map relative values to seconds,
//!    clamp to `[0, d]`;
//! 6. drop duplicates and cap the list.
//!
//! The result is `Clean` only if the region was exactly a strict nested list
//! and nothing had to be fixed, `Failed` if no window survived, otherwise
//! `Repaired`.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::blueprint::{Precision, Representation, TimestampStyle};
use crate::domain::{ParseStatus, Prediction, TimeInterval};
use crate::error::{Error, Result};

pub const DEFAULT_ANSWER_MARKER: &str = "ANSWER:";
pub const DEFAULT_MAX_WINDOWS: usize = 50;

const NUM: &str = r"-?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|-?\.\d+";
const UNIT: &str = r"(?:\s*(?:seconds|second|secs|sec|s)\b)?";

static STRICT_LIST: LazyLock<Regex> = LazyLock::new(|| {
    let n = r"\d+(?:\.\d+)?";
    let pair = format!(r"\[\s*{n}\s*,\s*{n}\s*\]");
    Regex::new(&format!(r"^\[\s*{pair}(?:\s*,\s*{pair})*\s*\]$")).unwrap()
});

static PAIR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"^\s*({NUM}){UNIT}\s*(?:,|;|–|-|\bto\b)\s*({NUM}){UNIT}\s*$"
    ))
    .unwrap()
});

static BRACKET_GROUP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[([^\[\]]*)\]").unwrap());
static PAREN_GROUP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\(([^()]*)\)").unwrap());
static LEADING_NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"^({NUM})\s*[A-Za-z]*$")).unwrap()
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParseConfig {
    pub style: TimestampStyle,
    pub duration_s: f64,
    pub answer_marker: String,
    pub max_windows: usize,
    /// Number of multiple-choice options; zero disables answer extraction.
    pub num_options: usize,
    /// Keep only the first surviving window (single-window benchmarks).
    pub take_first_only: bool,
}

impl Default for ParseConfig {
    fn default() -> Self {
        Self {
            style: TimestampStyle::default(),
            duration_s: 1.0,
            answer_marker: DEFAULT_ANSWER_MARKER.to_string(),
            max_windows: DEFAULT_MAX_WINDOWS,
            num_options: 0,
            take_first_only: false,
        }
    }
}

impl ParseConfig {
    pub fn new(style: TimestampStyle, duration_s: f64) -> Self {
        Self {
            style,
            duration_s,
            ..Self::default()
        }
    }

    pub fn with_options(mut self, num_options: usize) -> Self {
        self.num_options = num_options;
        self
    }
}

/// Numeric value of a token, ignoring thousands separators and a trailing unit.
fn coerce_number(token: &str) -> Option<f64> {
    let caps = LEADING_NUMBER.captures(token.trim())?;
    let v: f64 = caps[1].replace(',', "").parse().ok()?;
    v.is_finite().then_some(v)
}

/// Map a style-space value back to seconds (no clamping).
fn to_seconds(style: &TimestampStyle, v: f64, duration_s: f64) -> f64 {
    match (style.representation, style.precision) {
        (Representation::Absolute, _) => v,
        (Representation::Relative, Precision::Integer) => v / 100.0 * duration_s,
        (Representation::Relative, Precision::Decimal) => v * duration_s,
    }
}

/// Inverse of [`crate::blueprint::render_timestamp`].
pub fn parse_time(token: &str, style: &TimestampStyle, duration_s: f64) -> Result<f64> {
    let v = coerce_number(token).ok_or_else(|| Error::ParseTime {
        token: token.to_string(),
    })?;
    Ok(to_seconds(style, v, duration_s))
}

fn find_last_ci(haystack: &str, needle: &str) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    let h = haystack.to_ascii_lowercase();
    h.rfind(&needle.to_ascii_lowercase())
}

/// Last standalone capital letter within the first `num_options` letters,
/// together with its byte span (including a trailing `.` or `)`).
fn last_option_letter(text: &str, num_options: usize) -> Option<(usize, std::ops::Range<usize>)> {
    let max = num_options.min(26) as u8;
    let bytes = text.as_bytes();
    let mut found = None;
    for (i, &b) in bytes.iter().enumerate() {
        if !(b'A'..b'A' + max).contains(&b) {
            continue;
        }
        let before_ok = i == 0 || !bytes[i - 1].is_ascii_alphanumeric();
        let after_ok = i + 1 == bytes.len() || !bytes[i + 1].is_ascii_alphanumeric();
        if before_ok && after_ok {
            let mut end = i + 1;
            if end < bytes.len() && matches!(bytes[end], b'.' | b')' | b':') {
                end += 1;
            }
            let mut start = i;
            if start > 0 && bytes[start - 1] == b'(' {
                start -= 1;
            }
            found = Some(((b - b'A') as usize, start..end));
        }
    }
    found
}

fn strip_code_fences(text: &str) -> (String, bool) {
    if !text.contains("```") {
        return (text.to_string(), false);
    }
    let mut out = String::with_capacity(text.len());
    for (i, chunk) in text.split("```").enumerate() {
        // odd chunks open with the fence's language tag
        let chunk = if i % 2 == 1 {
            match chunk.find('\n') {
                Some(nl) if chunk[..nl].trim().chars().all(|c| c.is_ascii_alphanumeric()) => {
                    &chunk[nl + 1..]
                }
                _ => chunk
                    .trim_start_matches(|c: char| c.is_ascii_alphabetic())
                    .trim_start(),
            }
        } else {
            chunk
        };
        out.push_str(chunk);
    }
    (out, true)
}

fn scan_pairs(text: &str, group: &Regex) -> (Vec<(f64, f64)>, usize) {
    let mut pairs = Vec::new();
    let mut rejected = 0;
    for caps in group.captures_iter(text) {
        let inner = &caps[1];
        match PAIR.captures(inner) {
            Some(p) => match (coerce_number(&p[1]), coerce_number(&p[2])) {
                (Some(a), Some(b)) => pairs.push((a, b)),
                _ => rejected += 1,
            },
            None => rejected += 1,
        }
    }
    (pairs, rejected)
}

pub fn parse_prediction(raw_text: &str, cfg: &ParseConfig) -> Prediction {
    let duration = cfg.duration_s;
    let mut repaired = false;

    let mut region = match find_last_ci(raw_text, &cfg.answer_marker) {
        Some(pos) => raw_text[pos + cfg.answer_marker.len()..].to_string(),
        None => raw_text.to_string(),
    };

    let mut answer_index = None;
    if cfg.num_options > 0 {
        if let Some((idx, span)) = last_option_letter(&region, cfg.num_options) {
            answer_index = Some(idx);
            region.replace_range(span, " ");
        }
    }

    let (region, fenced) = strip_code_fences(&region);
    repaired |= fenced;

    let candidate = region
        .trim()
        .trim_matches(|c: char| c == ',' || c == ';' || c.is_whitespace());
    let strict = STRICT_LIST.is_match(candidate);
    repaired |= !strict;

    let (mut pairs, rejected) = scan_pairs(&region, &BRACKET_GROUP);
    if pairs.is_empty() {
        let (p, r) = scan_pairs(&region, &PAREN_GROUP);
        pairs = p;
        let _ = r;
    }
    repaired |= rejected > 0;

    let mut windows: Vec<TimeInterval> = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let (mut s, mut e) = (a, b);
        if s > e {
            std::mem::swap(&mut s, &mut e);
            repaired = true;
        }
        if cfg.style.representation == Representation::Relative {
            s = to_seconds(&cfg.style, s, duration);
            e = to_seconds(&cfg.style, e, duration);
            repaired = true;
        }
        let (cs, ce) = (s.clamp(0.0, duration), e.clamp(0.0, duration));
        if cs != s || ce != e {
            repaired = true;
        }
        let Ok(w) = TimeInterval::new(cs, ce) else {
            repaired = true;
            continue;
        };
        if windows.contains(&w) {
            repaired = true;
            continue;
        }
        windows.push(w);
    }
    if windows.len() > cfg.max_windows {
        windows.truncate(cfg.max_windows);
        repaired = true;
    }
    if cfg.take_first_only {
        windows.truncate(1);
    }

    let parse_status = if windows.is_empty() {
        ParseStatus::Failed
    } else if repaired {
        ParseStatus::Repaired
    } else {
        ParseStatus::Clean
    };
    Prediction {
        windows,
        answer_index,
        raw_text: raw_text.to_string(),
        parse_status,
    }
}
