//! Rendering of the timestamp-interleaved multimodal input sequence.
//!
//! The canonical layout is `[f_1, r(t_1), ..., f_F, r(t_F), d, q, p]`: every
//! frame followed by its rendered timestamp, then the duration sentence, the
//! query and the task prompt. [`TimestampStyle`] covers the ablation space
//! (absolute/relative, integer/decimal, interleaved/appended, and the two
//! inclusion toggles).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{AnnotationSample, TimeInterval};
use crate::error::{Error, Result};

/// Separator placed between timestamps when they are appended after all frames.
pub const APPENDED_SEPARATOR: &str = ">";

/// Placeholder written into golden fixtures and training exports for image slot `n` (1-based).
pub fn image_placeholder(n: usize) -> String {
    format!("⟦IMG:{n}⟧")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    #[default]
    Absolute,
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Integer,
    Decimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    #[default]
    Interleaved,
    Appended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct TimestampStyle {
    pub representation: Representation,
    pub precision: Precision,
    pub placement: Placement,
    pub include_timestamps: bool,
    pub include_duration: bool,
}

impl Default for TimestampStyle {
    /// Absolute integer seconds interleaved with frames, duration included.
    fn default() -> Self {
        Self {
            representation: Representation::Absolute,
            precision: Precision::Integer,
            placement: Placement::Interleaved,
            include_timestamps: true,
            include_duration: true,
        }
    }
}

impl TimestampStyle {
    pub fn new(representation: Representation, precision: Precision, placement: Placement) -> Self {
        Self {
            representation,
            precision,
            placement,
            ..Self::default()
        }
    }

    pub fn with_components(mut self, include_duration: bool, include_timestamps: bool) -> Self {
        self.include_duration = include_duration;
        self.include_timestamps = include_timestamps;
        self
    }

    /// Short `rep-prec` code such as `abs-int`.
    pub fn code(&self) -> &'static str {
        match (self.representation, self.precision) {
            (Representation::Absolute, Precision::Integer) => "abs-int",
            (Representation::Absolute, Precision::Decimal) => "abs-dec",
            (Representation::Relative, Precision::Integer) => "rel-int",
            (Representation::Relative, Precision::Decimal) => "rel-dec",
        }
    }

    /// Worst-case absolute error in seconds of a render/parse round trip.
    pub fn resolution_bound_s(&self, duration_s: f64) -> f64 {
        match (self.representation, self.precision) {
            (Representation::Absolute, Precision::Integer) => 0.5,
            (Representation::Absolute, Precision::Decimal) => 0.05,
            (Representation::Relative, _) => duration_s / 200.0,
        }
    }
}

impl FromStr for TimestampStyle {
    type Err = Error;

    /// Accepts `abs-int`, `abs-dec`, `rel-int`, `rel-dec`.
    fn from_str(s: &str) -> Result<Self> {
        let (rep, prec) = match s.trim().to_ascii_lowercase().as_str() {
            "abs-int" => (Representation::Absolute, Precision::Integer),
            "abs-dec" => (Representation::Absolute, Precision::Decimal),
            "rel-int" => (Representation::Relative, Precision::Integer),
            "rel-dec" => (Representation::Relative, Precision::Decimal),
            other => {
                return Err(Error::Config(format!(
                    "unknown timestamp style `{other}` (expected abs-int, abs-dec, rel-int or rel-dec)"
                )))
            }
        };
        Ok(Self::new(rep, prec, Placement::Interleaved))
    }
}

impl fmt::Display for TimestampStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let placement = match self.placement {
            Placement::Interleaved => "interleaved",
            Placement::Appended => "appended",
        };
        write!(
            f,
            "{}/{placement} D={} T={}",
            self.code(),
            self.include_duration,
            self.include_timestamps
        )
    }
}

/// Text pieces that surround the frames.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplate {
    pub task_prompt: String,
    pub format_prompt: Option<String>,
    /// Line printed before multiple-choice options.
    pub gqa_option_header: Option<String>,
    /// How the query item is rendered; `{query}` is substituted.
    pub query_format: String,
}

pub const DEFAULT_TASK_PROMPT: &str = "Given the video and the query, find the relevant windows.";

const ZERO_SHOT_FORMAT_PROMPT: &str = "Think step by step. \
Reason about the events in the video and how they relate to the query. \
After your reasoning, output `ANSWER: <your answer>` in the format specified in the task prompt. \
Always provide a non-empty answer after your thoughts. \
If you think the event does not take place in the video, give your best guess, as otherwise the evaluation will be marked as incorrect. \
Never provide an empty list for <your answer>. \
The descriptions of moments are sometimes imprecise, so retrieve the closest moment. \
If you don't see an event remotely similar to the description, guess what is the most likely moment given the context. \
The answer should be in the format of a list indicating the start and end of a window of moment, [start_window, end_window], for instance [0, 1]. \
If you detect multiple windows for the same moment, choose the most relevant one. \
It's important your final answer only contains one window. \
It is very important that the answer is in this format, otherwise the evaluation will fail.";

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            task_prompt: DEFAULT_TASK_PROMPT.to_string(),
            format_prompt: None,
            gqa_option_header: None,
            query_format: "{query}".to_string(),
        }
    }
}

impl PromptTemplate {
    /// Template for instruction-following models queried without any training:
    /// labelled query plus a format-adherence prompt asking for `ANSWER: [s, e]`.
    pub fn zero_shot() -> Self {
        Self {
            task_prompt: DEFAULT_TASK_PROMPT.to_string(),
            format_prompt: Some(ZERO_SHOT_FORMAT_PROMPT.to_string()),
            gqa_option_header: Some("Options:".to_string()),
            query_format: "Query: {query}.".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.task_prompt.trim().is_empty() {
            return Err(Error::Config("task_prompt must not be empty".into()));
        }
        Ok(())
    }
}

/// Opaque handle to a frame image. The blueprint never looks at pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageRef {
    Path(PathBuf),
    Bytes { media_type: String, data: Vec<u8> },
}

impl ImageRef {
    pub fn path(p: impl Into<PathBuf>) -> Self {
        ImageRef::Path(p.into())
    }

    pub fn media_type(&self) -> String {
        match self {
            ImageRef::Bytes { media_type, .. } => media_type.clone(),
            ImageRef::Path(p) => match p
                .extension()
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase)
                .as_deref()
            {
                Some("png") => "image/png",
                Some("webp") => "image/webp",
                Some("gif") => "image/gif",
                _ => "image/jpeg",
            }
            .to_string(),
        }
    }

    pub fn load_bytes(&self) -> Result<Vec<u8>> {
        match self {
            ImageRef::Bytes { data, .. } => Ok(data.clone()),
            ImageRef::Path(p) => std::fs::read(p).map_err(|e| Error::io(p, e)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PromptItem {
    Image {
        frame_index: usize,
        timestamp_s: f64,
        image: ImageRef,
    },
    Text {
        text: String,
    },
}

impl PromptItem {
    fn text(s: impl Into<String>) -> Self {
        PromptItem::Text { text: s.into() }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            PromptItem::Text { text } => Some(text),
            PromptItem::Image { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSequence {
    pub items: Vec<PromptItem>,
}

impl PromptSequence {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn images(&self) -> impl Iterator<Item = &ImageRef> {
        self.items.iter().filter_map(|it| match it {
            PromptItem::Image { image, .. } => Some(image),
            PromptItem::Text { .. } => None,
        })
    }

    /// Text segments with `⟦IMG:n⟧` in place of each image slot.
    pub fn segments(&self) -> Vec<String> {
        self.items
            .iter()
            .map(|it| match it {
                PromptItem::Image { frame_index, .. } => image_placeholder(frame_index + 1),
                PromptItem::Text { text } => text.clone(),
            })
            .collect()
    }

    /// One item per line, images replaced by placeholders. This is the golden
    /// fixture format.
    pub fn to_fixture_text(&self) -> String {
        let mut out = String::new();
        for seg in self.segments() {
            out.push_str(&seg);
            out.push('\n');
        }
        out
    }
}

/// Round half away from zero at `digits` fractional digits. Inputs here are
/// never negative, so this is round-half-up.
pub(crate) fn round_half_up(x: f64, digits: u32) -> f64 {
    let scale = 10f64.powi(digits as i32);
    (x * scale + 0.5).floor() / scale
}

fn fixed(x: f64, digits: u32) -> String {
    format!("{:.*}", digits as usize, round_half_up(x, digits))
}

/// Like [`fixed`] but without trailing fractional zeros (`12.0` → `12`).
fn trimmed(x: f64, digits: u32) -> String {
    let s = fixed(x, digits);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Style-space value of `t_s`, before rounding: seconds for absolute styles,
/// fraction of the video for relative decimal, percent for relative integer.
fn style_value(style: &TimestampStyle, t_s: f64, duration_s: f64) -> (f64, u32) {
    match (style.representation, style.precision) {
        (Representation::Absolute, Precision::Integer) => (t_s, 0),
        (Representation::Absolute, Precision::Decimal) => (t_s, 1),
        (Representation::Relative, Precision::Integer) => (100.0 * t_s / duration_s, 0),
        (Representation::Relative, Precision::Decimal) => (t_s / duration_s, 2),
    }
}

fn check_time(t_s: f64, duration_s: f64) -> Result<()> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::invalid(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    if !(t_s.is_finite() && (0.0..=duration_s).contains(&t_s)) {
        return Err(Error::invalid(format!(
            "timestamp {t_s} outside [0, {duration_s}]"
        )));
    }
    Ok(())
}

pub fn render_timestamp(style: &TimestampStyle, t_s: f64, duration_s: f64) -> Result<String> {
    check_time(t_s, duration_s)?;
    let (v, digits) = style_value(style, t_s, duration_s);
    Ok(fixed(v, digits))
}

/// Duration in the style's absolute precision.
pub fn render_duration(style: &TimestampStyle, duration_s: f64) -> String {
    match style.precision {
        Precision::Integer => fixed(duration_s, 0),
        Precision::Decimal => fixed(duration_s, 1),
    }
}

pub fn duration_sentence(style: &TimestampStyle, duration_s: f64) -> String {
    format!("The video lasts {} seconds.", render_duration(style, duration_s))
}

/// Render windows as a nested list target, e.g. `[[3, 9], [12.5, 20]]`.
///
/// Windows are sorted by start, values are expressed in the style's
/// representation and carry no trailing zeros.
pub fn render_windows(
    style: &TimestampStyle,
    windows: &[TimeInterval],
    duration_s: f64,
) -> Result<String> {
    let mut sorted = windows.to_vec();
    sorted.sort_by(|a, b| {
        a.start_s()
            .total_cmp(&b.start_s())
            .then(a.end_s().total_cmp(&b.end_s()))
    });
    let mut parts = Vec::with_capacity(sorted.len());
    for w in &sorted {
        check_time(w.start_s(), duration_s)?;
        check_time(w.end_s(), duration_s)?;
        let (s, digits) = style_value(style, w.start_s(), duration_s);
        let (e, _) = style_value(style, w.end_s(), duration_s);
        parts.push(format!("[{}, {}]", trimmed(s, digits), trimmed(e, digits)));
    }
    Ok(format!("[{}]", parts.join(", ")))
}

fn option_label(i: usize) -> char {
    (b'A' + (i % 26) as u8) as char
}

fn query_item(sample: &AnnotationSample, template: &PromptTemplate) -> String {
    let mut text = template.query_format.replace("{query}", &sample.query);
    if let Some(options) = sample.qa_options.as_ref().filter(|o| !o.is_empty()) {
        if let Some(header) = &template.gqa_option_header {
            text.push('\n');
            text.push_str(header);
        }
        for (i, opt) in options.iter().enumerate() {
            text.push_str(&format!("\n{}. {opt}", option_label(i)));
        }
    }
    text
}

pub fn build_sequence(
    sample: &AnnotationSample,
    timestamps: &[f64],
    style: &TimestampStyle,
    template: &PromptTemplate,
    image_refs: &[ImageRef],
) -> Result<PromptSequence> {
    if timestamps.is_empty() {
        return Err(Error::invalid("at least one frame is required"));
    }
    if timestamps.len() != image_refs.len() {
        return Err(Error::invalid(format!(
            "{} timestamps but {} images",
            timestamps.len(),
            image_refs.len()
        )));
    }
    template.validate()?;
    let d = sample.duration_s;

    let mut items = Vec::with_capacity(2 * timestamps.len() + 4);
    let mut rendered = Vec::with_capacity(timestamps.len());
    for (i, (&t, image)) in timestamps.iter().zip(image_refs).enumerate() {
        items.push(PromptItem::Image {
            frame_index: i,
            timestamp_s: t,
            image: image.clone(),
        });
        if style.include_timestamps {
            let r = render_timestamp(style, t, d)?;
            match style.placement {
                Placement::Interleaved => items.push(PromptItem::text(r)),
                Placement::Appended => rendered.push(r),
            }
        }
    }
    if style.include_timestamps && style.placement == Placement::Appended {
        items.push(PromptItem::text(rendered.join(APPENDED_SEPARATOR)));
    }
    if style.include_duration {
        items.push(PromptItem::text(duration_sentence(style, d)));
    }
    items.push(PromptItem::text(query_item(sample, template)));
    items.push(PromptItem::text(template.task_prompt.clone()));
    if let Some(fp) = &template.format_prompt {
        items.push(PromptItem::text(fp.clone()));
    }
    Ok(PromptSequence { items })
}

/// Number of items [`build_sequence`] produces for `num_frames` frames.
pub fn expected_item_count(style: &TimestampStyle, template: &PromptTemplate, num_frames: usize) -> usize {
    let trailing = usize::from(style.include_duration) + 2 + usize::from(template.format_prompt.is_some());
    let timestamp_items = match (style.include_timestamps, style.placement) {
        (false, _) => 0,
        (true, Placement::Interleaved) => num_frames,
        (true, Placement::Appended) => 1,
    };
    num_frames + timestamp_items + trailing
}
