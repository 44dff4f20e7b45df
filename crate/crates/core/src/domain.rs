//! Shared value types: time intervals, benchmark samples and parsed predictions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `[start, end]` moment in seconds.
///
/// Both ends are finite and non-negative and `start_s <= end_s`. Zero-length
/// intervals are allowed; the parser can produce them and the metrics treat
/// them as points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct TimeInterval {
    start_s: f64,
    end_s: f64,
}

impl TimeInterval {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self> {
        if !start_s.is_finite() || !end_s.is_finite() {
            return Err(Error::invalid(format!(
                "interval bounds must be finite, got [{start_s}, {end_s}]"
            )));
        }
        if start_s < 0.0 || end_s < 0.0 {
            return Err(Error::invalid(format!(
                "interval bounds must be non-negative, got [{start_s}, {end_s}]"
            )));
        }
        if start_s > end_s {
            return Err(Error::invalid(format!(
                "interval start exceeds end: [{start_s}, {end_s}]"
            )));
        }
        Ok(Self { start_s, end_s })
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    pub fn end_s(&self) -> f64 {
        self.end_s
    }

    pub fn length(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn contains(&self, t_s: f64) -> bool {
        self.start_s <= t_s && t_s <= self.end_s
    }

    /// Length of the overlap with `other`, zero when disjoint.
    pub fn intersection_len(&self, other: &TimeInterval) -> f64 {
        (self.end_s.min(other.end_s) - self.start_s.max(other.start_s)).max(0.0)
    }

    /// Clamp both ends into `[0, duration_s]`. Returns the clamped interval and
    /// whether anything moved.
    pub fn clamp_to(&self, duration_s: f64) -> (TimeInterval, bool) {
        let start_s = self.start_s.clamp(0.0, duration_s);
        let end_s = self.end_s.clamp(0.0, duration_s);
        let changed = start_s != self.start_s || end_s != self.end_s;
        (TimeInterval { start_s, end_s }, changed)
    }

    /// Shift by `offset_s`; the result must stay non-negative.
    pub fn shifted(&self, offset_s: f64) -> Result<TimeInterval> {
        TimeInterval::new(self.start_s + offset_s, self.end_s + offset_s)
    }
}

impl TryFrom<[f64; 2]> for TimeInterval {
    type Error = Error;

    fn try_from([start_s, end_s]: [f64; 2]) -> Result<Self> {
        TimeInterval::new(start_s, end_s)
    }
}

impl From<TimeInterval> for [f64; 2] {
    fn from(iv: TimeInterval) -> Self {
        [iv.start_s, iv.end_s]
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start_s, self.end_s)
    }
}

/// Temporal intersection over union.
///
/// When the union has zero length both intervals are points: identical points
/// score 1, distinct points 0.
pub fn interval_iou(a: &TimeInterval, b: &TimeInterval) -> f64 {
    let inter = a.intersection_len(b);
    let union = a.length() + b.length() - inter;
    if union <= 0.0 {
        return if a.start_s == b.start_s { 1.0 } else { 0.0 };
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Intersection over the predicted interval's own length.
///
/// A zero-length prediction scores 1 when its point lies inside `gt`.
pub fn interval_iop(pred: &TimeInterval, gt: &TimeInterval) -> f64 {
    let len = pred.length();
    if len <= 0.0 {
        return if gt.contains(pred.start_s) { 1.0 } else { 0.0 };
    }
    (pred.intersection_len(gt) / len).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    MomentRetrieval,
    GroundedQa,
}

/// One benchmark query with its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSample {
    pub video_id: String,
    pub duration_s: f64,
    pub query: String,
    pub gt_windows: Vec<TimeInterval>,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa_options: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa_answer_index: Option<usize>,
}

impl AnnotationSample {
    pub fn moment_retrieval(
        video_id: impl Into<String>,
        duration_s: f64,
        query: impl Into<String>,
        gt_windows: Vec<TimeInterval>,
    ) -> Result<Self> {
        let sample = Self {
            video_id: video_id.into(),
            duration_s,
            query: query.into(),
            gt_windows,
            task: Task::MomentRetrieval,
            qa_options: None,
            qa_answer_index: None,
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn grounded_qa(
        video_id: impl Into<String>,
        duration_s: f64,
        question: impl Into<String>,
        gt_windows: Vec<TimeInterval>,
        options: Vec<String>,
        answer_index: usize,
    ) -> Result<Self> {
        let sample = Self {
            video_id: video_id.into(),
            duration_s,
            query: question.into(),
            gt_windows,
            task: Task::GroundedQa,
            qa_options: Some(options),
            qa_answer_index: Some(answer_index),
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::invalid(format!(
                "video `{}`: duration must be positive, got {}",
                self.video_id, self.duration_s
            )));
        }
        if self.gt_windows.is_empty() {
            return Err(Error::invalid(format!(
                "video `{}`: sample has no ground-truth windows",
                self.video_id
            )));
        }
        if let Some(w) = self
            .gt_windows
            .iter()
            .find(|w| w.end_s() > self.duration_s)
        {
            return Err(Error::invalid(format!(
                "video `{}`: window {w} exceeds duration {}",
                self.video_id, self.duration_s
            )));
        }
        if self.task == Task::GroundedQa {
            let n = self.qa_options.as_ref().map_or(0, Vec::len);
            if n == 0 {
                return Err(Error::invalid(format!(
                    "video `{}`: grounded QA sample without options",
                    self.video_id
                )));
            }
            match self.qa_answer_index {
                Some(i) if i < n => {}
                other => {
                    return Err(Error::invalid(format!(
                        "video `{}`: answer index {other:?} invalid for {n} options",
                        self.video_id
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn num_options(&self) -> usize {
        self.qa_options.as_ref().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Clean,
    Repaired,
    Failed,
}

impl ParseStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ParseStatus::Clean => "clean",
            ParseStatus::Repaired => "repaired",
            ParseStatus::Failed => "failed",
        }
    }
}

impl fmt::Display for ParseStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A parsed model completion. Window order is rank order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub windows: Vec<TimeInterval>,
    pub answer_index: Option<usize>,
    pub raw_text: String,
    pub parse_status: ParseStatus,
}

impl Prediction {
    pub fn from_windows(windows: Vec<TimeInterval>) -> Self {
        let parse_status = if windows.is_empty() {
            ParseStatus::Failed
        } else {
            ParseStatus::Clean
        };
        Self {
            windows,
            answer_index: None,
            raw_text: String::new(),
            parse_status,
        }
    }

    pub fn top1(&self) -> Option<&TimeInterval> {
        self.windows.first()
    }
}
