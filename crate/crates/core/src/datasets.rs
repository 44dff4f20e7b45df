//! Benchmark annotation ingestion and frame lookup.
//!
//! Every benchmark is normalised into the canonical line-delimited JSON format
//! (one object per query):
//!
//! ```text
//! {"video_id": "v1", "duration": 30.0, "query": "person opens door", "windows": [[3, 9]]}
//! {"video_id": "v2", "duration": 42.0, "query": "why did the boy cry", "windows": [[1, 5]],
//!  "options": ["fell", "hungry"], "answer": 0}
//! ```
//!
//! Adapters read the public Charades-STA, QVHighlights, ActivityNet Captions and
//! NExT-GQA layouts. Frames come either from per-video manifests or from an
//! external provider command; nothing in here decodes video.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::blueprint::ImageRef;
use crate::domain::{AnnotationSample, Task, TimeInterval};
use crate::error::{Error, Result};

/// Environment variable that supplies or overrides the provider command template.
pub const FRAME_PROVIDER_ENV: &str = "VTG_FRAME_PROVIDER";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    #[default]
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnotationFormat {
    #[default]
    Canonical,
    /// `vid start end##query` lines; durations from `aux_path`.
    CharadesSta,
    /// JSONL with `vid`, `query`, `duration`, `relevant_windows`.
    Qvhighlights,
    /// JSON object keyed by video with `duration`, `timestamps`, `sentences`.
    Activitynet,
    /// NExT-QA CSV; grounding JSON (`duration`, `location`) from `aux_path`.
    NextGqa,
}

/// Where frame images come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FrameSource {
    /// Directory holding one `<video_id>.tsv` manifest per video.
    Manifest { root: PathBuf },
    /// External command run once per frame. Placeholders: `{video}` (video
    /// file path), `{video_id}`, `{timestamp}` (seconds) and `{output}`.
    Provider {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        command: Option<String>,
        /// Video path template with a `{video_id}` placeholder.
        video_path: String,
        output_dir: PathBuf,
        #[serde(default = "default_provider_parallelism")]
        parallelism: usize,
    },
}

fn default_provider_parallelism() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub name: String,
    pub annotation_path: PathBuf,
    #[serde(default)]
    pub format: AnnotationFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_path: Option<PathBuf>,
    pub frames: FrameSource,
    #[serde(default)]
    pub split: Split,
    pub task: Task,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedDataset {
    pub samples: Vec<AnnotationSample>,
    /// Records rejected as malformed.
    pub skipped: usize,
    /// Samples whose windows had to be clamped to the video.
    pub clamped: usize,
}

impl LoadedDataset {
    pub fn records_seen(&self) -> usize {
        self.samples.len() + self.skipped
    }
}

/// Raw record before validation, shared by all adapters.
struct RawRecord {
    video_id: String,
    duration: f64,
    query: String,
    windows: Vec<(f64, f64)>,
    options: Option<Vec<String>>,
    answer: Option<usize>,
}

#[derive(Deserialize)]
struct CanonicalRecord {
    #[serde(alias = "vid")]
    video_id: String,
    duration: f64,
    #[serde(alias = "question")]
    query: String,
    #[serde(default)]
    windows: Vec<(f64, f64)>,
    #[serde(default)]
    window: Option<(f64, f64)>,
    #[serde(default)]
    options: Option<Vec<String>>,
    #[serde(default)]
    answer: Option<usize>,
}

/// Serialisable canonical record, the inverse of the canonical reader.
#[derive(Serialize)]
struct CanonicalOut<'a> {
    video_id: &'a str,
    duration: f64,
    query: &'a str,
    windows: &'a [TimeInterval],
    #[serde(skip_serializing_if = "Option::is_none")]
    options: Option<&'a Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    answer: Option<usize>,
}

/// Write samples in the canonical line-delimited format.
pub fn write_canonical(path: &Path, samples: &[AnnotationSample]) -> Result<()> {
    let mut out = String::new();
    for s in samples {
        let rec = CanonicalOut {
            video_id: &s.video_id,
            duration: s.duration_s,
            query: &s.query,
            windows: &s.gt_windows,
            options: s.qa_options.as_ref(),
            answer: s.qa_answer_index,
        };
        out.push_str(&serde_json::to_string(&rec)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn annotation_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Annotation {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn canonical_records(text: &str) -> Vec<Option<RawRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let rec: CanonicalRecord = serde_json::from_str(line).ok()?;
            let mut windows = rec.windows;
            windows.extend(rec.window);
            Some(RawRecord {
                video_id: rec.video_id,
                duration: rec.duration,
                query: rec.query,
                windows,
                options: rec.options,
                answer: rec.answer,
            })
        })
        .collect()
}

fn load_durations(path: &Path) -> Result<HashMap<String, f64>> {
    let text = read_text(path)?;
    if let Ok(map) = serde_json::from_str::<HashMap<String, f64>>(&text) {
        return Ok(map);
    }
    let mut map = HashMap::new();
    for line in text.lines() {
        let mut parts = line.split(|c| c == ',' || c == '\t');
        if let (Some(id), Some(d)) = (parts.next(), parts.next()) {
            if let Ok(d) = d.trim().parse::<f64>() {
                map.insert(id.trim().to_string(), d);
            }
        }
    }
    Ok(map)
}

fn charades_records(text: &str, durations: &HashMap<String, f64>) -> Vec<Option<RawRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let (head, query) = line.split_once("##")?;
            let mut parts = head.split_whitespace();
            let vid = parts.next()?.to_string();
            let start: f64 = parts.next()?.parse().ok()?;
            let end: f64 = parts.next()?.parse().ok()?;
            let duration = *durations.get(&vid)?;
            Some(RawRecord {
                video_id: vid,
                duration,
                query: query.trim().to_string(),
                windows: vec![(start, end)],
                options: None,
                answer: None,
            })
        })
        .collect()
}

fn qvhighlights_records(text: &str) -> Vec<Option<RawRecord>> {
    #[derive(Deserialize)]
    struct Qvh {
        vid: String,
        query: String,
        duration: f64,
        #[serde(default)]
        relevant_windows: Vec<(f64, f64)>,
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let r: Qvh = serde_json::from_str(line).ok()?;
            Some(RawRecord {
                video_id: r.vid,
                duration: r.duration,
                query: r.query,
                windows: r.relevant_windows,
                options: None,
                answer: None,
            })
        })
        .collect()
}

fn activitynet_records(path: &Path, text: &str) -> Result<Vec<Option<RawRecord>>> {
    let root: serde_json::Map<String, Value> =
        serde_json::from_str(text).map_err(|e| annotation_err(path, e.to_string()))?;
    let mut keys: Vec<&String> = root.keys().collect();
    keys.sort();
    let mut out = Vec::new();
    for vid in keys {
        let entry = &root[vid];
        let duration = entry.get("duration").and_then(Value::as_f64);
        let stamps = entry.get("timestamps").and_then(Value::as_array);
        let sentences = entry.get("sentences").and_then(Value::as_array);
        let (Some(duration), Some(stamps), Some(sentences)) = (duration, stamps, sentences) else {
            out.push(None);
            continue;
        };
        for (i, sentence) in sentences.iter().enumerate() {
            let window = stamps.get(i).and_then(|w| {
                let w = w.as_array()?;
                Some((w.first()?.as_f64()?, w.get(1)?.as_f64()?))
            });
            out.push(match (sentence.as_str(), window) {
                (Some(q), Some(w)) => Some(RawRecord {
                    video_id: vid.clone(),
                    duration,
                    query: q.trim().to_string(),
                    windows: vec![w],
                    options: None,
                    answer: None,
                }),
                _ => None,
            });
        }
    }
    Ok(out)
}

fn nextgqa_records(path: &Path, grounding_path: &Path) -> Result<Vec<Option<RawRecord>>> {
    let grounding: serde_json::Map<String, Value> = serde_json::from_str(&read_text(grounding_path)?)
        .map_err(|e| annotation_err(grounding_path, e.to_string()))?;
    let mut reader = csv::Reader::from_path(path).map_err(|e| annotation_err(path, e.to_string()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(c_vid), Some(c_qid), Some(c_q), Some(c_ans)) =
        (col("video_id"), col("qid"), col("question"), col("answer"))
    else {
        return Err(annotation_err(path, "expected columns video_id, qid, question, answer"));
    };
    let c_opts: Vec<usize> = (0..5).filter_map(|i| col(&format!("a{i}"))).collect();

    let mut out = Vec::new();
    for row in reader.records() {
        let Ok(row) = row else {
            out.push(None);
            continue;
        };
        let rec = (|| {
            let vid = row.get(c_vid)?.to_string();
            let qid = row.get(c_qid)?.to_string();
            let g = grounding.get(&vid)?;
            let duration = g.get("duration")?.as_f64()?;
            let windows = g
                .get("location")?
                .get(&qid)?
                .as_array()?
                .iter()
                .filter_map(|w| {
                    let w = w.as_array()?;
                    Some((w.first()?.as_f64()?, w.get(1)?.as_f64()?))
                })
                .collect();
            let options: Vec<String> = c_opts
                .iter()
                .filter_map(|&c| row.get(c).map(str::to_string))
                .collect();
            Some(RawRecord {
                video_id: vid,
                duration,
                query: row.get(c_q)?.to_string(),
                windows,
                options: Some(options),
                answer: row.get(c_ans)?.trim().parse().ok(),
            })
        })();
        out.push(rec);
    }
    Ok(out)
}

/// Validate a raw record, clamping its windows into the video. Returns the
/// sample and whether clamping happened.
fn finish_record(raw: RawRecord, task: Task) -> Option<(AnnotationSample, bool)> {
    if !(raw.duration.is_finite() && raw.duration > 0.0) || raw.query.trim().is_empty() {
        return None;
    }
    let mut clamped = false;
    let mut windows = Vec::with_capacity(raw.windows.len());
    for (s, e) in raw.windows {
        if !(s.is_finite() && e.is_finite()) || s > e {
            return None;
        }
        if s >= raw.duration {
            warn!(
                "video `{}`: dropping window [{s}, {e}] beyond duration {}",
                raw.video_id, raw.duration
            );
            clamped = true;
            continue;
        }
        let (cs, ce) = (s.max(0.0), e.min(raw.duration));
        if cs != s || ce != e {
            warn!(
                "video `{}`: clamping window [{s}, {e}] to [{cs}, {ce}]",
                raw.video_id
            );
            clamped = true;
        }
        windows.push(TimeInterval::new(cs, ce).ok()?);
    }
    let sample = AnnotationSample {
        video_id: raw.video_id,
        duration_s: raw.duration,
        query: raw.query,
        gt_windows: windows,
        task,
        qa_options: if task == Task::GroundedQa { raw.options } else { None },
        qa_answer_index: if task == Task::GroundedQa { raw.answer } else { None },
    };
    sample.validate().ok()?;
    Some((sample, clamped))
}

pub fn load_annotations(desc: &DatasetDescriptor) -> Result<LoadedDataset> {
    let path = desc.annotation_path.as_path();
    let aux = || {
        desc.aux_path
            .as_deref()
            .ok_or_else(|| Error::Config(format!("dataset `{}`: format {:?} needs aux_path", desc.name, desc.format)))
    };
    let records = match desc.format {
        AnnotationFormat::Canonical => canonical_records(&read_text(path)?),
        AnnotationFormat::CharadesSta => charades_records(&read_text(path)?, &load_durations(aux()?)?),
        AnnotationFormat::Qvhighlights => qvhighlights_records(&read_text(path)?),
        AnnotationFormat::Activitynet => activitynet_records(path, &read_text(path)?)?,
        AnnotationFormat::NextGqa => nextgqa_records(path, aux()?)?,
    };

    let mut out = LoadedDataset::default();
    for rec in records {
        match rec.and_then(|r| finish_record(r, desc.task)) {
            Some((sample, clamped)) => {
                out.clamped += usize::from(clamped);
                out.samples.push(sample);
            }
            None => out.skipped += 1,
        }
    }
    if out.skipped > 0 {
        warn!("dataset `{}`: skipped {} malformed records", desc.name, out.skipped);
    }
    if out.samples.is_empty() {
        return Err(annotation_err(path, "no valid records"));
    }
    Ok(out)
}

/// Pre-extracted frames of one video.
///
/// File format: a `video_id<TAB>duration` header line followed by one
/// `timestamp<TAB>path` line per frame; relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameManifest {
    pub video_id: String,
    pub duration_s: f64,
    pub entries: Vec<(f64, PathBuf)>,
}

impl FrameManifest {
    pub fn new(video_id: impl Into<String>, duration_s: f64, entries: Vec<(f64, PathBuf)>) -> Result<Self> {
        let m = Self {
            video_id: video_id.into(),
            duration_s,
            entries,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::invalid(format!("manifest for `{}` has no frames", self.video_id)));
        }
        if self.entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::invalid(format!(
                "manifest for `{}`: timestamps not strictly ascending",
                self.video_id
            )));
        }
        if self
            .entries
            .iter()
            .any(|(t, _)| !(0.0..=self.duration_s).contains(t))
        {
            return Err(Error::invalid(format!(
                "manifest for `{}`: timestamp outside [0, {}]",
                self.video_id, self.duration_s
            )));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| annotation_err(path, "empty manifest"))?;
        let (vid, dur) = header
            .split_once('\t')
            .ok_or_else(|| annotation_err(path, "header must be `video_id<TAB>duration`"))?;
        let duration_s: f64 = dur
            .trim()
            .parse()
            .map_err(|_| annotation_err(path, format!("bad duration `{dur}`")))?;
        let mut entries = Vec::new();
        for line in lines {
            let (t, p) = line
                .split_once('\t')
                .ok_or_else(|| annotation_err(path, format!("bad frame line `{line}`")))?;
            let t: f64 = t
                .trim()
                .parse()
                .map_err(|_| annotation_err(path, format!("bad timestamp `{t}`")))?;
            let p = PathBuf::from(p.trim());
            entries.push((t, if p.is_absolute() { p } else { base.join(p) }));
        }
        FrameManifest::new(vid.trim(), duration_s, entries).map_err(|e| annotation_err(path, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = format!("{}\t{}\n", self.video_id, self.duration_s);
        for (t, p) in &self.entries {
            out.push_str(&format!("{t}\t{}\n", p.display()));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Index of the entry nearest to `t_s`; ties go to the earlier entry.
    pub fn nearest(&self, t_s: f64) -> usize {
        let idx = self.entries.partition_point(|(t, _)| *t < t_s);
        if idx == 0 {
            return 0;
        }
        if idx == self.entries.len() {
            return idx - 1;
        }
        let before = t_s - self.entries[idx - 1].0;
        let after = self.entries[idx].0 - t_s;
        if after < before {
            idx
        } else {
            idx - 1
        }
    }
}

pub fn manifest_path(root: &Path, video_id: &str) -> PathBuf {
    root.join(format!("{video_id}.tsv"))
}

fn fill_template(template: &str, video: &str, video_id: &str, t_s: f64, output: &Path) -> String {
    template
        .replace("{video_id}", video_id)
        .replace("{video}", video)
        .replace("{timestamp}", &format!("{t_s:.3}"))
        .replace("{output}", &output.display().to_string())
}

fn run_provider(command: &str, video: &str, video_id: &str, t_s: f64, output_dir: &Path) -> Result<ImageRef> {
    let provider_err = |message: String| Error::FrameProvider {
        video_id: video_id.to_string(),
        timestamp_s: t_s,
        message,
    };
    let dir = output_dir.join(video_id);
    let output = dir.join(format!("{:010}.jpg", (t_s * 1000.0).round() as u64));
    if output.exists() {
        return Ok(ImageRef::Path(output));
    }
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let cmd = fill_template(command, video, video_id, t_s, &output);
    let status = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .output()
        .map_err(|e| provider_err(format!("cannot spawn `{cmd}`: {e}")))?;
    if !status.status.success() {
        return Err(provider_err(format!(
            "`{cmd}` exited with {}: {}",
            status.status,
            String::from_utf8_lossy(&status.stderr).trim()
        )));
    }
    if !output.exists() {
        return Err(provider_err(format!("`{cmd}` did not write {}", output.display())));
    }
    Ok(ImageRef::Path(output))
}

/// Map requested timestamps to frame images, one per request and in order.
pub fn resolve_frames(source: &FrameSource, video_id: &str, timestamps: &[f64]) -> Result<Vec<ImageRef>> {
    match source {
        FrameSource::Manifest { root } => {
            let path = manifest_path(root, video_id);
            if !path.exists() {
                return Err(Error::MissingVideo {
                    video_id: video_id.to_string(),
                    message: format!("no manifest at {}", path.display()),
                });
            }
            let manifest = FrameManifest::read(&path)?;
            Ok(timestamps
                .iter()
                .map(|&t| ImageRef::Path(manifest.entries[manifest.nearest(t)].1.clone()))
                .collect())
        }
        FrameSource::Provider {
            command,
            video_path,
            output_dir,
            parallelism,
        } => {
            let command = std::env::var(FRAME_PROVIDER_ENV)
                .ok()
                .or_else(|| command.clone())
                .ok_or_else(|| {
                    Error::Config(format!("no frame provider command configured (set {FRAME_PROVIDER_ENV})"))
                })?;
            let video = video_path.replace("{video_id}", video_id);
            if !Path::new(&video).exists() {
                return Err(Error::MissingVideo {
                    video_id: video_id.to_string(),
                    message: format!("video file {video} not found"),
                });
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads((*parallelism).max(1))
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            pool.install(|| {
                timestamps
                    .par_iter()
                    .map(|&t| run_provider(&command, &video, video_id, t, output_dir))
                    .collect()
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(ts: &[f64]) -> FrameManifest {
        FrameManifest::new(
            "v",
            10.0,
            ts.iter().map(|&t| (t, PathBuf::from(format!("{t}.jpg")))).collect(),
        )
        .unwrap()
    }

    #[test]
    fn nearest_entry_and_ties() {
        let m = manifest(&[1.0, 3.0, 5.0]);
        assert_eq!(m.nearest(1.2), 0);
        assert_eq!(m.nearest(4.9), 2);
        assert_eq!(m.nearest(2.0), 0);
        assert_eq!(m.nearest(0.0), 0);
        assert_eq!(m.nearest(9.0), 2);
    }

    #[test]
    fn manifest_must_ascend() {
        assert!(FrameManifest::new("v", 10.0, vec![(3.0, "a".into()), (1.0, "b".into())]).is_err());
        assert!(FrameManifest::new("v", 10.0, vec![(11.0, "a".into())]).is_err());
    }

    fn raw(windows: Vec<(f64, f64)>) -> RawRecord {
        RawRecord {
            video_id: "v1".into(),
            duration: 30.0,
            query: "person opens door".into(),
            windows,
            options: None,
            answer: None,
        }
    }

    #[test]
    fn clamps_overlong_window() {
        let (s, clamped) = finish_record(raw(vec![(28.0, 35.0)]), Task::MomentRetrieval).unwrap();
        assert!(clamped);
        assert_eq!(s.gt_windows, vec![TimeInterval::new(28.0, 30.0).unwrap()]);
    }

    #[test]
    fn rejects_reversed_or_missing_windows() {
        assert!(finish_record(raw(vec![(9.0, 3.0)]), Task::MomentRetrieval).is_none());
        assert!(finish_record(raw(vec![]), Task::MomentRetrieval).is_none());
        assert!(finish_record(raw(vec![(31.0, 40.0)]), Task::MomentRetrieval).is_none());
    }

    #[test]
    fn gqa_record_needs_answer() {
        let mut r = raw(vec![(1.0, 2.0)]);
        r.options = Some(vec!["a".into(), "b".into()]);
        assert!(finish_record(r, Task::GroundedQa).is_none());
    }
}
