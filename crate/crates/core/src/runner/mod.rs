//! End-to-end experiments: dataset → frame sampling → prompt → model →
//! parser → metrics.
//!
//! Output directory layout:
//!
//! ```text
//! <output_dir>/
//!   config.toml      effective configuration
//!   report.json      averaged report plus one report per run
//!   report.txt       aligned summary of the averaged report
//!   report.csv       one row per run and a final `mean` row
//!   per_sample.csv   per-sample, per-run scores and parsed windows
//!   raw/             NNNNN_runR.txt, the unmodified completions
//! ```
//!
//! Metrics are computed per run and then averaged; completions from different
//! runs are never pooled.

mod ablation;
mod export;

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blueprint::{build_sequence, render_windows, PromptSequence, PromptTemplate, TimestampStyle};
use crate::client::{ChatClient, ClientConfig};
use crate::datasets::{load_annotations, resolve_frames, DatasetDescriptor};
use crate::domain::AnnotationSample;
use crate::error::{Error, Result};
use crate::metrics::{aggregate, score_sample, MetricsConfig, MetricsReport, SampleScore};
use crate::parsing::{parse_prediction, ParseConfig, DEFAULT_ANSWER_MARKER, DEFAULT_MAX_WINDOWS};
use crate::sampling::{sample_timestamps, SamplingConfig, SamplingMode};

pub use ablation::{run_ablation, run_ablation_with, AblationMatrix, AblationRow, AblationTable};
pub use export::{export_training_sequences, TrainingRecord, TRAIN_FILE};

pub const RAW_DIR: &str = "raw";

/// Frame count used when none is configured: 20 for short-video datasets
/// (mean duration up to 60 s), 60 otherwise.
pub fn default_num_frames(samples: &[AnnotationSample]) -> usize {
    if samples.is_empty() {
        return 20;
    }
    let mean = samples.iter().map(|s| s.duration_s).sum::<f64>() / samples.len() as f64;
    if mean <= 60.0 {
        20
    } else {
        60
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameRounding {
    #[default]
    Up,
    Down,
    Nearest,
}

/// How many frames to take per video and where.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingPlan {
    /// Fixed frame count. When absent and `fps` is absent too,
    /// [`default_num_frames`] decides.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_frames: Option<usize>,
    /// Per-video frame rate; `F = fps * duration`, rounded per `fps_rounding`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
    pub fps_rounding: FrameRounding,
    pub mode: SamplingMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SamplingPlan {
    pub fn fixed(num_frames: usize) -> Self {
        Self {
            num_frames: Some(num_frames),
            ..Self::default()
        }
    }

    /// Concrete sampling config for the `index`-th sample.
    pub fn for_sample(&self, sample: &AnnotationSample, index: usize, dataset_default: usize) -> SamplingConfig {
        let num_frames = match (self.num_frames, self.fps) {
            (Some(n), _) => n,
            (None, Some(fps)) => {
                let raw = fps * sample.duration_s;
                let n = match self.fps_rounding {
                    FrameRounding::Up => raw.ceil(),
                    FrameRounding::Down => raw.floor(),
                    FrameRounding::Nearest => raw.round(),
                };
                (n as usize).max(1)
            }
            (None, None) => dataset_default,
        };
        SamplingConfig {
            num_frames,
            mode: self.mode,
            seed: self.seed.map(|s| s.wrapping_add(index as u64)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParseOptions {
    pub answer_marker: String,
    pub max_windows: usize,
    pub take_first_only: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            answer_marker: DEFAULT_ANSWER_MARKER.into(),
            max_windows: DEFAULT_MAX_WINDOWS,
            take_first_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_limit: Option<usize>,
    pub output_dir: PathBuf,
    pub dataset: DatasetDescriptor,
    #[serde(default)]
    pub sampling: SamplingPlan,
    #[serde(default)]
    pub style: TimestampStyle,
    #[serde(default)]
    pub template: PromptTemplate,
    #[serde(default)]
    pub client: ClientConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub parse: ParseOptions,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.template.validate()?;
        self.client.validate()?;
        self.metrics.validate()?;
        if self.sampling.num_frames == Some(0) {
            return Err(Error::Config("sampling.num_frames must be at least 1".into()));
        }
        if let Some(fps) = self.sampling.fps {
            if !(fps.is_finite() && fps > 0.0) {
                return Err(Error::Config("sampling.fps must be positive".into()));
            }
        }
        if self.parse.max_windows == 0 {
            return Err(Error::Config("parse.max_windows must be at least 1".into()));
        }
        Ok(())
    }

    pub fn parse_config(&self, sample: &AnnotationSample) -> ParseConfig {
        ParseConfig {
            style: self.style,
            duration_s: sample.duration_s,
            answer_marker: self.parse.answer_marker.clone(),
            max_windows: self.parse.max_windows,
            num_options: sample.num_options(),
            take_first_only: self.parse.take_first_only,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialise config: {e}")))
    }
}

/// Load, validate and truncate the dataset named by `cfg`.
pub fn load_samples(cfg: &ExperimentConfig) -> Result<Vec<AnnotationSample>> {
    let mut samples = load_annotations(&cfg.dataset)?.samples;
    if let Some(limit) = cfg.sample_limit {
        samples.truncate(limit);
    }
    Ok(samples)
}

/// Prompt for every sample.
pub fn build_prompts(cfg: &ExperimentConfig, samples: &[AnnotationSample]) -> Result<Vec<PromptSequence>> {
    let default_frames = default_num_frames(samples);
    samples
        .iter()
        .enumerate()
        .map(|(i, sample)| {
            let sampling = cfg.sampling.for_sample(sample, i, default_frames);
            let timestamps = sample_timestamps(&sampling, sample.duration_s)?;
            let images = resolve_frames(&cfg.dataset.frames, &sample.video_id, &timestamps)?;
            build_sequence(sample, &timestamps, &cfg.style, &cfg.template, &images)
        })
        .collect()
}

/// One scored sample within one run.
#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub sample_index: usize,
    pub run_index: usize,
    pub windows: String,
    pub answer_index: Option<usize>,
    pub score: SampleScore,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub report: MetricsReport,
    pub run_reports: Vec<MetricsReport>,
    pub outcomes: Vec<SampleOutcome>,
}

/// Parse and score `completions[run][sample]`.
pub fn score_completions(
    cfg: &ExperimentConfig,
    samples: &[AnnotationSample],
    completions: &[Vec<String>],
) -> Result<ExperimentResult> {
    let mut run_reports = Vec::with_capacity(completions.len());
    let mut outcomes = Vec::new();
    for (run_index, run) in completions.iter().enumerate() {
        if run.len() != samples.len() {
            return Err(Error::invalid(format!(
                "run {run_index}: {} completions for {} samples",
                run.len(),
                samples.len()
            )));
        }
        let mut scores = Vec::with_capacity(samples.len());
        for (sample_index, (sample, raw)) in samples.iter().zip(run).enumerate() {
            let pred = parse_prediction(raw, &cfg.parse_config(sample));
            let score = score_sample(sample, &pred, &cfg.metrics)?;
            outcomes.push(SampleOutcome {
                sample_index,
                run_index,
                windows: serde_json::to_string(&pred.windows)?,
                answer_index: pred.answer_index,
                score: score.clone(),
            });
            scores.push(score);
        }
        run_reports.push(aggregate(&scores, &cfg.metrics)?);
    }
    let report = MetricsReport::average(&run_reports)?;
    Ok(ExperimentResult {
        report,
        run_reports,
        outcomes,
    })
}

pub fn raw_file_name(sample_index: usize, run_index: usize) -> String {
    format!("{sample_index:05}_run{run_index}.txt")
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Write report files, per-sample CSV and config snapshot into `dir`.
pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    samples: &[AnnotationSample],
    result: &ExperimentResult,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("config.toml"), cfg.to_toml()?)?;

    #[derive(Serialize)]
    struct ReportDoc<'a> {
        dataset: &'a str,
        style: String,
        report: &'a MetricsReport,
        runs: &'a [MetricsReport],
    }
    let doc = ReportDoc {
        dataset: &cfg.dataset.name,
        style: cfg.style.to_string(),
        report: &result.report,
        runs: &result.run_reports,
    };
    write_file(&dir.join("report.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    write_file(&dir.join("report.txt"), result.report.to_text())?;

    let mut csv = csv::Writer::from_path(dir.join("report.csv"))?;
    let header: Vec<String> = std::iter::once("run".to_string())
        .chain(result.report.csv_fields().into_iter().map(|(k, _)| k))
        .collect();
    csv.write_record(&header)?;
    let rows = result
        .run_reports
        .iter()
        .enumerate()
        .map(|(i, r)| (i.to_string(), r))
        .chain(std::iter::once(("mean".to_string(), &result.report)));
    for (label, r) in rows {
        let row: Vec<String> = std::iter::once(label)
            .chain(r.csv_fields().into_iter().map(|(_, v)| v))
            .collect();
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|e| Error::io(dir.join("report.csv"), e))?;

    let mut csv = csv::Writer::from_path(dir.join("per_sample.csv"))?;
    let mut header = vec!["sample", "run", "video_id", "query", "status", "windows", "answer"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    header.extend(cfg.metrics.recall_thresholds.iter().map(|t| format!("r1@{t}")));
    header.extend(["iou", "ap_avg", "iop", "answer_correct", "grounded_correct"].map(String::from));
    csv.write_record(&header)?;
    let n_map = cfg.metrics.map_thresholds.len() as f64;
    for o in &result.outcomes {
        let s = &samples[o.sample_index];
        let mut row = vec![
            o.sample_index.to_string(),
            o.run_index.to_string(),
            s.video_id.clone(),
            s.query.clone(),
            o.score.parse_status.to_string(),
            o.windows.clone(),
            o.answer_index.map(|a| a.to_string()).unwrap_or_default(),
        ];
        row.extend(o.score.r1_hits.iter().map(|h| u8::from(*h).to_string()));
        let ap_avg = o.score.ap[..cfg.metrics.map_thresholds.len()].iter().sum::<f64>() / n_map;
        row.push(o.score.iou.to_string());
        row.push(ap_avg.to_string());
        row.push(o.score.iop.to_string());
        let flag = |b: Option<bool>| b.map(|b| u8::from(b).to_string()).unwrap_or_default();
        row.push(flag(o.score.answer_correct));
        row.push(flag(o.score.grounded_correct));
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|e| Error::io(dir.join("per_sample.csv"), e))?;
    Ok(())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let client = ChatClient::new(cfg.client.clone())?;
    run_experiment_with(cfg, &client)
}

/// [`run_experiment`] with a caller-supplied client, so several experiments
/// can share one cache and request counter.
pub fn run_experiment_with(cfg: &ExperimentConfig, client: &ChatClient) -> Result<ExperimentResult> {
    cfg.validate()?;
    if cfg.sampling.mode != SamplingMode::Uniform {
        return Err(Error::Config(
            "evaluation runs require sampling.mode = \"uniform\"; jitter is for training export".into(),
        ));
    }
    let samples = load_samples(cfg)?;
    info!(
        "{}: {} samples, style {}, {} runs",
        cfg.dataset.name,
        samples.len(),
        cfg.style,
        cfg.client.num_runs
    );
    let prompts = build_prompts(cfg, &samples)?;

    let num_runs = cfg.client.num_runs;
    let jobs: Vec<(usize, usize)> = (0..num_runs)
        .flat_map(|r| (0..samples.len()).map(move |i| (r, i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(client.config().request_parallelism)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let flat: Vec<String> = pool.install(|| {
        jobs.par_iter()
            .map(|&(r, i)| client.complete(&prompts[i], r))
            .collect::<Result<Vec<_>>>()
    })?;
    let completions: Vec<Vec<String>> = flat.chunks(samples.len()).map(<[String]>::to_vec).collect();

    let raw_dir = cfg.output_dir.join(RAW_DIR);
    fs::create_dir_all(&raw_dir).map_err(|e| Error::io(&raw_dir, e))?;
    for (r, run) in completions.iter().enumerate() {
        for (i, text) in run.iter().enumerate() {
            write_file(&raw_dir.join(raw_file_name(i, r)), text)?;
        }
    }

    let result = score_completions(cfg, &samples, &completions)?;
    write_outputs(&cfg.output_dir, cfg, &samples, &result)?;
    info!(
        "{}: R1@0.5 {:.2}, mIoU {:.2}, {} failed parses",
        cfg.dataset.name,
        result.report.r1(0.5).unwrap_or(f64::NAN),
        result.report.miou,
        result.report.n_failed_parses
    );
    Ok(result)
}

/// Re-parse and re-score stored completions from `raw_dir`, writing the
/// usual outputs (without `raw/`) into `cfg.output_dir`. No network access.
pub fn rescore(cfg: &ExperimentConfig, raw_dir: &Path) -> Result<ExperimentResult> {
    cfg.validate()?;
    let samples = load_samples(cfg)?;
    let completions = (0..cfg.client.num_runs)
        .map(|r| {
            (0..samples.len())
                .map(|i| {
                    let path = raw_dir.join(raw_file_name(i, r));
                    fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let result = score_completions(cfg, &samples, &completions)?;
    write_outputs(&cfg.output_dir, cfg, &samples, &result)?;
    Ok(result)
}

/// Ground-truth target string for a sample in `style`.
pub fn target_string(sample: &AnnotationSample, style: &TimestampStyle) -> Result<String> {
    render_windows(style, &sample.gt_windows, sample.duration_s)
}
