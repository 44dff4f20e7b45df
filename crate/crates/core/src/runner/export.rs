use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::blueprint::{build_sequence, render_windows, ImageRef, PromptItem};
use crate::datasets::{resolve_frames, Split};
use crate::error::{Error, Result};
use crate::sampling::sample_timestamps;

use super::{default_num_frames, load_samples, ExperimentConfig};

pub const TRAIN_FILE: &str = "train.jsonl";

/// One fine-tuning example: prompt text segments with `⟦IMG:n⟧` slots, the
/// frames filling those slots, and the target window list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub video_id: String,
    pub query: String,
    pub duration_s: f64,
    pub timestamps: Vec<f64>,
    pub frames: Vec<ImageRef>,
    pub segments: Vec<String>,
    pub target: String,
}

/// Write `<output_dir>/train.jsonl` and return its path.
pub fn export_training_sequences(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    if cfg.dataset.split != Split::Train {
        return Err(Error::Config(format!(
            "dataset `{}` is not a train split; refusing to export training sequences",
            cfg.dataset.name
        )));
    }
    let samples = load_samples(cfg)?;
    let default_frames = default_num_frames(&samples);
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let path = cfg.output_dir.join(TRAIN_FILE);
    let mut out = Vec::new();
    for (i, sample) in samples.iter().enumerate() {
        let sampling = cfg.sampling.for_sample(sample, i, default_frames);
        let timestamps = sample_timestamps(&sampling, sample.duration_s)?;
        let frames = resolve_frames(&cfg.dataset.frames, &sample.video_id, &timestamps)?;
        let seq = build_sequence(sample, &timestamps, &cfg.style, &cfg.template, &frames)?;
        debug_assert_eq!(
            seq.items.iter().filter(|i| matches!(i, PromptItem::Image { .. })).count(),
            frames.len()
        );
        let record = TrainingRecord {
            video_id: sample.video_id.clone(),
            query: sample.query.clone(),
            duration_s: sample.duration_s,
            timestamps,
            frames,
            segments: seq.segments(),
            target: render_windows(&cfg.style, &sample.gt_windows, sample.duration_s)?,
        };
        serde_json::to_writer(&mut out, &record)?;
        out.push(b'\n');
    }
    let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    file.write_all(&out).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
