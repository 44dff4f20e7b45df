//! Deterministic toy datasets for smoke tests, examples and mock runs.
//!
//! Writes a canonical annotation file plus one frame manifest per video. The
//! "frames" are small placeholder files with distinct contents; nothing
//! downstream decodes them.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datasets::{manifest_path, write_canonical, AnnotationFormat, DatasetDescriptor, FrameManifest, FrameSource, Split};
use crate::domain::{AnnotationSample, Task, TimeInterval};
use crate::error::{Error, Result};

const OPTIONS: [&str; 5] = ["to open it", "to clean it", "to paint it", "to close it", "to fix it"];

#[derive(Debug, Clone)]
pub struct ToyDataset {
    pub descriptor: DatasetDescriptor,
    pub samples: Vec<AnnotationSample>,
}

/// `n` samples with integer-second windows, one to three windows each.
///
/// Queries are unique (`"query <i>: ..."`), so the mock server's echo mode can
/// key on them. Frames are listed every `frame_step_s` seconds.
pub fn toy_samples(n: usize, task: Task, seed: u64) -> Result<Vec<AnnotationSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let duration = f64::from(rng.gen_range(20u32..=120));
            let n_windows = if task == Task::GroundedQa { 1 } else { rng.gen_range(1..=3) };
            let mut windows = Vec::with_capacity(n_windows);
            let slot = duration / n_windows as f64;
            for w in 0..n_windows {
                let lo = (w as f64 * slot).ceil();
                let hi = ((w + 1) as f64 * slot).floor();
                let start = f64::from(rng.gen_range(lo as u32..(hi as u32 - 1)));
                let end = f64::from(rng.gen_range(start as u32 + 1..=hi as u32));
                windows.push(TimeInterval::new(start, end)?);
            }
            let video_id = format!("toy{i:04}");
            let query = format!("query {i}: someone handles object {}", rng.gen_range(0..1000));
            match task {
                Task::MomentRetrieval => AnnotationSample::moment_retrieval(video_id, duration, query, windows),
                Task::GroundedQa => {
                    let k = rng.gen_range(3..=OPTIONS.len());
                    let answer = rng.gen_range(0..k);
                    AnnotationSample::grounded_qa(
                        video_id,
                        duration,
                        format!("why does the person touch the door in {query}"),
                        windows,
                        OPTIONS[..k].iter().map(|s| s.to_string()).collect(),
                        answer,
                    )
                }
            }
        })
        .collect()
}

/// Write `samples` and their frame manifests under `dir`.
pub fn write_dataset(
    dir: &Path,
    name: &str,
    samples: &[AnnotationSample],
    task: Task,
    split: Split,
    frame_step_s: f64,
) -> Result<DatasetDescriptor> {
    let frames_root = dir.join("frames");
    fs::create_dir_all(&frames_root).map_err(|e| Error::io(&frames_root, e))?;
    let mut written = std::collections::HashSet::new();
    for s in samples {
        if !written.insert(s.video_id.clone()) {
            continue;
        }
        let video_dir = frames_root.join(&s.video_id);
        fs::create_dir_all(&video_dir).map_err(|e| Error::io(&video_dir, e))?;
        let mut entries = Vec::new();
        let mut t = 0.0;
        while t <= s.duration_s {
            let file = PathBuf::from(&s.video_id).join(format!("{:07}.jpg", (t * 1000.0) as u64));
            let path = frames_root.join(&file);
            fs::write(&path, format!("frame {} @ {t}", s.video_id)).map_err(|e| Error::io(&path, e))?;
            entries.push((t, file));
            t += frame_step_s;
        }
        FrameManifest::new(s.video_id.clone(), s.duration_s, entries)?
            .write(&manifest_path(&frames_root, &s.video_id))?;
    }
    let annotation_path = dir.join(format!("{name}.jsonl"));
    write_canonical(&annotation_path, samples)?;
    Ok(DatasetDescriptor {
        name: name.to_string(),
        annotation_path,
        format: AnnotationFormat::Canonical,
        aux_path: None,
        frames: FrameSource::Manifest { root: frames_root },
        split,
        task,
    })
}

/// Generate and write a toy dataset in one go.
pub fn write_toy_dataset(dir: &Path, n: usize, task: Task, split: Split, seed: u64) -> Result<ToyDataset> {
    let samples = toy_samples(n, task, seed)?;
    let descriptor = write_dataset(dir, "toy", &samples, task, split, 2.0)?;
    Ok(ToyDataset { descriptor, samples })
}
