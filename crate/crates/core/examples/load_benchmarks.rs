//! Load an annotation file in any supported format and summarise it.
//!
//!     cargo run --example load_benchmarks -- <format> <annotation_path> [aux_path]
//!
//! Formats: canonical, charades-sta, qvhighlights, activitynet, next-gqa.
//! Without arguments a tiny Charades-STA style file is written and loaded.

use std::path::PathBuf;

use vtg_harness::datasets::{load_annotations, AnnotationFormat, DatasetDescriptor, FrameSource, Split};
use vtg_harness::runner::default_num_frames;
use vtg_harness::Task;

fn main() -> vtg_harness::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (format, path, aux) = if args.len() >= 2 {
        (args[0].clone(), PathBuf::from(&args[1]), args.get(2).map(PathBuf::from))
    } else {
        let dir = std::env::temp_dir().join("vtg-load-demo");
        std::fs::create_dir_all(&dir).map_err(|e| vtg_harness::Error::io(&dir, e))?;
        let ann = dir.join("charades_sta_test.txt");
        let dur = dir.join("durations.csv");
        std::fs::write(&ann, "3MSZA 24.3 30.4##person turn a light on.\n3MSZA 0.0 8.0##a person is holding a book.\n")
            .map_err(|e| vtg_harness::Error::io(&ann, e))?;
        std::fs::write(&dur, "3MSZA,31.0\n").map_err(|e| vtg_harness::Error::io(&dur, e))?;
        ("charades-sta".to_string(), ann, Some(dur))
    };
    let format: AnnotationFormat = serde_json::from_value(serde_json::Value::String(format))?;
    let task = if format == AnnotationFormat::NextGqa { Task::GroundedQa } else { Task::MomentRetrieval };
    let desc = DatasetDescriptor {
        name: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        annotation_path: path,
        format,
        aux_path: aux,
        frames: FrameSource::Manifest { root: "frames".into() },
        split: Split::Test,
        task,
    };
    let loaded = load_annotations(&desc)?;
    let n = loaded.samples.len();
    let mean = loaded.samples.iter().map(|s| s.duration_s).sum::<f64>() / n as f64;
    println!("{n} samples ({} skipped, {} clamped)", loaded.skipped, loaded.clamped);
    println!("mean duration {mean:.1}s, default frame count {}", default_num_frames(&loaded.samples));
    for s in loaded.samples.iter().take(5) {
        let ws: Vec<String> = s.gt_windows.iter().map(ToString::to_string).collect();
        println!("  {} [{:.1}s] {:?} -> {}", s.video_id, s.duration_s, s.query, ws.join(" "));
    }
    Ok(())
}
