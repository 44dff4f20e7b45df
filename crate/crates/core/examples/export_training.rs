//! Write fine-tuning sequences with jittered frame sampling and print the
//! first record.
//!
//!     cargo run --example export_training -- [out_dir]

use std::path::PathBuf;

use vtg_harness::blueprint::TimestampStyle;
use vtg_harness::datasets::Split;
use vtg_harness::runner::{export_training_sequences, ExperimentConfig, SamplingPlan, TrainingRecord};
use vtg_harness::sampling::SamplingMode;
use vtg_harness::synthetic::write_toy_dataset;
use vtg_harness::Task;

fn main() -> vtg_harness::Result<()> {
    let root = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("vtg-export"), PathBuf::from);
    let toy = write_toy_dataset(&root.join("data"), 5, Task::MomentRetrieval, Split::Train, 9)?;
    let cfg = ExperimentConfig {
        sample_limit: None,
        output_dir: root.join("export"),
        dataset: toy.descriptor,
        sampling: SamplingPlan { mode: SamplingMode::JitteredRandom, seed: Some(1), ..SamplingPlan::fixed(6) },
        style: "rel-dec".parse::<TimestampStyle>()?,
        template: Default::default(),
        client: Default::default(),
        metrics: Default::default(),
        parse: Default::default(),
    };
    let path = export_training_sequences(&cfg)?;
    let text = std::fs::read_to_string(&path).map_err(|e| vtg_harness::Error::io(&path, e))?;
    let first: TrainingRecord = serde_json::from_str(text.lines().next().unwrap_or_default())?;
    println!("{} records in {}", text.lines().count(), path.display());
    println!("query: {}", first.query);
    println!("timestamps: {:?}", first.timestamps);
    println!("segments:");
    for s in &first.segments {
        println!("  {s:?}");
    }
    println!("target: {}", first.target);
    Ok(())
}
