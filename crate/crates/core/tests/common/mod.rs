#![allow(dead_code)]

pub mod corpus;
pub mod oracle;

use vtg_harness::blueprint::{build_sequence, ImageRef, PromptSequence, PromptTemplate, TimestampStyle};
use vtg_harness::sampling::{sample_timestamps, SamplingConfig};
use vtg_harness::{AnnotationSample, TimeInterval};

pub const TOY_QUERY: &str = "person opens door";

/// F=3, d=30 sample used by the golden prompt fixtures.
pub fn toy_sample() -> AnnotationSample {
    AnnotationSample::moment_retrieval("toy", 30.0, TOY_QUERY, vec![TimeInterval::new(3.0, 9.0).unwrap()]).unwrap()
}

pub fn toy_sequence(style: &TimestampStyle) -> PromptSequence {
    let sample = toy_sample();
    let ts = sample_timestamps(&SamplingConfig::uniform(3), sample.duration_s).unwrap();
    let images: Vec<ImageRef> = (0..3).map(|i| ImageRef::path(format!("frame{i}.jpg"))).collect();
    build_sequence(&sample, &ts, style, &PromptTemplate::default(), &images).unwrap()
}

/// The ten golden styles: six timestamp-design rows, then four component toggles.
pub fn golden_styles() -> Vec<(String, TimestampStyle)> {
    use vtg_harness::runner::AblationMatrix;
    let b = AblationMatrix::timestamp_design();
    let a = AblationMatrix::prompt_components(TimestampStyle::default());
    let mut out = Vec::new();
    for (i, row) in b.rows.iter().enumerate() {
        out.push((format!("table_b_{}", i + 1), row.style));
    }
    for (i, row) in a.rows.iter().enumerate() {
        out.push((format!("table_a_{}", i + 1), row.style));
    }
    out
}

/// Experiment over a toy dataset written under `dir`, pointed at `server_url`
/// with its cache in `dir/cache`.
pub fn experiment(
    dir: &std::path::Path,
    samples: &[AnnotationSample],
    split: vtg_harness::datasets::Split,
    server_url: String,
) -> vtg_harness::runner::ExperimentConfig {
    use vtg_harness::client::{ClientConfig, RetryPolicy};
    use vtg_harness::runner::{ExperimentConfig, SamplingPlan};
    let task = samples[0].task;
    let dataset = vtg_harness::synthetic::write_dataset(&dir.join("data"), "toy", samples, task, split, 2.0).unwrap();
    ExperimentConfig {
        sample_limit: None,
        output_dir: dir.join("out"),
        dataset,
        sampling: SamplingPlan::fixed(8),
        style: TimestampStyle::default(),
        template: PromptTemplate::default(),
        client: ClientConfig {
            endpoint_url: server_url,
            api_key_env: "VTG_TEST_UNSET_KEY".into(),
            retry: RetryPolicy { max_attempts: 2, backoff_ms: vec![1] },
            cache_dir: Some(dir.join("cache")),
            timeout_s: 10,
            ..ClientConfig::default()
        },
        metrics: Default::default(),
        parse: Default::default(),
    }
}
