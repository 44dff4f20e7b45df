//! Full pipeline on a synthetic dataset against a mock endpoint that echoes
//! the ground truth (or, with `disjoint`, answers away from it).
//!
//!     cargo run --example echo_experiment -- [out_dir] [disjoint]

use std::path::PathBuf;

use vtg_harness::client::mock::{MockScript, MockServer};
use vtg_harness::client::ClientConfig;
use vtg_harness::datasets::Split;
use vtg_harness::runner::{run_experiment, ExperimentConfig, SamplingPlan};
use vtg_harness::synthetic::write_toy_dataset;
use vtg_harness::Task;

fn main() -> vtg_harness::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let root = args.next().map_or_else(|| std::env::temp_dir().join("vtg-echo"), PathBuf::from);
    let disjoint = args.next().as_deref() == Some("disjoint");

    let toy = write_toy_dataset(&root.join("data"), 20, Task::MomentRetrieval, Split::Val, 1)?;
    let cfg = ExperimentConfig {
        sample_limit: None,
        output_dir: root.join("run"),
        dataset: toy.descriptor,
        sampling: SamplingPlan::fixed(20),
        style: Default::default(),
        template: Default::default(),
        client: ClientConfig { cache_dir: Some(root.join("cache")), ..ClientConfig::default() },
        metrics: Default::default(),
        parse: Default::default(),
    };
    let script = if disjoint {
        MockScript::disjoint_from_ground_truth(&toy.samples, &cfg.style)?
    } else {
        MockScript::echo_ground_truth(&toy.samples, &cfg.style)?
    };
    let server = MockServer::start(script)?;
    let cfg = ExperimentConfig {
        client: ClientConfig { endpoint_url: server.url(), ..cfg.client },
        ..cfg
    };

    let result = run_experiment(&cfg)?;
    print!("{}", result.report.to_text());
    println!("{} HTTP requests; outputs in {}", server.request_count(), cfg.output_dir.display());
    std::fs::write(root.join("exp.toml"), cfg.to_toml()?).map_err(|e| vtg_harness::Error::io(root.join("exp.toml"), e))?;
    Ok(())
}
