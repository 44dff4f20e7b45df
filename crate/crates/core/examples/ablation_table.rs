//! Run an ablation matrix (`table-a` or `table-b`) against the echo mock and
//! print the table.
//!
//!     cargo run --example ablation_table -- [table-a|table-b]

use vtg_harness::client::mock::{MockScript, MockServer};
use vtg_harness::client::ClientConfig;
use vtg_harness::datasets::Split;
use vtg_harness::runner::{run_ablation, AblationMatrix, ExperimentConfig, SamplingPlan};
use vtg_harness::synthetic::write_toy_dataset;
use vtg_harness::Task;

fn main() -> vtg_harness::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "table-b".into());
    let root = std::env::temp_dir().join(format!("vtg-ablation-{}", std::process::id()));
    let toy = write_toy_dataset(&root.join("data"), 12, Task::MomentRetrieval, Split::Val, 3)?;

    // The mock answers in integer seconds whatever the row's style, so
    // relative rows read those numbers as percentages and score lower.
    let server = MockServer::start(MockScript::echo_ground_truth(&toy.samples, &Default::default())?)?;
    let cfg = ExperimentConfig {
        sample_limit: None,
        output_dir: root.join("ablation"),
        dataset: toy.descriptor,
        sampling: SamplingPlan::fixed(10),
        style: Default::default(),
        template: Default::default(),
        client: ClientConfig { endpoint_url: server.url(), num_runs: 1, ..ClientConfig::default() },
        metrics: Default::default(),
        parse: Default::default(),
    };
    let matrix = AblationMatrix::named(&name, cfg.style)?;
    let table = run_ablation(&cfg, &matrix)?;
    print!("{}", table.to_text());
    std::fs::remove_dir_all(root).ok();
    Ok(())
}
