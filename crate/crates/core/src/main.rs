//! `vtg`: command-line front door to the harness.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use vtg_harness::blueprint::TimestampStyle;
use vtg_harness::client::mock::{MockScript, MockServer};
use vtg_harness::config::load_config;
use vtg_harness::runner::{
    export_training_sequences, load_samples, rescore, run_ablation, run_experiment, AblationMatrix,
};
use vtg_harness::{Error, Result};

#[derive(Parser)]
#[command(name = "vtg", version, about = "Temporal grounding evaluation with chat-style vision models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// `dotted.key=value` overrides, applied in order.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and print its summary.
    Eval(ConfigArgs),
    /// Run an ablation matrix and print the combined table.
    Ablate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// `table-a` (duration/timestamp toggles) or `table-b` (timestamp design).
        #[arg(long, default_value = "table-b")]
        matrix: String,
    },
    /// Write fine-tuning sequences for a train split.
    ExportTrain(ConfigArgs),
    /// Re-parse and re-score stored completions without touching the network.
    Rescore {
        /// `raw/` directory of a previous run.
        #[arg(long)]
        raw_dir: PathBuf,
        /// Configuration; defaults to the run's `config.toml` snapshot.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Timestamp style used to interpret the completions, e.g. `abs-int`.
        #[arg(long)]
        style: Option<String>,
        /// Where to write the new reports; defaults to `<run>/rescore`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Serve the bundled mock chat-completions endpoint until killed.
    MockServe {
        #[arg(long, default_value = "127.0.0.1:8089")]
        addr: String,
        /// Canned-response script (TOML or JSON).
        #[arg(long, conflicts_with = "echo_config")]
        script: Option<PathBuf>,
        /// Answer with the ground truth of this experiment's dataset.
        #[arg(long)]
        echo_config: Option<PathBuf>,
        /// With `--echo-config`: answer with windows disjoint from the ground truth.
        #[arg(long, requires = "echo_config")]
        disjoint: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval(args) => {
            let cfg = load_config(&args.config, &args.overrides)?;
            let result = run_experiment(&cfg)?;
            print!("{}", result.report.to_text());
            info!("outputs in {}", cfg.output_dir.display());
        }
        Command::Ablate { cfg, matrix } => {
            let base = load_config(&cfg.config, &cfg.overrides)?;
            let matrix = AblationMatrix::named(&matrix, base.style)?;
            let table = run_ablation(&base, &matrix)?;
            print!("{}", table.to_text());
        }
        Command::ExportTrain(args) => {
            let cfg = load_config(&args.config, &args.overrides)?;
            let path = export_training_sequences(&cfg)?;
            println!("{}", path.display());
        }
        Command::Rescore {
            raw_dir,
            config,
            style,
            out,
            mut overrides,
        } => {
            let run_dir = raw_dir.parent().map(PathBuf::from).unwrap_or_default();
            let config = config.unwrap_or_else(|| run_dir.join("config.toml"));
            if let Some(code) = style.map(|c| c.to_ascii_lowercase()) {
                let s: TimestampStyle = code.parse()?;
                let (rep, prec) = code.split_once('-').expect("validated style code");
                let rep = if rep == "abs" { "absolute" } else { "relative" };
                let prec = if prec == "int" { "integer" } else { "decimal" };
                debug_assert_eq!(s.code(), code);
                overrides.push(format!("style.representation={rep}"));
                overrides.push(format!("style.precision={prec}"));
            }
            let out = out.unwrap_or_else(|| run_dir.join("rescore"));
            overrides.push(format!("output_dir={:?}", out.display().to_string()));
            let cfg = load_config(&config, &overrides)?;
            let result = rescore(&cfg, &raw_dir)?;
            print!("{}", result.report.to_text());
        }
        Command::MockServe {
            addr,
            script,
            echo_config,
            disjoint,
        } => {
            let script = match (script, echo_config) {
                (Some(path), _) => MockScript::load(&path)?,
                (None, Some(path)) => {
                    let cfg = load_config(&path, &[])?;
                    let samples = load_samples(&cfg)?;
                    if disjoint {
                        MockScript::disjoint_from_ground_truth(&samples, &cfg.style)?
                    } else {
                        MockScript::echo_ground_truth(&samples, &cfg.style)?
                    }
                }
                (None, None) => {
                    return Err(Error::Config("mock-serve needs --script or --echo-config".into()))
                }
            };
            let server = MockServer::bind(&addr, script)?;
            eprintln!("mock endpoint listening on {}", server.url());
            server.join();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
