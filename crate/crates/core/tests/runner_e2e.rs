mod common;

use std::fs;
use std::path::Path;

use vtg_harness::blueprint::TimestampStyle;
use vtg_harness::client::mock::{MockScript, MockServer};
use vtg_harness::client::ChatClient;
use vtg_harness::datasets::Split;
use vtg_harness::parsing::parse_prediction;
use vtg_harness::runner::{export_training_sequences, TrainingRecord};
use vtg_harness::runner::{
    raw_file_name, rescore, run_ablation_with, run_experiment, run_experiment_with, AblationMatrix, AblationRow,
};
use vtg_harness::synthetic::toy_samples;
use vtg_harness::{AnnotationSample, Task, TimeInterval};

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn echo_server_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let samples = toy_samples(20, Task::MomentRetrieval, 1).unwrap();
    let server = MockServer::start(MockScript::echo_ground_truth(&samples, &TimestampStyle::default()).unwrap()).unwrap();
    let cfg = common::experiment(dir.path(), &samples, Split::Val, server.url());
    let result = run_experiment(&cfg).unwrap();
    let r = &result.report;
    assert_eq!(r.r1(0.5), Some(100.0));
    assert_eq!(r.r1(0.7), Some(100.0));
    assert_eq!(r.miou, 100.0);
    assert_eq!(r.map_avg, 100.0);
    assert_eq!(r.n_samples, 20);
    assert_eq!(r.n_runs, 2);
    assert_eq!(r.n_failed_parses, 0);
    assert_eq!(server.request_count(), 40);
    for f in ["config.toml", "report.json", "report.txt", "report.csv", "per_sample.csv"] {
        assert!(cfg.output_dir.join(f).is_file(), "{f}");
    }
    assert!(cfg.output_dir.join("raw").join(raw_file_name(19, 1)).is_file());
}

#[test]
fn disjoint_server_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let samples = toy_samples(20, Task::MomentRetrieval, 2).unwrap();
    let script = MockScript::disjoint_from_ground_truth(&samples, &TimestampStyle::default()).unwrap();
    let server = MockServer::start(script).unwrap();
    let cfg = common::experiment(dir.path(), &samples, Split::Val, server.url());
    let r = run_experiment(&cfg).unwrap().report;
    assert_eq!(r.r1(0.5), Some(0.0));
    assert_eq!(r.miou, 0.0);
    assert_eq!(r.map_avg, 0.0);
}

#[test]
fn warm_cache_reproduces_reports_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let samples = toy_samples(6, Task::MomentRetrieval, 3).unwrap();
    let server = MockServer::start(MockScript::echo_ground_truth(&samples, &TimestampStyle::default()).unwrap()).unwrap();
    let mut cfg = common::experiment(dir.path(), &samples, Split::Val, server.url());
    cfg.client.num_runs = 3;
    let cold = ChatClient::new(cfg.client.clone()).unwrap();
    run_experiment_with(&cfg, &cold).unwrap();
    assert_eq!(cold.network_requests(), 18);
    let first = read(&cfg.output_dir.join("report.json"));
    let first_csv = read(&cfg.output_dir.join("per_sample.csv"));

    let warm = ChatClient::new(cfg.client.clone()).unwrap();
    run_experiment_with(&cfg, &warm).unwrap();
    assert_eq!(warm.network_requests(), 0);
    assert_eq!(read(&cfg.output_dir.join("report.json")), first);
    assert_eq!(read(&cfg.output_dir.join("per_sample.csv")), first_csv);
    assert_eq!(server.request_count(), 18);
}

#[test]
fn rescore_matches_the_live_run() {
    let dir = tempfile::tempdir().unwrap();
    let samples = toy_samples(8, Task::MomentRetrieval, 4).unwrap();
    // mix echo answers with a fixed, partly wrong default
    let mut script = MockScript::echo_ground_truth(&samples[..4], &TimestampStyle::default()).unwrap();
    script.default_response = "I think ANSWER: [5, 12]".into();
    let server = MockServer::start(script).unwrap();
    let cfg = common::experiment(dir.path(), &samples, Split::Val, server.url());
    let live = run_experiment(&cfg).unwrap();

    let mut again = cfg.clone();
    again.output_dir = dir.path().join("rescored");
    let re = rescore(&again, &cfg.output_dir.join("raw")).unwrap();
    assert_eq!(re.report, live.report);
    for f in ["report.json", "report.txt", "report.csv", "per_sample.csv"] {
        assert_eq!(read(&again.output_dir.join(f)), read(&cfg.output_dir.join(f)), "{f}");
    }
}

#[test]
fn raw_completions_reparse_to_logged_windows() {
    let dir = tempfile::tempdir().unwrap();
    let samples = toy_samples(5, Task::MomentRetrieval, 5).unwrap();
    let mut script = MockScript::echo_ground_truth(&samples[..3], &TimestampStyle::default()).unwrap();
    script.default_response = "```\n[[1, 2], [1, 2]]\n```".into();
    let server = MockServer::start(script).unwrap();
    let cfg = common::experiment(dir.path(), &samples, Split::Val, server.url());
    run_experiment(&cfg).unwrap();

    let mut reader = csv::Reader::from_path(cfg.output_dir.join("per_sample.csv")).unwrap();
    let mut rows = 0;
    for row in reader.records() {
        let row = row.unwrap();
        let (i, r): (usize, usize) = (row[0].parse().unwrap(), row[1].parse().unwrap());
        let raw = read(&cfg.output_dir.join("raw").join(raw_file_name(i, r)));
        let pred = parse_prediction(&raw, &cfg.parse_config(&samples[i]));
        assert_eq!(serde_json::to_string(&pred.windows).unwrap(), &row[5]);
        assert_eq!(pred.parse_status.as_str(), &row[4]);
        rows += 1;
    }
    assert_eq!(rows, 10);
}

#[test]
fn sample_limit_truncates() {
    let dir = tempfile::tempdir().unwrap();
    let samples = toy_samples(10, Task::MomentRetrieval, 6).unwrap();
    let server = MockServer::start(MockScript::fixed("[[0, 1]]")).unwrap();
    let mut cfg = common::experiment(dir.path(), &samples, Split::Val, server.url());
    cfg.sample_limit = Some(3);
    cfg.client.num_runs = 1;
    let r = run_experiment(&cfg).unwrap().report;
    assert_eq!(r.n_samples, 3);
    assert_eq!(server.request_count(), 3);
}

#[test]
fn jittered_sampling_is_rejected_for_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let samples = toy_samples(2, Task::MomentRetrieval, 6).unwrap();
    let mut cfg = common::experiment(dir.path(), &samples, Split::Val, "http://127.0.0.1:9".into());
    cfg.sampling.mode = vtg_harness::sampling::SamplingMode::JitteredRandom;
    assert!(run_experiment(&cfg).unwrap_err().is_config());
}

#[test]
fn grounded_qa_run_reports_accuracies() {
    let dir = tempfile::tempdir().unwrap();
    let samples = toy_samples(10, Task::GroundedQa, 8).unwrap();
    let server = MockServer::start(MockScript::echo_ground_truth(&samples, &TimestampStyle::default()).unwrap()).unwrap();
    let cfg = common::experiment(dir.path(), &samples, Split::Val, server.url());
    let r = run_experiment(&cfg).unwrap().report;
    assert_eq!(r.a_qa, Some(100.0));
    assert_eq!(r.a_gqa, Some(100.0));
    assert_eq!(r.miop, 100.0);
}

#[test]
fn single_row_ablation_equals_plain_run() {
    let dir = tempfile::tempdir().unwrap();
    let samples = toy_samples(6, Task::MomentRetrieval, 9).unwrap();
    let server = MockServer::start(MockScript::echo_ground_truth(&samples, &TimestampStyle::default()).unwrap()).unwrap();
    let cfg = common::experiment(dir.path(), &samples, Split::Val, server.url());
    let client = ChatClient::new(cfg.client.clone()).unwrap();
    let plain = run_experiment_with(&cfg, &client).unwrap();
    let matrix = AblationMatrix::new(vec![AblationRow { label: "only".into(), style: cfg.style }]).unwrap();
    let table = run_ablation_with(&cfg, &matrix, &client).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].1.as_ref().unwrap(), &plain.report);
    assert!(cfg.output_dir.join("rows/only/report.json").is_file());
    assert!(cfg.output_dir.join("ablation.csv").is_file());
    // second pass was served from the shared cache
    assert_eq!(client.network_requests(), 12);
}

#[test]
fn empty_matrix_writes_header_only_table() {
    let dir = tempfile::tempdir().unwrap();
    let samples = toy_samples(2, Task::MomentRetrieval, 10).unwrap();
    let cfg = common::experiment(dir.path(), &samples, Split::Val, "http://127.0.0.1:9".into());
    let client = ChatClient::new(cfg.client.clone()).unwrap();
    let table = run_ablation_with(&cfg, &AblationMatrix::new(vec![]).unwrap(), &client).unwrap();
    assert!(table.rows.is_empty());
    assert_eq!(read(&cfg.output_dir.join("ablation.csv")).lines().count(), 1);
    assert_eq!(client.network_requests(), 0);
}

#[test]
fn timestamp_design_table_has_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let samples = toy_samples(4, Task::MomentRetrieval, 11).unwrap();
    let server = MockServer::start(MockScript::echo_ground_truth(&samples, &TimestampStyle::default()).unwrap()).unwrap();
    let mut cfg = common::experiment(dir.path(), &samples, Split::Val, server.url());
    cfg.client.num_runs = 1;
    let client = ChatClient::new(cfg.client.clone()).unwrap();
    let table = run_ablation_with(&cfg, &AblationMatrix::timestamp_design(), &client).unwrap();
    assert_eq!(table.rows.len(), 6);
    assert!(table.rows.iter().all(|(_, r)| r.is_ok()));
    assert_eq!(read(&cfg.output_dir.join("ablation.csv")).lines().count(), 7);
}

fn mr(vid: &str, d: f64, ws: &[(f64, f64)]) -> AnnotationSample {
    let ws = ws.iter().map(|&(a, b)| TimeInterval::new(a, b).unwrap()).collect();
    AnnotationSample::moment_retrieval(vid, d, format!("query for {vid}"), ws).unwrap()
}

#[test]
fn export_writes_one_record_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let samples = vec![
        mr("a", 30.0, &[(3.0, 9.0)]),
        mr("b", 40.0, &[(12.0, 26.0)]),
        mr("c", 60.0, &[(40.0, 50.0), (5.0, 10.0)]),
    ];
    let mut cfg = common::experiment(dir.path(), &samples, Split::Train, "http://127.0.0.1:9".into());
    cfg.sampling.mode = vtg_harness::sampling::SamplingMode::JitteredRandom;
    cfg.sampling.seed = Some(42);
    let path = export_training_sequences(&cfg).unwrap();
    let records: Vec<TrainingRecord> = read(&path).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let targets: Vec<&str> = records.iter().map(|r| r.target.as_str()).collect();
    assert_eq!(targets, ["[[3, 9]]", "[[12, 26]]", "[[5, 10], [40, 50]]"]);
    for r in &records {
        assert_eq!(r.timestamps.len(), 8);
        assert_eq!(r.frames.len(), 8);
        let step = r.duration_s / 8.0;
        for (i, t) in r.timestamps.iter().enumerate() {
            assert!(*t > i as f64 * step && *t < (i + 1) as f64 * step);
        }
    }
    // same seed, same file
    let first = read(&path);
    export_training_sequences(&cfg).unwrap();
    assert_eq!(read(&path), first);
}

#[test]
fn export_refuses_non_training_split() {
    let dir = tempfile::tempdir().unwrap();
    let samples = vec![mr("a", 30.0, &[(3.0, 9.0)])];
    let cfg = common::experiment(dir.path(), &samples, Split::Val, "http://127.0.0.1:9".into());
    assert!(export_training_sequences(&cfg).unwrap_err().is_config());
}
