//! TOML experiment configuration with `dotted.path=value` overrides.
//!
//! Unknown keys, whether in the file or in an override, are rejected with the
//! list of valid keys.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::blueprint::PromptTemplate;
use crate::client::ClientConfig;
use crate::datasets::{DatasetDescriptor, FrameSource};
use crate::domain::Task;
use crate::error::{Error, Result};
use crate::runner::{ExperimentConfig, SamplingPlan};

fn exemplar(frames: FrameSource) -> ExperimentConfig {
    ExperimentConfig {
        sample_limit: Some(1),
        output_dir: PathBuf::from("out"),
        dataset: DatasetDescriptor {
            name: String::new(),
            annotation_path: PathBuf::new(),
            format: Default::default(),
            aux_path: Some(PathBuf::new()),
            frames,
            split: Default::default(),
            task: Task::MomentRetrieval,
        },
        sampling: SamplingPlan {
            num_frames: Some(1),
            fps: Some(1.0),
            seed: Some(0),
            ..SamplingPlan::default()
        },
        style: Default::default(),
        template: PromptTemplate::zero_shot(),
        client: ClientConfig {
            cache_dir: Some(PathBuf::new()),
            ..ClientConfig::default()
        },
        metrics: Default::default(),
        parse: Default::default(),
    }
}

fn collect_paths(table: &Table, prefix: &str, out: &mut BTreeSet<String>) {
    for (k, v) in table {
        let path = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => collect_paths(t, &path, out),
            _ => {
                out.insert(path);
            }
        }
    }
}

/// Every settable leaf key, dotted.
pub fn valid_keys() -> BTreeSet<String> {
    let mut keys = BTreeSet::new();
    let variants = [
        FrameSource::Manifest { root: PathBuf::new() },
        FrameSource::Provider {
            command: Some(String::new()),
            video_path: String::new(),
            output_dir: PathBuf::new(),
            parallelism: 1,
        },
    ];
    for frames in variants {
        let value = Table::try_from(exemplar(frames)).expect("exemplar config serialises");
        collect_paths(&value, "", &mut keys);
    }
    keys
}

fn unknown_key_error(key: &str, valid: &BTreeSet<String>) -> Error {
    let listing: Vec<&str> = valid.iter().map(String::as_str).collect();
    Error::Config(format!("unknown key `{key}`; valid keys are:\n  {}", listing.join("\n  ")))
}

fn check_keys(table: &Table) -> Result<()> {
    let valid = valid_keys();
    let mut present = BTreeSet::new();
    collect_paths(table, "", &mut present);
    match present.iter().find(|k| !valid.contains(*k)) {
        Some(k) => Err(unknown_key_error(k, &valid)),
        None => Ok(()),
    }
}

/// Parse an override value as a TOML literal, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Apply one `a.b.c=value` override to `table`.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let valid = valid_keys();
    if !valid.contains(key) {
        return Err(unknown_key_error(key, &valid));
    }
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().expect("split yields at least one part");
    let mut cursor = table;
    for part in parts {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cursor = match entry {
            Value::Table(t) => t,
            _ => return Err(Error::Config(format!("`{part}` in `{key}` is not a table"))),
        };
    }
    cursor.insert(leaf.to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Build a config from TOML text plus overrides.
pub fn config_from_str(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    check_keys(&table)?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    config_from_str(&text, overrides).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blueprint::Placement;

    const BASE: &str = r#"
output_dir = "out"

[dataset]
name = "toy"
annotation_path = "toy.jsonl"
task = "moment-retrieval"
frames = { kind = "manifest", root = "frames" }
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = config_from_str(BASE, &[]).unwrap();
        assert_eq!(cfg.client.num_runs, 2);
        assert_eq!(cfg.client.temperature, 0.0);
        assert_eq!(cfg.style.placement, Placement::Interleaved);
        assert_eq!(cfg.metrics.recall_thresholds, vec![0.5, 0.7]);
    }

    #[test]
    fn overrides_apply_and_reach_snapshot() {
        let cfg = config_from_str(
            BASE,
            &[
                "style.placement=appended".into(),
                "client.num_runs=3".into(),
                "client.temperature=0".into(),
                "sampling.num_frames=12".into(),
                "metrics.recall_thresholds=[0.3, 0.5]".into(),
                "template.format_prompt=Answer now.".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.style.placement, Placement::Appended);
        assert_eq!(cfg.client.num_runs, 3);
        assert_eq!(cfg.sampling.num_frames, Some(12));
        assert_eq!(cfg.metrics.recall_thresholds, vec![0.3, 0.5]);
        assert_eq!(cfg.template.format_prompt.as_deref(), Some("Answer now."));
        let snapshot = cfg.to_toml().unwrap();
        assert!(snapshot.contains("placement = \"appended\""));
        assert!(snapshot.contains("num_runs = 3"));
        assert_eq!(config_from_str(&snapshot, &[]).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_listed() {
        let err = config_from_str(BASE, &["style.colour=red".into()]).unwrap_err();
        let msg = err.to_string();
        assert!(err.is_config());
        assert!(msg.contains("style.colour") && msg.contains("style.placement"), "{msg}");

        let err = config_from_str(&format!("{BASE}\n[client]\nnum_rums = 2\n"), &[]).unwrap_err();
        assert!(err.to_string().contains("client.num_rums"));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        assert!(config_from_str(BASE, &["client.num_runs=0".into()]).unwrap_err().is_config());
        assert!(config_from_str(BASE, &["style.placement=sideways".into()]).unwrap_err().is_config());
        assert!(config_from_str(BASE, &["nokey".into()]).unwrap_err().is_config());
    }
}
