use std::fs;
use std::path::Path;

use log::{error, info};

use crate::blueprint::{Placement, Precision, Representation, TimestampStyle};
use crate::client::ChatClient;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

use super::{run_experiment_with, ExperimentConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub label: String,
    pub style: TimestampStyle,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AblationMatrix {
    pub rows: Vec<AblationRow>,
}

impl AblationMatrix {
    pub fn new(rows: Vec<AblationRow>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if rows[..i].iter().any(|o| o.label == r.label) {
                return Err(Error::Config(format!("duplicate ablation label `{}`", r.label)));
            }
        }
        Ok(Self { rows })
    }

    /// Representation × precision × placement: the four appended variants,
    /// then relative and absolute integers interleaved.
    pub fn timestamp_design() -> Self {
        use Placement::*;
        use Precision::*;
        use Representation::*;
        let specs = [
            (Relative, Decimal, Appended),
            (Absolute, Decimal, Appended),
            (Relative, Integer, Appended),
            (Absolute, Integer, Appended),
            (Relative, Integer, Interleaved),
            (Absolute, Integer, Interleaved),
        ];
        Self {
            rows: specs
                .iter()
                .enumerate()
                .map(|(i, &(r, p, pl))| AblationRow {
                    label: format!("({})", i + 1),
                    style: TimestampStyle::new(r, p, pl),
                })
                .collect(),
        }
    }

    /// Duration (D) and timestamp (T) toggles on top of `base`.
    pub fn prompt_components(base: TimestampStyle) -> Self {
        let toggles = [(false, false), (true, false), (false, true), (true, true)];
        Self {
            rows: toggles
                .iter()
                .enumerate()
                .map(|(i, &(d, t))| AblationRow {
                    label: format!("({})", i + 1),
                    style: base.with_components(d, t),
                })
                .collect(),
        }
    }

    /// `table-a` (prompt components) or `table-b` (timestamp design).
    pub fn named(name: &str, base: TimestampStyle) -> Result<Self> {
        match name {
            "table-a" | "components" => Ok(Self::prompt_components(base)),
            "table-b" | "timestamps" => Ok(Self::timestamp_design()),
            other => Err(Error::Config(format!(
                "unknown ablation matrix `{other}` (expected table-a or table-b)"
            ))),
        }
    }
}

#[derive(Debug)]
pub struct AblationTable {
    pub rows: Vec<(AblationRow, std::result::Result<MetricsReport, String>)>,
}

fn mark(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl AblationTable {
    const HEADER: [&'static str; 9] = ["#", "D", "T", "Rep.", "Prec.", "Inter.", "R1@.5", "R1@.7", "mIoU"];

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|(row, result)| {
                let s = &row.style;
                let mut cells = vec![
                    row.label.clone(),
                    mark(s.include_duration).into(),
                    mark(s.include_timestamps).into(),
                    match s.representation {
                        Representation::Absolute => "Abs".into(),
                        Representation::Relative => "Rel".into(),
                    },
                    match s.precision {
                        Precision::Integer => "Int".into(),
                        Precision::Decimal => "Dec".into(),
                    },
                    mark(s.placement == Placement::Interleaved).into(),
                ];
                match result {
                    Ok(r) => {
                        let f = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
                        cells.push(f(r.r1(0.5)));
                        cells.push(f(r.r1(0.7)));
                        cells.push(format!("{:.2}", r.miou));
                    }
                    Err(_) => cells.extend(["failed".to_string(), "-".into(), "-".into()]),
                }
                cells
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::HEADER)?;
        for row in self.cells() {
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_text(&self) -> String {
        let cells = self.cells();
        let widths: Vec<usize> = (0..Self::HEADER.len())
            .map(|c| {
                cells
                    .iter()
                    .map(|r| r[c].len())
                    .chain(std::iter::once(Self::HEADER[c].len()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |row: Vec<&str>| {
            row.iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
                + "\n"
        };
        let mut out = line(Self::HEADER.to_vec());
        for r in &cells {
            out.push_str(&line(r.iter().map(String::as_str).collect()));
        }
        out
    }
}

fn slug(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect();
    let s = s.trim_matches('-').to_string();
    if s.is_empty() {
        "row".into()
    } else {
        s
    }
}

pub fn run_ablation(base: &ExperimentConfig, matrix: &AblationMatrix) -> Result<AblationTable> {
    let client = ChatClient::new(base.client.clone())?;
    run_ablation_with(base, matrix, &client)
}

/// Run every row with the same client (and hence the same cache), writing
/// each row to `<output_dir>/rows/<label>/` and the combined table to
/// `<output_dir>/ablation.{csv,txt}`. A failing row is logged and kept as a
/// failed entry; the others still run.
pub fn run_ablation_with(base: &ExperimentConfig, matrix: &AblationMatrix, client: &ChatClient) -> Result<AblationTable> {
    let mut rows = Vec::with_capacity(matrix.rows.len());
    for row in &matrix.rows {
        let mut cfg = base.clone();
        cfg.style = row.style;
        cfg.output_dir = base.output_dir.join("rows").join(slug(&row.label));
        info!("ablation row {} ({})", row.label, row.style);
        let result = run_experiment_with(&cfg, client).map(|r| r.report).map_err(|e| {
            error!("ablation row {} failed: {e}", row.label);
            e.to_string()
        });
        rows.push((row.clone(), result));
    }
    let table = AblationTable { rows };
    let dir: &Path = &base.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("ablation.csv");
    fs::write(&csv_path, table.to_csv()?).map_err(|e| Error::io(&csv_path, e))?;
    let txt_path = dir.join("ablation.txt");
    fs::write(&txt_path, table.to_text()).map_err(|e| Error::io(&txt_path, e))?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matrices() {
        let b = AblationMatrix::timestamp_design();
        assert_eq!(b.rows.len(), 6);
        assert_eq!(b.rows[0].style.code(), "rel-dec");
        assert_eq!(b.rows[0].style.placement, Placement::Appended);
        assert_eq!(b.rows[5].style, TimestampStyle::default());

        let a = AblationMatrix::prompt_components(TimestampStyle::default());
        assert_eq!(a.rows.len(), 4);
        assert!(!a.rows[0].style.include_duration && !a.rows[0].style.include_timestamps);
        assert!(a.rows[3].style.include_duration && a.rows[3].style.include_timestamps);
    }

    #[test]
    fn labels_must_be_unique() {
        let row = AblationRow {
            label: "x".into(),
            style: TimestampStyle::default(),
        };
        assert!(AblationMatrix::new(vec![row.clone(), row]).is_err());
    }

    #[test]
    fn empty_table_renders_header_only() {
        let t = AblationTable { rows: vec![] };
        assert_eq!(t.to_csv().unwrap(), "#,D,T,Rep.,Prec.,Inter.,R1@.5,R1@.7,mIoU\n");
        assert_eq!(t.to_text().lines().count(), 1);
    }
}
