use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::grid::{CellOutcome, ExperimentGrid};
use crate::dataset::TaskMode;
use crate::error::{Error, Result};
use crate::label::ClassLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    #[serde(rename = "table-text")]
    TableText,
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "json")]
    Json,
}

impl ReportFormat {
    pub fn name(self) -> &'static str {
        match self {
            ReportFormat::TableText => "table-text",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [ReportFormat::TableText, ReportFormat::Csv, ReportFormat::Json]
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown report format {s:?}")))
    }
}

#[derive(Serialize)]
struct Failure<'a> {
    learner: &'a str,
    k: usize,
    mode: TaskMode,
    error: &'a str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    format: ReportFormat,
    seed: u64,
    config: &'a super::BenchConfig,
    train_rows: usize,
    test_rows: usize,
    cells_total: usize,
    cells_failed: usize,
    failures: Vec<Failure<'a>>,
    files: Vec<String>,
}

/// One table: a header row and learner rows of pre-formatted cells. Empty
/// strings mark failed cells.
struct Table {
    title: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|i| {
                self.rows
                    .iter()
                    .map(|r| r[i].len())
                    .chain([self.header[i].len(), 1])
                    .max()
                    .unwrap_or(1)
            })
            .collect();
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                let c = if c.is_empty() { "-" } else { c };
                if i == 0 {
                    let _ = write!(s, "{c:<w$}");
                } else {
                    let _ = write!(s, "  {c:>w$}");
                }
            }
            s.push('\n');
            s
        };
        let mut out = format!("{}\n", self.title);
        out.push_str(&line(&self.header));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

/// Learner x k table; learners with no successful cell are left out.
fn learner_table(
    grid: &ExperimentGrid,
    mode: TaskMode,
    title: String,
    value: impl Fn(&super::CellMetrics) -> f64,
) -> Table {
    let mut header = vec!["learner".to_string()];
    header.extend(grid.config.feature_counts.iter().map(|k| format!("k{k}")));
    let mut rows = Vec::new();
    for &learner in &grid.config.learners {
        let cells: Vec<Option<f64>> = grid
            .config
            .feature_counts
            .iter()
            .map(|&k| grid.metrics(learner, k, mode).map(&value))
            .collect();
        if cells.iter().all(Option::is_none) {
            continue;
        }
        let mut row = vec![learner.name().to_string()];
        row.extend(cells.into_iter().map(|c| c.map(fmt6).unwrap_or_default()));
        rows.push(row);
    }
    Table { title, header, rows }
}

fn per_class_table(grid: &ExperimentGrid) -> Table {
    let mut header = vec!["learner".to_string(), "k".to_string()];
    header.extend(ClassLabel::MULTICLASS.iter().map(|c| c.name().to_string()));
    let mut rows = Vec::new();
    for &learner in &grid.config.learners {
        for &k in &grid.config.feature_counts {
            let Some(m) = grid.metrics(learner, k, TaskMode::Multiclass) else {
                continue;
            };
            let mut row = vec![learner.name().to_string(), k.to_string()];
            row.extend(
                ClassLabel::MULTICLASS
                    .iter()
                    .map(|c| m.per_class_auc.get(c).copied().map(fmt6).unwrap_or_default()),
            );
            rows.push(row);
        }
    }
    Table {
        title: "per-class auc (multi)".into(),
        header,
        rows,
    }
}

fn tables(grid: &ExperimentGrid) -> Vec<(String, Table)> {
    let mut out = Vec::new();
    for &mode in &grid.config.task_modes {
        out.push((
            format!("accuracy_{mode}"),
            learner_table(grid, mode, format!("accuracy ({mode})"), |m| m.accuracy),
        ));
        out.push((
            format!("auc_{mode}"),
            learner_table(grid, mode, format!("auc ({mode})"), |m| m.auc(mode)),
        ));
        if mode == TaskMode::Multiclass {
            out.push(("auc_per_class_multi".into(), per_class_table(grid)));
        }
    }
    out
}

fn write(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the tables in `format`, one ROC CSV per curve under `roc/`, and
/// `manifest.json` last. Returns every path written.
pub fn emit_report(grid: &ExperimentGrid, format: ReportFormat, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    match format {
        ReportFormat::Csv => {
            for (stem, table) in tables(grid) {
                write(dir, &format!("{stem}.csv"), &table.to_csv(), &mut written)?;
            }
        }
        ReportFormat::TableText => {
            let text: Vec<String> = tables(grid).iter().map(|(_, t)| t.to_text()).collect();
            write(dir, "report.txt", &text.join("\n"), &mut written)?;
        }
        ReportFormat::Json => {
            let json = serde_json::to_string_pretty(grid).expect("grid serializes");
            write(dir, "report.json", &json, &mut written)?;
        }
    }

    let roc_dir = dir.join("roc");
    let mut roc_created = false;
    for cell in &grid.cells {
        let Some(m) = cell.metrics() else { continue };
        for (class, series) in &m.roc {
            if cell.mode == TaskMode::Binary && *class != ClassLabel::Malware {
                continue;
            }
            if !roc_created {
                fs::create_dir_all(&roc_dir).map_err(|e| Error::io(&roc_dir, e))?;
                roc_created = true;
            }
            let name = format!("{}_{}_k{}_{}.csv", cell.mode, cell.learner, cell.k, class);
            write(&roc_dir, &name, &series.to_csv(), &mut written)?;
        }
    }

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        format,
        seed: grid.config.seed,
        config: &grid.config,
        train_rows: grid.train_rows,
        test_rows: grid.test_rows,
        cells_total: grid.cells.len(),
        cells_failed: grid.failed_cells(),
        failures: grid
            .cells
            .iter()
            .filter_map(|c| match &c.outcome {
                CellOutcome::Failed { error } => Some(Failure {
                    learner: c.learner.name(),
                    k: c.k,
                    mode: c.mode,
                    error,
                }),
                CellOutcome::Ok(_) => None,
            })
            .collect(),
        files: written
            .iter()
            .map(|p| p.strip_prefix(dir).unwrap_or(p).to_string_lossy().replace('\\', "/"))
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(dir, "manifest.json", &json, &mut written)?;
    Ok(written)
}
