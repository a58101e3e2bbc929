use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::covers::Window;
use crate::dimensions::EvidenceGrid;
use crate::error::{Error, Result};

/// Exit status contract of the binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    /// Budget exhaustion left some results missing or approximate.
    Partial,
    Failed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Passed => 0,
            Status::Failed => 2,
            Status::Partial => 4,
        }
    }
}

pub const CONFIG_ERROR_EXIT: u8 = 3;

/// Exit code for an error that aborted a run.
pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::InsufficientGrid(_) => CONFIG_ERROR_EXIT,
        Error::Capacity { .. } => Status::Partial.exit_code(),
        _ => Status::Failed.exit_code(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// sha256 of the canonical JSON of the effective inputs.
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(command: &str, effective_config: &impl Serialize, seed: u64) -> Result<Self> {
        let canonical = serde_json::to_vec(effective_config).map_err(|e| Error::Config(e.to_string()))?;
        let digest = Sha256::digest(&canonical);
        Ok(Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed,
        })
    }
}

/// One line of `cells.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellRow {
    pub system: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    pub window_lo: Option<f64>,
    pub window_hi: Option<f64>,
    pub s: Option<f64>,
    pub delta: Option<f64>,
    pub statistic: String,
    pub value: Option<f64>,
    pub method: String,
}

impl CellRow {
    pub fn new(system: &str, n: usize, epsilon: f64, statistic: &str, value: Option<f64>, method: &str) -> Self {
        CellRow {
            system: system.to_string(),
            n,
            epsilon,
            window_lo: None,
            window_hi: None,
            s: None,
            delta: None,
            statistic: statistic.to_string(),
            value,
            method: method.to_string(),
        }
    }

    pub fn window(mut self, w: Option<Window>) -> Self {
        if let Some(w) = w {
            self.window_lo = Some(w.lo);
            self.window_hi = Some(w.hi);
        }
        self
    }

    pub fn s(mut self, s: Option<f64>) -> Self {
        self.s = s;
        self
    }

    pub fn delta(mut self, d: Option<f64>) -> Self {
        self.delta = d;
        self
    }
}

/// Rows of an evidence grid; `window` gives each ε its cover window.
pub fn grid_rows(
    system: &str,
    grid: &EvidenceGrid,
    delta: Option<f64>,
    window: impl Fn(f64) -> Option<Window>,
) -> Vec<CellRow> {
    grid.cells
        .iter()
        .map(|c| {
            let method = match (c.method, &c.note) {
                (Some(m), _) => m.as_str(),
                (None, Some(n)) if n.starts_with("capacity") => "capacity",
                (None, _) => "infeasible",
            };
            CellRow::new(system, c.n, c.epsilon, grid.statistic.as_str(), c.value, method)
                .window(window(c.epsilon))
                .delta(delta)
        })
        .collect()
}

pub fn csv_string(rows: &[CellRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "system", "N", "epsilon", "window_lo", "window_hi", "s", "delta", "statistic", "value", "method",
        ])
        .map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv: {e}")))
}

/// Everything a command produces. Nothing touches the disk until
/// [`RunOutput::write`].
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub status: Status,
    /// File name of the JSON report inside the output directory.
    pub json_name: &'static str,
    pub json: String,
    pub csv: String,
    pub summary: Vec<String>,
}

impl RunOutput {
    pub fn new(status: Status, json_name: &'static str, report: &impl Serialize, rows: &[CellRow], summary: Vec<String>) -> Result<Self> {
        let mut json = serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))?;
        json.push('\n');
        Ok(RunOutput {
            status,
            json_name,
            json,
            csv: csv_string(rows)?,
            summary,
        })
    }

    /// Writes `cells.csv` and the JSON report; returns their paths.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join("cells.csv");
        let json_path = dir.join(self.json_name);
        fs::write(&csv_path, &self.csv)?;
        fs::write(&json_path, &self.json)?;
        Ok(vec![csv_path, json_path])
    }
}
