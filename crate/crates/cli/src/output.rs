//! Waveform CSV files and the run summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xtalk_core::engine::{SimConfig, Stimulus, WaveformSet};
use xtalk_core::extract::LineElectricals;
use xtalk_core::netbuild::LadderInputs;
use xtalk_core::metrics::TraceMeasurement;

use crate::error::{CliError, Result};

/// Nine significant digits; negative zero prints as zero.
pub fn fmt9(v: f64) -> String {
    format!("{:.8e}", v + 0.0)
}

fn write_table(path: &Path, header: &[String], time: &[f64], columns: &[Vec<f64>]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut head = vec!["time".to_string()];
    head.extend_from_slice(header);
    w.write_record(&head).map_err(csv_err)?;
    let mut row = Vec::with_capacity(head.len());
    for (i, t) in time.iter().enumerate() {
        row.clear();
        row.push(fmt9(*t));
        row.extend(columns.iter().map(|c| fmt9(c[i])));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<f64>, Vec<Vec<f64>>)> {
    let bad = |message: String| CliError::Format {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.get(0) != Some("time") {
        return Err(bad("first column must be 'time'".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut time = Vec::new();
    let mut cols = vec![Vec::new(); names.len()];
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let mut vals = rec.iter().map(|s| s.parse::<f64>().map_err(|e| bad(format!("'{s}': {e}"))));
        time.push(vals.next().ok_or_else(|| bad("empty row".into()))??);
        for col in cols.iter_mut() {
            col.push(vals.next().ok_or_else(|| bad("short row".into()))??);
        }
    }
    Ok((names, time, cols))
}

pub fn write_waveforms(w: &WaveformSet, nodes: &Path, currents: &Path) -> Result<()> {
    write_table(nodes, &w.node_names, &w.time, &w.node_traces)?;
    write_table(currents, &w.branch_names, &w.time, &w.branch_traces)
}

/// Reads back the pair of CSV files written by [`write_waveforms`].
pub fn read_waveforms(nodes: &Path, currents: &Path, scenario: &str, config_hash: &str) -> Result<WaveformSet> {
    let (node_names, time, node_traces) = read_table(nodes)?;
    let (branch_names, t2, branch_traces) = read_table(currents)?;
    if t2.len() != time.len() {
        return Err(CliError::Format {
            path: currents.to_path_buf(),
            message: format!("{} samples, node file has {}", t2.len(), time.len()),
        });
    }
    Ok(WaveformSet {
        scenario: scenario.to_string(),
        config_hash: config_hash.to_string(),
        time,
        node_names,
        node_traces,
        branch_names,
        branch_traces,
    })
}

/// File names relative to the summary's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFiles {
    pub waveforms: Option<String>,
    pub currents: Option<String>,
    pub summary: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleMetrics {
    pub aggressor: TraceMeasurement,
    pub victim: TraceMeasurement,
}

/// What `run` records about one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: String,
    pub toolkit_version: String,
    pub timestamp: String,
    pub config_hash: String,
    pub parameters: Parameters,
    pub measurement_nodes: MeasurementNodes,
    pub metrics: RoleMetrics,
    pub files: ResultFiles,
}

/// The values a run actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub coefficients: String,
    /// Extracted values in formula units, after overrides.
    pub electricals: LineElectricals,
    /// SI element totals given to the ladder builder.
    pub ladder: LadderInputs,
    pub stimulus: Stimulus,
    pub sim: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementNodes {
    pub aggressor_source: String,
    pub aggressor_load: String,
    pub victim_load: String,
}

impl ScenarioResult {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("summary serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Absolute paths of the referenced files, given the summary's directory.
    pub fn paths(&self, dir: &Path) -> (Option<PathBuf>, Option<PathBuf>) {
        (
            self.files.waveforms.as_ref().map(|f| dir.join(f)),
            self.files.currents.as_ref().map(|f| dir.join(f)),
        )
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}
