use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use xtalk_core::engine::{dc_operating_point, run_transient, WaveformSet};
use xtalk_core::metrics::{measure_scenario, ScenarioMetrics, ScenarioRoles};
use xtalk_core::netbuild::{CoupledNetwork, TapSchedule};

use crate::config::ToolkitConfig;
use crate::error::{CliError, Result};
use crate::model::{extract_report, resolve, ExtractReport, Resolved};
use crate::netlist::{export_netlist, TieStyle};
use crate::output::{
    ensure_dir, fmt9, write_text, write_waveforms, MeasurementNodes, Parameters, ResultFiles, RoleMetrics,
    ScenarioResult,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One simulated scenario, before anything is written.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub resolved: Resolved,
    pub network: CoupledNetwork,
    pub waveforms: WaveformSet,
    pub roles: ScenarioRoles,
    pub metrics: ScenarioMetrics,
}

pub fn simulate(cfg: &ToolkitConfig) -> Result<Simulated> {
    let resolved = resolve(cfg)?;
    let network = resolved.inputs.build()?;
    let waveforms = run_transient(&network, &resolved.stimulus, &resolved.sim)?;
    let dc = dc_operating_point(&network, resolved.stimulus.final_value())?;
    let roles = ScenarioRoles::for_network(&network)?;
    let load = network
        .find_node(&roles.aggressor_load)
        .expect("role nodes come from the network");
    let roles = roles.with_aggressor_final(dc.voltage(load));
    let metrics = measure_scenario(&waveforms, &roles)?;
    Ok(Simulated {
        resolved,
        network,
        waveforms,
        roles,
        metrics,
    })
}

pub fn cmd_extract(cfg: &ToolkitConfig, out: Option<&Path>) -> Result<ExtractReport> {
    let report = extract_report(cfg)?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        write_text(&dir.join("extract.json"), &text)?;
    }
    Ok(report)
}

/// Simulates, measures and writes the configured outputs into `out`.
pub fn cmd_run(cfg: &ToolkitConfig, out: &Path) -> Result<(ScenarioResult, Simulated)> {
    let sim = simulate(cfg)?;
    ensure_dir(out)?;
    let name = &sim.resolved.scenario;
    let mut files = ResultFiles {
        waveforms: None,
        currents: None,
        summary: None,
    };
    if cfg.output.wants("csv") {
        let (nodes, currents) = (format!("{name}_waveforms.csv"), format!("{name}_currents.csv"));
        write_waveforms(&sim.waveforms, &out.join(&nodes), &out.join(&currents))?;
        files.waveforms = Some(nodes);
        files.currents = Some(currents);
    }
    let summary_name = format!("{name}_summary.json");
    if cfg.output.wants("json") {
        files.summary = Some(summary_name.clone());
    }
    let r = &sim.resolved;
    let result = ScenarioResult {
        scenario: name.clone(),
        toolkit_version: VERSION.to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config_hash: sim.waveforms.config_hash.clone(),
        parameters: Parameters {
            coefficients: cfg.geometry.coefficients.clone(),
            electricals: r.electricals.clone(),
            ladder: r.inputs.clone(),
            stimulus: r.stimulus.clone(),
            sim: r.sim.clone(),
        },
        measurement_nodes: MeasurementNodes {
            aggressor_source: sim.roles.aggressor_source.clone(),
            aggressor_load: sim.roles.aggressor_load.clone(),
            victim_load: sim.roles.victim_load.clone(),
        },
        metrics: RoleMetrics {
            aggressor: sim.metrics.aggressor,
            victim: sim.metrics.victim,
        },
        files,
    };
    if cfg.output.wants("json") {
        result.write(&out.join(summary_name))?;
    }
    Ok((result, sim))
}

pub fn cmd_export_netlist(cfg: &ToolkitConfig, ties: TieStyle) -> Result<(String, String)> {
    let resolved = resolve(cfg)?;
    let network = resolved.inputs.build()?;
    let deck = export_netlist(&network, &resolved.stimulus, &resolved.sim, ties)?;
    Ok((resolved.scenario, deck))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SweepAxis {
    TapCount,
    ShieldWidthScale,
    Separation,
    NSegments,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::TapCount => "tap_count",
            SweepAxis::ShieldWidthScale => "shield_width_scale",
            SweepAxis::Separation => "separation",
            SweepAxis::NSegments => "n_segments",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: String,
    pub victim_peak_v: Option<f64>,
    pub aggressor_delay_s: Option<f64>,
    pub victim_delay_s: Option<f64>,
    pub error: Option<String>,
}

fn count(value: f64, what: &str) -> std::result::Result<usize, String> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(format!("{what} must be a non-negative integer, got {value}"))
    }
}

/// The config with one axis set to `value`.
fn apply_axis(base: &ToolkitConfig, axis: SweepAxis, value: f64) -> std::result::Result<ToolkitConfig, String> {
    let mut cfg = base.clone();
    let shielded_preset = |cfg: &ToolkitConfig| {
        cfg.scenario
            .preset
            .as_deref()
            .map(|p| p.starts_with("shield"))
    };
    match axis {
        SweepAxis::TapCount => {
            let taps = count(value, "tap_count")?;
            match shielded_preset(&cfg) {
                Some(true) => cfg.set_preset(&if taps == 0 {
                    "shield".to_string()
                } else {
                    format!("shield-{taps}taps")
                }),
                Some(false) => return Err("tap_count needs a shielded scenario".into()),
                None => cfg.scenario.taps = TapSchedule::uniform(taps).fractions,
            }
        }
        SweepAxis::ShieldWidthScale => {
            if !(value > 0.0) {
                return Err(format!("shield_width_scale must be > 0, got {value}"));
            }
            if cfg.scenario.preset.is_none() {
                for line in cfg.scenario.lines.iter_mut() {
                    if line.role == xtalk_core::netbuild::LineRole::Shield {
                        line.width_scale = value;
                    }
                }
            }
            cfg.geometry.shield_width_scale = value;
        }
        SweepAxis::Separation => match shielded_preset(&cfg) {
            Some(true) => cfg.geometry.shield_separation_um = value,
            Some(false) => cfg.geometry.separation_um = value,
            None => {
                for c in cfg.scenario.couplings.iter_mut().filter(|c| c.adjacent) {
                    c.separation_um = value;
                }
            }
        },
        SweepAxis::NSegments => {
            let n = count(value, "n_segments")?;
            if n == 0 {
                return Err("n_segments must be >= 1".into());
            }
            cfg.sim.n_segments = n;
        }
    }
    Ok(cfg)
}

/// Runs every value (concurrently) and returns the rows in input order.
pub fn cmd_sweep(base: &ToolkitConfig, axis: SweepAxis, values: &[String]) -> Result<Vec<SweepRow>> {
    if values.len() < 2 {
        return Err(CliError::Usage(format!(
            "a sweep needs at least two values, got {}",
            values.len()
        )));
    }
    let parsed: Vec<f64> = values
        .iter()
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("sweep value '{v}' is not a number")))
        })
        .collect::<Result<_>>()?;
    base.check()?;
    Ok(values
        .par_iter()
        .zip(parsed.par_iter())
        .map(|(label, &v)| {
            let outcome = apply_axis(base, axis, v).and_then(|cfg| simulate(&cfg).map_err(|e| e.to_string()));
            match outcome {
                Ok(sim) => SweepRow {
                    value: label.trim().to_string(),
                    victim_peak_v: Some(sim.metrics.victim.peak_v),
                    aggressor_delay_s: sim.metrics.aggressor.delay,
                    victim_delay_s: sim.metrics.victim.delay,
                    error: None,
                },
                Err(e) => SweepRow {
                    value: label.trim().to_string(),
                    victim_peak_v: None,
                    aggressor_delay_s: None,
                    victim_delay_s: None,
                    error: Some(e),
                },
            }
        })
        .collect())
}

pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let opt = |v: Option<f64>| v.map(fmt9).unwrap_or_default();
    w.write_record([axis.name(), "victim_peak_v", "aggressor_delay_s", "victim_delay_s", "error"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.value.clone(),
            opt(r.victim_peak_v),
            opt(r.aggressor_delay_s),
            opt(r.victim_delay_s),
            r.error.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
