//! Waveform measurements: peak noise, 50% delay and 10-90% rise time.
//!
//! Signal traces are measured against their settled level; noise pulses
//! have no settled level and are measured against their own peak. All
//! threshold crossings are first crossings, linearly interpolated between
//! samples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::WaveformSet;
use crate::netbuild::{CoupledNetwork, LineRole};

/// Pulses smaller than this (volts) are treated as absent: no delay or
/// rise time is reported for them.
pub const NOISE_FLOOR_V: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace and time axis lengths differ ({trace} vs {time})")]
    LengthMismatch { trace: usize, time: usize },
    #[error("missing {role} trace '{node}'")]
    MissingRole { role: &'static str, node: String },
    #[error("network has no {0} line")]
    MissingLine(LineRole),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum TraceKind {
    /// Transition with a settled level. `final_v` overrides the last
    /// sample as that level.
    Signal { final_v: Option<f64> },
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMeasurement {
    pub kind: TraceKind,
    pub peak_v: f64,
    pub t_peak: f64,
    pub delay: Option<f64>,
    pub rise_time: Option<f64>,
}

/// Largest `|v - baseline|` and the first time it occurs.
pub fn peak_noise(time: &[f64], trace: &[f64], baseline: f64) -> Result<(f64, f64)> {
    check(time, trace)?;
    let (i, peak) = trace
        .iter()
        .map(|v| (v - baseline).abs())
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, d)| if d > best.1 { (i, d) } else { best });
    Ok((peak, time[i]))
}

fn check(time: &[f64], trace: &[f64]) -> Result<()> {
    if trace.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    if trace.len() != time.len() {
        return Err(MetricsError::LengthMismatch {
            trace: trace.len(),
            time: time.len(),
        });
    }
    Ok(())
}

/// First time `sign * (v - baseline)` reaches `level`.
fn crossing(time: &[f64], trace: &[f64], baseline: f64, sign: f64, level: f64) -> Option<f64> {
    let u = |i: usize| sign * (trace[i] - baseline);
    if u(0) >= level {
        return Some(time[0]);
    }
    (1..trace.len()).find(|&i| u(i) >= level).map(|i| {
        let (u0, u1) = (u(i - 1), u(i));
        time[i - 1] + (time[i] - time[i - 1]) * (level - u0) / (u1 - u0)
    })
}

/// Baseline, orientation and full-scale deviation of a trace.
fn reference(time: &[f64], trace: &[f64], kind: TraceKind) -> Option<(f64, f64, f64)> {
    let baseline = trace[0];
    match kind {
        TraceKind::Signal { final_v } => {
            let swing = final_v.unwrap_or(trace[trace.len() - 1]) - baseline;
            (swing != 0.0).then(|| (baseline, swing.signum(), swing.abs()))
        }
        TraceKind::Noise => {
            let (peak, t_peak) = peak_noise(time, trace, baseline).ok()?;
            if peak <= NOISE_FLOOR_V {
                return None;
            }
            let i = time.iter().position(|&t| t == t_peak)?;
            Some((baseline, (trace[i] - baseline).signum(), peak))
        }
    }
}

/// Time from the source's `threshold` crossing to the output's.
///
/// The source is always treated as a signal. Returns `None` when either
/// trace never crosses.
pub fn propagation_delay(
    time: &[f64],
    source: &[f64],
    output: &[f64],
    threshold: f64,
    kind: TraceKind,
) -> Option<f64> {
    if check(time, source).is_err() || check(time, output).is_err() {
        return None;
    }
    let (sb, ss, sfull) = reference(time, source, TraceKind::Signal { final_v: None })?;
    let t_src = crossing(time, source, sb, ss, threshold * sfull)?;
    let (ob, os, ofull) = reference(time, output, kind)?;
    let t_out = crossing(time, output, ob, os, threshold * ofull)?;
    Some(t_out - t_src)
}

/// Time between the first `lo` and first `hi` crossings (fractions of the
/// reference level).
pub fn rise_time(time: &[f64], trace: &[f64], lo: f64, hi: f64, kind: TraceKind) -> Option<f64> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) || check(time, trace).is_err() {
        return None;
    }
    let (b, s, full) = reference(time, trace, kind)?;
    let t_lo = crossing(time, trace, b, s, lo * full)?;
    let t_hi = crossing(time, trace, b, s, hi * full)?;
    Some(t_hi - t_lo)
}

pub fn measure_trace(time: &[f64], source: &[f64], trace: &[f64], kind: TraceKind) -> Result<TraceMeasurement> {
    let (peak_v, t_peak) = peak_noise(time, trace, trace[0])?;
    Ok(TraceMeasurement {
        kind,
        peak_v,
        t_peak,
        delay: propagation_delay(time, source, trace, 0.5, kind),
        rise_time: rise_time(time, trace, 0.1, 0.9, kind),
    })
}

/// Which traces play which part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRoles {
    pub aggressor_source: String,
    pub aggressor_load: String,
    pub victim_load: String,
    /// Settled aggressor level, normally from the DC operating point.
    pub aggressor_final_v: Option<f64>,
}

impl ScenarioRoles {
    /// Far-end (load) nodes of the aggressor and victim lines.
    pub fn for_network(net: &CoupledNetwork) -> Result<Self> {
        let agg = net
            .line_by_role(LineRole::Aggressor)
            .ok_or(MetricsError::MissingLine(LineRole::Aggressor))?;
        let vic = net
            .line_by_role(LineRole::Victim)
            .ok_or(MetricsError::MissingLine(LineRole::Victim))?;
        let source = net
            .drivers
            .iter()
            .find(|d| d.node == agg.driver_node)
            .map(|d| d.source_name.clone())
            .ok_or(MetricsError::MissingLine(LineRole::Aggressor))?;
        Ok(Self {
            aggressor_source: source,
            aggressor_load: net.node_name(agg.load_node).to_string(),
            victim_load: net.node_name(vic.load_node).to_string(),
            aggressor_final_v: None,
        })
    }

    pub fn with_aggressor_final(mut self, v: f64) -> Self {
        self.aggressor_final_v = Some(v);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub scenario: String,
    pub aggressor: TraceMeasurement,
    pub victim: TraceMeasurement,
}

/// Aggressor signal metrics and victim noise metrics for one run.
pub fn measure_scenario(w: &WaveformSet, roles: &ScenarioRoles) -> Result<ScenarioMetrics> {
    let get = |role: &'static str, node: &str| {
        w.node(node).ok_or_else(|| MetricsError::MissingRole {
            role,
            node: node.to_string(),
        })
    };
    let src = get("aggressor source", &roles.aggressor_source)?;
    let agg = get("aggressor load", &roles.aggressor_load)?;
    let vic = get("victim load", &roles.victim_load)?;
    Ok(ScenarioMetrics {
        scenario: w.scenario.clone(),
        aggressor: measure_trace(
            &w.time,
            src,
            agg,
            TraceKind::Signal {
                final_v: roles.aggressor_final_v,
            },
        )?,
        victim: measure_trace(&w.time, src, vic, TraceKind::Noise)?,
    })
}
