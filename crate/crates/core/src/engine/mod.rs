//! Transient simulation of linear RLC networks.
//!
//! The network is stamped once into `G x + C dx/dt = b(t)`. Each run
//! starts from the DC solution at `t = 0`, takes one backward-Euler step
//! and then continues with the chosen fixed-step rule. The iteration
//! matrix is factored once per run and reused at every step.

pub mod lu;
pub mod mna;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netbuild::{CoupledNetwork, NodeId, SourceRef};
use lu::LuFactors;
pub use mna::{assemble, MnaSystem, Unknown};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("structurally singular system at {culprit}")]
    Assembly { culprit: String },
    #[error("singular matrix during {stage}, no pivot for {culprit}")]
    Singular { stage: &'static str, culprit: String },
    #[error("solution diverged at t = {t:e} s")]
    Divergence { t: f64 },
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("invalid stimulus: {0}")]
    Stimulus(String),
    #[error("unknown output node '{0}'")]
    UnknownNode(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StimulusShape {
    /// Jumps from 0 to the amplitude just after `delay_s`.
    Step,
    /// Linear rise over `rise_time_s` starting at `delay_s`.
    Ramp,
    /// Time/value breakpoints; values are multiplied by the amplitude.
    PiecewiseLinear { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub shape: StimulusShape,
    pub amplitude_v: f64,
    pub rise_time_s: f64,
    pub delay_s: f64,
}

impl Default for Stimulus {
    fn default() -> Self {
        Self::ramp(1.0, 1e-9)
    }
}

impl Stimulus {
    pub fn step(amplitude_v: f64) -> Self {
        Self {
            shape: StimulusShape::Step,
            amplitude_v,
            rise_time_s: 0.0,
            delay_s: 0.0,
        }
    }

    pub fn ramp(amplitude_v: f64, rise_time_s: f64) -> Self {
        Self {
            shape: StimulusShape::Ramp,
            amplitude_v,
            rise_time_s,
            delay_s: 0.0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            amplitude_v: self.amplitude_v * factor,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude_v.is_finite() {
            return Err(EngineError::Stimulus("amplitude must be finite".into()));
        }
        if !(self.rise_time_s >= 0.0 && self.rise_time_s.is_finite()) {
            return Err(EngineError::Stimulus("rise time must be >= 0".into()));
        }
        if !(self.delay_s >= 0.0 && self.delay_s.is_finite()) {
            return Err(EngineError::Stimulus("delay must be >= 0".into()));
        }
        if let StimulusShape::PiecewiseLinear { points } = &self.shape {
            if points.is_empty() {
                return Err(EngineError::Stimulus("PWL needs at least one point".into()));
            }
            if points.windows(2).any(|w| !(w[1].0 >= w[0].0)) {
                return Err(EngineError::Stimulus("PWL points must be time-sorted".into()));
            }
            if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
                return Err(EngineError::Stimulus("PWL points must be finite".into()));
            }
        }
        Ok(())
    }

    /// Source voltage at `t`.
    pub fn value(&self, t: f64) -> f64 {
        let a = self.amplitude_v;
        match &self.shape {
            StimulusShape::Step => {
                if t > self.delay_s {
                    a
                } else {
                    0.0
                }
            }
            StimulusShape::Ramp => {
                let t0 = self.delay_s;
                if t <= t0 {
                    0.0
                } else if self.rise_time_s == 0.0 || t >= t0 + self.rise_time_s {
                    a
                } else {
                    a * (t - t0) / self.rise_time_s
                }
            }
            StimulusShape::PiecewiseLinear { points } => a * pwl(points, t),
        }
    }

    /// Level the source settles at.
    pub fn final_value(&self) -> f64 {
        match &self.shape {
            StimulusShape::PiecewiseLinear { points } => self.amplitude_v * points.last().map_or(0.0, |p| p.1),
            _ => self.amplitude_v,
        }
    }

    /// Corner points `(t, v)` sufficient to describe the waveform, for
    /// PWL export. A step is rendered as a ramp over `step_width`.
    pub fn corners(&self, step_width: f64) -> Vec<(f64, f64)> {
        let a = self.amplitude_v;
        let mut pts = vec![(0.0, 0.0)];
        match &self.shape {
            StimulusShape::Step | StimulusShape::Ramp => {
                let rise = match self.shape {
                    StimulusShape::Ramp if self.rise_time_s > 0.0 => self.rise_time_s,
                    _ => step_width,
                };
                if self.delay_s > 0.0 {
                    pts.push((self.delay_s, 0.0));
                }
                pts.push((self.delay_s + rise, a));
            }
            StimulusShape::PiecewiseLinear { points } => {
                pts = points.iter().map(|&(t, v)| (t, a * v)).collect();
                if points[0].0 > 0.0 {
                    pts.insert(0, (0.0, a * points[0].1));
                }
            }
        }
        pts
    }
}

fn pwl(points: &[(f64, f64)], t: f64) -> f64 {
    let first = points[0];
    if t <= first.0 {
        return first.1;
    }
    for w in points.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        if t <= t1 {
            if t1 == t0 {
                return v1;
            }
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        }
    }
    points[points.len() - 1].1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Trapezoidal,
    BackwardEuler,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Trapezoidal => "trapezoidal",
            Method::BackwardEuler => "backward-euler",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputNodes {
    #[default]
    All,
    Named(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    pub output_nodes: OutputNodes,
}

impl Default for SimConfig {
    /// 0.05 ns steps over 500 ns.
    fn default() -> Self {
        Self {
            dt: 0.05e-9,
            t_end: 500e-9,
            method: Method::Trapezoidal,
            output_nodes: OutputNodes::All,
        }
    }
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64, method: Method) -> Self {
        Self {
            dt,
            t_end,
            method,
            output_nodes: OutputNodes::All,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite() && self.t_end.is_finite() && self.dt < self.t_end) {
            return Err(EngineError::Config(format!(
                "need 0 < dt < t_end (dt = {}, t_end = {})",
                self.dt, self.t_end
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// Uniformly sampled node voltages and branch currents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSet {
    pub scenario: String,
    pub config_hash: String,
    pub time: Vec<f64>,
    pub node_names: Vec<String>,
    pub node_traces: Vec<Vec<f64>>,
    pub branch_names: Vec<String>,
    pub branch_traces: Vec<Vec<f64>>,
}

impl WaveformSet {
    pub fn node(&self, name: &str) -> Option<&[f64]> {
        self.node_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.node_traces[i].as_slice())
    }

    pub fn branch(&self, name: &str) -> Option<&[f64]> {
        self.branch_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.branch_traces[i].as_slice())
    }

    pub fn dt(&self) -> f64 {
        if self.time.len() > 1 {
            self.time[1] - self.time[0]
        } else {
            0.0
        }
    }

    pub fn is_consistent(&self) -> bool {
        let n = self.time.len();
        self.node_names.len() == self.node_traces.len()
            && self.branch_names.len() == self.branch_traces.len()
            && self
                .node_traces
                .iter()
                .chain(&self.branch_traces)
                .all(|t| t.len() == n && t.iter().all(|v| v.is_finite()))
    }
}

/// FNV-1a, stable across platforms and releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn config_hash(net: &CoupledNetwork, stimulus: &Stimulus, cfg: &SimConfig) -> String {
    let key = format!("{net:?}|{stimulus:?}|{cfg:?}");
    format!("{:016x}", fnv1a(key.as_bytes()))
}

/// DC solution: node voltages indexed by `NodeId` (ground included as 0)
/// and inductor currents by branch id.
#[derive(Debug, Clone, PartialEq)]
pub struct DcSolution {
    pub node_voltages: Vec<f64>,
    pub inductor_currents: Vec<f64>,
}

impl DcSolution {
    pub fn voltage(&self, id: NodeId) -> f64 {
        self.node_voltages[id.0]
    }
}

fn singular(sys: &MnaSystem, net: &CoupledNetwork, stage: &'static str, column: usize) -> EngineError {
    EngineError::Singular {
        stage,
        culprit: sys.label(net, column),
    }
}

/// Solves the resistive network with inductors shorted and capacitors
/// open. Driven sources sit at `driven_v`, quiet ones at 0 V.
pub fn dc_operating_point(net: &CoupledNetwork, driven_v: f64) -> Result<DcSolution> {
    let sys = assemble(net)?;
    let lu = LuFactors::factor(sys.g.clone()).map_err(|s| singular(&sys, net, "DC analysis", s.column))?;
    let b: Vec<f64> = sys.excitation.iter().map(|e| e * driven_v).collect();
    let x = lu.solve(&b);
    let mut node_voltages = vec![0.0];
    node_voltages.extend_from_slice(&x[..sys.n_nodes]);
    Ok(DcSolution {
        node_voltages,
        inductor_currents: x[sys.n_nodes..sys.n_nodes + sys.n_inductors].to_vec(),
    })
}

/// Integrates the network response to `stimulus`.
pub fn run_transient(net: &CoupledNetwork, stimulus: &Stimulus, cfg: &SimConfig) -> Result<WaveformSet> {
    let sys = assemble(net)?;
    run_assembled(net, &sys, stimulus, cfg)
}

/// Same as [`run_transient`] with a pre-assembled system.
pub fn run_assembled(net: &CoupledNetwork, sys: &MnaSystem, stimulus: &Stimulus, cfg: &SimConfig) -> Result<WaveformSet> {
    cfg.validate()?;
    stimulus.validate()?;
    let n = sys.size();
    let h = cfg.dt;
    let steps = cfg.steps();

    // output selection: circuit nodes, then driver source terminals
    let mut out_nodes: Vec<(String, Option<usize>, Option<SourceRef>)> = Vec::new();
    for (i, node) in net.nodes.iter().enumerate().skip(1) {
        out_nodes.push((node.name.clone(), Some(i - 1), None));
    }
    for d in &net.drivers {
        out_nodes.push((d.source_name.clone(), None, Some(d.source)));
    }
    if let OutputNodes::Named(names) = &cfg.output_nodes {
        for name in names {
            if !out_nodes.iter().any(|o| &o.0 == name) {
                return Err(EngineError::UnknownNode(name.clone()));
            }
        }
        out_nodes.retain(|o| names.contains(&o.0));
    }
    let branch_names: Vec<String> = net.inductors.iter().map(|l| l.name.clone()).collect();

    let dc = LuFactors::factor(sys.g.clone()).map_err(|s| singular(sys, net, "DC analysis", s.column))?;
    let be = LuFactors::factor(sys.g.combine(1.0, &sys.c, 1.0 / h))
        .map_err(|s| singular(sys, net, "backward-Euler factorization", s.column))?;
    let trap = match cfg.method {
        Method::Trapezoidal => Some(
            LuFactors::factor(sys.g.combine(1.0, &sys.c, 2.0 / h))
                .map_err(|s| singular(sys, net, "trapezoidal factorization", s.column))?,
        ),
        Method::BackwardEuler => None,
    };
    let trap_rhs = sys.c.combine(2.0 / h, &sys.g, -1.0);

    let mut time = Vec::with_capacity(steps + 1);
    let mut node_traces = vec![Vec::with_capacity(steps + 1); out_nodes.len()];
    let mut branch_traces = vec![Vec::with_capacity(steps + 1); sys.n_inductors];
    let mut record = |t: f64, x: &[f64], s: f64| {
        time.push(t);
        for (trace, (_, idx, src)) in node_traces.iter_mut().zip(&out_nodes) {
            trace.push(match (idx, src) {
                (Some(i), _) => x[*i],
                (None, Some(SourceRef::Driven)) => s,
                _ => 0.0,
            });
        }
        for (j, trace) in branch_traces.iter_mut().enumerate() {
            trace.push(x[sys.n_nodes + j]);
        }
    };

    let b_at = |t: f64| -> (f64, Vec<f64>) {
        let s = stimulus.value(t);
        (s, sys.excitation.iter().map(|e| e * s).collect())
    };

    let (s0, b0) = b_at(0.0);
    let mut x = dc.solve(&b0);
    record(0.0, &x, s0);
    let mut b_prev = b0;
    let mut rhs = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut x_next = vec![0.0; n];

    for k in 1..=steps {
        let t = k as f64 * h;
        let (s, b) = b_at(t);
        match (&trap, k) {
            (Some(tr), k) if k > 1 => {
                trap_rhs.mul_vec(&x, &mut tmp);
                for i in 0..n {
                    rhs[i] = b[i] + b_prev[i] + tmp[i];
                }
                tr.solve_into(&rhs, &mut x_next);
            }
            _ => {
                sys.c.mul_vec(&x, &mut tmp);
                for i in 0..n {
                    rhs[i] = b[i] + tmp[i] / h;
                }
                be.solve_into(&rhs, &mut x_next);
            }
        }
        if x_next.iter().any(|v| !v.is_finite()) {
            return Err(EngineError::Divergence { t });
        }
        std::mem::swap(&mut x, &mut x_next);
        record(t, &x, s);
        b_prev = b;
    }

    Ok(WaveformSet {
        scenario: net.scenario.clone(),
        config_hash: config_hash(net, stimulus, cfg),
        time,
        node_names: out_nodes.into_iter().map(|o| o.0).collect(),
        node_traces,
        branch_names,
        branch_traces,
    })
}
