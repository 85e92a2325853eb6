//! Distributed coupled-RLC ladder construction.
//!
//! Every line becomes `n` L-sections: series R then series L, with the
//! shunt capacitance on the downstream node. Capacitive coupling is only
//! placed between pairs that are declared with a non-zero `cm_total`;
//! inductive coupling goes between aligned segment inductors of every pair
//! with a non-zero `m_total`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetBuildError {
    #[error("n_segments must be >= 1")]
    NoSegments,
    #[error("line {line}: {what} = {value} is out of range")]
    InvalidLine {
        line: String,
        what: &'static str,
        value: f64,
    },
    #[error("invalid termination: {0}")]
    InvalidTermination(String),
    #[error("coupling references unknown line index {0}")]
    UnknownLine(usize),
    #[error("pair {a}-{b} is declared more than once")]
    DuplicatePair { a: String, b: String },
    #[error("tap at fraction {fraction} does not land on a node with n_segments = {n_segments}{}", suggest(.suggestion))]
    TapPlacement {
        fraction: f64,
        n_segments: usize,
        suggestion: Option<usize>,
    },
    #[error("invalid tap schedule: {0}")]
    InvalidTaps(String),
    #[error("taps given but the network has no shield line")]
    NoShield,
    #[error("inductive coupling between {a} and {b} makes the inductance matrix indefinite (k = {k:.6})")]
    Coupling { a: String, b: String, k: f64 },
    #[error("network failed validation: {0}")]
    Invalid(String),
    #[error("unknown scenario preset '{0}' (expected no-shield, shield or shield-<N>taps)")]
    UnknownPreset(String),
}

fn suggest(s: &Option<usize>) -> String {
    match s {
        Some(n) => format!(" (try n_segments = {n})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, NetBuildError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const GROUND: NodeId = NodeId(0);

    pub fn is_ground(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineRole {
    Aggressor,
    Victim,
    Shield,
}

impl LineRole {
    pub fn is_signal(self) -> bool {
        !matches!(self, LineRole::Shield)
    }
}

impl fmt::Display for LineRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LineRole::Aggressor => "aggressor",
            LineRole::Victim => "victim",
            LineRole::Shield => "shield",
        })
    }
}

/// Lumped totals for one line, in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub name: String,
    pub role: LineRole,
    pub r_total: f64,
    pub l_total: f64,
    pub c_total: f64,
}

/// Pairwise totals between two lines (indices into the line list), SI.
/// A zero `cm_total` means the pair is not capacitively coupled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCoupling {
    pub a: usize,
    pub b: usize,
    pub m_total: f64,
    pub cm_total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceRef {
    /// Follows the run's stimulus.
    Driven,
    /// Held at 0 V.
    Quiet,
}

/// Driver and receiver model shared by every signal line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminationSpec {
    pub driver_resistance_ohm: f64,
    pub load_capacitance_f: f64,
}

impl Default for TerminationSpec {
    /// 90 nm gate: 82.76 ohm output resistance, 76 fF input load.
    fn default() -> Self {
        Self {
            driver_resistance_ohm: 82.76,
            load_capacitance_f: 76e-15,
        }
    }
}

/// Interior ground connections along the shield. Both shield ends are
/// always grounded in addition to these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapSchedule {
    pub fractions: Vec<f64>,
    pub tie_resistance_ohm: f64,
}

impl TapSchedule {
    /// `count` taps at `i / (count + 1)`.
    pub fn uniform(count: usize) -> Self {
        Self {
            fractions: (1..=count).map(|i| i as f64 / (count + 1) as f64).collect(),
            tie_resistance_ohm: 0.0,
        }
    }

    pub fn with_tie_resistance(mut self, ohms: f64) -> Self {
        self.tie_resistance_ohm = ohms;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tie_resistance_ohm >= 0.0 && self.tie_resistance_ohm.is_finite()) {
            return Err(NetBuildError::InvalidTaps(format!(
                "tie resistance {} must be >= 0",
                self.tie_resistance_ohm
            )));
        }
        let mut prev = 0.0;
        for &f in &self.fractions {
            if !(f > 0.0 && f < 1.0) {
                return Err(NetBuildError::InvalidTaps(format!("fraction {f} is outside (0, 1)")));
            }
            if f <= prev {
                return Err(NetBuildError::InvalidTaps("fractions must be strictly increasing".into()));
            }
            prev = f;
        }
        Ok(())
    }

    /// Node indices (1..n-1) of each tap, or the first fraction that misses.
    fn node_indices(&self, n: usize) -> std::result::Result<Vec<usize>, f64> {
        self.fractions
            .iter()
            .map(|&f| tap_index(f, n).ok_or(f))
            .collect()
    }
}

const TAP_TOL: f64 = 1e-9;

fn tap_index(fraction: f64, n: usize) -> Option<usize> {
    let pos = fraction * n as f64;
    let k = pos.round();
    ((pos - k).abs() <= TAP_TOL * n as f64 && k >= 1.0 && k < n as f64).then_some(k as usize)
}

fn compatible_segments(fractions: &[f64], from: usize) -> Option<usize> {
    (from.max(1)..=from.max(1) * 64).find(|&n| fractions.iter().all(|&f| tap_index(f, n).is_some()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Ground,
    /// Line input, after the driver resistance.
    Driver,
    /// Between the series R and L of segment `k` (1-based).
    Mid(usize),
    /// Downstream end of segment `k` (1-based); segment `n` is the load.
    Segment(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub line: Option<usize>,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResistorKind {
    Series,
    /// Shield-to-ground connection (end or tap).
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resistor {
    pub name: String,
    pub a: NodeId,
    pub b: NodeId,
    pub ohms: f64,
    pub kind: ResistorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CapacitorKind {
    Shunt,
    Coupling,
    Load,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capacitor {
    pub name: String,
    pub a: NodeId,
    pub b: NodeId,
    pub farads: f64,
    pub kind: CapacitorKind,
}

/// An inductor branch; its index in [`CoupledNetwork::inductors`] is the
/// branch id used by [`Mutual`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inductor {
    pub name: String,
    pub a: NodeId,
    pub b: NodeId,
    pub henries: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mutual {
    pub name: String,
    pub branch_a: usize,
    pub branch_b: usize,
    pub henries: f64,
}

/// Thevenin driver: a grounded voltage source behind `resistance`, feeding
/// `node`. The source terminal is labeled `source_name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Driver {
    pub name: String,
    pub source_name: String,
    pub node: NodeId,
    pub resistance: f64,
    pub source: SourceRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineInfo {
    pub name: String,
    pub role: LineRole,
    pub driver_node: NodeId,
    pub load_node: NodeId,
    /// Downstream node of each segment, in order.
    pub segment_nodes: Vec<NodeId>,
    /// Grounded interior nodes (shield only).
    pub tap_nodes: Vec<NodeId>,
}

/// Node/element level circuit. Node 0 is ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledNetwork {
    pub scenario: String,
    pub n_segments: usize,
    pub nodes: Vec<Node>,
    pub lines: Vec<LineInfo>,
    pub resistors: Vec<Resistor>,
    pub capacitors: Vec<Capacitor>,
    pub inductors: Vec<Inductor>,
    pub mutuals: Vec<Mutual>,
    pub drivers: Vec<Driver>,
}

impl CoupledNetwork {
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn find_node(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn line_by_role(&self, role: LineRole) -> Option<&LineInfo> {
        self.lines.iter().find(|l| l.role == role)
    }

    pub fn line_by_name(&self, name: &str) -> Option<&LineInfo> {
        self.lines.iter().find(|l| l.name == name)
    }
}

/// Everything [`build_ladder`] consumes, bundled so presets can be
/// inspected and edited before building.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderInputs {
    pub scenario: String,
    pub lines: Vec<LineSpec>,
    pub couplings: Vec<PairCoupling>,
    pub termination: TerminationSpec,
    pub taps: Option<TapSchedule>,
    pub n_segments: usize,
}

impl LadderInputs {
    pub fn build(&self) -> Result<CoupledNetwork> {
        build_ladder(
            &self.scenario,
            &self.lines,
            &self.couplings,
            &self.termination,
            self.taps.as_ref(),
            self.n_segments,
        )
    }
}

struct Builder {
    net: CoupledNetwork,
}

impl Builder {
    fn node(&mut self, name: String, line: usize, kind: NodeKind) -> NodeId {
        self.net.nodes.push(Node {
            name,
            line: Some(line),
            kind,
        });
        NodeId(self.net.nodes.len() - 1)
    }

    fn tie(&mut self, line: &str, index: usize, node: NodeId, ohms: f64) {
        self.net.resistors.push(Resistor {
            name: format!("Rtie_{line}_{index}"),
            a: node,
            b: NodeId::GROUND,
            ohms,
            kind: ResistorKind::Tie,
        });
    }
}

/// Builds the ladder network. Values are SI totals; each segment gets `1/n`
/// of every total.
pub fn build_ladder(
    scenario: &str,
    lines: &[LineSpec],
    couplings: &[PairCoupling],
    termination: &TerminationSpec,
    taps: Option<&TapSchedule>,
    n_segments: usize,
) -> Result<CoupledNetwork> {
    if n_segments == 0 {
        return Err(NetBuildError::NoSegments);
    }
    for line in lines {
        let checks = [
            ("r_total", line.r_total, line.r_total >= 0.0),
            ("l_total", line.l_total, line.l_total > 0.0),
            ("c_total", line.c_total, line.c_total > 0.0),
        ];
        for (what, value, ok) in checks {
            if !(ok && value.is_finite()) {
                return Err(NetBuildError::InvalidLine {
                    line: line.name.clone(),
                    what,
                    value,
                });
            }
        }
    }
    if !(termination.driver_resistance_ohm >= 0.0 && termination.driver_resistance_ohm.is_finite()) {
        return Err(NetBuildError::InvalidTermination(format!(
            "driver resistance {} must be >= 0",
            termination.driver_resistance_ohm
        )));
    }
    if !(termination.load_capacitance_f >= 0.0 && termination.load_capacitance_f.is_finite()) {
        return Err(NetBuildError::InvalidTermination(format!(
            "load capacitance {} must be >= 0",
            termination.load_capacitance_f
        )));
    }
    let mut seen = Vec::new();
    for c in couplings {
        for idx in [c.a, c.b] {
            if idx >= lines.len() {
                return Err(NetBuildError::UnknownLine(idx));
            }
        }
        let key = (c.a.min(c.b), c.a.max(c.b));
        if c.a == c.b || seen.contains(&key) {
            return Err(NetBuildError::DuplicatePair {
                a: lines[c.a].name.clone(),
                b: lines[c.b].name.clone(),
            });
        }
        seen.push(key);
        if !(c.m_total >= 0.0 && c.cm_total >= 0.0 && c.m_total.is_finite() && c.cm_total.is_finite()) {
            return Err(NetBuildError::InvalidLine {
                line: format!("{}-{}", lines[c.a].name, lines[c.b].name),
                what: "coupling",
                value: if c.m_total < 0.0 { c.m_total } else { c.cm_total },
            });
        }
    }
    let tap_nodes = match taps {
        Some(t) => {
            t.validate()?;
            if !lines.iter().any(|l| l.role == LineRole::Shield) {
                return Err(NetBuildError::NoShield);
            }
            t.node_indices(n_segments).map_err(|fraction| NetBuildError::TapPlacement {
                fraction,
                n_segments,
                suggestion: compatible_segments(&t.fractions, n_segments),
            })?
        }
        None => Vec::new(),
    };
    let tie_ohms = taps.map_or(0.0, |t| t.tie_resistance_ohm);

    let n = n_segments as f64;
    let mut b = Builder {
        net: CoupledNetwork {
            scenario: scenario.to_string(),
            n_segments,
            nodes: vec![Node {
                name: "0".into(),
                line: None,
                kind: NodeKind::Ground,
            }],
            lines: Vec::with_capacity(lines.len()),
            resistors: Vec::new(),
            capacitors: Vec::new(),
            inductors: Vec::new(),
            mutuals: Vec::new(),
            drivers: Vec::new(),
        },
    };

    // branch id of segment k (0-based) of line i
    let mut branches: Vec<Vec<usize>> = Vec::with_capacity(lines.len());
    for (i, spec) in lines.iter().enumerate() {
        let name = &spec.name;
        let driver_node = b.node(format!("{name}_in"), i, NodeKind::Driver);
        let mut prev = driver_node;
        let mut segment_nodes = Vec::with_capacity(n_segments);
        let mut line_branches = Vec::with_capacity(n_segments);
        for k in 1..=n_segments {
            let mid = b.node(format!("{name}_m{k}"), i, NodeKind::Mid(k));
            let out = b.node(format!("{name}_{k}"), i, NodeKind::Segment(k));
            b.net.resistors.push(Resistor {
                name: format!("R{name}_{k}"),
                a: prev,
                b: mid,
                ohms: spec.r_total / n,
                kind: ResistorKind::Series,
            });
            line_branches.push(b.net.inductors.len());
            b.net.inductors.push(Inductor {
                name: format!("L{name}_{k}"),
                a: mid,
                b: out,
                henries: spec.l_total / n,
            });
            b.net.capacitors.push(Capacitor {
                name: format!("C{name}_{k}"),
                a: out,
                b: NodeId::GROUND,
                farads: spec.c_total / n,
                kind: CapacitorKind::Shunt,
            });
            segment_nodes.push(out);
            prev = out;
        }
        let load_node = prev;
        let mut line_taps = Vec::new();
        if spec.role.is_signal() {
            b.net.capacitors.push(Capacitor {
                name: format!("Cload_{name}"),
                a: load_node,
                b: NodeId::GROUND,
                farads: termination.load_capacitance_f,
                kind: CapacitorKind::Load,
            });
            b.net.drivers.push(Driver {
                name: format!("Rdrv_{name}"),
                source_name: format!("{name}_src"),
                node: driver_node,
                resistance: termination.driver_resistance_ohm,
                source: if spec.role == LineRole::Aggressor {
                    SourceRef::Driven
                } else {
                    SourceRef::Quiet
                },
            });
        } else {
            b.tie(name, 0, driver_node, tie_ohms);
            for &k in &tap_nodes {
                b.tie(name, k, segment_nodes[k - 1], tie_ohms);
                line_taps.push(segment_nodes[k - 1]);
            }
            b.tie(name, n_segments, load_node, tie_ohms);
        }
        b.net.lines.push(LineInfo {
            name: name.clone(),
            role: spec.role,
            driver_node,
            load_node,
            segment_nodes,
            tap_nodes: line_taps,
        });
        branches.push(line_branches);
    }

    for c in couplings {
        let (na, nb) = (&lines[c.a].name, &lines[c.b].name);
        if c.cm_total > 0.0 {
            for k in 0..n_segments {
                b.net.capacitors.push(Capacitor {
                    name: format!("Ccpl_{na}_{nb}_{}", k + 1),
                    a: b.net.lines[c.a].segment_nodes[k],
                    b: b.net.lines[c.b].segment_nodes[k],
                    farads: c.cm_total / n,
                    kind: CapacitorKind::Coupling,
                });
            }
        }
        if c.m_total > 0.0 {
            for k in 0..n_segments {
                b.net.mutuals.push(Mutual {
                    name: format!("K{na}_{nb}_{}", k + 1),
                    branch_a: branches[c.a][k],
                    branch_b: branches[c.b][k],
                    henries: c.m_total / n,
                });
            }
        }
    }

    let net = b.net;
    let findings = validate_network(&net);
    if let Some(f) = findings.first() {
        if let FindingKind::Inductance { a, b, k } = &f.kind {
            return Err(NetBuildError::Coupling {
                a: a.clone(),
                b: b.clone(),
                k: *k,
            });
        }
        return Err(NetBuildError::Invalid(f.message.clone()));
    }
    Ok(net)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FindingKind {
    /// An element points at a node or branch that does not exist.
    DanglingReference,
    /// Element value is negative, zero where forbidden, or not finite.
    BadValue,
    /// The inductance matrix is not symmetric positive definite; `a`/`b`
    /// name the most strongly coupled pair.
    Inductance { a: String, b: String, k: f64 },
    /// Node without a DC path to ground.
    Floating,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub kind: FindingKind,
    pub element: String,
    pub message: String,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

/// Cholesky test on a dense symmetric matrix.
fn is_positive_definite(m: &[f64], n: usize) -> bool {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    true
}

/// Checks references, element values, the inductance matrix and DC
/// connectivity. An empty result means the network is well formed.
pub fn validate_network(net: &CoupledNetwork) -> Vec<Finding> {
    let mut out = Vec::new();
    let n_nodes = net.nodes.len();
    let node_ok = |id: NodeId| id.0 < n_nodes;
    let bad_ref = |name: &str, out: &mut Vec<Finding>| {
        out.push(Finding {
            kind: FindingKind::DanglingReference,
            element: name.to_string(),
            message: format!("{name} references a node or branch that does not exist"),
        })
    };
    let bad_value = |name: &str, value: f64, out: &mut Vec<Finding>| {
        out.push(Finding {
            kind: FindingKind::BadValue,
            element: name.to_string(),
            message: format!("{name} has invalid value {value}"),
        })
    };

    for r in &net.resistors {
        if !(node_ok(r.a) && node_ok(r.b)) {
            bad_ref(&r.name, &mut out);
        }
        if !(r.ohms >= 0.0 && r.ohms.is_finite()) {
            bad_value(&r.name, r.ohms, &mut out);
        }
    }
    for c in &net.capacitors {
        if !(node_ok(c.a) && node_ok(c.b)) {
            bad_ref(&c.name, &mut out);
        }
        if !(c.farads >= 0.0 && c.farads.is_finite()) {
            bad_value(&c.name, c.farads, &mut out);
        }
    }
    for l in &net.inductors {
        if !(node_ok(l.a) && node_ok(l.b)) {
            bad_ref(&l.name, &mut out);
        }
        if !(l.henries > 0.0 && l.henries.is_finite()) {
            bad_value(&l.name, l.henries, &mut out);
        }
    }
    for d in &net.drivers {
        if !node_ok(d.node) || d.node.is_ground() {
            bad_ref(&d.name, &mut out);
        }
        if !(d.resistance >= 0.0 && d.resistance.is_finite()) {
            bad_value(&d.name, d.resistance, &mut out);
        }
    }
    let nb = net.inductors.len();
    let mut mutual_ok = true;
    for m in &net.mutuals {
        if m.branch_a >= nb || m.branch_b >= nb || m.branch_a == m.branch_b {
            bad_ref(&m.name, &mut out);
            mutual_ok = false;
        }
        if !m.henries.is_finite() {
            bad_value(&m.name, m.henries, &mut out);
            mutual_ok = false;
        }
    }
    if !out.is_empty() {
        return out;
    }

    if mutual_ok && nb > 0 {
        let mut lm = vec![0.0; nb * nb];
        for (i, l) in net.inductors.iter().enumerate() {
            lm[i * nb + i] = l.henries;
        }
        for m in &net.mutuals {
            lm[m.branch_a * nb + m.branch_b] += m.henries;
            lm[m.branch_b * nb + m.branch_a] += m.henries;
        }
        if !is_positive_definite(&lm, nb) {
            let worst = net
                .mutuals
                .iter()
                .map(|m| {
                    let k = m.henries.abs()
                        / (net.inductors[m.branch_a].henries * net.inductors[m.branch_b].henries).sqrt();
                    (m, k)
                })
                .fold(None, |best: Option<(&Mutual, f64)>, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                });
            let (a, b, k, element) = match worst {
                Some((m, k)) => (
                    net.inductors[m.branch_a].name.clone(),
                    net.inductors[m.branch_b].name.clone(),
                    k,
                    m.name.clone(),
                ),
                None => (String::new(), String::new(), 0.0, "L".into()),
            };
            out.push(Finding {
                message: format!("inductance matrix is not positive definite (worst pair {a}/{b}, k = {k:.6})"),
                kind: FindingKind::Inductance { a, b, k },
                element,
            });
        }
    }

    let mut parent: Vec<usize> = (0..n_nodes).collect();
    for r in &net.resistors {
        union(&mut parent, r.a.0, r.b.0);
    }
    for l in &net.inductors {
        union(&mut parent, l.a.0, l.b.0);
    }
    for d in &net.drivers {
        union(&mut parent, d.node.0, 0);
    }
    for (i, node) in net.nodes.iter().enumerate().skip(1) {
        if find(&mut parent, i) != find(&mut parent, 0) {
            out.push(Finding {
                kind: FindingKind::Floating,
                element: node.name.clone(),
                message: format!("node {} has no DC path to ground", node.name),
            });
        }
    }
    out
}

/// Line totals in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineTotals {
    pub r_total: f64,
    pub l_total: f64,
    pub c_total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTotals {
    pub m_total: f64,
    pub cm_total: f64,
}

/// The three reference configurations plus the generalization to any
/// number of uniformly spaced shield taps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    NoShield,
    /// Shield grounded at both ends and at `taps` uniformly spaced interior
    /// points.
    Shield { taps: usize },
}

impl Scenario {
    pub const ALL_PRESETS: [Scenario; 3] = [
        Scenario::NoShield,
        Scenario::Shield { taps: 0 },
        Scenario::Shield { taps: 3 },
    ];

    pub fn name(&self) -> String {
        match self {
            Scenario::NoShield => "no-shield".into(),
            Scenario::Shield { taps: 0 } => "shield".into(),
            Scenario::Shield { taps } => format!("shield-{taps}taps"),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Scenario {
    type Err = NetBuildError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no-shield" => Ok(Scenario::NoShield),
            "shield" => Ok(Scenario::Shield { taps: 0 }),
            other => other
                .strip_prefix("shield-")
                .and_then(|rest| rest.strip_suffix("taps"))
                .and_then(|n| n.parse::<usize>().ok())
                .map(|taps| Scenario::Shield { taps })
                .ok_or_else(|| NetBuildError::UnknownPreset(s.to_string())),
        }
    }
}

/// Parameters shared by the preset scenarios, all SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    pub signal: LineTotals,
    pub shield: LineTotals,
    /// Aggressor-victim coupling. Without a shield both terms apply; with
    /// a shield only `m_total` is kept.
    pub unshielded: PairTotals,
    /// Signal-to-shield coupling.
    pub shielded: PairTotals,
    pub termination: TerminationSpec,
    pub tie_resistance_ohm: f64,
    pub n_segments: usize,
}

impl PresetParams {
    /// Reference parameter set, with uH / pF labels read literally.
    pub fn reference() -> Self {
        let signal = LineTotals {
            r_total: 500.0,
            l_total: 83.24e-6,
            c_total: 134.41e-12,
        };
        Self {
            signal,
            shield: signal,
            unshielded: PairTotals {
                m_total: 8.21e-6,
                cm_total: 69.50e-12,
            },
            shielded: PairTotals {
                m_total: 7.51e-6,
                cm_total: 27.47e-12,
            },
            termination: TerminationSpec::default(),
            tie_resistance_ohm: 0.0,
            n_segments: 12,
        }
    }

    pub fn with_segments(mut self, n_segments: usize) -> Self {
        self.n_segments = n_segments;
        self
    }
}

impl Default for PresetParams {
    fn default() -> Self {
        Self::reference()
    }
}

fn line(name: &str, role: LineRole, t: &LineTotals) -> LineSpec {
    LineSpec {
        name: name.into(),
        role,
        r_total: t.r_total,
        l_total: t.l_total,
        c_total: t.c_total,
    }
}

/// Inputs for a scenario. Lines are ordered aggressor, victim, shield.
pub fn preset_inputs(scenario: Scenario, params: &PresetParams) -> LadderInputs {
    let agg = line("agg", LineRole::Aggressor, &params.signal);
    let vic = line("vic", LineRole::Victim, &params.signal);
    let (lines, couplings, taps) = match scenario {
        Scenario::NoShield => (
            vec![agg, vic],
            vec![PairCoupling {
                a: 0,
                b: 1,
                m_total: params.unshielded.m_total,
                cm_total: params.unshielded.cm_total,
            }],
            None,
        ),
        Scenario::Shield { taps } => {
            let side = |a| PairCoupling {
                a,
                b: 2,
                m_total: params.shielded.m_total,
                cm_total: params.shielded.cm_total,
            };
            (
                vec![agg, vic, line("sh", LineRole::Shield, &params.shield)],
                vec![
                    PairCoupling {
                        a: 0,
                        b: 1,
                        m_total: params.unshielded.m_total,
                        cm_total: 0.0,
                    },
                    side(0),
                    side(1),
                ],
                Some(TapSchedule::uniform(taps).with_tie_resistance(params.tie_resistance_ohm)),
            )
        }
    };
    LadderInputs {
        scenario: scenario.name(),
        lines,
        couplings,
        termination: params.termination,
        taps,
        n_segments: params.n_segments,
    }
}

/// Builds one of the named configurations.
pub fn scenario_preset(name: &str, params: &PresetParams) -> Result<CoupledNetwork> {
    let scenario: Scenario = name.parse()?;
    preset_inputs(scenario, params).build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_line() -> Vec<LineSpec> {
        vec![LineSpec {
            name: "a".into(),
            role: LineRole::Aggressor,
            r_total: 10.0,
            l_total: 1e-9,
            c_total: 1e-12,
        }]
    }

    #[test]
    fn smallest_ladder() {
        let net = build_ladder("t", &one_line(), &[], &TerminationSpec::default(), None, 1).unwrap();
        assert_eq!(net.node_count(), 3);
        let names: Vec<_> = net.nodes[1..].iter().map(|n| n.name.as_str()).collect();
        assert_eq!(names, ["a_in", "a_m1", "a_1"]);
        assert_eq!(net.drivers.len(), 1);
        assert_eq!(net.resistors.len(), 1);
        assert_eq!(net.inductors.len(), 1);
        assert_eq!(net.capacitors.iter().filter(|c| c.kind == CapacitorKind::Shunt).count(), 1);
        assert_eq!(net.capacitors.iter().filter(|c| c.kind == CapacitorKind::Load).count(), 1);
        assert!(validate_network(&net).is_empty());
    }

    #[test]
    fn tap_schedule_rules() {
        assert_eq!(TapSchedule::uniform(3).fractions, vec![0.25, 0.5, 0.75]);
        assert!(TapSchedule::uniform(0).fractions.is_empty());
        let bad = TapSchedule {
            fractions: vec![0.5, 0.25],
            tie_resistance_ohm: 0.0,
        };
        assert!(matches!(bad.validate(), Err(NetBuildError::InvalidTaps(_))));
        let edge = TapSchedule {
            fractions: vec![1.0],
            tie_resistance_ohm: 0.0,
        };
        assert!(edge.validate().is_err());
        assert_eq!(TapSchedule::uniform(3).node_indices(12), Ok(vec![3, 6, 9]));
        assert_eq!(TapSchedule::uniform(4).node_indices(12), Err(0.2));
        assert_eq!(compatible_segments(&TapSchedule::uniform(4).fractions, 12), Some(15));
    }

    #[test]
    fn misplaced_tap_suggests_segments() {
        let mut inputs = preset_inputs(Scenario::Shield { taps: 4 }, &PresetParams::reference());
        inputs.n_segments = 12;
        match inputs.build() {
            Err(NetBuildError::TapPlacement {
                suggestion: Some(15), ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn taps_need_a_shield() {
        let err = build_ladder(
            "t",
            &one_line(),
            &[],
            &TerminationSpec::default(),
            Some(&TapSchedule::uniform(1)),
            2,
        )
        .unwrap_err();
        assert_eq!(err, NetBuildError::NoShield);
    }

    #[test]
    fn zero_segments_rejected() {
        assert_eq!(
            build_ladder("t", &one_line(), &[], &TerminationSpec::default(), None, 0).unwrap_err(),
            NetBuildError::NoSegments
        );
    }

    #[test]
    fn indefinite_coupling_is_reported_by_name() {
        let mut lines = one_line();
        lines.push(LineSpec {
            name: "b".into(),
            role: LineRole::Victim,
            ..lines[0].clone()
        });
        let c = [PairCoupling {
            a: 0,
            b: 1,
            m_total: 1.2e-9,
            cm_total: 0.0,
        }];
        match build_ladder("t", &lines, &c, &TerminationSpec::default(), None, 2) {
            Err(NetBuildError::Coupling { a, b, k }) => {
                assert_eq!((a.as_str(), b.as_str()), ("La_1", "Lb_1"));
                assert!((k - 1.2).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn injected_faults_are_found() {
        let net = scenario_preset("no-shield", &PresetParams::reference().with_segments(2)).unwrap();
        assert!(validate_network(&net).is_empty());

        let mut bad = net.clone();
        let (la, lb) = (bad.inductors[0].henries, bad.inductors[2].henries);
        bad.mutuals.push(Mutual {
            name: "Kbad".into(),
            branch_a: 0,
            branch_b: 2,
            henries: 1.2 * (la * lb).sqrt(),
        });
        // the aligned mutual already present adds to the same entry
        bad.mutuals.retain(|m| m.name != "Kagg_vic_1");
        let f = validate_network(&bad);
        assert_eq!(f.len(), 1, "{f:?}");
        assert!(matches!(f[0].kind, FindingKind::Inductance { .. }));

        let mut floating = net.clone();
        floating.nodes.push(Node {
            name: "orphan".into(),
            line: None,
            kind: NodeKind::Segment(1),
        });
        let orphan = NodeId(floating.nodes.len() - 1);
        floating.capacitors.push(Capacitor {
            name: "Corphan".into(),
            a: orphan,
            b: NodeId(3),
            farads: 1e-15,
            kind: CapacitorKind::Coupling,
        });
        let f = validate_network(&floating);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].kind, FindingKind::Floating);
        assert_eq!(f[0].element, "orphan");

        let mut dangling = net;
        dangling.resistors[0].b = NodeId(999);
        assert_eq!(validate_network(&dangling)[0].kind, FindingKind::DanglingReference);
    }

    #[test]
    fn preset_names_round_trip() {
        for s in Scenario::ALL_PRESETS {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert_eq!("shield-3taps".parse::<Scenario>().unwrap(), Scenario::Shield { taps: 3 });
        assert!(matches!("ground-plane".parse::<Scenario>(), Err(NetBuildError::UnknownPreset(_))));
        assert!(scenario_preset("shield-xtaps", &PresetParams::reference()).is_err());
    }
}
