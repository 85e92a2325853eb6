//! Modified nodal analysis stamps.
//!
//! Unknowns are ordered: non-ground node voltages, inductor branch
//! currents, then one current per ideal (zero-ohm) element. The system is
//! `G x + C dx/dt = excitation * s(t)` where `s` is the driven stimulus.

use super::lu::Matrix;
use super::EngineError;
use crate::netbuild::{CoupledNetwork, NodeId, SourceRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unknown {
    Node(NodeId),
    Inductor(usize),
    /// Current through a zero-ohm resistor (index into `resistors`).
    Short(usize),
    /// Current through a zero-ohm driver (index into `drivers`).
    Source(usize),
}

#[derive(Debug, Clone)]
pub struct MnaSystem {
    pub g: Matrix,
    pub c: Matrix,
    /// Right-hand side per volt of driven stimulus.
    pub excitation: Vec<f64>,
    /// Right-hand side per volt applied to every quiet source (normally
    /// unused, kept so DC checks can drive quiet lines too).
    pub quiet_excitation: Vec<f64>,
    pub unknowns: Vec<Unknown>,
    pub n_nodes: usize,
    pub n_inductors: usize,
}

impl MnaSystem {
    pub fn size(&self) -> usize {
        self.unknowns.len()
    }

    /// Describes an unknown for error messages.
    pub fn label(&self, net: &CoupledNetwork, idx: usize) -> String {
        match self.unknowns.get(idx) {
            Some(Unknown::Node(id)) => format!("node {}", net.node_name(*id)),
            Some(Unknown::Inductor(j)) => format!("branch {}", net.inductors[*j].name),
            Some(Unknown::Short(j)) => format!("branch {}", net.resistors[*j].name),
            Some(Unknown::Source(j)) => format!("source {}", net.drivers[*j].source_name),
            None => format!("unknown #{idx}"),
        }
    }
}

fn row(id: NodeId) -> Option<usize> {
    (!id.is_ground()).then(|| id.0 - 1)
}

fn stamp_conductance(g: &mut Matrix, a: NodeId, b: NodeId, value: f64) {
    let (ra, rb) = (row(a), row(b));
    if let Some(i) = ra {
        g[(i, i)] += value;
    }
    if let Some(j) = rb {
        g[(j, j)] += value;
    }
    if let (Some(i), Some(j)) = (ra, rb) {
        g[(i, j)] -= value;
        g[(j, i)] -= value;
    }
}

/// Branch current `k` flows from `a` to `b`; its row enforces
/// `v_b - v_a + (storage terms) = rhs`.
fn stamp_branch(g: &mut Matrix, a: NodeId, b: NodeId, k: usize) {
    if let Some(i) = row(a) {
        g[(i, k)] += 1.0;
        g[(k, i)] -= 1.0;
    }
    if let Some(j) = row(b) {
        g[(j, k)] -= 1.0;
        g[(k, j)] += 1.0;
    }
}

/// Stamps every element of `net`. Fails if some node takes part in no
/// element at all.
pub fn assemble(net: &CoupledNetwork) -> Result<MnaSystem, EngineError> {
    let n_nodes = net.node_count();
    let n_ind = net.inductors.len();
    let mut unknowns: Vec<Unknown> = (1..=n_nodes).map(|i| Unknown::Node(NodeId(i))).collect();
    unknowns.extend((0..n_ind).map(Unknown::Inductor));
    for (j, r) in net.resistors.iter().enumerate() {
        if r.ohms == 0.0 {
            unknowns.push(Unknown::Short(j));
        }
    }
    for (j, d) in net.drivers.iter().enumerate() {
        if d.resistance == 0.0 {
            unknowns.push(Unknown::Source(j));
        }
    }
    let size = unknowns.len();
    let mut g = Matrix::zeros(size);
    let mut c = Matrix::zeros(size);
    let mut excitation = vec![0.0; size];
    let mut quiet_excitation = vec![0.0; size];
    let mut touched = vec![false; n_nodes + 1];
    let mut next_extra = n_nodes + n_ind;

    for r in &net.resistors {
        touched[r.a.0] = true;
        touched[r.b.0] = true;
        if r.ohms > 0.0 {
            stamp_conductance(&mut g, r.a, r.b, 1.0 / r.ohms);
        } else {
            stamp_branch(&mut g, r.a, r.b, next_extra);
            next_extra += 1;
        }
    }
    for cap in &net.capacitors {
        touched[cap.a.0] = true;
        touched[cap.b.0] = true;
        stamp_conductance(&mut c, cap.a, cap.b, cap.farads);
    }
    for (j, l) in net.inductors.iter().enumerate() {
        touched[l.a.0] = true;
        touched[l.b.0] = true;
        let k = n_nodes + j;
        stamp_branch(&mut g, l.a, l.b, k);
        c[(k, k)] += l.henries;
    }
    for m in &net.mutuals {
        let (i, j) = (n_nodes + m.branch_a, n_nodes + m.branch_b);
        c[(i, j)] += m.henries;
        c[(j, i)] += m.henries;
    }
    for d in &net.drivers {
        touched[d.node.0] = true;
        let rhs = match d.source {
            SourceRef::Driven => &mut excitation,
            SourceRef::Quiet => &mut quiet_excitation,
        };
        let Some(i) = row(d.node) else { continue };
        if d.resistance > 0.0 {
            let gd = 1.0 / d.resistance;
            g[(i, i)] += gd;
            rhs[i] += gd;
        } else {
            // ideal source: current k leaves the node into the source,
            // row k pins v_node = s(t)
            let k = next_extra;
            next_extra += 1;
            g[(i, k)] += 1.0;
            g[(k, i)] += 1.0;
            rhs[k] += 1.0;
        }
    }
    if let Some(orphan) = (1..=n_nodes).find(|&i| !touched[i]) {
        return Err(EngineError::Assembly {
            culprit: format!("node {}", net.nodes[orphan].name),
        });
    }
    Ok(MnaSystem {
        g,
        c,
        excitation,
        quiet_excitation,
        unknowns,
        n_nodes,
        n_inductors: n_ind,
    })
}
