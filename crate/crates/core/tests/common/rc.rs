//! Source behind a resistor into a grounded capacitor, and its error
//! against the closed-form charging curve.

#![allow(dead_code)]

use xtalk_core::engine::{run_transient, Method, SimConfig, Stimulus};
use xtalk_core::netbuild::{
    Capacitor, CapacitorKind, CoupledNetwork, Driver, Node, NodeId, NodeKind, SourceRef,
};

pub fn rc_network(r: f64, c: f64) -> CoupledNetwork {
    let node = |name: &str, kind| Node {
        name: name.into(),
        line: None,
        kind,
    };
    CoupledNetwork {
        scenario: "rc".into(),
        n_segments: 1,
        nodes: vec![node("0", NodeKind::Ground), node("out", NodeKind::Segment(1))],
        lines: vec![],
        resistors: vec![],
        capacitors: vec![Capacitor {
            name: "C1".into(),
            a: NodeId(1),
            b: NodeId::GROUND,
            farads: c,
            kind: CapacitorKind::Shunt,
        }],
        inductors: vec![],
        mutuals: vec![],
        drivers: vec![Driver {
            name: "R1".into(),
            source_name: "src".into(),
            node: NodeId(1),
            resistance: r,
            source: SourceRef::Driven,
        }],
    }
}

/// Max |v(t_k) - (1 - exp(-t_k/RC))| over `[0, 5 RC]` for a unit step,
/// with R = C = 1.
pub fn rc_max_error(method: Method, dt: f64) -> f64 {
    let net = rc_network(1.0, 1.0);
    let w = run_transient(&net, &Stimulus::step(1.0), &SimConfig::new(dt, 5.0, method)).unwrap();
    let v = w.node("out").unwrap();
    w.time
        .iter()
        .zip(v)
        .map(|(t, v)| (v - (1.0 - (-t).exp())).abs())
        .fold(0.0, f64::max)
}
