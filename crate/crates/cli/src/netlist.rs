//! SPICE deck export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xtalk_core::engine::{SimConfig, Stimulus};
use xtalk_core::netbuild::{CoupledNetwork, NodeId, SourceRef};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetlistError {
    #[error("coupling {name} has k = {k:.6}; a K card needs k < 1")]
    CouplingTooStrong { name: String, k: f64 },
    #[error("element {0} references a missing node or branch")]
    Dangling(String),
}

/// How zero-ohm elements (ideal shield ties, ideal drivers) are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieStyle {
    /// A 0 V voltage source in place of the resistor.
    #[default]
    ZeroVoltSource,
    /// A 1e-9 ohm resistor, for simulators that reject V-source loops.
    TinyResistor,
}

impl std::str::FromStr for TieStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zero-volt-source" => Ok(TieStyle::ZeroVoltSource),
            "tiny-resistor" => Ok(TieStyle::TinyResistor),
            _ => Err(format!("unknown tie style '{s}' (expected zero-volt-source or tiny-resistor)")),
        }
    }
}

const TINY_OHMS: f64 = 1e-9;

/// Shortest representation that reads back to the same f64.
fn num(v: f64) -> String {
    format!("{v:e}")
}

/// `M / sqrt(La Lb)` for one mutual entry.
pub fn coupling_k(net: &CoupledNetwork, idx: usize) -> Option<f64> {
    let m = net.mutuals.get(idx)?;
    let la = net.inductors.get(m.branch_a)?.henries;
    let lb = net.inductors.get(m.branch_b)?.henries;
    Some(m.henries / (la * lb).sqrt())
}

pub fn export_netlist(
    net: &CoupledNetwork,
    stimulus: &Stimulus,
    sim: &SimConfig,
    ties: TieStyle,
) -> Result<String, NetlistError> {
    let node = |id: NodeId| -> Result<&str, NetlistError> {
        net.nodes
            .get(id.0)
            .map(|n| n.name.as_str())
            .ok_or_else(|| NetlistError::Dangling(format!("node #{}", id.0)))
    };
    let mut ks = Vec::with_capacity(net.mutuals.len());
    for (i, m) in net.mutuals.iter().enumerate() {
        let k = coupling_k(net, i).ok_or_else(|| NetlistError::Dangling(m.name.clone()))?;
        if !(k < 1.0) {
            return Err(NetlistError::CouplingTooStrong {
                name: m.name.clone(),
                k,
            });
        }
        ks.push(k);
    }

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "* {} coupled interconnect", net.scenario);
    let _ = writeln!(
        w,
        "* {} lines, {} segments per line, L-section ladders",
        net.lines.len(),
        net.n_segments
    );
    let _ = writeln!(
        w,
        "* K cards: k = M / sqrt(L1 L2) between aligned segments, M = total mutual / segments"
    );
    let tie_note = match ties {
        TieStyle::ZeroVoltSource => "0 V sources",
        TieStyle::TinyResistor => "1e-9 ohm resistors",
    };
    let _ = writeln!(w, "* zero-ohm ties written as {tie_note}");

    let zero_ohm = |w: &mut String, name: &str, a: &str, b: &str| match ties {
        TieStyle::ZeroVoltSource => {
            let _ = writeln!(w, "V{} {a} {b} 0", name.strip_prefix('R').unwrap_or(name));
        }
        TieStyle::TinyResistor => {
            let _ = writeln!(w, "{name} {a} {b} {}", num(TINY_OHMS));
        }
    };

    let _ = writeln!(w, "\n* sources and drivers");
    let pwl: Vec<String> = stimulus
        .corners(sim.dt)
        .iter()
        .map(|&(t, v)| format!("{} {}", num(t), num(v)))
        .collect();
    for d in &net.drivers {
        match d.source {
            SourceRef::Driven => {
                let _ = writeln!(w, "V{} {} 0 PWL({})", d.source_name, d.source_name, pwl.join(" "));
            }
            SourceRef::Quiet => {
                let _ = writeln!(w, "V{} {} 0 0", d.source_name, d.source_name);
            }
        }
        let target = node(d.node)?;
        if d.resistance == 0.0 {
            zero_ohm(w, &d.name, &d.source_name, target);
        } else {
            let _ = writeln!(w, "{} {} {} {}", d.name, d.source_name, target, num(d.resistance));
        }
    }

    let _ = writeln!(w, "\n* line segments");
    for r in &net.resistors {
        let (a, b) = (node(r.a)?, node(r.b)?);
        if r.ohms == 0.0 {
            zero_ohm(w, &r.name, a, b);
        } else {
            let _ = writeln!(w, "{} {a} {b} {}", r.name, num(r.ohms));
        }
    }
    for l in &net.inductors {
        let _ = writeln!(w, "{} {} {} {}", l.name, node(l.a)?, node(l.b)?, num(l.henries));
    }
    for c in &net.capacitors {
        let _ = writeln!(w, "{} {} {} {}", c.name, node(c.a)?, node(c.b)?, num(c.farads));
    }

    if !net.mutuals.is_empty() {
        let _ = writeln!(w, "\n* inductive coupling");
    }
    for (m, k) in net.mutuals.iter().zip(ks) {
        let (la, lb) = (&net.inductors[m.branch_a].name, &net.inductors[m.branch_b].name);
        let _ = writeln!(w, "{} {la} {lb} {}", m.name, num(k));
    }

    let _ = writeln!(w, "\n.tran {} {}", num(sim.dt), num(sim.t_end));
    let _ = writeln!(w, ".end");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use xtalk_core::engine::Method;
    use xtalk_core::netbuild::{build_ladder, LineRole, LineSpec, TerminationSpec};

    fn one_line() -> CoupledNetwork {
        let lines = [LineSpec {
            name: "a".into(),
            role: LineRole::Aggressor,
            r_total: 10.0,
            l_total: 1e-9,
            c_total: 1e-12,
        }];
        build_ladder("single", &lines, &[], &TerminationSpec::default(), None, 1).unwrap()
    }

    #[test]
    fn single_segment_deck_has_six_elements() {
        let deck = export_netlist(
            &one_line(),
            &Stimulus::default(),
            &SimConfig::new(1e-11, 1e-9, Method::Trapezoidal),
            TieStyle::default(),
        )
        .unwrap();
        let cards: Vec<&str> = deck
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('*') && !l.starts_with('.'))
            .collect();
        let names: Vec<&str> = cards.iter().map(|c| c.split(' ').next().unwrap()).collect();
        assert_eq!(names, ["Va_src", "Rdrv_a", "Ra_1", "La_1", "Ca_1", "Cload_a"]);
        assert!(deck.contains("\n.tran 1e-11 1e-9\n.end\n"));
        assert!(deck.contains("PWL(0e0 0e0 1e-9 1e0)"));
    }

    #[test]
    fn too_strong_coupling_is_refused() {
        let mut net = one_line();
        net.inductors.push(net.inductors[0].clone());
        net.mutuals.push(xtalk_core::netbuild::Mutual {
            name: "Kbad".into(),
            branch_a: 0,
            branch_b: 1,
            henries: 1e-9,
        });
        let err = export_netlist(
            &net,
            &Stimulus::default(),
            &SimConfig::default(),
            TieStyle::default(),
        )
        .unwrap_err();
        assert!(matches!(err, NetlistError::CouplingTooStrong { .. }));
    }
}
