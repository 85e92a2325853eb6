//! Turns a config into extracted electricals and ladder inputs.

use serde::Serialize;
use xtalk_core::engine::{SimConfig, Stimulus};
use xtalk_core::extract::{extract_all, InterconnectGeometry, LineElectricals, Overrides, PairSpec, UnitConvention};
use xtalk_core::netbuild::{
    LadderInputs, LineRole, LineSpec, PairCoupling, Scenario, TapSchedule, TerminationSpec,
};

use crate::config::{PairOverride, ToolkitConfig};
use crate::error::{CliError, Result};

/// Which override block a pair draws from.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PairClass {
    Unshielded,
    Shielded,
    Explicit(PairOverride),
}

/// Everything a run needs, resolved from one config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub scenario: String,
    /// Extracted values in formula units, after overrides.
    pub electricals: LineElectricals,
    /// SI element totals handed to the ladder builder.
    pub inputs: LadderInputs,
    pub stimulus: Stimulus,
    pub sim: SimConfig,
}

/// Line names, roles, width scales, pair specs and tap fractions.
struct Layout {
    name: String,
    lines: Vec<(String, LineRole, f64)>,
    pairs: Vec<(PairSpec, PairClass)>,
    taps: Option<Vec<f64>>,
}

fn preset_layout(cfg: &ToolkitConfig, preset: &str) -> Result<Layout> {
    let scenario: Scenario = preset.parse()?;
    let g = &cfg.geometry;
    let signals = vec![
        ("agg".to_string(), LineRole::Aggressor, 1.0),
        ("vic".to_string(), LineRole::Victim, 1.0),
    ];
    let signal_pair = |adjacent| PairSpec {
        a: 0,
        b: 1,
        separation_um: g.separation_um,
        adjacent,
    };
    Ok(match scenario {
        Scenario::NoShield => Layout {
            name: scenario.name(),
            lines: signals,
            pairs: vec![(signal_pair(true), PairClass::Unshielded)],
            taps: None,
        },
        Scenario::Shield { taps } => {
            let gap = g.effective_shield_separation();
            if !(gap > 0.0) {
                return Err(CliError::Config(format!(
                    "shield width scale {} leaves no gap to the signal lines",
                    g.shield_width_scale
                )));
            }
            let side = |a| PairSpec {
                a,
                b: 2,
                separation_um: gap,
                adjacent: true,
            };
            let mut lines = signals;
            lines.push(("sh".to_string(), LineRole::Shield, g.shield_width_scale));
            Layout {
                name: scenario.name(),
                lines,
                pairs: vec![
                    // the signal lines no longer see each other capacitively
                    // but their mutual inductance stays
                    (signal_pair(false), PairClass::Unshielded),
                    (side(0), PairClass::Shielded),
                    (side(1), PairClass::Shielded),
                ],
                taps: Some(TapSchedule::uniform(taps).fractions),
            }
        }
    })
}

fn explicit_layout(cfg: &ToolkitConfig) -> Result<Layout> {
    let sc = &cfg.scenario;
    let index = |name: &str| {
        sc.lines
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| CliError::Config(format!("scenario.couplings: unknown line '{name}'")))
    };
    let mut pairs = Vec::new();
    for c in &sc.couplings {
        pairs.push((
            PairSpec {
                a: index(&c.a)?,
                b: index(&c.b)?,
                separation_um: c.separation_um,
                adjacent: c.adjacent,
            },
            PairClass::Explicit(PairOverride {
                m_total: c.m_total,
                cm_total: c.cm_total,
            }),
        ));
    }
    let has_shield = sc.lines.iter().any(|l| l.role == LineRole::Shield);
    Ok(Layout {
        name: sc.name.clone().unwrap_or_else(|| "custom".into()),
        lines: sc.lines.iter().map(|l| (l.name.clone(), l.role, l.width_scale)).collect(),
        pairs,
        taps: (has_shield || !sc.taps.is_empty()).then(|| sc.taps.clone()),
    })
}

/// Extraction for an arbitrary line layout under the config's overrides.
fn electricals(cfg: &ToolkitConfig, layout: &Layout) -> Result<LineElectricals> {
    let g = &cfg.geometry;
    let geometries: Vec<(String, InterconnectGeometry)> =
        layout.lines.iter().map(|(name, _, scale)| (name.clone(), g.wire(*scale))).collect();
    let specs: Vec<PairSpec> = layout.pairs.iter().map(|p| p.0).collect();
    let o = &cfg.overrides;
    let line_overrides = Overrides {
        r_total: o.r_total,
        l_total: o.l_total,
        c_total: o.c_total,
        ..Overrides::default()
    };
    let coeffs = g.coupling_coefficients()?;
    let mut e = extract_all(&geometries, &specs, &coeffs, g.mutual_convention, &line_overrides)?;
    for (pair, (_, class)) in e.pairs.iter_mut().zip(&layout.pairs) {
        let over = match class {
            PairClass::Unshielded => o.unshielded,
            PairClass::Shielded => o.shielded,
            PairClass::Explicit(p) => *p,
        };
        if let Some(m) = over.m_total {
            pair.m_total = m;
        }
        if let (Some(c), Some(slot)) = (over.cm_total, pair.cm_total.as_mut()) {
            *slot = c;
        }
    }
    e.validate()?;
    Ok(e)
}

fn ladder_inputs(cfg: &ToolkitConfig, layout: &Layout, e: &LineElectricals) -> LadderInputs {
    let units: UnitConvention = cfg.geometry.units;
    let lines = layout
        .lines
        .iter()
        .zip(&e.lines)
        .map(|((name, role, _), v)| LineSpec {
            name: name.clone(),
            role: *role,
            r_total: units.resistance_ohm(v.r_total),
            l_total: units.inductance_h(v.l_total),
            c_total: units.capacitance_f(v.c_total),
        })
        .collect();
    let couplings = e
        .pairs
        .iter()
        .map(|p| PairCoupling {
            a: p.a,
            b: p.b,
            m_total: units.inductance_h(p.m_total),
            cm_total: p.cm_total.map_or(0.0, |c| units.capacitance_f(c)),
        })
        .collect();
    LadderInputs {
        scenario: layout.name.clone(),
        lines,
        couplings,
        termination: TerminationSpec::from(cfg.termination),
        taps: layout.taps.as_ref().map(|f| TapSchedule {
            fractions: f.clone(),
            tie_resistance_ohm: cfg.scenario.tie_resistance_ohm,
        }),
        n_segments: cfg.sim.n_segments,
    }
}

pub fn resolve(cfg: &ToolkitConfig) -> Result<Resolved> {
    cfg.check()?;
    let layout = match &cfg.scenario.preset {
        Some(p) => preset_layout(cfg, p)?,
        None => explicit_layout(cfg)?,
    };
    let electricals = electricals(cfg, &layout)?;
    let inputs = ladder_inputs(cfg, &layout, &electricals);
    Ok(Resolved {
        scenario: layout.name,
        electricals,
        inputs,
        stimulus: cfg.stimulus.to_stimulus()?,
        sim: cfg.sim.to_sim_config()?,
    })
}

/// Table-style report rows: extraction for the unshielded and shielded
/// spacings side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractReport {
    pub coefficients: String,
    pub mutual_convention: String,
    pub without_shield: ReportColumn,
    pub with_shield: ReportColumn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportColumn {
    pub separation_um: f64,
    pub r_line_ohm: f64,
    pub l_line: f64,
    pub c_line: f64,
    pub l_m: f64,
    pub c_m: f64,
}

pub fn extract_report(cfg: &ToolkitConfig) -> Result<ExtractReport> {
    let column = |separation_um: f64, class: PairClass| -> Result<ReportColumn> {
        let layout = Layout {
            name: String::new(),
            lines: vec![
                ("a".into(), LineRole::Aggressor, 1.0),
                ("b".into(), LineRole::Victim, 1.0),
            ],
            pairs: vec![(
                PairSpec {
                    a: 0,
                    b: 1,
                    separation_um,
                    adjacent: true,
                },
                class,
            )],
            taps: None,
        };
        let e = electricals(cfg, &layout)?;
        let (line, pair) = (&e.lines[0], &e.pairs[0]);
        Ok(ReportColumn {
            separation_um,
            r_line_ohm: line.r_total,
            l_line: line.l_total,
            c_line: line.c_total,
            l_m: pair.m_total,
            c_m: pair.cm_total.unwrap_or(0.0),
        })
    };
    let g = &cfg.geometry;
    Ok(ExtractReport {
        coefficients: g.coefficients.clone(),
        mutual_convention: match g.mutual_convention {
            xtalk_core::extract::MutualConvention::BracketOnly => "bracket-only".into(),
            xtalk_core::extract::MutualConvention::Full => "full".into(),
        },
        without_shield: column(g.separation_um, PairClass::Unshielded)?,
        with_shield: column(g.effective_shield_separation(), PairClass::Shielded)?,
    })
}

impl ExtractReport {
    pub fn to_text(&self) -> String {
        let (a, b) = (&self.without_shield, &self.with_shield);
        let rows = [
            ("Separation (um)", a.separation_um, b.separation_um, 1.0),
            ("R_line (ohm)", a.r_line_ohm, b.r_line_ohm, 1.0),
            ("L_line (uH)", a.l_line, b.l_line, 1.0),
            ("C_line (pF/m)", a.c_line, b.c_line, 1e12),
            ("L_m (uH)", a.l_m, b.l_m, 1.0),
            ("C_m (pF/m)", a.c_m, b.c_m, 1e12),
        ];
        let mut out = format!(
            "Extracted parameters (coefficients: {}, mutual: {})\n{:<18}{:>16}{:>16}\n",
            self.coefficients, self.mutual_convention, "Parameter", "Without shield", "With shield"
        );
        for (label, x, y, scale) in rows {
            out.push_str(&format!("{label:<18}{:>16.4}{:>16.4}\n", x * scale, y * scale));
        }
        out
    }
}
