//! Closed-form parasitic extraction for parallel on-chip interconnects.
//!
//! All formulas are evaluated exactly as written and return "formula
//! units": inductances in the units produced by the `0.002 * l` prefactor
//! with lengths in micrometers, capacitances in farads per meter. The
//! [`UnitConvention`] type decides how those numbers become element values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vacuum permittivity used by the capacitance formulas (F/m).
pub const EPS0: f64 = 8.86e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("domain error: {name} must be > 0 (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("domain error: {name} must be >= {min} (got {value})")]
    BelowMinimum {
        name: &'static str,
        value: f64,
        min: f64,
    },
    #[error("line {line} electricals are not usable: {what} = {value}")]
    InvalidLine {
        line: String,
        what: &'static str,
        value: f64,
    },
    #[error("coupling between {a} and {b} has k = {k:.6} (must be < 1)")]
    CouplingTooStrong { a: String, b: String, k: f64 },
    #[error("pair ({a}, {b}) references a line that does not exist")]
    UnknownLine { a: usize, b: usize },
    #[error("no separation given for adjacent pair ({a}, {b})")]
    MissingSeparation { a: usize, b: usize },
}

pub type Result<T> = std::result::Result<T, ExtractError>;

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ExtractError::NonPositive { name, value })
    }
}

/// Physical description of one wire (or of a wire and its named neighbor,
/// through `separation_um`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterconnectGeometry {
    pub length_um: f64,
    pub width_um: f64,
    pub thickness_um: f64,
    /// Track-to-substrate height.
    pub height_um: f64,
    pub separation_um: f64,
    pub eps_rel: f64,
    pub sheet_res_ohm_sq: f64,
    pub lambda: f64,
}

impl Default for InterconnectGeometry {
    /// 90 nm-class global wire: 5 mm long, 2 um wide/thick, 2 um above the
    /// substrate, SiO2 dielectric, 50 mOhm/sq metal.
    fn default() -> Self {
        Self {
            length_um: 5000.0,
            width_um: 2.0,
            thickness_um: 2.0,
            height_um: 2.0,
            separation_um: 1.0,
            eps_rel: 3.9,
            sheet_res_ohm_sq: 0.05,
            lambda: 1.0,
        }
    }
}

impl InterconnectGeometry {
    pub fn validate(&self) -> Result<()> {
        positive("length_um", self.length_um)?;
        positive("width_um", self.width_um)?;
        positive("thickness_um", self.thickness_um)?;
        positive("height_um", self.height_um)?;
        positive("separation_um", self.separation_um)?;
        positive("sheet_res_ohm_sq", self.sheet_res_ohm_sq)?;
        positive("lambda", self.lambda)?;
        if !(self.eps_rel >= 1.0) {
            return Err(ExtractError::BelowMinimum {
                name: "eps_rel",
                value: self.eps_rel,
                min: 1.0,
            });
        }
        Ok(())
    }

    pub fn with_separation(mut self, separation_um: f64) -> Self {
        self.separation_um = separation_um;
        self
    }
}

/// Coefficients of the coupling-capacitance fit
/// `eps * [a1 (w/h) + a2 (t/h)^e1 + a3 (t/h)^e2] * (d/h)^e_spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub e1: f64,
    pub e2: f64,
    pub e_spacing: f64,
    pub name: &'static str,
}

impl CouplingCoefficients {
    /// The coefficients as printed alongside the formula.
    pub const PRINTED: Self = Self {
        a1: 1.035,
        a2: 1.83,
        a3: -1.07,
        e1: -0.22,
        e2: -0.22,
        e_spacing: -0.34,
        name: "paper-literal",
    };

    /// The set that reproduces the reference coupling capacitances
    /// (69.50 pF/m at d = 1 um, 27.47 pF/m at d = 2 um).
    pub const TABLE_COMPAT: Self = Self {
        a1: 0.03,
        a2: 0.83,
        a3: -0.07,
        e1: 1.0,
        e2: 0.222,
        e_spacing: -1.34,
        name: "table-compat",
    };

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "paper-literal" => Some(Self::PRINTED),
            "table-compat" => Some(Self::TABLE_COMPAT),
            _ => None,
        }
    }
}

impl Default for CouplingCoefficients {
    fn default() -> Self {
        Self::TABLE_COMPAT
    }
}

/// `sheet_res * length / width`, in ohms.
pub fn line_resistance(sheet_res_ohm_sq: f64, length_um: f64, width_um: f64) -> Result<f64> {
    let rs = positive("sheet_res_ohm_sq", sheet_res_ohm_sq)?;
    let l = positive("length_um", length_um)?;
    let w = positive("width_um", width_um)?;
    Ok(rs * (l / w))
}

/// Partial self-inductance `0.002 l [ln(2l/(w+t)) + 0.5 - ln(lambda)]`.
///
/// The result goes negative for very short, fat wires; callers that build
/// networks must check positivity themselves.
pub fn self_inductance(length_um: f64, width_um: f64, thickness_um: f64, lambda: f64) -> Result<f64> {
    let l = positive("length_um", length_um)?;
    let w = positive("width_um", width_um)?;
    let t = positive("thickness_um", thickness_um)?;
    let lambda = positive("lambda", lambda)?;
    Ok(0.002 * l * ((2.0 * l / (w + t)).ln() + 0.5 - lambda.ln()))
}

/// Dimensionless bracket of the mutual-inductance formula:
/// `ln(l/d + sqrt(l^2/d^2)) - sqrt(1 + d^2/l^2) + d/l`.
pub fn mutual_inductance_bracket(length_um: f64, separation_um: f64) -> Result<f64> {
    let l = positive("length_um", length_um)?;
    let d = positive("separation_um", separation_um)?;
    let ratio = l / d;
    Ok((ratio + (ratio * ratio).sqrt()).ln() - (1.0 + (d * d) / (l * l)).sqrt() + d / l)
}

/// Full mutual inductance `0.002 l * bracket`.
pub fn mutual_inductance(length_um: f64, separation_um: f64) -> Result<f64> {
    Ok(0.002 * length_um * mutual_inductance_bracket(length_um, separation_um)?)
}

/// Line-to-substrate capacitance per unit length (F/m).
pub fn line_capacitance(width_um: f64, height_um: f64, thickness_um: f64, eps_rel: f64) -> Result<f64> {
    let w = positive("width_um", width_um)?;
    let h = positive("height_um", height_um)?;
    let t = positive("thickness_um", thickness_um)?;
    let eps = positive("eps_rel", eps_rel)? * EPS0;
    let wh = w / h;
    Ok(eps * (wh + 0.77 + 1.06 * wh.powf(0.25) + 1.06 * (t / h).sqrt()))
}

/// Line-to-line coupling capacitance per unit length (F/m).
pub fn coupling_capacitance(
    width_um: f64,
    height_um: f64,
    thickness_um: f64,
    separation_um: f64,
    eps_rel: f64,
    coeffs: &CouplingCoefficients,
) -> Result<f64> {
    let w = positive("width_um", width_um)?;
    let h = positive("height_um", height_um)?;
    let t = positive("thickness_um", thickness_um)?;
    let d = positive("separation_um", separation_um)?;
    let eps = positive("eps_rel", eps_rel)? * EPS0;
    let th = t / h;
    let bracket = coeffs.a1 * (w / h) + coeffs.a2 * th.powf(coeffs.e1) + coeffs.a3 * th.powf(coeffs.e2);
    Ok(eps * bracket * (d / h).powf(coeffs.e_spacing))
}

/// Which form of the mutual-inductance formula feeds [`extract_all`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutualConvention {
    /// Bracket term only; this reproduces the reference 8.21 / 7.51.
    #[default]
    BracketOnly,
    Full,
}

/// A pair of lines that gets coupling entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub a: usize,
    pub b: usize,
    pub separation_um: f64,
    /// Adjacent pairs get a coupling capacitance; all pairs get a mutual
    /// inductance.
    pub adjacent: bool,
}

/// Values pinned by the user instead of being computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub r_total: Option<f64>,
    pub l_total: Option<f64>,
    pub c_total: Option<f64>,
    pub m_total: Option<f64>,
    pub cm_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineValues {
    pub name: String,
    pub r_total: f64,
    pub l_total: f64,
    pub c_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairValues {
    pub a: usize,
    pub b: usize,
    pub m_total: f64,
    /// Absent for pairs that are not capacitively coupled.
    pub cm_total: Option<f64>,
}

/// Per-line R/L/C plus pairwise M/Cm, in formula units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineElectricals {
    pub lines: Vec<LineValues>,
    pub pairs: Vec<PairValues>,
}

impl LineElectricals {
    /// Pair lookup independent of ordering.
    pub fn pair(&self, a: usize, b: usize) -> Option<&PairValues> {
        self.pairs
            .iter()
            .find(|p| (p.a == a && p.b == b) || (p.a == b && p.b == a))
    }

    pub fn coupling_coefficient(&self, a: usize, b: usize) -> Option<f64> {
        let p = self.pair(a, b)?;
        Some(p.m_total / (self.lines[p.a].l_total * self.lines[p.b].l_total).sqrt())
    }

    /// Checks finiteness, positivity and `k < 1` for every pair.
    pub fn validate(&self) -> Result<()> {
        for line in &self.lines {
            for (what, value) in [("r_total", line.r_total), ("l_total", line.l_total), ("c_total", line.c_total)] {
                if !(value.is_finite() && value > 0.0) {
                    return Err(ExtractError::InvalidLine {
                        line: line.name.clone(),
                        what,
                        value,
                    });
                }
            }
        }
        for p in &self.pairs {
            let (Some(la), Some(lb)) = (self.lines.get(p.a), self.lines.get(p.b)) else {
                return Err(ExtractError::UnknownLine { a: p.a, b: p.b });
            };
            let k = p.m_total / (la.l_total * lb.l_total).sqrt();
            let cm_ok = p.cm_total.map_or(true, |c| c.is_finite() && c > 0.0);
            if !(p.m_total.is_finite() && p.m_total > 0.0 && cm_ok) {
                return Err(ExtractError::InvalidLine {
                    line: format!("{}-{}", la.name, lb.name),
                    what: "pair coupling",
                    value: p.m_total,
                });
            }
            if k >= 1.0 {
                return Err(ExtractError::CouplingTooStrong {
                    a: la.name.clone(),
                    b: lb.name.clone(),
                    k,
                });
            }
        }
        Ok(())
    }
}

/// Evaluates every formula for a set of named lines and coupled pairs.
///
/// Pair separations come from `pairs`; the `separation_um` field of each
/// geometry is ignored here.
pub fn extract_all(
    geometries: &[(String, InterconnectGeometry)],
    pairs: &[PairSpec],
    coeffs: &CouplingCoefficients,
    convention: MutualConvention,
    overrides: &Overrides,
) -> Result<LineElectricals> {
    let mut lines = Vec::with_capacity(geometries.len());
    for (name, g) in geometries {
        g.validate()?;
        let r_total = match overrides.r_total {
            Some(r) => r,
            None => line_resistance(g.sheet_res_ohm_sq, g.length_um, g.width_um)?,
        };
        let l_total = match overrides.l_total {
            Some(l) => l,
            None => self_inductance(g.length_um, g.width_um, g.thickness_um, g.lambda)?,
        };
        let c_total = match overrides.c_total {
            Some(c) => c,
            None => line_capacitance(g.width_um, g.height_um, g.thickness_um, g.eps_rel)?,
        };
        lines.push(LineValues {
            name: name.clone(),
            r_total,
            l_total,
            c_total,
        });
    }

    let mut out = Vec::with_capacity(pairs.len());
    for p in pairs {
        if p.a >= geometries.len() || p.b >= geometries.len() || p.a == p.b {
            return Err(ExtractError::UnknownLine { a: p.a, b: p.b });
        }
        if !(p.separation_um > 0.0) {
            return Err(ExtractError::MissingSeparation { a: p.a, b: p.b });
        }
        // Mutual terms use the first line's length and the second line's
        // cross-section for the capacitive fit; lines in a bundle share both.
        let ga = &geometries[p.a].1;
        let m_total = match overrides.m_total {
            Some(m) => m,
            None => match convention {
                MutualConvention::BracketOnly => mutual_inductance_bracket(ga.length_um, p.separation_um)?,
                MutualConvention::Full => mutual_inductance(ga.length_um, p.separation_um)?,
            },
        };
        let cm_total = if p.adjacent {
            Some(match overrides.cm_total {
                Some(c) => c,
                None => coupling_capacitance(
                    ga.width_um,
                    ga.height_um,
                    ga.thickness_um,
                    p.separation_um,
                    ga.eps_rel,
                    coeffs,
                )?,
            })
        } else {
            None
        };
        out.push(PairValues {
            a: p.a,
            b: p.b,
            m_total,
            cm_total,
        });
    }

    let bundle = LineElectricals { lines, pairs: out };
    bundle.validate()?;
    Ok(bundle)
}

/// Maps formula units onto SI element values.
///
/// `Compat` reads the formula numbers with the labels of the reference
/// parameter table: inductances in microhenries, per-meter capacitances
/// taken directly as farads for the whole line, resistances in ohms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitConvention {
    #[default]
    Compat,
}

impl UnitConvention {
    pub fn inductance_h(self, formula_value: f64) -> f64 {
        match self {
            UnitConvention::Compat => formula_value * 1e-6,
        }
    }

    pub fn capacitance_f(self, formula_value: f64) -> f64 {
        match self {
            UnitConvention::Compat => formula_value,
        }
    }

    pub fn resistance_ohm(self, formula_value: f64) -> f64 {
        formula_value
    }
}
