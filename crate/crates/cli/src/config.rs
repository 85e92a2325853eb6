//! The toolkit config document (TOML) and `--set key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xtalk_core::engine::{Method, SimConfig, Stimulus, StimulusShape};
use xtalk_core::extract::{CouplingCoefficients, InterconnectGeometry, MutualConvention, UnitConvention};
use xtalk_core::netbuild::{LineRole, TerminationSpec};

use crate::error::{CliError, Result};
use crate::netlist::TieStyle;

/// Top-level config. Every block except `geometry` may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolkitConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub overrides: OverridesConfig,
    #[serde(default)]
    pub termination: TerminationConfig,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub stimulus: StimulusConfig,
    #[serde(default)]
    pub sim: SimBlock,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            overrides: OverridesConfig {
                r_total: Some(500.0),
                ..OverridesConfig::default()
            },
            termination: TerminationConfig::default(),
            scenario: ScenarioConfig {
                preset: Some("no-shield".into()),
                ..ScenarioConfig::default()
            },
            stimulus: StimulusConfig::default(),
            sim: SimBlock::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub length_um: f64,
    pub width_um: f64,
    pub thickness_um: f64,
    pub height_um: f64,
    /// Aggressor-victim spacing when nothing sits between them.
    pub separation_um: f64,
    /// Signal-to-shield spacing at unit shield width.
    pub shield_separation_um: f64,
    /// Shield width relative to `width_um`. The signal pitch is held, so a
    /// wider shield narrows both gaps.
    pub shield_width_scale: f64,
    pub eps_rel: f64,
    pub sheet_res_ohm_sq: f64,
    pub lambda: f64,
    pub coefficients: String,
    pub mutual_convention: MutualConvention,
    pub units: UnitConvention,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let g = InterconnectGeometry::default();
        Self {
            length_um: g.length_um,
            width_um: g.width_um,
            thickness_um: g.thickness_um,
            height_um: g.height_um,
            separation_um: 1.0,
            shield_separation_um: 2.0,
            shield_width_scale: 1.0,
            eps_rel: g.eps_rel,
            sheet_res_ohm_sq: g.sheet_res_ohm_sq,
            lambda: g.lambda,
            coefficients: CouplingCoefficients::TABLE_COMPAT.name.into(),
            mutual_convention: MutualConvention::BracketOnly,
            units: UnitConvention::Compat,
        }
    }
}

impl GeometryConfig {
    pub fn wire(&self, width_scale: f64) -> InterconnectGeometry {
        InterconnectGeometry {
            length_um: self.length_um,
            width_um: self.width_um * width_scale,
            thickness_um: self.thickness_um,
            height_um: self.height_um,
            separation_um: self.separation_um,
            eps_rel: self.eps_rel,
            sheet_res_ohm_sq: self.sheet_res_ohm_sq,
            lambda: self.lambda,
        }
    }

    pub fn coupling_coefficients(&self) -> Result<CouplingCoefficients> {
        CouplingCoefficients::by_name(&self.coefficients).ok_or_else(|| {
            CliError::Config(format!(
                "geometry.coefficients: unknown set '{}' (expected table-compat or paper-literal)",
                self.coefficients
            ))
        })
    }

    /// Signal-to-shield gap after widening the shield.
    pub fn effective_shield_separation(&self) -> f64 {
        self.shield_separation_um - 0.5 * (self.shield_width_scale - 1.0) * self.width_um
    }
}

/// Values that replace extracted ones, in formula units (ohms, uH-labelled
/// inductance numbers, capacitance as read from the parameter table).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverridesConfig {
    pub r_total: Option<f64>,
    pub l_total: Option<f64>,
    pub c_total: Option<f64>,
    /// Aggressor-victim pair.
    pub unshielded: PairOverride,
    /// Signal-to-shield pairs.
    pub shielded: PairOverride,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairOverride {
    pub m_total: Option<f64>,
    pub cm_total: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerminationConfig {
    pub driver_resistance_ohm: f64,
    pub load_capacitance_f: f64,
}

impl Default for TerminationConfig {
    fn default() -> Self {
        let t = TerminationSpec::default();
        Self {
            driver_resistance_ohm: t.driver_resistance_ohm,
            load_capacitance_f: t.load_capacitance_f,
        }
    }
}

impl From<TerminationConfig> for TerminationSpec {
    fn from(t: TerminationConfig) -> Self {
        TerminationSpec {
            driver_resistance_ohm: t.driver_resistance_ohm,
            load_capacitance_f: t.load_capacitance_f,
        }
    }
}

/// Either a named preset or an explicit list of lines and couplings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub preset: Option<String>,
    pub name: Option<String>,
    pub lines: Vec<LineConfig>,
    pub couplings: Vec<CouplingConfig>,
    /// Interior shield tap positions as fractions of the line length.
    pub taps: Vec<f64>,
    pub tie_resistance_ohm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    pub name: String,
    pub role: LineRole,
    #[serde(default = "one")]
    pub width_scale: f64,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub a: String,
    pub b: String,
    pub separation_um: f64,
    /// Adjacent pairs also get a coupling capacitance.
    #[serde(default = "yes")]
    pub adjacent: bool,
    pub m_total: Option<f64>,
    pub cm_total: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeName {
    Step,
    Ramp,
    Pwl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StimulusConfig {
    pub shape: ShapeName,
    pub amplitude_v: f64,
    pub rise_time_s: f64,
    pub delay_s: f64,
    /// `[t, v]` pairs for `shape = "pwl"`, scaled by the amplitude.
    pub points: Vec<[f64; 2]>,
}

impl Default for StimulusConfig {
    fn default() -> Self {
        let s = Stimulus::default();
        Self {
            shape: ShapeName::Ramp,
            amplitude_v: s.amplitude_v,
            rise_time_s: s.rise_time_s,
            delay_s: s.delay_s,
            points: Vec::new(),
        }
    }
}

impl StimulusConfig {
    pub fn to_stimulus(&self) -> Result<Stimulus> {
        let shape = match self.shape {
            ShapeName::Step => StimulusShape::Step,
            ShapeName::Ramp => StimulusShape::Ramp,
            ShapeName::Pwl => {
                if self.points.is_empty() {
                    return Err(CliError::Config("stimulus.points is required for shape = \"pwl\"".into()));
                }
                StimulusShape::PiecewiseLinear {
                    points: self.points.iter().map(|p| (p[0], p[1])).collect(),
                }
            }
        };
        let s = Stimulus {
            shape,
            amplitude_v: self.amplitude_v,
            rise_time_s: self.rise_time_s,
            delay_s: self.delay_s,
        };
        s.validate().map_err(|e| CliError::Config(format!("stimulus: {e}")))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimBlock {
    pub dt: f64,
    pub t_end: f64,
    pub n_segments: usize,
    pub method: Method,
}

impl Default for SimBlock {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            dt: s.dt,
            t_end: s.t_end,
            n_segments: 12,
            method: s.method,
        }
    }
}

impl SimBlock {
    pub fn to_sim_config(&self) -> Result<SimConfig> {
        let cfg = SimConfig::new(self.dt, self.t_end, self.method);
        cfg.validate().map_err(|e| CliError::Config(format!("sim: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Any of "csv" (waveforms) and "json" (summary).
    pub formats: Vec<String>,
    pub netlist_ties: TieStyle,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec!["csv".into(), "json".into()],
            netlist_ties: TieStyle::default(),
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

impl ToolkitConfig {
    /// Parses a config document and applies `key=value` overrides.
    pub fn parse(text: &str, sets: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        if !doc.contains_key("geometry") {
            return Err(CliError::Config("missing [geometry] block".into()));
        }
        let cfg = if sets.is_empty() {
            // straight from the text so errors carry line numbers
            toml::from_str::<ToolkitConfig>(text).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            for s in sets {
                apply_set(&mut doc, s)?;
            }
            ToolkitConfig::deserialize(doc).map_err(|e| CliError::Config(format!("after --set: {e}")))?
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, sets: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, sets).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Built-in defaults with overrides applied.
    pub fn defaults_with(sets: &[String]) -> Result<Self> {
        let text = toml::to_string(&Self::default()).expect("default config serializes");
        Self::parse(&text, sets)
    }

    pub fn check(&self) -> Result<()> {
        let sc = &self.scenario;
        let explicit = !sc.lines.is_empty() || !sc.couplings.is_empty();
        match (&sc.preset, explicit) {
            (Some(_), true) => {
                return Err(CliError::Config(
                    "scenario: give either `preset` or explicit `lines`/`couplings`, not both".into(),
                ))
            }
            (None, false) => return Err(CliError::Config("scenario: no preset and no explicit lines".into())),
            _ => {}
        }
        if sc.preset.is_some() && !sc.taps.is_empty() {
            return Err(CliError::Config(
                "scenario.taps only applies to explicit scenarios; use a shield-<N>taps preset".into(),
            ));
        }
        self.geometry.coupling_coefficients()?;
        if self.sim.n_segments == 0 {
            return Err(CliError::Config("sim.n_segments must be >= 1".into()));
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return Err(CliError::Config(format!("output.formats: unknown format '{f}'")));
            }
        }
        Ok(())
    }

    /// Replaces the scenario block with a preset.
    pub fn set_preset(&mut self, name: &str) {
        let tie = self.scenario.tie_resistance_ohm;
        self.scenario = ScenarioConfig {
            preset: Some(name.to_string()),
            tie_resistance_ohm: tie,
            ..ScenarioConfig::default()
        };
    }
}

/// `a.b.c=value`; the value is read as a TOML literal, falling back to a
/// bare string.
fn apply_set(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got '{assignment}'")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!("--set: malformed key '{key}'")));
    }
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("--set {key}: '{part}' is not a block")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
