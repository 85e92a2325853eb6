//! Crosstalk analysis for coupled on-chip interconnects.
//!
//! * [`extract`] turns wire geometry into R/L/C/M/Cm values.
//! * [`netbuild`] expands those totals into distributed RLC ladders for
//!   aggressor, victim and (optionally) a grounded shield with taps.
//! * [`engine`] simulates the transient response with MNA.
//! * [`metrics`] measures crosstalk peak, delay and rise time.

pub mod engine;
pub mod extract;
pub mod metrics;
pub mod netbuild;

pub use engine::{dc_operating_point, run_transient, Method, SimConfig, Stimulus, WaveformSet};
pub use extract::{extract_all, CouplingCoefficients, InterconnectGeometry, LineElectricals};
pub use metrics::{measure_scenario, ScenarioRoles, ScenarioMetrics, TraceMeasurement};
pub use netbuild::{build_ladder, scenario_preset, validate_network, CoupledNetwork, PresetParams, Scenario};
