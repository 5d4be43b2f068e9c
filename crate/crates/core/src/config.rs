//! JSON run configuration with unit-tagged quantities.
//!
//! A config has three sections, `trap`, `grid` and `run`. Every physical
//! number is written as `{"value": 40, "unit": "nK"}`; unknown keys and
//! unknown units are rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Grid, GridError};
use crate::stationary::SolverSettings;
use crate::trap::{TrapConfig, TrapError, TrapParams};
use crate::twomode::ModelVariant;
use crate::units::UnitSystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("unknown unit \"{unit}\" for `{field}` (expected one of: {expected})")]
    Unit {
        field: String,
        unit: String,
        expected: String,
    },
    #[error("`{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    pub fn new(value: f64, unit: &str) -> Self {
        Self {
            value,
            unit: unit.to_string(),
        }
    }

    /// Value scaled by the factor registered for its unit in `table`.
    fn scaled(&self, field: &str, table: &[(&str, f64)]) -> Result<f64, ConfigError> {
        let factor = table
            .iter()
            .find(|(u, _)| *u == self.unit)
            .map(|(_, f)| *f)
            .ok_or_else(|| ConfigError::Unit {
                field: field.to_string(),
                unit: self.unit.clone(),
                expected: table.iter().map(|(u, _)| *u).collect::<Vec<_>>().join(", "),
            })?;
        if !self.value.is_finite() {
            return Err(invalid(field, "value is not finite"));
        }
        Ok(self.value * factor)
    }
}

fn nk_in_hz(u: &UnitSystem) -> f64 {
    u.energy_to_hz(u.energy_from_nk(1.0))
}

/// Energy as h·Hz.
fn energy_hz(q: &Quantity, field: &str, u: &UnitSystem) -> Result<f64, ConfigError> {
    let nk = nk_in_hz(u);
    q.scaled(
        field,
        &[("Hz", 1.0), ("kHz", 1e3), ("nK", nk), ("uK", 1e3 * nk)],
    )
}

fn frequency_hz(q: &Quantity, field: &str) -> Result<f64, ConfigError> {
    q.scaled(field, &[("Hz", 1.0), ("kHz", 1e3)])
}

fn length_um(q: &Quantity, field: &str) -> Result<f64, ConfigError> {
    q.scaled(field, &[("um", 1.0), ("nm", 1e-3)])
}

fn scattering_a0(q: &Quantity, field: &str) -> Result<f64, ConfigError> {
    let nm = 1e-9 / crate::units::constants::BOHR_RADIUS;
    q.scaled(field, &[("a0", 1.0), ("nm", nm)])
}

fn gradient_hz_per_um(q: &Quantity, field: &str, u: &UnitSystem) -> Result<f64, ConfigError> {
    q.scaled(field, &[("Hz/um", 1.0), ("nK/um", nk_in_hz(u))])
}

fn time_ms(q: &Quantity, field: &str) -> Result<f64, ConfigError> {
    q.scaled(field, &[("ms", 1.0), ("us", 1e-3), ("s", 1e3)])
}

fn angle_rad(q: &Quantity, field: &str) -> Result<f64, ConfigError> {
    q.scaled(
        field,
        &[("rad", 1.0), ("deg", std::f64::consts::PI / 180.0), ("pi", std::f64::consts::PI)],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub atom_number: f64,
    pub scattering_length: Quantity,
    pub primary_depth: Quantity,
    pub secondary_depth: Quantity,
    pub primary_period: Quantity,
    pub secondary_period: Quantity,
    pub radial_frequency: Quantity,
    #[serde(default)]
    pub tilt: Option<Quantity>,
    #[serde(default)]
    pub imprint_duration: Option<Quantity>,
    #[serde(default)]
    pub well_gap: Option<Quantity>,
}

impl TrapSection {
    pub fn to_trap_config(&self, u: &UnitSystem) -> Result<TrapConfig, ConfigError> {
        let cfg = TrapConfig {
            atom_number: self.atom_number,
            scattering_length_a0: scattering_a0(&self.scattering_length, "trap.scattering_length")?,
            primary_depth_hz: energy_hz(&self.primary_depth, "trap.primary_depth", u)?,
            secondary_depth_hz: energy_hz(&self.secondary_depth, "trap.secondary_depth", u)?,
            primary_period_um: length_um(&self.primary_period, "trap.primary_period")?,
            secondary_period_um: length_um(&self.secondary_period, "trap.secondary_period")?,
            radial_frequency_hz: frequency_hz(&self.radial_frequency, "trap.radial_frequency")?,
            tilt_hz_per_um: self
                .tilt
                .as_ref()
                .map(|q| gradient_hz_per_um(q, "trap.tilt", u))
                .transpose()?
                .unwrap_or(0.0),
            imprint_duration_ms: self
                .imprint_duration
                .as_ref()
                .map(|q| time_ms(q, "trap.imprint_duration"))
                .transpose()?,
            well_gap_hz: self
                .well_gap
                .as_ref()
                .map(|q| energy_hz(q, "trap.well_gap", u))
                .transpose()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_points: usize,
    /// Defaults to −λ_P/4.
    #[serde(default)]
    pub x_min: Option<Quantity>,
    #[serde(default)]
    pub x_max: Option<Quantity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    Rabi,
    PiPhase,
    SweepLambda,
    SweepZ0,
    Mqst,
}

impl ScenarioId {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rabi => "rabi",
            Self::PiPhase => "pi_phase",
            Self::SweepLambda => "sweep_lambda",
            Self::SweepZ0 => "sweep_z0",
            Self::Mqst => "mqst",
        }
    }
}

/// A dynamical model: one of the two-mode variants or the GPE itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "TMS")]
    Tms,
    #[serde(rename = "JGP")]
    Jgp,
    #[serde(rename = "TMGP")]
    Tmgp,
    #[serde(rename = "GPE")]
    Gpe,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tms => "TMS",
            Self::Jgp => "JGP",
            Self::Tmgp => "TMGP",
            Self::Gpe => "GPE",
        }
    }

    pub fn variant(self) -> Option<ModelVariant> {
        match self {
            Self::Tms => Some(ModelVariant::Tms),
            Self::Jgp => Some(ModelVariant::Jgp),
            Self::Tmgp => Some(ModelVariant::Tmgp),
            Self::Gpe => None,
        }
    }
}

/// How the barrier follows a Λ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierMode {
    /// V_S held at the base value; only a_s changes.
    #[default]
    Fixed,
    /// V_S raised where needed so that V₀ stays above μ.
    Tunneling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub values: Vec<f64>,
    #[serde(default)]
    pub barrier: BarrierMode,
}

fn default_models() -> Vec<Model> {
    vec![Model::Jgp, Model::Gpe]
}
fn default_z0() -> Vec<f64> {
    vec![0.05]
}
fn default_periods() -> f64 {
    6.0
}
fn default_samples() -> usize {
    64
}
fn default_rk4() -> usize {
    1000
}
fn default_band() -> [f64; 2] {
    [0.01, 0.2]
}
fn default_boundary_tol() -> f64 {
    0.005
}
fn default_margin() -> f64 {
    1.1
}
fn default_imbalance_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub scenario: Option<ScenarioId>,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default = "default_models")]
    pub models: Vec<Model>,
    /// Tune V_S so that ω_R/2π = 2K/h hits this value.
    #[serde(default)]
    pub target_rabi_frequency: Option<Quantity>,
    /// Tune a_s so that Λ hits this value.
    #[serde(default)]
    pub target_lambda: Option<f64>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default = "default_z0")]
    pub z0: Vec<f64>,
    #[serde(default)]
    pub phi0: Option<Quantity>,
    /// Offset δ from π used by the π-phase scenario.
    #[serde(default)]
    pub phase_offset: Option<Quantity>,
    /// Fixed run length; otherwise `periods` of the expected oscillation.
    #[serde(default)]
    pub duration: Option<Quantity>,
    #[serde(default = "default_periods")]
    pub periods: f64,
    #[serde(default = "default_samples")]
    pub samples_per_period: usize,
    #[serde(default = "default_rk4")]
    pub rk4_steps_per_period: usize,
    #[serde(default)]
    pub gpe_time_step: Option<Quantity>,
    #[serde(default = "default_band")]
    pub band_z0: [f64; 2],
    #[serde(default = "default_boundary_tol")]
    pub boundary_tolerance: f64,
    #[serde(default)]
    pub gpe_boundary: bool,
    #[serde(default = "default_margin")]
    pub tunneling_margin: f64,
    #[serde(default = "default_imbalance_tol")]
    pub imbalance_tolerance: f64,
    #[serde(default)]
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub trap: TrapSection,
    pub grid: GridSection,
    pub run: RunSection,
}

/// GPE step in internal time units used when the config gives none.
pub const DEFAULT_GPE_DT: f64 = 5e-3;

/// Run settings converted to internal units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub scenario: Option<ScenarioId>,
    pub label: String,
    pub solver: SolverSettings,
    pub models: Vec<Model>,
    pub target_two_k: Option<f64>,
    pub target_lambda: Option<f64>,
    pub sweep: Option<SweepSection>,
    pub z0: Vec<f64>,
    pub phi0: f64,
    pub phase_offset: f64,
    pub duration: Option<f64>,
    pub periods: f64,
    pub samples_per_period: usize,
    pub rk4_steps_per_period: usize,
    pub gpe_dt: f64,
    pub band_z0: [f64; 2],
    pub boundary_tolerance: f64,
    pub gpe_boundary: bool,
    pub tunneling_margin: f64,
    pub imbalance_tolerance: f64,
    pub snapshot_every: usize,
}

impl RunParams {
    pub fn two_mode_models(&self) -> impl Iterator<Item = ModelVariant> + '_ {
        self.models.iter().filter_map(|m| m.variant())
    }

    pub fn has_gpe(&self) -> bool {
        self.models.contains(&Model::Gpe)
    }
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub units: UnitSystem,
    pub trap: TrapParams,
    pub grid: Grid,
    pub run: RunParams,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let units = UnitSystem::potassium_39();
        let trap = self.trap.to_trap_config(&units)?.to_internal(&units)?;
        let half = trap.half_domain();
        let x_min = match &self.grid.x_min {
            Some(q) => units.length_from_um(length_um(q, "grid.x_min")?),
            None => -half,
        };
        let x_max = match &self.grid.x_max {
            Some(q) => units.length_from_um(length_um(q, "grid.x_max")?),
            None => half,
        };
        let grid = Grid::new(x_min, x_max, self.grid.n_points)?;
        let run = self.resolve_run(&units)?;
        Ok(Resolved {
            units,
            trap,
            grid,
            run,
        })
    }

    fn resolve_run(&self, u: &UnitSystem) -> Result<RunParams, ConfigError> {
        let r = &self.run;
        if r.models.is_empty() {
            return Err(invalid("run.models", "at least one model is required"));
        }
        let mut models = r.models.clone();
        models.sort();
        models.dedup();
        for (i, &z) in r.z0.iter().enumerate() {
            if !(z.is_finite() && z.abs() < 0.95) {
                return Err(invalid(&format!("run.z0[{i}]"), "must lie in (-0.95, 0.95)"));
            }
        }
        if r.z0.is_empty() {
            return Err(invalid("run.z0", "at least one initial imbalance is required"));
        }
        if let Some(s) = &r.sweep {
            if s.values.is_empty() {
                return Err(invalid("run.sweep.values", "must not be empty"));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(invalid("run.sweep.values", "must be finite"));
            }
            if s.values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid("run.sweep.values", "must be strictly increasing"));
            }
        }
        let positive = |field: &str, v: f64| -> Result<f64, ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(invalid(field, "must be positive"))
            }
        };
        positive("run.periods", r.periods)?;
        positive("run.boundary_tolerance", r.boundary_tolerance)?;
        positive("run.imbalance_tolerance", r.imbalance_tolerance)?;
        positive("run.tunneling_margin", r.tunneling_margin)?;
        if r.samples_per_period < 32 {
            return Err(invalid("run.samples_per_period", "must be at least 32"));
        }
        if r.rk4_steps_per_period < r.samples_per_period {
            return Err(invalid(
                "run.rk4_steps_per_period",
                "must be at least samples_per_period",
            ));
        }
        let s = &r.solver;
        positive("run.solver.dtau", s.dtau)?;
        positive("run.solver.energy_tolerance", s.energy_tolerance)?;
        positive("run.solver.residual_tolerance", s.residual_tolerance)?;
        if s.max_iterations == 0 {
            return Err(invalid("run.solver.max_iterations", "must be positive"));
        }
        let [lo, hi] = r.band_z0;
        if !(lo > 0.0 && lo < hi && hi < 0.95) {
            return Err(invalid("run.band_z0", "must satisfy 0 < lo < hi < 0.95"));
        }
        let target_two_k = r
            .target_rabi_frequency
            .as_ref()
            .map(|q| frequency_hz(q, "run.target_rabi_frequency"))
            .transpose()?
            .map(|hz| positive("run.target_rabi_frequency", hz).map(|hz| u.energy_from_hz(hz)))
            .transpose()?;
        if let Some(l) = r.target_lambda {
            if !l.is_finite() || l <= -1.0 {
                return Err(invalid("run.target_lambda", "must be finite and above -1"));
            }
        }
        let phi0 = r
            .phi0
            .as_ref()
            .map(|q| angle_rad(q, "run.phi0"))
            .transpose()?
            .unwrap_or(0.0);
        let phase_offset = r
            .phase_offset
            .as_ref()
            .map(|q| angle_rad(q, "run.phase_offset"))
            .transpose()?
            .unwrap_or(0.3);
        let duration = r
            .duration
            .as_ref()
            .map(|q| time_ms(q, "run.duration").and_then(|ms| positive("run.duration", ms)))
            .transpose()?
            .map(|ms| u.time_from_ms(ms));
        let gpe_dt = match &r.gpe_time_step {
            Some(q) => u.time_from_ms(positive("run.gpe_time_step", time_ms(q, "run.gpe_time_step")?)?),
            None => DEFAULT_GPE_DT,
        };
        Ok(RunParams {
            scenario: r.scenario,
            label: r.label.clone().unwrap_or_default(),
            solver: r.solver,
            models,
            target_two_k,
            target_lambda: r.target_lambda,
            sweep: r.sweep.clone(),
            z0: r.z0.clone(),
            phi0,
            phase_offset,
            duration,
            periods: r.periods,
            samples_per_period: r.samples_per_period,
            rk4_steps_per_period: r.rk4_steps_per_period,
            gpe_dt,
            band_z0: r.band_z0,
            boundary_tolerance: r.boundary_tolerance,
            gpe_boundary: r.gpe_boundary,
            tunneling_margin: r.tunneling_margin,
            imbalance_tolerance: r.imbalance_tolerance,
            snapshot_every: r.snapshot_every,
        })
    }
}

/// Human-readable description of the accepted document.
pub fn schema() -> serde_json::Value {
    use serde_json::json;
    let q = |units: &[&str]| json!({"value": "number", "unit": units});
    json!({
        "trap": {
            "atom_number": "number >= 1",
            "scattering_length": q(&["a0", "nm"]),
            "primary_depth": q(&["Hz", "kHz", "nK", "uK"]),
            "secondary_depth": q(&["Hz", "kHz", "nK", "uK"]),
            "primary_period": q(&["um", "nm"]),
            "secondary_period": q(&["um", "nm"]),
            "radial_frequency": q(&["Hz", "kHz"]),
            "tilt (optional)": q(&["Hz/um", "nK/um"]),
            "imprint_duration (optional)": q(&["ms", "us", "s"]),
            "well_gap (optional)": q(&["Hz", "kHz", "nK", "uK"]),
        },
        "grid": {
            "n_points": "power of two >= 64",
            "x_min (optional, default -primary_period/2)": q(&["um", "nm"]),
            "x_max (optional, default +primary_period/2)": q(&["um", "nm"]),
        },
        "run": {
            "scenario (optional)": ["rabi", "pi_phase", "sweep_lambda", "sweep_z0", "mqst"],
            "label (optional)": "string",
            "solver (optional)": {
                "dtau": 1e-3,
                "energy_tolerance": 1e-12,
                "residual_tolerance": 1e-8,
                "max_iterations": 200000
            },
            "models": ["TMS", "JGP", "TMGP", "GPE"],
            "target_rabi_frequency (optional)": q(&["Hz", "kHz"]),
            "target_lambda (optional)": "number > -1",
            "sweep (optional)": {"values": "increasing numbers", "barrier": ["fixed", "tunneling"]},
            "z0": "list of numbers in (-0.95, 0.95), default [0.05]",
            "phi0 (optional)": q(&["rad", "deg", "pi"]),
            "phase_offset (optional, default 0.3 rad)": q(&["rad", "deg", "pi"]),
            "duration (optional)": q(&["ms", "us", "s"]),
            "periods": "number, default 6",
            "samples_per_period": "integer >= 32, default 64",
            "rk4_steps_per_period": "integer, default 1000",
            "gpe_time_step (optional)": q(&["ms", "us", "s"]),
            "band_z0": "[lo, hi], default [0.01, 0.2]",
            "boundary_tolerance": "number, default 0.005",
            "gpe_boundary": "bool, default false",
            "tunneling_margin": "number, default 1.1",
            "imbalance_tolerance": "number, default 1e-4",
            "snapshot_every": "integer, default 0 (off)"
        }
    })
}
