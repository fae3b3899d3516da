//! Run configuration schema. One JSON document selects the model
//! parameters, the destruction-rate family, and a mode block with the
//! mode-specific controls. Unknown keys are rejected at every level so
//! a typo cannot silently fall back to a default.

use serde::{Deserialize, Serialize};
use stickslip_core::fit::FitMethod;
use stickslip_core::model::EnergyMode;
use stickslip_core::rate::RateSegment;
use stickslip_core::stationary::{self, StationaryProfile, WindowHead};
use stickslip_core::{ModelParams, RateFamily};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ModelParams,
    /// Destruction-rate family.
    pub cu: RateSpec,
    /// Mode block; its tag must match the command-line mode.
    pub mode: ModeSpec,
}

impl RunConfig {
    /// Everything that can be checked without running a computation:
    /// parameter ranges, family shape, and mode-block consistency.
    pub fn validate(&self) -> Result<(), String> {
        self.params.validate().map_err(|e| e.to_string())?;
        self.cu.validate()?;
        self.mode.validate(&self.cu)
    }
}

/// How the destruction rate `cu(x)` is specified.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum RateSpec {
    /// The same rate at every deformation.
    Constant { value: f64 },
    /// Explicit piecewise family, exactly as the core accepts it.
    Segments { segments: Vec<RateSegment> },
    /// Speed-proportional family whose death sizes follow `x^(-p)` on
    /// `[x1, x2)`; the actual coefficients come from the
    /// self-consistent stationary speed.
    PowerWindow {
        x1: f64,
        x2: f64,
        p: f64,
        head: WindowHead,
    },
}

impl RateSpec {
    fn validate(&self) -> Result<(), String> {
        match self {
            RateSpec::Constant { value } => RateFamily::constant(*value)
                .map(drop)
                .map_err(|e| e.to_string()),
            RateSpec::Segments { segments } => RateFamily::from_segments(segments.clone())
                .map(drop)
                .map_err(|e| e.to_string()),
            RateSpec::PowerWindow { x1, x2, p, head } => {
                if !(*x1 > 0.0 && *x2 > *x1 && x2.is_finite()) {
                    return Err(format!(
                        "power window needs 0 < x1 < x2 < infinity, got [{x1}, {x2}]"
                    ));
                }
                if !(*p > 1.0 && p.is_finite()) {
                    return Err(format!("power window exponent must exceed one, got {p}"));
                }
                if let WindowHead::Damped { a } = head {
                    if !(*a > 0.0 && a.is_finite()) {
                        return Err(format!("head rate factor must be positive, got {a}"));
                    }
                }
                Ok(())
            }
        }
    }

    /// The constant rate, when the family is one. The moment closure
    /// only exists for constant rates.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            RateSpec::Constant { value } => Some(*value),
            _ => None,
        }
    }

    /// Stationary profile with its self-consistent speed.
    pub fn stationary_profile(
        &self,
        params: &ModelParams,
    ) -> stickslip_core::Result<StationaryProfile> {
        match self {
            RateSpec::Constant { value } => {
                let family = RateFamily::constant(*value)?;
                stationary::self_consistent_profile(params, &family)
            }
            RateSpec::Segments { segments } => {
                let family = RateFamily::from_segments(segments.clone())?;
                stationary::self_consistent_profile(params, &family)
            }
            RateSpec::PowerWindow { x1, x2, p, head } => {
                stationary::windowed_profile(params, *head, *x1, *x2, *p)
            }
        }
    }

    /// Concrete rate family for simulation or transport. A power
    /// window resolves its coefficients from the stationary balance.
    pub fn family(&self, params: &ModelParams) -> stickslip_core::Result<RateFamily> {
        match self {
            RateSpec::Constant { value } => RateFamily::constant(*value),
            RateSpec::Segments { segments } => RateFamily::from_segments(segments.clone()),
            RateSpec::PowerWindow { .. } => Ok(self.stationary_profile(params)?.rate().clone()),
        }
    }
}

/// The mode block. The enum tag in JSON names the mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModeSpec {
    Simulate(SimulateSpec),
    Evolve(EvolveSpec),
    Stationary(StationarySpec),
    Moments(MomentsSpec),
    Classify(ClassifySpec),
    Grfit(GrfitSpec),
}

impl ModeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModeSpec::Simulate(_) => "simulate",
            ModeSpec::Evolve(_) => "evolve",
            ModeSpec::Stationary(_) => "stationary",
            ModeSpec::Moments(_) => "moments",
            ModeSpec::Classify(_) => "classify",
            ModeSpec::Grfit(_) => "grfit",
        }
    }

    /// Master seed driving the mode, when it has one.
    pub fn master_seed(&self) -> Option<u64> {
        match self {
            ModeSpec::Simulate(spec) => Some(spec.seed),
            ModeSpec::Grfit(spec) => Some(spec.seed),
            _ => None,
        }
    }

    /// Replace the master seed from the command line.
    pub fn override_seed(&mut self, seed: u64) -> Result<(), String> {
        match self {
            ModeSpec::Simulate(spec) => spec.seed = seed,
            ModeSpec::Grfit(spec) => spec.seed = seed,
            other => {
                return Err(format!(
                    "mode {} is deterministic and takes no seed",
                    other.name()
                ))
            }
        }
        Ok(())
    }

    fn validate(&self, cu: &RateSpec) -> Result<(), String> {
        match self {
            ModeSpec::Simulate(spec) => spec.validate(),
            ModeSpec::Evolve(spec) => spec.validate(),
            ModeSpec::Stationary(spec) => spec.validate(),
            ModeSpec::Moments(spec) => {
                if cu.constant_value().is_none() {
                    return Err("the moment closure needs a constant destruction rate".into());
                }
                spec.validate()
            }
            ModeSpec::Classify(_) => {
                if cu.constant_value().is_none() {
                    return Err("classification needs a constant destruction rate".into());
                }
                Ok(())
            }
            ModeSpec::Grfit(spec) => {
                if spec.window.is_none() && !matches!(cu, RateSpec::PowerWindow { .. }) {
                    return Err(
                        "grfit needs an explicit energy window unless the rate is a power window"
                            .into(),
                    );
                }
                spec.validate()
            }
        }
    }
}

fn positive(name: &str, value: f64) -> Result<(), String> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive and finite, got {value}"))
    }
}

fn positive_opt(name: &str, value: Option<f64>) -> Result<(), String> {
    value.map_or(Ok(()), |v| positive(name, v))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub horizon: f64,
    pub seed: u64,
    /// Ensemble size; absent means a single run.
    #[serde(default)]
    pub replicas: Option<usize>,
    /// Trajectory sampling interval; absent disables the trajectory.
    #[serde(default)]
    pub sample_dt: Option<f64>,
    #[serde(default = "default_true")]
    pub record_events: bool,
    #[serde(default)]
    pub initial_deformations: Vec<f64>,
    #[serde(default)]
    pub energy_mode: EnergyMode,
}

fn default_true() -> bool {
    true
}

impl SimulateSpec {
    fn validate(&self) -> Result<(), String> {
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(format!(
                "horizon must be finite and nonnegative, got {}",
                self.horizon
            ));
        }
        positive_opt("sample_dt", self.sample_dt)?;
        if self.replicas == Some(0) {
            return Err("replicas must be at least one".into());
        }
        for &x in &self.initial_deformations {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(format!(
                    "initial deformation must be finite and nonnegative, got {x}"
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSpec {
    pub t_end: f64,
    /// Grid spacing.
    pub dx: f64,
    /// Grid extent; defaults to four stall lengths (or the cutoff).
    #[serde(default)]
    pub x_max: Option<f64>,
    /// Time substep hint; defaults to the stability bound.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Ascending times at which to export density snapshots.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Cadence of the moments time series; defaults to t_end / 200.
    #[serde(default)]
    pub moments_dt: Option<f64>,
}

impl EvolveSpec {
    fn validate(&self) -> Result<(), String> {
        positive("t_end", self.t_end)?;
        positive("dx", self.dx)?;
        positive_opt("x_max", self.x_max)?;
        positive_opt("dt", self.dt)?;
        positive_opt("moments_dt", self.moments_dt)?;
        let mut prev = 0.0;
        for &t in &self.snapshot_times {
            if !(t > prev && t <= self.t_end) {
                return Err(format!(
                    "snapshot times must be strictly ascending within (0, {}], got {t}",
                    self.t_end
                ));
            }
            prev = t;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySpec {
    /// Profile export extent; defaults to the cutoff when the family
    /// has one, otherwise four stall lengths.
    #[serde(default)]
    pub x_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    1001
}

impl StationarySpec {
    fn validate(&self) -> Result<(), String> {
        positive_opt("x_max", self.x_max)?;
        if self.points < 2 {
            return Err(format!("points must be at least two, got {}", self.points));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialMoments {
    pub n: f64,
    pub m: f64,
}

fn default_initials() -> Vec<InitialMoments> {
    vec![InitialMoments { n: 0.0, m: 0.0 }]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSpec {
    pub t_end: f64,
    pub dt: f64,
    /// One exported trajectory per initial condition.
    #[serde(default = "default_initials")]
    pub initials: Vec<InitialMoments>,
}

impl MomentsSpec {
    fn validate(&self) -> Result<(), String> {
        positive("t_end", self.t_end)?;
        positive("dt", self.dt)?;
        if self.initials.is_empty() {
            return Err("at least one initial condition is required".into());
        }
        for init in &self.initials {
            if !(init.n >= 0.0 && init.n.is_finite() && init.m >= 0.0 && init.m.is_finite()) {
                return Err(format!(
                    "initial moments must be finite and nonnegative, got n = {}, m = {}",
                    init.n, init.m
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySpec {}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrfitSpec {
    pub horizon: f64,
    pub seed: u64,
    /// Deaths before this time are discarded as transient.
    #[serde(default)]
    pub burn_in: f64,
    #[serde(default = "default_method")]
    pub method: FitMethod,
    #[serde(default = "default_min_events")]
    pub min_events: usize,
    /// Energy window; defaults to the power window mapped through the
    /// released-energy law.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub energy_mode: EnergyMode,
}

fn default_method() -> FitMethod {
    FitMethod::Hill
}

fn default_min_events() -> usize {
    1000
}

impl GrfitSpec {
    fn validate(&self) -> Result<(), String> {
        positive("horizon", self.horizon)?;
        if !(self.burn_in >= 0.0 && self.burn_in < self.horizon) {
            return Err(format!(
                "burn_in must lie in [0, horizon), got {} against {}",
                self.burn_in, self.horizon
            ));
        }
        if self.min_events < 3 {
            return Err(format!(
                "min_events must be at least three, got {}",
                self.min_events
            ));
        }
        if let Some([e1, e2]) = self.window {
            if !(e1 > 0.0 && e2 > e1 && e2.is_finite()) {
                return Err(format!("window needs 0 < e1 < e2, got [{e1}, {e2}]"));
            }
        }
        Ok(())
    }
}
