//! Two-moment reduction of the mean-field dynamics.
//!
//! For a single elastic exponent and a deformation-independent
//! destruction rate the density equation closes exactly on the contact
//! count `N` and the resistance integral `M`:
//!
//! ```text
//! dN/dt = cb_bar * v - cu_bar * N
//! dM/dt = N * v - cu_bar * M        with v = gamma * max(F - kappa * M, 0)
//! ```
//!
//! The module integrates this system, solves its unique positive fixed
//! point in closed form, and classifies the approach to that point from
//! the Jacobian spectrum. Everything is parameterized by the single
//! dimensionless drive `gamma^2 kappa F cb_bar / cu_bar^2`; the approach
//! switches from a damped oscillation to a monotone node exactly where
//! that drive crosses twenty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentState {
    /// Contact count per unit population scale.
    pub n: f64,
    /// Resistance integral entering the force balance.
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub time: f64,
    pub state: MomentState,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityClass {
    StableSpiral,
    StableNode,
}

/// Fixed point of the moment system with the local linearization data
/// used to classify the approach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub v: f64,
    pub n: f64,
    pub m: f64,
    /// Dimensionless drive `gamma^2 kappa F cb_bar / cu_bar^2`.
    pub drive: f64,
    /// Feedback strength `gamma kappa N / cu_bar` at the fixed point.
    pub u: f64,
    pub trace: f64,
    pub det: f64,
    pub discriminant: f64,
    pub class: StabilityClass,
}

impl FixedPointReport {
    /// Eigenvalues of the linearization as `(re, im)` pairs. A negative
    /// discriminant yields a conjugate pair, otherwise two reals with
    /// zero imaginary part.
    pub fn eigenvalues(&self) -> [(f64, f64); 2] {
        let half_trace = 0.5 * self.trace;
        if self.discriminant < 0.0 {
            let im = 0.5 * (-self.discriminant).sqrt();
            [(half_trace, im), (half_trace, -im)]
        } else {
            let spread = 0.5 * self.discriminant.sqrt();
            [(half_trace + spread, 0.0), (half_trace - spread, 0.0)]
        }
    }
}

/// The spiral-to-node transition sits exactly at this drive.
pub const NODE_DRIVE_THRESHOLD: f64 = 20.0;

pub fn velocity(params: &ModelParams, state: MomentState) -> f64 {
    params.gamma * (params.f - params.kappa * state.m).max(0.0)
}

pub fn rhs(params: &ModelParams, cu_bar: f64, state: MomentState) -> MomentState {
    let v = velocity(params, state);
    MomentState {
        n: params.cb_bar * v - cu_bar * state.n,
        m: state.n * v - cu_bar * state.m,
    }
}

fn validate_cu(cu_bar: f64) -> Result<()> {
    if !(cu_bar > 0.0 && cu_bar.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "mean destruction rate must be positive and finite, got {cu_bar}"
        )));
    }
    Ok(())
}

/// Classic fixed-step RK4 from `initial` to `t_end`, reporting every
/// step. The step is shortened uniformly so the final time is hit
/// exactly.
pub fn integrate(
    params: &ModelParams,
    cu_bar: f64,
    initial: MomentState,
    t_end: f64,
    dt: f64,
) -> Result<Vec<MomentPoint>> {
    params.validate()?;
    validate_cu(cu_bar)?;
    if !(t_end >= 0.0 && t_end.is_finite() && dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "integration needs t_end >= 0 and dt > 0, got t_end = {t_end}, dt = {dt}"
        )));
    }
    if !(initial.n >= 0.0 && initial.n.is_finite() && initial.m >= 0.0 && initial.m.is_finite()) {
        return Err(Error::InvalidState(format!(
            "moments must start finite and nonnegative, got n = {}, m = {}",
            initial.n, initial.m
        )));
    }
    let steps = (t_end / dt).ceil().max(1.0) as u64;
    let h = t_end / steps as f64;
    let mut out = Vec::with_capacity(steps as usize + 1);
    let mut s = initial;
    out.push(MomentPoint {
        time: 0.0,
        state: s,
        v: velocity(params, s),
    });
    let add = |a: MomentState, k: MomentState, w: f64| MomentState {
        n: a.n + w * k.n,
        m: a.m + w * k.m,
    };
    for i in 1..=steps {
        let k1 = rhs(params, cu_bar, s);
        let k2 = rhs(params, cu_bar, add(s, k1, 0.5 * h));
        let k3 = rhs(params, cu_bar, add(s, k2, 0.5 * h));
        let k4 = rhs(params, cu_bar, add(s, k3, h));
        s = MomentState {
            n: s.n + h / 6.0 * (k1.n + 2.0 * k2.n + 2.0 * k3.n + k4.n),
            m: s.m + h / 6.0 * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m),
        };
        let time = i as f64 * h;
        out.push(MomentPoint {
            time,
            state: s,
            v: velocity(params, s),
        });
    }
    Ok(out)
}

/// Closed-form positive fixed point and its classification.
///
/// Writing `d` for the drive, the sliding share of the free speed is
/// `s = 2 / (1 + sqrt(1 + 4 d))`, a form that stays accurate for small
/// drives where the quadratic formula cancels.
pub fn fixed_point(params: &ModelParams, cu_bar: f64) -> Result<FixedPointReport> {
    params.validate()?;
    validate_cu(cu_bar)?;
    let drive =
        params.gamma * params.gamma * params.kappa * params.f * params.cb_bar / (cu_bar * cu_bar);
    let root = (1.0 + 4.0 * drive).sqrt();
    let s = 2.0 / (1.0 + root);
    let v = params.gamma * params.f * s;
    let n = params.cb_bar * v / cu_bar;
    let m = params.f / params.kappa * (1.0 - s);
    let u = 0.5 * (root - 1.0);
    // Jacobian in (N, M): [[-cu, -gamma kappa cb], [v, -(cu + gamma kappa N)]].
    let trace = -cu_bar * (2.0 + u);
    let det = cu_bar * cu_bar * (1.0 + 2.0 * u);
    let discriminant = cu_bar * cu_bar * u * (u - 4.0);
    let class = if u < 4.0 {
        StabilityClass::StableSpiral
    } else {
        StabilityClass::StableNode
    };
    Ok(FixedPointReport {
        v,
        n,
        m,
        drive,
        u,
        trace,
        det,
        discriminant,
        class,
    })
}
