//! Forces, the velocity law, and the deterministic flow between events.
//!
//! A plate dragged by a constant force `F` shears a population of surface
//! contacts. A contact deformed by `x` resists with `kappa * z(x)` where
//! `z(x) = min(x, x^alpha)`, and the overdamped plate moves at
//! `v = gamma * max(0, F - kappa * sum_i z(x_i))`. Every attached contact
//! deforms at the plate velocity, so between birth and death events the
//! whole set shares one displacement variable. For `alpha = 1` that flow
//! is a pure exponential and is integrated in closed form; for other
//! exponents a fixed-step RK4 scheme on the common displacement is used.

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Resistance nonlinearity `z(x) = min(x, x^alpha)` for `x >= 0`.
///
/// The branch point is handled exactly: `x` for `x <= 1`, `x^alpha`
/// above. For `alpha <= 1` the two branches agree with the min form.
pub fn resistance(x: f64, alpha: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::NegativeDeformation(x));
    }
    Ok(z_alpha(x, alpha))
}

#[inline]
pub(crate) fn z_alpha(x: f64, alpha: f64) -> f64 {
    if x <= 1.0 {
        x
    } else {
        x.powf(alpha)
    }
}

#[inline]
pub(crate) fn sum_resistance(xs: &[f64], alpha: f64) -> f64 {
    xs.iter().map(|&x| z_alpha(x, alpha)).sum()
}

/// Net force on the plate, clamped at zero: `max(0, F - kappa * sum z)`.
pub fn net_force(xs: &[f64], params: &ModelParams) -> f64 {
    debug_assert!(xs.iter().all(|&x| x >= 0.0));
    (params.f - params.kappa * sum_resistance(xs, params.alpha)).max(0.0)
}

/// Plate velocity `gamma * max(0, F - kappa * sum z)`.
pub fn velocity(xs: &[f64], params: &ModelParams) -> f64 {
    params.gamma * net_force(xs, params)
}

/// Closed-form flow for `alpha = 1`: shared displacement and decayed
/// velocity after a stretch `dt` with a frozen contact set.
///
/// With `n` contacts and velocity `v0`, `v(t) = v0 * exp(-gamma kappa n t)`
/// and each deformation gains `v0 * (1 - exp(-gamma kappa n dt)) /
/// (gamma kappa n)`.
#[inline]
pub(crate) fn elastic_flow(n: usize, v0: f64, dt: f64, gamma_kappa: f64) -> (f64, f64) {
    if n == 0 || v0 == 0.0 {
        // No contacts means nothing resists and nothing deforms.
        return (v0 * dt, v0);
    }
    let lambda = gamma_kappa * n as f64;
    let shift = v0 * (-(-lambda * dt).exp_m1()) / lambda;
    (shift, v0 * (-lambda * dt).exp())
}

/// Time for the shared displacement to reach `target` under the
/// closed-form flow, or `None` when the flow stalls short of it.
#[inline]
pub(crate) fn elastic_time_to_travel(
    n: usize,
    v0: f64,
    target: f64,
    gamma_kappa: f64,
) -> Option<f64> {
    if target <= 0.0 {
        return Some(0.0);
    }
    if v0 <= 0.0 {
        return None;
    }
    if n == 0 {
        return Some(target / v0);
    }
    let lambda = gamma_kappa * n as f64;
    let arg = lambda * target / v0;
    if arg >= 1.0 {
        // Total remaining travel is v0 / lambda; target lies beyond it.
        None
    } else {
        Some(-(-arg).ln_1p() / lambda)
    }
}

/// Advance the contact set through a stretch of length `dt` with the
/// closed-form elastic flow (`alpha = 1` only). Deformations are updated
/// in place; the returned value is the velocity at the end of the stretch.
pub fn advance_elastic(xs: &mut [f64], v0: f64, dt: f64, params: &ModelParams) -> Result<f64> {
    if params.alpha != 1.0 {
        return Err(Error::ElasticOnly {
            alpha: params.alpha,
        });
    }
    if !(v0 >= 0.0) {
        return Err(Error::InvalidState(format!("negative velocity {v0}")));
    }
    if !(dt >= 0.0) {
        return Err(Error::InvalidState(format!("negative duration {dt}")));
    }
    let (shift, v1) = elastic_flow(xs.len(), v0, dt, params.gamma * params.kappa);
    for x in xs.iter_mut() {
        *x += shift;
    }
    Ok(v1)
}

/// Shared displacement after a stretch `dt`, integrated with classical
/// fixed-step RK4 on `ds/dt = gamma * max(0, F - kappa * sum z(x_i + s))`.
/// Valid for any `alpha`; the velocity along the way never exceeds its
/// starting value because resistance only grows.
pub(crate) fn displacement_numeric(
    xs: &[f64],
    dt: f64,
    substep: f64,
    params: &ModelParams,
) -> f64 {
    if dt == 0.0 || xs.is_empty() {
        return velocity(xs, params) * dt;
    }
    let speed = |s: f64| {
        let resist: f64 = xs.iter().map(|&x| z_alpha(x + s, params.alpha)).sum();
        params.gamma * (params.f - params.kappa * resist).max(0.0)
    };
    let steps = (dt / substep).ceil().max(1.0) as usize;
    let h = dt / steps as f64;
    let mut s = 0.0;
    for _ in 0..steps {
        let k1 = speed(s);
        let k2 = speed(s + 0.5 * h * k1);
        let k3 = speed(s + 0.5 * h * k2);
        let k4 = speed(s + h * k3);
        s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    s
}

/// RK4 counterpart of [`advance_elastic`] for arbitrary `alpha`.
/// Deformations are updated in place; returns the velocity recomputed
/// from the final positions.
pub fn advance_numeric(xs: &mut [f64], dt: f64, substep: f64, params: &ModelParams) -> Result<f64> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidState(format!("negative duration {dt}")));
    }
    if !(substep > 0.0) {
        return Err(Error::InvalidState(format!(
            "substep must be positive, got {substep}"
        )));
    }
    let shift = displacement_numeric(xs, dt, substep, params);
    for x in xs.iter_mut() {
        *x += shift;
    }
    Ok(velocity(xs, params))
}

/// How the energy released by a failing contact is accounted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyMode {
    /// `mu * x^(1 + alpha)`: the large-deformation power law.
    #[default]
    Asymptotic,
    /// `mu * kappa * integral_0^x z(y) dy`: the stored elastic work.
    ExactPotential,
}

/// Energy released when a contact with deformation `x` breaks.
///
/// For `x >= 1` the two modes agree up to the constant
/// `mu * kappa * (1/2 - 1/(1+alpha))` and a rescaling of `mu` by
/// `kappa / (1 + alpha)`, so they produce the same power-law exponent.
pub fn released_energy(x: f64, params: &ModelParams, mode: EnergyMode) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::NegativeDeformation(x));
    }
    let value = match mode {
        EnergyMode::Asymptotic => params.mu * x.powf(1.0 + params.alpha),
        EnergyMode::ExactPotential => {
            let primitive = if x <= 1.0 {
                0.5 * x * x
            } else {
                0.5 + (x.powf(1.0 + params.alpha) - 1.0) / (1.0 + params.alpha)
            };
            params.mu * params.kappa * primitive
        }
    };
    Ok(value)
}
