//! Stationary deformation densities and self-consistent sliding speeds.
//!
//! For a fixed speed `v > 0` the stationary density of the mean-field
//! transport equation is the survival profile
//!
//! ```text
//! rho_v(x) = cb_bar * exp(-(1/v) * integral_0^x cu(y) dy)
//! ```
//!
//! and the speed itself must solve the clamped force balance
//! `v = gamma * max(F - kappa * integral z rho_v, 0)`. The right side is
//! nonincreasing in `v` (faster sliding thins nothing, it only stretches
//! the profile), so the balance has a unique solution found by bisection.
//!
//! All density integrals reduce to closed forms on the rate segments:
//! powers against hyperbolic pieces, exponentials against constant
//! pieces, and plain powers where the rate vanishes. Only fractional
//! resistance exponents against constant pieces need quadrature. The
//! module also builds the windowed families whose death sizes follow an
//! exact power law, and exposes the rate law that designs such a window
//! for a requested exponent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::params::ModelParams;
use crate::rate::{RateFamily, RateKind, RateSegment};

/// Weight applied to the density before integrating over deformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityWeight {
    /// Plain mass: the contact count per unit population scale.
    Count,
    /// First moment of deformation.
    Deformation,
    /// Resistance entering the force balance (`x` below one, `x^alpha`
    /// above).
    Resistance,
}

impl DensityWeight {
    fn exponent(&self, piece_start: f64, alpha: f64) -> f64 {
        match self {
            DensityWeight::Count => 0.0,
            DensityWeight::Deformation => 1.0,
            DensityWeight::Resistance => {
                if piece_start < 1.0 {
                    1.0
                } else {
                    alpha
                }
            }
        }
    }
}

/// `integral_0^l y * exp(-s y) dy`, series-switched near `s l = 0`.
fn ramp_exp_integral(s: f64, l: f64) -> f64 {
    let sl = s * l;
    if sl < 1e-4 {
        l * l * (0.5 - sl / 3.0 + sl * sl / 8.0 - sl * sl * sl / 30.0)
    } else {
        (1.0 - (1.0 + sl) * (-sl).exp()) / (s * s)
    }
}

/// `integral_a^b x^e dx` written as `a^(e+1) * g(b/a)` for overflow-safe
/// assembly; `e = -1` and near-cancellation handled through `exp_m1`.
fn power_integral_factor(e_plus_1: f64, b_over_a_ln: f64) -> f64 {
    if e_plus_1 == 0.0 {
        b_over_a_ln
    } else {
        (e_plus_1 * b_over_a_ln).exp_m1() / e_plus_1
    }
}

/// Weighted integral of the fixed-speed stationary density over
/// `[lo, hi]`. Returns `f64::INFINITY` when the tail does not decay
/// fast enough to integrate.
pub fn weighted_density_integral_between(
    params: &ModelParams,
    rate: &RateFamily,
    v: f64,
    weight: DensityWeight,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    params.validate()?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidState(format!(
            "stationary density needs a positive finite speed, got {v}"
        )));
    }
    if !(lo >= 0.0) || hi < lo {
        return Err(Error::InvalidParams(format!(
            "integration bounds must satisfy 0 <= lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let cb = params.cb_bar;
    let alpha = params.alpha;
    let hi_eff = match rate.cutoff() {
        Some(c) => hi.min(c),
        None => hi,
    };
    if hi_eff <= lo {
        return Ok(0.0);
    }

    let mut cuts: Vec<f64> = vec![lo];
    for seg in rate.segments() {
        if seg.start > lo && seg.start < hi_eff {
            cuts.push(seg.start);
        }
    }
    // Resistance switches branch at deformation one.
    if 1.0 > lo && 1.0 < hi_eff {
        cuts.push(1.0);
    }
    if hi_eff.is_finite() {
        cuts.push(hi_eff);
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();

    let mut total = 0.0;
    let piece = |a: f64, b: Option<f64>| -> Result<f64> {
        let idx = rate
            .segments()
            .iter()
            .rposition(|seg| seg.start <= a)
            .expect("families start at zero");
        let seg = rate.segments()[idx];
        let i_seg = rate.integral_from_zero(seg.start)?;
        let beta = weight.exponent(a, alpha);
        let value = match seg.rate {
            RateKind::Infinite => 0.0,
            RateKind::Zero => {
                let scale = cb * (-i_seg / v).exp();
                match b {
                    Some(b) => scale * (b.powf(beta + 1.0) - a.powf(beta + 1.0)) / (beta + 1.0),
                    None => return Ok(f64::INFINITY),
                }
            }
            RateKind::Hyperbolic(k) => {
                // Density restricted to the segment is the pure power
                // (x / start)^(-k/v) times the entry weight.
                let q = k / v;
                let scale = cb * (-i_seg / v).exp() * (q * (seg.start / a).ln()).exp();
                let e_plus_1 = beta - q + 1.0;
                match b {
                    Some(b) => {
                        scale
                            * a.powf(beta + 1.0)
                            * power_integral_factor(e_plus_1, (b / a).ln())
                    }
                    None if e_plus_1 < 0.0 => scale * a.powf(beta + 1.0) / (-e_plus_1),
                    None => return Ok(f64::INFINITY),
                }
            }
            RateKind::Constant(c) => {
                let s = c / v;
                let entry = cb * (-(i_seg + c * (a - seg.start)) / v).exp();
                if beta == 0.0 {
                    match b {
                        Some(b) => entry * (-(-s * (b - a)).exp_m1()) / s,
                        None => entry / s,
                    }
                } else if beta == 1.0 {
                    let flat = match b {
                        Some(b) => (-(-s * (b - a)).exp_m1()) / s,
                        None => 1.0 / s,
                    };
                    let ramp = match b {
                        Some(b) => ramp_exp_integral(s, b - a),
                        None => 1.0 / (s * s),
                    };
                    entry * (a * flat + ramp)
                } else {
                    // Fractional exponent: adaptive quadrature over the
                    // decaying stretch; beyond fifty e-folds the
                    // remainder is far below the target accuracy.
                    let upper = match b {
                        Some(b) => b.min(a + 50.0 / s),
                        None => a + 50.0 / s,
                    };
                    let f = |x: f64| x.powf(beta) * (-s * (x - a)).exp();
                    let est = (f(a) * (upper - a).min(1.0 / s)).abs().max(1e-300);
                    entry * numeric::adaptive_simpson(&f, a, upper, 1e-12 * est)
                }
            }
        };
        Ok(value)
    };

    for pair in cuts.windows(2) {
        let contribution = piece(pair[0], Some(pair[1]))?;
        if contribution.is_infinite() {
            return Ok(f64::INFINITY);
        }
        total += contribution;
    }
    if !hi_eff.is_finite() {
        let last = *cuts.last().expect("at least the lower bound");
        let contribution = piece(last, None)?;
        if contribution.is_infinite() {
            return Ok(f64::INFINITY);
        }
        total += contribution;
    }
    Ok(total)
}

/// Weighted integral of the fixed-speed stationary density over the
/// whole deformation axis.
pub fn weighted_density_integral(
    params: &ModelParams,
    rate: &RateFamily,
    v: f64,
    weight: DensityWeight,
) -> Result<f64> {
    weighted_density_integral_between(params, rate, v, weight, 0.0, f64::INFINITY)
}

/// Sliding speed solving the stationary force balance for this rate
/// family.
pub fn self_consistent_velocity(params: &ModelParams, rate: &RateFamily) -> Result<f64> {
    params.validate()?;
    let v_free = params.gamma * params.f;
    let phi = |v: f64| -> Result<f64> {
        let m = weighted_density_integral(params, rate, v, DensityWeight::Resistance)?;
        if m.is_infinite() {
            return Ok(0.0);
        }
        Ok(params.gamma * (params.f - params.kappa * m).max(0.0))
    };
    let lo = v_free * 1e-12;
    let phi_lo = phi(lo)?;
    if phi_lo <= lo {
        let m_lo = weighted_density_integral(params, rate, lo, DensityWeight::Resistance)?;
        if m_lo.is_infinite() {
            return Err(Error::NoStationaryVelocity);
        }
        // Resistance survives even at vanishing speed: the balance only
        // closes in the fully stuck state.
        return Err(Error::TrivialRegime { v: phi_lo });
    }
    if phi(v_free)? >= v_free {
        // Nothing resists (for instance an immediate cutoff destroys
        // contacts at birth): free sliding is already consistent.
        return Ok(v_free);
    }
    // phi is nonincreasing, so phi(v) - v crosses zero exactly once in
    // the bracket. Inner evaluations stay inside it, where the integral
    // cannot fail.
    numeric::bisect(
        lo,
        v_free,
        |v| phi(v).expect("bracket keeps the speed positive") - v,
        v_free * 1e-15,
        200,
    )
}

/// Death sizes between `x1` and `x2` follow an exact power law with
/// this window's exponent; released energies then follow the mapped
/// exponent `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerWindow {
    pub x1: f64,
    pub x2: f64,
    /// Death-size exponent on the window.
    pub p: f64,
    /// Released-energy exponent `(p + alpha) / (1 + alpha)`.
    pub w: f64,
}

impl PowerWindow {
    /// Energy bounds spanned by the window under the released-energy
    /// map `e = mu * x^(1 + alpha)`.
    pub fn energy_bounds(&self, mu: f64, alpha: f64) -> (f64, f64) {
        (
            mu * self.x1.powf(1.0 + alpha),
            mu * self.x2.powf(1.0 + alpha),
        )
    }
}

/// Map between the death-size exponent on a window and the exponent of
/// the released-energy law it induces.
pub fn energy_exponent_from_size(p: f64, alpha: f64) -> f64 {
    (p + alpha) / (1.0 + alpha)
}

pub fn size_exponent_from_energy(w: f64, alpha: f64) -> f64 {
    w * (1.0 + alpha) - alpha
}

/// A stationary profile: the self-consistent speed together with the
/// rate family that shaped it.
#[derive(Debug, Clone)]
pub struct StationaryProfile {
    params: ModelParams,
    rate: RateFamily,
    pub v: f64,
    /// Present when the family was built around a power-law window.
    pub window: Option<PowerWindow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryMoments {
    pub n: f64,
    pub deformation: f64,
    pub resistance: f64,
    pub v: f64,
}

impl StationaryProfile {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn rate(&self) -> &RateFamily {
        &self.rate
    }

    /// Density value at one deformation; zero at and beyond a cutoff.
    pub fn rho(&self, x: f64) -> Result<f64> {
        let i = self.rate.integral_from_zero(x)?;
        Ok(self.params.cb_bar * (-i / self.v).exp())
    }

    /// Density of the continuous death flux `cu * rho`. A cutoff also
    /// absorbs an additional point flux `v * rho(cutoff)` that this
    /// density does not include.
    pub fn death_flux(&self, x: f64) -> Result<f64> {
        if self.rate.cutoff().is_some_and(|c| x >= c) {
            return Ok(0.0);
        }
        Ok(self.rate.rate(x)? * self.rho(x)?)
    }

    pub fn moments(&self) -> Result<StationaryMoments> {
        Ok(StationaryMoments {
            n: weighted_density_integral(&self.params, &self.rate, self.v, DensityWeight::Count)?,
            deformation: weighted_density_integral(
                &self.params,
                &self.rate,
                self.v,
                DensityWeight::Deformation,
            )?,
            resistance: weighted_density_integral(
                &self.params,
                &self.rate,
                self.v,
                DensityWeight::Resistance,
            )?,
            v: self.v,
        })
    }

    /// Contact mass between two deformations.
    pub fn mass_between(&self, lo: f64, hi: f64) -> Result<f64> {
        weighted_density_integral_between(
            &self.params,
            &self.rate,
            self.v,
            DensityWeight::Count,
            lo,
            hi,
        )
    }
}

/// Solve the force balance for an arbitrary family and package the
/// profile.
pub fn self_consistent_profile(
    params: &ModelParams,
    rate: &RateFamily,
) -> Result<StationaryProfile> {
    let v = self_consistent_velocity(params, rate)?;
    Ok(StationaryProfile {
        params: *params,
        rate: rate.clone(),
        v,
        window: None,
    })
}

/// Profile at an externally imposed speed, for diagnostics and grid
/// initialization.
pub fn profile_for_velocity(
    params: &ModelParams,
    rate: &RateFamily,
    v: f64,
) -> Result<StationaryProfile> {
    params.validate()?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidState(format!(
            "profile needs a positive finite speed, got {v}"
        )));
    }
    Ok(StationaryProfile {
        params: *params,
        rate: rate.clone(),
        v,
        window: None,
    })
}

/// Rate below the window in a speed-proportional family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowHead {
    /// No destruction below the window: the density enters flat.
    Silent,
    /// Constant rate `a * v` below the window: the density enters with
    /// an exponential shoulder independent of the speed.
    Damped { a: f64 },
}

/// Build the speed-proportional family whose death sizes follow
/// `x^(-p)` between `x1` and `x2`, solve its force balance, and return
/// the profile with the window attached.
///
/// Because every rate coefficient carries one factor of the speed, the
/// stationary density is speed-independent: the resistance integral can
/// be evaluated once on the unit-speed family and the balance solved in
/// closed form.
pub fn windowed_profile(
    params: &ModelParams,
    head: WindowHead,
    x1: f64,
    x2: f64,
    p: f64,
) -> Result<StationaryProfile> {
    params.validate()?;
    if !(x1 > 0.0 && x2 > x1 && x2.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "window needs 0 < x1 < x2 < infinity, got [{x1}, {x2}]"
        )));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "window exponent must exceed one, got {p}"
        )));
    }
    if let WindowHead::Damped { a } = head {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "head rate factor must be positive, got {a}"
            )));
        }
    }
    let family_at = |v: f64| -> Result<RateFamily> {
        let head_seg = RateSegment {
            start: 0.0,
            rate: match head {
                WindowHead::Silent => RateKind::Zero,
                WindowHead::Damped { a } => RateKind::Constant(a * v),
            },
        };
        RateFamily::from_segments(vec![
            head_seg,
            RateSegment {
                start: x1,
                rate: RateKind::Hyperbolic((p - 1.0) * v),
            },
            RateSegment {
                start: x2,
                rate: RateKind::Infinite,
            },
        ])
    };
    let unit = family_at(1.0)?;
    let m = weighted_density_integral(params, &unit, 1.0, DensityWeight::Resistance)?;
    debug_assert!(m.is_finite(), "the window cutoff bounds the integral");
    let v = params.gamma * (params.f - params.kappa * m);
    if v <= 0.0 {
        return Err(Error::TrivialRegime { v: 0.0 });
    }
    Ok(StationaryProfile {
        params: *params,
        rate: family_at(v)?,
        v,
        window: Some(PowerWindow {
            x1,
            x2,
            p,
            w: energy_exponent_from_size(p, params.alpha),
        }),
    })
}

/// Hyperbolic coefficient of the destruction rate
/// `cu(x) = (p - 1) v / (x + b x^p)` that makes stationary death sizes
/// follow `x^(-p)`. Any tail curvature `b > 0` satisfies the same
/// design equation but leaves the density non-normalizable (it tends to
/// a constant), and `b < 0` turns the rate negative, so only `b = 0`
/// yields a usable family.
pub fn power_law_window_rate(p: f64, v: f64, b: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite() && v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "power-law window needs p > 1 and v > 0, got p = {p}, v = {v}"
        )));
    }
    if b != 0.0 {
        return Err(Error::UnphysicalRateTail { b });
    }
    Ok((p - 1.0) * v)
}

/// Residual of the design equation for the rate law above: the
/// logarithmic slope of the death-size density must equal `-p / x`.
/// Identically zero for every curvature `b >= 0`; the speed cancels.
pub fn power_law_design_residual(x: f64, p: f64, b: f64) -> f64 {
    let denom = x + b * x.powf(p);
    p / x - (1.0 + p * b * x.powf(p - 1.0)) / denom - (p - 1.0) / denom
}
