//! Finite-difference transport of the mean-field deformation density.
//!
//! The density `rho(t, x)` of attached contacts per unit deformation is
//! advected toward larger `x` with the common sliding speed, decays with
//! the local destruction rate, and is replenished at `x = 0` with influx
//! proportional to the speed. The speed itself is the clamped force
//! balance against the resistance integral, which couples the transport
//! globally.
//!
//! Space is a uniform node grid, advection is first-order upwind, decay
//! is explicit, and the inflow boundary is the exact Dirichlet value
//! `rho(0) = cb_bar` whenever the population slides. Nodes at or beyond
//! a rate cutoff are absorbing and pinned to zero. The explicit step is
//! positivity-preserving under the combined advection and decay bound
//! enforced by [`DensityGrid::stable_dt`].

use crate::error::{Error, Result};
use crate::model;
use crate::params::ModelParams;
use crate::rate::RateFamily;

/// Sliding is treated as stopped below this speed when applying the
/// inflow boundary.
const V_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMoments {
    pub time: f64,
    /// Contact count per unit population scale.
    pub n: f64,
    /// Resistance integral entering the force balance.
    pub m: f64,
    pub v: f64,
}

#[derive(Debug, Clone)]
pub struct DensityGrid {
    params: ModelParams,
    dx: f64,
    nodes: Vec<f64>,
    z: Vec<f64>,
    cu: Vec<f64>,
    rho: Vec<f64>,
    scratch: Vec<f64>,
    time: f64,
    cu_max_finite: f64,
}

impl DensityGrid {
    /// Grid span that comfortably contains the sliding-state support:
    /// four times the deformation at which a lone contact stalls.
    pub fn default_x_max(params: &ModelParams) -> f64 {
        let ratio = params.f / params.kappa;
        let stall = if ratio <= 1.0 {
            ratio
        } else {
            ratio.powf(1.0 / params.alpha)
        };
        4.0 * stall
    }

    /// Empty-density grid over `[0, x_max]` with spacing `dx`. The grid
    /// is truncated at a rate cutoff, which is absorbing.
    pub fn new(params: &ModelParams, rate: &RateFamily, x_max: f64, dx: f64) -> Result<Self> {
        params.validate()?;
        if !(dx > 0.0 && dx.is_finite() && x_max > dx && x_max.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "grid needs 0 < dx < x_max, got dx = {dx}, x_max = {x_max}"
            )));
        }
        let x_max = match rate.cutoff() {
            Some(c) if c < x_max => c,
            _ => x_max,
        };
        let count = (x_max / dx).ceil() as usize + 1;
        if count < 3 {
            return Err(Error::InvalidParams(format!(
                "grid collapsed to {count} nodes; shrink dx"
            )));
        }
        let nodes: Vec<f64> = (0..count).map(|j| j as f64 * dx).collect();
        let z = nodes
            .iter()
            .map(|&x| model::z_alpha(x, params.alpha))
            .collect();
        let cu: Vec<f64> = nodes
            .iter()
            .map(|&x| rate.rate_unchecked(x))
            .collect();
        let cu_max_finite = cu.iter().copied().filter(|c| c.is_finite()).fold(0.0, f64::max);
        Ok(DensityGrid {
            params: *params,
            dx,
            rho: vec![0.0; count],
            scratch: vec![0.0; count],
            nodes,
            z,
            cu,
            time: 0.0,
            cu_max_finite,
        })
    }

    /// Overwrite the density with samples of `profile` at the nodes.
    /// Absorbing nodes stay zero.
    pub fn set_density(&mut self, profile: impl Fn(f64) -> f64) -> Result<()> {
        for j in 0..self.nodes.len() {
            let value = if self.cu[j].is_finite() {
                profile(self.nodes[j])
            } else {
                0.0
            };
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidState(format!(
                    "density must be finite and nonnegative, got {value} at x = {}",
                    self.nodes[j]
                )));
            }
            self.rho[j] = value;
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn density(&self) -> &[f64] {
        &self.rho
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    fn trapezoid(&self, weighted: impl Fn(usize) -> f64) -> f64 {
        let last = self.rho.len() - 1;
        let mut acc = 0.5 * (weighted(0) + weighted(last));
        for j in 1..last {
            acc += weighted(j);
        }
        acc * self.dx
    }

    /// Clamped force balance against the current resistance integral.
    pub fn velocity(&self) -> f64 {
        let m = self.trapezoid(|j| self.z[j] * self.rho[j]);
        self.params.gamma * (self.params.f - self.params.kappa * m).max(0.0)
    }

    pub fn moments(&self) -> GridMoments {
        GridMoments {
            time: self.time,
            n: self.trapezoid(|j| self.rho[j]),
            m: self.trapezoid(|j| self.z[j] * self.rho[j]),
            v: self.velocity(),
        }
    }

    /// Fraction of the contact mass in the outer tenth of the grid; a
    /// growing value signals a span chosen too small.
    pub fn tail_mass_fraction(&self) -> f64 {
        let total = self.trapezoid(|j| self.rho[j]);
        if total <= 0.0 {
            return 0.0;
        }
        let start = self.rho.len() - self.rho.len() / 10 - 1;
        let tail: f64 = self.rho[start..].iter().sum::<f64>() * self.dx;
        tail / total
    }

    /// Largest positivity-preserving explicit step for the current
    /// speed; infinite when nothing moves or decays.
    pub fn stable_dt(&self) -> f64 {
        let rate = self.velocity() / self.dx + self.cu_max_finite;
        if rate <= 0.0 {
            f64::INFINITY
        } else {
            0.9 / rate
        }
    }

    /// One explicit upwind step with the speed frozen over the step.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "step needs positive dt, got {dt}"
            )));
        }
        let dt_max = self.stable_dt();
        if dt > dt_max {
            return Err(Error::CflViolation { dt, dt_max });
        }
        let v = self.velocity();
        let courant = v * dt / self.dx;
        let last = self.rho.len() - 1;
        self.scratch[0] = if v > V_EPS {
            // Exact inflow value: flux v * rho(0) matches the birth flux
            // cb_bar * v of the underlying process.
            self.params.cb_bar
        } else {
            self.rho[0] * (1.0 - dt * self.cu[0]).max(0.0)
        };
        for j in 1..=last {
            if !self.cu[j].is_finite() {
                self.scratch[j] = 0.0;
                continue;
            }
            let advected = self.rho[j] - courant * (self.rho[j] - self.rho[j - 1]);
            self.scratch[j] = advected - dt * self.cu[j] * self.rho[j];
        }
        std::mem::swap(&mut self.rho, &mut self.scratch);
        self.time += dt;
        Ok(())
    }

    /// Advance to `t_end` in stability-respecting substeps no longer
    /// than `dt_hint`.
    pub fn advance_to(&mut self, t_end: f64, dt_hint: f64) -> Result<()> {
        if !(t_end >= self.time) {
            return Err(Error::InvalidParams(format!(
                "cannot advance backwards from {} to {t_end}",
                self.time
            )));
        }
        // An infinite hint is allowed: the stability bound and the
        // remaining span always cap the actual substep.
        if !(dt_hint > 0.0) {
            return Err(Error::InvalidParams(format!(
                "advance needs positive dt hint, got {dt_hint}"
            )));
        }
        let guard = 1e-12 * t_end.abs().max(1.0);
        while t_end - self.time > guard {
            let dt = dt_hint.min(self.stable_dt()).min(t_end - self.time);
            self.step(dt)?;
        }
        self.time = t_end;
        Ok(())
    }
}
