//! Model parameters shared by every component.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and scale parameters of the contact model.
///
/// `f` is the driving force per unit scale, `gamma` the plate mobility,
/// `kappa` the contact spring constant, `alpha` the resistance exponent
/// (`z(x) = min(x, x^alpha)`), `cb_bar` the birth intensity per unit
/// velocity and scale, `mu` the energy scale of a failing contact, and
/// `lambda_scale` the system size used by finite-size simulation runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub f: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub cb_bar: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_lambda")]
    pub lambda_scale: f64,
}

fn default_mu() -> f64 {
    1.0
}

fn default_lambda() -> f64 {
    1.0
}

impl ModelParams {
    /// All couplings 1, scale 1. Handy baseline for tests and docs.
    pub fn unit() -> Self {
        ModelParams {
            f: 1.0,
            gamma: 1.0,
            kappa: 1.0,
            alpha: 1.0,
            cb_bar: 1.0,
            mu: 1.0,
            lambda_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f", self.f),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
            ("cb_bar", self.cb_bar),
            ("mu", self.mu),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.lambda_scale >= 1.0 && self.lambda_scale.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "lambda_scale must be >= 1 and finite, got {}",
                self.lambda_scale
            )));
        }
        Ok(())
    }

    /// Effective couplings of a finite-size run at scale `lambda_scale`.
    ///
    /// The drive and the birth intensity grow with the scale while the
    /// mobility shrinks with it, which keeps the velocity an intensive
    /// quantity: with these couplings `v = gamma * (f - kappa * sum_z /
    /// lambda)`, so `n / lambda` and `sum_x / lambda` obey the macroscopic
    /// moment equations as the scale grows. At scale 1 the parameters are
    /// returned unchanged.
    pub fn micro_effective(&self) -> ModelParams {
        ModelParams {
            f: self.f * self.lambda_scale,
            gamma: self.gamma / self.lambda_scale,
            cb_bar: self.cb_bar * self.lambda_scale,
            lambda_scale: 1.0,
            ..*self
        }
    }
}
