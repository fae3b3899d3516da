//! Event-driven stick-slip contact dynamics and its mean-field limits.
//!
//! A sliding interface is modelled as a population of elastic contacts.
//! Each contact stretches with the common sliding speed, resists with a
//! bounded elastic force, detaches at a deformation-dependent rate, and
//! is replenished at a rate proportional to the speed. The speed itself
//! is the instantaneous force balance, clamped at zero, which makes the
//! coupling between motion and population global.
//!
//! The crate provides four consistent views of the same dynamics:
//!
//! * [`micro`]: exact event-driven simulation of a finite population,
//!   with an adjustable population scale and full event catalogs.
//! * [`pde`]: upwind finite-difference transport of the deformation
//!   density in the infinite-population limit.
//! * [`moments`]: the closed two-moment reduction for a single elastic
//!   exponent and constant destruction rate, with its fixed point and
//!   stability classification.
//! * [`stationary`]: closed-form stationary profiles, self-consistent
//!   sliding speeds, and the windowed rate families whose released
//!   energies follow exact power laws.
//!
//! [`fit`] estimates power-law exponents from event catalogs, [`rate`]
//! describes piecewise destruction-rate families, and [`io`] writes the
//! standard CSV products. Randomness comes from the counter-based
//! generator in [`rng`], so every run is reproducible from a single
//! seed, including parallel ensembles.

// Negated comparisons in validation are load-bearing: `!(x > 0.0)`
// must reject NaN, which the positively phrased `x <= 0.0` lets pass.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod io;
pub mod micro;
pub mod model;
pub mod moments;
pub mod numeric;
pub mod params;
pub mod pde;
pub mod rate;
pub mod rng;
pub mod stationary;

pub use error::{Error, Result};
pub use fit::{fit_energy_exponent, FitMethod, GrFit, Histogram};
pub use micro::{simulate, simulate_ensemble, Observable, SimOptions, SimOutput};
pub use model::EnergyMode;
pub use moments::{FixedPointReport, MomentState, StabilityClass};
pub use params::ModelParams;
pub use pde::DensityGrid;
pub use rate::{RateFamily, RateKind, RateSegment};
pub use stationary::{
    self_consistent_profile, windowed_profile, PowerWindow, StationaryProfile, WindowHead,
};
