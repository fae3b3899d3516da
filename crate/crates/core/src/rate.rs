//! Piecewise destruction-rate families `cu(x)`.
//!
//! A family partitions `[0, infinity)` into contiguous segments, each of
//! one of four kinds: zero, constant, hyperbolic `k / x`, or an infinite
//! cutoff. The cutoff may only appear as the trailing segment and models
//! instant destruction beyond a maximal deformation. Event sampling needs
//! exact suprema over position intervals, and stationary densities need
//! the exact primitive `integral_0^x cu`, so both are provided per segment
//! in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateKind {
    Zero,
    Constant(f64),
    Hyperbolic(f64),
    Infinite,
}

/// Direction of a segment's rate as a function of deformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Flat,
    Decreasing,
    Unbounded,
}

impl RateKind {
    pub fn monotonicity(&self) -> Monotonicity {
        match self {
            RateKind::Zero | RateKind::Constant(_) => Monotonicity::Flat,
            RateKind::Hyperbolic(_) => Monotonicity::Decreasing,
            RateKind::Infinite => Monotonicity::Unbounded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSegment {
    pub start: f64,
    pub rate: RateKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RateSegment>", into = "Vec<RateSegment>")]
pub struct RateFamily {
    segments: Vec<RateSegment>,
}

impl TryFrom<Vec<RateSegment>> for RateFamily {
    type Error = Error;
    fn try_from(segments: Vec<RateSegment>) -> Result<Self> {
        RateFamily::from_segments(segments)
    }
}

impl From<RateFamily> for Vec<RateSegment> {
    fn from(family: RateFamily) -> Self {
        family.segments
    }
}

impl RateFamily {
    /// `cu(x) = 0` everywhere.
    pub fn zero() -> Self {
        RateFamily {
            segments: vec![RateSegment {
                start: 0.0,
                rate: RateKind::Zero,
            }],
        }
    }

    /// `cu(x) = value` everywhere.
    pub fn constant(value: f64) -> Result<Self> {
        RateFamily::from_segments(vec![RateSegment {
            start: 0.0,
            rate: RateKind::Constant(value),
        }])
    }

    /// Instant destruction everywhere (`cu = infinity` from `x = 0` on).
    pub fn immediate_cutoff() -> Self {
        RateFamily {
            segments: vec![RateSegment {
                start: 0.0,
                rate: RateKind::Infinite,
            }],
        }
    }

    pub fn from_segments(segments: Vec<RateSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidRateFamily("no segments".into()));
        }
        if segments[0].start != 0.0 {
            return Err(Error::InvalidRateFamily(format!(
                "first segment must start at 0, got {}",
                segments[0].start
            )));
        }
        for pair in segments.windows(2) {
            if !(pair[0].start < pair[1].start) {
                return Err(Error::InvalidRateFamily(format!(
                    "segment starts must increase strictly: {} then {}",
                    pair[0].start, pair[1].start
                )));
            }
        }
        for (i, seg) in segments.iter().enumerate() {
            if !seg.start.is_finite() {
                return Err(Error::InvalidRateFamily(format!(
                    "segment start must be finite, got {}",
                    seg.start
                )));
            }
            match seg.rate {
                RateKind::Zero => {}
                RateKind::Constant(c) => {
                    if !(c > 0.0 && c.is_finite()) {
                        return Err(Error::InvalidRateFamily(format!(
                            "constant rate must be positive and finite, got {c}"
                        )));
                    }
                }
                RateKind::Hyperbolic(k) => {
                    if !(k > 0.0 && k.is_finite()) {
                        return Err(Error::InvalidRateFamily(format!(
                            "hyperbolic coefficient must be positive and finite, got {k}"
                        )));
                    }
                    // k / x is unbounded as x -> 0, which would break
                    // interval suprema on reachable intervals.
                    if seg.start <= 0.0 {
                        return Err(Error::InvalidRateFamily(
                            "hyperbolic segment must start above 0".into(),
                        ));
                    }
                }
                RateKind::Infinite => {
                    if i + 1 != segments.len() {
                        return Err(Error::InvalidRateFamily(
                            "infinite cutoff must be the trailing segment".into(),
                        ));
                    }
                }
            }
        }
        Ok(RateFamily { segments })
    }

    pub fn segments(&self) -> &[RateSegment] {
        &self.segments
    }

    /// Start of the trailing infinite-cutoff segment, if present.
    pub fn cutoff(&self) -> Option<f64> {
        match self.segments.last() {
            Some(RateSegment {
                start,
                rate: RateKind::Infinite,
            }) => Some(*start),
            _ => None,
        }
    }

    fn segment_index(&self, x: f64) -> usize {
        // Last segment whose start is <= x.
        match self
            .segments
            .binary_search_by(|seg| seg.start.partial_cmp(&x).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    /// Rate at a single deformation; `f64::INFINITY` at and beyond the
    /// cutoff, an error for negative input.
    pub fn rate(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeDeformation(x));
        }
        Ok(self.rate_unchecked(x))
    }

    #[inline]
    pub(crate) fn rate_unchecked(&self, x: f64) -> f64 {
        match self.segments[self.segment_index(x)].rate {
            RateKind::Zero => 0.0,
            RateKind::Constant(c) => c,
            RateKind::Hyperbolic(k) => k / x,
            RateKind::Infinite => f64::INFINITY,
        }
    }

    /// Exact supremum of `cu` over the half-open interval `[lo, hi)`
    /// (the rate at `lo` when the interval is empty). Returns infinity
    /// only when the interval overlaps the cutoff's interior.
    pub fn interval_sup(&self, lo: f64, hi: f64) -> Result<f64> {
        if lo < 0.0 || lo.is_nan() || hi.is_nan() {
            return Err(Error::NegativeDeformation(lo.min(hi)));
        }
        if hi <= lo {
            return Ok(self.rate_unchecked(lo));
        }
        let mut sup = 0.0_f64;
        let first = self.segment_index(lo);
        for seg in self.segments.iter().skip(first) {
            if seg.start >= hi {
                break;
            }
            let seg_lo = seg.start.max(lo);
            let candidate = match seg.rate {
                RateKind::Zero => 0.0,
                RateKind::Constant(c) => c,
                // Decreasing on the segment: supremum at the left edge.
                RateKind::Hyperbolic(k) => k / seg_lo,
                RateKind::Infinite => f64::INFINITY,
            };
            sup = sup.max(candidate);
        }
        Ok(sup)
    }

    /// Exact primitive `integral_0^x cu(y) dy`; infinite at and beyond
    /// the cutoff.
    pub fn integral_from_zero(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeDeformation(x));
        }
        let mut total = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.start >= x {
                break;
            }
            let hi = match self.segments.get(i + 1) {
                Some(next) => next.start.min(x),
                None => x,
            };
            match seg.rate {
                RateKind::Zero => {}
                RateKind::Constant(c) => total += c * (hi - seg.start),
                RateKind::Hyperbolic(k) => total += k * (hi / seg.start).ln(),
                RateKind::Infinite => return Ok(f64::INFINITY),
            }
        }
        if self.cutoff().is_some_and(|c| x >= c) {
            return Ok(f64::INFINITY);
        }
        Ok(total)
    }
}
