//! Deterministic pseudo-random numbers for event sampling.
//!
//! The generator is SplitMix64: the state walks a Weyl sequence (a counter
//! with a fixed odd increment) and each output is an avalanche hash of the
//! counter, so a stream is a pure function of `(seed, draw index)`. That
//! makes runs bit-reproducible across platforms and lets ensemble members
//! use cheaply derived, statistically independent substreams.

/// Weyl increment (odd, 2^64 / golden ratio).
const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Second odd constant used only for substream derivation.
const STREAM_SALT: u64 = 0xD2B7_4407_B1CE_6E93;

/// SplitMix64 finalizer: bijective avalanche mix of a 64-bit word.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Substream `index` of a master seed. Distinct indices land on
    /// distinct Weyl lanes before mixing, so substreams never share a
    /// counter sequence with each other or with the master stream.
    pub fn substream(master_seed: u64, index: u64) -> Self {
        SplitMix64::new(substream_seed(master_seed, index))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in the half-open interval [0, 1) with 53-bit resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential variate with the given rate, by inverse CDF. The
    /// uniform is taken in (0, 1], so the result is always finite.
    #[inline]
    pub fn exp(&mut self, rate: f64) -> f64 {
        debug_assert!(rate > 0.0);
        let u = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        -u.ln() / rate
    }
}

/// Seed of substream `index` derived from a master seed.
pub fn substream_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed).wrapping_add(index.wrapping_mul(STREAM_SALT))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn unit_doubles_stay_in_range() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..100_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u), "u = {u} out of [0, 1)");
        }
    }

    #[test]
    fn exponential_variates_match_moments() {
        let mut rng = SplitMix64::new(123);
        let rate = 2.5;
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = rng.exp(rate);
            assert!(x.is_finite() && x >= 0.0);
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        // Exp(rate): mean 1/rate, variance 1/rate^2; 5 sigma tolerance.
        let se_mean = 1.0 / rate / (n as f64).sqrt();
        assert!(
            (mean - 1.0 / rate).abs() < 5.0 * se_mean,
            "mean {mean} vs {}",
            1.0 / rate
        );
        assert!((var - 1.0 / (rate * rate)).abs() < 0.01);
    }

    #[test]
    fn substreams_differ_from_each_other_and_master() {
        let mut master = SplitMix64::new(99);
        let mut s0 = SplitMix64::substream(99, 0);
        let mut s1 = SplitMix64::substream(99, 1);
        let a: Vec<u64> = (0..8).map(|_| master.next_u64()).collect();
        let b: Vec<u64> = (0..8).map(|_| s0.next_u64()).collect();
        let c: Vec<u64> = (0..8).map(|_| s1.next_u64()).collect();
        assert_ne!(a, b);
        assert_ne!(b, c);
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_mean_is_half() {
        let mut rng = SplitMix64::new(2024);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| rng.next_f64()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }
}
