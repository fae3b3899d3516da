//! Small numerical building blocks: bracketing bisection and adaptive
//! Simpson quadrature.

use crate::error::{Error, Result};

/// Bisection root finding on [lo, hi]. Requires a sign change (either
/// endpoint may sit exactly on zero). Converges to an interval of width
/// `x_tol` or until `max_iter` halvings.
pub fn bisect<F: Fn(f64) -> f64>(
    mut lo: f64,
    mut hi: f64,
    f: F,
    x_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::RootSearch(format!("empty bracket [{lo}, {hi}]")));
    }
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::RootSearch(format!(
            "no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Adaptive Simpson quadrature of `f` over [a, b].
///
/// `tol` is an absolute tolerance for the whole interval; recursion splits
/// it in the usual way and terminates on the standard |S2 - S1| / 15
/// estimate, with a depth cap as a safety net for non-smooth integrands.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson_rule(a, b, fa, fm, fb);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[inline]
fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let root = bisect(0.0, 2.0, |x| x * x - 2.0, 1e-14, 200).unwrap();
        assert!((root - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bisect_accepts_root_at_endpoint() {
        let root = bisect(0.0, 1.0, |x| x, 1e-14, 100).unwrap();
        assert_eq!(root, 0.0);
    }

    #[test]
    fn bisect_rejects_same_sign_bracket() {
        assert!(bisect(1.0, 2.0, |x| x * x + 1.0, 1e-12, 100).is_err());
    }

    #[test]
    fn simpson_integrates_polynomial_exactly() {
        // Simpson is exact for cubics.
        let value = adaptive_simpson(&|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        assert!((value - (4.0 - 4.0 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn simpson_handles_exponential() {
        let value = adaptive_simpson(&|x: f64| (-x).exp(), 0.0, 10.0, 1e-12);
        let exact = 1.0 - (-10.0_f64).exp();
        assert!((value - exact).abs() < 1e-11, "value {value} vs {exact}");
    }

    #[test]
    fn simpson_handles_mild_singularity_gradient() {
        // x^0.3 has unbounded derivative at 0; adaptive refinement copes.
        let value = adaptive_simpson(&|x: f64| x.powf(0.3), 0.0, 1.0, 1e-10);
        assert!((value - 1.0 / 1.3).abs() < 1e-8, "value {value}");
    }
}
