//! Acceptance gate for the whole workspace. Each test exercises one
//! end-to-end requirement and prints a single PASS or FAIL line, so the
//! gate can be read off the test output with `--nocapture`. Tolerances
//! are pinned next to the checks they guard.

// Negated tolerance checks are load-bearing: `!(err < tol)` must fail
// on NaN, which the positively phrased `err >= tol` lets pass.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::time::Instant;

use stickslip_core::fit::{self, FitMethod};
use stickslip_core::micro::{self, EventKind, Observable, SimOptions};
use stickslip_core::model;
use stickslip_core::moments::{self, MomentState, StabilityClass};
use stickslip_core::pde::DensityGrid;
use stickslip_core::rate::{RateFamily, RateKind, RateSegment};
use stickslip_core::rng::SplitMix64;
use stickslip_core::stationary::{self, WindowHead};
use stickslip_core::ModelParams;

type Outcome = Result<(), String>;

fn report(label: &str, outcome: Outcome) {
    match &outcome {
        Ok(()) => println!("acceptance {label}: PASS"),
        Err(why) => println!("acceptance {label}: FAIL ({why})"),
    }
    if let Err(why) = outcome {
        panic!("{label}: {why}");
    }
}

fn fail<T>(err: T) -> String
where
    T: std::fmt::Display,
{
    err.to_string()
}

/// Sample mean and its standard error (unbiased variance).
fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Criterion 1: the transport equation with a constant destruction rate relaxes
/// to the exponential stationary profile predicted by the moment fixed
/// point: `rho(x) = cb_bar * exp(-cu_bar * x / v0)`.
#[test]
fn criterion_1_transport_relaxes_to_closed_form_density() {
    report(
        "1 (transport density relaxes to the closed-form profile)",
        run_criterion_1(),
    );
}

fn run_criterion_1() -> Outcome {
    const DX: f64 = 1e-3;
    const X_MAX: f64 = 8.0;
    const L1_TOL: f64 = 1e-2;
    const MAX_SECONDS: f64 = 60.0;

    let start = Instant::now();
    let params = ModelParams::unit();
    let cu = 1.0;
    let fp = moments::fixed_point(&params, cu).map_err(fail)?;
    let rate = RateFamily::constant(cu).map_err(fail)?;
    let mut grid = DensityGrid::new(&params, &rate, X_MAX, DX).map_err(fail)?;
    grid.advance_to(50.0 / cu, f64::INFINITY).map_err(fail)?;

    // L1 distance over the grid by trapezoid weights, plus the exact
    // profile mass beyond the grid where the numeric density is zero.
    let nodes = grid.nodes();
    let mut l1 = 0.0;
    for (i, (&x, &r)) in nodes.iter().zip(grid.density()).enumerate() {
        let exact = params.cb_bar * (-cu * x / fp.v).exp();
        let weight = if i == 0 || i + 1 == nodes.len() {
            0.5
        } else {
            1.0
        };
        l1 += weight * (r - exact).abs() * DX;
    }
    l1 += params.cb_bar * fp.v / cu * (-cu * X_MAX / fp.v).exp();

    if !(l1 < L1_TOL) {
        return Err(format!("L1 distance {l1} is not below {L1_TOL}"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= MAX_SECONDS {
        return Err(format!("took {elapsed:.1}s, budget {MAX_SECONDS}s"));
    }
    Ok(())
}

/// Criterion 2: with every parameter at one the fixed point sits at the golden
/// ratio: `N0 = v0 = (sqrt(5)-1)/2` and `M0 = (3-sqrt(5))/2`, and the
/// moment right-hand side vanishes there.
#[test]
fn criterion_2_unit_fixed_point_hits_golden_ratio_values() {
    report(
        "2 (unit-parameter fixed point at the golden ratio)",
        run_criterion_2(),
    );
}

fn run_criterion_2() -> Outcome {
    const VALUE_TOL: f64 = 1e-9;
    const PRINTED_TOL: f64 = 5e-7;
    const RESIDUAL_TOL: f64 = 1e-12;

    let params = ModelParams::unit();
    let fp = moments::fixed_point(&params, 1.0).map_err(fail)?;
    let root5 = 5.0_f64.sqrt();
    let v_exact = (root5 - 1.0) / 2.0;
    let m_exact = (3.0 - root5) / 2.0;

    // The six-decimal reference prints round these exact values.
    if (v_exact - 0.618034).abs() > PRINTED_TOL || (m_exact - 0.381966).abs() > PRINTED_TOL {
        return Err("closed forms disagree with their six-decimal prints".into());
    }
    for (name, got, want) in [
        ("v0", fp.v, v_exact),
        ("N0", fp.n, v_exact),
        ("M0", fp.m, m_exact),
    ] {
        if (got - want).abs() > VALUE_TOL {
            return Err(format!("{name} = {got}, expected {want} within {VALUE_TOL}"));
        }
    }
    let resid = moments::rhs(&params, 1.0, MomentState { n: fp.n, m: fp.m });
    if resid.n.abs() >= RESIDUAL_TOL || resid.m.abs() >= RESIDUAL_TOL {
        return Err(format!(
            "rhs residual ({}, {}) is not below {RESIDUAL_TOL}",
            resid.n, resid.m
        ));
    }
    Ok(())
}

/// Criterion 3: scanning the order parameter (the drive at unit mobility) flips
/// the fixed point from stable spiral to stable node exactly at twenty:
/// below it the eigenvalues are a complex pair with negative real part,
/// above it two negative reals.
#[test]
fn criterion_3_spiral_to_node_threshold_at_twenty() {
    report("3 (spiral-to-node threshold at drive 20)", run_criterion_3());
}

fn run_criterion_3() -> Outcome {
    const THRESHOLD_TOL: f64 = 1e-6;

    let report_at = |a: f64| -> Result<moments::FixedPointReport, String> {
        let params = ModelParams {
            f: a,
            ..ModelParams::unit()
        };
        moments::fixed_point(&params, 1.0).map_err(fail)
    };

    // Bisection on the discriminant sign over the scanned range.
    let (mut lo, mut hi) = (5.0, 100.0);
    if !(report_at(lo)?.discriminant < 0.0 && report_at(hi)?.discriminant > 0.0) {
        return Err("discriminant does not change sign over the scan range".into());
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if report_at(mid)?.discriminant < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a_star = 0.5 * (lo + hi);
    if (a_star - 20.0).abs() > THRESHOLD_TOL {
        return Err(format!("sign change at {a_star}, expected 20 within {THRESHOLD_TOL}"));
    }

    let spiral = report_at(5.0)?;
    let [(re1, im1), (re2, im2)] = spiral.eigenvalues();
    if spiral.class != StabilityClass::StableSpiral || im1 == 0.0 || re1 >= 0.0 || re2 >= 0.0 {
        return Err(format!(
            "drive 5 should be a stable spiral, got {:?} with eigenvalues ({re1}, {im1}), ({re2}, {im2})",
            spiral.class
        ));
    }
    let node = report_at(100.0)?;
    let [(re1, im1), (re2, im2)] = node.eigenvalues();
    if node.class != StabilityClass::StableNode
        || im1 != 0.0
        || im2 != 0.0
        || re1 >= 0.0
        || re2 >= 0.0
    {
        return Err(format!(
            "drive 100 should be a stable node, got {:?} with eigenvalues ({re1}, {im1}), ({re2}, {im2})",
            node.class
        ));
    }
    Ok(())
}

/// Criterion 4: an ensemble of finite-size runs reproduces the deterministic
/// moment trajectory: the scaled count and total deformation stay
/// within three standard errors at ten checkpoints.
#[test]
fn criterion_4_micro_ensemble_tracks_moment_system() {
    report(
        "4 (micro ensemble tracks the moment system)",
        run_criterion_4(),
    );
}

fn run_criterion_4() -> Outcome {
    const SCALE: f64 = 200.0;
    const REPLICAS: usize = 200;
    const SIGMAS: f64 = 3.0;
    const MAX_SECONDS: f64 = 300.0;

    let start = Instant::now();
    let params = ModelParams {
        lambda_scale: SCALE,
        ..ModelParams::unit()
    };
    let cu = 1.0;
    let rate = RateFamily::constant(cu).map_err(fail)?;
    let mut opts = SimOptions::new(10.0, 0x5EED_0004);
    opts.sample_dt = Some(1.0);
    let runs = micro::simulate_ensemble(&params, &rate, &opts, REPLICAS).map_err(fail)?;
    let ode = moments::integrate(
        &params,
        cu,
        MomentState { n: 0.0, m: 0.0 },
        10.0,
        1e-3,
    )
    .map_err(fail)?;

    for k in 1..=10usize {
        let target = &ode[k * 1000];
        if (target.time - k as f64).abs() > 1e-9 {
            return Err(format!("checkpoint mismatch at index {k}"));
        }
        let n_vals: Vec<f64> = runs
            .iter()
            .map(|r| r.trajectory[k].n as f64 / SCALE)
            .collect();
        let m_vals: Vec<f64> = runs
            .iter()
            .map(|r| r.trajectory[k].sum_x / SCALE)
            .collect();
        for (name, vals, want) in [
            ("count", &n_vals, target.state.n),
            ("deformation", &m_vals, target.state.m),
        ] {
            let (mean, se) = mean_se(vals);
            if se == 0.0 {
                return Err(format!("degenerate spread for {name} at t = {k}"));
            }
            if (mean - want).abs() > SIGMAS * se {
                return Err(format!(
                    "{name} at t = {k}: mean {mean} vs {want}, {:.1} standard errors",
                    (mean - want).abs() / se
                ));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= MAX_SECONDS {
        return Err(format!("took {elapsed:.1}s, budget {MAX_SECONDS}s"));
    }
    Ok(())
}

/// Criterion 5, end to end: a long finite-size run under the windowed power-law
/// family yields at least 1e5 deaths in the energy window and the Hill
/// fit recovers the designed exponent `w = (p + alpha) / (1 + alpha)`.
#[test]
fn criterion_5_end_to_end_energy_exponent() {
    report("5 (end-to-end energy exponent w = 1.8)", run_criterion_5());
}

fn run_criterion_5() -> Outcome {
    const W_TARGET: f64 = 1.8;
    const W_TOL: f64 = 0.1;
    const OBSERVED_RANGE: (f64, f64) = (1.7, 2.1);
    const MIN_EVENTS: usize = 100_000;
    const BURN_IN: f64 = 40.0;
    const MAX_SECONDS: f64 = 600.0;

    let start = Instant::now();
    let params = ModelParams {
        f: 20.0,
        lambda_scale: 100.0,
        ..ModelParams::unit()
    };
    let profile =
        stationary::windowed_profile(&params, WindowHead::Silent, 1.0, 100.0, 2.6).map_err(fail)?;
    let window = profile.window.expect("windowed profile carries its window");
    if (window.w - W_TARGET).abs() > 1e-12 {
        return Err(format!("designed exponent {} is not {W_TARGET}", window.w));
    }

    let mut opts = SimOptions::new(220.0, 7);
    opts.record_events = true;
    let out = micro::simulate(&params, profile.rate(), &opts).map_err(fail)?;
    let energies: Vec<f64> = out
        .events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::Death { energy, .. } if e.time >= BURN_IN => Some(energy),
            _ => None,
        })
        .collect();
    let (e1, e2) = window.energy_bounds(params.mu, params.alpha);
    let fit = fit::fit_energy_exponent(&energies, e1, e2, FitMethod::Hill, MIN_EVENTS)
        .map_err(fail)?;

    if (fit.w - W_TARGET).abs() > W_TOL {
        return Err(format!(
            "fitted w = {} from {} events, expected {W_TARGET} within {W_TOL}",
            fit.w, fit.count
        ));
    }
    if !(OBSERVED_RANGE.0 <= fit.w && fit.w <= OBSERVED_RANGE.1) {
        return Err(format!(
            "fitted w = {} lies outside the observed range {OBSERVED_RANGE:?}",
            fit.w
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= MAX_SECONDS {
        return Err(format!("took {elapsed:.1}s, budget {MAX_SECONDS}s"));
    }
    Ok(())
}

/// Criterion 6, catalog self-consistency: between events the speed decays along
/// the closed-form flow, every death lifts it by exactly the coupling
/// times the failed resistance, and births leave it continuous.
#[test]
fn criterion_6_death_velocity_jump_law() {
    report("6 (death velocity jump law)", run_criterion_6());
}

fn run_criterion_6() -> Outcome {
    const REL_TOL: f64 = 1e-10;
    const MIN_DEATHS: u64 = 20;

    let unit = ModelParams::unit();
    let constant_params = ModelParams {
        f: 3.0,
        cb_bar: 1.5,
        ..unit
    };
    let scaled_params = ModelParams {
        lambda_scale: 25.0,
        ..constant_params
    };
    let window_params = ModelParams { f: 20.0, ..unit };
    let constant_rate = RateFamily::constant(0.8).map_err(fail)?;
    let window_rate = stationary::windowed_profile(&window_params, WindowHead::Silent, 1.0, 100.0, 2.6)
        .map_err(fail)?
        .rate()
        .clone();

    let catalogs: [(&str, &ModelParams, &RateFamily, f64, u64); 3] = [
        ("constant rate, scale 1", &constant_params, &constant_rate, 30.0, 11),
        ("power-law window, scale 1", &window_params, &window_rate, 40.0, 21),
        ("constant rate, scale 25", &scaled_params, &constant_rate, 10.0, 31),
    ];

    for (name, params, rate, horizon, seed) in catalogs {
        let mut opts = SimOptions::new(horizon, seed);
        opts.record_events = true;
        let out = micro::simulate(params, rate, &opts).map_err(fail)?;
        if out.deaths < MIN_DEATHS {
            return Err(format!("{name}: only {} deaths, wanted {MIN_DEATHS}", out.deaths));
        }

        // Replay each inter-event stretch independently: the recorded
        // post-event speed re-anchors the flow, so deviations do not
        // accumulate across the catalog.
        let eff = params.micro_effective();
        let coupling = eff.gamma * eff.kappa;
        let mut t_prev = 0.0;
        let mut v_prev = eff.gamma * eff.f;
        let mut n_prev = 0usize;
        let mut max_rel = 0.0_f64;
        for e in &out.events {
            let decay = (-(coupling * n_prev as f64) * (e.time - t_prev)).exp();
            let v_before = v_prev * decay;
            match e.kind {
                EventKind::Birth => {
                    let dev = (e.v_after - v_before).abs() / v_before.max(1e-300);
                    max_rel = max_rel.max(dev);
                }
                EventKind::Death { x, .. } => {
                    if e.v_after <= 0.0 {
                        return Err(format!("{name}: clamped death at t = {}", e.time));
                    }
                    let jump = coupling * x;
                    let dev =
                        ((e.v_after - v_before) - jump).abs() / jump.max(v_before).max(1e-300);
                    max_rel = max_rel.max(dev);
                }
            }
            t_prev = e.time;
            v_prev = e.v_after;
            n_prev = e.n_after;
        }
        if max_rel > REL_TOL {
            return Err(format!(
                "{name}: worst relative deviation {max_rel:e} exceeds {REL_TOL:e}"
            ));
        }
    }
    Ok(())
}

/// Criterion 7: the empirical short-time drift of the count and of the total
/// deformation matches the exact generator at three hand-picked states
/// (two sliding, one stuck) within three standard errors.
#[test]
fn criterion_7_generator_drift_check() {
    report("7 (empirical drift matches the generator)", run_criterion_7());
}

fn run_criterion_7() -> Outcome {
    const DT: f64 = 1e-3;
    const REPLICAS: usize = 100_000;
    const SIGMAS: f64 = 3.0;

    let params = ModelParams {
        f: 2.0,
        gamma: 0.8,
        kappa: 1.3,
        cb_bar: 1.1,
        ..ModelParams::unit()
    };
    let rate = RateFamily::constant(0.7).map_err(fail)?;
    let states: [&[f64]; 3] = [&[0.3, 0.9], &[0.2, 0.4, 0.6], &[1.0, 0.8]];

    for (si, state) in states.iter().enumerate() {
        let mut opts = SimOptions::new(DT, 0xACCE_7000 + si as u64);
        opts.initial_deformations = state.to_vec();
        let runs = micro::simulate_ensemble(&params, &rate, &opts, REPLICAS).map_err(fail)?;
        for obs in [Observable::Count, Observable::TotalDeformation] {
            let lf = micro::generator_value(&params, &rate, state, obs).map_err(fail)?;
            let f0 = obs.eval(state);
            let drifts: Vec<f64> = runs
                .iter()
                .map(|r| (obs.eval(&r.final_deformations) - f0) / DT)
                .collect();
            let (mean, se) = mean_se(&drifts);
            if se == 0.0 {
                return Err(format!("degenerate drift spread at state {si}"));
            }
            if (mean - lf).abs() > SIGMAS * se {
                return Err(format!(
                    "state {si}, {obs:?}: drift {mean} vs generator {lf}, {:.1} standard errors",
                    (mean - lf).abs() / se
                ));
            }
        }
    }
    Ok(())
}

/// Criterion 8: on the hyperbolic window the stationary density falls with the
/// exact log-log slope `-(p-1)` and the death density with `-p`, and
/// both slopes are independent of the imposed speed.
#[test]
fn criterion_8_speed_invariant_power_law_slopes() {
    report("8 (speed-invariant power-law slopes)", run_criterion_8());
}

fn run_criterion_8() -> Outcome {
    const P: f64 = 2.6;
    const RHO_TOL: f64 = 1e-12;
    const FLUX_TOL: f64 = 1e-10;

    let params = ModelParams::unit();
    let (x1, x2) = (1.0, 100.0);
    let probes = [2.0, 5.0, 20.0, 50.0];
    let mut slopes = Vec::new();

    for v in [2.0, 5.0] {
        let k = stationary::power_law_window_rate(P, v, 0.0).map_err(fail)?;
        let rate = RateFamily::from_segments(vec![
            RateSegment {
                start: 0.0,
                rate: RateKind::Zero,
            },
            RateSegment {
                start: x1,
                rate: RateKind::Hyperbolic(k),
            },
            RateSegment {
                start: x2,
                rate: RateKind::Infinite,
            },
        ])
        .map_err(fail)?;
        let profile = stationary::profile_for_velocity(&params, &rate, v).map_err(fail)?;

        let mut rho_slopes = Vec::new();
        let mut flux_slopes = Vec::new();
        for pair in probes.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let rho_a = profile.rho(a).map_err(fail)?;
            let rho_b = profile.rho(b).map_err(fail)?;
            rho_slopes.push((rho_b / rho_a).ln() / (b / a).ln());
            let m_a = profile.death_flux(a).map_err(fail)?;
            let m_b = profile.death_flux(b).map_err(fail)?;
            flux_slopes.push((m_b / m_a).ln() / (b / a).ln());
        }
        for s in &rho_slopes {
            if (s - (-(P - 1.0))).abs() > RHO_TOL {
                return Err(format!("density slope {s} at v = {v}, expected {}", -(P - 1.0)));
            }
        }
        for s in &flux_slopes {
            if (s - (-P)).abs() > FLUX_TOL {
                return Err(format!("death density slope {s} at v = {v}, expected {}", -P));
            }
        }
        slopes.push((rho_slopes[0], flux_slopes[0]));
    }

    let ((r0, f0), (r1, f1)) = (slopes[0], slopes[1]);
    if (r0 - r1).abs() > RHO_TOL || (f0 - f1).abs() > FLUX_TOL {
        return Err(format!(
            "slopes moved with the speed: density {r0} vs {r1}, death {f0} vs {f1}"
        ));
    }
    Ok(())
}

/// Criterion 9: the general-purpose RK4 flow agrees with the closed-form flow on
/// a thousand random frozen states to better than 1e-8 in both the
/// shared displacement and the final speed.
#[test]
fn criterion_9_numeric_flow_matches_closed_form() {
    report("9 (numeric flow matches the closed form)", run_criterion_9());
}

fn run_criterion_9() -> Outcome {
    const STATES: usize = 1000;
    const SUBSTEP: f64 = 1e-3;
    const REL_TOL: f64 = 1e-8;

    let mut rng = SplitMix64::new(0x0F10_0009);
    let mut max_rel = 0.0_f64;
    for _ in 0..STATES {
        let n = 1 + (rng.next_u64() % 8) as usize;
        let params = ModelParams {
            f: 1.0 + 4.0 * rng.next_f64(),
            gamma: 0.3 + 0.7 * rng.next_f64(),
            kappa: 0.3 + 0.7 * rng.next_f64(),
            ..ModelParams::unit()
        };
        let xs: Vec<f64> = (0..n).map(|_| 1.5 * rng.next_f64()).collect();
        let dt = 0.3 * rng.next_f64();
        let v0 = model::velocity(&xs, &params);

        let mut elastic = xs.clone();
        let v_elastic = model::advance_elastic(&mut elastic, v0, dt, &params).map_err(fail)?;
        let mut numeric = xs.clone();
        let v_numeric = model::advance_numeric(&mut numeric, dt, SUBSTEP, &params).map_err(fail)?;

        let s_elastic = elastic[0] - xs[0];
        let s_numeric = numeric[0] - xs[0];
        let s_dev = (s_elastic - s_numeric).abs() / s_elastic.abs().max(s_numeric.abs()).max(1e-12);
        let v_dev = (v_elastic - v_numeric).abs() / v_elastic.max(v_numeric).max(1e-12);
        max_rel = max_rel.max(s_dev).max(v_dev);
    }
    if max_rel >= REL_TOL {
        return Err(format!(
            "worst relative deviation {max_rel:e} is not below {REL_TOL:e}"
        ));
    }
    Ok(())
}
