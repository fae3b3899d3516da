//! Event-driven simulation of the finite contact population.
//!
//! Between birth and death events every contact stretches with the shared
//! sliding speed, so the whole population is advanced by a single scalar
//! displacement. Event times are drawn by thinning: over a lookahead
//! window the displacement is bounded, each contact's destruction rate is
//! bounded by its exact interval supremum, and the birth rate is bounded
//! by the current (nonincreasing) velocity. Candidate events are then
//! accepted with ratio actual/bound, which reproduces the exact jump law
//! without any time discretization.
//!
//! With `alpha = 1` the inter-event flow is the closed-form exponential
//! relaxation and the simulation is exact. For other exponents the flow
//! is integrated with fixed-substep RK4; event logic is unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, EnergyMode};
use crate::params::ModelParams;
use crate::rate::RateFamily;
use crate::rng::SplitMix64;

/// Exact incremental sums drift; recompute them from scratch this often.
const REFRESH_EVERY: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Birth,
    Death { x: f64, energy: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub n_after: usize,
    pub v_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub n: usize,
    pub v: f64,
    pub sum_x: f64,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub horizon: f64,
    pub seed: u64,
    /// Deformations present at time zero (empty by default).
    pub initial_deformations: Vec<f64>,
    /// Emit trajectory points on this uniform grid when set.
    pub sample_dt: Option<f64>,
    /// Keep the full event catalog (counts are always kept).
    pub record_events: bool,
    pub energy_mode: EnergyMode,
    /// Displacement travelled per lookahead window.
    pub window_travel: f64,
    /// Upper bound on window duration, for nearly frozen flows.
    pub window_cap: f64,
    /// RK4 substep for the non-closed-form flow (`alpha != 1`).
    pub rk_substep: f64,
}

impl SimOptions {
    pub fn new(horizon: f64, seed: u64) -> Self {
        SimOptions {
            horizon,
            seed,
            initial_deformations: Vec::new(),
            sample_dt: None,
            record_events: false,
            energy_mode: EnergyMode::Asymptotic,
            window_travel: 0.1,
            window_cap: 100.0,
            rk_substep: 1e-3,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "horizon must be finite and nonnegative, got {}",
                self.horizon
            )));
        }
        if let Some(dt) = self.sample_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "sample_dt must be positive, got {dt}"
                )));
            }
        }
        for &bound in &[self.window_travel, self.window_cap, self.rk_substep] {
            if !(bound > 0.0 && bound.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "window and substep controls must be positive, got {bound}"
                )));
            }
        }
        for &x in &self.initial_deformations {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::InvalidState(format!(
                    "initial deformation must be finite and nonnegative, got {x}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimOutput {
    pub final_time: f64,
    pub final_deformations: Vec<f64>,
    pub final_velocity: f64,
    pub births: u64,
    pub deaths: u64,
    pub events: Vec<EventRecord>,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Test functions of the population state with exact generator values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Count,
    TotalDeformation,
}

impl Observable {
    pub fn eval(&self, deformations: &[f64]) -> f64 {
        match self {
            Observable::Count => deformations.len() as f64,
            Observable::TotalDeformation => deformations.iter().sum(),
        }
    }
}

/// Exact generator applied to the observable at a frozen state, for the
/// process at the configured population scale. Drift, birth and death
/// contributions are assembled in closed form.
pub fn generator_value(
    params: &ModelParams,
    rate: &RateFamily,
    deformations: &[f64],
    observable: Observable,
) -> Result<f64> {
    params.validate()?;
    let eff = params.micro_effective();
    let n = deformations.len() as f64;
    let mut death_term = 0.0;
    for &x in deformations {
        // rate() also rejects negative or NaN deformations.
        let cu = rate.rate(x)?;
        match observable {
            Observable::Count => death_term += cu,
            Observable::TotalDeformation => death_term += cu * x,
        }
    }
    let v = model::velocity(deformations, &eff);
    let birth_term = match observable {
        // A birth adds one contact of zero deformation.
        Observable::Count => eff.cb_bar * v,
        Observable::TotalDeformation => 0.0,
    };
    let drift_term = match observable {
        Observable::Count => 0.0,
        Observable::TotalDeformation => n * v,
    };
    Ok(drift_term + birth_term - death_term)
}

struct Sampler {
    dt: f64,
    next: u64,
    points: Vec<TrajectoryPoint>,
}

impl Sampler {
    fn sample_time(&self) -> f64 {
        self.next as f64 * self.dt
    }
}

struct Sim<'a> {
    p: ModelParams,
    rate: &'a RateFamily,
    rng: SplitMix64,
    energy_mode: EnergyMode,
    window_travel: f64,
    window_cap: f64,
    rk_substep: f64,
    record_events: bool,
    t: f64,
    /// Contact `i` has deformation `total_shift - offsets[i]`.
    offsets: Vec<f64>,
    total_shift: f64,
    offset_sum: f64,
    ops_since_refresh: u32,
    births: u64,
    deaths: u64,
    events: Vec<EventRecord>,
    sampler: Option<Sampler>,
    majorants: Vec<f64>,
}

impl<'a> Sim<'a> {
    fn new(params: ModelParams, rate: &'a RateFamily, opts: &SimOptions) -> Self {
        let offsets: Vec<f64> = opts.initial_deformations.iter().map(|x| -x).collect();
        let offset_sum = offsets.iter().sum();
        Sim {
            p: params,
            rate,
            rng: SplitMix64::new(opts.seed),
            energy_mode: opts.energy_mode,
            window_travel: opts.window_travel,
            window_cap: opts.window_cap,
            rk_substep: opts.rk_substep,
            record_events: opts.record_events,
            t: 0.0,
            offsets,
            total_shift: 0.0,
            offset_sum,
            ops_since_refresh: 0,
            births: 0,
            deaths: 0,
            events: Vec::new(),
            sampler: opts.sample_dt.map(|dt| Sampler {
                dt,
                next: 0,
                points: Vec::new(),
            }),
            majorants: Vec::new(),
        }
    }

    #[inline]
    fn n(&self) -> usize {
        self.offsets.len()
    }

    #[inline]
    fn deformation(&self, i: usize) -> f64 {
        (self.total_shift - self.offsets[i]).max(0.0)
    }

    fn deformations(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.deformation(i)).collect()
    }

    fn sum_x(&self) -> f64 {
        (self.n() as f64 * self.total_shift - self.offset_sum).max(0.0)
    }

    fn sum_resistance(&self) -> f64 {
        if self.p.alpha == 1.0 {
            // min(x, x^1) = x, so the cached linear sum is exact.
            self.sum_x()
        } else {
            (0..self.n())
                .map(|i| model::z_alpha(self.deformation(i), self.p.alpha))
                .sum()
        }
    }

    fn velocity(&self) -> f64 {
        self.p.gamma * (self.p.f - self.p.kappa * self.sum_resistance()).max(0.0)
    }

    /// Velocity after displacing every contact by `s` (state untouched).
    fn velocity_at_shift(&self, s: f64) -> f64 {
        let sum = if self.p.alpha == 1.0 {
            self.sum_x() + self.n() as f64 * s
        } else {
            (0..self.n())
                .map(|i| model::z_alpha(self.deformation(i) + s, self.p.alpha))
                .sum()
        };
        self.p.gamma * (self.p.f - self.p.kappa * sum).max(0.0)
    }

    fn note_mutation(&mut self) {
        self.ops_since_refresh += 1;
        if self.offsets.is_empty() {
            self.offset_sum = 0.0;
            self.ops_since_refresh = 0;
        } else if self.ops_since_refresh >= REFRESH_EVERY {
            self.offset_sum = self.offsets.iter().sum();
            self.ops_since_refresh = 0;
        }
    }

    fn record(&mut self, kind: EventKind) {
        if self.record_events {
            self.events.push(EventRecord {
                time: self.t,
                kind,
                n_after: self.n(),
                v_after: self.velocity(),
            });
        }
    }

    fn kill(&mut self, i: usize) {
        let x = self.deformation(i);
        self.offset_sum -= self.offsets[i];
        self.offsets.swap_remove(i);
        self.note_mutation();
        self.deaths += 1;
        let energy = model::released_energy(x, &self.p, self.energy_mode)
            .expect("deformation is nonnegative by construction");
        self.record(EventKind::Death { x, energy });
    }

    fn spawn(&mut self) {
        self.offsets.push(self.total_shift);
        self.offset_sum += self.total_shift;
        self.note_mutation();
        self.births += 1;
        self.record(EventKind::Birth);
    }

    /// RK4 displacement added over `dur` starting `from_s` past the
    /// current positions. Stage slopes are clamped nonnegative, so the
    /// result never exceeds `velocity_at_shift(from_s) * dur`.
    fn numeric_disp(&self, from_s: f64, dur: f64) -> f64 {
        if dur <= 0.0 {
            return 0.0;
        }
        let steps = (dur / self.rk_substep).ceil().max(1.0) as u64;
        let h = dur / steps as f64;
        let mut s = from_s;
        for _ in 0..steps {
            let k1 = self.velocity_at_shift(s);
            let k2 = self.velocity_at_shift(s + 0.5 * h * k1);
            let k3 = self.velocity_at_shift(s + 0.5 * h * k2);
            let k4 = self.velocity_at_shift(s + h * k3);
            s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        s - from_s
    }

    /// Time for the flow to travel `target` from the current positions,
    /// `None` when it never does within `cap`.
    fn time_to_travel(&self, target: f64, cap: f64) -> Option<f64> {
        if target <= 0.0 {
            return Some(0.0);
        }
        if self.p.alpha == 1.0 {
            let t = model::elastic_time_to_travel(
                self.n(),
                self.velocity(),
                target,
                self.p.gamma * self.p.kappa,
            )?;
            return (t <= cap).then_some(t);
        }
        // Numeric flow: march substeps, then bisect inside the
        // overshooting step.
        let h = self.rk_substep;
        let mut s = 0.0;
        let mut t = 0.0;
        while t < cap {
            let step = h.min(cap - t);
            let ds = self.numeric_disp(s, step);
            if s + ds >= target {
                let (mut lo, mut hi) = (0.0, step);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if s + self.numeric_disp(s, mid) >= target {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Some(t + hi);
            }
            if ds == 0.0 {
                // Flow stalled short of the target.
                return None;
            }
            s += ds;
            t += step;
        }
        None
    }

    /// Move time forward by `dur` along the deterministic flow, emitting
    /// any trajectory samples that fall inside the stretch.
    fn advance_flow(&mut self, dur: f64) {
        let n = self.n();
        let v0 = self.velocity();
        let elastic = self.p.alpha == 1.0;
        let gk = self.p.gamma * self.p.kappa;
        let shift;
        if let Some(mut sampler) = self.sampler.take() {
            let eps = sampler.dt * 1e-9;
            let mut s_done = 0.0;
            let mut tau_done = 0.0;
            while sampler.sample_time() <= self.t + dur + eps {
                let tau = (sampler.sample_time() - self.t).max(0.0).min(dur);
                let (s_at, v_at) = if elastic {
                    model::elastic_flow(n, v0, tau, gk)
                } else {
                    let s = s_done + self.numeric_disp(s_done, tau - tau_done);
                    (s, self.velocity_at_shift(s))
                };
                s_done = s_at;
                tau_done = tau;
                sampler.points.push(TrajectoryPoint {
                    time: sampler.sample_time(),
                    n,
                    v: v_at,
                    sum_x: (n as f64 * (self.total_shift + s_at) - self.offset_sum).max(0.0),
                });
                sampler.next += 1;
            }
            shift = if elastic {
                model::elastic_flow(n, v0, dur, gk).0
            } else {
                s_done + self.numeric_disp(s_done, dur - tau_done)
            };
            self.sampler = Some(sampler);
        } else {
            shift = if elastic {
                model::elastic_flow(n, v0, dur, gk).0
            } else {
                self.numeric_disp(0.0, dur)
            };
        }
        self.total_shift += shift;
        self.t += dur;
    }

    /// Move time forward with frozen positions (stuck state).
    fn advance_frozen(&mut self, dur: f64) {
        let n = self.n();
        let v = self.velocity();
        let sum_x = self.sum_x();
        if let Some(sampler) = &mut self.sampler {
            let eps = sampler.dt * 1e-9;
            while sampler.sample_time() <= self.t + dur + eps {
                sampler.points.push(TrajectoryPoint {
                    time: sampler.sample_time(),
                    n,
                    v,
                    sum_x,
                });
                sampler.next += 1;
            }
        }
        self.t += dur;
    }

    /// One death or birth, or quiet arrival at the horizon. Returns false
    /// once the horizon is reached.
    fn step(&mut self, horizon: f64) -> Result<bool> {
        // Contacts at or beyond a cutoff are destroyed instantly.
        if let Some(cut) = self.rate.cutoff() {
            for i in 0..self.n() {
                if self.deformation(i) >= cut {
                    self.kill(i);
                    return Ok(true);
                }
            }
        }
        if self.t >= horizon {
            return Ok(false);
        }
        let v = self.velocity();
        if v == 0.0 {
            return self.step_stuck(horizon);
        }
        self.step_window(horizon, v)
    }

    /// Frozen positions: a plain exponential race between the finite
    /// per-contact rates. Births need positive velocity so none occur.
    fn step_stuck(&mut self, horizon: f64) -> Result<bool> {
        let mut total = 0.0;
        for i in 0..self.n() {
            total += self.rate.rate_unchecked(self.deformation(i));
        }
        debug_assert!(total.is_finite(), "cutoff handled before stuck step");
        if total == 0.0 {
            self.advance_frozen(horizon - self.t);
            return Ok(false);
        }
        let wait = self.rng.exp(total);
        if self.t + wait >= horizon {
            self.advance_frozen(horizon - self.t);
            return Ok(false);
        }
        self.advance_frozen(wait);
        let mut pick = self.rng.next_f64() * total;
        let mut chosen = self.n() - 1;
        for i in 0..self.n() {
            pick -= self.rate.rate_unchecked(self.deformation(i));
            if pick < 0.0 {
                chosen = i;
                break;
            }
        }
        self.kill(chosen);
        Ok(true)
    }

    /// Thinning over one lookahead window while the population slides.
    fn step_window(&mut self, horizon: f64, v0: f64) -> Result<bool> {
        let n = self.n();
        let x_max = (0..n).map(|i| self.deformation(i)).fold(0.0, f64::max);
        let to_cut = self.rate.cutoff().map(|c| c - x_max);
        debug_assert!(to_cut.is_none_or(|d| d > 0.0));

        let travel_goal = match to_cut {
            Some(d) => self.window_travel.min(d),
            None => self.window_travel,
        };
        let cap = self.window_cap.min(horizon - self.t);
        let t_travel = self.time_to_travel(travel_goal, cap);
        let window = t_travel.unwrap_or(cap).min(cap);
        // Forced exact death: the largest contact meets the cutoff at the
        // end of this window.
        let cutoff_forced =
            t_travel.is_some_and(|t| t <= cap) && to_cut.is_some_and(|d| travel_goal >= d);

        let s_bound = (v0 * window).min(travel_goal);
        self.majorants.clear();
        let mut bar = 0.0;
        for i in 0..n {
            let x = self.deformation(i);
            let b = self.rate.interval_sup(x, x + s_bound)?;
            debug_assert!(b.is_finite());
            self.majorants.push(b);
            bar += b;
        }
        let birth_bound = self.p.cb_bar * v0;
        bar += birth_bound;

        let window_end = self.t + window;
        loop {
            let wait = self.rng.exp(bar);
            if self.t + wait >= window_end {
                self.advance_flow(window_end - self.t);
                if cutoff_forced {
                    let victim = (0..self.n())
                        .max_by(|&a, &b| {
                            self.deformation(a)
                                .partial_cmp(&self.deformation(b))
                                .unwrap()
                        })
                        .expect("moving window implies contacts when cutoff binds");
                    self.kill(victim);
                    return Ok(true);
                }
                // No event in this window; the caller re-checks the
                // horizon and rebuilds.
                return Ok(true);
            }
            self.advance_flow(wait);
            let mut pick = self.rng.next_f64() * bar;
            let mut slot = self.n();
            for (i, &b) in self.majorants.iter().enumerate() {
                pick -= b;
                if pick < 0.0 {
                    slot = i;
                    break;
                }
            }
            if slot < self.n() {
                let bound = self.majorants[slot];
                let actual = self.rate.rate_unchecked(self.deformation(slot));
                debug_assert!(actual <= bound * (1.0 + 1e-12));
                if self.rng.next_f64() * bound < actual {
                    self.kill(slot);
                    return Ok(true);
                }
            } else {
                let actual = self.p.cb_bar * self.velocity();
                debug_assert!(actual <= birth_bound * (1.0 + 1e-12));
                if self.rng.next_f64() * birth_bound < actual {
                    self.spawn();
                    return Ok(true);
                }
            }
            // Rejected: positions stayed inside the window bounds, so the
            // majorants remain valid and the race continues.
        }
    }

    fn finish(mut self) -> SimOutput {
        let final_velocity = self.velocity();
        let trajectory = self
            .sampler
            .take()
            .map(|s| s.points)
            .unwrap_or_default();
        SimOutput {
            final_time: self.t,
            final_deformations: self.deformations(),
            final_velocity,
            births: self.births,
            deaths: self.deaths,
            events: self.events,
            trajectory,
        }
    }
}

/// Run one realization. Parameters are given in intensive form; the
/// population-scale mapping is applied internally.
pub fn simulate(params: &ModelParams, rate: &RateFamily, opts: &SimOptions) -> Result<SimOutput> {
    params.validate()?;
    opts.validate()?;
    let eff = params.micro_effective();
    let mut sim = Sim::new(eff, rate, opts);
    // Leading trajectory point at time zero.
    if sim.sampler.is_some() {
        sim.advance_frozen(0.0);
    }
    while sim.step(opts.horizon)? {}
    Ok(sim.finish())
}

/// Run independent realizations in parallel. Replica `r` uses the
/// decorrelated substream `r` of `opts.seed`, so results do not depend
/// on scheduling.
pub fn simulate_ensemble(
    params: &ModelParams,
    rate: &RateFamily,
    opts: &SimOptions,
    replicas: usize,
) -> Result<Vec<SimOutput>> {
    use rayon::prelude::*;
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut local = opts.clone();
            local.seed = crate::rng::substream_seed(opts.seed, r as u64);
            simulate(params, rate, &local)
        })
        .collect()
}
