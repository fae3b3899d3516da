//! Mode execution. Every run lands in one output directory holding the
//! mode's products plus `manifest.json`, which echoes the effective
//! configuration and digests every product so a run can be audited and
//! reproduced byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use stickslip_core::io as core_io;
use stickslip_core::micro::{self, EventKind, SimOptions, SimOutput};
use stickslip_core::moments::{self, MomentPoint, MomentState, StabilityClass};
use stickslip_core::pde::DensityGrid;
use stickslip_core::stationary::PowerWindow;
use stickslip_core::{fit_energy_exponent, FitMethod};

use crate::config::{
    EvolveSpec, GrfitSpec, ModeSpec, MomentsSpec, RateSpec, RunConfig, SimulateSpec,
    StationarySpec,
};
use crate::CliError;

fn analysis(err: stickslip_core::Error) -> CliError {
    CliError::Analysis(err.to_string())
}

#[derive(Debug, Clone, Serialize)]
struct OutputRecord {
    path: String,
    bytes: u64,
    sha256: String,
}

/// Collects products in the output directory and remembers their
/// digests for the manifest.
struct OutputSink {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputSink {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| {
            CliError::Io(format!("cannot create {}: {e}", dir.display()))
        })?;
        Ok(OutputSink {
            dir: dir.to_path_buf(),
            records: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.records.push(OutputRecord {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Analysis(format!("cannot encode {name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    config: &'a RunConfig,
    outputs: Vec<OutputRecord>,
}

/// Run the configured mode into `out_dir` and finish with the manifest.
/// The manifest digests every product, so it is written last and does
/// not list itself.
pub fn execute(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let mut sink = OutputSink::new(out_dir)?;
    match &cfg.mode {
        ModeSpec::Simulate(spec) => run_simulate(cfg, spec, &mut sink)?,
        ModeSpec::Evolve(spec) => run_evolve(cfg, spec, &mut sink)?,
        ModeSpec::Stationary(spec) => run_stationary(cfg, spec, &mut sink)?,
        ModeSpec::Moments(spec) => run_moments(cfg, spec, &mut sink)?,
        ModeSpec::Classify(_) => run_classify(cfg, &mut sink)?,
        ModeSpec::Grfit(spec) => run_grfit(cfg, spec, &mut sink)?,
    }
    let mut outputs = sink.records;
    outputs.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        tool: "stickslip",
        version: env!("CARGO_PKG_VERSION"),
        mode: cfg.mode.name(),
        seed: cfg.mode.master_seed(),
        config: cfg,
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Analysis(format!("cannot encode manifest.json: {e}")))?;
    text.push('\n');
    let path = out_dir.join("manifest.json");
    fs::write(&path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Suffix for per-replica product names: empty for a single run,
/// `-007` style for ensemble members.
fn replica_suffix(index: Option<usize>) -> String {
    match index {
        None => String::new(),
        Some(i) => format!("-{i:03}"),
    }
}

fn write_sim_products(
    sink: &mut OutputSink,
    out: &SimOutput,
    index: Option<usize>,
    spec: &SimulateSpec,
) -> Result<(), CliError> {
    let suffix = replica_suffix(index);
    if spec.record_events {
        let mut buf = Vec::new();
        core_io::write_catalog_csv(&mut buf, &out.events)
            .map_err(|e| CliError::Analysis(format!("catalog export failed: {e}")))?;
        sink.write(&format!("catalog{suffix}.csv"), &buf)?;
    }
    if spec.sample_dt.is_some() {
        let mut buf = Vec::new();
        core_io::write_trajectory_csv(&mut buf, &out.trajectory)
            .map_err(|e| CliError::Analysis(format!("trajectory export failed: {e}")))?;
        sink.write(&format!("trajectory{suffix}.csv"), &buf)?;
    }
    Ok(())
}

fn run_simulate(
    cfg: &RunConfig,
    spec: &SimulateSpec,
    sink: &mut OutputSink,
) -> Result<(), CliError> {
    let family = cfg.cu.family(&cfg.params).map_err(analysis)?;
    let mut opts = SimOptions::new(spec.horizon, spec.seed);
    opts.sample_dt = spec.sample_dt;
    opts.record_events = spec.record_events;
    opts.initial_deformations = spec.initial_deformations.clone();
    opts.energy_mode = spec.energy_mode;
    match spec.replicas {
        None => {
            let out = micro::simulate(&cfg.params, &family, &opts).map_err(analysis)?;
            write_sim_products(sink, &out, None, spec)
        }
        Some(replicas) => {
            let outs =
                micro::simulate_ensemble(&cfg.params, &family, &opts, replicas).map_err(analysis)?;
            for (i, out) in outs.iter().enumerate() {
                write_sim_products(sink, out, Some(i), spec)?;
            }
            Ok(())
        }
    }
}

fn grid_point(grid: &DensityGrid) -> MomentPoint {
    let gm = grid.moments();
    MomentPoint {
        time: gm.time,
        state: MomentState { n: gm.n, m: gm.m },
        v: gm.v,
    }
}

fn run_evolve(cfg: &RunConfig, spec: &EvolveSpec, sink: &mut OutputSink) -> Result<(), CliError> {
    let family = cfg.cu.family(&cfg.params).map_err(analysis)?;
    let x_max = spec
        .x_max
        .unwrap_or_else(|| DensityGrid::default_x_max(&cfg.params));
    let mut grid = DensityGrid::new(&cfg.params, &family, x_max, spec.dx).map_err(analysis)?;
    let dt_hint = spec.dt.unwrap_or(f64::INFINITY);
    let cadence = spec.moments_dt.unwrap_or(spec.t_end / 200.0);
    let samples = (spec.t_end / cadence).ceil() as usize;
    let mut stops: Vec<f64> = (1..=samples)
        .map(|k| (k as f64 * cadence).min(spec.t_end))
        .collect();
    stops.extend(spec.snapshot_times.iter().copied());
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut moment_rows = vec![grid_point(&grid)];
    let mut snap_idx = 0;
    for &t in &stops {
        grid.advance_to(t, dt_hint).map_err(analysis)?;
        moment_rows.push(grid_point(&grid));
        while snap_idx < spec.snapshot_times.len() && spec.snapshot_times[snap_idx] <= t {
            let mut buf = Vec::new();
            core_io::write_snapshot_csv(&mut buf, grid.nodes(), grid.density())
                .map_err(|e| CliError::Analysis(format!("snapshot export failed: {e}")))?;
            sink.write(&format!("snapshot-{snap_idx:03}.csv"), &buf)?;
            snap_idx += 1;
        }
    }
    let mut buf = Vec::new();
    core_io::write_moments_csv(&mut buf, &moment_rows)
        .map_err(|e| CliError::Analysis(format!("moments export failed: {e}")))?;
    sink.write("moments.csv", &buf)
}

/// Non-finite values cannot appear in JSON, so diverging integrals are
/// reported as nulls.
fn finite(value: f64) -> Option<f64> {
    value.is_finite().then_some(value)
}

#[derive(Serialize)]
struct WindowReport {
    x1: f64,
    x2: f64,
    /// Death-size exponent on the window.
    p: f64,
    /// Released-energy exponent the window induces.
    w: f64,
    energy_window: [f64; 2],
}

#[derive(Serialize)]
struct StationaryMomentsReport {
    n: Option<f64>,
    deformation: Option<f64>,
    resistance: Option<f64>,
}

#[derive(Serialize)]
struct StationaryReport {
    /// Self-consistent sliding speed.
    v: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<WindowReport>,
    /// Deformations at which the rate family switches branch.
    branch_boundaries: Vec<f64>,
    moments: StationaryMomentsReport,
}

fn run_stationary(
    cfg: &RunConfig,
    spec: &StationarySpec,
    sink: &mut OutputSink,
) -> Result<(), CliError> {
    let profile = cfg.cu.stationary_profile(&cfg.params).map_err(analysis)?;
    let x_max = spec
        .x_max
        .or_else(|| profile.rate().cutoff())
        .unwrap_or_else(|| DensityGrid::default_x_max(&cfg.params));
    let mut buf = Vec::new();
    core_io::write_profile_csv(&mut buf, &profile, x_max, spec.points)
        .map_err(|e| CliError::Analysis(format!("profile export failed: {e}")))?;
    sink.write("profile.csv", &buf)?;

    let m = profile.moments().map_err(analysis)?;
    let report = StationaryReport {
        v: profile.v,
        window: profile.window.map(|w: PowerWindow| WindowReport {
            x1: w.x1,
            x2: w.x2,
            p: w.p,
            w: w.w,
            energy_window: {
                let (e1, e2) = w.energy_bounds(cfg.params.mu, cfg.params.alpha);
                [e1, e2]
            },
        }),
        branch_boundaries: profile.rate().segments().iter().map(|s| s.start).collect(),
        moments: StationaryMomentsReport {
            n: finite(m.n),
            deformation: finite(m.deformation),
            resistance: finite(m.resistance),
        },
    };
    sink.write_json("report.json", &report)
}

#[derive(Serialize)]
struct FixedPointJson {
    /// Order parameter `gamma kappa f cb_bar / cu^2`.
    a: f64,
    /// Drive `gamma` times stronger than the order parameter; the
    /// spiral-to-node transition sits at drive 20.
    drive: f64,
    v: f64,
    n: f64,
    m: f64,
    u: f64,
    trace: f64,
    det: f64,
    discriminant: f64,
    /// Linearization eigenvalues as `[re, im]` pairs.
    eigenvalues: [[f64; 2]; 2],
    class: StabilityClass,
}

fn fixed_point_json(cfg: &RunConfig, cu: f64) -> Result<FixedPointJson, CliError> {
    let report = moments::fixed_point(&cfg.params, cu).map_err(analysis)?;
    let eig = report.eigenvalues();
    Ok(FixedPointJson {
        a: report.drive / cfg.params.gamma,
        drive: report.drive,
        v: report.v,
        n: report.n,
        m: report.m,
        u: report.u,
        trace: report.trace,
        det: report.det,
        discriminant: report.discriminant,
        eigenvalues: [[eig[0].0, eig[0].1], [eig[1].0, eig[1].1]],
        class: report.class,
    })
}

fn constant_cu(cfg: &RunConfig) -> Result<f64, CliError> {
    cfg.cu.constant_value().ok_or_else(|| {
        CliError::Config("this mode needs a constant destruction rate".into())
    })
}

fn run_moments(cfg: &RunConfig, spec: &MomentsSpec, sink: &mut OutputSink) -> Result<(), CliError> {
    let cu = constant_cu(cfg)?;
    for (i, init) in spec.initials.iter().enumerate() {
        let points = moments::integrate(
            &cfg.params,
            cu,
            MomentState {
                n: init.n,
                m: init.m,
            },
            spec.t_end,
            spec.dt,
        )
        .map_err(analysis)?;
        let mut buf = Vec::new();
        core_io::write_moments_csv(&mut buf, &points)
            .map_err(|e| CliError::Analysis(format!("moments export failed: {e}")))?;
        sink.write(&format!("trajectory-{i:03}.csv"), &buf)?;
    }
    let report = fixed_point_json(cfg, cu)?;
    sink.write_json("report.json", &report)
}

fn run_classify(cfg: &RunConfig, sink: &mut OutputSink) -> Result<(), CliError> {
    let cu = constant_cu(cfg)?;
    let report = fixed_point_json(cfg, cu)?;
    sink.write_json("report.json", &report)
}

#[derive(Serialize)]
struct FitReport {
    w_hat: f64,
    stderr: f64,
    n_used: usize,
    window: [f64; 2],
    method: FitMethod,
}

fn run_grfit(cfg: &RunConfig, spec: &GrfitSpec, sink: &mut OutputSink) -> Result<(), CliError> {
    // Resolve the family once; a power window carries the default fit
    // window with it.
    let (family, window) = match &cfg.cu {
        RateSpec::PowerWindow { .. } => {
            let profile = cfg.cu.stationary_profile(&cfg.params).map_err(analysis)?;
            (profile.rate().clone(), profile.window)
        }
        other => (other.family(&cfg.params).map_err(analysis)?, None),
    };
    let mut opts = SimOptions::new(spec.horizon, spec.seed);
    opts.record_events = true;
    opts.energy_mode = spec.energy_mode;
    let out = micro::simulate(&cfg.params, &family, &opts).map_err(analysis)?;
    let mut buf = Vec::new();
    core_io::write_catalog_csv(&mut buf, &out.events)
        .map_err(|e| CliError::Analysis(format!("catalog export failed: {e}")))?;
    sink.write("catalog.csv", &buf)?;

    let (e_min, e_max) = match spec.window {
        Some([e1, e2]) => (e1, e2),
        None => {
            let w = window.ok_or_else(|| {
                CliError::Config("no fit window: give one explicitly or use a power window".into())
            })?;
            w.energy_bounds(cfg.params.mu, cfg.params.alpha)
        }
    };
    let energies: Vec<f64> = out
        .events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::Death { energy, .. } if e.time >= spec.burn_in => Some(energy),
            _ => None,
        })
        .collect();
    let fit = fit_energy_exponent(&energies, e_min, e_max, spec.method, spec.min_events)
        .map_err(analysis)?;
    let report = FitReport {
        w_hat: fit.w,
        stderr: fit.stderr,
        n_used: fit.count,
        window: [e_min, e_max],
        method: fit.method,
    };
    sink.write_json("report.json", &report)
}
