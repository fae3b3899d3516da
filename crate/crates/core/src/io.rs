//! Plain-text output of simulation products.
//!
//! All writers emit comma-separated values with a single header row.
//! Floats use the shortest representation that round-trips, so files are
//! both compact and loss-free to reparse.

use std::io::{self, Write};

use crate::micro::{EventKind, EventRecord, TrajectoryPoint};
use crate::moments::MomentPoint;
use crate::stationary::StationaryProfile;

pub fn write_trajectory_csv(mut out: impl Write, points: &[TrajectoryPoint]) -> io::Result<()> {
    writeln!(out, "t,n,v,sum_x")?;
    for p in points {
        writeln!(out, "{},{},{},{}", p.time, p.n, p.v, p.sum_x)?;
    }
    Ok(())
}

/// Event catalog rows; births leave the size and energy columns empty.
pub fn write_catalog_csv(mut out: impl Write, events: &[EventRecord]) -> io::Result<()> {
    writeln!(out, "t,kind,x,energy,n_after,v_after")?;
    for e in events {
        match e.kind {
            EventKind::Birth => {
                writeln!(out, "{},birth,,,{},{}", e.time, e.n_after, e.v_after)?;
            }
            EventKind::Death { x, energy } => {
                writeln!(
                    out,
                    "{},death,{},{},{},{}",
                    e.time, x, energy, e.n_after, e.v_after
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_moments_csv(mut out: impl Write, points: &[MomentPoint]) -> io::Result<()> {
    writeln!(out, "t,N,M,v")?;
    for p in points {
        writeln!(out, "{},{},{},{}", p.time, p.state.n, p.state.m, p.v)?;
    }
    Ok(())
}

/// Density snapshot on a node grid.
pub fn write_snapshot_csv(mut out: impl Write, nodes: &[f64], rho: &[f64]) -> io::Result<()> {
    debug_assert_eq!(nodes.len(), rho.len());
    writeln!(out, "x,rho")?;
    for (x, r) in nodes.iter().zip(rho) {
        writeln!(out, "{x},{r}")?;
    }
    Ok(())
}

/// Stationary profile sampled on `points` evenly spaced nodes from zero
/// to `x_max`: density, destruction rate, and continuous death flux.
pub fn write_profile_csv(
    mut out: impl Write,
    profile: &StationaryProfile,
    x_max: f64,
    points: usize,
) -> io::Result<()> {
    writeln!(out, "x,rho,cu,m")?;
    for i in 0..points {
        let x = x_max * i as f64 / (points - 1).max(1) as f64;
        let rho = profile.rho(x).map_err(io::Error::other)?;
        let cu = profile.rate().rate(x).map_err(io::Error::other)?;
        let flux = profile.death_flux(x).map_err(io::Error::other)?;
        writeln!(out, "{x},{rho},{cu},{flux}")?;
    }
    Ok(())
}
