//! Amplitude/viscosity sweeps with one summary row per point.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use strainamp_core::dynamics::{self, NullSink};
use strainamp_core::{BlowupReport, Grid};

use crate::config::SweepConfig;
use crate::error::{CliError, Result};
use crate::run::initial_state;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: f64,
    pub nu: f64,
    pub f0: f64,
    pub g0: Option<f64>,
    pub r0: Option<f64>,
    pub outcome: &'static str,
    pub t_outcome: f64,
}

impl SweepRow {
    fn new(m: f64, nu: f64, r: &BlowupReport) -> Self {
        Self {
            m,
            nu,
            f0: r.f0,
            g0: r.g0,
            r0: r.r0,
            outcome: r.outcome.name(),
            t_outcome: r.t_outcome,
        }
    }
}

/// Runs every point with at most `jobs` concurrent runs; rows come back in
/// lexicographic `(m, ν)` order whatever the completion order.
pub fn sweep(cfg: &SweepConfig, jobs: usize) -> Result<Vec<SweepRow>> {
    let points = cfg.points()?;
    let grid = Grid::new(points[0].2.grid)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
    let mut rows = pool.install(|| {
        points
            .par_iter()
            .map(|(m, nu, run)| {
                let state = initial_state(run, &grid)?;
                let report = dynamics::run(&grid, state, &mut NullSink)?;
                log::info!("m = {m}, nu = {nu}: {}", report.outcome.name());
                Ok(SweepRow::new(*m, *nu, &report))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    rows.sort_by(|a, b| a.m.total_cmp(&b.m).then(a.nu.total_cmp(&b.nu)));
    Ok(rows)
}

pub fn write_csv(rows: &[SweepRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io("sweep output", e))?;
    Ok(())
}
