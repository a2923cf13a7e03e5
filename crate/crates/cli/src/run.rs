//! Single runs: JSON-lines diagnostics followed by a report line.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use serde_json::Value;
use strainamp_core::dynamics::{self, checkpoint::Checkpoint, Sink};
use strainamp_core::{BlowupReport, DiagnosticsRecord, Grid, StrainState};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Writes records as JSON lines and checkpoints as numbered files.
pub struct JsonlSink<W: Write> {
    out: W,
    checkpoint_dir: PathBuf,
    checkpoints: usize,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W, checkpoint_dir: PathBuf) -> Self {
        Self {
            out,
            checkpoint_dir,
            checkpoints: 0,
        }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

fn io_error(e: io::Error) -> strainamp_core::Error {
    strainamp_core::Error::Io(e)
}

impl<W: Write> Sink for JsonlSink<W> {
    fn record(&mut self, record: &DiagnosticsRecord) -> strainamp_core::Result<()> {
        writeln!(self.out, "{}", record.to_json_line()).map_err(io_error)
    }

    fn checkpoint(&mut self, checkpoint: &Checkpoint) -> strainamp_core::Result<()> {
        if self.checkpoints == 0 {
            fs::create_dir_all(&self.checkpoint_dir).map_err(io_error)?;
        }
        let path = self
            .checkpoint_dir
            .join(format!("ckpt_{:05}.bin", self.checkpoints));
        checkpoint.write(&path)?;
        log::info!(
            "checkpoint t = {} written to {}",
            checkpoint.t,
            path.display()
        );
        self.checkpoints += 1;
        Ok(())
    }
}

/// The final line of a run file: the report tagged `"report": true`.
pub fn report_line(report: &BlowupReport) -> String {
    let mut v = serde_json::to_value(report).expect("report fields serialize");
    if let Value::Object(map) = &mut v {
        map.insert("report".into(), Value::Bool(true));
    }
    v.to_string()
}

/// Builds the initial state of `cfg`.
pub fn initial_state(cfg: &RunConfig, grid: &Grid) -> Result<StrainState> {
    let init = cfg.init.build(grid)?;
    if let Some(nu) = init.nu.filter(|&nu| nu != cfg.params.nu) {
        log::warn!(
            "checkpoint was written with nu = {nu}; continuing with nu = {}",
            cfg.params.nu
        );
    }
    Ok(StrainState::new(init.strain, init.t, cfg.params.clone()))
}

/// Runs `cfg`, writing diagnostics and the report line to `out`.
pub fn run_to(cfg: &RunConfig, out: impl Write) -> Result<BlowupReport> {
    let grid = Grid::new(cfg.grid)?;
    let state = initial_state(cfg, &grid)?;
    log::info!(
        "{} run on n = {}, L = {}, nu = {}, t_end = {}",
        cfg.params.equation.name(),
        cfg.grid.n,
        cfg.grid.box_length,
        cfg.params.nu,
        cfg.params.t_end
    );
    let mut sink = JsonlSink::new(out, cfg.checkpoint_dir.clone());
    let report = dynamics::run(&grid, state, &mut sink)?;
    let mut out = sink.into_inner();
    let target = "run output";
    writeln!(out, "{}", report_line(&report)).map_err(|e| CliError::io(target, e))?;
    out.flush().map_err(|e| CliError::io(target, e))?;
    log::info!(
        "{} at t = {} after {} steps",
        report.outcome.name(),
        report.t_outcome,
        report.steps
    );
    Ok(report)
}

/// Runs `cfg` against its configured destination.
pub fn cmd_run(cfg: &RunConfig) -> Result<BlowupReport> {
    match &cfg.output_path {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(path.display(), e))?;
            run_to(cfg, BufWriter::new(file))
        }
        None => run_to(cfg, BufWriter::new(io::stdout().lock())),
    }
}
