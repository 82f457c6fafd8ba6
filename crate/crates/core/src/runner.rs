//! Drives a configured run: builds the initial state, advances it with the
//! fixed-point stepper, writes one ledger CSV row per accepted step, snapshots
//! on a step cadence, and halves a rejected step down to a fixed floor before
//! giving up. All warm starts are taken from the accepted state itself, so a
//! resumed run repeats the uninterrupted one bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::diagnostics::{density_gradient_norm, ledger, smallness_indicator};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linsolve::{LinearSolverSpec, Method};
use crate::picard::{picard_step, PicardConfig, StepReport, StepSolvers};
use crate::scenario;
use crate::snapshot::{read_snapshot, write_snapshot};
use crate::state::{Material, State};

/// Maximum number of in-place halvings of a rejected step: the floor is
/// dt / 64.
const MAX_HALVINGS: u32 = 6;

pub const LEDGER_HEADER: &str = "time,mass,kinetic,thermal,total,dissipation_rate,modified,\
min_theta,K,nb_ratio_nu,nb_ratio_kappa,grad_rho_lp,sweeps";

/// One CSV row: the energy ledger plus the per-step audit columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub time: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub thermal: f64,
    pub total: f64,
    pub dissipation_rate: f64,
    pub modified: f64,
    pub min_theta: f64,
    pub k: f64,
    pub nb_ratio_nu: f64,
    pub nb_ratio_kappa: f64,
    pub grad_rho_lp: f64,
    pub sweeps: usize,
}

impl LedgerRow {
    /// Evaluates every column from a state. For accepted steps the recorded
    /// dissipation is the rate the heat equation actually received, not the
    /// instantaneous rate of the new state.
    pub fn from_state(
        s: &State,
        mat: &Material,
        theta_floor: f64,
        p: f64,
        g: &Grid,
        step_dissipation: Option<f64>,
        sweeps: usize,
    ) -> Result<LedgerRow> {
        let led = ledger(s, mat, theta_floor, g)?;
        let small = smallness_indicator(&s.theta, mat, theta_floor, p)?;
        Ok(LedgerRow {
            time: led.time,
            mass: led.mass,
            kinetic: led.kinetic,
            thermal: led.thermal,
            total: led.total,
            dissipation_rate: step_dissipation.unwrap_or(led.dissipation_rate),
            modified: led.modified,
            min_theta: s.theta.min(),
            k: small.k,
            nb_ratio_nu: small.ratio_nu,
            nb_ratio_kappa: small.ratio_kappa,
            grad_rho_lp: density_gradient_norm(&s.rho, p, g)?,
            sweeps,
        })
    }

    /// Shortest-round-trip float formatting, so the CSV reproduces the run
    /// exactly when read back.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.time,
            self.mass,
            self.kinetic,
            self.thermal,
            self.total,
            self.dissipation_rate,
            self.modified,
            self.min_theta,
            self.k,
            self.nb_ratio_nu,
            self.nb_ratio_kappa,
            self.grad_rho_lp,
            self.sweeps
        )
    }

    pub fn parse(line: &str) -> Result<LedgerRow> {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 13 {
            return Err(Error::Config(format!(
                "ledger row has {} columns, expected 13",
                cols.len()
            )));
        }
        let f = |k: usize| -> Result<f64> {
            cols[k]
                .parse()
                .map_err(|_| Error::Config(format!("bad ledger number '{}'", cols[k])))
        };
        Ok(LedgerRow {
            time: f(0)?,
            mass: f(1)?,
            kinetic: f(2)?,
            thermal: f(3)?,
            total: f(4)?,
            dissipation_rate: f(5)?,
            modified: f(6)?,
            min_theta: f(7)?,
            k: f(8)?,
            nb_ratio_nu: f(9)?,
            nb_ratio_kappa: f(10)?,
            grad_rho_lp: f(11)?,
            sweeps: cols[12]
                .parse()
                .map_err(|_| Error::Config(format!("bad sweep count '{}'", cols[12])))?,
        })
    }
}

/// Reads a ledger CSV back into rows, skipping the header.
pub fn read_ledger(path: &Path) -> Result<Vec<LedgerRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if k == 0 {
            if line != LEDGER_HEADER {
                return Err(Error::Config(format!("unexpected ledger header: {line}")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        rows.push(LedgerRow::parse(line)?);
    }
    Ok(rows)
}

#[derive(Debug)]
pub struct RunSummary {
    /// Accepted steps taken by this invocation.
    pub steps: usize,
    /// Every row this invocation wrote (including the initial row on a fresh
    /// run).
    pub rows: Vec<LedgerRow>,
    pub final_state: State,
    pub snapshots: Vec<PathBuf>,
}

struct Sink {
    out: Option<SinkFiles>,
    rows: Vec<LedgerRow>,
    snapshots: Vec<PathBuf>,
}

struct SinkFiles {
    dir: PathBuf,
    ledger: BufWriter<File>,
}

impl Sink {
    fn create(out: Option<&Path>, append: bool) -> Result<Sink> {
        let out = match out {
            None => None,
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join("ledger.csv");
                let mut ledger = if append {
                    BufWriter::new(File::options().append(true).open(&path)?)
                } else {
                    BufWriter::new(File::create(&path)?)
                };
                if !append {
                    writeln!(ledger, "{LEDGER_HEADER}")?;
                }
                Some(SinkFiles {
                    dir: dir.to_path_buf(),
                    ledger,
                })
            }
        };
        Ok(Sink {
            out,
            rows: Vec::new(),
            snapshots: Vec::new(),
        })
    }

    fn row(&mut self, row: LedgerRow) -> Result<()> {
        if let Some(files) = &mut self.out {
            writeln!(files.ledger, "{}", row.to_csv())?;
        }
        self.rows.push(row);
        Ok(())
    }

    fn snapshot(&mut self, step_index: usize, s: &State, g: &Grid) -> Result<()> {
        if let Some(files) = &self.out {
            let path = files.dir.join(format!("snap_{step_index:06}.bin"));
            write_snapshot(&path, s, g)?;
            self.snapshots.push(path);
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        if let Some(files) = &mut self.out {
            files.ledger.flush()?;
        }
        Ok(())
    }
}

fn solvers_from(cfg: &RunConfig) -> Result<StepSolvers> {
    Ok(StepSolvers {
        momentum: LinearSolverSpec::new(Method::BiCgStab, cfg.linear_tol, cfg.linear_max_iter)?,
        heat: LinearSolverSpec::new(Method::BiCgStab, cfg.linear_tol, cfg.linear_max_iter)?,
        projection: LinearSolverSpec::new(Method::Cg, cfg.projection_tol, cfg.linear_max_iter)?,
    })
}

/// Starts the configured scenario from time zero and runs it to t_end.
/// `out = None` keeps everything in memory.
pub fn run(cfg: &RunConfig, out: Option<&Path>) -> Result<RunSummary> {
    run_observed(cfg, out, |_, _| Ok(()))
}

/// As `run`, with a callback after the initial state (report `None`) and each
/// accepted step.
pub fn run_observed<F>(cfg: &RunConfig, out: Option<&Path>, observer: F) -> Result<RunSummary>
where
    F: FnMut(&State, Option<&StepReport>) -> Result<()>,
{
    cfg.validate()?;
    let g = cfg.grid()?;
    let state = scenario::build(cfg.scenario, &cfg.scenario_params(), &g)?;
    drive(state, 0, false, cfg, &g, out, observer)
}

/// Continues a snapshotted state to t_end under the given configuration. The
/// scenario keys are ignored; the grid keys must match the file. If the
/// output directory already holds a ledger, new rows are appended after the
/// existing ones.
pub fn resume(snapshot: &Path, cfg: &RunConfig, out: Option<&Path>) -> Result<RunSummary> {
    cfg.validate()?;
    let (g, state) = read_snapshot(snapshot)?;
    if g.nx != cfg.nx || g.ny != cfg.ny || g.lx != cfg.lx || g.ly != cfg.ly {
        return Err(Error::InvalidState(format!(
            "snapshot grid {}x{} [{} x {}] does not match the configured {}x{} [{} x {}]",
            g.nx, g.ny, g.lx, g.ly, cfg.nx, cfg.ny, cfg.lx, cfg.ly
        )));
    }
    let mut steps_done = 0;
    let mut append = false;
    if let Some(dir) = out {
        let ledger_path = dir.join("ledger.csv");
        if ledger_path.exists() {
            let rows = read_ledger(&ledger_path)?;
            if let Some(last) = rows.last() {
                if last.time > state.time + 1e-12 {
                    return Err(Error::InvalidState(format!(
                        "ledger already reaches t = {}, past the snapshot at t = {}",
                        last.time, state.time
                    )));
                }
                steps_done = rows.len() - 1;
                append = true;
            }
        }
    }
    drive(state, steps_done, append, cfg, &g, out, |_, _| Ok(()))
}

fn drive<F>(
    mut state: State,
    steps_done: usize,
    append: bool,
    cfg: &RunConfig,
    g: &Grid,
    out: Option<&Path>,
    mut observer: F,
) -> Result<RunSummary>
where
    F: FnMut(&State, Option<&StepReport>) -> Result<()>,
{
    let started = std::time::Instant::now();
    let mat = cfg.material()?;
    let solvers = solvers_from(cfg)?;
    let pcfg = PicardConfig::new(cfg.picard_tol, cfg.max_sweeps)?;
    let mut sink = Sink::create(out, append)?;

    observer(&state, None)?;
    if !append {
        sink.row(LedgerRow::from_state(
            &state,
            &mat,
            cfg.theta_base,
            cfg.p,
            g,
            None,
            0,
        )?)?;
        sink.snapshot(steps_done, &state, g)?;
    }

    let mut steps = 0usize;
    let mut last_snap_at = if append { usize::MAX } else { steps_done };
    while state.time < cfg.t_end - 0.25 * cfg.dt {
        let mut accepted = None;
        let mut dt_try = cfg.dt;
        for halving in 0..=MAX_HALVINGS {
            match picard_step(&state, &mat, dt_try, &pcfg, &solvers, g) {
                Ok(pair) => {
                    accepted = Some(pair);
                    break;
                }
                Err(e @ (Error::PicardDiverged { .. } | Error::CflViolation { .. })) => {
                    if halving == MAX_HALVINGS {
                        return Err(Error::InvalidState(format!(
                            "step at t = {} rejected down to the dt floor: {e}",
                            state.time
                        )));
                    }
                    dt_try *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        let (next, report) = accepted.expect("loop either accepts or returns");
        state = next;
        steps += 1;
        observer(&state, Some(&report))?;
        sink.row(LedgerRow::from_state(
            &state,
            &mat,
            cfg.theta_base,
            cfg.p,
            g,
            Some(report.dissipation_rate),
            report.sweeps,
        )?)?;
        if steps % cfg.snapshot_every == 0 {
            sink.snapshot(steps_done + steps, &state, g)?;
            last_snap_at = steps_done + steps;
        }
    }
    if steps > 0 && last_snap_at != steps_done + steps {
        sink.snapshot(steps_done + steps, &state, g)?;
    }
    sink.finish()?;
    if let (Some(dir), false) = (out, append) {
        std::fs::write(
            dir.join("manifest.txt"),
            cfg.manifest(started.elapsed().as_secs_f64()),
        )?;
    }
    Ok(RunSummary {
        steps,
        rows: sink.rows,
        final_state: state,
        snapshots: sink.snapshots,
    })
}
