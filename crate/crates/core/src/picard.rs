//! Picard (fixed-point) coupling of the transport, momentum and heat solves
//! within a single implicit time step. Each sweep re-advects the density from
//! the old time level with the newest velocity, solves momentum with the
//! viscosity of the lagged temperature, projects, then solves the heat
//! equation fed by the dissipation of the freshly solved velocity.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::heat::{solve_heat, HeatInputs};
use crate::linsolve::LinearSolverSpec;
use crate::momentum::{project, solve_momentum, viscous_work, MomentumInputs};
use crate::state::{Material, State};
use crate::transport::advect;

const NORM_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl PicardConfig {
    pub fn new(tol: f64, max_sweeps: usize) -> Result<PicardConfig> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::NonPositive {
                what: "picard tolerance (must lie in (0,1))",
                value: tol,
            });
        }
        if max_sweeps == 0 {
            return Err(Error::NonPositive {
                what: "picard sweep cap",
                value: 0.0,
            });
        }
        Ok(PicardConfig { tol, max_sweeps })
    }
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            tol: 1e-8,
            max_sweeps: 50,
        }
    }
}

/// Linear solver settings for the three subsystems of one sweep.
#[derive(Debug, Clone, Copy)]
pub struct StepSolvers {
    pub momentum: LinearSolverSpec,
    pub heat: LinearSolverSpec,
    pub projection: LinearSolverSpec,
}

/// What one time step did: per-sweep L2 update sizes for each unknown, the
/// final relative update, the injected heating rate and solver effort.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub sweeps: usize,
    pub converged: bool,
    pub delta_rho: Vec<f64>,
    pub delta_vel: Vec<f64>,
    pub delta_theta: Vec<f64>,
    pub rel_delta: f64,
    /// Integral of the viscous heat source fed to the temperature equation.
    pub dissipation_rate: f64,
    pub momentum_iters: usize,
    pub heat_iters: usize,
    pub projection_iters: usize,
    pub compat_residual: f64,
}

impl StepReport {
    /// sqrt(|d rho|^2 + |d v|^2 + |d theta|^2) per sweep.
    pub fn combined_deltas(&self) -> Vec<f64> {
        self.delta_rho
            .iter()
            .zip(&self.delta_vel)
            .zip(&self.delta_theta)
            .map(|((r, v), t)| (r * r + v * v + t * t).sqrt())
            .collect()
    }

    /// Consecutive quotients of the combined update sizes.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.combined_deltas().windows(2).map(|w| w[1] / w[0]).collect()
    }
}

enum Mode {
    Converge { tol: f64, max_sweeps: usize },
    Fixed { sweeps: usize, tol: f64 },
}

/// Advances the state by `dt`, sweeping until the largest relative update of
/// density, velocity and temperature falls below the tolerance. Fails with a
/// sweep-capped error if the fixed point is not reached; callers may retry
/// with a smaller step.
pub fn picard_step(
    state: &State,
    mat: &Material,
    dt: f64,
    cfg: &PicardConfig,
    solvers: &StepSolvers,
    g: &Grid,
) -> Result<(State, StepReport)> {
    sweep_loop(
        state,
        mat,
        dt,
        Mode::Converge {
            tol: cfg.tol,
            max_sweeps: cfg.max_sweeps,
        },
        solvers,
        g,
    )
}

/// Runs exactly `sweeps` sweeps regardless of convergence, for studying the
/// fixed-point contraction itself.
pub fn picard_probe(
    state: &State,
    mat: &Material,
    dt: f64,
    sweeps: usize,
    solvers: &StepSolvers,
    g: &Grid,
) -> Result<(State, StepReport)> {
    if sweeps == 0 {
        return Err(Error::NonPositive {
            what: "probe sweep count",
            value: 0.0,
        });
    }
    sweep_loop(
        state,
        mat,
        dt,
        Mode::Fixed {
            sweeps,
            tol: PicardConfig::default().tol,
        },
        solvers,
        g,
    )
}

fn sweep_loop(
    state: &State,
    mat: &Material,
    dt: f64,
    mode: Mode,
    solvers: &StepSolvers,
    g: &Grid,
) -> Result<(State, StepReport)> {
    if !(dt > 0.0) {
        return Err(Error::NonPositive {
            what: "time step",
            value: dt,
        });
    }
    let cap = match mode {
        Mode::Converge { max_sweeps, .. } => max_sweeps,
        Mode::Fixed { sweeps, .. } => sweeps,
    };
    let tol = match mode {
        Mode::Converge { tol, .. } | Mode::Fixed { tol, .. } => tol,
    };

    // sweep 0 is the previous time level
    let mut rho_prev = state.rho.clone();
    let mut vel_prev = state.vel.clone();
    let mut theta_prev = state.theta.clone();

    // warm starts carried across sweeps
    let mut vel_star = state.vel.clone();
    let mut phi = state.pi.clone();
    let mut theta_new = state.theta.clone();

    let mut report = StepReport {
        sweeps: 0,
        converged: false,
        delta_rho: Vec::new(),
        delta_vel: Vec::new(),
        delta_theta: Vec::new(),
        rel_delta: f64::INFINITY,
        dissipation_rate: 0.0,
        momentum_iters: 0,
        heat_iters: 0,
        projection_iters: 0,
        compat_residual: 0.0,
    };

    for _ in 0..cap {
        let (rho_k, fluxes) = advect(&state.rho, &vel_prev, dt, g)?;
        let nu = mat.nu_field(&theta_prev)?;

        let minp = MomentumInputs {
            rho_old: &state.rho,
            rho_new: &rho_k,
            fluxes: &fluxes,
            nu: &nu,
            dt,
            body: None,
        };
        let mstats = solve_momentum(&minp, &state.vel, &mut vel_star, &solvers.momentum, g)?;
        report.momentum_iters += mstats.iterations;

        // the heat the viscous operator extracted from this exact field
        let (q, q_total) = viscous_work(&vel_star, &nu, g);

        let mut vel_k = vel_star.clone();
        let pout = project(&mut vel_k, &rho_k, dt, &solvers.projection, &mut phi, g)?;
        report.projection_iters += pout.stats.iterations;
        report.compat_residual = pout.compat_residual;

        let kappa = mat.kappa_field(&theta_prev)?;
        let hinp = HeatInputs {
            rho_old: &state.rho,
            rho_new: &rho_k,
            fluxes: &fluxes,
            kappa: &kappa,
            dt,
            source: &q,
        };
        let hstats = solve_heat(&hinp, &state.theta, &mut theta_new, &solvers.heat, g)?;
        report.heat_iters += hstats.iterations;

        let d_rho = rho_k.sub(&rho_prev).l2_norm(g);
        let d_vel = vel_k.sub(&vel_prev).l2_norm(g);
        let d_theta = theta_new.sub(&theta_prev).l2_norm(g);
        let rel = (d_rho / rho_k.l2_norm(g).max(NORM_FLOOR))
            .max(d_vel / vel_k.l2_norm(g).max(NORM_FLOOR))
            .max(d_theta / theta_new.l2_norm(g).max(NORM_FLOOR));

        report.sweeps += 1;
        report.delta_rho.push(d_rho);
        report.delta_vel.push(d_vel);
        report.delta_theta.push(d_theta);
        report.rel_delta = rel;
        report.dissipation_rate = q_total;

        rho_prev = rho_k;
        vel_prev = vel_k;
        theta_prev = theta_new.clone();

        report.converged = rel < tol;
        if matches!(mode, Mode::Converge { .. }) && report.converged {
            break;
        }
    }

    if matches!(mode, Mode::Converge { .. }) && !report.converged {
        return Err(Error::PicardDiverged {
            sweeps: report.sweeps,
            delta: report.rel_delta,
        });
    }

    let next = State::new(
        g,
        rho_prev,
        vel_prev,
        theta_prev,
        phi,
        state.time + dt,
    )?;
    Ok((next, report))
}

/// Worst consecutive ratio of the combined update sizes, ignoring everything
/// at or below the noise floor. A value below one certifies that the sweeps
/// contracted; it needs at least three informative sweeps, otherwise there is
/// no evidence to certify.
pub fn contraction_certificate(deltas: &[f64], floor: f64) -> Result<f64> {
    let usable: Vec<f64> = deltas
        .iter()
        .copied()
        .take_while(|&d| d > floor)
        .collect();
    if usable.len() < 3 {
        return Err(Error::TooFewSweeps {
            need: 3,
            have: usable.len(),
        });
    }
    let mut worst = 0.0f64;
    for w in usable.windows(2) {
        worst = worst.max(w[1] / w[0]);
    }
    Ok(worst)
}
