//! Flat `key = value` run configuration: every key has a default, unknown
//! keys are rejected, `#` starts a comment. The emitted text parses back to
//! the identical configuration, which is what makes run manifests replayable.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scenario;
use crate::state::Material;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Viscosity exponent: nu(theta) = theta^m.
    pub m: f64,
    /// Conductivity exponent: kappa(theta) = (1 + theta)^l.
    pub l: f64,
    pub scenario: scenario::Kind,
    pub rho_amp: f64,
    pub v_amp: f64,
    pub theta_base: f64,
    pub theta_bump: f64,
    pub seed: u64,
    pub picard_tol: f64,
    /// Relative tolerance of the momentum and heat solves.
    pub linear_tol: f64,
    pub projection_tol: f64,
    pub max_sweeps: usize,
    pub linear_max_iter: usize,
    /// Integrability exponent of the diagnostic norms.
    pub p: f64,
    /// Steps between snapshots.
    pub snapshot_every: usize,
    pub output_dir: String,
    pub deterministic: bool,
    /// Worker threads; 0 lets the runtime pick.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nx: 64,
            ny: 64,
            lx: 4.0,
            ly: 4.0,
            dt: 2e-3,
            t_end: 2.0,
            m: 1.0,
            l: 1.0,
            scenario: scenario::Kind::Pudding,
            rho_amp: 0.02,
            v_amp: 0.1,
            theta_base: 10.0,
            theta_bump: 1.0,
            seed: 1,
            picard_tol: 1e-8,
            linear_tol: 1e-12,
            projection_tol: 1e-12,
            max_sweeps: 50,
            linear_max_iter: 4000,
            p: 8.0,
            snapshot_every: 100,
            output_dir: "out".to_string(),
            deterministic: false,
            workers: 0,
        }
    }
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!(
            "cannot parse {key} = {value} (expected true or false)"
        ))),
    }
}

impl RunConfig {
    /// Parses configuration text over the defaults; later lines win.
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "nx" => cfg.nx = parse_as(key, value)?,
                "ny" => cfg.ny = parse_as(key, value)?,
                "lx" => cfg.lx = parse_as(key, value)?,
                "ly" => cfg.ly = parse_as(key, value)?,
                "dt" => cfg.dt = parse_as(key, value)?,
                "t_end" => cfg.t_end = parse_as(key, value)?,
                "m" => cfg.m = parse_as(key, value)?,
                "l" => cfg.l = parse_as(key, value)?,
                "scenario" => cfg.scenario = value.parse()?,
                "rho_amp" => cfg.rho_amp = parse_as(key, value)?,
                "v_amp" => cfg.v_amp = parse_as(key, value)?,
                "theta_base" => cfg.theta_base = parse_as(key, value)?,
                "theta_bump" => cfg.theta_bump = parse_as(key, value)?,
                "seed" => cfg.seed = parse_as(key, value)?,
                "picard_tol" => cfg.picard_tol = parse_as(key, value)?,
                "linear_tol" => cfg.linear_tol = parse_as(key, value)?,
                "projection_tol" => cfg.projection_tol = parse_as(key, value)?,
                "max_sweeps" => cfg.max_sweeps = parse_as(key, value)?,
                "linear_max_iter" => cfg.linear_max_iter = parse_as(key, value)?,
                "p" => cfg.p = parse_as(key, value)?,
                "snapshot_every" => cfg.snapshot_every = parse_as(key, value)?,
                "output_dir" => cfg.output_dir = value.to_string(),
                "deterministic" => cfg.deterministic = parse_bool(key, value)?,
                "workers" => cfg.workers = parse_as(key, value)?,
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        RunConfig::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Serializes every key; floats use the shortest form that parses back
    /// bit-exactly.
    pub fn emit(&self) -> String {
        format!(
            "nx = {}\nny = {}\nlx = {}\nly = {}\ndt = {}\nt_end = {}\n\
             m = {}\nl = {}\nscenario = {}\nrho_amp = {}\nv_amp = {}\n\
             theta_base = {}\ntheta_bump = {}\nseed = {}\npicard_tol = {}\n\
             linear_tol = {}\nprojection_tol = {}\nmax_sweeps = {}\n\
             linear_max_iter = {}\np = {}\nsnapshot_every = {}\n\
             output_dir = {}\ndeterministic = {}\nworkers = {}\n",
            self.nx,
            self.ny,
            self.lx,
            self.ly,
            self.dt,
            self.t_end,
            self.m,
            self.l,
            self.scenario,
            self.rho_amp,
            self.v_amp,
            self.theta_base,
            self.theta_bump,
            self.seed,
            self.picard_tol,
            self.linear_tol,
            self.projection_tol,
            self.max_sweeps,
            self.linear_max_iter,
            self.p,
            self.snapshot_every,
            self.output_dir,
            self.deterministic,
            self.workers,
        )
    }

    /// The config echo plus commented version and timing lines; parses like the echo.
    pub fn manifest(&self, wall_clock_seconds: f64) -> String {
        format!(
            "# version = {}\n# wall_clock = {:.3}\n{}",
            env!("CARGO_PKG_VERSION"),
            wall_clock_seconds,
            self.emit()
        )
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.nx, self.ny, self.lx, self.ly)?;
        Material::new(self.m, self.l)?;
        if !(self.dt > 0.0) {
            return Err(Error::NonPositive {
                what: "dt",
                value: self.dt,
            });
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Config(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        for (name, tol) in [
            ("picard_tol", self.picard_tol),
            ("linear_tol", self.linear_tol),
            ("projection_tol", self.projection_tol),
        ] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::Config(format!(
                    "{name} must lie in (0,1), got {tol}"
                )));
            }
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be at least 1".into()));
        }
        if self.linear_max_iter == 0 {
            return Err(Error::Config("linear_max_iter must be at least 1".into()));
        }
        if !(self.p > 1.0) {
            return Err(Error::Config(format!("p must exceed 1, got {}", self.p)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::Config("snapshot_every must be at least 1".into()));
        }
        // scenario amplitude rules live with the scenario module
        scenario::check_params(&self.scenario_params())
    }

    pub fn scenario_params(&self) -> scenario::Params {
        scenario::Params {
            rho_amp: self.rho_amp,
            v_amp: self.v_amp,
            theta_base: self.theta_base,
            theta_bump: self.theta_bump,
            seed: self.seed,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny, self.lx, self.ly)
    }

    pub fn material(&self) -> Result<Material> {
        Material::new(self.m, self.l)
    }
}
