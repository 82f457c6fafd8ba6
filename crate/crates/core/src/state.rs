//! Simulation state (density, velocity, temperature, pressure) and the
//! temperature-dependent material laws, plus the integral bookkeeping
//! (mass, kinetic and thermal energy) used by the budget checks.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};

/// Viscosity nu(theta) = theta^m and conductivity kappa(theta) = (1 + theta)^l.
/// Exponents are non-negative, so both laws are non-decreasing in theta.
#[derive(Debug, Clone, Copy)]
pub struct Material {
    pub m: f64,
    pub l: f64,
}

fn pow_fast(base: f64, e: f64) -> f64 {
    // exact results for the common exponents so constant-coefficient paths
    // stay bit-clean
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        base
    } else if e == 2.0 {
        base * base
    } else {
        base.powf(e)
    }
}

impl Material {
    pub fn new(m: f64, l: f64) -> Result<Material> {
        if !(m >= 0.0) {
            return Err(Error::NonPositive {
                what: "viscosity exponent m",
                value: m,
            });
        }
        if !(l >= 0.0) {
            return Err(Error::NonPositive {
                what: "conductivity exponent l",
                value: l,
            });
        }
        Ok(Material { m, l })
    }

    pub fn nu(&self, theta: f64) -> f64 {
        pow_fast(theta, self.m)
    }

    pub fn kappa(&self, theta: f64) -> f64 {
        pow_fast(1.0 + theta, self.l)
    }

    pub fn nu_prime(&self, theta: f64) -> f64 {
        if self.m == 0.0 {
            0.0
        } else {
            self.m * pow_fast(theta, self.m - 1.0)
        }
    }

    pub fn kappa_prime(&self, theta: f64) -> f64 {
        if self.l == 0.0 {
            0.0
        } else {
            self.l * pow_fast(1.0 + theta, self.l - 1.0)
        }
    }

    pub fn nu_field(&self, theta: &ScalarField) -> Result<ScalarField> {
        let mut out = theta.clone();
        for x in &mut out.data {
            if !(*x > 0.0) {
                return Err(Error::NonPositive {
                    what: "temperature",
                    value: *x,
                });
            }
            *x = self.nu(*x);
        }
        Ok(out)
    }

    pub fn kappa_field(&self, theta: &ScalarField) -> Result<ScalarField> {
        let mut out = theta.clone();
        for x in &mut out.data {
            if !(*x > 0.0) {
                return Err(Error::NonPositive {
                    what: "temperature",
                    value: *x,
                });
            }
            *x = self.kappa(*x);
        }
        Ok(out)
    }

    /// (min, max) of nu over the temperature interval; nu is monotone.
    pub fn nu_bounds(&self, t_min: f64, t_max: f64) -> (f64, f64) {
        (self.nu(t_min), self.nu(t_max))
    }

    pub fn kappa_bounds(&self, t_min: f64, t_max: f64) -> (f64, f64) {
        (self.kappa(t_min), self.kappa(t_max))
    }

    /// Sup of |nu'| over the interval; nu' is monotone, so it is attained at an end.
    pub fn nu_prime_sup(&self, t_min: f64, t_max: f64) -> f64 {
        self.nu_prime(t_min).max(self.nu_prime(t_max))
    }

    pub fn kappa_prime_sup(&self, t_min: f64, t_max: f64) -> f64 {
        self.kappa_prime(t_min).max(self.kappa_prime(t_max))
    }
}

/// Full flow state at one time level. Invariants enforced at construction:
/// positive density and temperature, finite entries everywhere, zero
/// wall-normal velocity components.
#[derive(Debug, Clone)]
pub struct State {
    pub rho: ScalarField,
    pub vel: VectorField,
    pub theta: ScalarField,
    pub pi: ScalarField,
    pub time: f64,
}

impl State {
    pub fn new(
        g: &Grid,
        rho: ScalarField,
        vel: VectorField,
        theta: ScalarField,
        pi: ScalarField,
        time: f64,
    ) -> Result<State> {
        let s = State {
            rho,
            vel,
            theta,
            pi,
            time,
        };
        s.validate(g)?;
        Ok(s)
    }

    pub fn validate(&self, g: &Grid) -> Result<()> {
        if !self.rho.matches(g)
            || !self.theta.matches(g)
            || !self.pi.matches(g)
            || !self.vel.matches(g)
        {
            return Err(Error::DimensionMismatch { what: "state" });
        }
        if !self.rho.is_finite()
            || !self.theta.is_finite()
            || !self.pi.is_finite()
            || !self.vel.is_finite()
            || !self.time.is_finite()
        {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        if self.rho.min() <= 0.0 {
            return Err(Error::NonPositive {
                what: "density",
                value: self.rho.min(),
            });
        }
        if self.theta.min() <= 0.0 {
            return Err(Error::NonPositive {
                what: "temperature",
                value: self.theta.min(),
            });
        }
        if !self.vel.has_zero_boundary_normals(g) {
            return Err(Error::InvalidState(
                "velocity penetrates the boundary".into(),
            ));
        }
        Ok(())
    }
}

/// Arithmetic-mean density on velocity faces. Wall faces copy the adjacent
/// cell (their velocity is pinned to zero, the value only pads the layout).
/// This average is the one under which the kinetic-energy quadrature below
/// telescopes against the momentum update exactly.
pub fn face_densities(rho: &ScalarField, g: &Grid) -> (Vec<f64>, Vec<f64>) {
    let mut ru = vec![0.0; (g.nx + 1) * g.ny];
    let mut rv = vec![0.0; g.nx * (g.ny + 1)];
    for j in 0..g.ny {
        ru[g.uface(0, j)] = rho.at(g, 0, j);
        for i in 1..g.nx {
            ru[g.uface(i, j)] = 0.5 * (rho.at(g, i - 1, j) + rho.at(g, i, j));
        }
        ru[g.uface(g.nx, j)] = rho.at(g, g.nx - 1, j);
    }
    for i in 0..g.nx {
        rv[g.vface(i, 0)] = rho.at(g, i, 0);
        rv[g.vface(i, g.ny)] = rho.at(g, i, g.ny - 1);
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            rv[g.vface(i, j)] = 0.5 * (rho.at(g, i, j - 1) + rho.at(g, i, j));
        }
    }
    (ru, rv)
}

pub fn mass(rho: &ScalarField, g: &Grid) -> f64 {
    rho.integral(g)
}

/// Kinetic energy: each cell contributes rho_c/2 times the average of the
/// squared values on its four faces. Equivalently a face sum with
/// arithmetic-mean face densities and half-volume wall faces.
pub fn kinetic_energy(rho: &ScalarField, vel: &VectorField, g: &Grid) -> f64 {
    let vol = g.cell_volume();
    let mut acc = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let ul = vel.u[g.uface(i, j)];
            let ur = vel.u[g.uface(i + 1, j)];
            let vs = vel.v[g.vface(i, j)];
            let vn = vel.v[g.vface(i, j + 1)];
            acc += 0.25 * rho.at(g, i, j) * (ul * ul + ur * ur + vs * vs + vn * vn);
        }
    }
    acc * vol
}

pub fn thermal_energy(rho: &ScalarField, theta: &ScalarField, g: &Grid) -> f64 {
    let s: f64 = rho
        .data
        .iter()
        .zip(&theta.data)
        .map(|(r, t)| r * t)
        .sum();
    s * g.cell_volume()
}

pub fn total_energy(s: &State, g: &Grid) -> f64 {
    kinetic_energy(&s.rho, &s.vel, g) + thermal_energy(&s.rho, &s.theta, g)
}

/// Total energy with the temperature floor's share removed; with a floor at
/// the initial minimum this quantity decays instead of merely not growing.
pub fn modified_energy(s: &State, theta_floor: f64, g: &Grid) -> f64 {
    total_energy(s, g) - theta_floor * mass(&s.rho, g)
}
