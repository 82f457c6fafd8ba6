//! Implicit momentum update and pressure projection. The viscous operator is
//! defined as the gradient of a non-negative quadratic dissipation form, so
//! applying it to the velocity and summing recovers exactly the heating that
//! the temperature equation receives. Advection reuses the upwind mass fluxes
//! of the density transport, which closes the kinetic-energy budget.

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{divergence, gradient, Grid, ScalarField, VectorField};
use crate::linsolve::{solve, LinearSolverSpec, SolveStats};
use crate::state::face_densities;
use crate::transport::MassFluxes;

/// Corner shear weights c_n = wx * wy * nu_n / 2 with half weights on wall
/// corners and nu_n the mean of the adjacent cell viscosities.
#[derive(Debug, Clone)]
pub struct CornerCoeffs {
    pub c: Vec<f64>,
}

pub fn corner_coeffs(nu: &ScalarField, g: &Grid) -> CornerCoeffs {
    let mut c = vec![0.0; (g.nx + 1) * (g.ny + 1)];
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let mut s = 0.0;
            let mut n = 0.0;
            for (ci, cj) in [
                (i.wrapping_sub(1), j.wrapping_sub(1)),
                (i, j.wrapping_sub(1)),
                (i.wrapping_sub(1), j),
                (i, j),
            ] {
                if ci < g.nx && cj < g.ny {
                    s += nu.at(g, ci, cj);
                    n += 1.0;
                }
            }
            let wx = if i == 0 || i == g.nx { 0.5 } else { 1.0 };
            let wy = if j == 0 || j == g.ny { 0.5 } else { 1.0 };
            c[g.corner(i, j)] = 0.5 * wx * wy * s / n;
        }
    }
    CornerCoeffs { c }
}

/// Shear rate du/dy + dv/dx at corner (i, j), closed at walls with mirror
/// ghosts (no slip): the tangential velocity reflects with opposite sign.
fn corner_shear(u: &[f64], v: &[f64], g: &Grid, i: usize, j: usize) -> f64 {
    let uy = if j == 0 {
        2.0 * u[g.uface(i, 0)] / g.hy
    } else if j == g.ny {
        -2.0 * u[g.uface(i, g.ny - 1)] / g.hy
    } else {
        (u[g.uface(i, j)] - u[g.uface(i, j - 1)]) / g.hy
    };
    let vx = if i == 0 {
        2.0 * v[g.vface(0, j)] / g.hx
    } else if i == g.nx {
        -2.0 * v[g.vface(g.nx - 1, j)] / g.hx
    } else {
        (v[g.vface(i, j)] - v[g.vface(i - 1, j)]) / g.hx
    };
    uy + vx
}

/// Applies the viscous operator to (u, v). Rows for wall-normal faces are set
/// to zero; callers pin those degrees of freedom. The operator is, by
/// construction, the gradient of the dissipation form evaluated by
/// `viscous_work`: sum((A w) . w) * cell volume equals the total dissipation,
/// bit for bit up to round-off, for any w with zero wall-normal components.
pub fn viscous_apply(
    u: &[f64],
    v: &[f64],
    nu: &ScalarField,
    corners: &CornerCoeffs,
    g: &Grid,
    out_u: &mut [f64],
    out_v: &mut [f64],
) {
    let (nx, ny) = (g.nx, g.ny);
    let (hx, hy) = (g.hx, g.hy);
    let mut f11 = vec![0.0; g.n_cells()];
    let mut f22 = vec![0.0; g.n_cells()];
    for j in 0..ny {
        for i in 0..nx {
            let c = g.cell(i, j);
            f11[c] = nu.data[c] * (u[g.uface(i + 1, j)] - u[g.uface(i, j)]) / hx;
            f22[c] = nu.data[c] * (v[g.vface(i, j + 1)] - v[g.vface(i, j)]) / hy;
        }
    }
    let mut gc = vec![0.0; (nx + 1) * (ny + 1)];
    for j in 0..=ny {
        for i in 0..=nx {
            let n = g.corner(i, j);
            gc[n] = corners.c[n] * corner_shear(u, v, g, i, j);
        }
    }
    for j in 0..ny {
        out_u[g.uface(0, j)] = 0.0;
        out_u[g.uface(nx, j)] = 0.0;
        let gs = if j == 0 { 2.0 } else { 1.0 };
        let gn = if j + 1 == ny { 2.0 } else { 1.0 };
        for i in 1..nx {
            let df = (f11[g.cell(i, j)] - f11[g.cell(i - 1, j)]) / hx;
            let dg = (gs * gc[g.corner(i, j)] - gn * gc[g.corner(i, j + 1)]) / hy;
            out_u[g.uface(i, j)] = -df + dg;
        }
    }
    for i in 0..nx {
        out_v[g.vface(i, 0)] = 0.0;
        out_v[g.vface(i, ny)] = 0.0;
    }
    for j in 1..ny {
        for i in 0..nx {
            let gw = if i == 0 { 2.0 } else { 1.0 };
            let ge = if i + 1 == nx { 2.0 } else { 1.0 };
            let df = (f22[g.cell(i, j)] - f22[g.cell(i, j - 1)]) / hy;
            let dg = (gw * gc[g.corner(i, j)] - ge * gc[g.corner(i + 1, j)]) / hx;
            out_v[g.vface(i, j)] = -df + dg;
        }
    }
}

/// Pointwise dissipation density and its integral. Every term is a weighted
/// square, so the density is non-negative; fed back as the heat source it can
/// never push the temperature below its minimum. Corner contributions are
/// split evenly among the adjacent cells.
pub fn viscous_work(vel: &VectorField, nu: &ScalarField, g: &Grid) -> (ScalarField, f64) {
    let corners = corner_coeffs(nu, g);
    let mut dens = ScalarField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.cell(i, j);
            let d11 = (vel.u[g.uface(i + 1, j)] - vel.u[g.uface(i, j)]) / g.hx;
            let d22 = (vel.v[g.vface(i, j + 1)] - vel.v[g.vface(i, j)]) / g.hy;
            dens.data[c] = nu.data[c] * (d11 * d11 + d22 * d22);
        }
    }
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let s = corner_shear(&vel.u, &vel.v, g, i, j);
            let e = corners.c[g.corner(i, j)] * s * s;
            let mut adj = [usize::MAX; 4];
            let mut n = 0;
            for (ci, cj) in [
                (i.wrapping_sub(1), j.wrapping_sub(1)),
                (i, j.wrapping_sub(1)),
                (i.wrapping_sub(1), j),
                (i, j),
            ] {
                if ci < g.nx && cj < g.ny {
                    adj[n] = g.cell(ci, cj);
                    n += 1;
                }
            }
            let share = e / n as f64;
            for &a in adj.iter().take(n) {
                dens.data[a] += share;
            }
        }
    }
    let total = dens.sum() * g.cell_volume();
    (dens, total)
}

/// Mass fluxes through the four edges of every staggered control volume,
/// stored per face in the order east, west, north, south. Each edge flux is
/// the mean of the two cell-face fluxes it straddles, which makes the edge
/// sums telescope against the density update exactly.
#[derive(Debug, Clone)]
pub struct EdgeFluxes {
    pub e: Vec<f64>,
    pub w: Vec<f64>,
    pub n: Vec<f64>,
    pub s: Vec<f64>,
}

pub fn u_edge_fluxes(fluxes: &MassFluxes, g: &Grid) -> EdgeFluxes {
    let len = (g.nx + 1) * g.ny;
    let mut ef = EdgeFluxes {
        e: vec![0.0; len],
        w: vec![0.0; len],
        n: vec![0.0; len],
        s: vec![0.0; len],
    };
    for j in 0..g.ny {
        for i in 1..g.nx {
            let f = g.uface(i, j);
            ef.e[f] = 0.5 * (fluxes.fx[g.uface(i, j)] + fluxes.fx[g.uface(i + 1, j)]);
            ef.w[f] = 0.5 * (fluxes.fx[g.uface(i - 1, j)] + fluxes.fx[g.uface(i, j)]);
            ef.n[f] = 0.5 * (fluxes.fy[g.vface(i - 1, j + 1)] + fluxes.fy[g.vface(i, j + 1)]);
            ef.s[f] = 0.5 * (fluxes.fy[g.vface(i - 1, j)] + fluxes.fy[g.vface(i, j)]);
        }
    }
    ef
}

pub fn v_edge_fluxes(fluxes: &MassFluxes, g: &Grid) -> EdgeFluxes {
    let len = g.nx * (g.ny + 1);
    let mut ef = EdgeFluxes {
        e: vec![0.0; len],
        w: vec![0.0; len],
        n: vec![0.0; len],
        s: vec![0.0; len],
    };
    for j in 1..g.ny {
        for i in 0..g.nx {
            let f = g.vface(i, j);
            ef.n[f] = 0.5 * (fluxes.fy[g.vface(i, j)] + fluxes.fy[g.vface(i, j + 1)]);
            ef.s[f] = 0.5 * (fluxes.fy[g.vface(i, j - 1)] + fluxes.fy[g.vface(i, j)]);
            ef.e[f] = 0.5 * (fluxes.fx[g.uface(i + 1, j - 1)] + fluxes.fx[g.uface(i + 1, j)]);
            ef.w[f] = 0.5 * (fluxes.fx[g.uface(i, j - 1)] + fluxes.fx[g.uface(i, j)]);
        }
    }
    ef
}

/// Inputs of one implicit momentum solve. `rho_new` is the density already
/// advected with `fluxes`; using the matching pair keeps the update
/// conservative in rho * v.
pub struct MomentumInputs<'a> {
    pub rho_old: &'a ScalarField,
    pub rho_new: &'a ScalarField,
    pub fluxes: &'a MassFluxes,
    pub nu: &'a ScalarField,
    pub dt: f64,
    pub body: Option<&'a VectorField>,
}

/// Solves (rho_new v / dt) + upwind advection + viscous = rho_old v_old / dt
/// plus body forcing for the predictor velocity. `vel_star` enters as the warm
/// start and leaves holding the solution; wall-normal entries stay pinned at zero.
pub fn solve_momentum(
    inp: &MomentumInputs,
    vel_old: &VectorField,
    vel_star: &mut VectorField,
    spec: &LinearSolverSpec,
    g: &Grid,
) -> Result<SolveStats> {
    if !(inp.dt > 0.0) {
        return Err(Error::NonPositive {
            what: "time step",
            value: inp.dt,
        });
    }
    let (nx, ny) = (g.nx, g.ny);
    let un = (nx + 1) * ny;
    let vn = nx * (ny + 1);
    let vol = g.cell_volume();
    let dt = inp.dt;

    let (ru_old, rv_old) = face_densities(inp.rho_old, g);
    let (ru_new, rv_new) = face_densities(inp.rho_new, g);
    let corners = corner_coeffs(inp.nu, g);
    let ue = u_edge_fluxes(inp.fluxes, g);
    let ve = v_edge_fluxes(inp.fluxes, g);

    let mut b = vec![0.0; un + vn];
    for j in 0..ny {
        for i in 1..nx {
            let f = g.uface(i, j);
            b[f] = ru_old[f] / dt * vel_old.u[f]
                + inp.body.map_or(0.0, |fv| fv.u[f]);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let f = g.vface(i, j);
            b[un + f] = rv_old[f] / dt * vel_old.v[f]
                + inp.body.map_or(0.0, |fv| fv.v[f]);
        }
    }

    vel_star.zero_boundary_normals(g);
    let mut x = Vec::with_capacity(un + vn);
    x.extend_from_slice(&vel_star.u);
    x.extend_from_slice(&vel_star.v);

    // outflow-oriented upwind donor value
    let give = |fl: f64, this: f64, that: f64| if fl >= 0.0 { fl * this } else { fl * that };

    let nu = inp.nu;
    let apply = move |xs: &[f64], ys: &mut [f64]| {
        let (xu, xv) = xs.split_at(un);
        let (yu, yv) = ys.split_at_mut(un);
        viscous_apply(xu, xv, nu, &corners, g, yu, yv);
        for j in 0..ny {
            yu[g.uface(0, j)] = ru_new[g.uface(0, j)] / dt * xu[g.uface(0, j)];
            yu[g.uface(nx, j)] = ru_new[g.uface(nx, j)] / dt * xu[g.uface(nx, j)];
            for i in 1..nx {
                let f = g.uface(i, j);
                let here = xu[f];
                let east = xu[g.uface(i + 1, j)];
                let west = xu[g.uface(i - 1, j)];
                let north = if j + 1 < ny { xu[g.uface(i, j + 1)] } else { 0.0 };
                let south = if j > 0 { xu[g.uface(i, j - 1)] } else { 0.0 };
                let adv = give(ue.e[f], here, east) + give(ue.n[f], here, north)
                    - give(ue.w[f], west, here)
                    - give(ue.s[f], south, here);
                yu[f] += ru_new[f] / dt * here + adv / vol;
            }
        }
        for i in 0..nx {
            yv[g.vface(i, 0)] = rv_new[g.vface(i, 0)] / dt * xv[g.vface(i, 0)];
            yv[g.vface(i, ny)] = rv_new[g.vface(i, ny)] / dt * xv[g.vface(i, ny)];
        }
        for j in 1..ny {
            for i in 0..nx {
                let f = g.vface(i, j);
                let here = xv[f];
                let east = if i + 1 < nx { xv[g.vface(i + 1, j)] } else { 0.0 };
                let west = if i > 0 { xv[g.vface(i - 1, j)] } else { 0.0 };
                let north = xv[g.vface(i, j + 1)];
                let south = xv[g.vface(i, j - 1)];
                let adv = give(ve.e[f], here, east) + give(ve.n[f], here, north)
                    - give(ve.w[f], west, here)
                    - give(ve.s[f], south, here);
                yv[f] += rv_new[f] / dt * here + adv / vol;
            }
        }
    };

    let stats = solve(spec, &apply, &b, &mut x)?;
    vel_star.u.copy_from_slice(&x[..un]);
    vel_star.v.copy_from_slice(&x[un..]);
    vel_star.zero_boundary_normals(g);
    if !vel_star.is_finite() {
        return Err(Error::InvalidState("momentum solve went non-finite".into()));
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionOutcome {
    pub stats: SolveStats,
    /// Mean of div(v*) before it is removed from the right-hand side; a
    /// compatibility defect, zero to round-off for impermeable walls.
    pub compat_residual: f64,
}

/// Projects `vel` onto the discretely divergence-free space by solving
/// div((dt/rho) grad phi) = div(vel) with homogeneous Neumann walls, then
/// subtracting (dt/rho) grad phi. `phi` enters as the warm start and leaves
/// holding the mean-zero pressure. The correction uses the same face
/// coefficients and the same discrete gradient as the Poisson operator, so the
/// remaining divergence equals the (mean defect plus) solver residual.
pub fn project(
    vel: &mut VectorField,
    rho: &ScalarField,
    dt: f64,
    spec: &LinearSolverSpec,
    phi: &mut ScalarField,
    g: &Grid,
) -> Result<ProjectionOutcome> {
    if !(dt > 0.0) {
        return Err(Error::NonPositive {
            what: "time step",
            value: dt,
        });
    }
    let (nx, ny) = (g.nx, g.ny);
    let (ru, rv) = face_densities(rho, g);
    let mut beta_u = vec![0.0; (nx + 1) * ny];
    let mut beta_v = vec![0.0; nx * (ny + 1)];
    for j in 0..ny {
        for i in 1..nx {
            beta_u[g.uface(i, j)] = dt / ru[g.uface(i, j)];
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            beta_v[g.vface(i, j)] = dt / rv[g.vface(i, j)];
        }
    }

    let d = divergence(vel, g)?;
    let compat = d.sum() / g.n_cells() as f64;
    let b: Vec<f64> = d.data.iter().map(|x| -(x - compat)).collect();

    let mean_phi = exec::sum(&phi.data) / phi.data.len() as f64;
    for x in &mut phi.data {
        *x -= mean_phi;
    }

    let (hx2, hy2) = (g.hx * g.hx, g.hy * g.hy);
    let ncells = g.n_cells() as f64;
    // The Neumann operator annihilates constants; deflate that mode with a
    // rank-one shift so CG works on a definite system. The shift only moves
    // the solution along the constant we normalize away below.
    let apply = |xs: &[f64], ys: &mut [f64]| {
        let mean_x = exec::sum(xs) / ncells;
        exec::for_each_row(ys, nx, |j, row| {
            for (i, r) in row.iter_mut().enumerate() {
                let c = g.cell(i, j);
                let xc = xs[c];
                let mut acc = 0.0;
                if i + 1 < nx {
                    acc += beta_u[g.uface(i + 1, j)] * (xs[c + 1] - xc) / hx2;
                }
                if i > 0 {
                    acc -= beta_u[g.uface(i, j)] * (xc - xs[c - 1]) / hx2;
                }
                if j + 1 < ny {
                    acc += beta_v[g.vface(i, j + 1)] * (xs[c + nx] - xc) / hy2;
                }
                if j > 0 {
                    acc -= beta_v[g.vface(i, j)] * (xc - xs[c - nx]) / hy2;
                }
                *r = mean_x - acc;
            }
        });
    };

    let stats = solve(spec, &apply, &b, &mut phi.data)?;
    let mean_phi = exec::sum(&phi.data) / phi.data.len() as f64;
    for x in &mut phi.data {
        *x -= mean_phi;
    }

    let gp = gradient(phi, g)?;
    for (f, (u, gpu)) in vel.u.iter_mut().zip(&gp.u).enumerate() {
        *u -= beta_u[f] * gpu;
    }
    for (f, (v, gpv)) in vel.v.iter_mut().zip(&gp.v).enumerate() {
        *v -= beta_v[f] * gpv;
    }
    Ok(ProjectionOutcome {
        stats,
        compat_residual: compat,
    })
}

/// Evolves `v0` under the constant-coefficient Stokes flow (unit density,
/// fixed viscosity, projection every implicit step) and returns the velocity
/// L2 norm at each time level starting with t = 0. Both linear systems here
/// are symmetric, so a conjugate-gradient spec is the natural choice.
pub fn stokes_semigroup_run(
    v0: &VectorField,
    nu: f64,
    dt: f64,
    n_steps: usize,
    spec: &LinearSolverSpec,
    g: &Grid,
) -> Result<Vec<f64>> {
    stokes_semigroup_observed(v0, nu, dt, n_steps, spec, g, |_, _| Ok(()))
}

/// As `stokes_semigroup_run`, with a callback at every time level: the step
/// index (0 is the wall-pinned start) and the velocity at that level.
pub fn stokes_semigroup_observed<F>(
    v0: &VectorField,
    nu: f64,
    dt: f64,
    n_steps: usize,
    spec: &LinearSolverSpec,
    g: &Grid,
    mut observer: F,
) -> Result<Vec<f64>>
where
    F: FnMut(usize, &VectorField) -> Result<()>,
{
    if !(nu > 0.0) {
        return Err(Error::NonPositive {
            what: "viscosity",
            value: nu,
        });
    }
    if !v0.matches(g) {
        return Err(Error::DimensionMismatch {
            what: "stokes_semigroup_run",
        });
    }
    let one = ScalarField::constant(g, 1.0);
    let nu_field = ScalarField::constant(g, nu);
    let quiet = MassFluxes {
        fx: vec![0.0; (g.nx + 1) * g.ny],
        fy: vec![0.0; g.nx * (g.ny + 1)],
    };
    let mut vel = v0.clone();
    vel.zero_boundary_normals(g);
    let mut star = vel.clone();
    let mut phi = ScalarField::zeros(g);
    let mut norms = Vec::with_capacity(n_steps + 1);
    norms.push(vel.l2_norm(g));
    observer(0, &vel)?;
    for k in 0..n_steps {
        let inp = MomentumInputs {
            rho_old: &one,
            rho_new: &one,
            fluxes: &quiet,
            nu: &nu_field,
            dt,
            body: None,
        };
        solve_momentum(&inp, &vel, &mut star, spec, g)?;
        project(&mut star, &one, dt, spec, &mut phi, g)?;
        vel.u.copy_from_slice(&star.u);
        vel.v.copy_from_slice(&star.v);
        norms.push(vel.l2_norm(g));
        observer(k + 1, &vel)?;
    }
    Ok(norms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::Method;
    use crate::transport;

    fn stream_vel(g: &Grid, amp: f64) -> VectorField {
        let pi = std::f64::consts::PI;
        let (lx, ly) = (g.lx, g.ly);
        VectorField::from_stream(g, move |x, y| {
            amp * (pi * x / lx).sin().powi(2) * (pi * y / ly).sin().powi(2)
        })
    }

    fn wiggly_field(g: &Grid) -> VectorField {
        let mut w = VectorField::from_fn(g, |x, y| (3.0 * x + y).sin(), |x, y| (x - 2.0 * y).cos());
        w.zero_boundary_normals(g);
        w
    }

    #[test]
    fn viscous_operator_is_the_gradient_of_the_work_form() {
        let g = Grid::new(14, 11, 1.3, 0.9).unwrap();
        let w = wiggly_field(&g);
        let nu = ScalarField::from_fn(&g, |x, y| 0.5 + x + 0.3 * (7.0 * y).sin().abs());
        let corners = corner_coeffs(&nu, &g);
        let mut au = vec![0.0; w.u.len()];
        let mut av = vec![0.0; w.v.len()];
        viscous_apply(&w.u, &w.v, &nu, &corners, &g, &mut au, &mut av);
        let pairing = (exec::dot(&au, &w.u) + exec::dot(&av, &w.v)) * g.cell_volume();
        let (_, total) = viscous_work(&w, &nu, &g);
        assert!(
            (pairing - total).abs() < 1e-12 * total.abs().max(1.0),
            "pairing {pairing} vs work {total}"
        );
        assert!(total >= 0.0);
    }

    #[test]
    fn viscous_work_density_is_nonnegative_and_integrates_to_the_total() {
        let g = Grid::new(10, 10, 1.0, 1.0).unwrap();
        let w = wiggly_field(&g);
        let nu = ScalarField::from_fn(&g, |x, y| 1.0 + x * y);
        let (dens, total) = viscous_work(&w, &nu, &g);
        assert!(dens.data.iter().all(|&d| d >= 0.0));
        assert!((dens.integral(&g) - total).abs() < 1e-12 * total.max(1.0));
    }

    #[test]
    fn plane_shear_dissipates_half_nu_gamma_squared_inside() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let gamma = 0.8;
        let nu0 = 0.3;
        let shear = VectorField::from_fn(&g, |_, y| gamma * y, |_, _| 0.0);
        let nu = ScalarField::constant(&g, nu0);
        let (dens, _) = viscous_work(&shear, &nu, &g);
        let expect = 0.5 * nu0 * gamma * gamma;
        for j in 2..g.ny - 2 {
            for i in 2..g.nx - 2 {
                assert!(
                    (dens.at(&g, i, j) - expect).abs() < 1e-12,
                    "cell {i},{j}: {}",
                    dens.at(&g, i, j)
                );
            }
        }
    }

    #[test]
    fn rigid_rotation_produces_no_interior_dissipation() {
        let g = Grid::new(16, 16, 2.0, 2.0).unwrap();
        let rot = VectorField::from_fn(&g, |_, y| -(y - 1.0), |x, _| x - 1.0);
        let nu = ScalarField::constant(&g, 1.0);
        let (dens, _) = viscous_work(&rot, &nu, &g);
        for j in 2..g.ny - 2 {
            for i in 2..g.nx - 2 {
                assert!(dens.at(&g, i, j).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn viscous_operator_annihilates_linear_fields_inside() {
        let g = Grid::new(20, 20, 1.0, 1.0).unwrap();
        let w = VectorField::from_fn(&g, |_, y| 0.7 * y, |_, _| 0.0);
        let nu = ScalarField::constant(&g, 0.4);
        let corners = corner_coeffs(&nu, &g);
        let mut au = vec![0.0; w.u.len()];
        let mut av = vec![0.0; w.v.len()];
        viscous_apply(&w.u, &w.v, &nu, &corners, &g, &mut au, &mut av);
        let scale = 0.7 * 0.4 / g.hy;
        for j in 2..g.ny - 2 {
            for i in 2..g.nx - 2 {
                assert!(au[g.uface(i, j)].abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn staggered_edge_fluxes_telescope_against_the_density_update() {
        let g = Grid::new(18, 14, 1.5, 1.0).unwrap();
        let vel = stream_vel(&g, 0.9);
        let rho = ScalarField::from_fn(&g, |x, y| 1.0 + 0.3 * (4.0 * x).sin() * (2.0 * y).cos());
        let dt = 0.3 * g.hx / 0.9;
        let (rho_new, fluxes) = transport::advect(&rho, &vel, dt, &g).unwrap();
        let (ru_old, rv_old) = face_densities(&rho, &g);
        let (ru_new, rv_new) = face_densities(&rho_new, &g);
        let ue = u_edge_fluxes(&fluxes, &g);
        let ve = v_edge_fluxes(&fluxes, &g);
        let vol = g.cell_volume();
        for j in 0..g.ny {
            for i in 1..g.nx {
                let f = g.uface(i, j);
                let net = ue.e[f] - ue.w[f] + ue.n[f] - ue.s[f];
                let drho = -vol * (ru_new[f] - ru_old[f]) / dt;
                assert!((net - drho).abs() < 1e-12, "u face {i},{j}");
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                let f = g.vface(i, j);
                let net = ve.e[f] - ve.w[f] + ve.n[f] - ve.s[f];
                let drho = -vol * (rv_new[f] - rv_old[f]) / dt;
                assert!((net - drho).abs() < 1e-12, "v face {i},{j}");
            }
        }
    }

    #[test]
    fn momentum_solve_keeps_rest_at_rest() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let rho = ScalarField::constant(&g, 1.0);
        let zero = VectorField::zeros(&g);
        let fluxes = transport::mass_fluxes(&rho, &zero, &g).unwrap();
        let nu = ScalarField::constant(&g, 0.1);
        let inp = MomentumInputs {
            rho_old: &rho,
            rho_new: &rho,
            fluxes: &fluxes,
            nu: &nu,
            dt: 0.1,
            body: None,
        };
        let spec = LinearSolverSpec::new(Method::BiCgStab, 1e-10, 500).unwrap();
        let mut out = VectorField::zeros(&g);
        let stats = solve_momentum(&inp, &zero, &mut out, &spec, &g).unwrap();
        assert_eq!(stats.iterations, 0);
        assert!(out.u.iter().all(|&x| x == 0.0));
        assert!(out.v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn implicit_viscous_step_dissipates_kinetic_energy() {
        let g = Grid::new(24, 24, 1.0, 1.0).unwrap();
        let rho = ScalarField::constant(&g, 1.0);
        let v0 = stream_vel(&g, 0.5);
        let fluxes = transport::mass_fluxes(&rho, &VectorField::zeros(&g), &g).unwrap();
        let nu = ScalarField::constant(&g, 0.05);
        let inp = MomentumInputs {
            rho_old: &rho,
            rho_new: &rho,
            fluxes: &fluxes,
            nu: &nu,
            dt: 0.05,
            body: None,
        };
        let spec = LinearSolverSpec::new(Method::BiCgStab, 1e-12, 2000).unwrap();
        let mut out = v0.clone();
        solve_momentum(&inp, &v0, &mut out, &spec, &g).unwrap();
        let ke0 = crate::state::kinetic_energy(&rho, &v0, &g);
        let ke1 = crate::state::kinetic_energy(&rho, &out, &g);
        assert!(ke1 < ke0, "kinetic energy {ke0} -> {ke1}");
        assert!(ke1 > 0.0);
    }

    #[test]
    fn full_step_with_advection_stays_bounded_and_finite() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let rho = ScalarField::from_fn(&g, |x, y| 1.0 + 0.2 * (x + y).sin());
        let vel = stream_vel(&g, 0.4);
        let dt = 0.02;
        let (rho_new, fluxes) = transport::advect(&rho, &vel, dt, &g).unwrap();
        let nu = ScalarField::constant(&g, 0.02);
        let inp = MomentumInputs {
            rho_old: &rho,
            rho_new: &rho_new,
            fluxes: &fluxes,
            nu: &nu,
            dt,
            body: None,
        };
        let spec = LinearSolverSpec::new(Method::BiCgStab, 1e-11, 2000).unwrap();
        let mut out = vel.clone();
        solve_momentum(&inp, &vel, &mut out, &spec, &g).unwrap();
        let ke0 = crate::state::kinetic_energy(&rho, &vel, &g);
        let ke1 = crate::state::kinetic_energy(&rho_new, &out, &g);
        assert!(ke1 <= ke0 * (1.0 + 1e-10));
    }

    #[test]
    fn projection_removes_divergence_and_is_idempotent() {
        let g = Grid::new(32, 24, 2.0, 1.5).unwrap();
        let mut vel = wiggly_field(&g);
        let rho = ScalarField::from_fn(&g, |x, y| 1.0 + 0.4 * (x * y).cos());
        let spec = LinearSolverSpec::new(Method::Cg, 1e-12, 4000).unwrap();
        let mut phi = ScalarField::zeros(&g);
        let dt = 0.01;
        let out = project(&mut vel, &rho, dt, &spec, &mut phi, &g).unwrap();
        assert!(out.compat_residual.abs() < 1e-12);
        let d = divergence(&vel, &g).unwrap();
        assert!(d.max_abs() < 1e-9, "div after projection {}", d.max_abs());
        assert!(phi.mean(&g).abs() < 1e-12 * phi.max_abs().max(1.0));

        let before = vel.clone();
        let mut phi2 = phi.clone();
        project(&mut vel, &rho, dt, &spec, &mut phi2, &g).unwrap();
        let du: f64 = before
            .u
            .iter()
            .zip(&vel.u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(du < 1e-9, "projection moved an already projected field by {du}");
    }

    #[test]
    fn projection_leaves_divergence_free_fields_alone() {
        let g = Grid::new(24, 24, 1.0, 1.0).unwrap();
        let mut vel = stream_vel(&g, 1.0);
        let keep = vel.clone();
        let rho = ScalarField::constant(&g, 2.0);
        let spec = LinearSolverSpec::new(Method::Cg, 1e-12, 2000).unwrap();
        let mut phi = ScalarField::zeros(&g);
        project(&mut vel, &rho, 0.01, &spec, &mut phi, &g).unwrap();
        let drift: f64 = keep
            .u
            .iter()
            .zip(&vel.u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-10);
        assert!(phi.max_abs() < 1e-8);
    }

    #[test]
    fn projection_dissipates_kinetic_energy() {
        let g = Grid::new(20, 20, 1.0, 1.0).unwrap();
        let mut vel = wiggly_field(&g);
        let rho = ScalarField::from_fn(&g, |x, _| 1.5 + x);
        let ke0 = crate::state::kinetic_energy(&rho, &vel, &g);
        let spec = LinearSolverSpec::new(Method::Cg, 1e-12, 2000).unwrap();
        let mut phi = ScalarField::zeros(&g);
        project(&mut vel, &rho, 0.02, &spec, &mut phi, &g).unwrap();
        let ke1 = crate::state::kinetic_energy(&rho, &vel, &g);
        assert!(ke1 <= ke0 * (1.0 + 1e-12), "{ke0} -> {ke1}");
    }

    #[test]
    fn projection_annihilates_pure_gradients() {
        let g = Grid::new(24, 20, 1.0, 1.2).unwrap();
        let pi = std::f64::consts::PI;
        let phi0 = ScalarField::from_fn(&g, |x, y| (pi * x / g.lx).cos() * (pi * y / g.ly).cos());
        let mut vel = gradient(&phi0, &g).unwrap();
        let before = vel.max_speeds();
        let spec = LinearSolverSpec::new(Method::Cg, 1e-13, 4000).unwrap();
        let mut phi = ScalarField::zeros(&g);
        let rho = ScalarField::constant(&g, 1.0);
        project(&mut vel, &rho, 0.01, &spec, &mut phi, &g).unwrap();
        let after = vel.max_speeds();
        let top = before.0.max(before.1);
        assert!(
            after.0.max(after.1) < 1e-9 * top,
            "gradient survived: {:?}",
            after
        );
    }

    #[test]
    fn stokes_runner_reports_a_dead_start_as_zeros() {
        let g = Grid::new(12, 12, 1.0, 1.0).unwrap();
        let spec = LinearSolverSpec::new(Method::Cg, 1e-12, 2000).unwrap();
        let norms = stokes_semigroup_run(&VectorField::zeros(&g), 0.1, 0.01, 6, &spec, &g).unwrap();
        assert_eq!(norms.len(), 7);
        assert!(norms.iter().all(|&n| n == 0.0));
    }

    #[test]
    fn stokes_runner_decays_and_viscosity_sets_the_clock() {
        let g = Grid::new(24, 24, 1.0, 1.0).unwrap();
        let v0 = stream_vel(&g, 0.5);
        let spec = LinearSolverSpec::new(Method::Cg, 1e-12, 4000).unwrap();
        let dt = 0.02;
        let n = 50;
        let slow = stokes_semigroup_run(&v0, 0.05, dt, n, &spec, &g).unwrap();
        let fast = stokes_semigroup_run(&v0, 0.10, dt, n, &spec, &g).unwrap();
        for w in slow.windows(2) {
            assert!(w[1] < w[0], "norms must fall: {} -> {}", w[0], w[1]);
        }
        // late-window log slope, after the sharp modes have died off
        let rate = |s: &[f64]| (s[n].ln() - s[n / 2].ln()) / (dt * (n - n / 2) as f64);
        let ratio = rate(&fast) / rate(&slow);
        assert!(
            (ratio - 2.0).abs() < 0.4,
            "doubling viscosity gave rate ratio {ratio}"
        );
    }
}
