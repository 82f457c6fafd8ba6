//! Uniform staggered (MAC) grid on a closed rectangle and the discrete operators
//! built on it. Scalars live at cell centers, the x-velocity at vertical faces,
//! the y-velocity at horizontal faces; boundary faces carry the wall-normal values.

use crate::error::{Error, Result};
use crate::exec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
        if nx < 4 || ny < 4 {
            return Err(Error::GridTooCoarse { nx, ny });
        }
        if !(lx > 0.0) || !(ly > 0.0) {
            return Err(Error::BadExtent { lx, ly });
        }
        Ok(Grid {
            nx,
            ny,
            lx,
            ly,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_volume(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Center coordinate of cell column i.
    pub fn xc(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.hx
    }

    pub fn yc(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.hy
    }

    /// Coordinate of vertical face i (x-normal), i in 0..=nx.
    pub fn xf(&self, i: usize) -> f64 {
        i as f64 * self.hx
    }

    pub fn yf(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Index of the vertical face left of cell (i, j); i runs 0..=nx.
    #[inline]
    pub fn uface(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Index of the horizontal face below cell (i, j); j runs 0..=ny.
    #[inline]
    pub fn vface(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Index of the cell corner (i, j); i in 0..=nx, j in 0..=ny.
    #[inline]
    pub fn corner(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
}

/// Cell-centered field, row-major with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(g: &Grid) -> ScalarField {
        ScalarField {
            nx: g.nx,
            ny: g.ny,
            data: vec![0.0; g.n_cells()],
        }
    }

    pub fn constant(g: &Grid, c: f64) -> ScalarField {
        ScalarField {
            nx: g.nx,
            ny: g.ny,
            data: vec![c; g.n_cells()],
        }
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn from_fn(g: &Grid, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let mut s = ScalarField::zeros(g);
        for j in 0..g.ny {
            for i in 0..g.nx {
                s.data[g.cell(i, j)] = f(g.xc(i), g.yc(j));
            }
        }
        s
    }

    pub fn matches(&self, g: &Grid) -> bool {
        self.nx == g.nx && self.ny == g.ny && self.data.len() == g.n_cells()
    }

    #[inline]
    pub fn at(&self, g: &Grid, i: usize, j: usize) -> f64 {
        self.data[g.cell(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &x| m.min(x))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
    }

    pub fn max_abs(&self) -> f64 {
        exec::max_abs(&self.data)
    }

    pub fn sum(&self) -> f64 {
        exec::sum(&self.data)
    }

    /// Integral over the domain: sum of cell values times cell volume.
    pub fn integral(&self, g: &Grid) -> f64 {
        self.sum() * g.cell_volume()
    }

    pub fn mean(&self, g: &Grid) -> f64 {
        self.integral(g) / g.area()
    }

    pub fn l2_norm(&self, g: &Grid) -> f64 {
        (exec::sum_squares(&self.data) * g.cell_volume()).sqrt()
    }

    pub fn lp_norm(&self, g: &Grid, p: f64) -> f64 {
        (exec::sum_abs_powers(&self.data, p) * g.cell_volume()).powf(1.0 / p)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        ScalarField {
            nx: self.nx,
            ny: self.ny,
            data: self.data.iter().map(|x| a * x).collect(),
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        debug_assert_eq!(self.data.len(), other.data.len());
        ScalarField {
            nx: self.nx,
            ny: self.ny,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Staggered velocity field: `u` on vertical faces ((nx+1) x ny), `v` on horizontal
/// faces (nx x (ny+1)). Wall-normal boundary entries are ordinary storage; solvers
/// and state constructors keep them at zero (no penetration).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub nx: usize,
    pub ny: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorField {
    pub fn zeros(g: &Grid) -> VectorField {
        VectorField {
            nx: g.nx,
            ny: g.ny,
            u: vec![0.0; (g.nx + 1) * g.ny],
            v: vec![0.0; g.nx * (g.ny + 1)],
        }
    }

    /// Samples analytic components at every face, including boundary faces.
    pub fn from_fn(g: &Grid, fu: impl Fn(f64, f64) -> f64, fv: impl Fn(f64, f64) -> f64) -> VectorField {
        let mut w = VectorField::zeros(g);
        for j in 0..g.ny {
            for i in 0..=g.nx {
                w.u[g.uface(i, j)] = fu(g.xf(i), g.yc(j));
            }
        }
        for j in 0..=g.ny {
            for i in 0..g.nx {
                w.v[g.vface(i, j)] = fv(g.xc(i), g.yf(j));
            }
        }
        w
    }

    /// Discrete curl of a corner-sampled stream function: u = d(psi)/dy, v = -d(psi)/dx.
    /// The result is divergence-free to round-off. Wall-normal faces are pinned to
    /// exact zero afterwards; psi must be constant along each wall for that pin to
    /// cost no more than round-off.
    pub fn from_stream(g: &Grid, psi: impl Fn(f64, f64) -> f64) -> VectorField {
        let mut w = VectorField::zeros(g);
        for j in 0..g.ny {
            for i in 0..=g.nx {
                let x = g.xf(i);
                w.u[g.uface(i, j)] = (psi(x, g.yf(j + 1)) - psi(x, g.yf(j))) / g.hy;
            }
        }
        for j in 0..=g.ny {
            for i in 0..g.nx {
                let y = g.yf(j);
                w.v[g.vface(i, j)] = -(psi(g.xf(i + 1), y) - psi(g.xf(i), y)) / g.hx;
            }
        }
        w.zero_boundary_normals(g);
        w
    }

    pub fn matches(&self, g: &Grid) -> bool {
        self.nx == g.nx
            && self.ny == g.ny
            && self.u.len() == (g.nx + 1) * g.ny
            && self.v.len() == g.nx * (g.ny + 1)
    }

    pub fn zero_boundary_normals(&mut self, g: &Grid) {
        for j in 0..g.ny {
            self.u[g.uface(0, j)] = 0.0;
            self.u[g.uface(g.nx, j)] = 0.0;
        }
        for i in 0..g.nx {
            self.v[g.vface(i, 0)] = 0.0;
            self.v[g.vface(i, g.ny)] = 0.0;
        }
    }

    pub fn has_zero_boundary_normals(&self, g: &Grid) -> bool {
        (0..g.ny).all(|j| self.u[g.uface(0, j)] == 0.0 && self.u[g.uface(g.nx, j)] == 0.0)
            && (0..g.nx).all(|i| self.v[g.vface(i, 0)] == 0.0 && self.v[g.vface(i, g.ny)] == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|x| x.is_finite()) && self.v.iter().all(|x| x.is_finite())
    }

    /// Max face speed, for CFL checks.
    pub fn max_speeds(&self) -> (f64, f64) {
        (exec::max_abs(&self.u), exec::max_abs(&self.v))
    }

    /// L2 norm matching the cell-averaged kinetic quadrature with unit density:
    /// interior faces carry full cell volume, wall faces half.
    pub fn l2_norm(&self, g: &Grid) -> f64 {
        let mut acc = 0.0;
        for j in 0..g.ny {
            for i in 0..=g.nx {
                let w = if i == 0 || i == g.nx { 0.5 } else { 1.0 };
                let x = self.u[g.uface(i, j)];
                acc += w * x * x;
            }
        }
        for j in 0..=g.ny {
            for i in 0..g.nx {
                let w = if j == 0 || j == g.ny { 0.5 } else { 1.0 };
                let x = self.v[g.vface(i, j)];
                acc += w * x * x;
            }
        }
        (acc * g.cell_volume()).sqrt()
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField {
            nx: self.nx,
            ny: self.ny,
            u: self.u.iter().zip(&other.u).map(|(a, b)| a - b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect(),
        }
    }

    /// Linear interpolation of both components to cell centers.
    pub fn to_centers(&self, g: &Grid) -> (ScalarField, ScalarField) {
        let mut uc = ScalarField::zeros(g);
        let mut vc = ScalarField::zeros(g);
        for j in 0..g.ny {
            for i in 0..g.nx {
                uc.data[g.cell(i, j)] =
                    0.5 * (self.u[g.uface(i, j)] + self.u[g.uface(i + 1, j)]);
                vc.data[g.cell(i, j)] =
                    0.5 * (self.v[g.vface(i, j)] + self.v[g.vface(i, j + 1)]);
            }
        }
        (uc, vc)
    }
}

/// Symmetric 2x2 tensor at cell centers; the off-diagonal entry is stored once.
#[derive(Debug, Clone)]
pub struct TensorField {
    pub nx: usize,
    pub ny: usize,
    pub dxx: Vec<f64>,
    pub dyy: Vec<f64>,
    pub dxy: Vec<f64>,
}

/// Face-difference divergence at cell centers. Exact on discretely linear fields.
pub fn divergence(w: &VectorField, g: &Grid) -> Result<ScalarField> {
    if !w.matches(g) {
        return Err(Error::DimensionMismatch { what: "divergence" });
    }
    let mut out = ScalarField::zeros(g);
    let nx = g.nx;
    let (hx, hy) = (g.hx, g.hy);
    exec::for_each_row(&mut out.data, nx, |j, row| {
        for (i, r) in row.iter_mut().enumerate() {
            let du = w.u[g.uface(i + 1, j)] - w.u[g.uface(i, j)];
            let dv = w.v[g.vface(i, j + 1)] - w.v[g.vface(i, j)];
            *r = du / hx + dv / hy;
        }
    });
    Ok(out)
}

/// Cell-to-face gradient. Boundary faces receive zero, matching the Neumann
/// pressure closure of the projection; together with `divergence` this forms an
/// exact summation-by-parts pair on fields with zero wall-normal components.
pub fn gradient(s: &ScalarField, g: &Grid) -> Result<VectorField> {
    if !s.matches(g) {
        return Err(Error::DimensionMismatch { what: "gradient" });
    }
    let mut out = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            out.u[g.uface(i, j)] = (s.data[g.cell(i, j)] - s.data[g.cell(i - 1, j)]) / g.hx;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            out.v[g.vface(i, j)] = (s.data[g.cell(i, j)] - s.data[g.cell(i, j - 1)]) / g.hy;
        }
    }
    Ok(out)
}

/// Symmetric gradient (rate of strain) sampled at cell centers, for diagnostics.
/// Tangential derivatives use centered differences inside the domain and one-sided
/// differences on the wall rows/columns, so discretely linear fields are exact.
pub fn sym_gradient(w: &VectorField, g: &Grid) -> Result<TensorField> {
    if !w.matches(g) {
        return Err(Error::DimensionMismatch { what: "sym_gradient" });
    }
    let n = g.n_cells();
    let mut t = TensorField {
        nx: g.nx,
        ny: g.ny,
        dxx: vec![0.0; n],
        dyy: vec![0.0; n],
        dxy: vec![0.0; n],
    };
    // d(u)/dy at a vertical face, one-sided on the wall rows
    let dudy = |i: usize, j: usize| -> f64 {
        if j == 0 {
            (w.u[g.uface(i, 1)] - w.u[g.uface(i, 0)]) / g.hy
        } else if j == g.ny - 1 {
            (w.u[g.uface(i, j)] - w.u[g.uface(i, j - 1)]) / g.hy
        } else {
            (w.u[g.uface(i, j + 1)] - w.u[g.uface(i, j - 1)]) / (2.0 * g.hy)
        }
    };
    let dvdx = |i: usize, j: usize| -> f64 {
        if i == 0 {
            (w.v[g.vface(1, j)] - w.v[g.vface(0, j)]) / g.hx
        } else if i == g.nx - 1 {
            (w.v[g.vface(i, j)] - w.v[g.vface(i - 1, j)]) / g.hx
        } else {
            (w.v[g.vface(i + 1, j)] - w.v[g.vface(i - 1, j)]) / (2.0 * g.hx)
        }
    };
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.cell(i, j);
            t.dxx[c] = (w.u[g.uface(i + 1, j)] - w.u[g.uface(i, j)]) / g.hx;
            t.dyy[c] = (w.v[g.vface(i, j + 1)] - w.v[g.vface(i, j)]) / g.hy;
            let uy = 0.5 * (dudy(i, j) + dudy(i + 1, j));
            let vx = 0.5 * (dvdx(i, j) + dvdx(i, j + 1));
            t.dxy[c] = 0.5 * (uy + vx);
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// No flux through the walls; the operator's rows sum to zero.
    Neumann,
    /// Homogeneous Dirichlet via mirror ghosts.
    DirichletZero,
}

/// Harmonic-mean face coefficients for a cell-centered, positive coefficient field.
/// Boundary faces get zero (Neumann form); Dirichlet closures add their wall term
/// separately. Errors on non-positive coefficients.
pub fn harmonic_face_coeffs(coeff: &ScalarField, g: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
    if !coeff.matches(g) {
        return Err(Error::DimensionMismatch {
            what: "harmonic_face_coeffs",
        });
    }
    if let Some(&bad) = coeff.data.iter().find(|&&c| !(c > 0.0)) {
        return Err(Error::NonPositive {
            what: "diffusion coefficient",
            value: bad,
        });
    }
    let mut cx = vec![0.0; (g.nx + 1) * g.ny];
    let mut cy = vec![0.0; g.nx * (g.ny + 1)];
    for j in 0..g.ny {
        for i in 1..g.nx {
            let a = coeff.data[g.cell(i - 1, j)];
            let b = coeff.data[g.cell(i, j)];
            cx[g.uface(i, j)] = 2.0 * a * b / (a + b);
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let a = coeff.data[g.cell(i, j - 1)];
            let b = coeff.data[g.cell(i, j)];
            cy[g.vface(i, j)] = 2.0 * a * b / (a + b);
        }
    }
    Ok((cx, cy))
}

/// Five-point div(coeff * grad s) with harmonic-mean face coefficients.
/// The induced matrix is an M-matrix; with `Neumann` walls every row sums to zero,
/// so the field's integral is invariant under the induced flow.
pub fn div_coeff_grad(
    coeff: &ScalarField,
    s: &ScalarField,
    bc: BoundaryKind,
    g: &Grid,
) -> Result<ScalarField> {
    if !s.matches(g) {
        return Err(Error::DimensionMismatch { what: "div_coeff_grad" });
    }
    let (cx, cy) = harmonic_face_coeffs(coeff, g)?;
    let mut out = ScalarField::zeros(g);
    let (hx2, hy2) = (g.hx * g.hx, g.hy * g.hy);
    let nx = g.nx;
    exec::for_each_row(&mut out.data, nx, |j, row| {
        for (i, r) in row.iter_mut().enumerate() {
            let c = g.cell(i, j);
            let sc = s.data[c];
            let mut acc = 0.0;
            if i + 1 < nx {
                acc += cx[g.uface(i + 1, j)] * (s.data[c + 1] - sc) / hx2;
            }
            if i > 0 {
                acc -= cx[g.uface(i, j)] * (sc - s.data[c - 1]) / hx2;
            }
            if j + 1 < g.ny {
                acc += cy[g.vface(i, j + 1)] * (s.data[c + nx] - sc) / hy2;
            }
            if j > 0 {
                acc -= cy[g.vface(i, j)] * (sc - s.data[c - nx]) / hy2;
            }
            if bc == BoundaryKind::DirichletZero {
                // mirror ghost -s_c: wall flux 2*coeff_c*(0 - s_c)/h
                let cc = coeff.data[c];
                if i == 0 {
                    acc -= 2.0 * cc * sc / hx2;
                }
                if i + 1 == nx {
                    acc -= 2.0 * cc * sc / hx2;
                }
                if j == 0 {
                    acc -= 2.0 * cc * sc / hy2;
                }
                if j + 1 == g.ny {
                    acc -= 2.0 * cc * sc / hy2;
                }
            }
            *r = acc;
        }
    });
    Ok(out)
}
