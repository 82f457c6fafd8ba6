//! Matrix-free Krylov solvers. Operators are closures on flat slices, so the
//! stencil code never assembles a matrix. Conjugate gradients for the symmetric
//! positive (semi-)definite solves, BiCGStab for the nonsymmetric ones. All
//! inner products use the fixed-order reductions, so iteration counts and
//! iterates are bit-stable across thread counts.

use crate::error::{Error, Result};
use crate::exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Cg,
    BiCgStab,
}

#[derive(Debug, Clone, Copy)]
pub struct LinearSolverSpec {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
}

impl LinearSolverSpec {
    pub fn new(method: Method, tol: f64, max_iter: usize) -> Result<LinearSolverSpec> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::NonPositive {
                what: "solver tolerance (must lie in (0,1))",
                value: tol,
            });
        }
        if max_iter == 0 {
            return Err(Error::NonPositive {
                what: "solver iteration cap",
                value: 0.0,
            });
        }
        Ok(LinearSolverSpec {
            method,
            tol,
            max_iter,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn norm2(x: &[f64]) -> f64 {
    exec::sum_squares(x).sqrt()
}

/// Solves A x = b with the configured method, warm-starting from the incoming
/// `x`. Convergence means the true residual (recomputed, not the recurrence's)
/// satisfies |b - A x| <= tol |b|; a zero right-hand side short-circuits to
/// x = 0 with zero iterations.
pub fn solve(
    spec: &LinearSolverSpec,
    apply: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
) -> Result<SolveStats> {
    assert_eq!(b.len(), x.len());
    let norm_b = norm2(b);
    if norm_b == 0.0 {
        x.fill(0.0);
        return Ok(SolveStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let target = spec.tol * norm_b;
    let n = b.len();
    let mut ax = vec![0.0; n];
    let mut used = 0usize;
    // Outer restarts defend against recurrence drift: accept only on a freshly
    // computed residual.
    loop {
        apply(x, &mut ax);
        let r0: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let res = norm2(&r0);
        if res <= target {
            return Ok(SolveStats {
                iterations: used,
                residual: res,
            });
        }
        if used >= spec.max_iter {
            return Err(Error::SolverDiverged {
                solver: match spec.method {
                    Method::Cg => "cg",
                    Method::BiCgStab => "bicgstab",
                },
                iterations: used,
                residual: res / norm_b,
            });
        }
        let budget = spec.max_iter - used;
        let inner = match spec.method {
            Method::Cg => cg_inner(apply, r0, x, target, budget),
            Method::BiCgStab => bicgstab_inner(apply, r0, x, target, budget),
        };
        used += inner;
    }
}

/// Plain conjugate gradients from an explicit initial residual. Returns the
/// iteration count; the caller re-verifies the result.
fn cg_inner(
    apply: &dyn Fn(&[f64], &mut [f64]),
    mut r: Vec<f64>,
    x: &mut [f64],
    target: f64,
    budget: usize,
) -> usize {
    let n = r.len();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs = exec::sum_squares(&r);
    for k in 0..budget {
        apply(&p, &mut ap);
        let pap = exec::dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            // direction fell into the operator's null space or went non-finite;
            // hand back to the restart loop
            return k + 1;
        }
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = exec::sum_squares(&r);
        if rs_new.sqrt() <= target {
            return k + 1;
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    budget
}

/// Unpreconditioned BiCGStab from an explicit initial residual.
fn bicgstab_inner(
    apply: &dyn Fn(&[f64], &mut [f64]),
    mut r: Vec<f64>,
    x: &mut [f64],
    target: f64,
    budget: usize,
) -> usize {
    let n = r.len();
    let r_hat = r.clone();
    let mut p = r.clone();
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut rho = exec::dot(&r_hat, &r);
    for k in 0..budget {
        if rho == 0.0 || !rho.is_finite() {
            return k + 1;
        }
        apply(&p, &mut v);
        let rv = exec::dot(&r_hat, &v);
        if rv == 0.0 || !rv.is_finite() {
            return k + 1;
        }
        let alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) <= target {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return k + 1;
        }
        apply(&s, &mut t);
        let tt = exec::sum_squares(&t);
        if tt == 0.0 {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return k + 1;
        }
        let omega = exec::dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) <= target {
            return k + 1;
        }
        if omega == 0.0 || !omega.is_finite() {
            return k + 1;
        }
        let rho_new = exec::dot(&r_hat, &r);
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
    }
    budget
}
