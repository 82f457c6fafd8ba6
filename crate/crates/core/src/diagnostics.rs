//! Post-processing checks: conservation ledgers, the minimum-principle audit,
//! exponential decay fits, scale-weighted regularity proxies, the coefficient
//! smallness indicator, and the dissipation-driven mean temperature track.
//! Everything here reads simulation output; nothing feeds back into the
//! stepping.

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{Grid, ScalarField, VectorField};
use crate::momentum::viscous_work;
use crate::state::{kinetic_energy, mass, thermal_energy, Material, State};

/// One row of the conservation bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct EnergyLedger {
    pub time: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub thermal: f64,
    /// kinetic + thermal.
    pub total: f64,
    /// For a fresh state the instantaneous viscous dissipation; runs replace
    /// this with the rate actually fed to the heat equation over the step
    /// that ends at `time`.
    pub dissipation_rate: f64,
    /// kinetic + integral of rho (theta - floor).
    pub modified: f64,
}

/// Evaluates every ledger column from a single state.
pub fn ledger(s: &State, mat: &Material, theta_floor: f64, g: &Grid) -> Result<EnergyLedger> {
    let nu = mat.nu_field(&s.theta)?;
    let (_, dissipation_rate) = viscous_work(&s.vel, &nu, g);
    let total_mass = mass(&s.rho, g);
    let kinetic = kinetic_energy(&s.rho, &s.vel, g);
    let thermal = thermal_energy(&s.rho, &s.theta, g);
    Ok(EnergyLedger {
        time: s.time,
        mass: total_mass,
        kinetic,
        thermal,
        total: kinetic + thermal,
        dissipation_rate,
        modified: kinetic + thermal - theta_floor * total_mass,
    })
}

/// Worst signed margin min(theta) - floor over a temperature series. An empty
/// series reports +inf: nothing violated anything.
pub fn min_principle_audit(series: &[ScalarField], theta_floor: f64) -> f64 {
    series
        .iter()
        .map(|t| t.min() - theta_floor)
        .fold(f64::INFINITY, f64::min)
}

/// Least-squares exponential fit of a norm series over an index window.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    /// Signed slope of log(norm) against time; decay shows up as rate < 0.
    pub rate: f64,
    /// Fitted log-norm extrapolated to time zero.
    pub intercept: f64,
    /// Root-mean-square deviation of log(norm) from the fitted line.
    pub residual: f64,
    /// Half-open index range the fit used.
    pub window: (usize, usize),
}

/// Fits log(norms) = intercept + rate * time over `window` (half open).
pub fn decay_fit(times: &[f64], norms: &[f64], window: (usize, usize)) -> Result<DecayFit> {
    if times.len() != norms.len() {
        return Err(Error::DimensionMismatch { what: "decay_fit" });
    }
    let (lo, hi) = window;
    if lo >= hi || hi > times.len() || hi - lo < 2 {
        return Err(Error::BadWindow(format!(
            "window {lo}..{hi} over {} samples",
            times.len()
        )));
    }
    for k in lo..hi {
        if !(norms[k] > 0.0) {
            return Err(Error::NonPositiveNorm { index: k });
        }
    }
    let n = (hi - lo) as f64;
    let tbar = times[lo..hi].iter().sum::<f64>() / n;
    let ybar = norms[lo..hi].iter().map(|x| x.ln()).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for k in lo..hi {
        let dx = times[k] - tbar;
        sxx += dx * dx;
        sxy += dx * (norms[k].ln() - ybar);
    }
    if sxx == 0.0 {
        return Err(Error::BadWindow("coincident sample times".into()));
    }
    let rate = sxy / sxx;
    let intercept = ybar - rate * tbar;
    let mut ss = 0.0;
    for k in lo..hi {
        let e = norms[k].ln() - (intercept + rate * times[k]);
        ss += e * e;
    }
    Ok(DecayFit {
        rate,
        intercept,
        residual: (ss / n).sqrt(),
        window,
    })
}

/// Second half of the live prefix of a norm series. Samples below 1e-10 of
/// the peak are dropped first so round-off flats cannot pollute a fit.
pub fn default_fit_window(norms: &[f64]) -> (usize, usize) {
    let peak = norms.iter().fold(0.0_f64, |m, &x| m.max(x));
    let mut live = norms.len();
    for (k, &x) in norms.iter().enumerate() {
        if !(x > 1e-10 * peak) {
            live = k;
            break;
        }
    }
    ((live / 2).min(live.saturating_sub(2)), live)
}

/// Entrywise p-th powers of the mirror-ghost discrete Hessian, summed times
/// cell volume. The cross term is counted twice, matching a symmetric matrix
/// norm.
fn hessian_p_sum(f: &ScalarField, p: f64, g: &Grid) -> f64 {
    let (nx, ny) = (g.nx as isize, g.ny as isize);
    let (hx2, hy2) = (g.hx * g.hx, g.hy * g.hy);
    let hxy4 = 4.0 * g.hx * g.hy;
    let at = |i: isize, j: isize| {
        let ic = i.clamp(0, nx - 1) as usize;
        let jc = j.clamp(0, ny - 1) as usize;
        f.data[g.cell(ic, jc)]
    };
    let mut acc = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let c = at(i, j);
            let fxx = (at(i + 1, j) - 2.0 * c + at(i - 1, j)) / hx2;
            let fyy = (at(i, j + 1) - 2.0 * c + at(i, j - 1)) / hy2;
            let fxy = (at(i + 1, j + 1) - at(i - 1, j + 1) - at(i + 1, j - 1)
                + at(i - 1, j - 1))
                / hxy4;
            acc += fxx.abs().powf(p) + 2.0 * fxy.abs().powf(p) + fyy.abs().powf(p);
        }
    }
    acc * g.cell_volume()
}

/// Shared core over per-level component stacks: all components of one time
/// level contribute to the same Lp sums.
fn regularity_core(
    levels: &[Vec<&ScalarField>],
    times: &[f64],
    scale: f64,
    p: f64,
    g: &Grid,
) -> Result<f64> {
    if levels.is_empty() || levels.len() != times.len() {
        return Err(Error::DimensionMismatch { what: "xi_proxy" });
    }
    if !(p - 1.0 > 0.0) {
        return Err(Error::NonPositive {
            what: "p - 1",
            value: p - 1.0,
        });
    }
    if !(scale > 0.0) {
        return Err(Error::NonPositive {
            what: "scale",
            value: scale,
        });
    }
    let vol = g.cell_volume();
    let mut sup = 0.0_f64;
    let mut spacetime = 0.0;
    for (n, comps) in levels.iter().enumerate() {
        let mut field_p = 0.0;
        let mut hess_p = 0.0;
        for f in comps {
            if !f.matches(g) {
                return Err(Error::DimensionMismatch { what: "xi_proxy" });
            }
            field_p += exec::sum_abs_powers(&f.data, p) * vol;
            hess_p += hessian_p_sum(f, p, g);
        }
        sup = sup.max(field_p.powf(1.0 / p) + hess_p.powf(1.0 / p));
        if n > 0 {
            let dt = times[n] - times[n - 1];
            if !(dt > 0.0) {
                return Err(Error::BadWindow("times must strictly increase".into()));
            }
            if comps.len() != levels[n - 1].len() {
                return Err(Error::DimensionMismatch { what: "xi_proxy" });
            }
            let mut quot_p = 0.0;
            for (f, f_prev) in comps.iter().zip(&levels[n - 1]) {
                let mut acc = 0.0;
                for (a, b) in f.data.iter().zip(&f_prev.data) {
                    acc += ((a - b) / dt).abs().powf(p);
                }
                quot_p += acc * vol;
            }
            spacetime += dt * (quot_p + scale.powf(p) * hess_p);
        }
    }
    Ok(scale.powf(1.0 - 1.0 / p) * sup + spacetime.powf(1.0 / p))
}

/// Scale-weighted regularity proxy of a scalar time series: the sup over time
/// of (Lp norm + Lp norm of the discrete Hessian), weighted by
/// scale^(1 - 1/p), plus the Lp-in-spacetime norm of the time-difference
/// quotient together with scale times the Hessian. Homogeneous of degree one
/// in the field.
pub fn xi_proxy(
    series: &[ScalarField],
    times: &[f64],
    scale: f64,
    p: f64,
    g: &Grid,
) -> Result<f64> {
    let levels: Vec<Vec<&ScalarField>> = series.iter().map(|f| vec![f]).collect();
    regularity_core(&levels, times, scale, p, g)
}

/// Vector variant of `xi_proxy`: both components are interpolated to cell
/// centers and stacked into the same Lp sums.
pub fn xi_proxy_vector(
    series: &[VectorField],
    times: &[f64],
    scale: f64,
    p: f64,
    g: &Grid,
) -> Result<f64> {
    let centered: Vec<(ScalarField, ScalarField)> =
        series.iter().map(|w| w.to_centers(g)).collect();
    let levels: Vec<Vec<&ScalarField>> = centered.iter().map(|(u, v)| vec![u, v]).collect();
    regularity_core(&levels, times, scale, p, g)
}

/// The five coefficient-scaling terms, their maximum, and the relative
/// coefficient spreads over the temperature range.
#[derive(Debug, Clone, Copy)]
pub struct SmallnessReport {
    pub terms: [f64; 5],
    pub k: f64,
    /// sup |nu(theta) - nu(floor)| / nu(floor).
    pub ratio_nu: f64,
    /// sup |kappa(theta) - kappa(floor)| / kappa(floor).
    pub ratio_kappa: f64,
}

/// Evaluates the smallness indicator for a temperature field against its
/// declared floor. The floor values of the material laws set the scales; the
/// sups are taken over the actual field range.
pub fn smallness_indicator(
    theta: &ScalarField,
    mat: &Material,
    theta_floor: f64,
    p: f64,
) -> Result<SmallnessReport> {
    if !(theta_floor > 0.0) {
        return Err(Error::NonPositive {
            what: "temperature floor",
            value: theta_floor,
        });
    }
    if !(p - 1.0 > 0.0) {
        return Err(Error::NonPositive {
            what: "p - 1",
            value: p - 1.0,
        });
    }
    let t_min = theta.min().min(theta_floor);
    let t_max = theta.max().max(theta_floor);
    let nu0 = mat.nu(theta_floor);
    let ka0 = mat.kappa(theta_floor);
    let (nu_lo, nu_hi) = mat.nu_bounds(t_min, t_max);
    let (ka_lo, ka_hi) = mat.kappa_bounds(t_min, t_max);
    let terms = [
        nu0.powf(-2.0 + 1.0 / p),
        mat.nu_prime_sup(t_min, t_max) / (nu0 * ka0.powf(1.0 - 1.0 / p)),
        nu_hi / (nu0 * nu0),
        nu0.powf(-1.0 + 1.0 / p) / ka0,
        mat.kappa_prime_sup(t_min, t_max) / ka0.powf(2.0 - 4.0 / p),
    ];
    let k = terms.iter().fold(f64::NEG_INFINITY, |m, &t| m.max(t));
    Ok(SmallnessReport {
        terms,
        k,
        ratio_nu: (nu_hi - nu0).max(nu0 - nu_lo).max(0.0) / nu0,
        ratio_kappa: (ka_hi - ka0).max(ka0 - ka_lo).max(0.0) / ka0,
    })
}

/// Mean temperature rise produced by dissipation, one entry per time sample.
/// Each rate is charged over the step that ends at its own timestamp, which
/// is exactly how the heat equation received the source, so the weighted-mean
/// audit below closes to solver round-off. `rates[0]` is never used.
pub fn theta_tilde_series(
    times: &[f64],
    rates: &[f64],
    total_mass: f64,
    initial_excess: f64,
) -> Result<Vec<f64>> {
    if times.len() != rates.len() {
        return Err(Error::DimensionMismatch {
            what: "theta_tilde_series",
        });
    }
    if !(total_mass > 0.0) {
        return Err(Error::NonPositive {
            what: "mass",
            value: total_mass,
        });
    }
    let mut out = Vec::with_capacity(times.len());
    if times.is_empty() {
        return Ok(out);
    }
    let mut tilde = initial_excess / total_mass;
    out.push(tilde);
    for n in 1..times.len() {
        let dt = times[n] - times[n - 1];
        if !(dt > 0.0) {
            return Err(Error::BadWindow("times must strictly increase".into()));
        }
        tilde += dt * rates[n] / total_mass;
        out.push(tilde);
    }
    Ok(out)
}

/// Residual pair of the mean-rise track at one state: the rho-weighted
/// integral of theta - floor - tilde (zero when the track is exact) and the
/// plain L2 norm of the same excess.
pub fn theta_excess_audit(s: &State, theta_floor: f64, tilde: f64, g: &Grid) -> (f64, f64) {
    let mut weighted = 0.0;
    let mut ss = 0.0;
    for (r, t) in s.rho.data.iter().zip(&s.theta.data) {
        let e = t - theta_floor - tilde;
        weighted += r * e;
        ss += e * e;
    }
    (weighted * g.cell_volume(), (ss * g.cell_volume()).sqrt())
}

/// Discrete Lp norm of the density gradient, centered inside and one-sided
/// at the walls.
pub fn density_gradient_norm(rho: &ScalarField, p: f64, g: &Grid) -> Result<f64> {
    if !rho.matches(g) {
        return Err(Error::DimensionMismatch {
            what: "density_gradient_norm",
        });
    }
    if !(p >= 1.0) {
        return Err(Error::NonPositive {
            what: "p - 1",
            value: p - 1.0,
        });
    }
    let (nx, ny) = (g.nx, g.ny);
    let mut acc = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let c = g.cell(i, j);
            let gx = if i == 0 {
                (rho.data[c + 1] - rho.data[c]) / g.hx
            } else if i + 1 == nx {
                (rho.data[c] - rho.data[c - 1]) / g.hx
            } else {
                (rho.data[c + 1] - rho.data[c - 1]) / (2.0 * g.hx)
            };
            let gy = if j == 0 {
                (rho.data[c + nx] - rho.data[c]) / g.hy
            } else if j + 1 == ny {
                (rho.data[c] - rho.data[c - nx]) / g.hy
            } else {
                (rho.data[c + nx] - rho.data[c - nx]) / (2.0 * g.hy)
            };
            acc += gx.abs().powf(p) + gy.abs().powf(p);
        }
    }
    Ok((acc * g.cell_volume()).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VectorField;

    #[test]
    fn ledger_of_a_unit_rest_state_is_trivial() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let theta0 = 3.0;
        let s = State::new(
            &g,
            ScalarField::constant(&g, 1.0),
            VectorField::zeros(&g),
            ScalarField::constant(&g, theta0),
            ScalarField::zeros(&g),
            0.0,
        )
        .unwrap();
        let mat = Material::new(1.0, 1.0).unwrap();
        let row = ledger(&s, &mat, theta0, &g).unwrap();
        assert!((row.mass - 1.0).abs() < 1e-13);
        assert_eq!(row.kinetic, 0.0);
        assert!((row.thermal - theta0).abs() < 1e-12);
        assert_eq!(row.total, row.kinetic + row.thermal);
        assert_eq!(row.dissipation_rate, 0.0);
        assert!(row.modified.abs() < 1e-12);
    }

    #[test]
    fn min_principle_audit_reports_the_worst_margin() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let flat = ScalarField::constant(&g, 2.0);
        assert_eq!(min_principle_audit(std::slice::from_ref(&flat), 2.0), 0.0);
        let mut bumped = flat.clone();
        bumped.data[10] = 2.5;
        let mut dented = flat.clone();
        dented.data[20] = 1.9;
        assert!(min_principle_audit(&[flat.clone(), bumped], 2.0) == 0.0);
        let worst = min_principle_audit(&[flat, dented], 2.0);
        assert!((worst + 0.1).abs() < 1e-12);
    }

    #[test]
    fn decay_fit_recovers_an_exact_exponential() {
        let times: Vec<f64> = (0..60).map(|k| 0.05 * k as f64).collect();
        let norms: Vec<f64> = times.iter().map(|t| 3.0 * (-2.0 * t).exp()).collect();
        let fit = decay_fit(&times, &norms, (0, times.len())).unwrap();
        assert!((fit.rate + 2.0).abs() < 1e-6, "rate {}", fit.rate);
        assert!((fit.intercept - 3.0_f64.ln()).abs() < 1e-9);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn decay_fit_of_constants_is_flat() {
        let times: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let norms = vec![0.7; 10];
        let fit = decay_fit(&times, &norms, (0, 10)).unwrap();
        assert!(fit.rate.abs() < 1e-14);
        assert!(fit.residual < 1e-14);
    }

    #[test]
    fn decay_fit_rejects_bad_windows_and_dead_norms() {
        let times = vec![0.0, 1.0, 2.0];
        let norms = vec![1.0, 0.5, 0.0];
        assert!(matches!(
            decay_fit(&times, &norms, (0, 3)),
            Err(Error::NonPositiveNorm { index: 2 })
        ));
        assert!(decay_fit(&times, &norms, (1, 2)).is_err());
        assert!(decay_fit(&times, &norms, (2, 5)).is_err());
        assert!(decay_fit(&times, &norms, (0, 2)).is_ok());
    }

    #[test]
    fn default_window_clips_the_round_off_tail() {
        let norms = [1.0, 0.1, 0.01, 1e-30, 1e-31, 1e-32];
        assert_eq!(default_fit_window(&norms), (1, 3));
        let live = [1.0, 0.5, 0.25, 0.125];
        assert_eq!(default_fit_window(&live), (2, 4));
        let short = [1.0, 0.5];
        assert_eq!(default_fit_window(&short), (0, 2));
    }

    #[test]
    fn regularity_proxy_is_zero_on_zero_and_homogeneous() {
        let g = Grid::new(12, 10, 1.0, 0.8).unwrap();
        let times = [0.0, 0.1, 0.2];
        let zeros: Vec<ScalarField> = times.iter().map(|_| ScalarField::zeros(&g)).collect();
        assert_eq!(xi_proxy(&zeros, &times, 0.7, 8.0, &g).unwrap(), 0.0);

        let series: Vec<ScalarField> = times
            .iter()
            .map(|&t| ScalarField::from_fn(&g, move |x, y| (x + t).sin() * (3.0 * y).cos()))
            .collect();
        let base = xi_proxy(&series, &times, 0.7, 8.0, &g).unwrap();
        let doubled: Vec<ScalarField> = series.iter().map(|f| f.scaled(2.0)).collect();
        let twice = xi_proxy(&doubled, &times, 0.7, 8.0, &g).unwrap();
        assert!(base > 0.0);
        assert!(
            ((twice - 2.0 * base) / base).abs() < 1e-12,
            "{twice} vs {}",
            2.0 * base
        );

        let vseries: Vec<VectorField> = times
            .iter()
            .map(|&t| {
                let mut w = VectorField::from_fn(
                    &g,
                    move |x, y| (x * y + t).sin(),
                    move |x, y| (x - y - t).cos(),
                );
                w.zero_boundary_normals(&g);
                w
            })
            .collect();
        let vbase = xi_proxy_vector(&vseries, &times, 0.7, 8.0, &g).unwrap();
        assert!(vbase > 0.0);
    }

    #[test]
    fn regularity_proxy_matches_a_neumann_mode_by_hand() {
        // one snapshot, scale 1, p = 2: the proxy reduces to the L2 norm plus
        // the Hessian L2 norm, both known for cos(pi x) cos(pi y)
        let g = Grid::new(64, 64, 1.0, 1.0).unwrap();
        let pi = std::f64::consts::PI;
        let f = ScalarField::from_fn(&g, |x, y| (pi * x).cos() * (pi * y).cos());
        let got = xi_proxy(std::slice::from_ref(&f), &[0.0], 1.0, 2.0, &g).unwrap();
        let expect = 0.5 + pi * pi;
        assert!(
            ((got - expect) / expect).abs() < 0.01,
            "{got} vs {expect}"
        );
    }

    #[test]
    fn regularity_proxy_validates_its_inputs() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let f = ScalarField::zeros(&g);
        assert!(xi_proxy(std::slice::from_ref(&f), &[0.0, 1.0], 1.0, 8.0, &g).is_err());
        assert!(xi_proxy(std::slice::from_ref(&f), &[0.0], 1.0, 1.0, &g).is_err());
        assert!(xi_proxy(&[f.clone(), f.clone()], &[0.0, 0.0], 1.0, 8.0, &g).is_err());
        assert!(xi_proxy(&[], &[], 1.0, 8.0, &g).is_err());
    }

    #[test]
    fn smallness_terms_match_the_flat_unit_case() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let theta = ScalarField::constant(&g, 1.0);
        let mat = Material::new(1.0, 0.0).unwrap();
        let rep = smallness_indicator(&theta, &mat, 1.0, 8.0).unwrap();
        for (i, &t) in rep.terms.iter().enumerate() {
            let want = if i == 4 { 0.0 } else { 1.0 };
            assert!((t - want).abs() < 1e-14, "term {i}: {t}");
        }
        assert!((rep.k - 1.0).abs() < 1e-14);
        assert_eq!(rep.ratio_nu, 0.0);
        assert_eq!(rep.ratio_kappa, 0.0);
    }

    #[test]
    fn smallness_falls_as_the_floor_rises() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let mat = Material::new(1.0, 1.0).unwrap();
        let bump = 0.5;
        let mut prev_k = f64::INFINITY;
        let mut prev_rn = f64::INFINITY;
        let mut prev_rk = f64::INFINITY;
        for floor in [1.0, 10.0, 100.0] {
            let theta = ScalarField::from_fn(&g, |x, _| floor + bump * x);
            let rep = smallness_indicator(&theta, &mat, floor, 8.0).unwrap();
            assert!(rep.k < prev_k, "K did not fall at floor {floor}");
            assert!(rep.ratio_nu < prev_rn);
            assert!(rep.ratio_kappa < prev_rk);
            prev_k = rep.k;
            prev_rn = rep.ratio_nu;
            prev_rk = rep.ratio_kappa;
        }
    }

    #[test]
    fn theta_tilde_series_integrates_step_rates() {
        let times = [0.0, 1.0, 2.0];
        let rates = [999.0, 2.0, 4.0];
        let tilde = theta_tilde_series(&times, &rates, 2.0, 1.0).unwrap();
        assert_eq!(tilde, vec![0.5, 1.5, 3.5]);
        assert!(theta_tilde_series(&[0.0, 0.0], &[0.0, 0.0], 2.0, 1.0).is_err());
        assert!(theta_tilde_series(&times, &rates[..2], 2.0, 1.0).is_err());
        // a quiet run keeps the track constant
        let quiet = theta_tilde_series(&times, &[0.0; 3], 4.0, 2.0).unwrap();
        assert!(quiet.iter().all(|&x| x == 0.5));
    }

    #[test]
    fn theta_excess_audit_vanishes_on_an_exact_track() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let s = State::new(
            &g,
            ScalarField::from_fn(&g, |x, y| 1.0 + 0.1 * (x - y)),
            VectorField::zeros(&g),
            ScalarField::constant(&g, 2.75),
            ScalarField::zeros(&g),
            0.0,
        )
        .unwrap();
        let (weighted, norm) = theta_excess_audit(&s, 2.0, 0.75, &g);
        assert!(weighted.abs() < 1e-14);
        assert!(norm < 1e-14);
        let (w2, n2) = theta_excess_audit(&s, 2.0, 0.5, &g);
        assert!(w2 > 0.0);
        assert!(n2 > 0.0);
    }

    #[test]
    fn density_gradient_norm_matches_the_sine_oracle() {
        let g = Grid::new(128, 16, 1.0, 0.5).unwrap();
        let eps = 0.03;
        let two_pi = 2.0 * std::f64::consts::PI;
        let rho = ScalarField::from_fn(&g, |x, _| 1.0 + eps * (two_pi * x).sin());
        let p = 8.0;
        // mean of |cos|^8 over a full period is 35/128
        let expect = eps * two_pi * (35.0 / 128.0 * g.area()).powf(1.0 / p);
        let got = density_gradient_norm(&rho, p, &g).unwrap();
        assert!(
            ((got - expect) / expect).abs() < 0.01,
            "{got} vs {expect}"
        );
        let flat = ScalarField::constant(&g, 1.0);
        assert_eq!(density_gradient_norm(&flat, p, &g).unwrap(), 0.0);
    }
}
