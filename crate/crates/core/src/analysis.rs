//! Numerical verification of the weak limit, the maximum principle, the
//! temperature convergence rate and the parabolic scaling identity.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{discretize_kernel, DiscreteKernel, Grid, SpaceTimeField, Spectral};
use crate::heat_ref::heat_solve;
use crate::kernels::{compute_moments, integrate_against, rescale, Kernel, MomentReport};
use crate::quad::fit_slope;
use crate::solver::{solve, InitialDatum, SolveOptions};
use std::sync::Arc;

// ---------------------------------------------------------------------------
// Test functions with analytic derivatives
// ---------------------------------------------------------------------------

/// Smooth space-time test functions with exact time derivative and Laplacian.
#[derive(Debug, Clone)]
pub enum TestFunction {
    /// amp * exp(-ax |x - x0|^2) * exp(-bt (t - t0)^2)
    Gaussian {
        amp: f64,
        ax: f64,
        bt: f64,
        x0: Vec<f64>,
        t0: f64,
    },
    /// (c0 + sum_i ci (x_i - x0_i)) * Gaussian
    PolyGaussian {
        c0: f64,
        c: Vec<f64>,
        ax: f64,
        bt: f64,
        x0: Vec<f64>,
        t0: f64,
    },
    /// a0 + sum_i ai x_i, constant in t (first-moment terms vanish).
    AffineX { a0: f64, a: Vec<f64> },
    /// phi(x, t) = t (exact for the time-moment identity).
    LinearT,
}

impl TestFunction {
    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        match self {
            TestFunction::Gaussian { amp, ax, bt, x0, t0 } => {
                let r2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
                amp * (-ax * r2 - bt * (t - t0) * (t - t0)).exp()
            }
            TestFunction::PolyGaussian { c0, c, ax, bt, x0, t0 } => {
                let r2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
                let lin: f64 = c0 + x.iter().zip(c).zip(x0).map(|((xi, ci), x0i)| ci * (xi - x0i)).sum::<f64>();
                lin * (-ax * r2 - bt * (t - t0) * (t - t0)).exp()
            }
            TestFunction::AffineX { a0, a } => {
                a0 + x.iter().zip(a).map(|(xi, ai)| xi * ai).sum::<f64>()
            }
            TestFunction::LinearT => t,
        }
    }

    pub fn dt(&self, x: &[f64], t: f64) -> f64 {
        match self {
            TestFunction::Gaussian { bt, t0, .. } | TestFunction::PolyGaussian { bt, t0, .. } => {
                -2.0 * bt * (t - t0) * self.value(x, t)
            }
            TestFunction::AffineX { .. } => 0.0,
            TestFunction::LinearT => 1.0,
        }
    }

    pub fn laplacian(&self, x: &[f64], t: f64) -> f64 {
        match self {
            TestFunction::Gaussian { ax, x0, .. } => {
                let n = x.len() as f64;
                let r2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
                (-2.0 * ax * n + 4.0 * ax * ax * r2) * self.value(x, t)
            }
            TestFunction::PolyGaussian { c0, c, ax, x0, .. } => {
                // Delta[(c0 + c.(x-x0)) g] = lin Delta g + 2 c . grad g
                let n = x.len() as f64;
                let r2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
                let g = {
                    let lin: f64 = c0
                        + x.iter()
                            .zip(c)
                            .zip(x0)
                            .map(|((xi, ci), x0i)| ci * (xi - x0i))
                            .sum::<f64>();
                    if lin.abs() > 1e-300 {
                        self.value(x, t) / lin
                    } else {
                        // reconstruct the Gaussian factor directly
                        let TestFunction::PolyGaussian { ax, bt, t0, .. } = self else {
                            unreachable!()
                        };
                        (-ax * r2 - bt * (t - t0) * (t - t0)).exp()
                    }
                };
                let lin: f64 = c0
                    + x.iter()
                        .zip(c)
                        .zip(x0)
                        .map(|((xi, ci), x0i)| ci * (xi - x0i))
                        .sum::<f64>();
                let lap_g = (-2.0 * ax * n + 4.0 * ax * ax * r2) * g;
                let grad_dot: f64 = x
                    .iter()
                    .zip(c)
                    .zip(x0)
                    .map(|((xi, ci), x0i)| ci * (-2.0 * ax * (xi - x0i)) * g)
                    .sum();
                lin * lap_g + 2.0 * grad_dot
            }
            TestFunction::AffineX { .. } | TestFunction::LinearT => 0.0,
        }
    }

    /// Central finite differences of value(), for cross-checking the analytic
    /// derivatives.
    pub fn fd_dt(&self, x: &[f64], t: f64, h: f64) -> f64 {
        (self.value(x, t + h) - self.value(x, t - h)) / (2.0 * h)
    }

    pub fn fd_laplacian(&self, x: &[f64], t: f64, h: f64) -> f64 {
        let mut acc = 0.0;
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let up = self.value(&xp, t);
            xp[i] = x[i] - h;
            let um = self.value(&xp, t);
            xp[i] = x[i];
            acc += (up - 2.0 * self.value(x, t) + um) / (h * h);
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Weak limit
// ---------------------------------------------------------------------------

/// sup over the sample points of
/// | r^{-2} [(J_r * phi) - phi] - (mu dphi/dt + nu Laplacian phi) |.
///
/// The convolution is evaluated in unrescaled kernel coordinates,
/// ∬ J(w, s) [phi(x - r w, t - r^2 s) - phi(x, t)] dw ds, so one support box
/// serves every r.
pub fn weak_limit_residual(
    kernel: &dyn Kernel,
    moments: &MomentReport,
    testfn: &TestFunction,
    r: f64,
    sample_points: &[(Vec<f64>, f64)],
    quad_tol: f64,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "weak limit requires r > 0, got {r}"
        )));
    }
    let residuals: Vec<Result<f64>> = sample_points
        .par_iter()
        .map(|(x, t)| {
            let conv = integrate_against(
                kernel,
                |w, s| {
                    let shifted: Vec<f64> = x.iter().zip(w).map(|(xi, wi)| xi - r * wi).collect();
                    testfn.value(&shifted, t - r * r * s) - testfn.value(x, *t)
                },
                quad_tol,
            )?;
            let a_r = conv / (r * r);
            let limit = moments.mu * testfn.dt(x, *t) + moments.nu * testfn.laplacian(x, *t);
            Ok((a_r - limit).abs())
        })
        .collect();
    let mut sup: f64 = 0.0;
    for r in residuals {
        sup = sup.max(r?);
    }
    Ok(sup)
}

/// Default sample points for weak-limit studies in dimension n.
pub fn default_sample_points(dim: usize) -> Vec<(Vec<f64>, f64)> {
    let xs = [0.5, 0.38, 0.62, 0.45, 0.55];
    let ts = [0.05, 0.03, 0.07, 0.09, 0.02];
    xs.iter()
        .zip(&ts)
        .map(|(&x, &t)| (vec![x; dim], t))
        .collect()
}

// ---------------------------------------------------------------------------
// Maximum principle audit
// ---------------------------------------------------------------------------

/// Result of a maximum-principle audit of a field w.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    /// sup |w| over t in [0, alpha].
    pub initial_sup: f64,
    /// sup |w| over t in (alpha, T].
    pub future_sup: f64,
    /// sup over audited indices of |w - J (*) w| (discrete mean-value residual).
    pub mean_value_residual: f64,
    /// Tolerance used for the mean-value precondition.
    pub mean_value_tol: f64,
    /// Whether the mean-value precondition held.
    pub mean_value_ok: bool,
    /// future_sup <= initial_sup + slack.
    pub principle_holds: bool,
    pub slack: f64,
}

/// Audits sup_{t in (alpha, T]} |w| <= sup_{t in [0, alpha]} |w| + slack,
/// first verifying that w satisfies the discrete mean-value identity for
/// t >= alpha within `mean_value_tol` (reported, never silent).
pub fn max_principle_audit(
    field: &SpaceTimeField,
    dk: &DiscreteKernel,
    alpha_steps: usize,
    mean_value_tol: f64,
    slack: f64,
) -> Result<AuditReport> {
    let grid = &field.grid;
    if dk.grid != *grid {
        return Err(Error::Configuration(
            "discrete kernel grid does not match the field".into(),
        ));
    }
    let q = dk.lags();
    let a = alpha_steps.max(q);
    let mut initial_sup: f64 = 0.0;
    for i in 0..=alpha_steps.min(grid.steps) {
        for &v in field.slice(i) {
            initial_sup = initial_sup.max(v.abs());
        }
    }
    let mut future_sup: f64 = 0.0;
    for i in alpha_steps + 1..=grid.steps {
        for &v in field.slice(i) {
            future_sup = future_sup.max(v.abs());
        }
    }

    // mean-value residual for indices with full past coverage
    let spectral = Spectral::new(grid);
    let w_hats: Vec<Vec<Complex<f64>>> = (0..=q)
        .map(|l| {
            if l == 0 {
                Vec::new()
            } else {
                spectral.forward(&dk.weights[l])
            }
        })
        .collect();
    let slice_hats: Vec<Vec<Complex<f64>>> = (0..=grid.steps)
        .into_par_iter()
        .map(|i| spectral.forward(field.slice(i)))
        .collect();
    let scale = grid.cell_volume() * grid.dt;
    let residual = (a..=grid.steps)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![Complex::new(0.0, 0.0); grid.cells()];
            for l in 1..=q.min(i) {
                for (s, (w, h)) in acc.iter_mut().zip(w_hats[l].iter().zip(&slice_hats[i - l])) {
                    *s += w * h;
                }
            }
            let pred = spectral.inverse_real(acc.into_iter().map(|c| c * scale).collect());
            field
                .slice(i)
                .iter()
                .zip(&pred)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0_f64, f64::max)
        })
        .reduce(|| 0.0, f64::max);

    let mean_value_ok = residual <= mean_value_tol;
    Ok(AuditReport {
        initial_sup,
        future_sup,
        mean_value_residual: residual,
        mean_value_tol,
        mean_value_ok,
        principle_holds: mean_value_ok && future_sup <= initial_sup + slack,
        slack,
    })
}

// ---------------------------------------------------------------------------
// Rate study
// ---------------------------------------------------------------------------

/// Grid refinement policy for rate studies: the lattice refines like 1/r and
/// the time step like r^2, so discretization error stays subordinate to the
/// physical O(r^gamma) error.
#[derive(Debug, Clone)]
pub struct RatePolicy {
    pub box_len: f64,
    /// Lattice points at the first (largest) r.
    pub base_points: usize,
    /// Steps per alpha/2 strip (fixed across rows).
    pub strip_steps: usize,
    /// Horizon in units of the rescaled alpha.
    pub horizon_alphas: f64,
    pub picard_tol: f64,
    /// Mean-value tolerance as a fraction of sup |w|.
    pub mean_value_frac: f64,
}

impl Default for RatePolicy {
    fn default() -> Self {
        RatePolicy {
            box_len: 1.0,
            base_points: 256,
            strip_steps: 32,
            horizon_alphas: 4.0,
            picard_tol: 1e-10,
            mean_value_frac: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub r: f64,
    pub points: usize,
    pub sup_error: f64,
    pub audit: AuditReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateStudy {
    pub rows: Vec<RateRow>,
    /// (r, message) for rows whose solve failed.
    pub failures: Vec<(f64, String)>,
    /// Fitted slope of log(error) against log(r); None when degenerate.
    pub slope: Option<f64>,
}

/// Rate-study row: solves P(H_r, f), compares against the spectral
/// temperature on the same grid, audits the maximum principle.
fn rate_row(
    base_kernel: &Arc<dyn Kernel>,
    alpha_base: f64,
    datum: &InitialDatum,
    r: f64,
    points: usize,
    policy: &RatePolicy,
) -> Result<RateRow> {
    let kr = rescale(base_kernel.clone(), r)?;
    let alpha_r = alpha_base * r * r;
    let horizon = policy.horizon_alphas * alpha_r;
    let request = Grid::new(
        base_kernel.dim(),
        policy.box_len,
        points,
        alpha_r / (2.0 * policy.strip_steps as f64),
        horizon,
    )?;
    let options = SolveOptions {
        picard_tol: policy.picard_tol,
        alpha: Some(alpha_r),
        strip_steps: Some(policy.strip_steps),
        max_iterations: 500,
        ..Default::default()
    };
    let (u, _) = solve(&kr, datum, &request, &options)?;
    let temps = heat_solve(datum, &u.grid)?;
    let mut w = SpaceTimeField::zeros(u.grid.clone());
    for i in 0..=u.grid.steps {
        let (us, ts) = (u.slice(i), temps.slice(i));
        for (z, v) in w.slice_mut(i).iter_mut().enumerate() {
            *v = us[z] - ts[z];
        }
    }
    let sup_error = w.data().iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let dk = discretize_kernel(&kr, &u.grid)?;
    let alpha_steps = ((alpha_r / u.grid.dt - 1e-9).ceil() as usize).min(u.grid.steps);
    let audit = max_principle_audit(
        &w,
        &dk,
        alpha_steps,
        policy.mean_value_frac * sup_error.max(1e-300),
        1e-6,
    )?;
    Ok(RateRow {
        r,
        points,
        sup_error,
        audit,
    })
}

/// Runs the Theorem-4 rate study over a decreasing, halving r list.
pub fn rate_study(
    base_kernel: Arc<dyn Kernel>,
    datum: &InitialDatum,
    r_list: &[f64],
    policy: &RatePolicy,
) -> Result<RateStudy> {
    if r_list.len() < 2 {
        return Err(Error::InvalidParameter(
            "rate study needs at least two r values".into(),
        ));
    }
    let alpha_base = compute_moments(base_kernel.as_ref(), 1e-8)?.alpha;
    let r0 = r_list[0];
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let results: Vec<(f64, Result<RateRow>)> = r_list
        .par_iter()
        .map(|&r| {
            let scale = r0 / r;
            let points =
                (policy.base_points as f64 * scale).round() as usize;
            let points = points.next_power_of_two();
            (
                r,
                rate_row(&base_kernel, alpha_base, datum, r, points, policy),
            )
        })
        .collect();
    for (r, res) in results {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    // degenerate: all errors at solver-noise level (constant data)
    let degenerate = rows
        .iter()
        .all(|row| row.sup_error <= 10.0 * policy.picard_tol);
    let slope = if degenerate || rows.len() < 2 {
        None
    } else {
        let xs: Vec<f64> = rows.iter().map(|row| row.r.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|row| row.sup_error.max(1e-300).ln()).collect();
        fit_slope(&xs, &ys)
    };
    Ok(RateStudy {
        rows,
        failures,
        slope,
    })
}

// ---------------------------------------------------------------------------
// Scaling identity
// ---------------------------------------------------------------------------

/// Checks Lemma 5.1's identity u(J_r, f)(x, t) = u(J, f(r .))(x/r, t/r^2) on
/// parabolically matched grids; returns the sup discrepancy over shared
/// lattice points.
pub fn scaling_identity_check(
    kernel: Arc<dyn Kernel>,
    datum: &InitialDatum,
    r: f64,
    grid_rescaled: &Grid,
    grid_unit: &Grid,
    options: &SolveOptions,
) -> Result<f64> {
    let hr = grid_rescaled.h();
    let hu = grid_unit.h();
    if grid_rescaled.points != grid_unit.points
        || ((hu - hr / r) / hu).abs() > 1e-9
        || ((grid_unit.dt - grid_rescaled.dt / (r * r)) / grid_unit.dt).abs() > 1e-9
        || grid_rescaled.steps != grid_unit.steps
    {
        return Err(Error::Configuration(format!(
            "grids are not parabolically matched: h'={hr}, h={hu}, k'={}, k={}, r={r}",
            grid_rescaled.dt, grid_unit.dt
        )));
    }
    let kr = rescale(kernel.clone(), r)?;
    let (u_rescaled, _) = solve(&kr, datum, grid_rescaled, options)?;
    let scaled_datum = datum.space_scaled(r)?;
    let mut unit_options = options.clone();
    if let Some(a) = options.alpha {
        unit_options.alpha = Some(a / (r * r));
    }
    let (u_unit, _) = solve(kernel.as_ref(), &scaled_datum, grid_unit, &unit_options)?;
    if u_rescaled.grid.steps != u_unit.grid.steps {
        return Err(Error::Configuration(
            "adjusted grids diverged; pass explicit strip_steps".into(),
        ));
    }
    let mut sup: f64 = 0.0;
    for i in 0..=u_rescaled.grid.steps {
        for (a, b) in u_rescaled.slice(i).iter().zip(u_unit.slice(i)) {
            sup = sup.max((a - b).abs());
        }
    }
    Ok(sup)
}

/// Builds the matched grid pair for `scaling_identity_check`.
pub fn matched_grids(
    dim: usize,
    box_len: f64,
    points: usize,
    alpha: f64,
    r: f64,
    strip_steps: usize,
    horizon_alphas: f64,
) -> Result<(Grid, Grid)> {
    let alpha_r = alpha * r * r;
    let k_r = alpha_r / (2.0 * strip_steps as f64);
    let steps = (horizon_alphas * 2.0 * strip_steps as f64).round() as usize;
    let g_rescaled = Grid::with_steps(dim, box_len, points, k_r, steps)?;
    let g_unit = Grid::with_steps(dim, box_len / r, points, k_r / (r * r), steps)?;
    Ok((g_rescaled, g_unit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{BumpProductKernel, HeatBallKernel};

    const TMAX: f64 = 0.07957747154594767;

    fn heatball() -> Arc<dyn Kernel> {
        Arc::new(HeatBallKernel::new(1).unwrap())
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let fns = [
            TestFunction::Gaussian {
                amp: 1.0,
                ax: 40.0,
                bt: 900.0,
                x0: vec![0.5],
                t0: 0.05,
            },
            TestFunction::PolyGaussian {
                c0: 0.3,
                c: vec![1.7],
                ax: 25.0,
                bt: 400.0,
                x0: vec![0.45],
                t0: 0.04,
            },
            TestFunction::AffineX {
                a0: 0.2,
                a: vec![1.3],
            },
            TestFunction::LinearT,
        ];
        for f in &fns {
            for &(x, t) in &[(0.42, 0.031), (0.55, 0.06), (0.5, 0.05)] {
                let h = 1e-5;
                let dt_fd = f.fd_dt(&[x], t, h);
                let lap_fd = f.fd_laplacian(&[x], t, h);
                assert!(
                    (f.dt(&[x], t) - dt_fd).abs() <= 1e-6 * (1.0 + dt_fd.abs()),
                    "dt mismatch"
                );
                assert!(
                    (f.laplacian(&[x], t) - lap_fd).abs() <= 1e-5 * (1.0 + lap_fd.abs()),
                    "laplacian mismatch"
                );
            }
        }
    }

    #[test]
    fn weak_limit_vanishes_for_affine_and_linear_time() {
        let k = heatball();
        let m = compute_moments(k.as_ref(), 1e-10).unwrap();
        let points = default_sample_points(1);
        // affine in x, constant in t: first-moment terms vanish by radial symmetry
        let affine = TestFunction::AffineX {
            a0: 0.2,
            a: vec![1.3],
        };
        let res = weak_limit_residual(k.as_ref(), &m, &affine, 0.1, &points, 1e-11).unwrap();
        assert!(res < 1e-8, "{res}");
        // phi = t: A_r(phi) = mu exactly, so the residual is quadrature-level
        let res = weak_limit_residual(k.as_ref(), &m, &TestFunction::LinearT, 0.1, &points, 1e-11)
            .unwrap();
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn weak_limit_residual_decays_quadratically_for_gaussian() {
        let k = heatball();
        let m = compute_moments(k.as_ref(), 1e-10).unwrap();
        let phi = TestFunction::Gaussian {
            amp: 1.0,
            ax: 40.0,
            bt: 900.0,
            x0: vec![0.5],
            t0: 0.05,
        };
        let points = default_sample_points(1);
        let r1 = weak_limit_residual(k.as_ref(), &m, &phi, 0.2, &points, 1e-11).unwrap();
        let r2 = weak_limit_residual(k.as_ref(), &m, &phi, 0.1, &points, 1e-11).unwrap();
        let r3 = weak_limit_residual(k.as_ref(), &m, &phi, 0.05, &points, 1e-11).unwrap();
        assert!(r1 / r2 >= 1.8, "{r1} / {r2}");
        assert!(r2 / r3 >= 1.8, "{r2} / {r3}");
        // empirical order at least 1 along the halvings
        let slope = fit_slope(
            &[0.2_f64.ln(), 0.1_f64.ln(), 0.05_f64.ln()],
            &[r1.ln(), r2.ln(), r3.ln()],
        )
        .unwrap();
        assert!(slope >= 1.2, "order {slope}");
    }

    #[test]
    fn weak_limit_decays_for_bump_kernel_with_distinct_moments() {
        let k: Arc<dyn Kernel> = Arc::new(BumpProductKernel::standard(1).unwrap());
        let m = compute_moments(k.as_ref(), 1e-10).unwrap();
        assert!((m.mu + m.nu).abs() > 1e-3, "bump has mu != -nu");
        let phi = TestFunction::Gaussian {
            amp: 1.0,
            ax: 40.0,
            bt: 900.0,
            x0: vec![0.5],
            t0: 0.05,
        };
        let points = default_sample_points(1);
        let r1 = weak_limit_residual(k.as_ref(), &m, &phi, 0.2, &points, 1e-12).unwrap();
        let r2 = weak_limit_residual(k.as_ref(), &m, &phi, 0.1, &points, 1e-12).unwrap();
        assert!(r1 / r2 >= 1.8, "{r1} / {r2}");
    }

    #[test]
    fn audit_of_zero_and_constant_fields() {
        let k = HeatBallKernel::new(1).unwrap();
        let grid = Grid::new(1, 1.0, 128, TMAX / 8.0, 2.0 * TMAX).unwrap();
        let dk = discretize_kernel(&k, &grid).unwrap();
        let zero = SpaceTimeField::zeros(grid.clone());
        let rep = max_principle_audit(&zero, &dk, dk.lags(), 1e-12, 1e-6).unwrap();
        assert_eq!(rep.initial_sup, 0.0);
        assert_eq!(rep.future_sup, 0.0);
        assert!(rep.principle_holds);
        // constants satisfy the mean-value identity; both sups equal |c|
        let mut cfield = SpaceTimeField::zeros(grid.clone());
        for i in 0..=grid.steps {
            cfield.slice_mut(i).fill(-0.6);
        }
        let rep = max_principle_audit(&cfield, &dk, dk.lags(), 1e-10, 1e-6).unwrap();
        assert!((rep.initial_sup - 0.6).abs() < 1e-15);
        assert!((rep.future_sup - 0.6).abs() < 1e-15);
        assert!(rep.mean_value_ok, "residual {}", rep.mean_value_residual);
        assert!(rep.principle_holds);
    }

    #[test]
    fn audit_flags_fields_violating_the_mean_value_identity() {
        let k = HeatBallKernel::new(1).unwrap();
        let grid = Grid::new(1, 1.0, 128, TMAX / 8.0, 2.0 * TMAX).unwrap();
        let dk = discretize_kernel(&k, &grid).unwrap();
        let mut field = SpaceTimeField::zeros(grid.clone());
        let last = grid.steps;
        field.slice_mut(last).fill(1.0);
        let rep = max_principle_audit(&field, &dk, dk.lags(), 1e-6, 1e-6).unwrap();
        assert!(!rep.mean_value_ok);
        assert!(!rep.principle_holds);
    }

    #[test]
    fn scaling_identity_trivial_cases() {
        let k = heatball();
        let opts = SolveOptions {
            alpha: Some(TMAX * 0.25),
            strip_steps: Some(8),
            ..Default::default()
        };
        let (g1, g2) = matched_grids(1, 1.0, 128, TMAX, 0.5, 8, 2.0).unwrap();
        // constant datum: both solutions constant, discrepancy 0
        let d = scaling_identity_check(
            k.clone(),
            &InitialDatum::constant(1.0),
            0.5,
            &g1,
            &g2,
            &opts,
        )
        .unwrap();
        assert_eq!(d, 0.0);
        // unmatched grids are a configuration error
        let bad = Grid::with_steps(1, 3.0, 128, g2.dt, g2.steps).unwrap();
        assert!(scaling_identity_check(
            k.clone(),
            &InitialDatum::constant(1.0),
            0.5,
            &g1,
            &bad,
            &opts
        )
        .is_err());
    }

    #[test]
    fn scaling_identity_cosine_half() {
        let k = heatball();
        let r = 0.5;
        let opts = SolveOptions {
            picard_tol: 1e-10,
            alpha: Some(TMAX * r * r),
            strip_steps: Some(8),
            ..Default::default()
        };
        let (g1, g2) = matched_grids(1, 1.0, 128, TMAX, r, 8, 2.0).unwrap();
        let d = scaling_identity_check(
            k,
            &InitialDatum::cosine(1.0, 1.0),
            r,
            &g1,
            &g2,
            &opts,
        )
        .unwrap();
        assert!(d <= 5.0 * opts.picard_tol, "discrepancy {d}");
    }
}
