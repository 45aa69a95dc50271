//! Cross-module checks: the strip solver against the Neumann-series engine,
//! quadrature moments against Monte Carlo, and the initial-layer estimate
//! shared across a family of data.

use std::sync::Arc;

use ctrw::analysis::{rate_study, RatePolicy};
use ctrw::grid::{discretize_kernel, Grid};
use ctrw::heat_ref::heat_solve;
use ctrw::kernels::{
    closed_form_moment, compute_moments, integrate_against, rescale, HeatBallKernel, Kernel,
};
use ctrw::oracle::neumann_solve;
use ctrw::solver::{solve, InitialDatum, SolveOptions};
use rand::{Rng, SeedableRng};

const TMAX: f64 = 0.07957747154594767;

#[test]
fn strip_solver_agrees_with_neumann_series() {
    let kernel = HeatBallKernel::new(1).unwrap();
    let grid = Grid::new(1, 1.0, 256, TMAX / 16.0, 2.0 * TMAX).unwrap();
    let datum = InitialDatum::gaussian_bump(1.0, 0.05, 0.5, 1, 1.0);
    let options = SolveOptions {
        picard_tol: 1e-10,
        alpha: Some(TMAX),
        ..Default::default()
    };
    let (u_strip, report) = solve(&kernel, &datum, &grid, &options).unwrap();
    let dk = discretize_kernel(&kernel, &u_strip.grid).unwrap();
    let tails = dk.tail_weights(u_strip.grid.steps);
    let f = datum.sample(&u_strip.grid).unwrap();
    let u_series = neumann_solve(&dk, &tails, &f, 1e-9, 10_000).unwrap();
    let diff = u_strip.sup_diff(&u_series).unwrap();
    assert!(
        diff <= 1e-8 + 2.0 * report.picard_tol,
        "solver/series disagreement {diff}"
    );
}

#[test]
fn moments_match_monte_carlo_oracle() {
    // Independent oracle for mu and nu: uniform sampling over the support
    // box. Both integrands t*H and |x|^2*H have finite variance.
    let kernel = HeatBallKernel::new(1).unwrap();
    let rho = kernel.space_radius();
    let volume = 2.0 * rho * TMAX;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let n_samples = 4_000_000usize;
    let mut sum_t = 0.0;
    let mut sum_x2 = 0.0;
    for _ in 0..n_samples {
        let x = rng.gen_range(-rho..rho);
        let t = rng.gen_range(0.0..TMAX);
        let j = kernel.eval(&[x], t);
        sum_t += t * j;
        sum_x2 += x * x * j;
    }
    let mc_minus_mu = sum_t * volume / n_samples as f64;
    let mc_nu = sum_x2 * volume / n_samples as f64 / 2.0;
    let m = compute_moments(&kernel, 1e-9).unwrap();
    assert!(
        (mc_minus_mu + m.mu).abs() <= 0.01 * m.mu.abs(),
        "MC -mu {mc_minus_mu} vs quadrature {}",
        -m.mu
    );
    assert!(
        (mc_nu - m.nu).abs() <= 0.01 * m.nu,
        "MC nu {mc_nu} vs quadrature {}",
        m.nu
    );
    // and both agree with the Gamma closed form
    let cf = closed_form_moment(1);
    assert!((mc_minus_mu - cf).abs() <= 0.01 * cf);
}

#[test]
fn initial_layer_bounded_by_one_constant_across_data() {
    // |u(x,t) - f(x)| <= C [f]_gamma on [0, alpha] with one C for the whole
    // family. The certified constant is assembled from the kernel alone:
    // C = 3 * (∬ J |y|^gamma) / (1 - I(alpha/2))^2.
    let base: Arc<dyn Kernel> = Arc::new(HeatBallKernel::new(1).unwrap());
    let r = 0.35;
    let kernel = rescale(base, r).unwrap();
    let m = compute_moments(&kernel, 1e-8).unwrap();
    let c_gamma = integrate_against(
        &kernel,
        |x, _t| x[0].abs(), // gamma = 1
        1e-10,
    )
    .unwrap();
    let c_cert = 3.0 * c_gamma / ((1.0 - m.contraction) * (1.0 - m.contraction));
    let alpha_r = m.alpha;
    let grid = Grid::new(1, 1.0, 256, alpha_r / 16.0, alpha_r).unwrap();
    let options = SolveOptions {
        alpha: Some(alpha_r),
        ..Default::default()
    };
    for datum in [
        InitialDatum::cosine(1.0, 1.0),
        InitialDatum::triangle_wave(1.0, 1.0),
        InitialDatum::gaussian_bump(1.0, 0.05, 0.5, 1, 1.0),
    ] {
        let seminorm = datum.holder.unwrap().seminorm;
        let (_, report) = solve(kernel_ref(&kernel), &datum, &grid, &options).unwrap();
        let measured = report.initial_sup_dev / seminorm;
        assert!(
            measured <= c_cert,
            "datum constant {measured} exceeds certificate {c_cert}"
        );
    }
}

fn kernel_ref(k: &ctrw::kernels::RescaledKernel) -> &dyn Kernel {
    k
}

#[test]
fn rate_slope_for_sqrt_holder_datum() {
    // gamma = 1/2 preset: fitted slope at least 0.8 * gamma = 0.4
    let base: Arc<dyn Kernel> = Arc::new(HeatBallKernel::new(1).unwrap());
    let datum = InitialDatum::sqrt_sine(1.0, 1.0);
    let policy = RatePolicy {
        base_points: 256,
        strip_steps: 16,
        ..Default::default()
    };
    let study = rate_study(base, &datum, &[0.2, 0.1, 0.05], &policy).unwrap();
    assert!(study.failures.is_empty(), "{:?}", study.failures);
    let slope = study.slope.expect("non-degenerate study");
    assert!(slope >= 0.4, "slope {slope}");
}

#[test]
fn rate_study_degenerate_for_constant_datum() {
    let base: Arc<dyn Kernel> = Arc::new(HeatBallKernel::new(1).unwrap());
    let datum = InitialDatum::constant(1.0);
    let policy = RatePolicy {
        base_points: 128,
        strip_steps: 8,
        ..Default::default()
    };
    let study = rate_study(base, &datum, &[0.2, 0.1], &policy).unwrap();
    assert!(study.slope.is_none(), "constant data must skip the fit");
    for row in &study.rows {
        assert!(row.sup_error <= 10.0 * policy.picard_tol);
    }
}

#[test]
fn solver_tracks_heat_solution_for_small_r() {
    // end-to-end sanity on one rate row: u(H_r, f) stays within C r of the
    // temperature for the triangle wave
    let base: Arc<dyn Kernel> = Arc::new(HeatBallKernel::new(1).unwrap());
    let r = 0.1;
    let kernel = rescale(base, r).unwrap();
    let alpha_r = TMAX * r * r;
    let grid = Grid::new(1, 1.0, 512, alpha_r / 64.0, 4.0 * alpha_r).unwrap();
    let datum = InitialDatum::triangle_wave(1.0, 1.0);
    let options = SolveOptions {
        alpha: Some(alpha_r),
        strip_steps: Some(32),
        ..Default::default()
    };
    let (u, _) = solve(&kernel, &datum, &grid, &options).unwrap();
    let temps = heat_solve(&datum, &u.grid).unwrap();
    let diff = u.sup_diff(&temps).unwrap();
    // [f]_1 = 4; the physical bound is C [f] r with C near 0.1 here
    assert!(diff <= 4.0 * r, "distance to temperature {diff}");
    assert!(diff >= 1e-4, "comparison should not be trivially tight");
}
