//! Slow, independent reference implementations used to validate the main
//! solver: a Neumann-series solution of the discrete master equation and a
//! direct-sum periodic convolution.

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{DiscreteKernel, Grid, SpaceTimeField, Spectral};

/// Direct-sum size caps: these routines are deliberate O(M^{2n}) references.
const DIRECT_CAP_1D: usize = 128;
const DIRECT_CAP_2D: usize = 64;

/// Neumann-series solution u = sum_m (J*+)^m g with g(., t_i) = Lambda_i * f,
/// where J*+ is the convolution restricted to strictly past lags.
///
/// Because every lag is at least one step, each series term starts one step
/// later than the previous, so the series terminates after at most steps + 1
/// terms; the ratio-test stop (safety factor 2) usually fires earlier.
pub fn neumann_solve(
    dk: &DiscreteKernel,
    tails: &[Vec<f64>],
    f_samples: &[f64],
    series_tol: f64,
    term_cap: usize,
) -> Result<SpaceTimeField> {
    let grid = &dk.grid;
    let steps = grid.steps;
    let cells = grid.cells();
    if f_samples.len() != cells {
        return Err(Error::InvalidParameter(
            "datum samples do not match the lattice".into(),
        ));
    }
    if tails.len() < steps + 1 {
        return Err(Error::InvalidParameter(
            "tail weights do not cover the horizon".into(),
        ));
    }
    let spectral = Spectral::new(grid);
    let f_hat = spectral.forward(f_samples);
    let w_hats: Vec<Vec<Complex<f64>>> = (0..=dk.lags())
        .map(|q| {
            if q == 0 {
                Vec::new()
            } else {
                spectral.forward(&dk.weights[q])
            }
        })
        .collect();
    let scale = grid.cell_volume() * grid.dt;

    // first term: g
    let mut term: Vec<Vec<f64>> = (0..=steps)
        .map(|i| {
            if tails[i].iter().all(|&v| v == 0.0) {
                vec![0.0; cells]
            } else {
                spectral.convolve_spectra(&f_hat, &spectral.forward(&tails[i]))
            }
        })
        .collect();
    let mut sum = term.clone();
    let mut prev_norm = sup_norm(&term);
    let mut c_est: f64 = 0.0;

    for m in 1..=term_cap {
        // next = (J*+) term
        let term_hats: Vec<Vec<Complex<f64>>> =
            term.iter().map(|s| spectral.forward(s)).collect();
        let next: Vec<Vec<f64>> = (0..=steps)
            .map(|i| {
                let mut acc = vec![Complex::new(0.0, 0.0); cells];
                let mut any = false;
                for q in 1..=dk.lags().min(i) {
                    any = true;
                    for (a, (w, h)) in acc
                        .iter_mut()
                        .zip(w_hats[q].iter().zip(&term_hats[i - q]))
                    {
                        *a += w * h;
                    }
                }
                if any {
                    spectral.inverse_real(acc.into_iter().map(|c| c * scale).collect())
                } else {
                    vec![0.0; cells]
                }
            })
            .collect();
        for (s, t) in sum.iter_mut().zip(&next) {
            for (a, b) in s.iter_mut().zip(t) {
                *a += b;
            }
        }
        let norm = sup_norm(&next);
        if norm == 0.0 {
            return SpaceTimeField::from_slices(grid.clone(), sum);
        }
        if prev_norm > 0.0 {
            c_est = c_est.max((norm / prev_norm).min(0.999_999));
        }
        // geometric tail bound with safety factor 2
        if c_est > 0.0 && m > 2 {
            let tail = norm * c_est / (1.0 - c_est);
            if 2.0 * tail <= series_tol {
                return SpaceTimeField::from_slices(grid.clone(), sum);
            }
        }
        prev_norm = norm;
        term = next;
    }
    Err(Error::Convergence {
        what: "Neumann series term cap exceeded".into(),
        iterations: term_cap,
        last_ratio: Some(c_est),
    })
}

fn sup_norm(slices: &[Vec<f64>]) -> f64 {
    slices
        .iter()
        .flat_map(|s| s.iter())
        .fold(0.0_f64, |m, &v| m.max(v.abs()))
}

/// Exact periodic convolution by direct summation, scaled by h^n. Refuses
/// lattices beyond the size caps.
pub fn direct_convolve(grid: &Grid, field: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    let cells = grid.cells();
    if field.len() != cells || weights.len() != cells {
        return Err(Error::InvalidParameter(format!(
            "direct convolution size mismatch: field {}, weights {}, lattice {cells}",
            field.len(),
            weights.len()
        )));
    }
    let cap = if grid.dim == 1 {
        DIRECT_CAP_1D
    } else {
        DIRECT_CAP_2D
    };
    if grid.points > cap {
        return Err(Error::InvalidParameter(format!(
            "direct convolution refused: {} points exceeds the cap {cap} for dim {}",
            grid.points, grid.dim
        )));
    }
    let vol = grid.cell_volume();
    let m = grid.points;
    let out = match grid.dim {
        1 => (0..m)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += field[j] * weights[(i + m - j) % m];
                }
                acc * vol
            })
            .collect(),
        _ => {
            let mut out = vec![0.0; cells];
            for i0 in 0..m {
                for i1 in 0..m {
                    let mut acc = 0.0;
                    for j0 in 0..m {
                        for j1 in 0..m {
                            let d0 = (i0 + m - j0) % m;
                            let d1 = (i1 + m - j1) % m;
                            acc += field[j0 * m + j1] * weights[d0 * m + d1];
                        }
                    }
                    out[i0 * m + i1] = acc * vol;
                }
            }
            out
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::discretize_kernel;
    use crate::kernels::{BumpProductKernel, HeatBallKernel};
    use crate::solver::InitialDatum;
    use rand::{Rng, SeedableRng};

    const TMAX: f64 = 0.07957747154594767;

    #[test]
    fn neumann_sums_constants_to_the_constant() {
        let k = HeatBallKernel::new(1).unwrap();
        let grid = Grid::new(1, 1.0, 128, TMAX / 16.0, TMAX).unwrap();
        let dk = discretize_kernel(&k, &grid).unwrap();
        let tails = dk.tail_weights(grid.steps);
        let f = vec![0.4; grid.cells()];
        let u = neumann_solve(&dk, &tails, &f, 1e-12, 10_000).unwrap();
        for i in 0..=grid.steps {
            for &v in u.slice(i) {
                assert!((v - 0.4).abs() < 1e-11, "{v}");
            }
        }
    }

    #[test]
    fn neumann_partial_sums_monotone_for_nonnegative_data() {
        // with f >= 0 all terms are non-negative, so the first term bounds
        // the solution from below
        let k = HeatBallKernel::new(1).unwrap();
        let grid = Grid::new(1, 1.0, 128, TMAX / 16.0, TMAX).unwrap();
        let dk = discretize_kernel(&k, &grid).unwrap();
        let tails = dk.tail_weights(grid.steps);
        let datum = InitialDatum::gaussian_bump(1.0, 0.05, 0.5, 1, 1.0);
        let f = datum.sample(&grid).unwrap();
        let u = neumann_solve(&dk, &tails, &f, 1e-12, 10_000).unwrap();
        let sp = Spectral::new(&grid);
        for i in 0..=grid.steps {
            let g_i = sp.convolve(&f, &tails[i]).unwrap();
            for (a, b) in u.slice(i).iter().zip(&g_i) {
                assert!(*a >= *b - 1e-14, "partial sum not monotone");
            }
        }
    }

    #[test]
    fn neumann_equals_first_term_before_the_first_lag() {
        // the bump kernel has no weight below lag floor(t1/k): before that,
        // u(., t) = g(., t) exactly
        let k = BumpProductKernel::standard(1).unwrap();
        let grid = Grid::new(1, 1.0, 128, 0.002, 0.1).unwrap();
        let dk = discretize_kernel(&k, &grid).unwrap();
        let first_lag = dk
            .lag_mass
            .iter()
            .position(|&m| m > 0.0)
            .expect("kernel has mass");
        let tails = dk.tail_weights(grid.steps);
        let datum = InitialDatum::gaussian_bump(1.0, 0.05, 0.5, 1, 1.0);
        let f = datum.sample(&grid).unwrap();
        let u = neumann_solve(&dk, &tails, &f, 1e-12, 10_000).unwrap();
        let sp = Spectral::new(&grid);
        for i in 0..first_lag.min(grid.steps) {
            let g_i = sp.convolve(&f, &tails[i]).unwrap();
            for (a, b) in u.slice(i).iter().zip(&g_i) {
                assert_eq!(*a, *b, "below the first lag the series is g alone");
            }
        }
    }

    #[test]
    fn direct_convolve_examples() {
        let grid = Grid::new(1, 1.0, 64, 0.01, 0.1).unwrap();
        let mut delta = vec![0.0; 64];
        delta[0] = 1.0 / grid.h();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let field: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = direct_convolve(&grid, &field, &delta).unwrap();
        for (a, b) in field.iter().zip(&out) {
            assert!((a - b).abs() < 1e-13);
        }
        // constant field -> constant * mass
        let w: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..1.0)).collect();
        let wm: f64 = w.iter().sum::<f64>() * grid.h();
        let out = direct_convolve(&grid, &vec![2.0; 64], &w).unwrap();
        for v in out {
            assert!((v - 2.0 * wm).abs() < 1e-13);
        }
        // size cap refusal
        let big = Grid::new(1, 1.0, 256, 0.01, 0.1).unwrap();
        assert!(direct_convolve(&big, &vec![0.0; 256], &vec![0.0; 256]).is_err());
    }

    #[test]
    fn fft_agrees_with_direct_sum_on_random_slices() {
        let grid = Grid::new(1, 1.0, 128, 0.01, 0.1).unwrap();
        let sp = Spectral::new(&grid);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let f: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..128).map(|_| rng.gen_range(0.0..1.0)).collect();
            let a = sp.convolve(&f, &w).unwrap();
            let b = direct_convolve(&grid, &f, &w).unwrap();
            let scale = b.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-10 * scale, "{x} vs {y}");
            }
        }
    }
}
