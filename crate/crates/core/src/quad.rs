//! Adaptive quadrature primitives shared by the kernel and analysis modules.
//!
//! The workhorse subdivides intervals dyadically and accepts each one once
//! two estimates of different order (an embedded Gauss 7/15 pair) agree to
//! the local error budget. Integrable endpoint singularities are handled by
//! the power-graded wrapper, which substitutes t = T u^p so refinement piles
//! up geometrically toward the singular endpoint. The plain tensor midpoint
//! rule with dyadic refinement and Richardson check is kept as a slow
//! brute-force cross-check.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;
const MAX_EVALS: usize = 20_000_000;

struct GaussPair {
    x7: Vec<f64>,
    w7: Vec<f64>,
    x15: Vec<f64>,
    w15: Vec<f64>,
}

fn gauss_pair() -> &'static GaussPair {
    static PAIR: OnceLock<GaussPair> = OnceLock::new();
    PAIR.get_or_init(|| {
        let (x7, w7) = gauss_legendre(7);
        let (x15, w15) = gauss_legendre(15);
        GaussPair { x7, w7, x15, w15 }
    })
}

/// Adaptive integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidParameter(format!(
            "integration bounds [{a}, {b}] invalid"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let pair = gauss_pair();
    let span = b - a;
    let mut total = 0.0_f64;
    let mut evals = 0usize;
    let mut stack: Vec<(f64, f64, u32)> = vec![(a, span, 0)];

    while let Some((lo, w, depth)) = stack.pop() {
        let mid = lo + 0.5 * w;
        let half = 0.5 * w;
        let mut coarse = 0.0;
        for (&x, &gw) in pair.x7.iter().zip(&pair.w7) {
            coarse += gw * f(mid + half * x);
        }
        coarse *= half;
        let mut fine = 0.0;
        for (&x, &gw) in pair.x15.iter().zip(&pair.w15) {
            fine += gw * f(mid + half * x);
        }
        fine *= half;
        evals += 22;
        if evals > MAX_EVALS {
            return Err(Error::numerical(
                "adaptive quadrature exceeded evaluation budget",
                Some(total + fine),
            ));
        }
        let err = (fine - coarse).abs();
        let budget = tol * (w / span).max(1e-300);
        if err <= budget || depth >= MAX_DEPTH {
            total += fine;
        } else {
            stack.push((lo, half, depth + 1));
            stack.push((lo + half, half, depth + 1));
        }
    }
    Ok(total)
}

/// Adaptive integration of `f` over `[0, upper]` with dyadic refinement graded
/// toward 0 via the substitution t = upper * u^p.
pub fn adaptive_graded<F: Fn(f64) -> f64>(f: F, upper: f64, tol: f64, power: i32) -> Result<f64> {
    if upper <= 0.0 {
        return Ok(0.0);
    }
    let p = power as f64;
    adaptive_1d(
        |u| {
            let t = upper * u.powi(power);
            f(t) * upper * p * u.powi(power - 1)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Plain tensor-product midpoint rule over an axis-aligned box, refined
/// dyadically until two successive levels agree to `tol` (Richardson check).
///
/// Deliberately simple; used as a brute-force cross-check of the fast paths.
pub fn midpoint_tensor_refine<F: Fn(&[f64]) -> f64>(
    f: F,
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    max_level: u32,
) -> Result<f64> {
    assert_eq!(lo.len(), hi.len());
    let dim = lo.len();
    let mut prev = f64::NAN;
    for level in 3..=max_level {
        let cells_per_axis = 1usize << level;
        let mut idx = vec![0usize; dim];
        let mut sum = 0.0;
        let mut cell_vol = 1.0;
        for d in 0..dim {
            cell_vol *= (hi[d] - lo[d]) / cells_per_axis as f64;
        }
        let mut point = vec![0.0; dim];
        'cells: loop {
            for d in 0..dim {
                let w = (hi[d] - lo[d]) / cells_per_axis as f64;
                point[d] = lo[d] + (idx[d] as f64 + 0.5) * w;
            }
            sum += f(&point);
            for d in 0..dim {
                idx[d] += 1;
                if idx[d] < cells_per_axis {
                    continue 'cells;
                }
                idx[d] = 0;
            }
            break;
        }
        let value = sum * cell_vol;
        if prev.is_finite() && (value - prev).abs() <= tol {
            return Ok(value);
        }
        prev = value;
    }
    Err(Error::numerical(
        "tensor midpoint refinement exceeded max level",
        Some(prev),
    ))
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial; accurate to machine precision for moderate n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Bisection for the root of a monotone function on [lo, hi].
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: u32) -> f64 {
    let rising = f(hi) > f(lo);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if (v > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares slope of y against x.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_smooth_polynomial() {
        let v = adaptive_1d(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 1e-12).unwrap();
        // exact: [x^4/4 - x^2 + x] from -1 to 2
        let exact = (4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-11, "{v} vs {exact}");
    }

    #[test]
    fn graded_handles_inverse_sqrt() {
        // ∫_0^1 t^{-1/2} dt = 2
        let v = adaptive_graded(|t| t.powf(-0.5), 1.0, 1e-10, 3).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn tensor_midpoint_matches_separable_product() {
        let v = midpoint_tensor_refine(|p| p[0] * p[0] * p[1], &[0.0, 0.0], &[1.0, 2.0], 1e-8, 14)
            .unwrap();
        assert!((v - (1.0 / 3.0) * 2.0).abs() < 1e-6);
    }

    #[test]
    fn gauss_nodes_integrate_high_degree_exactly() {
        let (x, w) = gauss_legendre(12);
        // degree-23 polynomial is integrated exactly by 12-point Gauss
        let quad: f64 = x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| wi * (xi.powi(23) + 3.0 * xi.powi(8)))
            .sum();
        let exact = 0.0 + 3.0 * 2.0 / 9.0;
        assert!((quad - exact).abs() < 1e-13);
    }

    #[test]
    fn slope_of_exact_line() {
        let s = fit_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((s - 2.0).abs() < 1e-14);
    }
}
