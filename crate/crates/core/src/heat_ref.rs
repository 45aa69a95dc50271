//! Reference temperatures on the torus.
//!
//! The heat semigroup is applied spectrally: mode xi is multiplied by
//! exp(-|2 pi xi / L|^2 t). On periodic data this equals convolution with the
//! periodized Weierstrass kernel, with no time-stepping error, which isolates
//! the nonlocal solver's error in the convergence-rate studies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, SpaceTimeField, Spectral};
use crate::quad::adaptive_1d;
use crate::solver::InitialDatum;

/// The Weierstrass kernel W(x, t) = (4 pi t)^{-n/2} exp(-|x|^2/(4t)).
#[derive(Debug, Clone, Copy)]
pub struct WeierstrassEval {
    pub dim: usize,
}

impl WeierstrassEval {
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (4.0 * std::f64::consts::PI * t).powf(-(self.dim as f64) / 2.0) * (-r2 / (4.0 * t)).exp()
    }
}

fn multipliers(grid: &Grid, t: f64) -> Vec<f64> {
    let m = grid.points;
    let l = grid.box_len;
    let two_pi = 2.0 * std::f64::consts::PI;
    let axis: Vec<f64> = (0..m)
        .map(|j| {
            let xi = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
            let k = two_pi * xi / l;
            (-k * k * t).exp()
        })
        .collect();
    match grid.dim {
        1 => axis,
        _ => {
            let mut out = vec![0.0; m * m];
            for (r, ar) in axis.iter().enumerate() {
                for (c, ac) in axis.iter().enumerate() {
                    out[r * m + c] = ar * ac;
                }
            }
            out
        }
    }
}

/// Evolves one spatial slice by the heat semigroup for time `t`.
pub fn heat_propagate(grid: &Grid, slice: &[f64], t: f64) -> Result<Vec<f64>> {
    if slice.len() != grid.cells() {
        return Err(Error::InvalidParameter(
            "slice does not match the lattice".into(),
        ));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "heat propagation requires t >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(slice.to_vec());
    }
    let sp = Spectral::new(grid);
    let mut hat = sp.forward(slice);
    for (c, m) in hat.iter_mut().zip(multipliers(grid, t)) {
        *c *= m;
    }
    Ok(sp.inverse_real(hat))
}

/// The temperature with initial datum f on all grid time slices; the slice at
/// t = 0 is f itself.
pub fn heat_solve(datum: &InitialDatum, grid: &Grid) -> Result<SpaceTimeField> {
    let f = datum.sample(grid)?;
    let sp = Spectral::new(grid);
    let f_hat = sp.forward(&f);
    let mut slices = Vec::with_capacity(grid.steps + 1);
    slices.push(f.clone());
    for i in 1..=grid.steps {
        let t = i as f64 * grid.dt;
        let mut hat = f_hat.clone();
        for (c, m) in hat.iter_mut().zip(multipliers(grid, t)) {
            *c *= m;
        }
        slices.push(sp.inverse_real(hat));
    }
    SpaceTimeField::from_slices(grid.clone(), slices)
}

/// Ratio table of a Lipschitz initial-layer check.
#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    /// (t, sup|u(., t) - f| / (seminorm t^{gamma/2})) rows.
    pub rows: Vec<(f64, f64)>,
    pub max_ratio: f64,
    pub gamma: f64,
    pub seminorm: f64,
}

/// Measures sup_x |u(., t) - f| / ([f]_gamma t^{gamma/2}) over the sampled
/// times. Requires Hölder metadata on the datum.
pub fn lipschitz_rate_check(
    datum: &InitialDatum,
    grid: &Grid,
    times: &[f64],
) -> Result<LipschitzReport> {
    let Some(h) = datum.holder else {
        return Err(Error::Configuration(
            "Lipschitz rate check requires Hölder metadata on the datum".into(),
        ));
    };
    let f = datum.sample(grid)?;
    let mut rows = Vec::with_capacity(times.len());
    let mut max_ratio: f64 = 0.0;
    for &t in times {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample times must be positive, got {t}"
            )));
        }
        let u = heat_propagate(grid, &f, t)?;
        let mut dev: f64 = 0.0;
        for (a, b) in u.iter().zip(&f) {
            dev = dev.max((a - b).abs());
        }
        let ratio = if h.seminorm > 0.0 {
            dev / (h.seminorm * t.powf(0.5 * h.exponent))
        } else if dev <= 1e-13 {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push((t, ratio));
        max_ratio = max_ratio.max(ratio);
    }
    Ok(LipschitzReport {
        rows,
        max_ratio,
        gamma: h.exponent,
        seminorm: h.seminorm,
    })
}

/// The sharp constant of the Gaussian initial-layer bound,
/// pi^{-n/2} 2^gamma ∫ e^{-|z|^2} |z|^gamma dz, by radial quadrature.
pub fn lipschitz_lemma_constant(dim: usize, gamma: f64) -> Result<f64> {
    let n = dim as f64;
    let surface = crate::kernels::sphere_surface(dim);
    // e^{-81} below double precision; cut the radial integral at 9
    let radial = adaptive_1d(
        |rho| (-rho * rho).exp() * rho.powf(gamma + n - 1.0),
        0.0,
        9.0,
        1e-13,
    )?;
    Ok(std::f64::consts::PI.powf(-n / 2.0) * 2f64.powf(gamma) * surface * radial)
}
