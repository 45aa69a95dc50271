//! Periodic spatial lattice x uniform time lattice, discrete kernels, FFT
//! convolution and the precomputed past-tail weights.
//!
//! The spatial domain is the torus [0, L)^n with M points per axis. Discrete
//! kernels live on lattice offsets x time lags; time cells are the left-open
//! intervals ((q-1)k, qk] so lag 0 carries no weight (strict past dependence)
//! and no kernel mass is lost. The weights are renormalized to exact unit
//! discrete mass, which makes discrete mass conservation exact.

use rayon::prelude::*;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::quad::gauss_legendre;

/// Minimum number of lattice cells the kernel support must span, per axis.
const RESOLVABILITY: f64 = 8.0;

/// Periodic spatial lattice times uniform time lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Spatial dimension, 1 or 2.
    pub dim: usize,
    /// Side length L of the periodic box [0, L)^n.
    pub box_len: f64,
    /// Lattice points per axis (a power of two).
    pub points: usize,
    /// Time step k.
    pub dt: f64,
    /// Number of time steps; the horizon is steps * dt.
    pub steps: usize,
}

impl Grid {
    pub fn new(dim: usize, box_len: f64, points: usize, dt: f64, horizon: f64) -> Result<Self> {
        if horizon < dt {
            return Err(Error::Configuration(format!(
                "horizon {horizon} shorter than one time step {dt}"
            )));
        }
        let steps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
        Grid::with_steps(dim, box_len, points, dt, steps)
    }

    pub fn with_steps(
        dim: usize,
        box_len: f64,
        points: usize,
        dt: f64,
        steps: usize,
    ) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Configuration(format!(
                "grid dimension must be 1 or 2, got {dim}"
            )));
        }
        if !(box_len > 0.0 && dt > 0.0) || steps == 0 {
            return Err(Error::Configuration(format!(
                "grid requires box_len > 0, dt > 0, steps > 0 (got L={box_len}, k={dt}, steps={steps})"
            )));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::Configuration(format!(
                "points per axis must be a power of two >= 4, got {points}"
            )));
        }
        Ok(Grid {
            dim,
            box_len,
            points,
            dt,
            steps,
        })
    }

    /// Lattice spacing h = L/M.
    pub fn h(&self) -> f64 {
        self.box_len / self.points as f64
    }

    /// Cell volume h^n.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// Total spatial lattice size M^n.
    pub fn cells(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Signed offset coordinate of lattice index j along one axis.
    pub fn offset_coord(&self, j: usize) -> f64 {
        let m = self.points;
        let s = if j <= m / 2 { j as isize } else { j as isize - m as isize };
        s as f64 * self.h()
    }

    /// Lattice point coordinates for a flat spatial index.
    pub fn point_coords(&self, flat: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![flat as f64 * self.h()],
            _ => {
                let m = self.points;
                vec![(flat / m) as f64 * self.h(), (flat % m) as f64 * self.h()]
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Space-time field
// ---------------------------------------------------------------------------

/// Density values on the spatial lattice x time lattice, time-major.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    pub grid: Grid,
    data: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: Grid) -> Self {
        let len = (grid.steps + 1) * grid.cells();
        SpaceTimeField {
            grid,
            data: vec![0.0; len],
        }
    }

    pub fn from_slices(grid: Grid, slices: Vec<Vec<f64>>) -> Result<Self> {
        if slices.len() != grid.steps + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} time slices, got {}",
                grid.steps + 1,
                slices.len()
            )));
        }
        let cells = grid.cells();
        let mut data = Vec::with_capacity(slices.len() * cells);
        for s in &slices {
            if s.len() != cells {
                return Err(Error::InvalidParameter(format!(
                    "slice length {} does not match lattice size {cells}",
                    s.len()
                )));
            }
            data.extend_from_slice(s);
        }
        Ok(SpaceTimeField { grid, data })
    }

    pub fn slice(&self, i: usize) -> &[f64] {
        let c = self.grid.cells();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn slice_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.grid.cells();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Per-time-slice mass: sum over the lattice times h^n.
    pub fn masses(&self) -> Vec<f64> {
        let vol = self.grid.cell_volume();
        (0..=self.grid.steps)
            .map(|i| self.slice(i).iter().sum::<f64>() * vol)
            .collect()
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Sup-norm of the difference against another field on the same grid.
    pub fn sup_diff(&self, other: &SpaceTimeField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter(
                "sup_diff requires matching grids".into(),
            ));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Writes the raw values as little-endian f64, time-major then row-major
    /// space, with a JSON sidecar describing the grid.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        for v in &self.data {
            file.write_all(&v.to_le_bytes())?;
        }
        file.flush()?;
        let sidecar = FieldSidecar {
            format: "f64-le".into(),
            layout: "time-major,row-major-space".into(),
            grid: self.grid.clone(),
        };
        let json_path = path.with_extension("json");
        let mut jf = std::fs::File::create(json_path)?;
        serde_json::to_writer_pretty(&mut jf, &sidecar)
            .map_err(|e| Error::InvalidState(format!("sidecar serialization failed: {e}")))?;
        jf.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let sidecar: FieldSidecar = serde_json::from_reader(std::fs::File::open(
            path.with_extension("json"),
        )?)
        .map_err(|e| Error::InvalidState(format!("sidecar parse failed: {e}")))?;
        let mut raw = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut raw)?;
        let expected = (sidecar.grid.steps + 1) * sidecar.grid.cells() * 8;
        if raw.len() != expected {
            return Err(Error::InvalidState(format!(
                "field file has {} bytes, expected {expected}",
                raw.len()
            )));
        }
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(SpaceTimeField {
            grid: sidecar.grid,
            data,
        })
    }

    /// CSV export (t, x, u), one-dimensional grids only.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if self.grid.dim != 1 {
            return Err(Error::Configuration(
                "CSV field export is defined for dim 1 only".into(),
            ));
        }
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "t,x,u")?;
        let h = self.grid.h();
        for i in 0..=self.grid.steps {
            let t = i as f64 * self.grid.dt;
            for (j, v) in self.slice(i).iter().enumerate() {
                writeln!(out, "{:e},{:e},{:e}", t, j as f64 * h, v)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct FieldSidecar {
    format: String,
    layout: String,
    grid: Grid,
}

// ---------------------------------------------------------------------------
// FFT convolution
// ---------------------------------------------------------------------------

/// Cached FFT plans for one grid.
pub struct Spectral {
    dim: usize,
    points: usize,
    cell_volume: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            dim: grid.dim,
            points: grid.points,
            cell_volume: grid.cell_volume(),
            fwd: planner.plan_fft_forward(grid.points),
            inv: planner.plan_fft_inverse(grid.points),
        }
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    fn transform(&self, buf: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        let m = self.points;
        match self.dim {
            1 => plan.process(buf),
            _ => {
                for row in buf.chunks_exact_mut(m) {
                    plan.process(row);
                }
                // columns via transpose
                let mut col = vec![Complex::default(); m];
                for c in 0..m {
                    for r in 0..m {
                        col[r] = buf[r * m + c];
                    }
                    plan.process(&mut col);
                    for r in 0..m {
                        buf[r * m + c] = col[r];
                    }
                }
            }
        }
    }

    /// Forward transform of real lattice data.
    pub fn forward(&self, real: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = real.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.fwd);
        buf
    }

    /// Inverse transform, returning the real part scaled by 1/M^n.
    pub fn inverse_real(&self, mut spec: Vec<Complex<f64>>) -> Vec<f64> {
        self.transform(&mut spec, &self.inv);
        let scale = 1.0 / self.len() as f64;
        spec.into_iter().map(|c| c.re * scale).collect()
    }

    /// Circular convolution (f * w) h^n from precomputed spectra.
    pub fn convolve_spectra(
        &self,
        f_hat: &[Complex<f64>],
        w_hat: &[Complex<f64>],
    ) -> Vec<f64> {
        let prod: Vec<Complex<f64>> = f_hat
            .iter()
            .zip(w_hat)
            .map(|(a, b)| a * b * self.cell_volume)
            .collect();
        self.inverse_real(prod)
    }

    /// Circular convolution of two real lattice arrays, scaled by h^n.
    pub fn convolve(&self, field: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
        if field.len() != self.len() || weights.len() != self.len() {
            return Err(Error::InvalidParameter(format!(
                "convolution size mismatch: field {}, weights {}, lattice {}",
                field.len(),
                weights.len(),
                self.len()
            )));
        }
        Ok(self.convolve_spectra(&self.forward(field), &self.forward(weights)))
    }
}

/// Periodic convolution scaled by h^n; builds plans on the fly. Prefer a
/// long-lived [`Spectral`] in hot paths.
pub fn convolve_slice(grid: &Grid, field: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    Spectral::new(grid).convolve(field, weights)
}

// ---------------------------------------------------------------------------
// Discrete kernel
// ---------------------------------------------------------------------------

/// Lattice-sampled kernel with exact unit discrete mass.
///
/// `weights[q]` holds the density averages for time lag q (cell ((q-1)k, qk]);
/// `weights[0]` is identically zero. Multiplying a weight by h^n k gives the
/// probability mass of its cell.
#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    pub grid: Grid,
    pub weights: Vec<Vec<f64>>,
    /// Mass per lag: sum of weights[q] * h^n * k.
    pub lag_mass: Vec<f64>,
    /// Number of time lags with cumulative mass < 1.
    pub alpha_lag: usize,
    /// Cumulative mass up to alpha_lag/2 lags.
    pub contraction: f64,
}

impl DiscreteKernel {
    /// Number of time lags Q.
    pub fn lags(&self) -> usize {
        self.weights.len() - 1
    }

    /// Cumulative lag mass up to and including lag q.
    pub fn cumulative_mass(&self, q: usize) -> f64 {
        self.lag_mass[..=q.min(self.lags())].iter().sum()
    }

    /// Tail weights: for each time index i in 0..=steps the spatial array
    /// Lambda_i(z) = sum_{q > i} weights[q](z) * k, a composite quadrature of
    /// the kernel over sigma in (t_i, t_max]. Lambda_0 is the discrete jump
    /// marginal; Lambda_i vanishes once t_i >= t_max.
    pub fn tail_weights(&self, steps: usize) -> Vec<Vec<f64>> {
        let cells = self.grid.cells();
        let q_max = self.lags();
        let k = self.grid.dt;
        let mut tails = vec![vec![0.0; cells]; steps + 1];
        // Suffix sums: start at i = min(steps, Q) with the lags beyond it,
        // then fold lags in one by one as i decreases.
        let mut acc = vec![0.0; cells];
        let start = steps.min(q_max);
        for q in (start + 1)..=q_max {
            for (a, w) in acc.iter_mut().zip(&self.weights[q]) {
                *a += w * k;
            }
        }
        let mut i = start;
        loop {
            tails[i] = acc.clone();
            if i == 0 {
                break;
            }
            for (a, w) in acc.iter_mut().zip(&self.weights[i]) {
                *a += w * k;
            }
            i -= 1;
        }
        tails
    }
}

/// Tail weights straight from a kernel and grid.
pub fn tail_weights(kernel: &dyn Kernel, grid: &Grid) -> Result<Vec<Vec<f64>>> {
    Ok(discretize_kernel(kernel, grid)?.tail_weights(grid.steps))
}

/// Discretizes a kernel: cell averages over (spatial cell) x ((q-1)k, qk],
/// renormalized by one global constant to exact unit discrete mass.
///
/// The time direction uses the kernel's exact section integrals; the spatial
/// direction uses Gauss quadrature split at the section radii (dim 1) or a
/// tensor Gauss rule (dim 2).
pub fn discretize_kernel(kernel: &dyn Kernel, grid: &Grid) -> Result<DiscreteKernel> {
    if kernel.dim() != grid.dim {
        return Err(Error::Configuration(format!(
            "kernel dimension {} does not match grid dimension {}",
            kernel.dim(),
            grid.dim
        )));
    }
    let h = grid.h();
    let k = grid.dt;
    let space_ratio = kernel.space_radius() / h;
    if space_ratio < RESOLVABILITY {
        return Err(Error::Configuration(format!(
            "kernel not resolvable: space_radius/h = {space_ratio:.3} < {RESOLVABILITY}"
        )));
    }
    let time_ratio = kernel.time_support() / k;
    if time_ratio < RESOLVABILITY {
        return Err(Error::Configuration(format!(
            "kernel not resolvable: time_support/k = {time_ratio:.3} < {RESOLVABILITY}"
        )));
    }
    if kernel.space_radius() > 0.5 * grid.box_len {
        return Err(Error::Configuration(format!(
            "kernel space radius {} exceeds half the box {}; periodic images would overlap",
            kernel.space_radius(),
            0.5 * grid.box_len
        )));
    }

    let q_max = (kernel.time_support() / k - 1e-12).ceil().max(1.0) as usize;
    let cells = grid.cells();

    // Radii where a spatial piece boundary can occur: section radii at the
    // time-cell edges plus the outer support radius.
    let mut split_radii: Vec<f64> = (0..=q_max)
        .map(|q| kernel.section_radius(q as f64 * k))
        .filter(|&r| r > 0.0)
        .collect();
    split_radii.push(kernel.space_radius());
    split_radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    split_radii.dedup();

    let (gx, gw) = gauss_legendre(24);
    let (gx2, gw2) = gauss_legendre(8);

    let columns: Vec<Vec<f64>> = (0..cells)
        .into_par_iter()
        .map(|flat| {
            let mut col = vec![0.0; q_max + 1];
            match grid.dim {
                1 => {
                    let c = grid.offset_coord(flat);
                    let a = c - 0.5 * h;
                    let b = c + 0.5 * h;
                    // piece boundaries inside the cell
                    let mut pts = vec![a, b];
                    for &r in &split_radii {
                        for s in [r, -r] {
                            if a < s && s < b {
                                pts.push(s);
                            }
                        }
                    }
                    if a < 0.0 && 0.0 < b {
                        pts.push(0.0);
                    }
                    pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
                    for w in pts.windows(2) {
                        let (p0, p1) = (w[0], w[1]);
                        if p1 <= p0 {
                            continue;
                        }
                        // Pieces ending at the origin see the marginal's
                        // logarithmic singularity; grade them dyadically.
                        let sub_edges: Vec<(f64, f64)> = if p0 == 0.0 {
                            dyadic_from_zero(p1).map(|(a, b)| (a, b)).collect()
                        } else if p1 == 0.0 {
                            dyadic_from_zero(-p0).map(|(a, b)| (-b, -a)).collect()
                        } else {
                            vec![(p0, p1)]
                        };
                        for (s0, s1) in sub_edges {
                            let mid = 0.5 * (s0 + s1);
                            let half = 0.5 * (s1 - s0);
                            for (xi, wi) in gx.iter().zip(&gw) {
                                let x = mid + half * xi;
                                accumulate_node(kernel, x.abs(), wi * half, k, q_max, &mut col);
                            }
                        }
                    }
                }
                _ => {
                    let m = grid.points;
                    let c0 = grid.offset_coord(flat / m);
                    let c1 = grid.offset_coord(flat % m);
                    for (xi, wi) in gx2.iter().zip(&gw2) {
                        let x0 = c0 + 0.5 * h * xi;
                        for (yj, wj) in gx2.iter().zip(&gw2) {
                            let x1 = c1 + 0.5 * h * yj;
                            let rho = x0.hypot(x1);
                            let w = wi * wj * 0.25 * h * h;
                            accumulate_node(kernel, rho, w, k, q_max, &mut col);
                        }
                    }
                }
            }
            col
        })
        .collect();

    // cell integrals -> averages, then global renormalization
    let vol = grid.cell_volume() * k;
    let mut weights = vec![vec![0.0; cells]; q_max + 1];
    for (flat, col) in columns.iter().enumerate() {
        for q in 1..=q_max {
            weights[q][flat] = col[q] / vol;
        }
    }
    let mut total = 0.0;
    for lag in &weights {
        for &w in lag {
            total += w;
        }
    }
    total *= vol;
    if !(total > 0.0) {
        return Err(Error::numerical(
            "discrete kernel mass vanished; support not resolved",
            Some(total),
        ));
    }
    let scale = 1.0 / total;
    for lag in weights.iter_mut() {
        for w in lag.iter_mut() {
            *w *= scale;
        }
    }
    // Pin the discrete mass to exactly 1 by absorbing the rounding residual
    // into the largest weight.
    let mut sum = 0.0;
    let mut argmax = (1usize, 0usize);
    let mut best = -1.0;
    for (q, lag) in weights.iter().enumerate() {
        for (z, &w) in lag.iter().enumerate() {
            sum += w;
            if w > best {
                best = w;
                argmax = (q, z);
            }
        }
    }
    let residual = 1.0 - sum * vol;
    weights[argmax.0][argmax.1] += residual / vol;

    let lag_mass: Vec<f64> = weights
        .iter()
        .map(|lag| lag.iter().sum::<f64>() * vol)
        .collect();
    let mut cum = 0.0;
    let mut alpha_lag = 0usize;
    for (q, &m) in lag_mass.iter().enumerate().skip(1) {
        cum += m;
        if cum < 1.0 {
            alpha_lag = q;
        }
    }
    let contraction = lag_mass[..=(alpha_lag / 2).min(q_max)].iter().sum();

    Ok(DiscreteKernel {
        grid: grid.clone(),
        weights,
        lag_mass,
        alpha_lag,
        contraction,
    })
}

/// Dyadic subdivision of (0, upper] from the outside in, finest cell last.
fn dyadic_from_zero(upper: f64) -> impl Iterator<Item = (f64, f64)> {
    const LEVELS: u32 = 44;
    (0..LEVELS).map(move |j| {
        let hi = upper * 0.5f64.powi(j as i32);
        let lo = if j + 1 == LEVELS { 0.0 } else { 0.5 * hi };
        (lo, hi)
    })
}

/// Adds one spatial quadrature node's exact time-cell integrals to a column.
fn accumulate_node(
    kernel: &dyn Kernel,
    rho: f64,
    node_weight: f64,
    k: f64,
    q_max: usize,
    col: &mut [f64],
) {
    let Some((lo, hi)) = kernel.time_section(rho) else {
        return;
    };
    let q_first = ((lo / k).floor() as usize + 1).max(1);
    let q_last = ((hi / k).ceil() as usize).min(q_max);
    for q in q_first..=q_last {
        let a = ((q - 1) as f64 * k).max(lo);
        let b = (q as f64 * k).min(hi);
        if a < b {
            col[q] +=
                node_weight * (kernel.time_primitive(rho, b) - kernel.time_primitive(rho, a));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{rescale, BumpProductKernel, HeatBallKernel};
    use rand::{Rng, SeedableRng};

    fn heatball_grid() -> Grid {
        // unrescaled heat ball: tmax ~ 0.0796, rho_max ~ 0.242
        Grid::new(1, 1.0, 256, 0.0796 / 16.0, 0.0796).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(3, 1.0, 64, 0.01, 0.1).is_err());
        assert!(Grid::new(1, 1.0, 100, 0.01, 0.1).is_err(), "non power of two");
        assert!(Grid::new(1, 1.0, 64, 0.0, 0.1).is_err());
        let g = Grid::new(1, 2.0, 64, 0.01, 0.1).unwrap();
        assert_eq!(g.steps, 10);
        assert!((g.h() - 2.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn discrete_mass_is_exactly_one() {
        let k = HeatBallKernel::new(1).unwrap();
        let g = heatball_grid();
        let dk = discretize_kernel(&k, &g).unwrap();
        let vol = g.cell_volume() * g.dt;
        let total: f64 = dk.weights.iter().flatten().sum::<f64>() * vol;
        assert_eq!(total, 1.0, "renormalization must pin mass to exactly 1");
        assert!(dk.weights[0].iter().all(|&w| w == 0.0), "lag 0 must be zero");
        assert!(dk.weights.iter().flatten().all(|&w| w >= 0.0));
    }

    #[test]
    fn bump_kernel_has_no_weight_before_support() {
        let k = BumpProductKernel::standard(1).unwrap();
        // k = t1/10 so the support starts at lag 10
        let g = Grid::new(1, 1.0, 128, 0.002, 0.1).unwrap();
        let dk = discretize_kernel(&k, &g).unwrap();
        for q in 0..10 {
            assert!(
                dk.weights[q].iter().all(|&w| w == 0.0),
                "lag {q} should carry no weight"
            );
        }
        assert!(dk.lag_mass[11] > 0.0);
    }

    #[test]
    fn discrete_contraction_matches_analytic() {
        let k = HeatBallKernel::new(1).unwrap();
        let g = Grid::new(1, 1.0, 512, 0.0796 / 64.0, 0.0796).unwrap();
        let dk = discretize_kernel(&k, &g).unwrap();
        // analytic I(alpha/2) = 0.983342655957
        assert!(
            (dk.contraction - 0.983342655957).abs() < 2e-2,
            "contraction {}",
            dk.contraction
        );
    }

    #[test]
    fn resolvability_errors_name_the_ratio() {
        let k = HeatBallKernel::new(1).unwrap();
        let coarse_space = Grid::new(1, 8.0, 64, 0.005, 0.05).unwrap();
        let err = discretize_kernel(&k, &coarse_space).unwrap_err();
        assert!(err.to_string().contains("space_radius/h"), "{err}");
        let coarse_time = Grid::new(1, 1.0, 256, 0.02, 0.08).unwrap();
        let err = discretize_kernel(&k, &coarse_time).unwrap_err();
        assert!(err.to_string().contains("time_support/k"), "{err}");
    }

    #[test]
    fn convolve_with_discrete_delta_is_identity() {
        let g = Grid::new(1, 1.0, 64, 0.01, 0.1).unwrap();
        let sp = Spectral::new(&g);
        let mut delta = vec![0.0; 64];
        delta[0] = 1.0 / g.h();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let field: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = sp.convolve(&field, &delta).unwrap();
        for (a, b) in field.iter().zip(&out) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_are_convolution_eigenvectors() {
        let g = Grid::new(1, 1.0, 128, 0.01, 0.1).unwrap();
        let sp = Spectral::new(&g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let w: Vec<f64> = (0..128).map(|_| rng.gen_range(0.0..2.0)).collect();
        let wm: f64 = w.iter().sum::<f64>() * g.h();
        let c = 0.7;
        let out = sp.convolve(&vec![c; 128], &w).unwrap();
        for v in out {
            assert!((v - c * wm).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_preserves_mass_and_monotonicity() {
        let g = Grid::new(1, 2.0, 128, 0.01, 0.1).unwrap();
        let sp = Spectral::new(&g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let w: Vec<f64> = (0..128).map(|_| rng.gen_range(0.0..1.0)).collect();
        let f: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..2.0)).collect();
        let g2: Vec<f64> = f.iter().map(|v| v + rng.gen_range(0.0..0.5)).collect();
        let cf = sp.convolve(&f, &w).unwrap();
        let cg = sp.convolve(&g2, &w).unwrap();
        let mass_f: f64 = f.iter().sum::<f64>() * g.h();
        let mass_w: f64 = w.iter().sum::<f64>() * g.h();
        let mass_cf: f64 = cf.iter().sum::<f64>() * g.h();
        assert!(
            (mass_cf - mass_f * mass_w).abs() <= 1e-12 * mass_f.abs().max(1.0) * mass_w,
            "{mass_cf} vs {}",
            mass_f * mass_w
        );
        for (a, b) in cf.iter().zip(&cg) {
            assert!(a <= &(b + 1e-12), "monotonicity violated");
        }
    }

    #[test]
    fn convolve_2d_matches_direct_sum() {
        let g = Grid::new(2, 1.0, 16, 0.01, 0.05).unwrap();
        let sp = Spectral::new(&g);
        let m = 16;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let f: Vec<f64> = (0..m * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..m * m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let fast = sp.convolve(&f, &w).unwrap();
        let h2 = g.cell_volume();
        for i0 in 0..m {
            for i1 in 0..m {
                let mut acc = 0.0;
                for j0 in 0..m {
                    for j1 in 0..m {
                        let d0 = (i0 + m - j0) % m;
                        let d1 = (i1 + m - j1) % m;
                        acc += f[j0 * m + j1] * w[d0 * m + d1];
                    }
                }
                let direct = acc * h2;
                let v = fast[i0 * m + i1];
                assert!((v - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn tail_weights_examples() {
        let k = HeatBallKernel::new(1).unwrap();
        let g = heatball_grid();
        let dk = discretize_kernel(&k, &g).unwrap();
        let tails = dk.tail_weights(g.steps);
        // Lambda_0 is the discrete jump marginal, a probability density
        let lam0: f64 = tails[0].iter().sum::<f64>() * g.cell_volume();
        assert!((lam0 - 1.0).abs() < 1e-12, "{lam0}");
        // t >= t_max: all-zero array
        assert!(tails[g.steps].iter().all(|&v| v == 0.0));
        // pointwise non-increasing in t
        for i in 1..tails.len() {
            for (a, b) in tails[i].iter().zip(&tails[i - 1]) {
                assert!(a <= b);
            }
        }
        // mass split is exact: tail mass + interior mass = 1 at every index
        for i in 0..=g.steps {
            let tail: f64 = tails[i].iter().sum::<f64>() * g.cell_volume();
            let interior = dk.cumulative_mass(i.min(dk.lags()));
            assert!(
                (tail + interior - 1.0).abs() < 1e-12,
                "split at {i}: {tail} + {interior}"
            );
        }
    }

    #[test]
    fn tail_weights_match_refined_quadrature() {
        // refinement oracle at t = t_max/2: recompute each cell average of
        // ∫_{sigma > t} J dsigma by independent adaptive quadrature over the
        // spatial cell and compare to the assembled tail weights.
        let k = HeatBallKernel::new(1).unwrap();
        let g = heatball_grid();
        let i_half = g.steps / 2;
        let t_half = i_half as f64 * g.dt;
        let dk = discretize_kernel(&k, &g).unwrap();
        let tails = dk.tail_weights(g.steps);
        let h = g.h();
        let mut worst: f64 = 0.0;
        for j in 0..g.points {
            let c = g.offset_coord(j);
            let oracle = crate::quad::adaptive_1d(
                |x| k.time_integral(x.abs(), t_half, k.time_support()),
                c - 0.5 * h,
                c + 0.5 * h,
                1e-13,
            )
            .unwrap()
                / h;
            worst = worst.max((tails[i_half][j] - oracle).abs());
        }
        // agreement limited only by quadrature and the global unit-mass
        // renormalization, both far below 1e-8
        assert!(worst <= 1e-8, "worst {worst}");
    }

    #[test]
    fn rescaled_kernel_discretizes_consistently() {
        // scale consistency: weights of J_r on (h, k) match weights of J on
        // (h/r, k/r^2) after the exact parabolic map
        let base: Arc<dyn Kernel> = Arc::new(HeatBallKernel::new(1).unwrap());
        let r = 0.5;
        let kr = rescale(base.clone(), r).unwrap();
        let g1 = Grid::new(1, 1.0, 128, 0.0796 * r * r / 16.0, 0.0796 * r * r).unwrap();
        let g2 = Grid::new(1, 1.0 / r, 128, 0.0796 / 16.0, 0.0796).unwrap();
        let d1 = discretize_kernel(&kr, &g1).unwrap();
        let d2 = discretize_kernel(base.as_ref(), &g2).unwrap();
        assert_eq!(d1.lags(), d2.lags());
        let v1 = g1.cell_volume() * g1.dt;
        let v2 = g2.cell_volume() * g2.dt;
        let mut worst: f64 = 0.0;
        for q in 1..=d1.lags() {
            for z in 0..128 {
                let m1 = d1.weights[q][z] * v1;
                let m2 = d2.weights[q][z] * v2;
                worst = worst.max((m1 - m2).abs());
            }
        }
        assert!(worst < 1e-15, "cell mass mismatch {worst}");
    }

    #[test]
    fn field_binary_roundtrip() {
        let g = Grid::new(1, 1.0, 16, 0.1, 0.3).unwrap();
        let mut field = SpaceTimeField::zeros(g.clone());
        for i in 0..=g.steps {
            for (j, v) in field.slice_mut(i).iter_mut().enumerate() {
                *v = (i * 100 + j) as f64 * 0.125;
            }
        }
        let dir = std::env::temp_dir().join("ctrw_field_roundtrip_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.bin");
        field.write_binary(&path).unwrap();
        let back = SpaceTimeField::read_binary(&path).unwrap();
        assert_eq!(field.data(), back.data());
        assert_eq!(field.grid, back.grid);
        field.write_csv(&dir.join("f.csv")).unwrap();
        let csv = std::fs::read_to_string(dir.join("f.csv")).unwrap();
        assert!(csv.starts_with("t,x,u\n"));
        assert_eq!(csv.lines().count(), 1 + 4 * 16);
        std::fs::remove_dir_all(&dir).ok();
    }
}
