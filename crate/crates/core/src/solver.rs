//! Strip-wise Banach fixed-point solution of the Cauchy problem
//!
//! ```text
//! u(x, t) = (J * u_bar)(x, t),   u_bar = f for t < 0, u for t >= 0,
//! ```
//!
//! on the periodic lattice. Time is partitioned into strips of width alpha/2;
//! on each strip the operator
//!
//! ```text
//! T v(., t_i) = (Lambda_i * f) + sum_{0 < q <= i} (W_q * u_bar(., t_{i-q})) k
//! ```
//!
//! is a sup-norm contraction with factor below I(alpha/2) < 1 and is iterated
//! until the a posteriori fixed-point bound certifies the requested accuracy.
//! The time step is rounded down so alpha/2 is an exact multiple of it.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DiscreteKernel, Grid, SpaceTimeField, Spectral};
use crate::kernels::{compute_moments, Kernel};

/// Minimum number of time steps per alpha/2 strip.
pub const MIN_STRIP_STEPS: usize = 8;

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

/// Hölder metadata of an initial datum: |f(x) - f(y)| <= seminorm |x - y|^exponent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HolderData {
    pub exponent: f64,
    pub seminorm: f64,
}

/// Analytic periodic profiles for initial data.
#[derive(Debug, Clone)]
pub enum DatumProfile {
    Constant(f64),
    /// A cos(2 pi x1/L) (times cos(2 pi x2/L) in dim 2).
    Cosine { amplitude: f64 },
    /// floor + A (1 + cos(2 pi (x1 - center)/L))/2.
    RaisedCosine {
        floor: f64,
        amplitude: f64,
        center: f64,
    },
    /// A exp(-d(x, center)^2 / (2 width^2)) with periodic distance.
    GaussianBump {
        amplitude: f64,
        width: f64,
        center: f64,
    },
    /// A (1 - 4 |x1/L mod 1 - 1/2|): Lipschitz, slope 4A/L.
    TriangleWave { amplitude: f64 },
    /// A |sin(pi x1 / L)|^{1/2}: Hölder of exponent 1/2.
    SqrtSine { amplitude: f64 },
}

fn periodic_dist(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

impl DatumProfile {
    fn eval(&self, x: &[f64], period: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            DatumProfile::Constant(c) => c,
            DatumProfile::Cosine { amplitude } => {
                let mut v = amplitude;
                for &xi in x {
                    v *= (2.0 * PI * xi / period).cos();
                }
                v
            }
            DatumProfile::RaisedCosine {
                floor,
                amplitude,
                center,
            } => floor + 0.5 * amplitude * (1.0 + (2.0 * PI * (x[0] - center) / period).cos()),
            DatumProfile::GaussianBump {
                amplitude,
                width,
                center,
            } => {
                let d2: f64 = x
                    .iter()
                    .map(|&xi| {
                        let d = periodic_dist(xi, center, period);
                        d * d
                    })
                    .sum();
                amplitude * (-d2 / (2.0 * width * width)).exp()
            }
            DatumProfile::TriangleWave { amplitude } => {
                let s = (x[0] / period).rem_euclid(1.0);
                amplitude * (1.0 - 4.0 * (s - 0.5).abs())
            }
            DatumProfile::SqrtSine { amplitude } => {
                amplitude * (PI * x[0] / period).sin().abs().sqrt()
            }
        }
    }
}

/// Bounded initial density with inf/sup and optional Hölder metadata.
#[derive(Debug, Clone)]
pub struct InitialDatum {
    pub profile: DatumProfile,
    /// Period of the profile's own coordinates.
    base_period: f64,
    /// Evaluation applies x -> scale * x first (parabolic space rescaling).
    space_scale: f64,
    pub inf: f64,
    pub sup: f64,
    pub holder: Option<HolderData>,
}

impl InitialDatum {
    pub fn constant(c: f64) -> Self {
        InitialDatum {
            profile: DatumProfile::Constant(c),
            base_period: 1.0,
            space_scale: 1.0,
            inf: c,
            sup: c,
            holder: Some(HolderData {
                exponent: 1.0,
                seminorm: 0.0,
            }),
        }
    }

    /// A constant profile with deliberately loose bounds metadata, so the
    /// solver exercises the full fixed-point path instead of the degenerate
    /// shortcut.
    pub fn constant_loose(c: f64, slack: f64) -> Self {
        let mut d = InitialDatum::constant(c);
        d.inf = c - slack;
        d.sup = c + slack;
        d
    }

    pub fn cosine(amplitude: f64, box_len: f64) -> Self {
        InitialDatum {
            profile: DatumProfile::Cosine { amplitude },
            base_period: box_len,
            space_scale: 1.0,
            inf: -amplitude,
            sup: amplitude,
            holder: Some(HolderData {
                exponent: 1.0,
                seminorm: amplitude * 2.0 * std::f64::consts::PI / box_len,
            }),
        }
    }

    pub fn raised_cosine(floor: f64, amplitude: f64, center: f64, box_len: f64) -> Self {
        InitialDatum {
            profile: DatumProfile::RaisedCosine {
                floor,
                amplitude,
                center,
            },
            base_period: box_len,
            space_scale: 1.0,
            inf: floor,
            sup: floor + amplitude,
            holder: Some(HolderData {
                exponent: 1.0,
                seminorm: amplitude * std::f64::consts::PI / box_len,
            }),
        }
    }

    pub fn gaussian_bump(amplitude: f64, width: f64, center: f64, dim: usize, box_len: f64) -> Self {
        let far2 = dim as f64 * (0.5 * box_len) * (0.5 * box_len);
        InitialDatum {
            profile: DatumProfile::GaussianBump {
                amplitude,
                width,
                center,
            },
            base_period: box_len,
            space_scale: 1.0,
            inf: amplitude * (-far2 / (2.0 * width * width)).exp(),
            sup: amplitude,
            holder: Some(HolderData {
                exponent: 1.0,
                seminorm: amplitude / (width * std::f64::consts::E.sqrt()),
            }),
        }
    }

    pub fn triangle_wave(amplitude: f64, box_len: f64) -> Self {
        InitialDatum {
            profile: DatumProfile::TriangleWave { amplitude },
            base_period: box_len,
            space_scale: 1.0,
            inf: -amplitude,
            sup: amplitude,
            holder: Some(HolderData {
                exponent: 1.0,
                seminorm: 4.0 * amplitude / box_len,
            }),
        }
    }

    pub fn sqrt_sine(amplitude: f64, box_len: f64) -> Self {
        InitialDatum {
            profile: DatumProfile::SqrtSine { amplitude },
            base_period: box_len,
            space_scale: 1.0,
            inf: 0.0,
            sup: amplitude,
            holder: Some(HolderData {
                exponent: 0.5,
                seminorm: amplitude * (std::f64::consts::PI / box_len).sqrt(),
            }),
        }
    }

    /// Period of this datum as a function on space.
    pub fn period(&self) -> f64 {
        self.base_period / self.space_scale
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let scaled: Vec<f64> = x.iter().map(|&v| v * self.space_scale).collect();
        self.profile.eval(&scaled, self.base_period)
    }

    /// The parabolic space rescaling f(r .): period shrinks by r, the Hölder
    /// seminorm scales by r^gamma, inf and sup are unchanged.
    pub fn space_scaled(&self, r: f64) -> Result<InitialDatum> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "space scale must be positive, got {r}"
            )));
        }
        let holder = self.holder.map(|h| HolderData {
            exponent: h.exponent,
            seminorm: h.seminorm * r.powf(h.exponent),
        });
        Ok(InitialDatum {
            profile: self.profile.clone(),
            base_period: self.base_period,
            space_scale: self.space_scale * r,
            inf: self.inf,
            sup: self.sup,
            holder,
        })
    }

    /// Samples on the grid lattice, checking period compatibility and bounds.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        let period = self.period();
        if (grid.box_len - period).abs() > 1e-9 * period {
            return Err(Error::Configuration(format!(
                "datum period {period} does not match grid box {}",
                grid.box_len
            )));
        }
        let samples: Vec<f64> = (0..grid.cells())
            .map(|flat| self.eval(&grid.point_coords(flat)))
            .collect();
        for &v in &samples {
            if !(v >= self.inf - 1e-12 && v <= self.sup + 1e-12) {
                return Err(Error::Configuration(format!(
                    "datum sample {v} escapes declared bounds [{}, {}]",
                    self.inf, self.sup
                )));
            }
        }
        Ok(samples)
    }

    /// Spot-checks the Hölder bound on `pairs` random point pairs (periodic
    /// distance), with a fixed seed for reproducibility.
    pub fn validate_holder(&self, dim: usize, pairs: usize, seed: u64) -> Result<()> {
        let Some(h) = self.holder else {
            return Err(Error::Configuration(
                "datum carries no Hölder metadata".into(),
            ));
        };
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let period = self.period();
        for _ in 0..pairs {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..period)).collect();
            let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..period)).collect();
            let dist = x
                .iter()
                .zip(&y)
                .map(|(&a, &b)| {
                    let d = periodic_dist(a, b, period);
                    d * d
                })
                .sum::<f64>()
                .sqrt();
            let df = (self.eval(&x) - self.eval(&y)).abs();
            let bound = h.seminorm * dist.powf(h.exponent);
            if df > bound * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::Configuration(format!(
                    "Hölder bound violated: |f(x)-f(y)| = {df} > {bound} at distance {dist}"
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Solve options and report
// ---------------------------------------------------------------------------

/// Starting guess for the per-strip Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartGuess {
    /// Constant-in-time extension of the last known slice (warm start).
    WarmSlice,
    /// The initial datum extended constantly in time.
    Datum,
    /// The zero field.
    Zero,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub picard_tol: f64,
    pub max_iterations: usize,
    /// Steps per alpha/2 strip; defaults to max(8, ceil((alpha/2)/k_requested)).
    pub strip_steps: Option<usize>,
    /// Skips the alpha bisection when the caller already knows it.
    pub alpha: Option<f64>,
    pub start: StartGuess,
    /// Tolerance for the alpha bisection quadrature.
    pub quad_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            picard_tol: 1e-10,
            max_iterations: 200,
            strip_steps: None,
            alpha: None,
            start: StartGuess::WarmSlice,
            quad_tol: 1e-8,
        }
    }
}

/// Diagnostics of one solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// Per-time-step mass (lattice sum times h^n).
    pub masses: Vec<f64>,
    pub min_value: f64,
    pub max_value: f64,
    /// Picard iterations per strip.
    pub strip_iterations: Vec<usize>,
    /// Observed contraction ratios per strip.
    pub strip_ratios: Vec<Vec<f64>>,
    /// Certified within-strip contraction bound (max over strips).
    pub contraction_certificate: f64,
    /// The discrete kernel's contraction scalar I(alpha_lag/2).
    pub discrete_contraction: f64,
    pub alpha: f64,
    pub dt: f64,
    pub strip_steps: usize,
    pub lags: usize,
    /// sup over t in [0, alpha] of the sup-norm of u - f.
    pub initial_sup_dev: f64,
    pub picard_tol: f64,
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

/// Shared spectral state for repeated strip-operator applications.
struct Engine {
    spectral: Spectral,
    scale: f64, // h^n * k folded into lag products
    w_hats: Vec<Vec<Complex<f64>>>,
    /// (Lambda_i * f) for every time index.
    tail_terms: Vec<Vec<f64>>,
    history: Vec<Vec<f64>>,
    hist_hats: Vec<Vec<Complex<f64>>>,
    clamp: (f64, f64),
    lags: usize,
}

impl Engine {
    fn new(
        grid: &Grid,
        dk: &DiscreteKernel,
        tails: &[Vec<f64>],
        f_samples: &[f64],
        clamp: (f64, f64),
    ) -> Result<Engine> {
        if f_samples.len() != grid.cells() {
            return Err(Error::InvalidParameter(format!(
                "datum samples ({}) do not match lattice ({})",
                f_samples.len(),
                grid.cells()
            )));
        }
        if tails.len() < grid.steps + 1 {
            return Err(Error::InvalidParameter(format!(
                "tail weights cover {} indices, grid needs {}",
                tails.len(),
                grid.steps + 1
            )));
        }
        let spectral = Spectral::new(grid);
        let f_hat = spectral.forward(f_samples);
        let lags = dk.lags();
        let w_hats: Vec<Vec<Complex<f64>>> = (0..=lags)
            .into_par_iter()
            .map(|q| {
                if q == 0 {
                    Vec::new()
                } else {
                    spectral.forward(&dk.weights[q])
                }
            })
            .collect();
        let zero = vec![0.0; grid.cells()];
        let tail_terms: Vec<Vec<f64>> = (0..=grid.steps)
            .into_par_iter()
            .map(|i| {
                if tails[i].iter().all(|&v| v == 0.0) {
                    zero.clone()
                } else {
                    spectral.convolve_spectra(&f_hat, &spectral.forward(&tails[i]))
                }
            })
            .collect();
        Ok(Engine {
            spectral,
            scale: grid.cell_volume() * grid.dt,
            w_hats,
            tail_terms,
            history: Vec::new(),
            hist_hats: Vec::new(),
            clamp,
            lags,
        })
    }

    fn push_history(&mut self, slice: Vec<f64>) {
        self.hist_hats.push(self.spectral.forward(&slice));
        self.history.push(slice);
    }

    /// Per-strip constant part: tail term plus convolutions against history.
    fn strip_base(&self, start: usize, len: usize) -> Vec<Vec<f64>> {
        (0..len)
            .into_par_iter()
            .map(|o| {
                let i = start + o;
                let mut acc = vec![Complex::new(0.0, 0.0); self.spectral.len()];
                let mut any = false;
                for q in 1..=self.lags.min(i) {
                    let src = i - q;
                    if src < start {
                        any = true;
                        for (a, (w, h)) in acc
                            .iter_mut()
                            .zip(self.w_hats[q].iter().zip(&self.hist_hats[src]))
                        {
                            *a += w * h;
                        }
                    }
                }
                let mut out = self.tail_terms[i].clone();
                if any {
                    for (o_v, c) in out.iter_mut().zip(
                        self.spectral
                            .inverse_real(acc.into_iter().map(|c| c * self.scale).collect()),
                    ) {
                        *o_v += c;
                    }
                }
                out
            })
            .collect()
    }

    /// One application of the strip operator T to owned indices
    /// start..start+len, reading earlier owned slices from `v`.
    fn pass(
        &self,
        start: usize,
        base: &[Vec<f64>],
        v_hats: &[Vec<Complex<f64>>],
    ) -> Vec<Vec<f64>> {
        let len = base.len();
        (0..len)
            .into_par_iter()
            .map(|o| {
                let i = start + o;
                let mut out = base[o].clone();
                let mut acc = vec![Complex::new(0.0, 0.0); self.spectral.len()];
                let mut any = false;
                for q in 1..=self.lags.min(i) {
                    let src = i - q;
                    if src >= start {
                        any = true;
                        for (a, (w, h)) in acc
                            .iter_mut()
                            .zip(self.w_hats[q].iter().zip(&v_hats[src - start]))
                        {
                            *a += w * h;
                        }
                    }
                }
                if any {
                    for (o_v, c) in out.iter_mut().zip(
                        self.spectral
                            .inverse_real(acc.into_iter().map(|c| c * self.scale).collect()),
                    ) {
                        *o_v += c;
                    }
                }
                let (lo, hi) = self.clamp;
                for v in out.iter_mut() {
                    *v = v.clamp(lo, hi);
                }
                out
            })
            .collect()
    }

    fn hats_of(&self, v: &[Vec<f64>]) -> Vec<Vec<Complex<f64>>> {
        v.par_iter().map(|s| self.spectral.forward(s)).collect()
    }
}

// ---------------------------------------------------------------------------
// Public strip operator and strip solver
// ---------------------------------------------------------------------------

/// One application of the strip operator T.
///
/// `history` holds the completed slices for indices 0..history.len();
/// `strip_values` holds the current iterate for indices
/// history.len()..history.len()+strip_values.len(). The output is a pure
/// function of its inputs: for each index, the tail term (Lambda_i * f) plus
/// the lagged convolutions, reading u_bar from history below the strip and
/// from `strip_values` within it.
pub fn apply_t(
    dk: &DiscreteKernel,
    tails: &[Vec<f64>],
    f_samples: &[f64],
    history: &[Vec<f64>],
    strip_values: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let grid = &dk.grid;
    let start = history.len();
    if start + strip_values.len() > grid.steps + 1 {
        return Err(Error::InvalidState(format!(
            "strip [{start}, {}) exceeds the grid horizon ({} indices)",
            start + strip_values.len(),
            grid.steps + 1
        )));
    }
    // Required history depth: every lag of every strip index at or below the
    // strip start must be covered (indices below 0 are the f-tail, which is
    // exact through Lambda).
    let mut engine = Engine::new(
        grid,
        dk,
        tails,
        f_samples,
        (f64::NEG_INFINITY, f64::INFINITY),
    )?;
    for s in history {
        if s.len() != grid.cells() {
            return Err(Error::InvalidState(
                "history slice does not match the lattice".into(),
            ));
        }
        engine.push_history(s.clone());
    }
    let base = engine.strip_base(start, strip_values.len());
    let v_hats = engine.hats_of(strip_values);
    Ok(engine.pass(start, &base, &v_hats))
}

/// Result of one strip's Picard iteration.
#[derive(Debug, Clone)]
pub struct StripOutcome {
    /// Converged values for the strip's owned indices.
    pub values: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Observed sup-norm contraction ratios.
    pub ratios: Vec<f64>,
    /// Certified contraction bound for this strip.
    pub certificate: f64,
}

fn picard_threshold(picard_tol: f64, certificate: f64) -> f64 {
    if certificate > 0.0 {
        picard_tol * (1.0 - certificate) / certificate
    } else {
        f64::INFINITY
    }
}

fn run_strip(
    engine: &Engine,
    dk: &DiscreteKernel,
    start: usize,
    len: usize,
    v0: Vec<Vec<f64>>,
    picard_tol: f64,
    max_iterations: usize,
) -> Result<StripOutcome> {
    // Within the strip, the deepest in-strip lag is len-1 for start > 0
    // (index start is history) and len-1 for strip 0 as well, except that
    // strip 0 owns index 0 whose depth is len-1 too; the certificate uses the
    // worst case, the cumulative lag mass over the strip span.
    let span = if start == 0 { len - 1 } else { len };
    let certificate = dk.cumulative_mass(span.min(dk.lags()));
    if certificate >= 1.0 {
        return Err(Error::Configuration(format!(
            "strip of {len} steps is not a contraction (cumulative mass {certificate})"
        )));
    }
    let threshold = picard_threshold(picard_tol, certificate);
    let base = engine.strip_base(start, len);
    let mut v = v0;
    let mut ratios = Vec::new();
    let mut prev_diff: Option<f64> = None;
    for iter in 1..=max_iterations {
        let v_hats = engine.hats_of(&v);
        let next = engine.pass(start, &base, &v_hats);
        let mut diff: f64 = 0.0;
        for (a, b) in next.iter().zip(&v) {
            for (x, y) in a.iter().zip(b) {
                diff = diff.max((x - y).abs());
            }
        }
        if let Some(p) = prev_diff {
            if p > 0.0 {
                ratios.push(diff / p);
            }
        }
        v = next;
        if diff <= threshold {
            return Ok(StripOutcome {
                values: v,
                iterations: iter,
                ratios,
                certificate,
            });
        }
        prev_diff = Some(diff);
    }
    Err(Error::Convergence {
        what: format!("strip starting at index {start} did not reach tolerance {picard_tol}"),
        iterations: max_iterations,
        last_ratio: ratios.last().copied(),
    })
}

/// Picard-iterates the strip operator for the strip whose owned indices start
/// at `history.len()`, from the configured starting guess, until the a
/// posteriori fixed-point bound certifies `picard_tol` sup-norm accuracy.
pub fn solve_strip(
    dk: &DiscreteKernel,
    tails: &[Vec<f64>],
    f_samples: &[f64],
    history: &[Vec<f64>],
    strip_len: usize,
    datum_bounds: (f64, f64),
    options: &SolveOptions,
) -> Result<StripOutcome> {
    let grid = &dk.grid;
    let start = history.len();
    if start + strip_len > grid.steps + 1 {
        return Err(Error::InvalidState(format!(
            "strip [{start}, {}) exceeds the grid horizon",
            start + strip_len
        )));
    }
    let mut engine = Engine::new(grid, dk, tails, f_samples, datum_bounds)?;
    for s in history {
        engine.push_history(s.clone());
    }
    let guess_slice: Vec<f64> = match options.start {
        StartGuess::Zero => vec![0.0; grid.cells()],
        StartGuess::Datum => f_samples.to_vec(),
        StartGuess::WarmSlice => history.last().cloned().unwrap_or_else(|| f_samples.to_vec()),
    };
    let v0 = vec![guess_slice; strip_len];
    run_strip(
        &engine,
        dk,
        start,
        strip_len,
        v0,
        options.picard_tol,
        options.max_iterations,
    )
}

// ---------------------------------------------------------------------------
// Full solve
// ---------------------------------------------------------------------------

/// Rounds the requested time step down so that alpha/2 = m k for an integer
/// m >= MIN_STRIP_STEPS (or the caller's strip_steps).
pub fn adjust_time_step(alpha: f64, requested_dt: f64, strip_steps: Option<usize>) -> (f64, usize) {
    let half = 0.5 * alpha;
    let m = strip_steps
        .unwrap_or_else(|| ((half / requested_dt - 1e-12).ceil() as usize).max(MIN_STRIP_STEPS));
    (half / m as f64, m)
}

/// Solves problem P(J, f) on the requested grid. The time step is adjusted
/// downward so that alpha/2 is an integer number of steps; the returned field
/// carries the adjusted grid.
pub fn solve(
    kernel: &dyn Kernel,
    datum: &InitialDatum,
    grid_request: &Grid,
    options: &SolveOptions,
) -> Result<(SpaceTimeField, SolveReport)> {
    let alpha = match options.alpha {
        Some(a) if a > 0.0 => a,
        Some(a) => {
            return Err(Error::InvalidParameter(format!(
                "alpha override must be positive, got {a}"
            )))
        }
        None => compute_moments(kernel, options.quad_tol)?.alpha,
    };
    let (dt, strip_steps) = adjust_time_step(alpha, grid_request.dt, options.strip_steps);
    let grid = Grid::new(
        grid_request.dim,
        grid_request.box_len,
        grid_request.points,
        dt,
        grid_request.horizon(),
    )?;
    let f_samples = datum.sample(&grid)?;

    // Degenerate datum: constants are exact fixed points.
    if datum.sup == datum.inf {
        let c = datum.sup;
        let mut field = SpaceTimeField::zeros(grid.clone());
        for i in 0..=grid.steps {
            field.slice_mut(i).fill(c);
        }
        let n_strips = grid.steps.div_ceil(strip_steps.max(1)).max(1);
        let mass = c * grid.box_len.powi(grid.dim as i32);
        let report = SolveReport {
            masses: vec![mass; grid.steps + 1],
            min_value: c,
            max_value: c,
            strip_iterations: vec![0; n_strips],
            strip_ratios: vec![Vec::new(); n_strips],
            contraction_certificate: 0.0,
            discrete_contraction: 0.0,
            alpha,
            dt,
            strip_steps,
            lags: 0,
            initial_sup_dev: 0.0,
            picard_tol: options.picard_tol,
        };
        return Ok((field, report));
    }

    let dk = discretize_kernel_cached(kernel, &grid)?;
    let tails = dk.tail_weights(grid.steps);
    let mut engine = Engine::new(&grid, &dk, &tails, &f_samples, (datum.inf, datum.sup))?;

    let mut strip_iterations = Vec::new();
    let mut strip_ratios = Vec::new();
    let mut certificate: f64 = 0.0;
    let mut start = 0usize;
    let mut boundary = strip_steps; // first strip owns [0, m]
    while start <= grid.steps {
        let end = boundary.min(grid.steps);
        let len = end + 1 - start;
        let guess = match options.start {
            StartGuess::Zero => vec![0.0; grid.cells()],
            StartGuess::Datum => f_samples.clone(),
            StartGuess::WarmSlice => engine
                .history
                .last()
                .cloned()
                .unwrap_or_else(|| f_samples.clone()),
        };
        let outcome = run_strip(
            &engine,
            &dk,
            start,
            len,
            vec![guess; len],
            options.picard_tol,
            options.max_iterations,
        )?;
        certificate = certificate.max(outcome.certificate);
        strip_iterations.push(outcome.iterations);
        strip_ratios.push(outcome.ratios);
        for slice in outcome.values {
            engine.push_history(slice);
        }
        start = end + 1;
        boundary += strip_steps;
    }

    let field = SpaceTimeField::from_slices(grid.clone(), std::mem::take(&mut engine.history))?;
    let masses = field.masses();
    let (min_value, max_value) = field.min_max();
    let alpha_steps = ((alpha / dt - 1e-9).ceil() as usize).min(grid.steps);
    let mut initial_sup_dev: f64 = 0.0;
    for i in 0..=alpha_steps {
        for (u, f) in field.slice(i).iter().zip(&f_samples) {
            initial_sup_dev = initial_sup_dev.max((u - f).abs());
        }
    }

    let report = SolveReport {
        masses,
        min_value,
        max_value,
        strip_iterations,
        strip_ratios,
        contraction_certificate: certificate,
        discrete_contraction: dk.contraction,
        alpha,
        dt,
        strip_steps,
        lags: dk.lags(),
        initial_sup_dev,
        picard_tol: options.picard_tol,
    };
    Ok((field, report))
}

fn discretize_kernel_cached(kernel: &dyn Kernel, grid: &Grid) -> Result<DiscreteKernel> {
    crate::grid::discretize_kernel(kernel, grid)
}
