//! The verification suite: one function per acceptance criterion, each with
//! its tolerances pinned, plus deterministic artifact emission.
//!
//! Criteria 5/7 share one solve and criteria 9/10 share one rate study; the
//! shared runs are cached so the suite and the test harness both reuse them.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use ctrw::analysis::{
    default_sample_points, rate_study, scaling_identity_check, matched_grids, RatePolicy,
    RateStudy, TestFunction,
};
use ctrw::grid::{discretize_kernel, Grid, Spectral};
use ctrw::heat_ref::{lipschitz_lemma_constant, lipschitz_rate_check};
use ctrw::kernels::{closed_form_moment, compute_moments, HeatBallKernel, Kernel, MomentReport};
use ctrw::oracle::{direct_convolve, neumann_solve};
use ctrw::solver::{solve, InitialDatum, SolveOptions, SolveReport};
use ctrw::{Error, Result};

pub const HEATBALL_ALPHA: f64 = 0.07957747154594767; // 1/(4 pi)

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    /// Named measured quantities, for the report and determinism checks.
    pub measured: Vec<(String, f64)>,
    pub threshold: String,
}

impl CriterionResult {
    fn new(id: u32, name: &str, threshold: &str) -> Self {
        CriterionResult {
            id,
            name: name.into(),
            pass: true,
            measured: Vec::new(),
            threshold: threshold.into(),
        }
    }

    fn check(&mut self, label: &str, value: f64, ok: bool) {
        self.measured.push((label.into(), value));
        self.pass &= ok;
    }

    pub fn line(&self) -> String {
        let mut s = format!(
            "criterion {:02} {}: {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name
        );
        for (label, value) in &self.measured {
            let _ = write!(s, " {label}={value:.3e}");
        }
        s
    }
}

fn heatball_moments(dim: usize) -> &'static MomentReport {
    static M1: OnceLock<MomentReport> = OnceLock::new();
    static M2: OnceLock<MomentReport> = OnceLock::new();
    let cell = if dim == 1 { &M1 } else { &M2 };
    cell.get_or_init(|| {
        compute_moments(&HeatBallKernel::new(dim).expect("dim"), 1e-8).expect("moments")
    })
}

/// Criterion 1: heat-ball normalization, quadrature mass within 1e-6.
pub fn c1_heatball_normalization() -> CriterionResult {
    let mut res = CriterionResult::new(1, "heat-ball normalization", "|mass - 1| <= 1e-6");
    for dim in [1usize, 2] {
        let mass = heatball_moments(dim).mass;
        res.check(&format!("mass_n{dim}"), mass, (mass - 1.0).abs() <= 1e-6);
    }
    res
}

/// Criterion 2: |mu + nu| <= 1e-5 and quadrature mu against the Gamma closed
/// form to relative 1e-4.
pub fn c2_moment_lemma() -> CriterionResult {
    let mut res = CriterionResult::new(
        2,
        "moment lemma",
        "|mu + nu| <= 1e-5 and |mu| vs closed form <= 1e-4 relative",
    );
    for dim in [1usize, 2] {
        let m = heatball_moments(dim);
        let cf = closed_form_moment(dim);
        res.check(
            &format!("mu_plus_nu_n{dim}"),
            m.mu + m.nu,
            (m.mu + m.nu).abs() <= 1e-5,
        );
        let rel = (-m.mu - cf).abs() / cf;
        res.check(&format!("mu_rel_err_n{dim}"), rel, rel <= 1e-4);
    }
    res
}

/// Criterion 3: weak-limit residuals decay with consecutive ratio >= 1.8.
pub fn c3_weak_limit() -> &'static (CriterionResult, Vec<(f64, f64)>) {
    static CELL: OnceLock<(CriterionResult, Vec<(f64, f64)>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut res = CriterionResult::new(
            3,
            "weak-limit order",
            "residual(r)/residual(r/2) >= 1.8 for r in {0.2, 0.1, 0.05}",
        );
        let kernel = HeatBallKernel::new(1).expect("dim 1");
        let moments = heatball_moments(1);
        let phi = TestFunction::Gaussian {
            amp: 1.0,
            ax: 40.0,
            bt: 900.0,
            x0: vec![0.5],
            t0: 0.05,
        };
        let samples = default_sample_points(1);
        let mut rows = Vec::new();
        for &r in &[0.2, 0.1, 0.05] {
            let residual =
                weak_limit_or_nan(&kernel, moments, &phi, r, &samples);
            rows.push((r, residual));
        }
        for w in rows.windows(2) {
            let ratio = w[0].1 / w[1].1;
            res.check(
                &format!("ratio_r{}", w[0].0),
                ratio,
                ratio.is_finite() && ratio >= 1.8,
            );
        }
        (res, rows)
    })
}

fn weak_limit_or_nan(
    kernel: &dyn Kernel,
    moments: &MomentReport,
    phi: &TestFunction,
    r: f64,
    samples: &[(Vec<f64>, f64)],
) -> f64 {
    ctrw::analysis::weak_limit_residual(kernel, moments, phi, r, samples, 1e-11)
        .unwrap_or(f64::NAN)
}

/// Criterion 4: constants are exact over horizon 4 alpha.
pub fn c4_solver_constants() -> CriterionResult {
    let mut res = CriterionResult::new(4, "solver exactness on constants", "sup |u - 1| <= 1e-12");
    let kernel = HeatBallKernel::new(1).expect("dim 1");
    let grid = Grid::new(1, 1.0, 256, HEATBALL_ALPHA / 16.0, 4.0 * HEATBALL_ALPHA).expect("grid");
    let options = SolveOptions {
        alpha: Some(HEATBALL_ALPHA),
        ..Default::default()
    };
    // degenerate shortcut
    match solve(&kernel, &InitialDatum::constant(1.0), &grid, &options) {
        Ok((field, _)) => {
            let dev = field
                .data()
                .iter()
                .fold(0.0_f64, |m, &v| m.max((v - 1.0).abs()));
            res.check("sup_dev_shortcut", dev, dev <= 1e-12);
        }
        Err(_) => res.check("sup_dev_shortcut", f64::NAN, false),
    }
    // full fixed-point path with loose bounds metadata
    match solve(
        &kernel,
        &InitialDatum::constant_loose(1.0, 0.5),
        &grid,
        &options,
    ) {
        Ok((field, _)) => {
            let dev = field
                .data()
                .iter()
                .fold(0.0_f64, |m, &v| m.max((v - 1.0).abs()));
            res.check("sup_dev_full_path", dev, dev <= 1e-12);
        }
        Err(_) => res.check("sup_dev_full_path", f64::NAN, false),
    }
    res
}

/// The shared solve behind criteria 5 and 7: gaussian bump, M = 1024,
/// horizon 4 alpha.
pub fn mass_run() -> &'static Result<SolveReport> {
    static CELL: OnceLock<Result<SolveReport>> = OnceLock::new();
    CELL.get_or_init(|| {
        let kernel = HeatBallKernel::new(1)?;
        let grid = Grid::new(1, 1.0, 1024, HEATBALL_ALPHA / 16.0, 4.0 * HEATBALL_ALPHA)?;
        let datum = InitialDatum::gaussian_bump(1.0, 0.05, 0.5, 1, 1.0);
        let options = SolveOptions {
            picard_tol: 1e-10,
            alpha: Some(HEATBALL_ALPHA),
            ..Default::default()
        };
        let (_, report) = solve(&kernel, &datum, &grid, &options)?;
        Ok(report)
    })
}

/// Criterion 5: relative mass drift <= 1e-10 at every step.
pub fn c5_mass_conservation() -> CriterionResult {
    let mut res = CriterionResult::new(
        5,
        "mass conservation",
        "|mass(t) - mass(0)| <= 1e-10 |mass(0)| at every step",
    );
    match mass_run() {
        Ok(report) => {
            let m0 = report.masses[0];
            let drift = report
                .masses
                .iter()
                .fold(0.0_f64, |m, &v| m.max((v - m0).abs()))
                / m0.abs();
            res.check("max_rel_drift", drift, drift <= 1e-10);
        }
        Err(e) => {
            res.check("max_rel_drift", f64::NAN, false);
            res.threshold = format!("solve failed: {e}");
        }
    }
    res
}

/// Criterion 7: Picard ratios below the discrete contraction constant plus
/// 0.02 and iteration counts within the geometric bound.
pub fn c7_contraction_certificate() -> CriterionResult {
    let mut res = CriterionResult::new(
        7,
        "contraction certificate",
        "ratios <= discrete contraction + 0.02; iterations <= geometric bound + 2",
    );
    match mass_run() {
        Ok(report) => {
            let mut worst_ratio: f64 = 0.0;
            for ratios in &report.strip_ratios {
                for &r in ratios {
                    worst_ratio = worst_ratio.max(r);
                }
            }
            res.check(
                "worst_ratio",
                worst_ratio,
                worst_ratio <= report.discrete_contraction + 0.02,
            );
            let c = report.contraction_certificate;
            let bound = ((report.picard_tol * (1.0 - c)).ln() / c.ln()).ceil() + 2.0;
            let worst_iters = *report.strip_iterations.iter().max().unwrap_or(&0) as f64;
            res.check("worst_iterations", worst_iters, worst_iters <= bound);
            res.check("certificate", c, c < 1.0);
        }
        Err(_) => res.check("worst_ratio", f64::NAN, false),
    }
    res
}

/// Criterion 6: datum bounds hold pointwise and ordered data give ordered
/// solutions.
pub fn c6_bounds_and_comparison() -> CriterionResult {
    let mut res = CriterionResult::new(
        6,
        "bounds and comparison",
        "min f <= u <= max f exactly; f <= g implies u_f <= u_g + 1e-12",
    );
    let run = || -> Result<(f64, f64)> {
        let kernel = HeatBallKernel::new(1)?;
        let grid = Grid::new(1, 1.0, 256, HEATBALL_ALPHA / 16.0, 2.0 * HEATBALL_ALPHA)?;
        let f = InitialDatum::gaussian_bump(0.6, 0.06, 0.5, 1, 1.0);
        let g = InitialDatum::raised_cosine(0.1, 0.7, 0.5, 1.0);
        let fs = f.sample(&grid)?;
        let gs = g.sample(&grid)?;
        for (a, b) in fs.iter().zip(&gs) {
            if a > b {
                return Err(Error::Configuration(
                    "comparison pair is not ordered".into(),
                ));
            }
        }
        let options = SolveOptions {
            alpha: Some(HEATBALL_ALPHA),
            ..Default::default()
        };
        let (uf, rf) = solve(&kernel, &f, &grid, &options)?;
        let (ug, rg) = solve(&kernel, &g, &grid, &options)?;
        let bounds_ok = rf.min_value >= f.inf
            && rf.max_value <= f.sup
            && rg.min_value >= g.inf
            && rg.max_value <= g.sup;
        if !bounds_ok {
            return Err(Error::InvalidState("bounds violated".into()));
        }
        let mut worst = f64::NEG_INFINITY;
        for (a, b) in uf.data().iter().zip(ug.data()) {
            worst = worst.max(a - b);
        }
        Ok((worst, rf.max_value - f.sup))
    };
    match run() {
        Ok((worst_excess, bound_gap)) => {
            res.check("max(u_f - u_g)", worst_excess, worst_excess <= 1e-12);
            res.check("bounds_gap", bound_gap, bound_gap <= 0.0);
        }
        Err(e) => {
            res.check("max(u_f - u_g)", f64::NAN, false);
            res.threshold = format!("{e}");
        }
    }
    res
}

/// Criterion 8: strip solver vs Neumann series, FFT vs direct convolution.
pub fn c8_oracle_equivalence() -> CriterionResult {
    let mut res = CriterionResult::new(
        8,
        "oracle equivalence",
        "|strip - series| <= 1e-8 + 2 picard_tol; FFT vs direct <= 1e-10 relative",
    );
    let run = || -> Result<f64> {
        let kernel = HeatBallKernel::new(1)?;
        let grid = Grid::new(1, 1.0, 256, HEATBALL_ALPHA / 16.0, 2.0 * HEATBALL_ALPHA)?;
        let datum = InitialDatum::gaussian_bump(1.0, 0.05, 0.5, 1, 1.0);
        let options = SolveOptions {
            picard_tol: 1e-10,
            alpha: Some(HEATBALL_ALPHA),
            ..Default::default()
        };
        let (u_strip, _) = solve(&kernel, &datum, &grid, &options)?;
        let dk = discretize_kernel(&kernel, &u_strip.grid)?;
        let tails = dk.tail_weights(u_strip.grid.steps);
        let f = datum.sample(&u_strip.grid)?;
        let u_series = neumann_solve(&dk, &tails, &f, 1e-9, 10_000)?;
        u_strip.sup_diff(&u_series)
    };
    match run() {
        Ok(diff) => res.check("engine_sup_diff", diff, diff <= 1e-8 + 2e-10),
        Err(e) => {
            res.check("engine_sup_diff", f64::NAN, false);
            res.threshold = format!("{e}");
        }
    }
    // FFT vs direct summation on 100 seeded random slices
    let conv = || -> Result<f64> {
        use rand::{Rng, SeedableRng};
        let grid = Grid::new(1, 1.0, 128, 0.01, 0.1)?;
        let sp = Spectral::new(&grid);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7_777);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let f: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..128).map(|_| rng.gen_range(0.0..1.0)).collect();
            let a = sp.convolve(&f, &w)?;
            let b = direct_convolve(&grid, &f, &w)?;
            let scale = b.iter().fold(1e-300_f64, |m, v| m.max(v.abs()));
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).abs() / scale);
            }
        }
        Ok(worst)
    };
    match conv() {
        Ok(worst) => res.check("conv_rel_diff", worst, worst <= 1e-10),
        Err(e) => {
            res.check("conv_rel_diff", f64::NAN, false);
            res.threshold = format!("{e}");
        }
    }
    res
}

/// The shared rate study behind criteria 9 and 10: triangle wave, gamma = 1,
/// r halving from 0.2, parabolically refined grids.
pub fn rate_run() -> &'static Result<RateStudy> {
    static CELL: OnceLock<Result<RateStudy>> = OnceLock::new();
    CELL.get_or_init(|| {
        let base: Arc<dyn Kernel> = Arc::new(HeatBallKernel::new(1)?);
        let datum = InitialDatum::triangle_wave(1.0, 1.0);
        let policy = RatePolicy {
            box_len: 1.0,
            base_points: 256,
            strip_steps: 32,
            horizon_alphas: 4.0,
            picard_tol: 1e-10,
            mean_value_frac: 0.05,
        };
        rate_study(base, &datum, &[0.2, 0.1, 0.05], &policy)
    })
}

/// Criterion 9: maximum principle on the rate-study rows.
pub fn c9_max_principle() -> CriterionResult {
    let mut res = CriterionResult::new(
        9,
        "maximum principle",
        "future sup <= initial-strip sup + 1e-6, mean-value residual within tolerance",
    );
    match rate_run() {
        Ok(study) => {
            if study.rows.is_empty() || !study.failures.is_empty() {
                res.check("rows", study.rows.len() as f64, false);
            }
            for row in &study.rows {
                let a = &row.audit;
                res.check(
                    &format!("future_minus_initial_r{}", row.r),
                    a.future_sup - a.initial_sup,
                    a.principle_holds,
                );
                res.check(
                    &format!("mv_residual_r{}", row.r),
                    a.mean_value_residual,
                    a.mean_value_ok,
                );
            }
        }
        Err(e) => {
            res.check("rows", f64::NAN, false);
            res.threshold = format!("{e}");
        }
    }
    res
}

/// Criterion 10: fitted rate slope >= 0.8 and errors monotone within 5%.
pub fn c10_rate() -> CriterionResult {
    let mut res = CriterionResult::new(
        10,
        "temperature convergence rate",
        "log-log slope >= 0.8; errors non-increasing within 5%",
    );
    match rate_run() {
        Ok(study) => {
            match study.slope {
                Some(slope) => res.check("slope", slope, slope >= 0.8),
                None => res.check("slope", f64::NAN, false),
            }
            for w in study.rows.windows(2) {
                let ok = w[1].sup_error <= 1.05 * w[0].sup_error;
                res.check(&format!("error_r{}", w[1].r), w[1].sup_error, ok);
            }
        }
        Err(e) => {
            res.check("slope", f64::NAN, false);
            res.threshold = format!("{e}");
        }
    }
    res
}

/// Criterion 11: parabolic scaling identity at r = 1/2 within 5 picard_tol.
pub fn c11_scaling_identity() -> CriterionResult {
    let mut res = CriterionResult::new(
        11,
        "scaling identity",
        "|u(J_r, f) - [u(J, f(r.))]_r| <= 5e-10 at r = 1/2",
    );
    let run = || -> Result<f64> {
        let kernel: Arc<dyn Kernel> = Arc::new(HeatBallKernel::new(1)?);
        let r = 0.5;
        let options = SolveOptions {
            picard_tol: 1e-10,
            alpha: Some(HEATBALL_ALPHA * r * r),
            strip_steps: Some(8),
            ..Default::default()
        };
        let (g1, g2) = matched_grids(1, 1.0, 256, HEATBALL_ALPHA, r, 8, 4.0)?;
        scaling_identity_check(
            kernel,
            &InitialDatum::cosine(1.0, 1.0),
            r,
            &g1,
            &g2,
            &options,
        )
    };
    match run() {
        Ok(d) => res.check("sup_discrepancy", d, d <= 5e-10),
        Err(e) => {
            res.check("sup_discrepancy", f64::NAN, false);
            res.threshold = format!("{e}");
        }
    }
    res
}

/// Criterion 12: the temperature initial layer stays below twice the lemma
/// constant uniformly on (0, 0.1].
pub fn c12_lipschitz_layer() -> CriterionResult {
    let mut res = CriterionResult::new(
        12,
        "temperature Lipschitz layer",
        "sup_t ratio <= 2 * quadrature lemma constant",
    );
    let run = || -> Result<(f64, f64)> {
        let grid = Grid::new(1, 1.0, 2048, 0.01, 0.1)?;
        let datum = InitialDatum::triangle_wave(1.0, 1.0);
        let times: Vec<f64> = (0..40)
            .map(|i| 1e-4 * (0.1_f64 / 1e-4).powf(i as f64 / 39.0))
            .collect();
        let report = lipschitz_rate_check(&datum, &grid, &times)?;
        let c_star = lipschitz_lemma_constant(1, 1.0)?;
        Ok((report.max_ratio, c_star))
    };
    match run() {
        Ok((ratio, c_star)) => {
            res.check("max_ratio", ratio, ratio <= 2.0 * c_star);
            res.check("lemma_constant", c_star, c_star.is_finite());
        }
        Err(e) => {
            res.check("max_ratio", f64::NAN, false);
            res.threshold = format!("{e}");
        }
    }
    res
}

/// Criterion 13: byte-identical data outputs across two sequential runs.
///
/// Spawns the current executable twice in probe mode (a reduced data
/// pipeline) with --workers 1 and compares the output trees.
pub fn c13_determinism(out_dir: &Path) -> CriterionResult {
    let mut res = CriterionResult::new(
        13,
        "determinism",
        "two sequential runs produce byte-identical data outputs",
    );
    let run = || -> Result<bool> {
        let exe = std::env::current_exe()?;
        let d1 = out_dir.join("probe1");
        let d2 = out_dir.join("probe2");
        for d in [&d1, &d2] {
            std::fs::create_dir_all(d)?;
            let status = std::process::Command::new(&exe)
                .args([
                    "--workers",
                    "1",
                    "--out",
                    d.to_str().ok_or_else(|| {
                        Error::Configuration("output path is not valid UTF-8".into())
                    })?,
                    "selftest-probe",
                ])
                .status()?;
            if !status.success() {
                return Err(Error::InvalidState(format!(
                    "determinism probe exited with {status}"
                )));
            }
        }
        dirs_identical(&d1, &d2)
    };
    match run() {
        Ok(identical) => res.check("identical", identical as u64 as f64, identical),
        Err(e) => {
            res.check("identical", f64::NAN, false);
            res.threshold = format!("{e}");
        }
    }
    res
}

/// Recursively compares two directory trees byte-wise.
pub fn dirs_identical(a: &Path, b: &Path) -> Result<bool> {
    let list = |d: &Path| -> Result<Vec<std::path::PathBuf>> {
        let mut v = Vec::new();
        for entry in std::fs::read_dir(d)? {
            v.push(entry?.path());
        }
        v.sort();
        Ok(v)
    };
    let ea = list(a)?;
    let eb = list(b)?;
    if ea.len() != eb.len() {
        return Ok(false);
    }
    for (pa, pb) in ea.iter().zip(&eb) {
        if pa.file_name() != pb.file_name() {
            return Ok(false);
        }
        if pa.is_dir() != pb.is_dir() {
            return Ok(false);
        }
        if pa.is_dir() {
            if !dirs_identical(pa, pb)? {
                return Ok(false);
            }
        } else if std::fs::read(pa)? != std::fs::read(pb)? {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Artifact emission
// ---------------------------------------------------------------------------

fn write_weaklimit_csv(out: &Path, rows: &[(f64, f64)]) -> Result<()> {
    let mut s = String::from("r,residual\n");
    for (r, v) in rows {
        let _ = writeln!(s, "{r:e},{v:e}");
    }
    std::fs::write(out.join("weaklimit.csv"), s)?;
    Ok(())
}

fn write_rate_csv(out: &Path, study: &RateStudy) -> Result<()> {
    let slope = study.slope.unwrap_or(f64::NAN);
    let mut s = String::from("r,error,slope\n");
    for row in &study.rows {
        let _ = writeln!(s, "{:e},{:e},{slope:e}", row.r, row.sup_error);
    }
    std::fs::write(out.join("rate_study.csv"), s)?;
    // gnuplot-compatible two-column file
    let mut dat = String::from("# r error\n");
    for row in &study.rows {
        let _ = writeln!(dat, "{:e} {:e}", row.r, row.sup_error);
    }
    std::fs::write(out.join("rate_study.dat"), dat)?;
    Ok(())
}

fn write_moments_json(out: &Path) -> Result<()> {
    for dim in [1usize, 2] {
        let m = heatball_moments(dim);
        let text = serde_json::to_string_pretty(m)
            .map_err(|e| Error::InvalidState(format!("moments serialization: {e}")))?;
        std::fs::write(out.join(format!("moments_n{dim}.json")), text + "\n")?;
    }
    Ok(())
}

fn write_report(out: &Path, results: &[CriterionResult]) -> Result<()> {
    let text = serde_json::to_string_pretty(results)
        .map_err(|e| Error::InvalidState(format!("report serialization: {e}")))?;
    std::fs::write(out.join("report.json"), text + "\n")?;
    let mut csv = String::from("id,pass,name\n");
    for r in results {
        let _ = writeln!(csv, "{},{},{}", r.id, r.pass, r.name);
    }
    std::fs::write(out.join("criteria.csv"), csv)?;
    Ok(())
}

/// Reduced deterministic data pipeline used by the determinism probe: the
/// moment reports, one small solve with field outputs, and one weak-limit row.
pub fn run_probe(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    write_moments_json(out_dir)?;
    let kernel = HeatBallKernel::new(1)?;
    let grid = Grid::new(1, 1.0, 256, HEATBALL_ALPHA / 16.0, 2.0 * HEATBALL_ALPHA)?;
    let datum = InitialDatum::gaussian_bump(1.0, 0.05, 0.5, 1, 1.0);
    let options = SolveOptions {
        alpha: Some(HEATBALL_ALPHA),
        ..Default::default()
    };
    let (field, report) = solve(&kernel, &datum, &grid, &options)?;
    field.write_binary(&out_dir.join("field.bin"))?;
    field.write_csv(&out_dir.join("field.csv"))?;
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::InvalidState(format!("report serialization: {e}")))?;
    std::fs::write(out_dir.join("solve_report.json"), text + "\n")?;
    let phi = TestFunction::Gaussian {
        amp: 1.0,
        ax: 40.0,
        bt: 900.0,
        x0: vec![0.5],
        t0: 0.05,
    };
    let residual = ctrw::analysis::weak_limit_residual(
        &kernel,
        heatball_moments(1),
        &phi,
        0.1,
        &default_sample_points(1),
        1e-11,
    )?;
    write_weaklimit_csv(out_dir, &[(0.1, residual)])?;
    Ok(())
}

/// Runs the full suite, printing one line per criterion and writing the data
/// artifacts. `spawn_determinism` controls whether criterion 13 launches its
/// probe subprocesses (the probes themselves never do).
pub fn run_all(out_dir: &Path, spawn_determinism: bool) -> Result<Vec<CriterionResult>> {
    std::fs::create_dir_all(out_dir)?;
    let mut results = Vec::new();
    results.push(c1_heatball_normalization());
    results.push(c2_moment_lemma());
    let (c3, weak_rows) = c3_weak_limit();
    results.push(c3.clone());
    write_weaklimit_csv(out_dir, weak_rows)?;
    results.push(c4_solver_constants());
    results.push(c5_mass_conservation());
    results.push(c6_bounds_and_comparison());
    results.push(c7_contraction_certificate());
    results.push(c8_oracle_equivalence());
    results.push(c9_max_principle());
    results.push(c10_rate());
    if let Ok(study) = rate_run() {
        write_rate_csv(out_dir, study)?;
    }
    results.push(c11_scaling_identity());
    results.push(c12_lipschitz_layer());
    if spawn_determinism {
        results.push(c13_determinism(out_dir));
    }
    write_moments_json(out_dir)?;
    results.sort_by_key(|r| r.id);
    write_report(out_dir, &results)?;
    for r in &results {
        println!("{}", r.line());
    }
    Ok(results)
}
