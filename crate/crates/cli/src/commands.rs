//! Subcommand implementations: each reads the merged configuration, writes
//! its outputs under the output directory and prints a one-line summary.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use ctrw::analysis::{
    default_sample_points, matched_grids, max_principle_audit, rate_study, scaling_identity_check,
    RatePolicy, TestFunction,
};
use ctrw::grid::discretize_kernel;
use ctrw::heat_ref::{heat_solve, lipschitz_lemma_constant, lipschitz_rate_check};
use ctrw::kernels::{compute_moments, rescale, HeatBallKernel, Kernel};
use ctrw::oracle::neumann_solve;
use ctrw::solver::{solve, SolveOptions};
use ctrw::{Error, Result, SpaceTimeField};

use crate::config::Config;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidState(format!("serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn write_field(out: &Path, stem: &str, field: &SpaceTimeField) -> Result<()> {
    field.write_binary(&out.join(format!("{stem}.bin")))?;
    if field.grid.dim == 1 {
        field.write_csv(&out.join(format!("{stem}.csv")))?;
    }
    Ok(())
}

/// `solve`: run the strip solver (or the Neumann engine) and emit the field
/// plus a JSON report.
pub fn cmd_solve(cfg: &Config, out: &Path, engine: &str, strip_steps: Option<usize>) -> Result<()> {
    let kernel = cfg.kernel.build()?;
    let grid = cfg.grid.build(cfg.kernel.dim)?;
    let datum = cfg.datum.build(cfg.kernel.dim, cfg.grid.box_len)?;
    let options = SolveOptions {
        picard_tol: cfg.picard_tol(),
        quad_tol: cfg.quad_tol(),
        strip_steps: strip_steps.or(cfg.strip_steps),
        max_iterations: 500,
        ..Default::default()
    };
    match engine {
        "strip" => {
            let (field, report) = solve(kernel.as_ref(), &datum, &grid, &options)?;
            write_field(out, "field", &field)?;
            write_json(&out.join("report.json"), &report)?;
            let m0 = report.masses[0];
            let drift = report
                .masses
                .iter()
                .fold(0.0_f64, |m, &v| m.max((v - m0).abs()))
                / m0.abs().max(1e-300);
            println!(
                "solve: steps={} strips={} mass_drift={drift:.3e} min={:.6e} max={:.6e}",
                field.grid.steps,
                report.strip_iterations.len(),
                report.min_value,
                report.max_value
            );
        }
        "neumann" => {
            let alpha = compute_moments(kernel.as_ref(), cfg.quad_tol())?.alpha;
            let (dt, _) = ctrw::solver::adjust_time_step(alpha, grid.dt, options.strip_steps);
            let adjusted = ctrw::Grid::new(grid.dim, grid.box_len, grid.points, dt, grid.horizon())?;
            let dk = discretize_kernel(kernel.as_ref(), &adjusted)?;
            let tails = dk.tail_weights(adjusted.steps);
            let f = datum.sample(&adjusted)?;
            let field = neumann_solve(&dk, &tails, &f, cfg.picard_tol(), 10_000)?;
            write_field(out, "field", &field)?;
            let masses = field.masses();
            let m0 = masses[0];
            let drift = masses
                .iter()
                .fold(0.0_f64, |m, &v| m.max((v - m0).abs()))
                / m0.abs().max(1e-300);
            println!(
                "solve(neumann): steps={} mass_drift={drift:.3e}",
                field.grid.steps
            );
        }
        other => {
            return Err(Error::Configuration(format!(
                "unknown engine {other:?} (expected \"strip\" or \"neumann\")"
            )))
        }
    }
    Ok(())
}

/// `heat`: spectral temperature with the same outputs as `solve`.
pub fn cmd_heat(cfg: &Config, out: &Path) -> Result<()> {
    let grid = cfg.grid.build(cfg.kernel.dim)?;
    let datum = cfg.datum.build(cfg.kernel.dim, cfg.grid.box_len)?;
    let field = heat_solve(&datum, &grid)?;
    write_field(out, "heat", &field)?;
    let (lo, hi) = field.min_max();
    println!("heat: steps={} min={lo:.6e} max={hi:.6e}", grid.steps);
    Ok(())
}

/// `moments`: kernel scalars as JSON.
pub fn cmd_moments(cfg: &Config, out: &Path) -> Result<()> {
    let kernel = cfg.kernel.build()?;
    let m = compute_moments(kernel.as_ref(), cfg.quad_tol())?;
    write_json(&out.join("moments.json"), &m)?;
    println!(
        "moments: mu={:.6e} nu={:.6e} alpha={:.6e} contraction={:.6e} mass={:.12e}",
        m.mu, m.nu, m.alpha, m.contraction, m.mass
    );
    Ok(())
}

/// `weaklimit`: residual table over a list of r values.
pub fn cmd_weaklimit(cfg: &Config, out: &Path, r_list: &[f64], testfn: &str) -> Result<()> {
    let kernel = cfg.kernel.build()?;
    let dim = cfg.kernel.dim;
    let moments = compute_moments(kernel.as_ref(), cfg.quad_tol().min(1e-10))?;
    let phi = match testfn {
        "gaussian" => TestFunction::Gaussian {
            amp: 1.0,
            ax: 40.0,
            bt: 900.0,
            x0: vec![0.5; dim],
            t0: 0.05,
        },
        "poly-gaussian" => TestFunction::PolyGaussian {
            c0: 0.3,
            c: vec![1.7; dim],
            ax: 25.0,
            bt: 400.0,
            x0: vec![0.45; dim],
            t0: 0.04,
        },
        other => {
            return Err(Error::Configuration(format!(
                "unknown test function {other:?}"
            )))
        }
    };
    let samples = default_sample_points(dim);
    let mut csv = String::from("r,residual\n");
    let mut last: Option<f64> = None;
    let mut summary = String::from("weaklimit:");
    for &r in r_list {
        let residual = ctrw::analysis::weak_limit_residual(
            kernel.as_ref(),
            &moments,
            &phi,
            r,
            &samples,
            1e-11,
        )?;
        let _ = writeln!(csv, "{r:e},{residual:e}");
        if let Some(prev) = last {
            let _ = write!(summary, " ratio={:.2}", prev / residual);
        }
        let _ = write!(summary, " res({r})={residual:.3e}");
        last = Some(residual);
    }
    std::fs::write(out.join("weaklimit.csv"), csv)?;
    println!("{summary}");
    Ok(())
}

#[derive(Serialize)]
struct RateStudyOutput<'a> {
    slope: Option<f64>,
    rows: &'a [ctrw::analysis::RateRow],
    failures: &'a [(f64, String)],
}

/// `rate-study`: solves across halving r with parabolically refined grids.
pub fn cmd_rate_study(
    cfg: &Config,
    out: &Path,
    r0: f64,
    rows: usize,
    base_points: usize,
    strip_steps: usize,
) -> Result<()> {
    let kernel = cfg.kernel.build()?;
    if cfg.kernel.r#type != "heatball" {
        return Err(Error::Configuration(
            "rate studies compare against temperatures; the kernel family must be heatball".into(),
        ));
    }
    let datum = cfg.datum.build(cfg.kernel.dim, cfg.grid.box_len)?;
    let r_list: Vec<f64> = (0..rows).map(|i| r0 / 2f64.powi(i as i32)).collect();
    let policy = RatePolicy {
        box_len: cfg.grid.box_len,
        base_points,
        strip_steps,
        horizon_alphas: 4.0,
        picard_tol: cfg.picard_tol(),
        mean_value_frac: 0.05,
    };
    let study = rate_study(kernel, &datum, &r_list, &policy)?;
    let mut csv = String::from("r,error,slope\n");
    let slope = study.slope.unwrap_or(f64::NAN);
    for row in &study.rows {
        let _ = writeln!(csv, "{:e},{:e},{slope:e}", row.r, row.sup_error);
    }
    std::fs::write(out.join("rate_study.csv"), csv)?;
    let mut dat = String::from("# r error\n");
    for row in &study.rows {
        let _ = writeln!(dat, "{:e} {:e}", row.r, row.sup_error);
    }
    std::fs::write(out.join("rate_study.dat"), dat)?;
    write_json(
        &out.join("rate_study.json"),
        &RateStudyOutput {
            slope: study.slope,
            rows: &study.rows,
            failures: &study.failures,
        },
    )?;
    println!(
        "rate-study: rows={} slope={}",
        study.rows.len(),
        study
            .slope
            .map(|s| format!("{s:.4}"))
            .unwrap_or_else(|| "skipped (degenerate)".into())
    );
    if !study.failures.is_empty() {
        return Err(Error::Numerical {
            what: format!("{} rate rows failed", study.failures.len()),
            achieved: study.slope,
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct MaxPrincipleOutput {
    r: f64,
    audit: ctrw::analysis::AuditReport,
}

/// `maxprinciple`: one rescaled solve against the temperature, audited.
/// Verification failure (exit 1) when the principle does not hold.
pub fn cmd_maxprinciple(cfg: &Config, out: &Path, r: f64) -> Result<bool> {
    if cfg.kernel.r#type != "heatball" {
        return Err(Error::Configuration(
            "the maximum-principle audit compares against temperatures; use the heatball kernel"
                .into(),
        ));
    }
    let base: Arc<dyn Kernel> = Arc::new(HeatBallKernel::new(cfg.kernel.dim)?);
    let alpha = compute_moments(base.as_ref(), cfg.quad_tol())?.alpha;
    let kr = rescale(base, r)?;
    let alpha_r = alpha * r * r;
    let datum = cfg.datum.build(cfg.kernel.dim, cfg.grid.box_len)?;
    let strip_steps = cfg.strip_steps.unwrap_or(32);
    let request = ctrw::Grid::new(
        cfg.kernel.dim,
        cfg.grid.box_len,
        cfg.grid.points,
        alpha_r / (2.0 * strip_steps as f64),
        4.0 * alpha_r,
    )?;
    let options = SolveOptions {
        picard_tol: cfg.picard_tol(),
        alpha: Some(alpha_r),
        strip_steps: Some(strip_steps),
        max_iterations: 500,
        ..Default::default()
    };
    let (u, _) = solve(&kr, &datum, &request, &options)?;
    let temps = heat_solve(&datum, &u.grid)?;
    let mut w = SpaceTimeField::zeros(u.grid.clone());
    for i in 0..=u.grid.steps {
        let (us, ts) = (u.slice(i), temps.slice(i));
        for (z, v) in w.slice_mut(i).iter_mut().enumerate() {
            *v = us[z] - ts[z];
        }
    }
    let sup = w.data().iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let dk = discretize_kernel(&kr, &u.grid)?;
    let alpha_steps = ((alpha_r / u.grid.dt - 1e-9).ceil() as usize).min(u.grid.steps);
    let audit = max_principle_audit(&w, &dk, alpha_steps, 0.05 * sup.max(1e-300), 1e-6)?;
    let holds = audit.principle_holds;
    write_json(&out.join("maxprinciple.json"), &MaxPrincipleOutput { r, audit })?;
    println!(
        "maxprinciple: r={r} holds={holds} (initial sup vs future sup in maxprinciple.json)"
    );
    Ok(holds)
}

#[derive(Serialize)]
struct ScalingOutput {
    r: f64,
    discrepancy: f64,
    threshold: f64,
}

/// `scaling-check`: the parabolic scaling identity at one r.
/// Verification failure (exit 1) when the discrepancy exceeds 5 picard_tol.
pub fn cmd_scaling_check(cfg: &Config, out: &Path, r: f64) -> Result<bool> {
    let kernel = cfg.kernel.build()?;
    let alpha = compute_moments(kernel.as_ref(), cfg.quad_tol())?.alpha;
    let datum = cfg.datum.build(cfg.kernel.dim, cfg.grid.box_len)?;
    let strip_steps = cfg.strip_steps.unwrap_or(8);
    let options = SolveOptions {
        picard_tol: cfg.picard_tol(),
        alpha: Some(alpha * r * r),
        strip_steps: Some(strip_steps),
        max_iterations: 500,
        ..Default::default()
    };
    let (g1, g2) = matched_grids(
        cfg.kernel.dim,
        cfg.grid.box_len,
        cfg.grid.points,
        alpha,
        r,
        strip_steps,
        4.0,
    )?;
    let discrepancy = scaling_identity_check(kernel, &datum, r, &g1, &g2, &options)?;
    let threshold = 5.0 * cfg.picard_tol();
    write_json(
        &out.join("scaling_check.json"),
        &ScalingOutput {
            r,
            discrepancy,
            threshold,
        },
    )?;
    println!("scaling-check: r={r} discrepancy={discrepancy:.3e} threshold={threshold:.3e}");
    Ok(discrepancy <= threshold)
}

/// `lipschitz`: the temperature initial-layer ratio table.
pub fn cmd_lipschitz(cfg: &Config, out: &Path) -> Result<bool> {
    let grid = cfg.grid.build(cfg.kernel.dim)?;
    let datum = cfg.datum.build(cfg.kernel.dim, cfg.grid.box_len)?;
    let times: Vec<f64> = (0..40)
        .map(|i| 1e-4 * (0.1_f64 / 1e-4).powf(i as f64 / 39.0))
        .collect();
    let report = lipschitz_rate_check(&datum, &grid, &times)?;
    let c_star = lipschitz_lemma_constant(cfg.kernel.dim, report.gamma)?;
    let mut csv = String::from("t,ratio\n");
    for (t, ratio) in &report.rows {
        let _ = writeln!(csv, "{t:e},{ratio:e}");
    }
    std::fs::write(out.join("lipschitz.csv"), csv)?;
    write_json(&out.join("lipschitz.json"), &report)?;
    println!(
        "lipschitz: max_ratio={:.6} bound={:.6}",
        report.max_ratio,
        2.0 * c_star
    );
    Ok(report.max_ratio <= 2.0 * c_star)
}
