//! Command-line front end for the CTRW master-equation solver.
//!
//! Exit codes: 0 success, 1 verification failure (an asserted invariant
//! broke), 2 configuration error, 3 numerical failure. All errors carry a
//! machine-readable JSON record on standard error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ctrw_cli::commands;
use ctrw_cli::config::Config;
use ctrw_cli::selftest;

#[derive(Parser)]
#[command(
    name = "ctrw",
    about = "Nonlocal master-equation solver for continuous time random walks, with a verification suite"
)]
struct Cli {
    /// JSON configuration file; command-line flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for data files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (0 = available parallelism; 1 = fully sequential).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Sup-norm tolerance certified by the Picard iteration.
    #[arg(long, global = true)]
    picard_tol: Option<f64>,

    /// Quadrature tolerance for kernel integrals.
    #[arg(long, global = true)]
    quad_tol: Option<f64>,

    /// Kernel type: heatball | bump-product.
    #[arg(long, global = true)]
    kernel: Option<String>,

    /// Spatial dimension (1 or 2).
    #[arg(long, global = true)]
    dim: Option<usize>,

    /// Parabolic rescaling factor of the kernel.
    #[arg(long, global = true)]
    r: Option<f64>,

    /// Datum preset, e.g. "constant:1", "gaussian-bump", "triangle-wave".
    #[arg(long, global = true)]
    datum: Option<String>,

    /// Datum shape parameters.
    #[arg(long, global = true)]
    datum_width: Option<f64>,
    #[arg(long, global = true)]
    datum_center: Option<f64>,
    #[arg(long, global = true)]
    datum_floor: Option<f64>,

    /// Grid: periodic box side length.
    #[arg(long, global = true)]
    box_len: Option<f64>,

    /// Grid: lattice points per axis (a power of two).
    #[arg(long, global = true)]
    points: Option<usize>,

    /// Grid: requested time step (rounded down to divide alpha/2).
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Grid: time horizon.
    #[arg(long, global = true)]
    horizon: Option<f64>,

    /// Steps per alpha/2 strip.
    #[arg(long, global = true)]
    strip_steps: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Cauchy problem and emit the field plus a report.
    Solve {
        /// Solution engine: strip | neumann.
        #[arg(long, default_value = "strip")]
        engine: String,
    },
    /// Spectral heat solution with the same outputs as `solve`.
    Heat,
    /// Kernel moments, alpha and the contraction factor.
    Moments,
    /// Weak-limit residual table over a list of r values.
    Weaklimit {
        /// Comma-separated r values.
        #[arg(long, default_value = "0.2,0.1,0.05")]
        r_list: String,
        /// Test function: gaussian | poly-gaussian.
        #[arg(long, default_value = "gaussian")]
        testfn: String,
    },
    /// Convergence-rate study over halving r with refined grids.
    RateStudy {
        #[arg(long, default_value_t = 0.2)]
        r0: f64,
        #[arg(long, default_value_t = 3)]
        rows: usize,
        #[arg(long, default_value_t = 256)]
        base_points: usize,
        #[arg(long, default_value_t = 32)]
        rate_strip_steps: usize,
    },
    /// Maximum-principle audit of one rescaled solve against the temperature.
    Maxprinciple {
        #[arg(long, default_value_t = 0.2)]
        audit_r: f64,
    },
    /// Parabolic scaling identity check at one r.
    ScalingCheck {
        #[arg(long, default_value_t = 0.5)]
        check_r: f64,
    },
    /// Temperature initial-layer ratio table.
    Lipschitz,
    /// Run the full verification suite.
    Selftest,
    /// Reduced deterministic data pipeline (used by the determinism check).
    #[command(hide = true)]
    SelftestProbe,
}

fn merged_config(cli: &Cli) -> Result<Config, ctrw::Error> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(v) = &cli.kernel {
        cfg.kernel.r#type = v.clone();
    }
    if let Some(v) = cli.dim {
        cfg.kernel.dim = v;
    }
    if let Some(v) = cli.r {
        cfg.kernel.r = v;
    }
    if let Some(v) = &cli.datum {
        cfg.datum.parse_spec(v)?;
    }
    if let Some(v) = cli.datum_width {
        cfg.datum.width = v;
    }
    if let Some(v) = cli.datum_center {
        cfg.datum.center = v;
    }
    if let Some(v) = cli.datum_floor {
        cfg.datum.floor = v;
    }
    if let Some(v) = cli.box_len {
        cfg.grid.box_len = v;
    }
    if let Some(v) = cli.points {
        cfg.grid.points = v;
    }
    if let Some(v) = cli.dt {
        cfg.grid.dt = v;
    }
    if let Some(v) = cli.horizon {
        cfg.grid.horizon = v;
    }
    if cli.picard_tol.is_some() {
        cfg.picard_tol = cli.picard_tol;
    }
    if cli.quad_tol.is_some() {
        cfg.quad_tol = cli.quad_tol;
    }
    if cli.strip_steps.is_some() {
        cfg.strip_steps = cli.strip_steps;
    }
    Ok(cfg)
}

fn emit_error(kind: &str, message: &str) {
    eprintln!(
        "{}",
        serde_json::json!({ "error": { "kind": kind, "message": message } })
    );
}

fn run(cli: &Cli) -> Result<bool, ctrw::Error> {
    let cfg = merged_config(cli)?;
    let out: &Path = &cli.out;
    std::fs::create_dir_all(out)?;
    match &cli.command {
        Command::Solve { engine } => {
            commands::cmd_solve(&cfg, out, engine, cli.strip_steps)?;
            Ok(true)
        }
        Command::Heat => {
            commands::cmd_heat(&cfg, out)?;
            Ok(true)
        }
        Command::Moments => {
            commands::cmd_moments(&cfg, out)?;
            Ok(true)
        }
        Command::Weaklimit { r_list, testfn } => {
            let rs: Result<Vec<f64>, _> = r_list.split(',').map(str::parse::<f64>).collect();
            let rs = rs.map_err(|e| {
                ctrw::Error::Configuration(format!("r list {r_list:?} is not numeric: {e}"))
            })?;
            commands::cmd_weaklimit(&cfg, out, &rs, testfn)?;
            Ok(true)
        }
        Command::RateStudy {
            r0,
            rows,
            base_points,
            rate_strip_steps,
        } => {
            commands::cmd_rate_study(&cfg, out, *r0, *rows, *base_points, *rate_strip_steps)?;
            Ok(true)
        }
        Command::Maxprinciple { audit_r } => commands::cmd_maxprinciple(&cfg, out, *audit_r),
        Command::ScalingCheck { check_r } => commands::cmd_scaling_check(&cfg, out, *check_r),
        Command::Lipschitz => commands::cmd_lipschitz(&cfg, out),
        Command::Selftest => {
            let results = selftest::run_all(out, true)?;
            let passed = results.iter().filter(|r| r.pass).count();
            println!("selftest: {passed}/{} criteria passed", results.len());
            Ok(passed == results.len())
        }
        Command::SelftestProbe => {
            selftest::run_probe(out)?;
            println!("selftest-probe: data written");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
        {
            emit_error("configuration", &format!("worker pool: {e}"));
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            emit_error("verification-failure", "an asserted invariant broke; see the report");
            ExitCode::from(1)
        }
        Err(e) => {
            emit_error(e.kind(), &e.to_string());
            match e {
                ctrw::Error::InvalidParameter(_)
                | ctrw::Error::Configuration(_)
                | ctrw::Error::InvalidState(_)
                | ctrw::Error::Io(_) => ExitCode::from(2),
                ctrw::Error::Numerical { .. } | ctrw::Error::Convergence { .. } => {
                    ExitCode::from(3)
                }
            }
        }
    }
}
