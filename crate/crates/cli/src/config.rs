//! Run configuration: JSON config file merged with command-line overrides.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use ctrw::kernels::{rescale, BumpProductKernel, HeatBallKernel, Kernel};
use ctrw::solver::InitialDatum;
use ctrw::{Error, Grid, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// "heatball" or "bump-product".
    pub r#type: String,
    pub dim: usize,
    /// Parabolic rescaling factor.
    pub r: f64,
    /// Bump-product parameters.
    pub rho: f64,
    pub t1: f64,
    pub t2: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            r#type: "heatball".into(),
            dim: 1,
            r: 1.0,
            rho: 0.2,
            t1: 0.02,
            t2: 0.1,
        }
    }
}

impl KernelConfig {
    pub fn build(&self) -> Result<Arc<dyn Kernel>> {
        let base: Arc<dyn Kernel> = match self.r#type.as_str() {
            "heatball" => Arc::new(HeatBallKernel::new(self.dim)?),
            "bump-product" => Arc::new(BumpProductKernel::new(
                self.dim, self.rho, self.t1, self.t2,
            )?),
            other => {
                return Err(Error::Configuration(format!(
                    "unknown kernel type {other:?} (expected \"heatball\" or \"bump-product\")"
                )))
            }
        };
        if (self.r - 1.0).abs() < 1e-15 {
            Ok(base)
        } else {
            Ok(Arc::new(rescale(base, self.r)?))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub box_len: f64,
    pub points: usize,
    pub dt: f64,
    pub horizon: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            box_len: 1.0,
            points: 256,
            dt: 0.0025,
            horizon: 0.32,
        }
    }
}

impl GridConfig {
    pub fn build(&self, dim: usize) -> Result<Grid> {
        Grid::new(dim, self.box_len, self.points, self.dt, self.horizon)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatumConfig {
    /// constant | cosine | gaussian-bump | triangle-wave | sqrt-sine | raised-cosine
    pub preset: String,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub floor: f64,
}

impl Default for DatumConfig {
    fn default() -> Self {
        DatumConfig {
            preset: "gaussian-bump".into(),
            amplitude: 1.0,
            width: 0.05,
            center: 0.5,
            floor: 0.0,
        }
    }
}

impl DatumConfig {
    pub fn build(&self, dim: usize, box_len: f64) -> Result<InitialDatum> {
        match self.preset.as_str() {
            "constant" => Ok(InitialDatum::constant(self.amplitude)),
            "cosine" => Ok(InitialDatum::cosine(self.amplitude, box_len)),
            "gaussian-bump" => Ok(InitialDatum::gaussian_bump(
                self.amplitude,
                self.width,
                self.center,
                dim,
                box_len,
            )),
            "triangle-wave" => Ok(InitialDatum::triangle_wave(self.amplitude, box_len)),
            "sqrt-sine" => Ok(InitialDatum::sqrt_sine(self.amplitude, box_len)),
            "raised-cosine" => Ok(InitialDatum::raised_cosine(
                self.floor,
                self.amplitude,
                self.center,
                box_len,
            )),
            other => Err(Error::Configuration(format!(
                "unknown datum preset {other:?}"
            ))),
        }
    }

    /// Parses "preset" or "preset:amplitude".
    pub fn parse_spec(&mut self, spec: &str) -> Result<()> {
        let mut parts = spec.splitn(2, ':');
        self.preset = parts.next().unwrap_or_default().to_string();
        if let Some(amp) = parts.next() {
            self.amplitude = amp.parse().map_err(|_| {
                Error::Configuration(format!("datum amplitude {amp:?} is not a number"))
            })?;
        }
        Ok(())
    }
}

/// Full run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub kernel: KernelConfig,
    pub grid: GridConfig,
    pub datum: DatumConfig,
    pub picard_tol: Option<f64>,
    pub quad_tol: Option<f64>,
    pub strip_steps: Option<usize>,
    pub out: Option<String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Configuration(format!("config {path:?}: {e}")))
    }

    pub fn picard_tol(&self) -> f64 {
        self.picard_tol.unwrap_or(1e-10)
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol.unwrap_or(1e-8)
    }
}
