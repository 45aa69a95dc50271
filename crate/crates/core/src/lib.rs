//! Solver library for the nonlocal space-time master equation u = J * u_bar
//! of continuous time random walks.
//!
//! The crate provides:
//!
//! - [`kernels`]: analytic space-time probability kernels (the heat-ball
//!   mean value kernel and a synthetic bump product), parabolic rescaling,
//!   marginals, moments, the strip index alpha and the contraction factor.
//! - [`grid`]: periodic lattices, FFT convolution, discrete kernels with
//!   exact unit mass, and the past-tail weights.
//! - [`solver`]: the strip-wise Banach fixed-point solution of the Cauchy
//!   problem, with mass conservation and inf/sup bounds by construction.
//! - [`oracle`]: independent slow references (Neumann series, direct-sum
//!   convolution) used to validate the fast paths.
//! - [`heat_ref`]: spectrally exact temperatures on the torus and the
//!   Lipschitz initial-layer check.
//! - [`analysis`]: weak-limit residuals, maximum-principle audits,
//!   convergence-rate studies and the parabolic scaling identity.

pub mod analysis;
pub mod error;
pub mod grid;
pub mod heat_ref;
pub mod kernels;
pub mod oracle;
pub mod quad;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{
    convolve_slice, discretize_kernel, tail_weights, DiscreteKernel, Grid, SpaceTimeField,
    Spectral,
};
pub use kernels::{
    closed_form_moment, compute_moments, heatball_eval, jump_marginal, rescale, waiting_marginal,
    BumpProductKernel, HeatBallKernel, Kernel, MomentReport, RescaledKernel,
};
pub use solver::{solve, solve_strip, InitialDatum, SolveOptions, SolveReport, StartGuess};
