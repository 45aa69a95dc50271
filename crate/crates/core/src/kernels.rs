//! Space-time probability kernels for continuous time random walks.
//!
//! A kernel J(x, t) is a probability density on space-time, supported in
//! t >= 0 (causality), non-negative, of unit mass, compactly supported and
//! radial in x. The distinguished member is the heat-ball kernel
//!
//! ```text
//! H(x, t) = (1/4) |x|^2 / t^2   on   E = { (x,t) : t > 0, W(x, t) >= 1 },
//! ```
//!
//! where W is the Weierstrass kernel. E is the heat ball: the time support is
//! (0, 1/(4 pi)] and the spatial section at time t is the ball of radius
//! R(t) = sqrt(2 n t ln(1/(4 pi t))).
//!
//! This module also provides parabolic rescaling J_r = r^{-n-2} J(x/r, t/r^2),
//! the jump-length and waiting-time marginals, the moments mu and nu driving
//! the weak limit, the strip index alpha and the contraction factor I(alpha/2).

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{adaptive_1d, adaptive_graded, bisect, gauss_legendre};

/// Number of bisection iterations used for support-boundary root finding.
const SECTION_BISECT_ITERS: u32 = 120;

/// Fixed Gauss rule for spatial section integrals. Kernel profiles are smooth
/// inside their sections, so a high-order fixed rule is exact to rounding and
/// keeps the outer time quadrature free of inner noise.
fn section_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(32))
}

/// ∫_0^{R(t)} profile(rho, t) rho^{n-1} g(rho) drho by the fixed section rule.
fn section_integral<G: Fn(f64) -> f64>(kernel: &dyn Kernel, t: f64, g: G) -> f64 {
    let radius = kernel.section_radius(t);
    if radius <= 0.0 {
        return 0.0;
    }
    let (xs, ws) = section_rule();
    let n = kernel.dim() as i32;
    let half = 0.5 * radius;
    let mut acc = 0.0;
    for (&x, &w) in xs.iter().zip(ws) {
        let rho = half + half * x;
        acc += w * kernel.profile(rho, t) * rho.powi(n - 1) * g(rho);
    }
    acc * half
}

/// A radial space-time kernel with analytic support metadata.
///
/// `profile(rho, t)` is the density at |x| = rho. Implementors supply the
/// support geometry (`section_radius`, `time_section`) and an antiderivative
/// of the profile in time (`time_primitive`, valid inside the section); the
/// provided `time_integral` clips against the section, so all time integrals
/// of the kernel are exact up to the root-finding tolerance of the section.
pub trait Kernel: Send + Sync {
    /// Spatial dimension n.
    fn dim(&self) -> usize;

    /// Density at |x| = rho, time t. Zero outside the support.
    fn profile(&self, rho: f64, t: f64) -> f64;

    /// t_max: the time support is contained in (0, t_max].
    fn time_support(&self) -> f64;

    /// rho_max: the spatial support is contained in the ball of this radius.
    fn space_radius(&self) -> f64;

    /// Radius of the spatial support section at time t (0 when empty).
    fn section_radius(&self, t: f64) -> f64;

    /// The interval of times where profile(rho, .) is positive, if any.
    fn time_section(&self, rho: f64) -> Option<(f64, f64)>;

    /// Antiderivative in t of profile(rho, .), valid inside the time section.
    fn time_primitive(&self, rho: f64, s: f64) -> f64;

    fn is_radial(&self) -> bool {
        true
    }

    /// Density at a point x, time t.
    fn eval(&self, x: &[f64], t: f64) -> f64 {
        self.profile(norm(x), t)
    }

    /// Exact ∫_{s0}^{s1} profile(rho, sigma) dsigma.
    fn time_integral(&self, rho: f64, s0: f64, s1: f64) -> f64 {
        match self.time_section(rho) {
            None => 0.0,
            Some((lo, hi)) => {
                let a = s0.max(lo);
                let b = s1.min(hi);
                if a < b {
                    self.time_primitive(rho, b) - self.time_primitive(rho, a)
                } else {
                    0.0
                }
            }
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    match x.len() {
        1 => x[0].abs(),
        2 => x[0].hypot(x[1]),
        _ => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

/// Surface measure of the unit sphere S^{n-1}: sigma(S^0) = 2, sigma(S^1) = 2 pi.
pub fn sphere_surface(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        n => 2.0 * PI.powf(n as f64 / 2.0) / gamma_half_int(n as f64 / 2.0),
    }
}

/// Gamma function for positive integer and half-integer arguments, exact.
fn gamma_half_int(z: f64) -> f64 {
    let two_z = 2.0 * z;
    assert!(
        two_z > 0.0 && (two_z - two_z.round()).abs() < 1e-12,
        "gamma_half_int expects a positive multiple of 1/2, got {z}"
    );
    let mut k = two_z.round() as i64;
    let mut acc = 1.0;
    // Gamma(z) = (z-1) Gamma(z-1); reduce to Gamma(1) = 1 or Gamma(1/2) = sqrt(pi).
    while k > 2 {
        acc *= (k as f64 - 2.0) / 2.0;
        k -= 2;
    }
    if k == 1 {
        acc * PI.sqrt()
    } else {
        acc
    }
}

// ---------------------------------------------------------------------------
// Heat-ball kernel
// ---------------------------------------------------------------------------

/// End of the heat-ball time support, 1/(4 pi).
pub fn heatball_time_support() -> f64 {
    0.25 / PI
}

/// Largest spatial radius of the heat ball, attained at t = 1/(4 pi e).
pub fn heatball_space_radius(dim: usize) -> f64 {
    (dim as f64 / (2.0 * PI * std::f64::consts::E)).sqrt()
}

/// Squared section radius R(t)^2 = 2 n t ln(1/(4 pi t)); <= 0 means empty.
fn heatball_r2(dim: usize, t: f64) -> f64 {
    2.0 * dim as f64 * t * (1.0 / (4.0 * PI * t)).ln()
}

/// The heat-ball mean value kernel H(x,t) = (1/4) X_E(x,t) |x|^2 / t^2.
#[derive(Debug, Clone, Copy)]
pub struct HeatBallKernel {
    dim: usize,
}

impl HeatBallKernel {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 1 || dim == 2 {
            Ok(HeatBallKernel { dim })
        } else {
            Err(Error::InvalidParameter(format!(
                "heat-ball kernel supports dim 1 or 2, got {dim}"
            )))
        }
    }
}

impl Kernel for HeatBallKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn profile(&self, rho: f64, t: f64) -> f64 {
        if !(t > 0.0) || t > heatball_time_support() {
            return 0.0;
        }
        let r2 = heatball_r2(self.dim, t);
        if rho * rho <= r2 {
            0.25 * rho * rho / (t * t)
        } else {
            0.0
        }
    }

    fn time_support(&self) -> f64 {
        heatball_time_support()
    }

    fn space_radius(&self) -> f64 {
        heatball_space_radius(self.dim)
    }

    fn section_radius(&self, t: f64) -> f64 {
        if t > 0.0 && t < heatball_time_support() {
            heatball_r2(self.dim, t).max(0.0).sqrt()
        } else {
            0.0
        }
    }

    fn time_section(&self, rho: f64) -> Option<(f64, f64)> {
        if !(rho > 0.0) || rho >= self.space_radius() {
            return None;
        }
        let n = self.dim;
        let rho2 = rho * rho;
        let t_star = 1.0 / (4.0 * PI * std::f64::consts::E);
        // Lower crossing in log time (R^2 is increasing on (0, t_star]).
        let theta = bisect(
            |th| heatball_r2(n, th.exp()) - rho2,
            (rho2 / (2.0 * n as f64)).ln() - 50.0,
            t_star.ln(),
            SECTION_BISECT_ITERS,
        );
        // Upper crossing (R^2 decreasing on [t_star, t_max]).
        let hi = bisect(
            |t| heatball_r2(n, t) - rho2,
            t_star,
            heatball_time_support(),
            SECTION_BISECT_ITERS,
        );
        Some((theta.exp(), hi))
    }

    fn time_primitive(&self, rho: f64, s: f64) -> f64 {
        // ∫ rho^2/(4 s^2) ds = -rho^2/(4 s)
        -rho * rho / (4.0 * s)
    }
}

/// Heat-ball density at a point: (1/4)|x|^2/t^2 inside E, else 0.
///
/// Total on all inputs; non-finite coordinates yield 0.
pub fn heatball_eval(dim: usize, x: &[f64], t: f64) -> f64 {
    match HeatBallKernel::new(dim) {
        Ok(k) => k.eval(x, t),
        Err(_) => 0.0,
    }
}

// ---------------------------------------------------------------------------
// Synthetic bump-product kernel
// ---------------------------------------------------------------------------

/// Product of a normalized radial spatial bump supported in |x| <= rho_sup and
/// a normalized time bump supported in [t_lo, t_hi], 0 < t_lo < t_hi.
///
/// Satisfies the same axioms as the heat-ball kernel but with mu != -nu, so it
/// exercises the general weak limit mu d/dt + nu Laplacian.
#[derive(Debug, Clone, Copy)]
pub struct BumpProductKernel {
    dim: usize,
    rho_sup: f64,
    t_lo: f64,
    t_hi: f64,
    space_norm: f64,
    time_norm: f64,
}

impl BumpProductKernel {
    pub fn new(dim: usize, rho_sup: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidParameter(format!(
                "bump kernel supports dim 1 or 2, got {dim}"
            )));
        }
        if !(rho_sup > 0.0 && t_lo > 0.0 && t_hi > t_lo) {
            return Err(Error::InvalidParameter(format!(
                "bump kernel requires rho_sup > 0 and 0 < t_lo < t_hi, got rho={rho_sup}, t=[{t_lo}, {t_hi}]"
            )));
        }
        // ∫_{R^n} (1 - (|x|/rho)^2)^2 dx = sigma(S^{n-1}) rho^n B_n,
        // B_1 = 8/15, B_2 = 1/6.
        let b_n = match dim {
            1 => 8.0 / 15.0,
            _ => 1.0 / 6.0,
        };
        let space_norm = 1.0 / (sphere_surface(dim) * rho_sup.powi(dim as i32) * b_n);
        let d = t_hi - t_lo;
        let time_norm = 30.0 / d.powi(5);
        Ok(BumpProductKernel {
            dim,
            rho_sup,
            t_lo,
            t_hi,
            space_norm,
            time_norm,
        })
    }

    pub fn standard(dim: usize) -> Result<Self> {
        BumpProductKernel::new(dim, 0.2, 0.02, 0.1)
    }

    fn space_bump(&self, rho: f64) -> f64 {
        let s = rho / self.rho_sup;
        if s < 1.0 {
            let v = 1.0 - s * s;
            self.space_norm * v * v
        } else {
            0.0
        }
    }

    /// Antiderivative of the normalized time bump c (s-t1)^2 (t2-s)^2.
    fn time_bump_primitive(&self, s: f64) -> f64 {
        let d = self.t_hi - self.t_lo;
        let u = (s - self.t_lo).clamp(0.0, d);
        self.time_norm * (d * d * u.powi(3) / 3.0 - d * u.powi(4) / 2.0 + u.powi(5) / 5.0)
    }
}

impl Kernel for BumpProductKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn profile(&self, rho: f64, t: f64) -> f64 {
        if t <= self.t_lo || t >= self.t_hi {
            return 0.0;
        }
        let u = t - self.t_lo;
        let v = self.t_hi - t;
        self.space_bump(rho) * self.time_norm * u * u * v * v
    }

    fn time_support(&self) -> f64 {
        self.t_hi
    }

    fn space_radius(&self) -> f64 {
        self.rho_sup
    }

    fn section_radius(&self, t: f64) -> f64 {
        if t > self.t_lo && t < self.t_hi {
            self.rho_sup
        } else {
            0.0
        }
    }

    fn time_section(&self, rho: f64) -> Option<(f64, f64)> {
        if rho < self.rho_sup {
            Some((self.t_lo, self.t_hi))
        } else {
            None
        }
    }

    fn time_primitive(&self, rho: f64, s: f64) -> f64 {
        self.space_bump(rho) * self.time_bump_primitive(s)
    }
}

// ---------------------------------------------------------------------------
// Parabolic rescaling
// ---------------------------------------------------------------------------

/// J_r(x, t) = r^{-n-2} J(x/r, t/r^2): unit mass is preserved, the spatial
/// support shrinks by r and the time support by r^2.
pub struct RescaledKernel {
    inner: Arc<dyn Kernel>,
    r: f64,
}

impl RescaledKernel {
    pub fn scale(&self) -> f64 {
        self.r
    }
}

/// Parabolic rescaling of a kernel by r > 0.
pub fn rescale(inner: Arc<dyn Kernel>, r: f64) -> Result<RescaledKernel> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "rescale factor must be a positive real, got {r}"
        )));
    }
    Ok(RescaledKernel { inner, r })
}

impl Kernel for RescaledKernel {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn profile(&self, rho: f64, t: f64) -> f64 {
        let r = self.r;
        r.powi(-(self.dim() as i32) - 2) * self.inner.profile(rho / r, t / (r * r))
    }

    fn time_support(&self) -> f64 {
        self.inner.time_support() * self.r * self.r
    }

    fn space_radius(&self) -> f64 {
        self.inner.space_radius() * self.r
    }

    fn section_radius(&self, t: f64) -> f64 {
        self.inner.section_radius(t / (self.r * self.r)) * self.r
    }

    fn time_section(&self, rho: f64) -> Option<(f64, f64)> {
        let r2 = self.r * self.r;
        self.inner
            .time_section(rho / self.r)
            .map(|(a, b)| (a * r2, b * r2))
    }

    fn time_primitive(&self, rho: f64, s: f64) -> f64 {
        // ∫ r^{-n-2} p(rho/r, s/r^2) ds = r^{-n} P(rho/r, s/r^2)
        self.r.powi(-(self.dim() as i32))
            * self.inner.time_primitive(rho / self.r, s / (self.r * self.r))
    }

    fn is_radial(&self) -> bool {
        self.inner.is_radial()
    }
}

// ---------------------------------------------------------------------------
// Marginals
// ---------------------------------------------------------------------------

/// Jump length marginal lambda(x) = ∫ J(x, t) dt, by adaptive quadrature over
/// the time section. The exact per-kernel `time_integral` is the fast path
/// used elsewhere; this is the independent generic route.
pub fn jump_marginal(kernel: &dyn Kernel, x: &[f64], tol: f64) -> Result<f64> {
    let rho = norm(x);
    let Some((lo, hi)) = kernel.time_section(rho) else {
        return Ok(0.0);
    };
    adaptive_1d(|t| kernel.profile(rho, t), lo, hi, tol).map_err(|e| match e {
        Error::Numerical { what, achieved } => Error::Numerical {
            what: format!("jump marginal at |x| = {rho}: {what}"),
            achieved,
        },
        other => other,
    })
}

/// Waiting time marginal tau(t) = ∫ J(x, t) dx, by radial quadrature over the
/// spatial section. The tolerance is relative to the marginal's own scale,
/// which grows without bound as t approaches 0 for the heat ball.
pub fn waiting_marginal(kernel: &dyn Kernel, t: f64, tol: f64) -> Result<f64> {
    let radius = kernel.section_radius(t);
    if radius <= 0.0 {
        return Ok(0.0);
    }
    let n = kernel.dim();
    let surface = sphere_surface(n);
    let scale = (surface * section_integral(kernel, t, |_| 1.0)).abs().max(1.0);
    adaptive_1d(
        |rho| kernel.profile(rho, t) * rho.powi(n as i32 - 1),
        0.0,
        radius,
        tol * scale / surface,
    )
    .map(|v| surface * v)
    .map_err(|e| match e {
        Error::Numerical { what, achieved } => Error::Numerical {
            what: format!("waiting marginal at t = {t}: {what}"),
            achieved: achieved.map(|a| a * surface),
        },
        other => other,
    })
}

/// Cumulative time mass I(beta) = ∬_{s <= beta} J(y, s) dy ds, via the exact
/// per-kernel time integrals under a radial spatial quadrature.
pub fn cumulative_time_mass(kernel: &dyn Kernel, beta: f64, tol: f64) -> Result<f64> {
    if beta <= 0.0 {
        return Ok(0.0);
    }
    let n = kernel.dim();
    let surface = sphere_surface(n);
    let radius = kernel.space_radius();
    adaptive_graded(
        |rho| kernel.time_integral(rho, 0.0, beta) * rho.powi(n as i32 - 1),
        radius,
        tol / surface,
        2,
    )
    .map(|v| surface * v)
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

/// Scalars of a kernel that drive the weak limit and the strip solver.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentReport {
    /// mu = -∬ t J(x,t) dx dt (first time moment, negated).
    pub mu: f64,
    /// nu = (1/2n) ∬ |x|^2 J(x,t) dx dt.
    pub nu: f64,
    /// alpha = sup { beta : ∬_{s <= beta} J < 1 }.
    pub alpha: f64,
    /// I(alpha/2), the strip contraction factor, in (0, 1).
    pub contraction: f64,
    /// Total mass ∬ J, close to 1.
    pub mass: f64,
}

impl MomentReport {
    /// Checks the structural ranges: alpha in (0, t_max], contraction in
    /// (0, 1), mass within `mass_tol` of 1.
    pub fn validate(&self, time_support: f64, mass_tol: f64) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= time_support * (1.0 + 1e-9)) {
            return Err(Error::Numerical {
                what: format!("alpha {} outside (0, {time_support}]", self.alpha),
                achieved: Some(self.alpha),
            });
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return Err(Error::Numerical {
                what: format!("contraction {} outside (0, 1)", self.contraction),
                achieved: Some(self.contraction),
            });
        }
        if (self.mass - 1.0).abs() > mass_tol {
            return Err(Error::Numerical {
                what: format!("mass {} deviates from 1 beyond {mass_tol}", self.mass),
                achieved: Some(self.mass),
            });
        }
        Ok(())
    }
}

/// Computes mass, mu, nu, alpha and the contraction factor.
///
/// mass, mu, nu come from graded adaptive quadrature of the radial waiting
/// profile; alpha is found by bisection of the monotone continuous I(beta)
/// against 1 - 1e-12 over 60 iterations, clipped to t_max.
pub fn compute_moments(kernel: &dyn Kernel, quad_tol: f64) -> Result<MomentReport> {
    if !(quad_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quad_tol must be positive, got {quad_tol}"
        )));
    }
    let t_max = kernel.time_support();
    let surface = sphere_surface(kernel.dim());
    let tau = |t: f64| surface * section_integral(kernel, t, |_| 1.0);
    let m2 = |t: f64| surface * section_integral(kernel, t, |rho| rho * rho);

    let mass = adaptive_graded(&tau, t_max, quad_tol, 3)?;
    let mu = -adaptive_graded(|t| t * tau(t), t_max, quad_tol, 3)?;
    let nu = adaptive_graded(&m2, t_max, quad_tol, 3)? / (2.0 * kernel.dim() as f64);
    if !(mass.is_finite() && mu.is_finite() && nu.is_finite()) {
        return Err(Error::Numerical {
            what: format!("moment quadrature produced non-finite values (mass={mass}, mu={mu}, nu={nu})"),
            achieved: Some(mass),
        });
    }

    // alpha: I is monotone and continuous, I(t_max) = mass.
    let target = 1.0 - 1e-12;
    let alpha = if mass <= target {
        t_max
    } else {
        let mut lo = 0.0;
        let mut hi = t_max;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let v = cumulative_time_mass(kernel, mid, quad_tol.min(1e-9))?;
            if v < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).min(t_max)
    };
    let contraction = cumulative_time_mass(kernel, 0.5 * alpha, quad_tol.min(1e-9))?;

    Ok(MomentReport {
        mu,
        nu,
        alpha,
        contraction,
        mass,
    })
}

/// alpha alone, for callers that do not need the full report.
pub fn kernel_alpha(kernel: &dyn Kernel, quad_tol: f64) -> Result<f64> {
    compute_moments(kernel, quad_tol).map(|m| m.alpha)
}

/// Closed form of ∬ H(y, s) s dy ds for the heat-ball kernel in dimension n:
///
/// ```text
/// sigma(S^{n-1}) n^{(n+2)/2} Gamma((n+4)/2) / (2 (n+2)^{(n+6)/2} pi^{(n+2)/2})
/// ```
///
/// This positive value equals |mu| and, by Gamma(z+1) = z Gamma(z), also
/// equals nu.
pub fn closed_form_moment(dim: usize) -> f64 {
    let n = dim as f64;
    sphere_surface(dim) * n.powf((n + 2.0) / 2.0) * gamma_half_int((n + 4.0) / 2.0)
        / (2.0 * (n + 2.0).powf((n + 6.0) / 2.0) * PI.powf((n + 2.0) / 2.0))
}

/// The companion closed form (1/2n) ∬ H |y|^2, written with Gamma((n+6)/2);
/// algebraically identical to `closed_form_moment`.
pub fn closed_form_second_moment(dim: usize) -> f64 {
    let n = dim as f64;
    sphere_surface(dim) * n.powf((n + 2.0) / 2.0) * gamma_half_int((n + 6.0) / 2.0)
        / ((n + 4.0) * (n + 2.0).powf((n + 6.0) / 2.0) * PI.powf((n + 2.0) / 2.0))
}

// ---------------------------------------------------------------------------
// Kernel-weighted integration of smooth test integrands
// ---------------------------------------------------------------------------

/// ∬ J(w, sigma) g(w, sigma) dw dsigma for a smooth g, by iterated adaptive
/// quadrature: graded in time, radial in space, trapezoidal in angle (n = 2).
///
/// The spatial integrand is smooth inside each section, so this converges at
/// high order even though J itself is cut off by the support boundary.
pub fn integrate_against<G>(kernel: &dyn Kernel, g: G, tol: f64) -> Result<f64>
where
    G: Fn(&[f64], f64) -> f64 + Sync,
{
    let n = kernel.dim();
    let t_max = kernel.time_support();
    let n_angles = 32usize;
    let section = |t: f64| -> f64 {
        let angular = |rho: f64| -> f64 {
            match n {
                1 => g(&[rho], t) + g(&[-rho], t),
                _ => {
                    let mut s = 0.0;
                    for a in 0..n_angles {
                        let th = 2.0 * PI * a as f64 / n_angles as f64;
                        s += g(&[rho * th.cos(), rho * th.sin()], t);
                    }
                    s * 2.0 * PI / n_angles as f64
                }
            }
        };
        section_integral(kernel, t, angular)
    };
    let value = adaptive_graded(section, t_max, tol, 3)?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::numerical(
            "kernel-weighted quadrature produced non-finite value",
            None,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TMAX: f64 = 0.07957747154594767; // 1/(4 pi)

    #[test]
    fn heatball_eval_matches_formula_examples() {
        // |x| = 0 forces value 0
        assert_eq!(heatball_eval(1, &[0.0], 0.01), 0.0);
        // t = 0.1 > 1/(4 pi): outside the time support
        assert_eq!(heatball_eval(1, &[0.05], 0.1), 0.0);
        // R(0.01) = sqrt(0.02 ln(1/(0.04 pi))) ~ 0.2037 >= 0.01, so the value
        // is (1/4)(0.01)^2/(0.01)^2 = 1/4.
        let r = (2.0 * 0.01 * (1.0 / (0.04 * PI)).ln()).sqrt();
        assert!((r - 0.203673559355).abs() < 1e-10);
        assert!(0.01 <= r);
        assert_eq!(heatball_eval(1, &[0.01], 0.01), 0.25);
        // non-finite inputs are mapped to 0
        assert_eq!(heatball_eval(1, &[f64::NAN], 0.01), 0.0);
        assert_eq!(heatball_eval(1, &[0.01], f64::INFINITY), 0.0);
    }

    #[test]
    fn heatball_support_boundary_satisfies_weierstrass_inequality() {
        // W(x, t) >= 1 exactly on |x| <= R(t): check both sides of the edge.
        let k = HeatBallKernel::new(1).unwrap();
        for &t in &[0.001, 0.01, 0.02, 0.05, 0.07] {
            let r = k.section_radius(t);
            let w = |x: f64| (4.0 * PI * t).powf(-0.5) * (-x * x / (4.0 * t)).exp();
            assert!(w(r * (1.0 - 1e-9)) >= 1.0, "inside edge at t={t}");
            assert!(w(r * (1.0 + 1e-9)) < 1.0, "outside edge at t={t}");
        }
    }

    #[test]
    fn time_section_brackets_support() {
        let k = HeatBallKernel::new(1).unwrap();
        let rho = 0.2;
        let (lo, hi) = k.time_section(rho).unwrap();
        assert!((lo - 0.009331033862).abs() < 1e-9);
        assert!((hi - 0.0554989285).abs() < 1e-9);
        assert!(k.profile(rho, lo * 1.001) > 0.0);
        assert!(k.profile(rho, lo * 0.999) == 0.0);
        assert!(k.time_section(0.0).is_none());
        assert!(k.time_section(k.space_radius() * 1.01).is_none());
    }

    #[test]
    fn jump_marginal_examples() {
        let k = HeatBallKernel::new(1).unwrap();
        // integrand identically zero at x = 0
        assert_eq!(jump_marginal(&k, &[0.0], 1e-10).unwrap(), 0.0);
        // frozen anchor: lambda(0.2) via exact section integral
        let lam = jump_marginal(&k, &[0.2], 1e-11).unwrap();
        assert!((lam - 0.89150894753471096).abs() < 1e-8, "{lam}");
        // generic adaptive route agrees with the exact time integral
        let exact = k.time_integral(0.2, 0.0, TMAX);
        assert!((lam - exact).abs() < 1e-10);
    }

    #[test]
    fn jump_marginal_matches_brute_force_slab_quadrature() {
        // independent oracle: 2-D tensor midpoint over a thin slab around
        // x = 0.2 (limited by the midpoint rule's first-order boundary error)
        let k = HeatBallKernel::new(1).unwrap();
        let x = 0.2;
        let dx = 1e-4;
        let slab = match crate::quad::midpoint_tensor_refine(
            |p| k.eval(&[p[0]], p[1]),
            &[x - dx / 2.0, 0.0],
            &[x + dx / 2.0, TMAX],
            1e-9,
            12,
        ) {
            Ok(v) => v,
            Err(Error::Numerical {
                achieved: Some(a), ..
            }) => a,
            Err(e) => panic!("{e}"),
        } / dx;
        let lam = jump_marginal(&k, &[x], 1e-11).unwrap();
        assert!((lam - slab).abs() < 1e-4, "{lam} vs {slab}");
        // refinement oracle: double-resolution quadrature agrees to 1e-8
        let lam_fine = jump_marginal(&k, &[x], 1e-13).unwrap();
        assert!((lam - lam_fine).abs() <= 1e-8);
    }

    #[test]
    fn waiting_marginal_examples() {
        let k = HeatBallKernel::new(1).unwrap();
        // outside the time support
        assert_eq!(waiting_marginal(&k, 0.1, 1e-10).unwrap(), 0.0);
        // frozen anchor: tau(1/(8 pi)) = R^3/(6 t^2)
        let t = 0.5 * TMAX;
        let tau = waiting_marginal(&k, t, 1e-11).unwrap();
        assert!((tau - 1.3638037005393528).abs() < 1e-9, "{tau}");
        // refinement oracle: double-resolution quadrature agrees to 1e-8
        let tau_fine = waiting_marginal(&k, t, 1e-13).unwrap();
        assert!((tau - tau_fine).abs() < 1e-8);
    }

    #[test]
    fn marginals_integrate_to_one() {
        let k = HeatBallKernel::new(1).unwrap();
        // ∫ lambda = 1 (Fubini): radial quadrature of the jump marginal
        let lam_mass = adaptive_graded(
            |rho| 2.0 * k.time_integral(rho, 0.0, TMAX),
            k.space_radius(),
            1e-9,
            2,
        )
        .unwrap();
        assert!((lam_mass - 1.0).abs() < 1e-6, "{lam_mass}");
        // ∫ tau = 1: the moment quadrature's mass is exactly this integral
        let tau_mass = compute_moments(&k, 1e-9).unwrap().mass;
        assert!((tau_mass - 1.0).abs() < 1e-6, "{tau_mass}");
    }

    #[test]
    fn closed_form_moment_frozen_values() {
        // n = 1: 2 Gamma(5/2) / (2 * 3^{7/2} * pi^{3/2})
        let v1 = closed_form_moment(1);
        assert!((v1 - 5.1048971798314079e-3).abs() < 1e-15, "{v1}");
        // n = 2: simplifies to 1/(32 pi)
        let v2 = closed_form_moment(2);
        assert!((v2 - 1.0 / (32.0 * PI)).abs() < 1e-17, "{v2}");
        // Gamma(z+1) = z Gamma(z) makes the second closed form identical
        for dim in 1..=2 {
            let a = closed_form_moment(dim);
            let b = closed_form_second_moment(dim);
            assert!((a - b).abs() <= 1e-13 * a.abs());
        }
    }

    #[test]
    fn moments_match_closed_forms() {
        for dim in 1..=2 {
            let k = HeatBallKernel::new(dim).unwrap();
            let m = compute_moments(&k, 1e-8).unwrap();
            let cf = closed_form_moment(dim);
            assert!((m.mass - 1.0).abs() < 1e-7, "mass {}", m.mass);
            assert!((m.mu + cf).abs() < 1e-7 * cf, "mu {} vs {}", m.mu, -cf);
            assert!((m.mu + m.nu).abs() < 1e-7, "mu+nu {}", m.mu + m.nu);
            assert!((m.alpha - TMAX).abs() < 1e-4, "alpha {}", m.alpha);
            m.validate(k.time_support(), 1e-6).unwrap();
        }
        // Frozen contraction anchors. The bisected alpha sits a hair below
        // t_max (I is polynomially flat at the support end), which shifts
        // I(alpha/2) by a few 1e-5.
        let m1 = compute_moments(&HeatBallKernel::new(1).unwrap(), 1e-8).unwrap();
        assert!((m1.contraction - 0.983342655957).abs() < 1e-4, "{}", m1.contraction);
        let m2 = compute_moments(&HeatBallKernel::new(2).unwrap(), 1e-8).unwrap();
        assert!((m2.contraction - 0.96668684376).abs() < 1e-4, "{}", m2.contraction);
    }

    #[test]
    fn bump_kernel_moments_match_closed_forms() {
        let k = BumpProductKernel::standard(1).unwrap();
        let m = compute_moments(&k, 1e-9).unwrap();
        assert!((m.mass - 1.0).abs() < 1e-8);
        // mu = -(t1 + t2)/2 by symmetry of the time bump
        assert!((m.mu + 0.06).abs() < 1e-8, "{}", m.mu);
        // nu = rho^2/14 in n = 1
        assert!((m.nu - 0.04 / 14.0).abs() < 1e-8, "{}", m.nu);
        // alpha = t2, contraction = time CDF at t2/2 = 9018/32768
        assert!((m.alpha - 0.1).abs() < 1e-4, "{}", m.alpha);
        assert!((m.contraction - 0.27520751953125).abs() < 1e-4, "{}", m.contraction);
        let k2 = BumpProductKernel::standard(2).unwrap();
        let m2 = compute_moments(&k2, 1e-9).unwrap();
        assert!((m2.nu - 0.04 / 16.0).abs() < 1e-8, "{}", m2.nu);
        assert!(
            (m2.mu + m2.nu).abs() > 1e-3,
            "bump kernel should have mu != -nu"
        );
    }

    #[test]
    fn rescale_examples() {
        let base: Arc<dyn Kernel> = Arc::new(HeatBallKernel::new(1).unwrap());
        assert!(rescale(base.clone(), 0.0).is_err());
        assert!(rescale(base.clone(), -1.0).is_err());
        // r = 1 is the identity at sample points
        let id = rescale(base.clone(), 1.0).unwrap();
        for &(x, t) in &[(0.05, 0.01), (0.1, 0.03), (0.2, 0.05)] {
            assert_eq!(id.eval(&[x], t), base.eval(&[x], t));
        }
        // mass of the rescaled kernel is still 1
        let half = rescale(base.clone(), 0.5).unwrap();
        let m = compute_moments(&half, 1e-8).unwrap();
        assert!((m.mass - 1.0).abs() < 1e-6);
        // alpha scales by r^2
        assert!((m.alpha - 0.25 * TMAX).abs() < 1e-5, "{}", m.alpha);
    }

    #[test]
    fn rescale_composition_agrees_pointwise() {
        let base: Arc<dyn Kernel> = Arc::new(HeatBallKernel::new(1).unwrap());
        let ab: Arc<dyn Kernel> = Arc::new(rescale(base.clone(), 0.3).unwrap());
        let nested = rescale(ab, 0.5).unwrap();
        let direct = rescale(base, 0.15).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x = rng.gen_range(-0.05..0.05);
            let t = rng.gen_range(1e-6..0.002);
            let a = nested.eval(&[x], t);
            let b = direct.eval(&[x], t);
            let scale = a.abs().max(b.abs()).max(1e-300);
            assert!(
                (a - b).abs() <= 1e-12 * scale,
                "mismatch at ({x}, {t}): {a} vs {b}"
            );
        }
    }

    #[test]
    fn odd_space_moments_vanish_for_radial_kernels() {
        let k1 = HeatBallKernel::new(1).unwrap();
        let m = integrate_against(&k1, |x, _t| x[0], 1e-10).unwrap();
        assert!(m.abs() < 1e-8, "{m}");
        let k2 = HeatBallKernel::new(2).unwrap();
        let mx = integrate_against(&k2, |x, _t| x[0], 1e-9).unwrap();
        let mxy = integrate_against(&k2, |x, _t| x[0] * x[1], 1e-9).unwrap();
        assert!(mx.abs() < 1e-8, "{mx}");
        assert!(mxy.abs() < 1e-8, "{mxy}");
    }

    #[test]
    fn integrate_against_reproduces_moments() {
        let k = HeatBallKernel::new(1).unwrap();
        let mass = integrate_against(&k, |_x, _t| 1.0, 1e-9).unwrap();
        assert!((mass - 1.0).abs() < 1e-7);
        let minus_mu = integrate_against(&k, |_x, t| t, 1e-10).unwrap();
        assert!((minus_mu - closed_form_moment(1)).abs() < 1e-8);
    }

    #[test]
    fn gamma_half_int_values() {
        assert!((gamma_half_int(0.5) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half_int(1.0) - 1.0).abs() == 0.0);
        assert!((gamma_half_int(2.5) - 1.3293403881791370).abs() < 1e-15);
        assert!((gamma_half_int(3.0) - 2.0).abs() == 0.0);
    }
}
