//! Heat kernel and resolvent of the infinite flat cone of angle `β` in the
//! Carslaw contour representation, and the rotationally symmetric density `a_μ`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metric::PolyhedralMetric;
use crate::regint::{contour_abscissa, line_pair_integral, q_closed, strip_poles};
use crate::special::bessel_k0;

/// Polar coordinates `(r, φ)` on the cone, `0 ≤ φ < β`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConePoint {
    pub r: f64,
    pub phi: f64,
}

impl ConePoint {
    pub fn new(r: f64, phi: f64) -> Self {
        Self { r, phi }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeKernelConfig {
    /// Upper bound on `|s|` along the lines `ϑ = ±(a - i s)`.
    pub contour_truncation: f64,
    /// Relative tolerance of the line quadrature.
    pub quad_tol: f64,
}

impl Default for ConeKernelConfig {
    fn default() -> Self {
        Self { contour_truncation: 40.0, quad_tol: 1e-13 }
    }
}

fn check_point(beta: f64, p: &ConePoint) -> Result<()> {
    if !(p.r >= 0.0) || !p.r.is_finite() {
        return Err(Error::InvalidInput(format!("cone radius must be nonnegative, got {}", p.r)));
    }
    if !(p.phi >= 0.0 && p.phi < beta) {
        return Err(Error::InvalidInput(format!("cone angle coordinate {} outside [0, {beta})", p.phi)));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveAngle(beta))
    }
}

fn cot(z: Complex64) -> Complex64 {
    z.tan().inv()
}

/// Heat kernel `H_t(p, q)` of the cone of angle `β`.
pub fn heat_kernel_cone(beta: f64, t: f64, p: ConePoint, q: ConePoint, cfg: &ConeKernelConfig) -> Result<f64> {
    check_beta(beta)?;
    check_point(beta, &p)?;
    check_point(beta, &q)?;
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("time must be positive, got {t}")));
    }
    let (r, rp) = (p.r, q.r);
    if r * rp == 0.0 {
        // the apex: the kernel is radial, normalised by the cone area element β r dr
        return Ok((-(r * r + rp * rp) / (4.0 * t)).exp() / (2.0 * beta * t));
    }
    let shift = p.phi - q.phi;
    let a = contour_abscissa(beta, shift).map_err(|_| Error::InvalidInput("no admissible contour".into()))?;
    let dist2 = |theta: f64| r * r + rp * rp - 2.0 * r * rp * theta.cos();
    let mut poles = 0.0;
    for th in strip_poles(beta, shift, a, false) {
        poles += (-dist2(th) / (4.0 * t)).exp() / (4.0 * PI * t);
    }
    let g = |th: Complex64| {
        let d2 = r * r + rp * rp - 2.0 * r * rp * th.cos();
        (-d2 / (4.0 * t)).exp() * cot((th + shift) * (PI / beta))
    };
    let reach = (200.0 * t + r * r + rp * rp) / (2.0 * r * rp * a.cos().abs());
    let s_max = (reach.max(1.0).acosh() + 1.0).min(cfg.contour_truncation);
    let scale = poles.abs().max(1e-300);
    let (lines, _) = line_pair_integral(g, a, s_max, cfg.quad_tol * scale * 1e-2, cfg.quad_tol);
    let remainder = lines / Complex64::new(0.0, 8.0 * PI * beta * t);
    Ok(poles + remainder.re)
}

/// Resolvent kernel `(Δ - μ)^{-1}(p, q)` of the cone for `Re μ < 0`.
pub fn resolvent_cone(beta: f64, mu: Complex64, p: ConePoint, q: ConePoint, cfg: &ConeKernelConfig) -> Result<Complex64> {
    check_beta(beta)?;
    check_point(beta, &p)?;
    check_point(beta, &q)?;
    if !(mu.re < 0.0) {
        return Err(Error::InvalidInput(format!("resolvent parameter needs Re μ < 0, got {mu}")));
    }
    let (r, rp) = (p.r, q.r);
    let k = (-mu).sqrt();
    if r * rp == 0.0 {
        let d = (r * r + rp * rp).sqrt();
        if d == 0.0 {
            return Err(Error::CoincidentPoints);
        }
        // Laplace transform of the apex kernel: ∫ e^{μt - d²/4t} dt/(2βt)
        return Ok(bessel_k0(k * d) / beta);
    }
    let shift = p.phi - q.phi;
    let a = contour_abscissa(beta, shift).map_err(|_| Error::InvalidInput("no admissible contour".into()))?;
    let mut poles = Complex64::new(0.0, 0.0);
    for th in strip_poles(beta, shift, a, false) {
        let d2 = r * r + rp * rp - 2.0 * r * rp * th.cos();
        if d2 <= 1e-28 * (r * r + rp * rp) {
            return Err(Error::CoincidentPoints);
        }
        poles += bessel_k0(k * d2.sqrt()) / (2.0 * PI);
    }
    let g = |th: Complex64| {
        let d2 = r * r + rp * rp - 2.0 * r * rp * th.cos();
        bessel_k0(k * d2.sqrt()) * 2.0 * cot((th + shift) * (PI / beta))
    };
    // K0 decays like exp(-|k| sqrt(2 r r' cosh s))
    let reach = (60.0 / k.re.max(1e-12)).powi(2) / (2.0 * r * rp * a.cos().abs());
    let s_max = (reach.max(1.0).acosh() + 1.0).min(cfg.contour_truncation);
    let scale = poles.norm().max(1e-300);
    let (lines, _) = line_pair_integral(g, a, s_max, cfg.quad_tol * scale * 1e-2, cfg.quad_tol);
    Ok(poles + lines / Complex64::new(0.0, 8.0 * PI * beta))
}

/// The rotationally symmetric density
/// `a_μ(r) = (-μ/8πiβ) ∫_{𝒞̃} cot(πϑ/β) · 2K₀(2r√(-μ) √(sin²(ϑ/2))) dϑ`.
pub fn a_mu(beta: f64, mu: f64, r: f64, cfg: &ConeKernelConfig) -> Result<f64> {
    check_beta(beta)?;
    if !(mu < 0.0) {
        return Err(Error::InvalidInput(format!("a_μ needs μ < 0, got {mu}")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("a_μ needs r > 0, got {r}")));
    }
    let a = contour_abscissa(beta, 0.0)?;
    let c = 2.0 * r * (-mu).sqrt();
    let i2pi = Complex64::new(0.0, 2.0 * PI);
    let mut poles = Complex64::new(0.0, 0.0);
    for th in strip_poles(beta, 0.0, a, true) {
        let s = (0.5 * th).sin().abs();
        poles += i2pi * (beta / PI) * 2.0 * bessel_k0(Complex64::new(c * s, 0.0));
    }
    let g = |th: Complex64| {
        let sin2 = (th * 0.5).sin().powi(2);
        cot(th * (PI / beta)) * 2.0 * bessel_k0(sin2.sqrt() * c)
    };
    // |sin(ϑ/2)| ≥ e^{|s|/2}/4 on the lines for large |s|
    let s_max = (2.0 * (4.0 * 60.0 / c).ln().max(0.0) + 2.0).min(cfg.contour_truncation);
    let scale = poles.norm().max(bessel_k0(Complex64::new(c, 0.0)).norm()).max(1e-300);
    let (lines, _) = line_pair_integral(g, a, s_max, cfg.quad_tol * scale * 1e-2, cfg.quad_tol);
    let total = (lines + poles) * (-mu) / Complex64::new(0.0, 8.0 * PI * beta);
    Ok(total.re)
}

/// The constant term `-Σ_k 𝔔(β_k)` of the small-time heat-trace expansion.
pub fn heat_trace_correction(m: &PolyhedralMetric) -> f64 {
    -m.angles().into_iter().map(q_closed).sum::<f64>()
}
