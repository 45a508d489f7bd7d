//! The elliptic curve `w² = ∏(z - z_k)` behind the tetrahedral case: periods of
//! `ω = dz/w`, Dedekind eta and Jacobi theta constants, the Thomae and
//! eta–distance identities, and the explicit tetrahedron determinant.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::PolyhedralMetric;
use crate::quad::{area, QuadratureConfig};
use crate::special::integrate_adaptive;

/// Relative separation below which four points count as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticConfig {
    pub quad_tol: f64,
}

impl Default for EllipticConfig {
    fn default() -> Self {
        Self { quad_tol: 1e-14 }
    }
}

/// Periods of `ω` in a basis with `τ = B/A` in the standard fundamental domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EllipticData {
    pub period_a: Complex64,
    pub period_b: Complex64,
    pub tau: Complex64,
    /// `(θ₂, θ₃, θ₄)` at `τ`.
    pub theta_constants: [Complex64; 3],
    pub theta1_prime: Complex64,
    pub eta: Complex64,
    /// The branch points in the order used to build the cycles.
    pub points: [Complex64; 4],
}

impl EllipticData {
    /// `|θ₁′ - π θ₂ θ₃ θ₄| / |θ₁′|`.
    pub fn jacobi_residual(&self) -> f64 {
        let [t2, t3, t4] = self.theta_constants;
        (self.theta1_prime - t2 * t3 * t4 * PI).norm() / self.theta1_prime.norm()
    }

    /// `|θ₁′ - 2π η³| / |θ₁′|`.
    pub fn eta_cube_residual(&self) -> f64 {
        (self.theta1_prime - self.eta.powi(3) * (2.0 * PI)).norm() / self.theta1_prime.norm()
    }

    /// `|Im(A B̄)|`, the area of the torus `ℂ / (Aℤ + Bℤ)`.
    pub fn torus_area(&self) -> f64 {
        (self.period_a * self.period_b.conj()).im.abs()
    }
}

fn check_points(z: &[Complex64; 4]) -> Result<()> {
    let mut dmin = f64::INFINITY;
    let mut dmax: f64 = 0.0;
    for i in 0..4 {
        if !z[i].re.is_finite() || !z[i].im.is_finite() {
            return Err(Error::InvalidInput("branch points must be finite".into()));
        }
        for j in i + 1..4 {
            let d = (z[i] - z[j]).norm();
            dmin = dmin.min(d);
            dmax = dmax.max(d);
        }
    }
    let rel = dmin / dmax;
    if !(rel >= DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateQuartic(if rel.is_nan() { 0.0 } else { rel }));
    }
    Ok(())
}

/// `∫_p^q dz / √((z-p)(z-q)(z-r)(z-s))` along the straight segment, with
/// `z = p + (q - p)(1 - cos θ)/2` removing both endpoint singularities.
fn segment_integral(p: Complex64, q: Complex64, r: Complex64, s: Complex64, tol: f64) -> Complex64 {
    let sr = (p - r).sqrt();
    let ss = (p - s).sqrt();
    let dr = (q - p) / (p - r);
    let ds = (q - p) / (p - s);
    let one = Complex64::new(1.0, 0.0);
    let f = |th: f64| {
        let t = 0.5 * (1.0 - th.cos());
        // √((z-r)/(p-r)) stays on the principal branch: the ratio never
        // crosses the negative axis while z runs along [p, q]
        let w = sr * (one + dr * t).sqrt() * ss * (one + ds * t).sqrt();
        Complex64::new(0.0, -1.0) / w
    };
    integrate_adaptive(f, 0.0, PI, tol, tol, 2000).value
}

/// Periods `A, B` of `ω` along the cycles around `(z₁, z₂)` and `(z₂, z₃)`,
/// the points being ordered by angle about their centroid. The basis is then
/// reduced so that `τ = B/A` lies in the fundamental domain.
pub fn periods(z: &[Complex64; 4], cfg: &EllipticConfig) -> Result<EllipticData> {
    check_points(z)?;
    let c = (z[0] + z[1] + z[2] + z[3]) / 4.0;
    let mut pts = *z;
    pts.sort_by(|a, b| (a - c).arg().total_cmp(&(b - c).arg()));
    let a = segment_integral(pts[0], pts[1], pts[2], pts[3], cfg.quad_tol) * 2.0;
    let mut b = segment_integral(pts[1], pts[2], pts[3], pts[0], cfg.quad_tol) * 2.0;
    if (b / a).im < 0.0 {
        b = -b;
    }
    let (a, b) = reduce_basis(a, b);
    let tau = b / a;
    Ok(EllipticData {
        period_a: a,
        period_b: b,
        tau,
        theta_constants: theta_constants(tau)?,
        theta1_prime: theta1_prime(tau)?,
        eta: dedekind_eta(tau)?,
        points: pts,
    })
}

/// SL(2, ℤ) change of basis bringing `B/A` into `|Re τ| ≤ 1/2, |τ| ≥ 1`.
fn reduce_basis(mut a: Complex64, mut b: Complex64) -> (Complex64, Complex64) {
    for _ in 0..200 {
        let n = (b / a).re.round();
        b -= a * n;
        if (b / a).norm() < 1.0 - 1e-14 {
            let t = a;
            a = b;
            b = -t;
        } else {
            break;
        }
    }
    (a, b)
}

fn check_tau(tau: Complex64) -> Result<()> {
    if tau.im > 0.0 && tau.re.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("modulus must lie in the upper half plane, got {tau}")))
    }
}

const SERIES_TOL: f64 = 1e-18;

/// Dedekind eta `η(τ) = q^{1/24} ∏(1 - qⁿ)`, `q = e^{2πiτ}`, evaluated after
/// moving `τ` into the fundamental domain.
pub fn dedekind_eta(tau: Complex64) -> Result<Complex64> {
    check_tau(tau)?;
    let mut t = tau;
    let mut mult = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    for _ in 0..200 {
        let n = t.re.round();
        if n != 0.0 {
            // η(τ) = e^{iπn/12} η(τ - n)
            mult *= (i * (PI * n / 12.0)).exp();
            t -= n;
        }
        if t.norm() < 1.0 - 1e-14 {
            // with σ = -1/τ: η(τ) = η(-1/σ) = √(-iσ) η(σ)
            let sigma = -t.inv();
            mult *= (-i * sigma).sqrt();
            t = sigma;
        } else {
            break;
        }
    }
    Ok(mult * eta_series(t))
}

fn eta_series(tau: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let q = (i * (2.0 * PI) * tau).exp();
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qn = q;
    for _ in 0..10_000 {
        prod *= Complex64::new(1.0, 0.0) - qn;
        if qn.norm() < SERIES_TOL {
            break;
        }
        qn *= q;
    }
    (i * (PI / 12.0) * tau).exp() * prod
}

/// `(θ₂, θ₃, θ₄)(τ)` from the nome `q = e^{iπτ}`.
pub fn theta_constants(tau: Complex64) -> Result<[Complex64; 3]> {
    check_tau(tau)?;
    let i = Complex64::new(0.0, 1.0);
    let q4 = (i * (PI / 4.0) * tau).exp();
    let mut t2 = Complex64::new(0.0, 0.0);
    let mut t3 = Complex64::new(1.0, 0.0);
    let mut t4 = Complex64::new(1.0, 0.0);
    for n in 0..10_000u64 {
        let a = (i * PI * tau * (n * (n + 1)) as f64).exp();
        t2 += a;
        let b = (i * PI * tau * (n * n) as f64).exp();
        if n > 0 {
            t3 += b * 2.0;
            t4 += b * if n % 2 == 0 { 2.0 } else { -2.0 };
            if b.norm() < SERIES_TOL {
                break;
            }
        }
    }
    Ok([t2 * q4 * 2.0, t3, t4])
}

/// `θ₁′(0 | τ)` for `θ₁(z) = 2 Σ (-1)ⁿ q^{(n+1/2)²} sin((2n+1)πz)`.
pub fn theta1_prime(tau: Complex64) -> Result<Complex64> {
    check_tau(tau)?;
    let i = Complex64::new(0.0, 1.0);
    let q4 = (i * (PI / 4.0) * tau).exp();
    let mut s = Complex64::new(0.0, 0.0);
    for n in 0..10_000u64 {
        let a = (i * PI * tau * (n * (n + 1)) as f64).exp() * (2 * n + 1) as f64;
        s += if n % 2 == 0 { a } else { -a };
        if a.norm() < SERIES_TOL {
            break;
        }
    }
    Ok(s * q4 * (2.0 * PI))
}

const PAIRINGS: [[usize; 4]; 3] = [[0, 1, 2, 3], [0, 2, 1, 3], [0, 3, 1, 2]];

/// Largest relative residual of `θ_k⁸ = (2π)^{-4} A⁴ (z_a - z_b)² (z_c - z_d)²`,
/// the three theta constants matched to the three pairings of the branch
/// points by the assignment with the smallest residual.
pub fn thomae_check(data: &EllipticData) -> f64 {
    let z = data.points;
    let a4 = data.period_a.powi(4) / (2.0 * PI).powi(4);
    let rhs: Vec<Complex64> = PAIRINGS
        .iter()
        .map(|p| a4 * (z[p[0]] - z[p[1]]).powi(2) * (z[p[2]] - z[p[3]]).powi(2))
        .collect();
    let lhs: Vec<Complex64> = data.theta_constants.iter().map(|t| t.powi(8)).collect();
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    perms
        .iter()
        .map(|p| (0..3).map(|k| (lhs[k] - rhs[p[k]]).norm() / lhs[k].norm()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Relative residual of `|η(τ)|² = |A| / (2^{5/3} π) ∏_{i<j} |z_i - z_j|^{1/6}`.
pub fn eta_distance_identity(data: &EllipticData) -> f64 {
    let lhs = data.eta.norm_sqr();
    let rhs = data.period_a.norm() / (2f64.powf(5.0 / 3.0) * PI) * distance_product(&data.points).powf(1.0 / 6.0);
    (lhs - rhs).abs() / lhs
}

fn distance_product(z: &[Complex64; 4]) -> f64 {
    let mut p = 1.0;
    for i in 0..4 {
        for j in i + 1..4 {
            p *= (z[i] - z[j]).norm();
        }
    }
    p
}

/// Metric `∏|z - z_k|^{-1} |dz|²` of the tetrahedron with vertices `z`.
pub fn tetrahedral_metric(z: &[Complex64; 4]) -> Result<PolyhedralMetric> {
    let verts: Vec<_> = z.iter().map(|&p| (p, -0.5)).collect();
    PolyhedralMetric::new(1.0, &verts)
}

/// `det Δ = (2^{2/3} π)^{-1} · Area(X) · ∏_{i<j} |z_i - z_j|^{1/6}`.
pub fn det_tetrahedron(z: &[Complex64; 4], cfg: &QuadratureConfig) -> Result<f64> {
    check_points(z)?;
    let m = tetrahedral_metric(z)?;
    let a = area(&m, cfg)?.value;
    Ok(det_tetrahedron_from_area(z, a))
}

pub fn det_tetrahedron_from_area(z: &[Complex64; 4], area_x: f64) -> f64 {
    area_x * distance_product(z).powf(1.0 / 6.0) / (2f64.powf(2.0 / 3.0) * PI)
}

/// `det′Δ` of the flat torus `ℂ/(Aℤ + Bℤ)`: `Area · Im τ · |η(τ)|⁴`.
pub fn torus_determinant(data: &EllipticData) -> f64 {
    data.torus_area() * data.tau.im * data.eta.norm_sqr().powi(2)
}
