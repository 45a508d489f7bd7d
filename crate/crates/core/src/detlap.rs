//! The determinant of the Laplacian of a polyhedral metric on the sphere, its
//! gradients in vertex positions, cone angles and scale, and the same-angle
//! comparison of two metrics.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::PolyhedralMetric;
use crate::quad::{area, QuadratureConfig};
use crate::regint::{hadamard_coth_coth, q_tilde_prime, IntegralConfig};
use crate::special::{KahanSum, EULER_GAMMA};

/// Tolerance for matching exponent multisets in [`chs_compare_same_angles`].
pub const ANGLE_MATCH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DetConfig {
    pub quad: QuadratureConfig,
    pub integrals: IntegralConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DetReport {
    pub log_det: f64,
    pub log_det_over_area: f64,
    pub area: f64,
    pub area_error: f64,
    pub w_term: f64,
    pub f_terms: Vec<f64>,
    pub reference_term: f64,
    pub prefactor: f64,
}

impl DetReport {
    pub fn det(&self) -> f64 {
        self.log_det.exp()
    }
}

/// Area-independent pieces of the determinant.
#[derive(Clone, Debug, PartialEq)]
pub struct DetTerms {
    pub w_term: f64,
    pub f_terms: Vec<f64>,
    pub reference_term: f64,
    pub prefactor: f64,
}

impl DetTerms {
    pub fn log_det_over_area(&self) -> f64 {
        let mut acc = self.prefactor + self.w_term;
        for f in &self.f_terms {
            acc += f;
        }
        acc - self.reference_term
    }
}

/// `(π/3) Σ_{k<l} b_k b_l (1/β_k + 1/β_l) log|z_k - z_l|`.
pub fn w_function(m: &PolyhedralMetric) -> f64 {
    let v = m.vertices();
    let mut acc = KahanSum::new();
    for k in 0..v.len() {
        for l in k + 1..v.len() {
            let (a, b) = (&v[k], &v[l]);
            let d = (a.position() - b.position()).norm();
            acc.add(a.exponent() * b.exponent() * (1.0 / a.angle() + 1.0 / b.angle()) * d.ln());
        }
    }
    acc.value() * PI / 3.0
}

fn g_bracket(delta: f64, scale: f64, cfg: &IntegralConfig) -> Result<f64> {
    let h = hadamard_coth_coth(delta, cfg)?.finite_part;
    let tp = 2.0 * PI;
    Ok(h / 8.0
        + (delta / tp + tp / delta) * (2.0 * PI * PI * scale / delta).ln() / 12.0
        + (delta / (4.0 * PI) - tp / delta) / 12.0
        + PI * EULER_GAMMA / (3.0 * delta))
}

/// `𝔉(β, C)`: the bracket evaluated at `2π` minus at `β`.
pub fn f_function(beta: f64, scale: f64, cfg: &IntegralConfig) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::NonpositiveAngle(beta));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::NonpositiveScale(scale));
    }
    Ok(g_bracket(2.0 * PI, scale, cfg)? - g_bracket(beta, scale, cfg)?)
}

/// `∂𝔉/∂β = 𝔔̃′(β) + πγ/(3β²) + (1/6β)(2π/β - β/2π) log(2π√C/β)`.
pub fn f_function_dbeta(beta: f64, scale: f64, cfg: &IntegralConfig) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::NonpositiveScale(scale));
    }
    let qp = q_tilde_prime(beta, cfg)?;
    Ok(qp
        + PI * EULER_GAMMA / (3.0 * beta * beta)
        + (2.0 * PI / beta - beta / (2.0 * PI)) * (2.0 * PI * scale.sqrt() / beta).ln() / (6.0 * beta))
}

/// `∂𝔉/∂C = (2 - β/2π - 2π/β)/(12C)`.
pub fn f_function_dscale(beta: f64, scale: f64) -> f64 {
    (2.0 - beta / (2.0 * PI) - 2.0 * PI / beta) / (12.0 * scale)
}

pub fn det_terms(m: &PolyhedralMetric, cfg: &IntegralConfig) -> Result<DetTerms> {
    let c = m.scale();
    let f_terms = m.angles().iter().map(|&b| f_function(b, c, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(DetTerms {
        w_term: w_function(m),
        f_terms,
        reference_term: 4.0 * f_function(PI, 1.0, cfg)?,
        prefactor: -((4.0 * c).cbrt() * PI).ln(),
    })
}

/// `log(det Δ / Area)`, which needs no quadrature.
pub fn log_det_over_area(m: &PolyhedralMetric, cfg: &IntegralConfig) -> Result<f64> {
    Ok(det_terms(m, cfg)?.log_det_over_area())
}

pub fn log_det_as(m: &PolyhedralMetric, cfg: &DetConfig) -> Result<DetReport> {
    let t = det_terms(m, &cfg.integrals)?;
    let a = area(m, &cfg.quad)?;
    let mut log_det = a.value.ln() + t.prefactor + t.w_term;
    for f in &t.f_terms {
        log_det += f;
    }
    log_det -= t.reference_term;
    Ok(DetReport {
        log_det,
        log_det_over_area: t.log_det_over_area(),
        area: a.value,
        area_error: a.error_estimate,
        w_term: t.w_term,
        f_terms: t.f_terms,
        reference_term: t.reference_term,
        prefactor: t.prefactor,
    })
}

/// Wirtinger derivative `∂/∂z_i` of `log(det Δ / Area)`.
pub fn grad_position(m: &PolyhedralMetric, i: usize) -> Result<Complex64> {
    m.check_index(i)?;
    let v = m.vertices();
    let (zi, bi, gi) = (v[i].position(), v[i].exponent(), v[i].angle());
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    for (j, vj) in v.iter().enumerate() {
        if j == i {
            continue;
        }
        let t = bi * vj.exponent() * (1.0 / gi + 1.0 / vj.angle()) / (zi - vj.position());
        re.add(t.re);
        im.add(t.im);
    }
    Ok(Complex64::new(re.value(), im.value()) * (PI / 6.0))
}

/// `𝔅_q`, the angle-dependent quantity whose differences give angle gradients.
pub fn b_function(m: &PolyhedralMetric, q: usize, cfg: &IntegralConfig) -> Result<f64> {
    m.check_index(q)?;
    let v = m.vertices();
    let (zq, bq) = (v[q].position(), v[q].angle());
    let mut acc = KahanSum::new();
    for (j, vj) in v.iter().enumerate() {
        if j != q {
            acc.add((1.0 / vj.angle() + 2.0 * PI / (bq * bq)) * vj.exponent() * (vj.position() - zq).norm().ln());
        }
    }
    Ok(acc.value() / 6.0 + f_function_dbeta(bq, m.scale(), cfg)?)
}

/// Derivative of `log(det Δ / Area)` along `β_i ↦ β_i + t`, `β_0 ↦ β_0 - t`.
pub fn grad_angle(m: &PolyhedralMetric, i: usize, cfg: &IntegralConfig) -> Result<f64> {
    m.check_index(i)?;
    if i == 0 {
        return Err(Error::GaugeVertexVariation);
    }
    Ok(b_function(m, i, cfg)? - b_function(m, 0, cfg)?)
}

/// `∂_C log(det Δ / Area) = Σ_j ∂_C 𝔉(β_j, C) - 1/(3C)`.
pub fn grad_scale(m: &PolyhedralMetric) -> f64 {
    let c = m.scale();
    let mut acc = KahanSum::new();
    for b in m.angles() {
        acc.add(f_function_dscale(b, c));
    }
    acc.value() - 1.0 / (3.0 * c)
}

fn paired_vertices(m: &PolyhedralMetric) -> Vec<(Complex64, f64)> {
    let mut v = m.as_pairs();
    v.sort_by(|a, b| {
        a.1.total_cmp(&b.1).then(a.0.re.total_cmp(&b.0.re)).then(a.0.im.total_cmp(&b.0.im))
    });
    v
}

/// The distance part of the same-angle comparison:
/// `(1/6) Σ_{k<l} a_k a_l (1/(1+a_k) + 1/(1+a_l)) (log|P_k - P_l| - log|Q_k - Q_l|)`.
pub fn chs_distance_term(m1: &PolyhedralMetric, m2: &PolyhedralMetric) -> Result<f64> {
    let p = paired_vertices(m1);
    let q = paired_vertices(m2);
    if p.len() != q.len() || p.iter().zip(&q).any(|(a, b)| (a.1 - b.1).abs() > ANGLE_MATCH_TOL) {
        return Err(Error::AngleMultisetMismatch);
    }
    if m1.scale() != m2.scale() {
        return Err(Error::ScaleMismatch(m1.scale(), m2.scale()));
    }
    let mut acc = KahanSum::new();
    for k in 0..p.len() {
        for l in k + 1..p.len() {
            let (ak, al) = (p[k].1, p[l].1);
            let d1 = (p[k].0 - p[l].0).norm().ln();
            let d2 = (q[k].0 - q[l].0).norm().ln();
            acc.add(ak * al * (1.0 / (1.0 + ak) + 1.0 / (1.0 + al)) * (d1 - d2));
        }
    }
    Ok(acc.value() / 6.0)
}

/// `log(det Δ^{m1} / det Δ^{m2})` for metrics with the same cone angles and scale.
pub fn chs_compare_same_angles(m1: &PolyhedralMetric, m2: &PolyhedralMetric, cfg: &QuadratureConfig) -> Result<f64> {
    let d = chs_distance_term(m1, m2)?;
    let a1 = area(m1, cfg)?.value;
    let a2 = area(m2, cfg)?.value;
    Ok((a1 / a2).ln() + d)
}
