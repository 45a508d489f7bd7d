//! Finite-difference checks of the analytic gradients.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::detlap::{grad_angle, grad_position, grad_scale, log_det_over_area};
use crate::error::{Error, Result};
use crate::metric::{PolyhedralMetric, VariationChannel};
use crate::quad::{area, integrate, QuadratureConfig};
use crate::regint::IntegralConfig;

/// Denominator floor for relative errors of (nearly) vanishing gradients.
pub const REL_ERR_FLOOR: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    /// Relative step; multiplied by the natural length of the perturbed quantity.
    pub step: f64,
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { step: 1e-4, richardson: false }
    }
}

impl FdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig("finite-difference step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientReport {
    pub channel: VariationChannel,
    pub analytic: Complex64,
    pub finite_difference: Complex64,
    pub abs_err: f64,
    pub rel_err: f64,
}

impl GradientReport {
    pub fn new(channel: VariationChannel, analytic: Complex64, finite_difference: Complex64) -> Self {
        let abs_err = (analytic - finite_difference).norm();
        Self { channel, analytic, finite_difference, abs_err, rel_err: abs_err / analytic.norm().max(REL_ERR_FLOOR) }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.rel_err <= tol
    }
}

// Position channels serialize values as `[re, im]`, the others as numbers.
impl Serialize for GradientReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("GradientReport", 5)?;
        st.serialize_field("channel", &self.channel)?;
        if let VariationChannel::Position(_) = self.channel {
            st.serialize_field("analytic", &[self.analytic.re, self.analytic.im])?;
            st.serialize_field("finiteDifference", &[self.finite_difference.re, self.finite_difference.im])?;
        } else {
            st.serialize_field("analytic", &self.analytic.re)?;
            st.serialize_field("finiteDifference", &self.finite_difference.re)?;
        }
        st.serialize_field("absErr", &self.abs_err)?;
        st.serialize_field("relErr", &self.rel_err)?;
        st.end()
    }
}

pub fn analytic_gradient(m: &PolyhedralMetric, channel: VariationChannel, cfg: &IntegralConfig) -> Result<Complex64> {
    match channel {
        VariationChannel::Position(i) => grad_position(m, i),
        VariationChannel::Angle(i) => grad_angle(m, i, cfg).map(|g| Complex64::new(g, 0.0)),
        VariationChannel::Scale => Ok(Complex64::new(grad_scale(m), 0.0)),
    }
}

/// Step length actually used along `channel`.
pub fn fd_step(m: &PolyhedralMetric, channel: VariationChannel, fd: &FdConfig) -> Result<f64> {
    Ok(match channel {
        VariationChannel::Position(i) => {
            m.check_index(i)?;
            fd.step * m.nearest_neighbour_distance(i)
        }
        VariationChannel::Angle(i) => {
            m.check_index(i)?;
            fd.step * m.vertices()[i].angle()
        }
        VariationChannel::Scale => fd.step * m.scale(),
    })
}

fn perturbed(m: &PolyhedralMetric, channel: VariationChannel, dir: Complex64, t: f64) -> Result<PolyhedralMetric> {
    match channel {
        VariationChannel::Position(i) => m.with_position_shift(i, dir * t),
        VariationChannel::Angle(i) => m.with_angle_shift(i, t / (2.0 * PI)),
        VariationChannel::Scale => m
            .with_scale(m.scale() + t)
            .map_err(|e| Error::PerturbationLeavesDomain(format!("rescaling: {e}"))),
    }
}

fn central<F>(f: &F, h: f64, richardson: bool) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let d = |h: f64| -> Result<f64> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
    if richardson {
        Ok((4.0 * d(0.5 * h)? - d(h)?) / 3.0)
    } else {
        d(h)
    }
}

/// Central difference of `log(det Δ / Area)` along `channel`. Position
/// channels return the Wirtinger derivative `(∂_x - i ∂_y)/2`.
pub fn fd_gradient(
    m: &PolyhedralMetric,
    channel: VariationChannel,
    cfg: &IntegralConfig,
    fd: &FdConfig,
) -> Result<Complex64> {
    fd.validate()?;
    if channel == VariationChannel::Angle(0) {
        return Err(Error::GaugeVertexVariation);
    }
    let h = fd_step(m, channel, fd)?;
    let along = |dir: Complex64| {
        let f = |t: f64| log_det_over_area(&perturbed(m, channel, dir, t)?, cfg);
        central(&f, h, fd.richardson)
    };
    match channel {
        VariationChannel::Position(_) => {
            let dx = along(Complex64::new(1.0, 0.0))?;
            let dy = along(Complex64::new(0.0, 1.0))?;
            Ok(Complex64::new(dx, -dy) * 0.5)
        }
        _ => Ok(Complex64::new(along(Complex64::new(1.0, 0.0))?, 0.0)),
    }
}

/// Every channel of `m` in report order.
pub fn channels(m: &PolyhedralMetric) -> Vec<VariationChannel> {
    let n = m.len();
    let mut out: Vec<_> = (0..n).map(VariationChannel::Position).collect();
    out.extend((1..n).map(VariationChannel::Angle));
    out.push(VariationChannel::Scale);
    out
}

pub fn gradient_report(
    m: &PolyhedralMetric,
    channel: VariationChannel,
    cfg: &IntegralConfig,
    fd: &FdConfig,
) -> Result<GradientReport> {
    let a = analytic_gradient(m, channel, cfg)?;
    let d = fd_gradient(m, channel, cfg, fd)?;
    Ok(GradientReport::new(channel, a, d))
}

pub fn run_suite(m: &PolyhedralMetric, cfg: &IntegralConfig, fd: &FdConfig) -> Result<Vec<GradientReport>> {
    channels(m).into_par_iter().map(|ch| gradient_report(m, ch, cfg, fd)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LogAreaCheck {
    pub finite_difference: f64,
    pub quadrature: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

/// Derivative of `log Area` along an angle or scale channel, once by
/// differencing areas and once as `-∫φ̇ dS / Area`.
pub fn log_area_check(
    m: &PolyhedralMetric,
    channel: VariationChannel,
    qcfg: &QuadratureConfig,
    fd: &FdConfig,
) -> Result<LogAreaCheck> {
    fd.validate()?;
    if let VariationChannel::Position(_) = channel {
        return Err(Error::InvalidInput("log-area check takes angle or scale channels".into()));
    }
    if channel == VariationChannel::Angle(0) {
        return Err(Error::GaugeVertexVariation);
    }
    let h = fd_step(m, channel, fd)?;
    let f = |t: f64| Ok(area(&perturbed(m, channel, Complex64::new(1.0, 0.0), t)?, qcfg)?.value.ln());
    let finite_difference = central(&f, h, fd.richardson)?;
    let a = area(m, qcfg)?.value;
    let phi = integrate(m, |z| m.variation_field(channel, z).map(|v| v.re).unwrap_or(0.0), qcfg)?.value;
    let quadrature = -phi / a;
    let abs_err = (finite_difference - quadrature).abs();
    Ok(LogAreaCheck { finite_difference, quadrature, abs_err, rel_err: abs_err / quadrature.abs().max(REL_ERR_FLOOR) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tetrahedron_examples() {
        let m = PolyhedralMetric::tetrahedron();
        let cfg = IntegralConfig::default();
        let fd = FdConfig::default();
        let g = fd_gradient(&m, VariationChannel::Position(0), &cfg, &fd).unwrap();
        assert_relative_eq!(g.re, 0.125, epsilon = 1e-6);
        assert!(g.im.abs() < 1e-6);
        let s = fd_gradient(&m, VariationChannel::Scale, &cfg, &fd).unwrap();
        assert_relative_eq!(s.re, -0.5, epsilon = 1e-7);
        // log(det/A) = -(1/2) log C + const, so the plain difference is off by h²/6
        let r = fd_gradient(&m, VariationChannel::Scale, &cfg, &FdConfig { richardson: true, ..fd }).unwrap();
        assert_relative_eq!((s - r).re, -1e-8 / 6.0, epsilon = 1e-11);
        let fine = FdConfig { step: 5e-5, richardson: false };
        let s = fd_gradient(&m, VariationChannel::Scale, &cfg, &fine).unwrap();
        let r = fd_gradient(&m, VariationChannel::Scale, &cfg, &FdConfig { richardson: true, ..fine }).unwrap();
        assert!((r - s).norm() < 1e-9);
    }

    #[test]
    fn suite_has_one_report_per_channel() {
        let m = PolyhedralMetric::tetrahedron();
        let reps = run_suite(&m, &IntegralConfig::default(), &FdConfig::default()).unwrap();
        assert_eq!(reps.len(), 8);
        for r in &reps {
            assert!(r.passes(1e-5), "{r:?}");
        }
    }

    #[test]
    fn gauge_channel_is_rejected() {
        let m = PolyhedralMetric::tetrahedron();
        let e = fd_gradient(&m, VariationChannel::Angle(0), &IntegralConfig::default(), &FdConfig::default());
        assert!(matches!(e, Err(Error::GaugeVertexVariation)));
    }

    #[test]
    fn report_json_shapes() {
        let r = GradientReport::new(VariationChannel::Scale, Complex64::new(-0.5, 0.0), Complex64::new(-0.5, 0.0));
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        assert_eq!(v["channel"], "C");
        assert_eq!(v["analytic"], -0.5);
        let r = GradientReport::new(VariationChannel::Position(1), Complex64::new(1.0, 2.0), Complex64::new(1.0, 2.0));
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        assert_eq!(v["analytic"][1], 2.0);
    }
}
