use std::f64::consts::PI;

use approx::assert_relative_eq;
use polydet::detlap::{chs_distance_term, grad_position, grad_scale, log_det_as, log_det_over_area, w_function, DetConfig};
use polydet::quad::{area, QuadratureConfig};
use polydet::regint::IntegralConfig;
use polydet::verify::{log_area_check, run_suite, FdConfig};
use polydet::{Complex64, PolyhedralMetric, VariationChannel};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn generic() -> PolyhedralMetric {
    PolyhedralMetric::new(
        0.8,
        &[(c(0.3, -0.2), -0.55), (c(-1.1, 0.4), -0.75), (c(0.9, 1.0), -0.3), (c(0.2, -1.4), -0.4)],
    )
    .unwrap()
}

#[test]
fn area_scales_like_inverse_square() {
    let cfg = QuadratureConfig::default();
    let m = generic();
    let a = area(&m, &cfg).unwrap().value;
    let sigma = 2.5;
    let v: Vec<_> = m.as_pairs().into_iter().map(|(z, b)| (z * sigma, b)).collect();
    let ms = PolyhedralMetric::new(m.scale(), &v).unwrap();
    let b = area(&ms, &cfg).unwrap().value;
    assert_relative_eq!(b, a / (sigma * sigma), max_relative = 1e-8);
}

#[test]
fn area_is_deterministic_and_its_error_estimate_honest() {
    let m = generic();
    let fine = QuadratureConfig { rel_tol: 1e-11, abs_tol: 1e-14, ..Default::default() };
    let coarse = QuadratureConfig { rel_tol: 1e-5, ..Default::default() };
    let reference = area(&m, &fine).unwrap().value;
    let r1 = area(&m, &coarse).unwrap();
    let r2 = area(&m, &coarse).unwrap();
    assert_eq!(r1.value.to_bits(), r2.value.to_bits());
    assert!((r1.value - reference).abs() <= r1.error_estimate.max(1e-5 * reference));
}

#[test]
fn doubling_the_scale() {
    let cfg = DetConfig::default();
    let m = generic();
    let a = log_det_as(&m, &cfg).unwrap();
    let b = log_det_as(&m.with_scale(2.0 * m.scale()).unwrap(), &cfg).unwrap();
    // C · ∂_C log(det/A) does not depend on C, and log A grows by log 2
    let k = grad_scale(&m) * m.scale();
    assert_relative_eq!(b.log_det - a.log_det, (k + 1.0) * 2f64.ln(), epsilon = 1e-8);
}

#[test]
fn near_degenerate_pair_suite() {
    let m = PolyhedralMetric::new(
        1.0,
        &[(c(0.0, 0.0), -0.5), (c(1e-3, 0.0), -0.5), (c(1.0, 1.0), -0.5), (c(-1.0, 0.5), -0.5)],
    )
    .unwrap();
    for r in run_suite(&m, &IntegralConfig::default(), &FdConfig::default()).unwrap() {
        assert!(r.passes(1e-5), "{r:?}");
    }
}

#[test]
fn log_area_derivatives_agree() {
    let m = generic();
    let q = QuadratureConfig { rel_tol: 1e-10, abs_tol: 1e-13, ..Default::default() };
    let fd = FdConfig { step: 1e-2, richardson: true };
    for ch in [VariationChannel::Scale, VariationChannel::Angle(2)] {
        let r = log_area_check(&m, ch, &q, &fd).unwrap();
        assert!(r.rel_err <= 1e-5, "{ch}: {r:?}");
    }
}

#[test]
fn symmetric_configuration_has_real_moment() {
    let m = PolyhedralMetric::new(
        1.0,
        &[(c(0.5, 0.8), -0.45), (c(0.5, -0.8), -0.45), (c(-1.0, 0.0), -0.6), (c(2.0, 0.0), -0.5)],
    )
    .unwrap();
    let s: Complex64 = (0..m.len()).map(|i| m.positions()[i] * grad_position(&m, i).unwrap()).sum();
    assert!(s.im.abs() < 1e-10);
}

fn arb_metric(n: usize) -> impl Strategy<Value = PolyhedralMetric> {
    (
        prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), n),
        prop::collection::vec(0.05..1.0f64, n),
        0.2..5.0f64,
    )
        .prop_filter_map("vertices too close", |(z, w, scale)| {
            let total: f64 = w.iter().sum();
            let verts: Vec<_> = z.iter().zip(&w).map(|(&(x, y), &wi)| (c(x, y), -1.9 * wi / total)).collect();
            let mut verts = verts;
            let defect = -2.0 - verts.iter().map(|v| v.1).sum::<f64>();
            verts[0].1 += defect;
            if verts.iter().any(|v| v.1 <= -0.95) {
                return None;
            }
            let m = PolyhedralMetric::new_repaired(scale, &verts).ok()?;
            (m.min_pair_distance() > 0.1).then_some(m)
        })
}

fn moved(m: &PolyhedralMetric, f: impl Fn(Complex64) -> Complex64) -> PolyhedralMetric {
    let v: Vec<_> = m.as_pairs().into_iter().map(|(z, b)| (f(z), b)).collect();
    PolyhedralMetric::new(m.scale(), &v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn log_det_over_area_is_euclidean_invariant(m in arb_metric(5), shift in (-5.0..5.0f64, -5.0..5.0f64), theta in 0.0..(2.0 * PI)) {
        let cfg = IntegralConfig::default();
        let a = log_det_over_area(&m, &cfg).unwrap();
        let rot = Complex64::from_polar(1.0, theta);
        let b = log_det_over_area(&moved(&m, |z| z * rot + c(shift.0, shift.1)), &cfg).unwrap();
        prop_assert!((a - b).abs() < 1e-11);
    }

    #[test]
    fn w_ignores_vertex_order(m in arb_metric(5)) {
        let mut v = m.as_pairs();
        v.reverse();
        let r = PolyhedralMetric::new(m.scale(), &v).unwrap();
        prop_assert!((w_function(&m) - w_function(&r)).abs() < 1e-12);
    }

    #[test]
    fn position_gradients_sum_to_zero(m in arb_metric(6)) {
        let s: Complex64 = (0..m.len()).map(|i| grad_position(&m, i).unwrap()).sum();
        let scale: f64 = (0..m.len()).map(|i| grad_position(&m, i).unwrap().norm()).sum();
        prop_assert!(s.norm() <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn comparison_is_a_cocycle(
        m1 in arb_metric(4),
        z2 in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 4),
        z3 in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 4),
    ) {
        let same = |z: &[(f64, f64)]| {
            let v: Vec<_> = z.iter().zip(m1.exponents()).map(|(&(x, y), b)| (c(x, y), b)).collect();
            PolyhedralMetric::new(m1.scale(), &v).ok().filter(|m| m.min_pair_distance() > 0.1)
        };
        let (Some(m2), Some(m3)) = (same(&z2), same(&z3)) else { return Ok(()) };
        let d12 = chs_distance_term(&m1, &m2).unwrap();
        let d23 = chs_distance_term(&m2, &m3).unwrap();
        let d13 = chs_distance_term(&m1, &m3).unwrap();
        prop_assert!((d12 + d23 - d13).abs() < 1e-9);
        let mut perm = m2.as_pairs();
        perm.rotate_left(1);
        let p2 = PolyhedralMetric::new(m2.scale(), &perm).unwrap();
        prop_assert!((chs_distance_term(&m1, &p2).unwrap() - d12).abs() < 1e-12);
    }
}
