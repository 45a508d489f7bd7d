use std::f64::consts::PI;
use std::time::Instant;

use polydet::cone::{a_mu, heat_kernel_cone, ConeKernelConfig, ConePoint};
use polydet::detlap::{chs_compare_same_angles, log_det_as, DetConfig};
use polydet::elliptic::{
    det_tetrahedron_from_area, eta_distance_identity, periods, tetrahedral_metric, thomae_check, torus_determinant,
    EllipticConfig,
};
use polydet::regint::{
    hadamard_coth_coth_with_cutoff, hadamard_coth_over_sinh_sq_with_cutoff, q_of_beta, q_of_beta_contour, q_tilde,
    q_tilde_prime, IntegralConfig,
};
use polydet::special::integrate_adaptive_points;
use polydet::verify::{run_suite, FdConfig};
use polydet::{Complex64, PolyhedralMetric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
    budget: f64,
}

fn run<F: FnOnce() -> (bool, String)>(id: u32, name: &'static str, budget: f64, f: F) -> Outcome {
    let t = Instant::now();
    let (pass, detail) = f();
    Outcome { id, name, pass, detail, seconds: t.elapsed().as_secs_f64(), budget }
}

fn plane(t: f64, d2: f64) -> f64 {
    (-d2 / (4.0 * t)).exp() / (4.0 * PI * t)
}

fn quartic(rng: &mut ChaCha8Rng) -> [Complex64; 4] {
    loop {
        let z: [Complex64; 4] =
            std::array::from_fn(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
        let ok = (0..4).all(|i| (i + 1..4).all(|j| (z[i] - z[j]).norm() > 0.4));
        if ok {
            return z;
        }
    }
}

fn contour_criterion() -> (bool, String) {
    let cfg = IntegralConfig::default();
    let mut worst = 0.0f64;
    for beta in [2.0 * PI / 3.0, PI, 1.5 * PI, 1.9 * PI, 2.1 * PI, 3.0 * PI, 5.0 * PI] {
        let e = (q_of_beta_contour(beta, &cfg).unwrap() - q_of_beta(beta).unwrap()).abs();
        worst = worst.max(e);
    }
    (worst <= 1e-8, format!("max |Q_contour - Q_closed| = {worst:.3e} (tol 1e-8)"))
}

fn cone_criterion() -> (bool, String) {
    let cfg = ConeKernelConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut plane_err = 0.0f64;
    let mut image_err = 0.0f64;
    for _ in 0..20 {
        let (r1, r2) = (rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0));
        let (u1, u2): (f64, f64) = (rng.gen(), rng.gen());
        for t in [0.1, 1.0] {
            let p = ConePoint::new(r1, u1 * 2.0 * PI);
            let q = ConePoint::new(r2, u2 * 2.0 * PI);
            let d2 = (Complex64::from_polar(r1, p.phi) - Complex64::from_polar(r2, q.phi)).norm_sqr();
            let h = heat_kernel_cone(2.0 * PI, t, p, q, &cfg).unwrap();
            plane_err = plane_err.max((h - plane(t, d2)).abs());
            for n in [2usize, 3] {
                let beta = 2.0 * PI / n as f64;
                let p = ConePoint::new(r1, u1 * beta);
                let q = ConePoint::new(r2, u2 * beta);
                let zp = Complex64::from_polar(r1, p.phi);
                let images: f64 = (0..n)
                    .map(|k| plane(t, (zp - Complex64::from_polar(r2, q.phi + k as f64 * beta)).norm_sqr()))
                    .sum();
                let h = heat_kernel_cone(beta, t, p, q, &cfg).unwrap();
                image_err = image_err.max((h - images).abs());
            }
        }
    }
    (
        plane_err <= 1e-10 && image_err <= 1e-8,
        format!("plane {plane_err:.3e} (tol 1e-10), images {image_err:.3e} (tol 1e-8), 20 pairs x t in {{0.1, 1}}"),
    )
}

fn a_mu_criterion() -> (bool, String) {
    let cfg = ConeKernelConfig::default();
    let beta = PI;
    let errs: Vec<f64> = [-25.0, -50.0, -100.0]
        .iter()
        .map(|&mu| {
            let s = 1.0 / f64::sqrt(-mu);
            let pts = [0.0, 0.01 * s, 0.1 * s, 0.5 * s, s, 2.0 * s, 4.0 * s, 1.0];
            let r = integrate_adaptive_points(|r: f64| a_mu(beta, mu, r, &cfg).unwrap() * beta * r, &pts, 1e-14, 1e-12, 2000);
            (r.value - 0.125).abs()
        })
        .collect();
    let ok = errs[0] >= 10.0 * errs[1] && errs[1] >= 10.0 * errs[2] && errs[2] <= 1e-6;
    (ok, format!("errors at mu = -25, -50, -100: {:.3e}, {:.3e}, {:.3e}", errs[0], errs[1], errs[2]))
}

fn tetrahedron_criterion() -> (bool, String) {
    let cfg = DetConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut sets = vec![[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)]];
    sets.push(quartic(&mut rng));
    sets.push(quartic(&mut rng));
    let mut det_err = 0.0f64;
    let mut rel_err = 0.0f64;
    for z in &sets {
        let m = tetrahedral_metric(z).unwrap();
        let rep = log_det_as(&m, &cfg).unwrap();
        let explicit = det_tetrahedron_from_area(z, rep.area);
        det_err = det_err.max((rep.det() - explicit).abs() / explicit);
        let data = periods(z, &EllipticConfig::default()).unwrap();
        let torus = torus_determinant(&data);
        rel_err = rel_err.max((explicit * explicit - torus).abs() / torus);
    }
    (
        det_err <= 1e-5 && rel_err <= 1e-6,
        format!("det vs explicit {det_err:.3e} (tol 1e-5), squared relation {rel_err:.3e} (tol 1e-6), 3 configurations"),
    )
}

fn five_vertex() -> PolyhedralMetric {
    let z = [(0.1, 0.2), (1.3, -0.4), (-0.9, 0.7), (0.4, 1.5), (-0.6, -1.1)];
    let b = [-0.7, -0.6, -0.5, -0.4, 0.2];
    let v: Vec<_> = z.iter().zip(b).map(|(&(x, y), b)| (Complex64::new(x, y), b)).collect();
    PolyhedralMetric::new(1.0, &v).unwrap()
}

fn gradient_criterion() -> (bool, String) {
    let cfg = IntegralConfig::default();
    let mut worst = 0.0f64;
    let mut worst_r = 0.0f64;
    let mut count = 0;
    for m in [PolyhedralMetric::tetrahedron(), five_vertex()] {
        for r in run_suite(&m, &cfg, &FdConfig::default()).unwrap() {
            worst = worst.max(r.rel_err);
            count += 1;
        }
        for r in run_suite(&m, &cfg, &FdConfig { richardson: true, ..FdConfig::default() }).unwrap() {
            worst_r = worst_r.max(r.rel_err);
        }
    }
    (
        worst <= 1e-5 && worst_r <= 1e-7,
        format!("{count} channels, max rel err {worst:.3e} (tol 1e-5), with Richardson {worst_r:.3e} (tol 1e-7)"),
    )
}

fn hadamard_criterion() -> (bool, String) {
    let cfg = IntegralConfig::default();
    let mut halving = 0.0f64;
    let mut deriv = 0.0f64;
    for beta in [0.8, PI, 4.0, 2.0 * PI, 9.5] {
        for eps in [IntegralConfig::default().cutoff, 1e-5] {
            let a = hadamard_coth_over_sinh_sq_with_cutoff(beta, eps).unwrap().finite_part;
            let b = hadamard_coth_over_sinh_sq_with_cutoff(beta, 0.5 * eps).unwrap().finite_part;
            let c = hadamard_coth_coth_with_cutoff(beta, eps).unwrap().finite_part;
            let d = hadamard_coth_coth_with_cutoff(beta, 0.5 * eps).unwrap().finite_part;
            halving = halving.max((a - b).abs()).max((c - d).abs());
        }
        let h = 1e-4 * beta;
        let fd = (q_tilde(beta + h, &cfg).unwrap() - q_tilde(beta - h, &cfg).unwrap()) / (2.0 * h);
        deriv = deriv.max((fd - q_tilde_prime(beta, &cfg).unwrap()).abs());
    }
    (
        halving < 1e-8 && deriv <= 1e-5,
        format!("cutoff halving {halving:.3e} (tol 1e-8), dQ~/dbeta {deriv:.3e} (tol 1e-5), 5 angles"),
    )
}

fn chs_criterion() -> (bool, String) {
    let cfg = DetConfig::default();
    let mut pairs = Vec::new();
    let tetra = |s: f64| {
        let v: Vec<_> = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
            .iter()
            .map(|&(x, y)| (Complex64::new(s * x, s * y), -0.5))
            .collect();
        PolyhedralMetric::new(1.0, &v).unwrap()
    };
    pairs.push((tetra(2.0), tetra(1.0)));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let b = [-0.65, -0.55, -0.45, -0.35];
    let pick = |rng: &mut ChaCha8Rng| {
        let z = quartic(rng);
        let v: Vec<_> = z.iter().zip(b).map(|(&z, b)| (z, b)).collect();
        PolyhedralMetric::new(1.0, &v).unwrap()
    };
    let m1 = pick(&mut rng);
    let m2 = pick(&mut rng);
    pairs.push((m1, m2));
    let mut worst = 0.0f64;
    for (m1, m2) in &pairs {
        let chs = chs_compare_same_angles(m1, m2, &cfg.quad).unwrap();
        let diff = log_det_as(m1, &cfg).unwrap().log_det - log_det_as(m2, &cfg).unwrap().log_det;
        worst = worst.max((chs - diff).abs() / diff.abs().max(1.0));
    }
    (worst <= 1e-5, format!("max rel deviation {worst:.3e} (tol 1e-5), 2 pairs"))
}

fn elliptic_criterion() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut jac, mut tho, mut eta) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let z = quartic(&mut rng);
        let d = periods(&z, &EllipticConfig::default()).unwrap();
        jac = jac.max(d.jacobi_residual());
        tho = tho.max(thomae_check(&d));
        eta = eta.max(eta_distance_identity(&d));
    }
    (
        jac < 1e-10 && tho < 1e-7 && eta < 1e-7,
        format!("Jacobi {jac:.3e} (tol 1e-10), Thomae {tho:.3e} (tol 1e-7), eta-distance {eta:.3e} (tol 1e-7)"),
    )
}

#[test]
fn acceptance() {
    let outcomes = vec![
        run(1, "contour representation of Q", 10.0, contour_criterion),
        run(2, "cone heat kernel oracles", 60.0, cone_criterion),
        run(3, "a_mu integral converges to Q", 120.0, a_mu_criterion),
        run(4, "tetrahedron end to end", 120.0, tetrahedron_criterion),
        run(5, "gradient suite", 60.0, gradient_criterion),
        run(6, "Hadamard stability", 30.0, hadamard_criterion),
        run(7, "same-angle comparison", 120.0, chs_criterion),
        run(8, "elliptic identities", 30.0, elliptic_criterion),
    ];
    let mut all = true;
    for o in &outcomes {
        let in_time = o.seconds <= o.budget;
        let pass = o.pass && in_time;
        all &= pass;
        println!(
            "{} [{}] {}: {}; {:.2}s (budget {}s)",
            if pass { "PASS" } else { "FAIL" },
            o.id,
            o.name,
            o.detail,
            o.seconds,
            o.budget
        );
    }
    assert!(all, "acceptance criteria failed");
}
