//! Numerical building blocks shared by the rest of the crate: Gauss–Legendre
//! rules, an adaptive Gauss–Kronrod integrator over real and complex valued
//! integrands, and the Macdonald functions `K0`, `K1` for complex arguments.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use once_cell::sync::Lazy;

/// Euler–Mascheroni constant to 30 significant digits (truncated to f64).
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577215664901532860606512090082;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub(crate) static GL4: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| gauss_legendre(4));
pub(crate) static GL8: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| gauss_legendre(8));

/// Values an adaptive integrator can accumulate.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

// Kronrod 15-point extension of the 7-point Gauss rule (abscissae in decreasing order).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<T: Integrand, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let kronrod = kronrod * h;
    let gauss = gauss * h;
    (kronrod, (kronrod - gauss).magnitude())
}

/// Outcome of a one-dimensional adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Integral1d<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

/// Adaptive Gauss–Kronrod 15/7 quadrature on the finite interval `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)` or `max_intervals` is
/// reached.
pub fn integrate_adaptive<T, F>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Integral1d<T>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    integrate_adaptive_points(f, &[a, b], abs_tol, rel_tol, max_intervals)
}

/// Same as [`integrate_adaptive`] but starting from the partition given by
/// `points` (sorted, at least two entries).
pub fn integrate_adaptive_points<T, F>(
    f: F,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Integral1d<T>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    assert!(points.len() >= 2);
    let mut segs: Vec<(f64, f64, T, f64)> = points
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let total = segs.iter().fold(T::zero(), |acc, s| acc + s.2);
        let err: f64 = segs.iter().map(|s| s.3).sum();
        let tol = abs_tol.max(rel_tol * total.magnitude());
        if err <= tol || segs.len() >= max_intervals {
            return Integral1d {
                value: total,
                error: err,
                intervals: segs.len(),
                converged: err <= tol,
            };
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, s)| if s.3 > best.1 { (i, s.3) } else { best });
        let (a, b, _, _) = segs[idx];
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // interval exhausted at machine precision
            return Integral1d {
                value: total,
                error: err,
                intervals: segs.len(),
                converged: false,
            };
        }
        let (v1, e1) = gk15(&f, a, mid);
        let (v2, e2) = gk15(&f, mid, b);
        segs[idx] = (a, mid, v1, e1);
        segs.insert(idx + 1, (mid, b, v2, e2));
    }
}

/// Modified Bessel function of the second kind `K0(z)` for `Re z > 0`.
pub fn bessel_k0(z: Complex64) -> Complex64 {
    if z.norm() <= 2.0 {
        k0_series(z)
    } else {
        k_integral(z, 0)
    }
}

/// Modified Bessel function of the second kind `K1(z)` for `Re z > 0`.
pub fn bessel_k1(z: Complex64) -> Complex64 {
    if z.norm() <= 2.0 {
        k1_series(z)
    } else {
        k_integral(z, 1)
    }
}

/// `K0` on the positive real axis.
pub fn bessel_k0_real(x: f64) -> f64 {
    bessel_k0(Complex64::new(x, 0.0)).re
}

/// `K1` on the positive real axis.
pub fn bessel_k1_real(x: f64) -> f64 {
    bessel_k1(Complex64::new(x, 0.0)).re
}

// K0(z) = -(log(z/2) + γ) I0(z) + Σ (z²/4)^k / (k!)² H_k
fn k0_series(z: Complex64) -> Complex64 {
    let q = z * z * 0.25;
    let mut term = Complex64::new(1.0, 0.0);
    let mut i0 = term;
    let mut tail = Complex64::new(0.0, 0.0);
    let mut harmonic = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term = term * q / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
        if term.norm() < 1e-18 * i0.norm() {
            break;
        }
    }
    -((z * 0.5).ln() + EULER_GAMMA) * i0 + tail
}

// K1(z) = 1/z + log(z/2) I1(z) - (z/4) Σ (z²/4)^k/(k!(k+1)!) (ψ(k+1) + ψ(k+2))
fn k1_series(z: Complex64) -> Complex64 {
    let q = z * z * 0.25;
    let half = z * 0.5;
    let mut term = half; // (z/2)^{2k+1} / (k!(k+1)!) at k = 0
    let mut i1 = term;
    // ψ(1) + ψ(2) = -2γ + 1
    let mut psi_sum = -2.0 * EULER_GAMMA + 1.0;
    let mut tail = term * psi_sum;
    for k in 1..60 {
        let kf = k as f64;
        term = term * q / (kf * (kf + 1.0));
        psi_sum += 1.0 / kf + 1.0 / (kf + 1.0);
        i1 += term;
        tail += term * psi_sum;
        if term.norm() < 1e-18 * i1.norm() {
            break;
        }
    }
    z.inv() + (half.ln()) * i1 - tail * 0.5
}

// K_ν(z) = ∫_0^∞ exp(-z cosh u) cosh(ν u) du, trapezoidal rule on the
// doubly-exponentially decaying integrand. The strip of analyticity has
// half-width π/2 - |arg z|, which fixes the step.
fn k_integral(z: Complex64, order: u32) -> Complex64 {
    let half_width = (0.5 * PI - z.arg().abs()).max(1e-3);
    let h = (2.0 * PI * half_width * 0.9 / 40.0).min(0.125);
    let nu = order as f64;
    let mut sum = (-z).exp() * 0.5;
    let mut k = 1usize;
    loop {
        let u = k as f64 * h;
        let c = u.cosh();
        let term = (-z * c).exp() * (nu * u).cosh();
        sum += term;
        if z.re * c > 45.0 + (nu * u) {
            break;
        }
        k += 1;
        if k > 200_000 {
            break;
        }
    }
    sum * h
}

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}
