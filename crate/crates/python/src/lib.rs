use ::polydet as core;
use core::cone::{heat_kernel_cone as cone_kernel, ConeKernelConfig, ConePoint};
use core::detlap::{self, DetConfig};
use core::elliptic::{self, EllipticConfig};
use core::quad::{self, QuadratureConfig};
use core::regint::{self, IntegralConfig};
use core::verify::{self, FdConfig};
use core::{Complex64, Error, PolyhedralMetric, VariationChannel};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(polydet, PolydetError, PyException);
create_exception!(polydet, ToleranceNotReached, PolydetError);

fn to_py(e: Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    match e {
        Error::ToleranceNotReached { .. } => ToleranceNotReached::new_err(msg),
        _ => PolydetError::new_err(msg),
    }
}

fn quad_config(rel_tol: f64, abs_tol: f64, max_depth: usize) -> QuadratureConfig {
    QuadratureConfig { rel_tol, abs_tol, max_depth, ..Default::default() }
}

/// Flat conical metric `C ∏|z - z_k|^{2b_k} |dz|²` on the sphere.
#[pyclass(name = "Metric", module = "polydet", frozen)]
struct PyMetric {
    inner: PolyhedralMetric,
}

#[pymethods]
impl PyMetric {
    #[new]
    #[pyo3(signature = (scale, vertices, repair = false))]
    fn new(scale: f64, vertices: Vec<(Complex64, f64)>, repair: bool) -> PyResult<Self> {
        let inner = if repair {
            PolyhedralMetric::new_repaired(scale, &vertices)
        } else {
            PolyhedralMetric::new(scale, &vertices)
        }
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn tetrahedron() -> Self {
        Self { inner: PolyhedralMetric::tetrahedron() }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: PolyhedralMetric::from_json(text).map_err(to_py)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.inner.scale()
    }

    #[getter]
    fn positions(&self) -> Vec<Complex64> {
        self.inner.positions()
    }

    #[getter]
    fn exponents(&self) -> Vec<f64> {
        self.inner.exponents()
    }

    #[getter]
    fn angles(&self) -> Vec<f64> {
        self.inner.angles()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Metric({})", self.inner.to_json())
    }

    fn translated(&self, shift: Complex64) -> Self {
        Self { inner: self.inner.translated(shift) }
    }

    fn with_scale(&self, scale: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_scale(scale).map_err(to_py)? })
    }

    fn log_density(&self, z: Complex64) -> PyResult<f64> {
        self.inner.log_density(z).map_err(to_py)
    }

    /// Returns `(area, error_estimate)`.
    #[pyo3(signature = (rel_tol = 1e-9, abs_tol = 1e-12, max_depth = 24))]
    fn area(&self, py: Python<'_>, rel_tol: f64, abs_tol: f64, max_depth: usize) -> PyResult<(f64, f64)> {
        let cfg = quad_config(rel_tol, abs_tol, max_depth);
        let r = py.detach(|| quad::area(&self.inner, &cfg)).map_err(to_py)?;
        Ok((r.value, r.error_estimate))
    }

    #[pyo3(signature = (rel_tol = 1e-9, abs_tol = 1e-12, max_depth = 24))]
    fn log_det<'py>(&self, py: Python<'py>, rel_tol: f64, abs_tol: f64, max_depth: usize) -> PyResult<Bound<'py, PyDict>> {
        let cfg = DetConfig { quad: quad_config(rel_tol, abs_tol, max_depth), integrals: IntegralConfig::default() };
        let r = py.detach(|| detlap::log_det_as(&self.inner, &cfg)).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("log_det", r.log_det)?;
        d.set_item("log_det_over_area", r.log_det_over_area)?;
        d.set_item("area", r.area)?;
        d.set_item("area_error", r.area_error)?;
        d.set_item("w_term", r.w_term)?;
        d.set_item("f_terms", r.f_terms)?;
        d.set_item("reference_term", r.reference_term)?;
        d.set_item("prefactor", r.prefactor)?;
        Ok(d)
    }

    fn log_det_over_area(&self) -> PyResult<f64> {
        detlap::log_det_over_area(&self.inner, &IntegralConfig::default()).map_err(to_py)
    }

    fn grad_position(&self, i: usize) -> PyResult<Complex64> {
        detlap::grad_position(&self.inner, i).map_err(to_py)
    }

    fn grad_angle(&self, i: usize) -> PyResult<f64> {
        detlap::grad_angle(&self.inner, i, &IntegralConfig::default()).map_err(to_py)
    }

    fn grad_scale(&self) -> f64 {
        detlap::grad_scale(&self.inner)
    }

    /// Analytic and finite-difference gradient along a channel `z:i`, `beta:i` or `C`.
    #[pyo3(signature = (channel, richardson = false))]
    fn check_gradient<'py>(&self, py: Python<'py>, channel: &str, richardson: bool) -> PyResult<Bound<'py, PyDict>> {
        let ch: VariationChannel = channel.parse().map_err(to_py)?;
        let fd = FdConfig { richardson, ..FdConfig::default() };
        let r = verify::gradient_report(&self.inner, ch, &IntegralConfig::default(), &fd).map_err(to_py)?;
        report_dict(py, &r)
    }

    #[pyo3(signature = (richardson = false))]
    fn verify_gradients<'py>(&self, py: Python<'py>, richardson: bool) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let fd = FdConfig { richardson, ..FdConfig::default() };
        let reps = py.detach(|| verify::run_suite(&self.inner, &IntegralConfig::default(), &fd)).map_err(to_py)?;
        reps.iter().map(|r| report_dict(py, r)).collect()
    }
}

fn report_dict<'py>(py: Python<'py>, r: &verify::GradientReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("channel", r.channel.to_string())?;
    if let VariationChannel::Position(_) = r.channel {
        d.set_item("analytic", r.analytic)?;
        d.set_item("finite_difference", r.finite_difference)?;
    } else {
        d.set_item("analytic", r.analytic.re)?;
        d.set_item("finite_difference", r.finite_difference.re)?;
    }
    d.set_item("abs_err", r.abs_err)?;
    d.set_item("rel_err", r.rel_err)?;
    Ok(d)
}

/// Log-ratio of determinants of two metrics with the same cone angles and scale.
#[pyfunction]
#[pyo3(signature = (m1, m2, rel_tol = 1e-9, abs_tol = 1e-12, max_depth = 24))]
fn compare_same_angles(py: Python<'_>, m1: &PyMetric, m2: &PyMetric, rel_tol: f64, abs_tol: f64, max_depth: usize) -> PyResult<f64> {
    let cfg = quad_config(rel_tol, abs_tol, max_depth);
    py.detach(|| detlap::chs_compare_same_angles(&m1.inner, &m2.inner, &cfg)).map_err(to_py)
}

#[pyfunction]
fn q_of_beta(beta: f64) -> PyResult<f64> {
    regint::q_of_beta(beta).map_err(to_py)
}

#[pyfunction]
fn q_of_beta_contour(beta: f64) -> PyResult<f64> {
    regint::q_of_beta_contour(beta, &IntegralConfig::default()).map_err(to_py)
}

#[pyfunction]
fn q_tilde(beta: f64) -> PyResult<f64> {
    regint::q_tilde(beta, &IntegralConfig::default()).map_err(to_py)
}

#[pyfunction]
fn q_tilde_prime(beta: f64) -> PyResult<f64> {
    regint::q_tilde_prime(beta, &IntegralConfig::default()).map_err(to_py)
}

#[pyfunction]
fn f_function(beta: f64, scale: f64) -> PyResult<f64> {
    detlap::f_function(beta, scale, &IntegralConfig::default()).map_err(to_py)
}

/// Heat kernel of the infinite cone of angle `beta` between polar points `(r, phi)`.
#[pyfunction]
fn heat_kernel_cone(beta: f64, t: f64, p: (f64, f64), q: (f64, f64)) -> PyResult<f64> {
    cone_kernel(beta, t, ConePoint::new(p.0, p.1), ConePoint::new(q.0, q.1), &ConeKernelConfig::default()).map_err(to_py)
}

fn four(points: Vec<Complex64>) -> PyResult<[Complex64; 4]> {
    points.try_into().map_err(|_| PolydetError::new_err("InvalidInput: expected four points"))
}

/// Explicit determinant of the tetrahedron `∏|z - z_k|^{-1} |dz|²`.
#[pyfunction]
fn det_tetrahedron(py: Python<'_>, points: Vec<Complex64>) -> PyResult<f64> {
    let z = four(points)?;
    py.detach(|| elliptic::det_tetrahedron(&z, &QuadratureConfig::default())).map_err(to_py)
}

/// Periods, modulus and modular forms of `w² = ∏(z - z_k)`.
#[pyfunction]
fn elliptic_data<'py>(py: Python<'py>, points: Vec<Complex64>) -> PyResult<Bound<'py, PyDict>> {
    let e = elliptic::periods(&four(points)?, &EllipticConfig::default()).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("period_a", e.period_a)?;
    d.set_item("period_b", e.period_b)?;
    d.set_item("tau", e.tau)?;
    d.set_item("theta_constants", e.theta_constants.to_vec())?;
    d.set_item("theta1_prime", e.theta1_prime)?;
    d.set_item("eta", e.eta)?;
    d.set_item("jacobi_residual", e.jacobi_residual())?;
    d.set_item("thomae_residual", elliptic::thomae_check(&e))?;
    d.set_item("eta_distance_residual", elliptic::eta_distance_identity(&e))?;
    d.set_item("torus_determinant", elliptic::torus_determinant(&e))?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "polydet")]
fn polydet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMetric>()?;
    m.add("PolydetError", m.py().get_type::<PolydetError>())?;
    m.add("ToleranceNotReached", m.py().get_type::<ToleranceNotReached>())?;
    m.add_function(wrap_pyfunction!(compare_same_angles, m)?)?;
    m.add_function(wrap_pyfunction!(q_of_beta, m)?)?;
    m.add_function(wrap_pyfunction!(q_of_beta_contour, m)?)?;
    m.add_function(wrap_pyfunction!(q_tilde, m)?)?;
    m.add_function(wrap_pyfunction!(q_tilde_prime, m)?)?;
    m.add_function(wrap_pyfunction!(f_function, m)?)?;
    m.add_function(wrap_pyfunction!(heat_kernel_cone, m)?)?;
    m.add_function(wrap_pyfunction!(det_tetrahedron, m)?)?;
    m.add_function(wrap_pyfunction!(elliptic_data, m)?)?;
    Ok(())
}
