//! Adaptive quadrature of `∫_ℂ f(z) C ∏|z - z_k|^{2b_k} dA(z)` over the whole plane.
//!
//! The plane is split by a smooth partition of unity into
//! * a disk patch around every vertex, integrated in polar coordinates with
//!   the radial variable `s = r^{b_k + 1}`, which absorbs `r^{2 b_k}`;
//! * a far field `|z - c| > R_f/2`, integrated in `w = 1/(z - c)` where the
//!   weighted integrand is smooth because `Σ 2 b_k = -4`;
//! * a bounded middle region covering the rest.
//!
//! Each piece is refined by a quadtree of tensor Gauss–Legendre cells.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::PolyhedralMetric;
use crate::special::{KahanSum, GL4, GL8};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
    /// Vertex patch radius as a fraction of the smallest vertex separation.
    pub patch_radius_factor: f64,
    /// Radius `R_f` beyond which the far-field map takes over completely.
    /// `None` uses four times the largest vertex distance from the centroid.
    pub far_field_radius: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-12, max_depth: 24, patch_radius_factor: 0.4, far_field_radius: None }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidConfig("max depth must be at least 1".into()));
        }
        if !(self.patch_radius_factor > 0.0 && self.patch_radius_factor < 0.5) {
            return Err(Error::InvalidConfig("patch radius factor must lie in (0, 1/2)".into()));
        }
        if let Some(r) = self.far_field_radius {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidConfig("far-field radius must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub cell_count: usize,
}

/// `Area(X, m) = ∫ C ∏|z - z_k|^{2 b_k} dA`.
pub fn area(m: &PolyhedralMetric, cfg: &QuadratureConfig) -> Result<QuadResult> {
    integrate(m, |_| 1.0, cfg)
}

/// `∫ f(z) dS_m(z)`. `f` must be bounded near the vertices and `f · density`
/// integrable at infinity.
pub fn integrate<F>(m: &PolyhedralMetric, f: F, cfg: &QuadratureConfig) -> Result<QuadResult>
where
    F: Fn(Complex64) -> f64 + Sync,
{
    cfg.validate()?;
    let layout = Layout::new(m, cfg);
    let pieces = layout.pieces();
    let mut roots = Vec::new();
    for (p, piece) in pieces.iter().enumerate() {
        roots.extend(piece.root_cells(p));
    }
    let piece_areas: Vec<f64> = pieces.iter().map(|p| p.domain_area()).collect();
    let n_pieces = pieces.len() as f64;
    let eval = |cell: &Cell| {
        let piece = &pieces[cell.piece];
        tensor_rule(cell, |x, y| layout.weight(piece, x, y, &f))
    };

    let mut accepted = KahanSum::new();
    let mut accepted_err = 0.0;
    let mut cell_count = 0usize;
    let mut active = roots;
    for depth in 0..=cfg.max_depth {
        let results: Vec<(f64, f64)> = active.par_iter().map(eval).collect();
        cell_count += active.len();
        let mut total = accepted;
        for r in &results {
            total.add(r.0);
        }
        let value = total.value();
        let level_err: f64 = results.iter().map(|r| r.1).sum();
        let total_err = accepted_err + level_err;
        let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if total_err <= tol {
            return Ok(QuadResult { value, error_estimate: total_err, cell_count });
        }
        if depth == cfg.max_depth {
            return Err(Error::ToleranceNotReached { value, error_estimate: total_err });
        }
        let mut next = Vec::new();
        for (cell, (v, e)) in active.iter().zip(&results) {
            let share = tol / n_pieces * cell.area() / piece_areas[cell.piece];
            if *e <= share {
                accepted.add(*v);
                accepted_err += e;
            } else {
                next.extend(cell.split());
            }
        }
        if next.is_empty() {
            return Ok(QuadResult { value, error_estimate: total_err, cell_count });
        }
        active = next;
    }
    unreachable!("loop returns at max depth")
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    piece: usize,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Cell {
    fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn split(&self) -> [Cell; 4] {
        let xm = 0.5 * (self.x0 + self.x1);
        let ym = 0.5 * (self.y0 + self.y1);
        let c = |x0, x1, y0, y1| Cell { piece: self.piece, x0, x1, y0, y1 };
        [c(self.x0, xm, self.y0, ym), c(xm, self.x1, self.y0, ym), c(self.x0, xm, ym, self.y1), c(xm, self.x1, ym, self.y1)]
    }
}

fn grid(piece: usize, x0: f64, x1: f64, nx: usize, y0: f64, y1: f64, ny: usize) -> Vec<Cell> {
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let xa = x0 + (x1 - x0) * i as f64 / nx as f64;
            let xb = x0 + (x1 - x0) * (i + 1) as f64 / nx as f64;
            let ya = y0 + (y1 - y0) * j as f64 / ny as f64;
            let yb = y0 + (y1 - y0) * (j + 1) as f64 / ny as f64;
            cells.push(Cell { piece, x0: xa, x1: xb, y0: ya, y1: yb });
        }
    }
    cells
}

/// Order-8 tensor Gauss–Legendre value with the order-4 discrepancy as error.
fn tensor_rule<G: Fn(f64, f64) -> f64>(cell: &Cell, g: G) -> (f64, f64) {
    let cx = 0.5 * (cell.x0 + cell.x1);
    let hx = 0.5 * (cell.x1 - cell.x0);
    let cy = 0.5 * (cell.y0 + cell.y1);
    let hy = 0.5 * (cell.y1 - cell.y0);
    let rule = |nodes: &(Vec<f64>, Vec<f64>)| {
        let mut s = 0.0;
        for (xi, wi) in nodes.0.iter().zip(&nodes.1) {
            let mut row = 0.0;
            for (yj, wj) in nodes.0.iter().zip(&nodes.1) {
                row += wj * g(cx + hx * xi, cy + hy * yj);
            }
            s += wi * row;
        }
        s * hx * hy
    };
    let hi = rule(&GL8);
    let lo = rule(&GL4);
    (hi, (hi - lo).abs())
}

/// Smooth cutoff: 1 on `t ≤ 1/2`, 0 on `t ≥ 1`, `C^∞` in between.
fn cutoff(t: f64) -> f64 {
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let x = 2.0 * (1.0 - t);
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

enum Piece {
    Patch { k: usize, s_max: f64 },
    Middle { half: f64 },
    Far { half: f64 },
}

impl Piece {
    fn root_cells(&self, idx: usize) -> Vec<Cell> {
        match *self {
            Piece::Patch { s_max, .. } => grid(idx, 0.0, s_max, 2, 0.0, 2.0 * PI, 8),
            Piece::Middle { half } => grid(idx, -half, half, 8, -half, half, 8),
            Piece::Far { half } => grid(idx, -half, half, 4, -half, half, 4),
        }
    }

    fn domain_area(&self) -> f64 {
        match *self {
            Piece::Patch { s_max, .. } => s_max * 2.0 * PI,
            Piece::Middle { half } | Piece::Far { half } => 4.0 * half * half,
        }
    }
}

struct Layout {
    scale: f64,
    z: Vec<Complex64>,
    b: Vec<f64>,
    center: Complex64,
    patch_radius: f64,
    far_radius: f64,
}

impl Layout {
    fn new(m: &PolyhedralMetric, cfg: &QuadratureConfig) -> Self {
        let center = m.centroid();
        let z = m.positions();
        let spread = z.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
        let patch_radius = cfg.patch_radius_factor * m.min_pair_distance();
        // the far-field transition must stay clear of every vertex patch
        let far_radius = cfg.far_field_radius.unwrap_or(4.0 * spread).max(2.02 * (spread + patch_radius));
        Self { scale: m.scale(), b: m.exponents(), z, center, patch_radius, far_radius }
    }

    fn pieces(&self) -> Vec<Piece> {
        let mut v: Vec<Piece> = (0..self.z.len())
            .map(|k| Piece::Patch { k, s_max: self.patch_radius.powf(self.b[k] + 1.0) })
            .collect();
        v.push(Piece::Middle { half: self.far_radius });
        v.push(Piece::Far { half: 2.0 / self.far_radius });
        v
    }

    fn patch_weight(&self, z: Complex64) -> f64 {
        self.z.iter().map(|zk| cutoff((z - zk).norm() / self.patch_radius)).sum()
    }

    fn far_weight(&self, z: Complex64) -> f64 {
        1.0 - cutoff((z - self.center).norm() / self.far_radius)
    }

    fn weight<F: Fn(Complex64) -> f64>(&self, piece: &Piece, x: f64, y: f64, f: &F) -> f64 {
        match *piece {
            Piece::Patch { k, .. } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let bk = self.b[k];
                let r = x.powf(1.0 / (bk + 1.0));
                let rho = cutoff(r / self.patch_radius);
                if rho == 0.0 {
                    return 0.0;
                }
                let z = self.z[k] + Complex64::from_polar(r, y);
                let mut log = self.scale.ln();
                for (j, (zj, bj)) in self.z.iter().zip(&self.b).enumerate() {
                    if j != k {
                        log += bj * (z - zj).norm_sqr().ln();
                    }
                }
                x / (bk + 1.0) * log.exp() * rho * f(z)
            }
            Piece::Middle { .. } => {
                let z = self.center + Complex64::new(x, y);
                let inner = 1.0 - self.patch_weight(z);
                if inner <= 0.0 {
                    return 0.0;
                }
                let outer = 1.0 - self.far_weight(z);
                if outer <= 0.0 {
                    return 0.0;
                }
                let mut log = self.scale.ln();
                for (zj, bj) in self.z.iter().zip(&self.b) {
                    log += bj * (z - zj).norm_sqr().ln();
                }
                log.exp() * inner * outer * f(z)
            }
            Piece::Far { .. } => {
                let w = Complex64::new(x, y);
                let wn = w.norm();
                if wn == 0.0 || wn * self.far_radius >= 2.0 {
                    return 0.0;
                }
                let z = self.center + w.inv();
                let rho = self.far_weight(z);
                if rho == 0.0 {
                    return 0.0;
                }
                let mut log = self.scale.ln();
                for (zj, bj) in self.z.iter().zip(&self.b) {
                    log += bj * (Complex64::new(1.0, 0.0) - w * (zj - self.center)).norm_sqr().ln();
                }
                log.exp() * rho * f(z)
            }
        }
    }
}
