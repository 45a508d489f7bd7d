//! Zeta-regularized determinants of the Laplacian on genus-zero polyhedral
//! surfaces, their variational formulas, and independent numerical oracles.
//!
//! A flat conical metric on the Riemann sphere is
//! `m = C ∏ |z - z_k|^{2 b_k} |dz|²` with `Σ b_k = -2`; see [`metric`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cone;
pub mod detlap;
pub mod elliptic;
pub mod error;
pub mod metric;
pub mod quad;
pub mod regint;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use metric::{ConicalVertex, MetricDensity, PolyhedralMetric, VariationChannel};
pub use num_complex::Complex64;
