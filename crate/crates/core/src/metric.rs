//! Flat conical metrics `C ∏|z - z_k|^{2 b_k} |dz|²` on the sphere.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ b_k = -2` accepted at construction.
pub const GAUSS_BONNET_TOL: f64 = 1e-12;
/// Largest defect the repair mode is willing to absorb into vertex 0.
pub const REPAIR_TOL: f64 = 1e-6;

/// A conical singularity at `position` with exponent `b`, cone angle `2π(b + 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConicalVertex {
    position: Complex64,
    exponent: f64,
}

impl ConicalVertex {
    pub fn new(position: Complex64, exponent: f64) -> Self {
        Self { position, exponent }
    }

    pub fn position(&self) -> Complex64 {
        self.position
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn angle(&self) -> f64 {
        2.0 * PI * (self.exponent + 1.0)
    }
}

/// Validated flat conical metric. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyhedralMetric {
    scale: f64,
    vertices: Vec<ConicalVertex>,
}

/// Pointwise density `e^{-φ(z)}` together with its logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricDensity {
    pub value: f64,
    pub log_value: f64,
}

/// Direction of a one-parameter family of metrics. Indices are 0-based and
/// vertex 0 is the gauge vertex compensating angle variations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VariationChannel {
    Position(usize),
    Angle(usize),
    Scale,
}

impl fmt::Display for VariationChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VariationChannel::Position(i) => write!(f, "z:{i}"),
            VariationChannel::Angle(i) => write!(f, "beta:{i}"),
            VariationChannel::Scale => write!(f, "C"),
        }
    }
}

impl std::str::FromStr for VariationChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "C" || s == "c" {
            return Ok(VariationChannel::Scale);
        }
        let (kind, idx) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("unrecognised channel {s:?}")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad vertex index in {s:?}")))?;
        match kind {
            "z" => Ok(VariationChannel::Position(idx)),
            "beta" | "b" => Ok(VariationChannel::Angle(idx)),
            _ => Err(Error::InvalidInput(format!("unrecognised channel {s:?}"))),
        }
    }
}

impl Serialize for VariationChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VariationChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct VertexJson {
    z: [f64; 2],
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct MetricJson {
    #[serde(rename = "C")]
    c: f64,
    vertices: Vec<VertexJson>,
}

impl PolyhedralMetric {
    /// Validates and builds a metric from `(position, exponent)` pairs.
    pub fn new(scale: f64, verts: &[(Complex64, f64)]) -> Result<Self> {
        Self::build(scale, verts, false)
    }

    /// Like [`new`](Self::new), but a Gauss–Bonnet defect up to
    /// [`REPAIR_TOL`] is absorbed into the exponent of vertex 0.
    pub fn new_repaired(scale: f64, verts: &[(Complex64, f64)]) -> Result<Self> {
        Self::build(scale, verts, true)
    }

    fn build(scale: f64, verts: &[(Complex64, f64)], repair: bool) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::NonpositiveScale(scale));
        }
        if verts.len() < 3 {
            return Err(Error::TooFewVertices(verts.len()));
        }
        for (i, &(z, b)) in verts.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() || !b.is_finite() {
                return Err(Error::InvalidInput(format!("vertex {i} is not finite")));
            }
            if b <= -1.0 {
                return Err(Error::InvalidExponent { index: i, exponent: b });
            }
        }
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                if verts[i].0 == verts[j].0 {
                    return Err(Error::DuplicateVertex {
                        first: i,
                        second: j,
                        re: verts[i].0.re,
                        im: verts[i].0.im,
                    });
                }
            }
        }
        let mut vertices: Vec<ConicalVertex> =
            verts.iter().map(|&(z, b)| ConicalVertex::new(z, b)).collect();
        let sum: f64 = vertices.iter().map(|v| v.exponent).sum();
        if (sum + 2.0).abs() > GAUSS_BONNET_TOL {
            if repair && (sum + 2.0).abs() <= REPAIR_TOL {
                let rest: f64 = vertices[1..].iter().map(|v| v.exponent).sum();
                vertices[0].exponent = -2.0 - rest;
                if vertices[0].exponent <= -1.0 {
                    return Err(Error::InvalidExponent { index: 0, exponent: vertices[0].exponent });
                }
            } else {
                return Err(Error::GaussBonnetViolation { sum });
            }
        }
        Ok(Self { scale, vertices })
    }

    /// Parses the JSON schema `{"C": .., "vertices": [{"z": [re, im], "b": ..}]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_with(text, false)
    }

    pub fn from_json_with(text: &str, repair: bool) -> Result<Self> {
        let raw: MetricJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let verts: Vec<(Complex64, f64)> = raw
            .vertices
            .iter()
            .map(|v| (Complex64::new(v.z[0], v.z[1]), v.b))
            .collect();
        Self::build(raw.c, &verts, repair)
    }

    pub fn to_json(&self) -> String {
        let raw = MetricJson {
            c: self.scale,
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexJson { z: [v.position.re, v.position.im], b: v.exponent })
                .collect(),
        };
        serde_json::to_string(&raw).expect("metric serialises")
    }

    /// The regular tetrahedron: four cone points of angle π at `±1, ±i`.
    pub fn tetrahedron() -> Self {
        let z = [
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
        ];
        let verts: Vec<_> = z.iter().map(|&z| (z, -0.5)).collect();
        Self::new(1.0, &verts).expect("tetrahedron is valid")
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn vertices(&self) -> &[ConicalVertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn positions(&self) -> Vec<Complex64> {
        self.vertices.iter().map(|v| v.position).collect()
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.exponent).collect()
    }

    pub fn angles(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.angle()).collect()
    }

    pub fn as_pairs(&self) -> Vec<(Complex64, f64)> {
        self.vertices.iter().map(|v| (v.position, v.exponent)).collect()
    }

    /// Arithmetic mean of the vertex positions.
    pub fn centroid(&self) -> Complex64 {
        let s: Complex64 = self.vertices.iter().map(|v| v.position).sum();
        s / self.vertices.len() as f64
    }

    /// Smallest distance between two vertices.
    pub fn min_pair_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.len() {
            d = d.min(self.nearest_neighbour_distance(i));
        }
        d
    }

    /// Distance from vertex `i` to the closest other vertex.
    pub fn nearest_neighbour_distance(&self, i: usize) -> f64 {
        let zi = self.vertices[i].position;
        self.vertices
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| (v.position - zi).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            Err(Error::VertexIndexOutOfRange { index: i, count: self.len() })
        } else {
            Ok(())
        }
    }

    fn vertex_at(&self, z: Complex64) -> Option<usize> {
        self.vertices.iter().position(|v| v.position == z)
    }

    /// `log C + Σ 2 b_k log|z - z_k|`, i.e. `-φ(z)`.
    pub fn log_density(&self, z: Complex64) -> Result<f64> {
        if let Some(k) = self.vertex_at(z) {
            return Err(Error::EvaluationAtVertex(k));
        }
        Ok(self.log_density_unchecked(z))
    }

    pub(crate) fn log_density_unchecked(&self, z: Complex64) -> f64 {
        let mut s = self.scale.ln();
        for v in &self.vertices {
            s += v.exponent * (z - v.position).norm_sqr().ln();
        }
        s
    }

    pub fn density(&self, z: Complex64) -> Result<MetricDensity> {
        let log_value = self.log_density(z)?;
        Ok(MetricDensity { value: log_value.exp(), log_value })
    }

    /// The conformal variation `φ̇(z)` along `channel`. Real-valued channels
    /// return a complex number with zero imaginary part.
    pub fn variation_field(&self, channel: VariationChannel, z: Complex64) -> Result<Complex64> {
        if let Some(k) = self.vertex_at(z) {
            return Err(Error::EvaluationAtVertex(k));
        }
        match channel {
            VariationChannel::Position(i) => {
                self.check_index(i)?;
                let v = self.vertices[i];
                Ok(Complex64::new(v.exponent, 0.0) / (z - v.position))
            }
            VariationChannel::Angle(i) => {
                self.check_index(i)?;
                if i == 0 {
                    return Err(Error::GaugeVertexVariation);
                }
                let z0 = self.vertices[0].position;
                let zi = self.vertices[i].position;
                Ok(Complex64::new(((z - z0).norm() / (z - zi).norm()).ln() / PI, 0.0))
            }
            VariationChannel::Scale => Ok(Complex64::new(-1.0 / self.scale, 0.0)),
        }
    }

    /// Copy with vertex `i` moved by `dz`.
    pub fn with_position_shift(&self, i: usize, dz: Complex64) -> Result<Self> {
        self.check_index(i)?;
        let mut verts = self.as_pairs();
        verts[i].0 += dz;
        Self::new(self.scale, &verts)
            .map_err(|e| Error::PerturbationLeavesDomain(format!("moving vertex {i}: {e}")))
    }

    /// Copy with `b_i += db` and `b_0 -= db`, so that `β_i` grows by `2π db`
    /// while the gauge vertex compensates.
    pub fn with_angle_shift(&self, i: usize, db: f64) -> Result<Self> {
        self.check_index(i)?;
        if i == 0 {
            return Err(Error::GaugeVertexVariation);
        }
        let mut verts = self.as_pairs();
        verts[i].1 += db;
        verts[0].1 -= db;
        Self::new_repaired(self.scale, &verts)
            .map_err(|e| Error::PerturbationLeavesDomain(format!("opening vertex {i}: {e}")))
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        let verts = self.as_pairs();
        Self::new(scale, &verts)
    }

    /// Copy with every vertex moved by `shift`.
    pub fn translated(&self, shift: Complex64) -> Self {
        let verts: Vec<_> = self.as_pairs().into_iter().map(|(z, b)| (z + shift, b)).collect();
        Self { scale: self.scale, vertices: verts.iter().map(|&(z, b)| ConicalVertex::new(z, b)).collect() }
    }
}
