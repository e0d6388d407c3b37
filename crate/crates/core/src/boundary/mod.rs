//! Wentzell vertex data, its normalization and classification, and the
//! boundary-condition matrices built from it.

mod domain;
mod matrices;

use thiserror::Error;

use crate::graph::{Incidence, MetricGraph, VertexId};

pub(crate) use matrices::{equilibrate_rows as equilibrate, slot as matrices_slot};
pub use domain::{check_domain_membership, VertexResidual, VertexTraces};
pub use matrices::{
    assemble, block_determinant_formula, find_invertible_kappa, hat_z, vertex_block_sum, z_matrix, z_matrix_direct,
    BoundaryMatrices, KappaReport, VertexBlocks,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("expected data for {expected} vertices, got {got}")]
    VertexCount { expected: usize, got: usize },
    #[error("vertex `{vertex}` has {expected} incident edges but {got} weights")]
    WrongArity { vertex: String, expected: usize, got: usize },
    #[error("vertex `{0}` has a negative entry")]
    Negative(String),
    #[error("vertex `{0}` has a non-finite entry")]
    NonFinite(String),
    #[error("vertex `{0}` has all-zero data")]
    AllZero(String),
    #[error("vertex `{0}` has a = 1 with b = 0 and c = 0, the excluded corner (pure killing)")]
    ExcludedCorner(String),
    #[error("edge `{0}` is a tadpole; eliminate it first")]
    Tadpole(String),
    #[error("boundary system is singular at lambda = {lambda} after {retries} retries")]
    Singular { lambda: f64, retries: usize },
    #[error("missing trace data at vertex `{0}`")]
    MissingTrace(String),
}

/// Unnormalized vertex data; `b` follows the order of L(v).
#[derive(Clone, Debug, PartialEq)]
pub struct RawVertexData {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: f64,
}

/// Normalized vertex data, `a + sum(b) + c = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexData {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: f64,
}

impl VertexData {
    pub fn b_sum(&self) -> f64 {
        self.b.iter().sum()
    }

    pub fn classify(&self) -> VertexClass {
        let sb = self.b_sum();
        if sb > 0.0 {
            VertexClass::Instantaneous {
                weights: self.b.iter().map(|b| b / sb).collect(),
                stickiness: self.c / sb,
                killing: self.a / sb,
            }
        } else if self.a > 0.0 {
            VertexClass::ExponentialHolding { rate: self.a / self.c }
        } else {
            VertexClass::Trap
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VertexClass {
    Trap,
    /// Waits an exponential time with the given rate, then dies.
    ExponentialHolding { rate: f64 },
    /// Walsh-type vertex: excursion weights, time delay and killing rate per
    /// unit of local time.
    Instantaneous { weights: Vec<f64>, stickiness: f64, killing: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WentzellData {
    vertices: Vec<VertexData>,
}

pub fn validate_and_normalize(g: &MetricGraph, raw: Vec<RawVertexData>) -> Result<WentzellData, BoundaryError> {
    WentzellData::normalize(g, raw)
}

impl WentzellData {
    pub fn normalize(g: &MetricGraph, raw: Vec<RawVertexData>) -> Result<Self, BoundaryError> {
        if raw.len() != g.vertex_count() {
            return Err(BoundaryError::VertexCount {
                expected: g.vertex_count(),
                got: raw.len(),
            });
        }
        let mut vertices = Vec::with_capacity(raw.len());
        for (v, r) in g.vertices().zip(raw) {
            let name = || g.vertex_name(v).to_string();
            if r.b.len() != g.degree(v) {
                return Err(BoundaryError::WrongArity {
                    vertex: name(),
                    expected: g.degree(v),
                    got: r.b.len(),
                });
            }
            let entries = || std::iter::once(r.a).chain(r.b.iter().copied()).chain(std::iter::once(r.c));
            if entries().any(|x| !x.is_finite()) {
                return Err(BoundaryError::NonFinite(name()));
            }
            if entries().any(|x| x < 0.0) {
                return Err(BoundaryError::Negative(name()));
            }
            let total: f64 = entries().sum();
            if total <= 0.0 {
                return Err(BoundaryError::AllZero(name()));
            }
            if r.c == 0.0 && r.b.iter().all(|&b| b == 0.0) {
                return Err(BoundaryError::ExcludedCorner(name()));
            }
            vertices.push(VertexData {
                a: r.a / total,
                b: r.b.iter().map(|b| b / total).collect(),
                c: r.c / total,
            });
        }
        Ok(WentzellData { vertices })
    }

    /// Standard conditions: a = c = 0 and equal weights.
    pub fn standard(g: &MetricGraph) -> Self {
        let raw = g
            .vertices()
            .map(|v| RawVertexData {
                a: 0.0,
                b: vec![1.0; g.degree(v)],
                c: 0.0,
            })
            .collect();
        Self::normalize(g, raw).expect("standard data is valid")
    }

    /// Same (a, b, c) shape at every vertex, with b split equally.
    pub fn uniform(g: &MetricGraph, a: f64, b_total: f64, c: f64) -> Result<Self, BoundaryError> {
        let raw = g
            .vertices()
            .map(|v| {
                let n = g.degree(v) as f64;
                RawVertexData {
                    a,
                    b: vec![b_total / n; g.degree(v)],
                    c,
                }
            })
            .collect();
        Self::normalize(g, raw)
    }

    pub fn vertex(&self, v: VertexId) -> &VertexData {
        &self.vertices[v.index()]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn classify(&self, v: VertexId) -> VertexClass {
        self.vertices[v.index()].classify()
    }

    /// b at one incidence.
    pub fn weight(&self, g: &MetricGraph, inc: Incidence) -> f64 {
        let v = g.endpoint(inc);
        self.vertices[v.index()].b[g.incidence_position(inc)]
    }

    /// Replace the data at one vertex (renormalizing it).
    pub fn with_vertex(&self, g: &MetricGraph, v: VertexId, raw: RawVertexData) -> Result<Self, BoundaryError> {
        let mut all: Vec<RawVertexData> = self
            .vertices
            .iter()
            .map(|d| RawVertexData {
                a: d.a,
                b: d.b.clone(),
                c: d.c,
            })
            .collect();
        all[v.index()] = raw;
        Self::normalize(g, all)
    }
}

pub fn classify_vertex(data: &WentzellData, v: VertexId) -> VertexClass {
    data.classify(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn star(n: usize) -> MetricGraph {
        let mut b = GraphBuilder::new().vertex("v");
        for k in 0..n {
            b = b.external(&format!("e{k}"), "v");
        }
        b.build().unwrap()
    }

    fn raw(a: f64, b: &[f64], c: f64) -> Vec<RawVertexData> {
        vec![RawVertexData { a, b: b.to_vec(), c }]
    }

    #[test]
    fn standard_three_star_normalizes_to_thirds() {
        let g = star(3);
        let d = WentzellData::normalize(&g, raw(0.0, &[1.0, 1.0, 1.0], 0.0)).unwrap();
        let v = d.vertex(VertexId::from_index(0));
        assert_eq!(v.a, 0.0);
        assert_eq!(v.c, 0.0);
        for b in &v.b {
            assert!((b - 1.0 / 3.0).abs() < 1e-16);
        }
    }

    #[test]
    fn trap_and_corner() {
        let g = star(3);
        let d = WentzellData::normalize(&g, raw(0.0, &[0.0; 3], 1.0)).unwrap();
        assert_eq!(d.classify(VertexId::from_index(0)), VertexClass::Trap);
        let err = WentzellData::normalize(&g, raw(1.0, &[0.0; 3], 0.0)).unwrap_err();
        assert!(matches!(err, BoundaryError::ExcludedCorner(_)));
        let err = WentzellData::normalize(&g, raw(0.0, &[0.0; 3], 0.0)).unwrap_err();
        assert!(matches!(err, BoundaryError::AllZero(_)));
        let err = WentzellData::normalize(&g, raw(-0.1, &[1.0; 3], 0.0)).unwrap_err();
        assert!(matches!(err, BoundaryError::Negative(_)));
        let err = WentzellData::normalize(&g, raw(0.0, &[1.0; 2], 0.0)).unwrap_err();
        assert!(matches!(err, BoundaryError::WrongArity { .. }));
    }

    #[test]
    fn holding_rate() {
        let g = star(1);
        let d = WentzellData::normalize(&g, raw(0.5, &[0.0], 0.5)).unwrap();
        assert_eq!(
            d.classify(VertexId::from_index(0)),
            VertexClass::ExponentialHolding { rate: 1.0 }
        );
    }

    #[test]
    fn instantaneous_parameters() {
        let g = star(2);
        let d = WentzellData::normalize(&g, raw(0.2, &[0.3, 0.3], 0.2)).unwrap();
        match d.classify(VertexId::from_index(0)) {
            VertexClass::Instantaneous {
                weights,
                stickiness,
                killing,
            } => {
                assert!((weights[0] - 0.5).abs() < 1e-15 && (weights[1] - 0.5).abs() < 1e-15);
                assert!((stickiness - 1.0 / 3.0).abs() < 1e-15);
                assert!((killing - 1.0 / 3.0).abs() < 1e-15);
            }
            other => panic!("unexpected class {other:?}"),
        }
    }
}
