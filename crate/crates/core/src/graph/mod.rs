//! Finite metric graphs: vertices, internal edges of finite length and
//! external half-lines, together with local coordinates on them.
//!
//! The edge order is fixed at construction: external edges come first, in the
//! order they were declared, followed by internal edges in declaration order.
//! Everything downstream (trace vectors, boundary matrices, file output) uses
//! this order.

mod distance;
mod join;
mod tadpole;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use distance::distance;
pub use join::{join_graphs, ComponentEdge, JoinPair, JoinedPair, Orientation, ShadowMap, ShadowPoint, Side};
pub use tadpole::{eliminate_tadpole, TadpoleSplit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge `{edge}` refers to undeclared vertex `{vertex}`")]
    DanglingVertex { edge: String, vertex: String },
    #[error("internal edge `{edge}` has non-positive or non-finite length {length}")]
    BadLength { edge: String, length: f64 },
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("vertex `{0}` has no incident edges")]
    IsolatedVertex(String),
    #[error("graph has no vertices")]
    Empty,
    #[error("coordinate {x} is outside edge `{edge}`")]
    OutOfRange { edge: String, x: f64 },
    #[error("the cemetery point has no position on the graph")]
    Cemetery,
    #[error("edge `{0}` is not external")]
    NotExternal(String),
    #[error("edge `{0}` is paired more than once")]
    AlreadyPaired(String),
    #[error("edge `{0}` is not a tadpole")]
    NotATadpole(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error(transparent)]
    Boundary(#[from] crate::boundary::BoundaryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }

    pub(crate) fn from_index(i: usize) -> Self {
        VertexId(i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(usize);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0
    }

    pub(crate) fn from_index(i: usize) -> Self {
        EdgeId(i)
    }
}

/// Which end of an edge an incidence refers to. External edges only have an
/// initial end (their anchor).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum End {
    Initial,
    Terminal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Incidence {
    pub edge: EdgeId,
    pub end: End,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeKind {
    External { anchor: VertexId },
    Internal { initial: VertexId, terminal: VertexId, length: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub name: String,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn is_external(&self) -> bool {
        matches!(self.kind, EdgeKind::External { .. })
    }

    /// Length of the edge; `f64::INFINITY` for a half-line.
    pub fn length(&self) -> f64 {
        match self.kind {
            EdgeKind::External { .. } => f64::INFINITY,
            EdgeKind::Internal { length, .. } => length,
        }
    }

    pub fn initial(&self) -> VertexId {
        match self.kind {
            EdgeKind::External { anchor } => anchor,
            EdgeKind::Internal { initial, .. } => initial,
        }
    }

    pub fn terminal(&self) -> Option<VertexId> {
        match self.kind {
            EdgeKind::External { .. } => None,
            EdgeKind::Internal { terminal, .. } => Some(terminal),
        }
    }

    pub fn is_tadpole(&self) -> bool {
        matches!(self.kind, EdgeKind::Internal { initial, terminal, .. } if initial == terminal)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InternalSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalSpec {
    pub id: String,
    pub at: String,
}

/// An immutable metric graph.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricGraph {
    vertex_names: Vec<String>,
    edges: Vec<Edge>,
    n_external: usize,
    incidence: Vec<Vec<Incidence>>,
}

/// Position on a graph in local coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GraphPoint {
    /// Distance `x` from the initial vertex (the anchor for external edges).
    Interior { edge: EdgeId, x: f64 },
    Vertex(VertexId),
    Cemetery,
}

impl GraphPoint {
    pub fn is_cemetery(&self) -> bool {
        matches!(self, GraphPoint::Cemetery)
    }
}

/// Validate and build a graph. The declared order of each list becomes the
/// canonical order.
pub fn build_graph(
    vertices: &[impl AsRef<str>],
    internal: &[InternalSpec],
    external: &[ExternalSpec],
) -> Result<MetricGraph, GraphError> {
    let mut builder = GraphBuilder::new();
    for v in vertices {
        builder = builder.vertex(v.as_ref());
    }
    for e in external {
        builder = builder.external(&e.id, &e.at);
    }
    for i in internal {
        builder = builder.internal(&i.id, &i.from, &i.to, i.length);
    }
    builder.build()
}

#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    vertices: Vec<String>,
    internal: Vec<InternalSpec>,
    external: Vec<ExternalSpec>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(mut self, name: &str) -> Self {
        self.vertices.push(name.to_string());
        self
    }

    pub fn internal(mut self, id: &str, from: &str, to: &str, length: f64) -> Self {
        self.internal.push(InternalSpec {
            id: id.to_string(),
            from: from.to_string(),
            to: to.to_string(),
            length,
        });
        self
    }

    pub fn external(mut self, id: &str, at: &str) -> Self {
        self.external.push(ExternalSpec {
            id: id.to_string(),
            at: at.to_string(),
        });
        self
    }

    pub fn build(self) -> Result<MetricGraph, GraphError> {
        if self.vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut vindex = HashMap::new();
        for (k, name) in self.vertices.iter().enumerate() {
            if vindex.insert(name.clone(), k).is_some() {
                return Err(GraphError::DuplicateId(name.clone()));
            }
        }
        let lookup = |edge: &str, v: &str| {
            vindex
                .get(v)
                .map(|&k| VertexId(k))
                .ok_or_else(|| GraphError::DanglingVertex {
                    edge: edge.to_string(),
                    vertex: v.to_string(),
                })
        };

        let mut edges = Vec::with_capacity(self.external.len() + self.internal.len());
        for e in &self.external {
            edges.push(Edge {
                name: e.id.clone(),
                kind: EdgeKind::External { anchor: lookup(&e.id, &e.at)? },
            });
        }
        for i in &self.internal {
            if !(i.length > 0.0 && i.length.is_finite()) {
                return Err(GraphError::BadLength {
                    edge: i.id.clone(),
                    length: i.length,
                });
            }
            edges.push(Edge {
                name: i.id.clone(),
                kind: EdgeKind::Internal {
                    initial: lookup(&i.id, &i.from)?,
                    terminal: lookup(&i.id, &i.to)?,
                    length: i.length,
                },
            });
        }
        let mut seen = HashMap::new();
        for e in &edges {
            if seen.insert(e.name.clone(), ()).is_some() || vindex.contains_key(&e.name) {
                return Err(GraphError::DuplicateId(e.name.clone()));
            }
        }

        let mut incidence = vec![Vec::new(); self.vertices.len()];
        for (k, e) in edges.iter().enumerate() {
            let edge = EdgeId(k);
            incidence[e.initial().0].push(Incidence { edge, end: End::Initial });
            if let Some(t) = e.terminal() {
                incidence[t.0].push(Incidence { edge, end: End::Terminal });
            }
        }
        for (k, inc) in incidence.iter().enumerate() {
            if inc.is_empty() {
                return Err(GraphError::IsolatedVertex(self.vertices[k].clone()));
            }
        }

        Ok(MetricGraph {
            vertex_names: self.vertices,
            n_external: self.external.len(),
            edges,
            incidence,
        })
    }
}

impl MetricGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn external_count(&self) -> usize {
        self.n_external
    }

    pub fn internal_count(&self) -> usize {
        self.edges.len() - self.n_external
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = VertexId> + '_ {
        (0..self.vertex_names.len()).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl ExactSizeIterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn external_edges(&self) -> impl ExactSizeIterator<Item = EdgeId> + '_ {
        (0..self.n_external).map(EdgeId)
    }

    pub fn internal_edges(&self) -> impl ExactSizeIterator<Item = EdgeId> + '_ {
        (self.n_external..self.edges.len()).map(EdgeId)
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn length(&self, e: EdgeId) -> f64 {
        self.edges[e.0].length()
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v.0]
    }

    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.edges[e.0].name
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.vertex_names.iter().position(|n| n == name).map(VertexId)
    }

    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        self.edges.iter().position(|e| e.name == name).map(EdgeId)
    }

    /// The ordered incidence list L(v).
    pub fn incidences(&self, v: VertexId) -> &[Incidence] {
        &self.incidence[v.0]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incidence[v.0].len()
    }

    /// Vertex at the given end of an edge.
    pub fn endpoint(&self, inc: Incidence) -> VertexId {
        let e = &self.edges[inc.edge.0];
        match inc.end {
            End::Initial => e.initial(),
            End::Terminal => e.terminal().expect("external edges have no terminal end"),
        }
    }

    /// Position of an incidence in L(v) for the vertex it belongs to.
    pub fn incidence_position(&self, inc: Incidence) -> usize {
        let v = self.endpoint(inc);
        self.incidence[v.0]
            .iter()
            .position(|&i| i == inc)
            .expect("incidence belongs to its endpoint")
    }

    pub fn tadpoles(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.internal_edges().filter(|&e| self.edges[e.0].is_tadpole())
    }

    pub fn is_tadpole_free(&self) -> bool {
        self.tadpoles().next().is_none()
    }

    pub fn total_internal_length(&self) -> f64 {
        self.internal_edges().map(|e| self.length(e)).sum()
    }

    pub fn min_internal_length(&self) -> Option<f64> {
        self.internal_edges().map(|e| self.length(e)).reduce(f64::min)
    }

    pub fn internal_specs(&self) -> Vec<InternalSpec> {
        self.internal_edges()
            .map(|e| {
                let edge = self.edge(e);
                InternalSpec {
                    id: edge.name.clone(),
                    from: self.vertex_name(edge.initial()).to_string(),
                    to: self.vertex_name(edge.terminal().unwrap()).to_string(),
                    length: edge.length(),
                }
            })
            .collect()
    }

    pub fn external_specs(&self) -> Vec<ExternalSpec> {
        self.external_edges()
            .map(|e| ExternalSpec {
                id: self.edge_name(e).to_string(),
                at: self.vertex_name(self.edge(e).initial()).to_string(),
            })
            .collect()
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertex_names
    }

    /// Canonical point for local coordinate `x` on edge `e`: endpoints map to
    /// vertices.
    pub fn point(&self, e: EdgeId, x: f64) -> Result<GraphPoint, GraphError> {
        let edge = self.edge(e);
        let len = edge.length();
        if !(x >= 0.0 && x <= len) || x.is_infinite() {
            return Err(GraphError::OutOfRange {
                edge: edge.name.clone(),
                x,
            });
        }
        Ok(if x == 0.0 {
            GraphPoint::Vertex(edge.initial())
        } else if x == len {
            GraphPoint::Vertex(edge.terminal().unwrap())
        } else {
            GraphPoint::Interior { edge: e, x }
        })
    }

    /// Human-readable description of a point.
    pub fn describe(&self, p: GraphPoint) -> String {
        match p {
            GraphPoint::Interior { edge, x } => format!("{}@{}", self.edge_name(edge), x),
            GraphPoint::Vertex(v) => self.vertex_name(v).to_string(),
            GraphPoint::Cemetery => "cemetery".to_string(),
        }
    }

    /// Parse `vertex` or `edge@x`.
    pub fn parse_point(&self, s: &str) -> Result<GraphPoint, GraphError> {
        if let Some((e, x)) = s.split_once('@') {
            let edge = self.edge_by_name(e).ok_or_else(|| GraphError::UnknownEdge(e.to_string()))?;
            let x: f64 = x.trim().parse().map_err(|_| GraphError::OutOfRange {
                edge: e.to_string(),
                x: f64::NAN,
            })?;
            self.point(edge, x)
        } else {
            self.vertex_by_name(s)
                .map(GraphPoint::Vertex)
                .ok_or_else(|| GraphError::UnknownVertex(s.to_string()))
        }
    }
}

impl fmt::Display for MetricGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} vertices, {} external, {} internal edges",
            self.vertex_count(),
            self.external_count(),
            self.internal_count()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn star(n: usize) -> MetricGraph {
        let mut b = GraphBuilder::new().vertex("v");
        for k in 0..n {
            b = b.external(&format!("e{k}"), "v");
        }
        b.build().unwrap()
    }

    #[test]
    fn three_star_has_three_incidences() {
        let g = star(3);
        let v = g.vertex_by_name("v").unwrap();
        assert_eq!(g.degree(v), 3);
        assert_eq!(g.external_count(), 3);
    }

    #[test]
    fn interval_graph() {
        let g = GraphBuilder::new()
            .vertex("a")
            .vertex("b")
            .internal("i", "a", "b", 1.0)
            .build()
            .unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.internal_count(), 1);
        assert_eq!(g.external_count(), 0);
    }

    #[test]
    fn zero_length_rejected() {
        let err = GraphBuilder::new()
            .vertex("a")
            .vertex("b")
            .internal("i", "a", "b", 0.0)
            .build()
            .unwrap_err();
        assert!(matches!(err, GraphError::BadLength { .. }));
    }

    #[test]
    fn dangling_and_duplicate() {
        let err = GraphBuilder::new().vertex("a").external("e", "z").build().unwrap_err();
        assert!(matches!(err, GraphError::DanglingVertex { .. }));
        let err = GraphBuilder::new()
            .vertex("a")
            .external("e", "a")
            .external("e", "a")
            .build()
            .unwrap_err();
        assert_eq!(err, GraphError::DuplicateId("e".into()));
        let err = GraphBuilder::new().vertex("a").vertex("b").external("e", "a").build().unwrap_err();
        assert_eq!(err, GraphError::IsolatedVertex("b".into()));
    }

    #[test]
    fn external_edges_precede_internal() {
        let g = GraphBuilder::new()
            .vertex("a")
            .vertex("b")
            .internal("i", "a", "b", 2.0)
            .external("e", "b")
            .build()
            .unwrap();
        assert_eq!(g.edge_name(EdgeId(0)), "e");
        assert_eq!(g.edge_name(EdgeId(1)), "i");
        let b = g.vertex_by_name("b").unwrap();
        let l: Vec<_> = g.incidences(b).iter().map(|i| g.edge_name(i.edge)).collect();
        assert_eq!(l, vec!["e", "i"]);
    }

    #[test]
    fn endpoints_canonicalize_to_vertices() {
        let g = GraphBuilder::new()
            .vertex("a")
            .vertex("b")
            .internal("i", "a", "b", 2.0)
            .build()
            .unwrap();
        let i = g.edge_by_name("i").unwrap();
        assert_eq!(g.point(i, 0.0).unwrap(), GraphPoint::Vertex(VertexId(0)));
        assert_eq!(g.point(i, 2.0).unwrap(), GraphPoint::Vertex(VertexId(1)));
        assert!(g.point(i, 2.5).is_err());
        assert_eq!(g.parse_point("i@0.5").unwrap(), GraphPoint::Interior { edge: i, x: 0.5 });
    }
}
