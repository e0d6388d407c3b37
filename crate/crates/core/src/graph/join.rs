//! Joining two graphs by connecting pairs of external edges with new internal
//! edges, and the bookkeeping (shadow points, vertex/edge maps) needed to run
//! the component processes separately.

use crate::boundary::{RawVertexData, WentzellData};

use super::{EdgeId, End, GraphBuilder, GraphError, GraphPoint, Incidence, MetricGraph, VertexId};

/// Orientation of a new edge: `Forward` runs from the first graph to the
/// second, `Backward` the other way.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Forward,
    Backward,
}

impl Orientation {
    pub fn sign(self) -> i32 {
        match self {
            Orientation::Forward => 1,
            Orientation::Backward => -1,
        }
    }

    pub fn from_sign(s: i32) -> Option<Self> {
        match s {
            1 => Some(Orientation::Forward),
            -1 => Some(Orientation::Backward),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JoinPair {
    /// External edge of the first graph.
    pub left: EdgeId,
    /// External edge of the second graph.
    pub right: EdgeId,
    pub length: f64,
    pub orientation: Orientation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JoinedPair {
    pub left: EdgeId,
    pub right: EdgeId,
    pub left_name: String,
    pub right_name: String,
    /// The new internal edge in the joined graph.
    pub edge: EdgeId,
    pub length: f64,
    pub orientation: Orientation,
    /// Anchor of `left`, as a vertex of the joined graph.
    pub left_vertex: VertexId,
    /// Anchor of `right`, as a vertex of the joined graph.
    pub right_vertex: VertexId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// A point at distance `position` along an external edge of one component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowPoint {
    pub side: Side,
    pub edge: EdgeId,
    pub position: f64,
}

/// Where a component edge went in the joined graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentEdge {
    Kept(EdgeId),
    Joined(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowMap {
    pairs: Vec<JoinedPair>,
    shadows: Vec<(ShadowPoint, VertexId)>,
    left_vertices: usize,
    left_edges: Vec<ComponentEdge>,
    right_edges: Vec<ComponentEdge>,
    left_external: usize,
    right_external: usize,
}

pub fn join_graphs(
    g1: &MetricGraph,
    g2: &MetricGraph,
    pairs: &[JoinPair],
) -> Result<(MetricGraph, ShadowMap), GraphError> {
    let mut used1 = vec![false; g1.edge_count()];
    let mut used2 = vec![false; g2.edge_count()];
    for p in pairs {
        for (g, e, used) in [(g1, p.left, &mut used1), (g2, p.right, &mut used2)] {
            if e.index() >= g.edge_count() {
                return Err(GraphError::UnknownEdge(format!("#{}", e.index())));
            }
            if !g.edge(e).is_external() {
                return Err(GraphError::NotExternal(g.edge_name(e).to_string()));
            }
            if used[e.index()] {
                return Err(GraphError::AlreadyPaired(g.edge_name(e).to_string()));
            }
            used[e.index()] = true;
        }
        if !(p.length > 0.0 && p.length.is_finite()) {
            return Err(GraphError::BadLength {
                edge: format!("{}~{}", g1.edge_name(p.left), g2.edge_name(p.right)),
                length: p.length,
            });
        }
    }

    let n1 = g1.vertex_count();
    let mut b = GraphBuilder::new();
    for v in g1.vertex_names().iter().chain(g2.vertex_names()) {
        b = b.vertex(v);
    }

    let mut left_edges = vec![ComponentEdge::Joined(usize::MAX); g1.edge_count()];
    let mut right_edges = vec![ComponentEdge::Joined(usize::MAX); g2.edge_count()];
    let mut next = 0;
    for (g, used, map) in [(g1, &used1, &mut left_edges), (g2, &used2, &mut right_edges)] {
        for e in g.external_edges() {
            if !used[e.index()] {
                b = b.external(g.edge_name(e), g.vertex_name(g.edge(e).initial()));
                map[e.index()] = ComponentEdge::Kept(EdgeId(next));
                next += 1;
            }
        }
    }
    for (g, map) in [(g1, &mut left_edges), (g2, &mut right_edges)] {
        for e in g.internal_edges() {
            let edge = g.edge(e);
            b = b.internal(
                &edge.name,
                g.vertex_name(edge.initial()),
                g.vertex_name(edge.terminal().unwrap()),
                edge.length(),
            );
            map[e.index()] = ComponentEdge::Kept(EdgeId(next));
            next += 1;
        }
    }

    let mut joined = Vec::with_capacity(pairs.len());
    let mut shadows = Vec::with_capacity(2 * pairs.len());
    for (k, p) in pairs.iter().enumerate() {
        let v1 = g1.edge(p.left).initial();
        let v2 = g2.edge(p.right).initial();
        let left_vertex = VertexId(v1.index());
        let right_vertex = VertexId(n1 + v2.index());
        let (from, to) = match p.orientation {
            Orientation::Forward => (g1.vertex_name(v1), g2.vertex_name(v2)),
            Orientation::Backward => (g2.vertex_name(v2), g1.vertex_name(v1)),
        };
        let name = format!("{}~{}", g1.edge_name(p.left), g2.edge_name(p.right));
        b = b.internal(&name, from, to, p.length);
        left_edges[p.left.index()] = ComponentEdge::Joined(k);
        right_edges[p.right.index()] = ComponentEdge::Joined(k);
        joined.push(JoinedPair {
            left: p.left,
            right: p.right,
            left_name: g1.edge_name(p.left).to_string(),
            right_name: g2.edge_name(p.right).to_string(),
            edge: EdgeId(next),
            length: p.length,
            orientation: p.orientation,
            left_vertex,
            right_vertex,
        });
        next += 1;
        shadows.push((
            ShadowPoint {
                side: Side::Left,
                edge: p.left,
                position: p.length,
            },
            right_vertex,
        ));
        shadows.push((
            ShadowPoint {
                side: Side::Right,
                edge: p.right,
                position: p.length,
            },
            left_vertex,
        ));
    }

    let graph = b.build()?;
    let map = ShadowMap {
        pairs: joined,
        shadows,
        left_vertices: n1,
        left_edges,
        right_edges,
        left_external: g1.external_count(),
        right_external: g2.external_count(),
    };
    Ok((graph, map))
}

impl ShadowMap {
    pub fn pairs(&self) -> &[JoinedPair] {
        &self.pairs
    }

    /// Shadow points with the joined-graph vertex each one stands for.
    pub fn shadows(&self) -> &[(ShadowPoint, VertexId)] {
        &self.shadows
    }

    /// Vertices carrying at least one new edge, sorted.
    pub fn connected_vertices(&self) -> Vec<VertexId> {
        let mut v: Vec<_> = self.shadows.iter().map(|s| s.1).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn side_of(&self, v: VertexId) -> (Side, VertexId) {
        if v.index() < self.left_vertices {
            (Side::Left, v)
        } else {
            (Side::Right, VertexId(v.index() - self.left_vertices))
        }
    }

    pub fn vertex_from_component(&self, side: Side, v: VertexId) -> VertexId {
        match side {
            Side::Left => v,
            Side::Right => VertexId(v.index() + self.left_vertices),
        }
    }

    pub fn component_edge(&self, side: Side, e: EdgeId) -> ComponentEdge {
        match side {
            Side::Left => self.left_edges[e.index()],
            Side::Right => self.right_edges[e.index()],
        }
    }

    fn edges(&self, side: Side) -> &[ComponentEdge] {
        match side {
            Side::Left => &self.left_edges,
            Side::Right => &self.right_edges,
        }
    }

    /// Component edge that became joined-graph edge `e`, for edges that were
    /// kept unchanged.
    fn kept_origin(&self, e: EdgeId) -> Option<(Side, EdgeId)> {
        for side in [Side::Left, Side::Right] {
            if let Some(k) = self.edges(side).iter().position(|&c| c == ComponentEdge::Kept(e)) {
                return Some((side, EdgeId(k)));
            }
        }
        None
    }

    fn joined_index(&self, e: EdgeId) -> Option<usize> {
        self.pairs.iter().position(|p| p.edge == e)
    }

    /// Incidence of the joined graph seen from the component that owns its
    /// vertex.
    pub fn incidence_to_component(&self, inc: Incidence) -> (Side, Incidence) {
        if let Some(k) = self.joined_index(inc.edge) {
            let p = &self.pairs[k];
            let left = Incidence { edge: p.left, end: End::Initial };
            let right = Incidence { edge: p.right, end: End::Initial };
            match (p.orientation, inc.end) {
                (Orientation::Forward, End::Initial) | (Orientation::Backward, End::Terminal) => (Side::Left, left),
                _ => (Side::Right, right),
            }
        } else {
            let (side, e) = self.kept_origin(inc.edge).expect("edge belongs to the join");
            (side, Incidence { edge: e, end: inc.end })
        }
    }

    pub fn incidence_from_component(&self, side: Side, inc: Incidence) -> Incidence {
        match self.component_edge(side, inc.edge) {
            ComponentEdge::Kept(e) => Incidence { edge: e, end: inc.end },
            ComponentEdge::Joined(k) => {
                let p = &self.pairs[k];
                let end = match (side, p.orientation) {
                    (Side::Left, Orientation::Forward) | (Side::Right, Orientation::Backward) => End::Initial,
                    _ => End::Terminal,
                };
                Incidence { edge: p.edge, end }
            }
        }
    }

    /// Map a point of a component graph into the joined graph. Points on a
    /// paired edge must lie strictly before the shadow point or on it.
    pub fn to_joined(&self, joined: &MetricGraph, side: Side, p: GraphPoint) -> Result<GraphPoint, GraphError> {
        match p {
            GraphPoint::Cemetery => Ok(GraphPoint::Cemetery),
            GraphPoint::Vertex(v) => Ok(GraphPoint::Vertex(self.vertex_from_component(side, v))),
            GraphPoint::Interior { edge, x } => match self.component_edge(side, edge) {
                ComponentEdge::Kept(e) => Ok(GraphPoint::Interior { edge: e, x }),
                ComponentEdge::Joined(k) => {
                    let pair = &self.pairs[k];
                    if x > pair.length {
                        return Err(GraphError::OutOfRange {
                            edge: joined.edge_name(pair.edge).to_string(),
                            x,
                        });
                    }
                    let from_initial = match (side, pair.orientation) {
                        (Side::Left, Orientation::Forward) | (Side::Right, Orientation::Backward) => x,
                        _ => pair.length - x,
                    };
                    joined.point(pair.edge, from_initial)
                }
            },
        }
    }

    /// Map a point of the joined graph into a component. Open new edges are
    /// attached to the second component.
    pub fn to_component(&self, p: GraphPoint) -> (Side, GraphPoint) {
        match p {
            GraphPoint::Cemetery => (Side::Left, GraphPoint::Cemetery),
            GraphPoint::Vertex(v) => {
                let (side, w) = self.side_of(v);
                (side, GraphPoint::Vertex(w))
            }
            GraphPoint::Interior { edge, x } => {
                if let Some(k) = self.joined_index(edge) {
                    let pair = &self.pairs[k];
                    let d = match pair.orientation {
                        Orientation::Forward => pair.length - x,
                        Orientation::Backward => x,
                    };
                    (Side::Right, GraphPoint::Interior { edge: pair.right, x: d })
                } else {
                    let (side, e) = self.kept_origin(edge).expect("edge belongs to the join");
                    (side, GraphPoint::Interior { edge: e, x })
                }
            }
        }
    }

    /// Rebuild both components from the joined graph by removing the new
    /// edges and restoring the paired external edges.
    pub fn restore_components(&self, joined: &MetricGraph) -> Result<(MetricGraph, MetricGraph), GraphError> {
        let names = joined.vertex_names();
        let mut out = Vec::with_capacity(2);
        for side in [Side::Left, Side::Right] {
            let (vnames, n_ext) = match side {
                Side::Left => (&names[..self.left_vertices], self.left_external),
                Side::Right => (&names[self.left_vertices..], self.right_external),
            };
            let mut b = GraphBuilder::new();
            for v in vnames {
                b = b.vertex(v);
            }
            for (k, c) in self.edges(side).iter().enumerate() {
                match *c {
                    ComponentEdge::Kept(e) => {
                        let edge = joined.edge(e);
                        if k < n_ext {
                            b = b.external(&edge.name, joined.vertex_name(edge.initial()));
                        } else {
                            b = b.internal(
                                &edge.name,
                                joined.vertex_name(edge.initial()),
                                joined.vertex_name(edge.terminal().unwrap()),
                                edge.length(),
                            );
                        }
                    }
                    ComponentEdge::Joined(j) => {
                        let p = &self.pairs[j];
                        let (name, v) = match side {
                            Side::Left => (&p.left_name, p.left_vertex),
                            Side::Right => (&p.right_name, p.right_vertex),
                        };
                        b = b.external(name, joined.vertex_name(v));
                    }
                }
            }
            out.push(b.build()?);
        }
        let right = out.pop().unwrap();
        let left = out.pop().unwrap();
        Ok((left, right))
    }

    /// The disjoint union of the two components as one graph. Vertex ids
    /// coincide with those of the joined graph; edges are renamed with a
    /// `1/` or `2/` prefix and ordered external-first.
    pub fn component_union(&self, joined: &MetricGraph) -> Result<MetricGraph, GraphError> {
        let (g1, g2) = self.restore_components(joined)?;
        let mut b = GraphBuilder::new();
        for v in g1.vertex_names().iter().chain(g2.vertex_names()) {
            b = b.vertex(v);
        }
        for (tag, g) in [("1/", &g1), ("2/", &g2)] {
            for e in g.external_edges() {
                b = b.external(&format!("{tag}{}", g.edge_name(e)), g.vertex_name(g.edge(e).initial()));
            }
        }
        for (tag, g) in [("1/", &g1), ("2/", &g2)] {
            for e in g.internal_edges() {
                let edge = g.edge(e);
                b = b.internal(
                    &format!("{tag}{}", edge.name),
                    g.vertex_name(edge.initial()),
                    g.vertex_name(edge.terminal().unwrap()),
                    edge.length(),
                );
            }
        }
        b.build()
    }

    /// Edge of the component union corresponding to a component edge.
    pub fn union_edge(&self, side: Side, e: EdgeId) -> EdgeId {
        let (n1e, n2e) = (self.left_external, self.right_external);
        let n1i = self.left_edges.len() - n1e;
        let k = e.index();
        EdgeId(match side {
            Side::Left if k < n1e => k,
            Side::Right if k < n2e => n1e + k,
            Side::Left => n1e + n2e + (k - n1e),
            Side::Right => n1e + n2e + n1i + (k - n2e),
        })
    }

    /// Inverse of [`ShadowMap::union_edge`].
    pub fn union_edge_origin(&self, e: EdgeId) -> (Side, EdgeId) {
        let (n1e, n2e) = (self.left_external, self.right_external);
        let n1i = self.left_edges.len() - n1e;
        let k = e.index();
        if k < n1e {
            (Side::Left, EdgeId(k))
        } else if k < n1e + n2e {
            (Side::Right, EdgeId(k - n1e))
        } else if k < n1e + n2e + n1i {
            (Side::Left, EdgeId(k - n2e))
        } else {
            (Side::Right, EdgeId(k - n1e - n1i))
        }
    }

    /// Combine the data of the two components into data on the joined graph.
    pub fn join_data(
        &self,
        joined: &MetricGraph,
        g1: &MetricGraph,
        d1: &WentzellData,
        g2: &MetricGraph,
        d2: &WentzellData,
    ) -> Result<WentzellData, GraphError> {
        let raw = joined
            .vertices()
            .map(|v| {
                let (side, w) = self.side_of(v);
                let (g, d) = match side {
                    Side::Left => (g1, d1),
                    Side::Right => (g2, d2),
                };
                let src = d.vertex(w);
                let b = joined
                    .incidences(v)
                    .iter()
                    .map(|&inc| {
                        let (_, ci) = self.incidence_to_component(inc);
                        src.b[g.incidence_position(ci)]
                    })
                    .collect();
                RawVertexData { a: src.a, b, c: src.c }
            })
            .collect();
        Ok(WentzellData::normalize(joined, raw)?)
    }

    /// Transfer data on the joined graph to the component union.
    pub fn union_data(
        &self,
        joined: &MetricGraph,
        union: &MetricGraph,
        data: &WentzellData,
    ) -> Result<WentzellData, GraphError> {
        let raw = union
            .vertices()
            .map(|v| {
                let src = data.vertex(v);
                let b = union
                    .incidences(v)
                    .iter()
                    .map(|&inc| {
                        let (side, ce) = self.union_edge_origin(inc.edge);
                        let ji = self.incidence_from_component(side, Incidence { edge: ce, end: inc.end });
                        src.b[joined.incidence_position(ji)]
                    })
                    .collect();
                RawVertexData { a: src.a, b, c: src.c }
            })
            .collect();
        Ok(WentzellData::normalize(union, raw)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_edge_star(v: &str, e: &str) -> MetricGraph {
        GraphBuilder::new().vertex(v).external(e, v).build().unwrap()
    }

    #[test]
    fn two_stars_make_an_interval() {
        let g1 = one_edge_star("a", "e");
        let g2 = one_edge_star("b", "l");
        let (g, sm) = join_graphs(
            &g1,
            &g2,
            &[JoinPair {
                left: EdgeId(0),
                right: EdgeId(0),
                length: 1.0,
                orientation: Orientation::Forward,
            }],
        )
        .unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.external_count(), 0);
        assert_eq!(g.internal_count(), 1);
        assert_eq!(g.length(EdgeId(0)), 1.0);
        assert_eq!(sm.connected_vertices().len(), 2);
    }

    #[test]
    fn backward_orientation_starts_in_second_graph() {
        let g1 = one_edge_star("a", "e");
        let g2 = one_edge_star("b", "l");
        let (g, _) = join_graphs(
            &g1,
            &g2,
            &[JoinPair {
                left: EdgeId(0),
                right: EdgeId(0),
                length: 2.0,
                orientation: Orientation::Backward,
            }],
        )
        .unwrap();
        let e = g.edge(EdgeId(0));
        assert_eq!(g.vertex_name(e.initial()), "b");
        assert_eq!(g.vertex_name(e.terminal().unwrap()), "a");
    }

    #[test]
    fn pairing_errors() {
        let g1 = GraphBuilder::new()
            .vertex("a")
            .vertex("c")
            .external("e", "a")
            .internal("i", "a", "c", 1.0)
            .build()
            .unwrap();
        let g2 = one_edge_star("b", "l");
        let bad = JoinPair {
            left: EdgeId(1),
            right: EdgeId(0),
            length: 1.0,
            orientation: Orientation::Forward,
        };
        assert!(matches!(join_graphs(&g1, &g2, &[bad]), Err(GraphError::NotExternal(_))));
        let p = JoinPair { left: EdgeId(0), ..bad };
        assert!(matches!(join_graphs(&g1, &g2, &[p, p]), Err(GraphError::AlreadyPaired(_))));
    }

    #[test]
    fn point_maps_are_inverse() {
        let g1 = one_edge_star("a", "e");
        let g2 = one_edge_star("b", "l");
        for orientation in [Orientation::Forward, Orientation::Backward] {
            let (g, sm) = join_graphs(
                &g1,
                &g2,
                &[JoinPair {
                    left: EdgeId(0),
                    right: EdgeId(0),
                    length: 1.0,
                    orientation,
                }],
            )
            .unwrap();
            let p = GraphPoint::Interior { edge: EdgeId(0), x: 0.3 };
            let (side, q) = sm.to_component(p);
            assert_eq!(side, Side::Right);
            match sm.to_joined(&g, side, q).unwrap() {
                GraphPoint::Interior { edge, x } => assert!(edge == EdgeId(0) && (x - 0.3).abs() < 1e-15),
                other => panic!("{other:?}"),
            }
            let (left_side, left_point) = (Side::Left, GraphPoint::Interior { edge: EdgeId(0), x: 0.3 });
            let j = sm.to_joined(&g, left_side, left_point).unwrap();
            let dist_from_a = match (orientation, j) {
                (Orientation::Forward, GraphPoint::Interior { x, .. }) => x,
                (Orientation::Backward, GraphPoint::Interior { x, .. }) => 1.0 - x,
                _ => unreachable!(),
            };
            assert!((dist_from_a - 0.3).abs() < 1e-15);
        }
    }
}
