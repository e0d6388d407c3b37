use crate::boundary::{RawVertexData, WentzellData};

use super::{EdgeId, EdgeKind, End, GraphBuilder, GraphError, GraphPoint, Incidence, MetricGraph, VertexId};

/// Result of splitting a loop edge at its midpoint.
#[derive(Clone, Debug)]
pub struct TadpoleSplit {
    pub graph: MetricGraph,
    pub data: WentzellData,
    /// The new midpoint vertex.
    pub midpoint: VertexId,
    /// First half (loop vertex to midpoint); keeps the loop's edge id.
    pub first: EdgeId,
    /// Second half (midpoint back to the loop vertex).
    pub second: EdgeId,
}

impl TadpoleSplit {
    /// Image of a point of the original graph.
    pub fn map_point(&self, original: &MetricGraph, p: GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::Interior { edge, x } if edge == self.first => {
                let half = original.length(edge) / 2.0;
                if x < half {
                    GraphPoint::Interior { edge: self.first, x }
                } else if x == half {
                    GraphPoint::Vertex(self.midpoint)
                } else {
                    GraphPoint::Interior {
                        edge: self.second,
                        x: x - half,
                    }
                }
            }
            other => other,
        }
    }
}

/// Replace the loop `edge` at v by two edges of half its length meeting at a
/// new vertex with standard, equally weighted conditions.
pub fn eliminate_tadpole(g: &MetricGraph, data: &WentzellData, edge: EdgeId) -> Result<TadpoleSplit, GraphError> {
    if edge.index() >= g.edge_count() {
        return Err(GraphError::UnknownEdge(format!("#{}", edge.index())));
    }
    let loop_edge = g.edge(edge);
    let (v, length) = match loop_edge.kind {
        EdgeKind::Internal { initial, terminal, length } if initial == terminal => (initial, length),
        _ => return Err(GraphError::NotATadpole(loop_edge.name.clone())),
    };

    let mid_name = format!("{}.mid", loop_edge.name);
    let second_name = format!("{}.2", loop_edge.name);
    let mut b = GraphBuilder::new();
    for name in g.vertex_names() {
        b = b.vertex(name);
    }
    b = b.vertex(&mid_name);
    for e in g.external_edges() {
        b = b.external(g.edge_name(e), g.vertex_name(g.edge(e).initial()));
    }
    for e in g.internal_edges() {
        let ed = g.edge(e);
        if e == edge {
            b = b.internal(&format!("{}.1", ed.name), g.vertex_name(v), &mid_name, length / 2.0);
        } else {
            b = b.internal(
                &ed.name,
                g.vertex_name(ed.initial()),
                g.vertex_name(ed.terminal().unwrap()),
                ed.length(),
            );
        }
    }
    b = b.internal(&second_name, &mid_name, g.vertex_name(v), length / 2.0);
    let graph = b.build()?;

    let midpoint = VertexId::from_index(g.vertex_count());
    let second = EdgeId::from_index(g.edge_count());
    let raw = graph
        .vertices()
        .map(|w| {
            if w == midpoint {
                return RawVertexData {
                    a: 0.0,
                    b: vec![0.5, 0.5],
                    c: 0.0,
                };
            }
            let src = data.vertex(w);
            let b = graph
                .incidences(w)
                .iter()
                .map(|&inc| {
                    let orig = if inc.edge == second {
                        Incidence { edge, end: End::Terminal }
                    } else {
                        inc
                    };
                    src.b[g.incidence_position(orig)]
                })
                .collect();
            RawVertexData { a: src.a, b, c: src.c }
        })
        .collect();
    let data = WentzellData::normalize(&graph, raw)?;
    Ok(TadpoleSplit {
        graph,
        data,
        midpoint,
        first: edge,
        second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tadpole() -> (MetricGraph, WentzellData) {
        let g = GraphBuilder::new()
            .vertex("v")
            .external("e", "v")
            .internal("loop", "v", "v", 2.0)
            .build()
            .unwrap();
        let d = WentzellData::standard(&g);
        (g, d)
    }

    #[test]
    fn splits_loop_into_halves() {
        let (g, d) = tadpole();
        let lp = g.edge_by_name("loop").unwrap();
        let s = eliminate_tadpole(&g, &d, lp).unwrap();
        assert!(s.graph.is_tadpole_free());
        assert_eq!(s.graph.length(s.first), 1.0);
        assert_eq!(s.graph.length(s.second), 1.0);
        let m = s.data.vertex(s.midpoint);
        assert_eq!((m.a, m.c), (0.0, 0.0));
        assert_eq!(m.b, vec![0.5, 0.5]);
        let v = s.graph.vertex_by_name("v").unwrap();
        assert_eq!(s.data.vertex(v), d.vertex(v));
    }

    #[test]
    fn second_application_fails() {
        let (g, d) = tadpole();
        let lp = g.edge_by_name("loop").unwrap();
        let s = eliminate_tadpole(&g, &d, lp).unwrap();
        assert!(matches!(
            eliminate_tadpole(&s.graph, &s.data, lp),
            Err(GraphError::NotATadpole(_))
        ));
        let e = g.edge_by_name("e").unwrap();
        assert!(eliminate_tadpole(&g, &d, e).is_err());
    }
}
