use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};

use super::{EdgeKind, GraphError, GraphPoint, MetricGraph};

/// Path-length distance between two points; `f64::INFINITY` across
/// connected components.
pub fn distance(g: &MetricGraph, a: GraphPoint, b: GraphPoint) -> Result<f64, GraphError> {
    if a.is_cemetery() || b.is_cemetery() {
        return Err(GraphError::Cemetery);
    }
    if a == b {
        return Ok(0.0);
    }

    let mut net: UnGraph<(), f64> = UnGraph::with_capacity(g.vertex_count() + 2, g.edge_count() + 5);
    for _ in g.vertices() {
        net.add_node(());
    }
    for e in g.internal_edges() {
        if let EdgeKind::Internal { initial, terminal, length } = g.edge(e).kind {
            if initial != terminal {
                net.add_edge(NodeIndex::new(initial.index()), NodeIndex::new(terminal.index()), length);
            }
        }
    }

    let mut attach = |p: GraphPoint| -> NodeIndex {
        match p {
            GraphPoint::Vertex(v) => NodeIndex::new(v.index()),
            GraphPoint::Interior { edge, x } => {
                let node = net.add_node(());
                let e = g.edge(edge);
                net.add_edge(node, NodeIndex::new(e.initial().index()), x);
                if let Some(t) = e.terminal() {
                    net.add_edge(node, NodeIndex::new(t.index()), e.length() - x);
                }
                node
            }
            GraphPoint::Cemetery => unreachable!(),
        }
    };
    let na = attach(a);
    let nb = attach(b);
    if let (GraphPoint::Interior { edge: ea, x: xa }, GraphPoint::Interior { edge: eb, x: xb }) = (a, b) {
        if ea == eb {
            net.add_edge(na, nb, (xa - xb).abs());
        }
    }

    let dist = dijkstra(&net, na, Some(nb), |e| *e.weight());
    Ok(dist.get(&nb).copied().unwrap_or(f64::INFINITY))
}
