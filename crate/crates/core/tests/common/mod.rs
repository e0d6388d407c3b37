#![allow(dead_code)]

use wentzell::boundary::{RawVertexData, WentzellData};
use wentzell::graph::{join_graphs, GraphBuilder, GraphPoint, JoinPair, MetricGraph, Orientation, ShadowMap, VertexId};

pub fn star(n: usize) -> MetricGraph {
    let mut b = GraphBuilder::new().vertex("v");
    for k in 0..n {
        b = b.external(&format!("e{k}"), "v");
    }
    b.build().unwrap()
}

pub fn interval(length: f64) -> MetricGraph {
    GraphBuilder::new()
        .vertex("a")
        .vertex("b")
        .internal("i", "a", "b", length)
        .build()
        .unwrap()
}

pub fn raw(a: f64, b: &[f64], c: f64) -> RawVertexData {
    RawVertexData { a, b: b.to_vec(), c }
}

pub fn single(g: &MetricGraph, a: f64, b: &[f64], c: f64) -> WentzellData {
    WentzellData::normalize(g, vec![raw(a, b, c)]).unwrap()
}

pub fn traps(g: &MetricGraph) -> WentzellData {
    let rows = g.vertices().map(|v| raw(0.0, &vec![0.0; g.degree(v)], 1.0)).collect();
    WentzellData::normalize(g, rows).unwrap()
}

pub fn vertex(g: &MetricGraph, name: &str) -> VertexId {
    g.vertex_by_name(name).unwrap()
}

pub fn at(g: &MetricGraph, edge: &str, x: f64) -> GraphPoint {
    g.point(g.edge_by_name(edge).unwrap(), x).unwrap()
}

/// Two one-edge stars joined into an interval of length 1.
pub fn interval_from_stars() -> (MetricGraph, ShadowMap) {
    let g1 = GraphBuilder::new().vertex("a").external("e", "a").build().unwrap();
    let g2 = GraphBuilder::new().vertex("b").external("l", "b").build().unwrap();
    join_graphs(
        &g1,
        &g2,
        &[JoinPair {
            left: g1.edge_by_name("e").unwrap(),
            right: g2.edge_by_name("l").unwrap(),
            length: 1.0,
            orientation: Orientation::Forward,
        }],
    )
    .unwrap()
}

/// Two two-vertex graphs joined on two pairs: 4 vertices, 2 external and
/// 4 internal edges.
pub fn four_vertex_join() -> (MetricGraph, ShadowMap, MetricGraph, MetricGraph) {
    let g1 = GraphBuilder::new()
        .vertex("p")
        .vertex("q")
        .internal("pq", "p", "q", 1.5)
        .external("e1", "p")
        .external("e2", "p")
        .external("e3", "q")
        .build()
        .unwrap();
    let g2 = GraphBuilder::new()
        .vertex("r")
        .vertex("s")
        .internal("rs", "r", "s", 1.2)
        .external("l1", "r")
        .external("l2", "s")
        .external("l3", "s")
        .build()
        .unwrap();
    let pair = |l: &str, r: &str, length, orientation| JoinPair {
        left: g1.edge_by_name(l).unwrap(),
        right: g2.edge_by_name(r).unwrap(),
        length,
        orientation,
    };
    let (g, sm) = join_graphs(
        &g1,
        &g2,
        &[
            pair("e2", "l1", 1.0, Orientation::Forward),
            pair("e3", "l2", 0.8, Orientation::Backward),
        ],
    )
    .unwrap();
    (g, sm, g1, g2)
}

/// Mixed data on the four-vertex join: standard, sticky, elastic and skew.
pub fn four_vertex_data(g: &MetricGraph) -> WentzellData {
    let rows = g
        .vertices()
        .map(|v| {
            let n = g.degree(v);
            match g.vertex_name(v) {
                "p" => raw(0.0, &vec![1.0; n], 0.0),
                "q" => raw(0.0, &vec![1.0; n], 0.6),
                "r" => raw(0.3, &vec![1.0; n], 0.0),
                _ => {
                    let mut b = vec![1.0; n];
                    b[0] = 2.0;
                    raw(0.0, &b, 0.0)
                }
            }
        })
        .collect();
    WentzellData::normalize(g, rows).unwrap()
}

/// A standard vertex with one external edge and a loop of length 2.
pub fn tadpole() -> MetricGraph {
    GraphBuilder::new()
        .vertex("v")
        .external("e", "v")
        .internal("loop", "v", "v", 2.0)
        .build()
        .unwrap()
}
