use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use twofloat::TwoFloat;

use wentzell::boundary::{assemble, z_matrix, z_matrix_direct, RawVertexData, WentzellData};
use wentzell::graph::{
    distance, eliminate_tadpole, join_graphs, GraphPoint, JoinPair, MetricGraph, Orientation,
};
use wentzell::io::GraphDocument;
use wentzell::resolvent::{solve_resolvent, EdgeFunction};

/// A random connected, loop-free graph with instantaneous vertex data,
/// described by names so that it can be written in any order.
#[derive(Clone, Debug)]
struct Spec {
    vertices: Vec<String>,
    internal: Vec<(String, String, String, f64)>,
    external: Vec<(String, String)>,
    a: Vec<f64>,
    c: Vec<f64>,
    /// Weight per (vertex, edge) incidence; loops are excluded.
    b: BTreeMap<(String, String), f64>,
}

fn spec(max_vertices: usize) -> impl Strategy<Value = Spec> {
    (1..=max_vertices).prop_flat_map(|n| {
        (
            prop::collection::vec((any::<prop::sample::Index>(), 0.5..2.0f64), n - 1),
            prop::collection::vec((0..n, 0..n, 0.5..2.0f64), 0..3),
            prop::collection::vec(0..n, 1..4),
            prop::collection::vec((0.0..0.5f64, any::<bool>(), 0.0..0.5f64, any::<bool>()), n),
            prop::collection::vec(0.1..1.0f64, 48),
        )
            .prop_map(move |(tree, extra, ext, ac, pool)| {
                let vertices: Vec<String> = (0..n).map(|k| format!("v{k}")).collect();
                let mut internal = Vec::new();
                for (k, (parent, len)) in tree.into_iter().enumerate() {
                    let p = parent.index(k + 1);
                    internal.push((format!("t{k}"), vertices[p].clone(), vertices[k + 1].clone(), len));
                }
                for (k, (u, w, len)) in extra.into_iter().enumerate() {
                    if u != w {
                        internal.push((format!("x{k}"), vertices[u].clone(), vertices[w].clone(), len));
                    }
                }
                let external: Vec<(String, String)> = ext
                    .into_iter()
                    .enumerate()
                    .map(|(k, v)| (format!("e{k}"), vertices[v].clone()))
                    .collect();
                let mut pool = pool.into_iter().cycle();
                let mut b = BTreeMap::new();
                for (id, at) in &external {
                    b.insert((at.clone(), id.clone()), pool.next().unwrap());
                }
                for (id, from, to, _) in &internal {
                    b.insert((from.clone(), id.clone()), pool.next().unwrap());
                    b.insert((to.clone(), id.clone()), pool.next().unwrap());
                }
                let a = ac.iter().map(|&(a, on, _, _)| if on { a } else { 0.0 }).collect();
                let c = ac.iter().map(|&(_, _, c, on)| if on { c } else { 0.0 }).collect();
                Spec {
                    vertices,
                    internal,
                    external,
                    a,
                    c,
                    b,
                }
            })
    })
}

impl Spec {
    /// Graph file with vertices and edges listed in the given orders and
    /// internal edges optionally reversed.
    fn json(&self, vorder: &[usize], iorder: &[usize], eorder: &[usize], reverse: bool) -> String {
        let vertices: Vec<_> = vorder.iter().map(|&k| self.vertices[k].clone()).collect();
        let internal: Vec<_> = iorder
            .iter()
            .map(|&k| {
                let (id, from, to, len) = &self.internal[k];
                let (from, to) = if reverse { (to, from) } else { (from, to) };
                serde_json::json!({"id": id, "from": from, "to": to, "length": len})
            })
            .collect();
        let external: Vec<_> = eorder
            .iter()
            .map(|&k| serde_json::json!({"id": self.external[k].0, "at": self.external[k].1}))
            .collect();
        let wentzell: Vec<_> = vorder
            .iter()
            .map(|&k| {
                let v = &self.vertices[k];
                let b: BTreeMap<&str, f64> = self
                    .b
                    .iter()
                    .filter(|((u, _), _)| u == v)
                    .map(|((_, e), w)| (e.as_str(), *w))
                    .collect();
                serde_json::json!({"vertex": v, "a": self.a[k], "c": self.c[k], "b": b})
            })
            .collect();
        serde_json::json!({
            "vertices": vertices,
            "internal": internal,
            "external": external,
            "wentzell": wentzell,
        })
        .to_string()
    }

    fn doc(&self) -> GraphDocument {
        let v: Vec<usize> = (0..self.vertices.len()).collect();
        let i: Vec<usize> = (0..self.internal.len()).collect();
        let e: Vec<usize> = (0..self.external.len()).collect();
        GraphDocument::parse(&self.json(&v, &i, &e, false)).unwrap()
    }

    fn shuffled_doc(&self, rot: usize) -> GraphDocument {
        let rotate = |n: usize| -> Vec<usize> { (0..n).rev().cycle().skip(rot % n.max(1)).take(n).collect() };
        let text = self.json(
            &rotate(self.vertices.len()),
            &rotate(self.internal.len()),
            &rotate(self.external.len()),
            rot % 2 == 1,
        );
        GraphDocument::parse(&text).unwrap()
    }
}

fn point(g: &MetricGraph, sel: (prop::sample::Index, f64)) -> GraphPoint {
    let (idx, t) = sel;
    let k = idx.index(g.vertex_count() + g.edge_count());
    if k < g.vertex_count() {
        return GraphPoint::Vertex(g.vertices().nth(k).unwrap());
    }
    let e = g.edge_ids().nth(k - g.vertex_count()).unwrap();
    let len = if g.edge(e).is_external() { 3.0 } else { g.length(e) };
    g.point(e, (t * len).clamp(1e-6, len - 1e-6)).unwrap()
}

fn point_sel() -> impl Strategy<Value = (prop::sample::Index, f64)> {
    (any::<prop::sample::Index>(), 0.0..1.0f64)
}

fn kappa() -> impl Strategy<Value = Complex64> {
    (0.1..3.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

#[derive(Clone, Copy, Debug)]
struct Dd {
    re: TwoFloat,
    im: TwoFloat,
}

impl Dd {
    fn from(z: Complex64) -> Self {
        Dd {
            re: TwoFloat::from(z.re),
            im: TwoFloat::from(z.im),
        }
    }
    fn mul(self, o: Dd) -> Dd {
        Dd {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
    fn sub(self, o: Dd) -> Dd {
        Dd {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
    fn div(self, o: Dd) -> Dd {
        let d = o.re * o.re + o.im * o.im;
        Dd {
            re: (self.re * o.re + self.im * o.im) / d,
            im: (self.im * o.re - self.re * o.im) / d,
        }
    }
    fn abs_hi(self) -> f64 {
        f64::from(self.re).hypot(f64::from(self.im))
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(f64::from(self.re), f64::from(self.im))
    }
}

/// Determinant by partial-pivoting elimination in double-double arithmetic.
fn dd_determinant(m: &DMatrix<Complex64>) -> Complex64 {
    let n = m.nrows();
    let mut a: Vec<Vec<Dd>> = (0..n).map(|i| (0..n).map(|j| Dd::from(m[(i, j)])).collect()).collect();
    let mut det = Dd::from(Complex64::new(1.0, 0.0));
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs_hi().total_cmp(&a[j][k].abs_hi())).unwrap();
        if a[p][k].abs_hi() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != k {
            a.swap(p, k);
            det = Dd::from(Complex64::new(0.0, 0.0)).sub(det);
        }
        det = det.mul(a[k][k]);
        let (top, rest) = a.split_at_mut(k + 1);
        let pivot = &top[k];
        for row in rest {
            let f = row[k].div(pivot[k]);
            for (x, &p) in row[k..].iter_mut().zip(&pivot[k..]) {
                *x = x.sub(f.mul(p));
            }
        }
    }
    det.to_c64()
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn distance_is_a_metric(s in spec(4), p in point_sel(), q in point_sel(), r in point_sel()) {
        let g = s.doc().graph;
        let (p, q, r) = (point(&g, p), point(&g, q), point(&g, r));
        let pq = distance(&g, p, q).unwrap();
        let qp = distance(&g, q, p).unwrap();
        let pr = distance(&g, p, r).unwrap();
        let rq = distance(&g, r, q).unwrap();
        prop_assert_eq!(distance(&g, p, p).unwrap(), 0.0);
        prop_assert!(pq >= 0.0 && pq.is_finite());
        prop_assert!((pq - qp).abs() <= 1e-12 * (1.0 + pq));
        prop_assert!(pq <= pr + rq + 1e-12);
    }

    #[test]
    fn normalized_data_sums_to_one(s in spec(4), scale in 0.01..100.0f64) {
        let doc = s.doc();
        let g = &doc.graph;
        let raw: Vec<RawVertexData> = doc
            .raw
            .iter()
            .map(|r| RawVertexData { a: r.a * scale, b: r.b.iter().map(|x| x * scale).collect(), c: r.c * scale })
            .collect();
        let data = WentzellData::normalize(g, raw).unwrap();
        for v in g.vertices() {
            let d = data.vertex(v);
            prop_assert!((d.a + d.b_sum() + d.c - 1.0).abs() < 1e-12);
        }
        let base = doc.data().unwrap();
        for v in g.vertices() {
            let (x, y) = (data.vertex(v), base.vertex(v));
            prop_assert!((x.a - y.a).abs() < 1e-12 && (x.c - y.c).abs() < 1e-12);
            for (p, q) in x.b.iter().zip(&y.b) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn serialization_round_trip_keeps_order(s in spec(4), rot in 0usize..7) {
        let doc = s.shuffled_doc(rot);
        let text = doc.to_json();
        let again = GraphDocument::parse(&text).unwrap();
        prop_assert_eq!(again.to_json(), text);
        prop_assert_eq!(again.graph.vertex_names(), doc.graph.vertex_names());
        let names = |g: &MetricGraph| g.edge_ids().map(|e| g.edge_name(e).to_string()).collect::<Vec<_>>();
        prop_assert_eq!(names(&again.graph), names(&doc.graph));
        prop_assert_eq!(again.data().unwrap(), doc.data().unwrap());
        prop_assert_eq!(again.hash(), doc.hash());
    }

    #[test]
    fn z_blocks_match_direct_assembly(s in spec(4), k in kappa()) {
        let doc = s.doc();
        let data = doc.data().unwrap();
        let m = assemble(&doc.graph, &data).unwrap();
        let z = z_matrix(&m, k);
        let d = z_matrix_direct(&doc.graph, &data, k);
        prop_assert!(max_abs(&(&z - &d)) <= 1e-12 * max_abs(&z).max(1.0));
    }

    #[test]
    fn determinant_matches_double_double_oracle(s in spec(4), ks in prop::collection::vec(kappa(), 20)) {
        let doc = s.doc();
        let m = assemble(&doc.graph, &doc.data().unwrap()).unwrap();
        for k in ks {
            let z = z_matrix(&m, k);
            let oracle = dd_determinant(&z);
            let det = z.clone().determinant();
            prop_assert!(
                (det - oracle).norm() <= 1e-9 * oracle.norm(),
                "κ = {}: {} vs {}", k, det, oracle
            );
        }
    }

    #[test]
    fn relabeling_leaves_determinant_and_solution(s in spec(4), rot in 1usize..7, k in kappa(), lambda in 0.2..4.0f64) {
        let d1 = s.doc();
        let d2 = s.shuffled_doc(rot);
        let (g1, g2) = (&d1.graph, &d2.graph);
        let (x1, x2) = (d1.data().unwrap(), d2.data().unwrap());
        let det1 = z_matrix(&assemble(g1, &x1).unwrap(), k).determinant().norm();
        let det2 = z_matrix(&assemble(g2, &x2).unwrap(), k).determinant().norm();
        prop_assert!((det1 - det2).abs() <= 1e-10 * det1.max(1e-300), "{} vs {}", det1, det2);

        let values = |g: &MetricGraph| -> Vec<f64> {
            g.vertices().map(|v| 1.0 + g.vertex_name(v)[1..].parse::<f64>().unwrap()).collect()
        };
        let f1 = EdgeFunction::from_vertex_values(g1, &values(g1), 1.5);
        let f2 = EdgeFunction::from_vertex_values(g2, &values(g2), 1.5);
        let u1 = solve_resolvent(g1, &x1, lambda, &f1).unwrap();
        let u2 = solve_resolvent(g2, &x2, lambda, &f2).unwrap();
        for v in g1.vertices() {
            let w = g2.vertex_by_name(g1.vertex_name(v)).unwrap();
            let (a, b) = (u1.at(GraphPoint::Vertex(v)), u2.at(GraphPoint::Vertex(w)));
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
        for e in g1.edge_ids() {
            let e2 = g2.edge_by_name(g1.edge_name(e)).unwrap();
            let x = if g1.edge(e).is_external() { 0.7 } else { g1.length(e) / 2.0 };
            let (a, b) = (u1.value(e, x), u2.value(e2, x));
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn join_then_restore_is_identity(
        s1 in spec(3),
        s2 in spec(3),
        picks in prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>(), 0.5..2.0f64, any::<bool>()), 1..3),
    ) {
        let (g1, g2) = (s1.doc().graph, s2.renamed("r").doc().graph);
        let ext1: Vec<_> = g1.external_edges().collect();
        let mut ext2: Vec<_> = g2.external_edges().collect();
        let mut left: Vec<_> = ext1.clone();
        let mut pairs = Vec::new();
        for (i, j, len, fwd) in picks {
            if left.is_empty() || ext2.is_empty() {
                break;
            }
            let l = left.remove(i.index(left.len()));
            let r = ext2.remove(j.index(ext2.len()));
            let orientation = if fwd { Orientation::Forward } else { Orientation::Backward };
            pairs.push(JoinPair { left: l, right: r, length: len, orientation });
        }
        let (joined, shadow) = join_graphs(&g1, &g2, &pairs).unwrap();
        prop_assert_eq!(joined.vertex_count(), g1.vertex_count() + g2.vertex_count());
        prop_assert_eq!(joined.internal_count(), g1.internal_count() + g2.internal_count() + pairs.len());
        prop_assert_eq!(joined.external_count(), g1.external_count() + g2.external_count() - 2 * pairs.len());
        let (r1, r2) = shadow.restore_components(&joined).unwrap();
        prop_assert_eq!(r1.vertex_names(), g1.vertex_names());
        prop_assert_eq!(r2.vertex_names(), g2.vertex_names());
        prop_assert_eq!(r1.internal_specs(), g1.internal_specs());
        prop_assert_eq!(r2.internal_specs(), g2.internal_specs());
        prop_assert_eq!(r1.external_specs(), g1.external_specs());
        prop_assert_eq!(r2.external_specs(), g2.external_specs());
    }

    #[test]
    fn tadpole_split_keeps_length_and_data(s in spec(3), at in any::<prop::sample::Index>(), len in 0.5..3.0f64, w in (0.1..1.0f64, 0.1..1.0f64)) {
        let mut s = s;
        let v = s.vertices[at.index(s.vertices.len())].clone();
        s.internal.push(("loop".into(), v.clone(), v.clone(), len));
        let mut text: serde_json::Value = serde_json::from_str(&s.doc_json_without_loop_weights()).unwrap();
        for entry in text["wentzell"].as_array_mut().unwrap() {
            if entry["vertex"] == v.as_str() {
                entry["b"]["loop"] = serde_json::json!([w.0, w.1]);
            }
        }
        let doc = GraphDocument::parse(&text.to_string()).unwrap();
        let (g, data) = (&doc.graph, doc.data().unwrap());
        let e = g.edge_by_name("loop").unwrap();
        let split = eliminate_tadpole(g, &data, e).unwrap();
        prop_assert!((split.graph.total_internal_length() - g.total_internal_length()).abs() < 1e-12);
        prop_assert!(split.graph.is_tadpole_free());
        for u in g.vertices() {
            let before = data.vertex(u);
            let after = split.data.vertex(u);
            prop_assert!((before.a - after.a).abs() < 1e-12);
            prop_assert!((before.c - after.c).abs() < 1e-12);
            prop_assert!((before.b_sum() - after.b_sum()).abs() < 1e-12);
            for (k, inc) in g.incidences(u).iter().enumerate() {
                if inc.edge != e {
                    let k2 = split.graph.incidences(u).iter().position(|i| i.edge == inc.edge).unwrap();
                    prop_assert!((before.b[k] - after.b[k2]).abs() < 1e-12);
                }
            }
        }
    }
}

impl Spec {
    fn renamed(&self, prefix: &str) -> Spec {
        let n = |s: &String| format!("{prefix}{s}");
        Spec {
            vertices: self.vertices.iter().map(n).collect(),
            internal: self.internal.iter().map(|(i, f, t, l)| (n(i), n(f), n(t), *l)).collect(),
            external: self.external.iter().map(|(e, v)| (n(e), n(v))).collect(),
            a: self.a.clone(),
            c: self.c.clone(),
            b: self.b.iter().map(|((v, e), w)| ((n(v), n(e)), *w)).collect(),
        }
    }

    fn doc_json_without_loop_weights(&self) -> String {
        let v: Vec<usize> = (0..self.vertices.len()).collect();
        let i: Vec<usize> = (0..self.internal.len()).collect();
        let e: Vec<usize> = (0..self.external.len()).collect();
        self.json(&v, &i, &e, false)
    }
}
