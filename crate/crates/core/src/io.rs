//! Graph files, function specs and comparison scenarios.
//!
//! A graph file is JSON with four top-level keys:
//!
//! ```json
//! {
//!   "vertices": ["v"],
//!   "internal": [{"id": "i", "from": "v", "to": "w", "length": 1.0}],
//!   "external": [{"id": "e0", "at": "v"}],
//!   "wentzell": [{"vertex": "v", "a": 0.0, "c": 0.0, "b": {"e0": 1.0, "i": 1.0}}]
//! }
//! ```
//!
//! Array order is the canonical order of vertices and edges. `wentzell` may
//! be omitted, and so may any vertex in it; missing vertices get standard
//! conditions. A loop edge takes a pair `[initial, terminal]` in `b`, or a
//! single number used at both ends.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::boundary::{BoundaryError, RawVertexData, WentzellData};
use crate::graph::{End, ExternalSpec, GraphBuilder, GraphError, GraphPoint, InternalSpec, MetricGraph, VertexId};
use crate::resolvent::{EdgeFunction, Profile};
use crate::sim::VertexScheme;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write `{path}`: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("wentzell data names unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex `{0}` appears twice in the wentzell data")]
    DuplicateVertex(String),
    #[error("vertex `{vertex}`: edge `{edge}` is not incident")]
    NotIncident { vertex: String, edge: String },
    #[error("vertex `{vertex}`: no weight for incident edge `{edge}`")]
    MissingWeight { vertex: String, edge: String },
    #[error("vertex `{vertex}`: edge `{edge}` is not a loop, give a single weight")]
    PairOnSimpleEdge { vertex: String, edge: String },
    #[error("function spec `{spec}`: {message}")]
    FunctionSpec { spec: String, message: String },
    #[error("samples file, record {record}: {message}")]
    Samples { record: usize, message: String },
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}

impl IoError {
    /// Whether the error is a broken invariant of otherwise well-formed
    /// input, rather than unreadable or malformed input.
    pub fn is_invariant(&self) -> bool {
        matches!(
            self,
            IoError::UnknownVertex(_)
                | IoError::DuplicateVertex(_)
                | IoError::NotIncident { .. }
                | IoError::MissingWeight { .. }
                | IoError::PairOnSimpleEdge { .. }
                | IoError::Graph(_)
                | IoError::Boundary(_)
        )
    }
}

fn parse_error(e: serde_json::Error) -> IoError {
    IoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::Write {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum Weight {
    One(f64),
    Pair([f64; 2]),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WentzellEntry {
    vertex: String,
    a: f64,
    c: f64,
    b: BTreeMap<String, Weight>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    vertices: Vec<String>,
    #[serde(default)]
    internal: Vec<InternalSpec>,
    #[serde(default)]
    external: Vec<ExternalSpec>,
    #[serde(default)]
    wentzell: Vec<WentzellEntry>,
}

/// A graph with the vertex data as written in its file.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphDocument {
    pub graph: MetricGraph,
    /// Unnormalized data per vertex, `b` in the order of L(v).
    pub raw: Vec<RawVertexData>,
}

impl GraphDocument {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let file: GraphFile = serde_json::from_str(text).map_err(parse_error)?;
        let mut b = GraphBuilder::new();
        for v in &file.vertices {
            b = b.vertex(v);
        }
        for e in &file.external {
            b = b.external(&e.id, &e.at);
        }
        for i in &file.internal {
            b = b.internal(&i.id, &i.from, &i.to, i.length);
        }
        let graph = b.build()?;

        let mut entries: Vec<Option<&WentzellEntry>> = vec![None; graph.vertex_count()];
        for w in &file.wentzell {
            let v = graph
                .vertex_by_name(&w.vertex)
                .ok_or_else(|| IoError::UnknownVertex(w.vertex.clone()))?;
            if entries[v.index()].replace(w).is_some() {
                return Err(IoError::DuplicateVertex(w.vertex.clone()));
            }
        }
        let raw = graph
            .vertices()
            .map(|v| match entries[v.index()] {
                Some(w) => raw_from_entry(&graph, v, w),
                None => Ok(RawVertexData {
                    a: 0.0,
                    b: vec![1.0; graph.degree(v)],
                    c: 0.0,
                }),
            })
            .collect::<Result<_, _>>()?;
        Ok(GraphDocument { graph, raw })
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        Self::parse(&read_text(path)?)
    }

    pub fn from_data(graph: &MetricGraph, data: &WentzellData) -> Self {
        let raw = graph
            .vertices()
            .map(|v| {
                let d = data.vertex(v);
                RawVertexData {
                    a: d.a,
                    b: d.b.clone(),
                    c: d.c,
                }
            })
            .collect();
        GraphDocument {
            graph: graph.clone(),
            raw,
        }
    }

    pub fn data(&self) -> Result<WentzellData, BoundaryError> {
        WentzellData::normalize(&self.graph, self.raw.clone())
    }

    /// Canonical JSON: fixed key order, arrays in graph order, `b` keyed by
    /// edge id in sorted order.
    pub fn to_json(&self) -> String {
        let g = &self.graph;
        let file = GraphFile {
            vertices: g.vertex_names().to_vec(),
            internal: g.internal_specs(),
            external: g.external_specs(),
            wentzell: g
                .vertices()
                .map(|v| {
                    let r = &self.raw[v.index()];
                    let mut b: BTreeMap<String, Weight> = BTreeMap::new();
                    for (k, inc) in g.incidences(v).iter().enumerate() {
                        let name = g.edge_name(inc.edge).to_string();
                        let w = r.b[k];
                        let slot = b.entry(name).or_insert(Weight::One(w));
                        if let Weight::One(first) = *slot {
                            if g.edge(inc.edge).is_tadpole() && inc.end == End::Terminal {
                                *slot = Weight::Pair([first, w]);
                            }
                        }
                    }
                    WentzellEntry {
                        vertex: g.vertex_name(v).to_string(),
                        a: r.a,
                        c: r.c,
                        b,
                    }
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("graph files serialize");
        s.push('\n');
        s
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

fn raw_from_entry(g: &MetricGraph, v: VertexId, w: &WentzellEntry) -> Result<RawVertexData, IoError> {
    let vname = || g.vertex_name(v).to_string();
    for edge in w.b.keys() {
        let incident = g
            .edge_by_name(edge)
            .is_some_and(|e| g.incidences(v).iter().any(|inc| inc.edge == e));
        if !incident {
            return Err(IoError::NotIncident {
                vertex: vname(),
                edge: edge.clone(),
            });
        }
    }
    let b = g
        .incidences(v)
        .iter()
        .map(|inc| {
            let name = g.edge_name(inc.edge);
            let weight = w.b.get(name).ok_or_else(|| IoError::MissingWeight {
                vertex: vname(),
                edge: name.to_string(),
            })?;
            match (*weight, g.edge(inc.edge).is_tadpole()) {
                (Weight::One(x), _) => Ok(x),
                (Weight::Pair(p), true) => Ok(if inc.end == End::Initial { p[0] } else { p[1] }),
                (Weight::Pair(_), false) => Err(IoError::PairOnSimpleEdge {
                    vertex: vname(),
                    edge: name.to_string(),
                }),
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(RawVertexData { a: w.a, b, c: w.c })
}

/// Data with `a` and `c` exchanged at every vertex.
pub fn swap_ac(raw: &[RawVertexData]) -> Vec<RawVertexData> {
    raw.iter()
        .map(|r| RawVertexData {
            a: r.c,
            b: r.b.clone(),
            c: r.a,
        })
        .collect()
}

/// Parse a function spec.
///
/// * `const:C` or `one`: the constant C (1);
/// * `exp[:R]`: 1 on internal edges, `e^{-Rx}` on external ones (R = 1);
/// * `vertex:V1,V2,...[;R]`: the given vertex values, linear along internal
///   edges and decaying like `e^{-Rx}` along external ones;
/// * `sin:K`: `sin(Kx)` on every edge;
/// * `csv:PATH`: samples, see [`read_samples`].
pub fn parse_function(g: &MetricGraph, spec: &str, base: Option<&Path>) -> Result<EdgeFunction, IoError> {
    let bad = |message: &str| IoError::FunctionSpec {
        spec: spec.to_string(),
        message: message.to_string(),
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match name.trim() {
        "one" if arg.is_empty() => Ok(EdgeFunction::constant(g, 1.0)),
        "const" => Ok(EdgeFunction::constant(g, num(arg)?)),
        "exp" => {
            let rate = if arg.is_empty() { 1.0 } else { num(arg)? };
            Ok(EdgeFunction::from_vertex_values(g, &vec![1.0; g.vertex_count()], rate))
        }
        "vertex" => {
            let (vals, rate) = arg.split_once(';').unwrap_or((arg, "1"));
            let values: Vec<f64> = vals.split(',').map(num).collect::<Result<_, _>>()?;
            if values.len() != g.vertex_count() {
                return Err(bad(&format!("{} values for {} vertices", values.len(), g.vertex_count())));
            }
            Ok(EdgeFunction::from_vertex_values(g, &values, num(rate)?))
        }
        "sin" => {
            let k = num(arg)?;
            let profile = Profile::Sine {
                amplitude: 1.0,
                wavenumber: k,
                phase: 0.0,
            };
            Ok(EdgeFunction::new(g, vec![profile; g.edge_count()]).expect("one profile per edge"))
        }
        "csv" => {
            let path = Path::new(arg);
            let path = match base {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.to_path_buf(),
            };
            let text = read_text(&path)?;
            read_samples(g, &text)
        }
        _ => Err(bad("unknown function kind")),
    }
}

#[derive(Deserialize)]
struct Sample {
    edge: String,
    x: f64,
    f: f64,
}

/// Function samples as CSV with header `edge,x,f`. Each listed edge needs
/// equally spaced samples starting at x = 0; unlisted edges are zero. On
/// external edges the last sample must be (close to) zero.
pub fn read_samples(g: &MetricGraph, text: &str) -> Result<EdgeFunction, IoError> {
    let mut per_edge: Vec<Vec<(f64, f64)>> = vec![Vec::new(); g.edge_count()];
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    for (k, row) in rdr.deserialize::<Sample>().enumerate() {
        let record = k + 1;
        let s = row.map_err(|e| IoError::Samples {
            record,
            message: e.to_string(),
        })?;
        let e = g.edge_by_name(&s.edge).ok_or_else(|| IoError::Samples {
            record,
            message: format!("unknown edge `{}`", s.edge),
        })?;
        per_edge[e.index()].push((s.x, s.f));
    }
    let mut f = EdgeFunction::zero(g);
    for e in g.edge_ids() {
        let mut pts = std::mem::take(&mut per_edge[e.index()]);
        if pts.is_empty() {
            continue;
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let fail = |message: String| IoError::Samples { record: 0, message };
        if pts[0].0 != 0.0 || pts.len() < 2 {
            return Err(fail(format!("edge `{}` needs samples from x = 0", g.edge_name(e))));
        }
        let step = pts[1].0;
        for (k, p) in pts.iter().enumerate() {
            if (p.0 - k as f64 * step).abs() > 1e-9 * step.max(1.0) * (k as f64 + 1.0) {
                return Err(fail(format!("edge `{}` samples are not equally spaced", g.edge_name(e))));
            }
        }
        f.set_profile(
            e,
            Profile::Sampled {
                step,
                values: pts.into_iter().map(|p| p.1).collect(),
            },
        );
    }
    let (gap, at) = f.continuity_gap(g);
    if gap > 1e-9 {
        let v = at.map_or("?".to_string(), |v| g.vertex_name(v).to_string());
        return Err(IoError::Samples {
            record: 0,
            message: format!("samples jump by {gap} at vertex `{v}`"),
        });
    }
    Ok(f)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub paths: Option<usize>,
    pub delta: Option<f64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub scheme: Option<SchemeName>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Exact,
    Lattice,
}

impl From<SchemeName> for VertexScheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Exact => VertexScheme::Exact,
            SchemeName::Lattice => VertexScheme::Lattice,
        }
    }
}

/// Data perturbation applied to the simulation side only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perturbation {
    SwapAc,
}

/// One comparison. `allowance` overrides the per-quantity constant C in the
/// pass rule `|analytic − MC| ≤ 3·SE + C·δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "quantity", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScenarioRow {
    /// `E[e^{−λH}; X(H) = vertex]` for the first vertex hit H.
    Hitting {
        start: String,
        lambda: f64,
        vertex: String,
        allowance: Option<f64>,
    },
    /// `R_λf(start)`.
    Resolvent {
        start: String,
        lambda: f64,
        f: String,
        allowance: Option<f64>,
    },
    /// `R_λ1(start) = E[(1 − e^{−λζ})/λ]`.
    Survival {
        start: String,
        lambda: f64,
        allowance: Option<f64>,
    },
    /// Probability that the first exit from `vertex` to distance `level`
    /// happens along `edge`.
    Exit {
        vertex: String,
        edge: String,
        level: f64,
        allowance: Option<f64>,
    },
    /// Mean lifetime from a holding vertex.
    Holding { vertex: String, allowance: Option<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    /// Graph file, relative to the scenario file.
    pub graph: Option<PathBuf>,
    #[serde(default)]
    pub config: ScenarioConfig,
    pub simulate_with: Option<Perturbation>,
    #[serde(default)]
    pub rows: Vec<ScenarioRow>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(parse_error)
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        Self::parse(&read_text(path)?)
    }
}

/// Parse a start point and reject the cemetery.
pub fn parse_point(g: &MetricGraph, s: &str) -> Result<GraphPoint, IoError> {
    Ok(g.parse_point(s)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const STAR: &str = r#"{
  "vertices": ["v"],
  "external": [{"id": "e0", "at": "v"}, {"id": "e1", "at": "v"}, {"id": "e2", "at": "v"}],
  "wentzell": [{"vertex": "v", "a": 0, "c": 0, "b": {"e0": 1, "e1": 1, "e2": 1}}]
}"#;

    #[test]
    fn star_round_trips() {
        let d = GraphDocument::parse(STAR).unwrap();
        let once = d.to_json();
        let again = GraphDocument::parse(&once).unwrap();
        assert_eq!(again, d);
        assert_eq!(again.to_json(), once);
        assert_eq!(d.hash().len(), 64);
    }

    #[test]
    fn missing_data_defaults_to_standard() {
        let d = GraphDocument::parse(r#"{"vertices": ["a"], "external": [{"id": "e", "at": "a"}]}"#).unwrap();
        assert_eq!(d.raw[0].b, vec![1.0]);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = GraphDocument::parse("{\n  \"vertices\": [\"v\",]\n}").unwrap_err();
        match err {
            IoError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn loop_weights_take_pairs() {
        let text = r#"{
  "vertices": ["v"],
  "internal": [{"id": "l", "from": "v", "to": "v", "length": 2}],
  "external": [{"id": "e", "at": "v"}],
  "wentzell": [{"vertex": "v", "a": 0, "c": 0, "b": {"e": 1, "l": [2, 3]}}]
}"#;
        let d = GraphDocument::parse(text).unwrap();
        assert_eq!(d.raw[0].b, vec![1.0, 2.0, 3.0]);
        let again = GraphDocument::parse(&d.to_json()).unwrap();
        assert_eq!(again.raw, d.raw);
    }

    #[test]
    fn weight_errors_name_vertex_and_edge() {
        let text = STAR.replace(r#""e2": 1"#, r#""x": 1"#);
        assert!(matches!(GraphDocument::parse(&text), Err(IoError::NotIncident { .. })));
        let text = STAR.replace(r#", "e2": 1"#, "");
        assert!(matches!(GraphDocument::parse(&text), Err(IoError::MissingWeight { .. })));
    }

    #[test]
    fn function_specs() {
        let g = GraphDocument::parse(STAR).unwrap().graph;
        let e = g.edge_by_name("e1").unwrap();
        let f = parse_function(&g, "exp:2", None).unwrap();
        assert!((f.value(e, 0.5) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(parse_function(&g, "const:3", None).unwrap().value(e, 7.0), 3.0);
        assert!(parse_function(&g, "vertex:1,2", None).is_err());
        assert!(parse_function(&g, "bogus", None).is_err());
    }

    #[test]
    fn samples_build_piecewise_linear_profiles() {
        let g = GraphDocument::parse(STAR).unwrap().graph;
        let text = "edge,x,f\ne0,0,1\ne0,0.5,0.5\ne0,1,0\ne1,0,1\ne1,1,0\ne2,0,1\ne2,2,0\n";
        let f = read_samples(&g, text).unwrap();
        assert!((f.value(g.edge_by_name("e0").unwrap(), 0.25) - 0.75).abs() < 1e-12);
        let bad = "edge,x,f\ne0,0,1\ne0,0.5,0\ne1,0,0\ne1,1,0\ne2,0,0\ne2,1,0\n";
        assert!(read_samples(&g, bad).is_err());
    }

    #[test]
    fn scenario_rows_parse() {
        let s = Scenario::parse(
            r#"{"name": "x", "config": {"paths": 10, "scheme": "lattice"}, "simulate_with": "swap-ac",
                "rows": [{"quantity": "hitting", "start": "e0@1", "lambda": 2, "vertex": "v"},
                         {"quantity": "holding", "vertex": "v"}]}"#,
        )
        .unwrap();
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.simulate_with, Some(Perturbation::SwapAc));
        assert_eq!(s.config.scheme, Some(SchemeName::Lattice));
        assert!(Scenario::parse(r#"{"rows": [{"quantity": "nope"}]}"#).is_err());
    }
}
