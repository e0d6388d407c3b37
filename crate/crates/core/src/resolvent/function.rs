use std::fmt;
use std::sync::Arc;

use crate::graph::{EdgeId, End, GraphPoint, MetricGraph, VertexId};

use super::ResolventError;

/// Shape of a function along one edge, in the edge's local coordinate.
#[derive(Clone)]
pub enum Profile {
    Zero,
    Constant(f64),
    /// `amplitude · e^{-rate·x}`
    Exp { amplitude: f64, rate: f64 },
    /// `amplitude · sin(wavenumber·x + phase)`
    Sine { amplitude: f64, wavenumber: f64, phase: f64 },
    /// Linear from `start` at x = 0 to `end` at x = length.
    Affine { start: f64, end: f64, length: f64 },
    /// `value` on [lo, hi], zero elsewhere.
    Indicator { lo: f64, hi: f64, value: f64 },
    /// Piecewise-linear samples on the grid `k·step`, zero past the last one.
    Sampled { step: f64, values: Vec<f64> },
    /// Arbitrary function with a length scale for quadrature.
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, scale: f64 },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Zero => write!(f, "Zero"),
            Profile::Constant(c) => write!(f, "Constant({c})"),
            Profile::Exp { amplitude, rate } => write!(f, "Exp({amplitude}, {rate})"),
            Profile::Sine {
                amplitude,
                wavenumber,
                phase,
            } => write!(f, "Sine({amplitude}, {wavenumber}, {phase})"),
            Profile::Affine { start, end, length } => write!(f, "Affine({start}, {end}, {length})"),
            Profile::Indicator { lo, hi, value } => write!(f, "Indicator([{lo}, {hi}], {value})"),
            Profile::Sampled { step, values } => write!(f, "Sampled(step {step}, {} values)", values.len()),
            Profile::Custom { scale, .. } => write!(f, "Custom(scale {scale})"),
        }
    }
}

impl Profile {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant(c) => *c,
            Profile::Exp { amplitude, rate } => amplitude * (-rate * x).exp(),
            Profile::Sine {
                amplitude,
                wavenumber,
                phase,
            } => amplitude * (wavenumber * x + phase).sin(),
            Profile::Affine { start, end, length } => start + (end - start) * (x / length),
            Profile::Indicator { lo, hi, value } => {
                if x >= *lo && x <= *hi {
                    *value
                } else {
                    0.0
                }
            }
            Profile::Sampled { step, values } => {
                let t = x / step;
                let k = t.floor();
                if k < 0.0 {
                    return values.first().copied().unwrap_or(0.0);
                }
                let k = k as usize;
                if k + 1 >= values.len() {
                    return if k + 1 == values.len() && t == k as f64 {
                        values[k]
                    } else {
                        0.0
                    };
                }
                let w = t - k as f64;
                values[k] * (1.0 - w) + values[k + 1] * w
            }
            Profile::Custom { f, .. } => f(x),
        }
    }

    /// Points in (lo, hi) where the profile is not smooth.
    pub(crate) fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let raw: Vec<f64> = match self {
            Profile::Indicator { lo: a, hi: b, .. } => vec![*a, *b],
            Profile::Sampled { step, values } => {
                let k0 = (lo / step).floor().max(0.0) as usize;
                let k1 = ((hi / step).ceil() as usize).min(values.len().saturating_sub(1));
                (k0..=k1).map(|k| k as f64 * step).collect()
            }
            _ => Vec::new(),
        };
        raw.into_iter().filter(|&x| x > lo && x < hi).collect()
    }

    /// Length scale over which the profile varies.
    pub(crate) fn scale(&self) -> f64 {
        match self {
            Profile::Exp { rate, .. } if *rate != 0.0 => 1.0 / rate.abs(),
            Profile::Sine { wavenumber, .. } if *wavenumber != 0.0 => 1.0 / wavenumber.abs(),
            Profile::Sampled { step, .. } => *step,
            Profile::Custom { scale, .. } => *scale,
            _ => f64::INFINITY,
        }
    }

    /// Where the profile is identically zero from on, if anywhere.
    pub(crate) fn support_end(&self) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Indicator { hi, .. } => *hi,
            Profile::Sampled { step, values } => step * values.len().saturating_sub(1) as f64,
            _ => f64::INFINITY,
        }
    }

    /// Whether the profile is bounded and either decays or is a closed form
    /// whose tail the quadrature handles.
    fn tail_ok(&self) -> bool {
        match self {
            Profile::Exp { rate, .. } => *rate >= 0.0,
            Profile::Sampled { values, .. } => {
                let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                values.last().is_none_or(|v| v.abs() <= 1e-6 * sup.max(1.0))
            }
            _ => true,
        }
    }
}

/// A function on the graph given edge by edge.
#[derive(Clone, Debug)]
pub struct EdgeFunction {
    profiles: Vec<Profile>,
}

impl EdgeFunction {
    pub fn new(g: &MetricGraph, profiles: Vec<Profile>) -> Result<Self, ResolventError> {
        if profiles.len() != g.edge_count() {
            return Err(ResolventError::ProfileCount {
                expected: g.edge_count(),
                got: profiles.len(),
            });
        }
        Ok(EdgeFunction { profiles })
    }

    pub fn zero(g: &MetricGraph) -> Self {
        EdgeFunction {
            profiles: vec![Profile::Zero; g.edge_count()],
        }
    }

    pub fn constant(g: &MetricGraph, c: f64) -> Self {
        EdgeFunction {
            profiles: vec![Profile::Constant(c); g.edge_count()],
        }
    }

    /// Continuous function with the given vertex values: linear along
    /// internal edges and `value·e^{-decay·x}` along external ones.
    pub fn from_vertex_values(g: &MetricGraph, values: &[f64], decay: f64) -> Self {
        let profiles = g
            .edge_ids()
            .map(|e| {
                let edge = g.edge(e);
                let start = values[edge.initial().index()];
                match edge.terminal() {
                    None => Profile::Exp {
                        amplitude: start,
                        rate: decay,
                    },
                    Some(t) => Profile::Affine {
                        start,
                        end: values[t.index()],
                        length: edge.length(),
                    },
                }
            })
            .collect();
        EdgeFunction { profiles }
    }

    pub fn from_fn(g: &MetricGraph, scale: f64, f: impl Fn(EdgeId, f64) -> f64 + Send + Sync + 'static) -> Self {
        let f = Arc::new(f);
        let profiles = g
            .edge_ids()
            .map(|e| {
                let f = Arc::clone(&f);
                Profile::Custom {
                    f: Arc::new(move |x| f(e, x)),
                    scale,
                }
            })
            .collect();
        EdgeFunction { profiles }
    }

    pub fn profile(&self, e: EdgeId) -> &Profile {
        &self.profiles[e.index()]
    }

    pub fn set_profile(&mut self, e: EdgeId, p: Profile) {
        self.profiles[e.index()] = p;
    }

    pub fn value(&self, e: EdgeId, x: f64) -> f64 {
        self.profiles[e.index()].value(x)
    }

    /// One-sided limit at an end of an edge.
    pub fn end_value(&self, g: &MetricGraph, e: EdgeId, end: End) -> f64 {
        match end {
            End::Initial => self.value(e, 0.0),
            End::Terminal => self.value(e, g.length(e)),
        }
    }

    pub fn vertex_value(&self, g: &MetricGraph, v: VertexId) -> f64 {
        let inc = g.incidences(v)[0];
        self.end_value(g, inc.edge, inc.end)
    }

    pub fn at(&self, g: &MetricGraph, p: GraphPoint) -> f64 {
        match p {
            GraphPoint::Interior { edge, x } => self.value(edge, x),
            GraphPoint::Vertex(v) => self.vertex_value(g, v),
            GraphPoint::Cemetery => 0.0,
        }
    }

    /// Largest mismatch between one-sided vertex values.
    pub fn continuity_gap(&self, g: &MetricGraph) -> (f64, Option<VertexId>) {
        let mut worst = (0.0, None);
        for v in g.vertices() {
            let vals: Vec<f64> = g
                .incidences(v)
                .iter()
                .map(|i| self.end_value(g, i.edge, i.end))
                .collect();
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            if max - min > worst.0 {
                worst = (max - min, Some(v));
            }
        }
        worst
    }

    pub(crate) fn check_tails(&self, g: &MetricGraph) -> Result<(), ResolventError> {
        for e in g.external_edges() {
            if !self.profiles[e.index()].tail_ok() {
                return Err(ResolventError::NonDecaying(g.edge_name(e).to_string()));
            }
        }
        Ok(())
    }

    /// Sup over a sample grid.
    pub fn sup_norm(&self, g: &MetricGraph, grid: &[GraphPoint]) -> f64 {
        grid.iter().fold(0.0f64, |m, &p| m.max(self.at(g, p).abs()))
    }
}

/// Sample points: all vertices, `per_edge` interior points on each internal
/// edge, and points out to `extent` on each external edge.
pub fn sample_grid(g: &MetricGraph, per_edge: usize, extent: f64) -> Vec<GraphPoint> {
    let mut pts: Vec<GraphPoint> = g.vertices().map(GraphPoint::Vertex).collect();
    for e in g.edge_ids() {
        let len = if g.edge(e).is_external() { extent } else { g.length(e) };
        for k in 1..=per_edge {
            let x = len * k as f64 / (per_edge + 1) as f64;
            pts.push(GraphPoint::Interior { edge: e, x });
        }
        if g.edge(e).is_external() {
            pts.push(GraphPoint::Interior { edge: e, x: extent });
        }
    }
    pts
}
