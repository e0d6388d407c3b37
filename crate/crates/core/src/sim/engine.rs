use std::ops::ControlFlow;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Geometric};

use crate::boundary::{VertexClass, WentzellData};
use crate::graph::{EdgeId, End, GraphPoint, Incidence, MetricGraph, VertexId};

use super::lattice::vertex_step_probabilities;
use super::sampling::{crossing, increment_with_max, normal};
use super::{SimConfig, SimError, VertexScheme};

/// Steps are limited so that the current feature-free interval is at least
/// this many standard deviations wide.
const WIDTH_SIGMAS: f64 = 6.0;

/// Time spent at a vertex during one segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexTime {
    pub vertex: VertexId,
    /// Real time spent sitting at the vertex (stickiness or lattice stays).
    pub dwell: f64,
    /// Local time accumulated at the vertex.
    pub local: f64,
}

/// Motion between two consecutive sampled states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub p0: GraphPoint,
    pub t1: f64,
    pub p1: GraphPoint,
    pub vertex_time: Option<VertexTime>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fate {
    Killed,
    /// Alive at the horizon.
    Censored,
    /// Reached the target with this index.
    Target(usize),
    /// The observer asked to stop.
    Stopped,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub time: f64,
    pub fate: Fate,
}

pub trait Observer {
    /// Called whenever the path is at a vertex, including at the start.
    fn vertex(&mut self, _t: f64, _v: VertexId) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }

    fn segment(&mut self, _s: &Segment) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }

    fn finish(&mut self, _o: &Outcome) {}
}

pub struct NoObserver;

impl Observer for NoObserver {}

#[derive(Clone, Debug)]
enum Behavior {
    Trap,
    Holding {
        rate: f64,
    },
    Reflect {
        cumulative: Vec<f64>,
        stickiness: f64,
        killing: f64,
    },
    Lattice {
        stay: f64,
        /// Cumulative departure probabilities over L(v), then killing last,
        /// normalized by `1 - stay`.
        cumulative: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Feature {
    End(End),
    Target(usize),
}

#[derive(Clone, Copy, Debug)]
enum At {
    Edge(EdgeId, f64),
    Vertex(VertexId),
}

/// Simulator for one graph with fixed data, horizon and absorbing targets.
#[derive(Clone, Debug)]
pub struct Engine {
    g: MetricGraph,
    behaviors: Vec<Behavior>,
    /// Sorted interior targets per edge: (position, target index).
    edge_targets: Vec<Vec<(f64, usize)>>,
    vertex_targets: Vec<Option<usize>>,
    /// Distance from each vertex to the nearest feature along its edges.
    budgets: Vec<f64>,
    horizon: f64,
    cap: f64,
    delta: f64,
    bridge: bool,
}

fn cumulative(weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .into_iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    let total = acc;
    for c in &mut out {
        *c /= total;
    }
    out
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

impl Engine {
    /// `cap` bounds every time step (may be infinite). Targets are absorbing
    /// points; a run that reaches one ends with [`Fate::Target`].
    pub fn new(
        g: &MetricGraph,
        data: &WentzellData,
        cfg: &SimConfig,
        cap: f64,
        targets: &[GraphPoint],
    ) -> Result<Self, SimError> {
        cfg.validate(g)?;
        if data.vertex_count() != g.vertex_count() {
            return Err(crate::boundary::BoundaryError::VertexCount {
                expected: g.vertex_count(),
                got: data.vertex_count(),
            }
            .into());
        }
        if !(cap > 0.0) {
            return Err(SimError::BadStep(cap));
        }
        let mut behaviors = Vec::with_capacity(g.vertex_count());
        for v in g.vertices() {
            let b = match data.classify(v) {
                VertexClass::Trap => Behavior::Trap,
                VertexClass::ExponentialHolding { rate } => Behavior::Holding { rate },
                VertexClass::Instantaneous {
                    weights,
                    stickiness,
                    killing,
                } => match cfg.scheme {
                    VertexScheme::Exact => Behavior::Reflect {
                        cumulative: cumulative(weights),
                        stickiness,
                        killing,
                    },
                    VertexScheme::Lattice => {
                        let p = vertex_step_probabilities(data.vertex(v), cfg.delta).map_err(|e| match e {
                            SimError::NegativeStay { delta, .. } => SimError::NegativeStay {
                                vertex: g.vertex_name(v).to_string(),
                                delta,
                            },
                            other => other,
                        })?;
                        Behavior::Lattice {
                            stay: p.stay,
                            cumulative: cumulative(p.edges.iter().copied().chain(std::iter::once(p.kill))),
                        }
                    }
                },
            };
            behaviors.push(b);
        }

        let mut edge_targets = vec![Vec::new(); g.edge_count()];
        let mut vertex_targets = vec![None; g.vertex_count()];
        for (k, &p) in targets.iter().enumerate() {
            match p {
                GraphPoint::Interior { edge, x } => {
                    if edge.index() >= g.edge_count() || !(x > 0.0 && x < g.length(edge)) {
                        return Err(SimError::NotOnGraph(format!("target #{k}")));
                    }
                    edge_targets[edge.index()].push((x, k));
                }
                GraphPoint::Vertex(v) => {
                    if v.index() >= g.vertex_count() {
                        return Err(SimError::NotOnGraph(format!("target #{k}")));
                    }
                    vertex_targets[v.index()] = Some(k);
                }
                GraphPoint::Cemetery => return Err(SimError::NotOnGraph(format!("target #{k}"))),
            }
        }
        for t in &mut edge_targets {
            t.sort_by(|a, b| a.0.total_cmp(&b.0));
        }

        let mut engine = Engine {
            g: g.clone(),
            behaviors,
            edge_targets,
            vertex_targets,
            budgets: Vec::new(),
            horizon: cfg.horizon,
            cap,
            delta: cfg.delta,
            bridge: cfg.bridge,
        };
        engine.budgets = g
            .vertices()
            .map(|v| {
                g.incidences(v)
                    .iter()
                    .map(|&inc| engine.first_feature(inc).0)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        Ok(engine)
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.g
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Distance from the vertex at `inc` to the first feature along its edge.
    fn first_feature(&self, inc: Incidence) -> (f64, Feature) {
        let e = inc.edge;
        let len = self.g.length(e);
        let targets = &self.edge_targets[e.index()];
        match inc.end {
            End::Initial => match targets.first() {
                Some(&(x, k)) => (x, Feature::Target(k)),
                None => (len, Feature::End(End::Terminal)),
            },
            End::Terminal => match targets.last() {
                Some(&(x, k)) => (len - x, Feature::Target(k)),
                None => (len, Feature::End(End::Initial)),
            },
        }
    }

    /// Nearest features below and above `x` on edge `e`.
    fn bracket(&self, e: EdgeId, x: f64) -> ((f64, Feature), (f64, Feature)) {
        let targets = &self.edge_targets[e.index()];
        let i = targets.partition_point(|t| t.0 < x);
        let lo = if i > 0 {
            let (p, k) = targets[i - 1];
            (p, Feature::Target(k))
        } else {
            (0.0, Feature::End(End::Initial))
        };
        let hi = match targets.get(i) {
            Some(&(p, k)) => (p, Feature::Target(k)),
            None => (self.g.length(e), Feature::End(End::Terminal)),
        };
        (lo, hi)
    }

    fn endpoint(&self, e: EdgeId, end: End) -> VertexId {
        self.g.endpoint(Incidence { edge: e, end })
    }

    /// Point at distance `r` from the vertex along `inc`, or the feature
    /// reached if `r` overshoots it.
    fn along(&self, inc: Incidence, r: f64) -> Result<At, Feature> {
        let (d, f) = self.first_feature(inc);
        if r >= d {
            return Err(f);
        }
        let x = match inc.end {
            End::Initial => r,
            End::Terminal => self.g.length(inc.edge) - r,
        };
        Ok(At::Edge(inc.edge, x))
    }

    fn feature_point(&self, e: EdgeId, f: Feature) -> GraphPoint {
        match f {
            Feature::End(end) => GraphPoint::Vertex(self.endpoint(e, end)),
            Feature::Target(k) => {
                let x = self.edge_targets[e.index()].iter().find(|t| t.1 == k).unwrap().0;
                GraphPoint::Interior { edge: e, x }
            }
        }
    }

    fn point(&self, at: At) -> GraphPoint {
        match at {
            At::Edge(edge, x) => GraphPoint::Interior { edge, x },
            At::Vertex(v) => GraphPoint::Vertex(v),
        }
    }

    /// Run one path from `start` at time `t0` until it dies, reaches a
    /// target, passes the horizon or the observer stops it.
    pub fn run<R: Rng + ?Sized, O: Observer + ?Sized>(
        &self,
        rng: &mut R,
        start: GraphPoint,
        t0: f64,
        obs: &mut O,
    ) -> Outcome {
        self.run_until(rng, start, t0, self.horizon, obs)
    }

    /// As [`Engine::run`] with a horizon for this run only. Moving steps end
    /// exactly at the horizon; vertex dwell may overrun it.
    pub fn run_until<R: Rng + ?Sized, O: Observer + ?Sized>(
        &self,
        rng: &mut R,
        start: GraphPoint,
        t0: f64,
        horizon: f64,
        obs: &mut O,
    ) -> Outcome {
        let out = self.run_inner(rng, start, t0, horizon, obs);
        obs.finish(&out);
        out
    }

    fn run_inner<R: Rng + ?Sized, O: Observer + ?Sized>(
        &self,
        rng: &mut R,
        start: GraphPoint,
        t0: f64,
        horizon: f64,
        obs: &mut O,
    ) -> Outcome {
        let done = |time, fate| Outcome { time, fate };
        let mut state = match start {
            GraphPoint::Cemetery => return done(t0, Fate::Killed),
            GraphPoint::Vertex(v) => At::Vertex(v),
            GraphPoint::Interior { edge, x } => {
                if let Some(&(_, k)) = self.edge_targets[edge.index()].iter().find(|t| t.0 == x) {
                    return done(t0, Fate::Target(k));
                }
                At::Edge(edge, x)
            }
        };
        let mut t = t0;
        // Remaining killing budget in units of Σ k·ℓ.
        let mut kill_left: f64 = Exp1.sample(rng);

        loop {
            if t >= horizon {
                return done(t, Fate::Censored);
            }
            match state {
                At::Vertex(v) => {
                    if let Some(k) = self.vertex_targets[v.index()] {
                        return done(t, Fate::Target(k));
                    }
                    if obs.vertex(t, v).is_break() {
                        return done(t, Fate::Stopped);
                    }
                    let here = GraphPoint::Vertex(v);
                    match &self.behaviors[v.index()] {
                        Behavior::Trap => {
                            let seg = Segment {
                                t0: t,
                                p0: here,
                                t1: horizon,
                                p1: here,
                                vertex_time: Some(VertexTime {
                                    vertex: v,
                                    dwell: horizon - t,
                                    local: 0.0,
                                }),
                            };
                            if obs.segment(&seg).is_break() {
                                return done(t, Fate::Stopped);
                            }
                            return done(horizon, Fate::Censored);
                        }
                        Behavior::Holding { rate } => {
                            let hold: f64 = Exp1.sample(rng);
                            let end = (t + hold / rate).min(horizon);
                            let seg = Segment {
                                t0: t,
                                p0: here,
                                t1: end,
                                p1: here,
                                vertex_time: Some(VertexTime {
                                    vertex: v,
                                    dwell: end - t,
                                    local: 0.0,
                                }),
                            };
                            if obs.segment(&seg).is_break() {
                                return done(t, Fate::Stopped);
                            }
                            let fate = if end < horizon { Fate::Killed } else { Fate::Censored };
                            return done(end, fate);
                        }
                        Behavior::Reflect {
                            cumulative,
                            stickiness,
                            killing,
                        } => {
                            let budget = self.budgets[v.index()] / WIDTH_SIGMAS;
                            let ds = self.cap.min(horizon - t).min(budget * budget);
                            let (g, m) = increment_with_max(rng, ds);
                            if *killing > 0.0 && killing * m >= kill_left {
                                // Local time reaches the threshold h while -W
                                // first passes level h.
                                let h = kill_left / killing;
                                let tau = super::sampling::bridge_passage_time(rng, h, (h + g).abs(), ds);
                                let zeta = t + tau + stickiness * h;
                                let seg = Segment {
                                    t0: t,
                                    p0: here,
                                    t1: zeta,
                                    p1: here,
                                    vertex_time: Some(VertexTime {
                                        vertex: v,
                                        dwell: stickiness * h,
                                        local: h,
                                    }),
                                };
                                if obs.segment(&seg).is_break() {
                                    return done(t, Fate::Stopped);
                                }
                                return done(zeta, Fate::Killed);
                            }
                            kill_left -= killing * m;
                            let r1 = g + m;
                            let inc = self.g.incidences(v)[pick(cumulative, rng.random())];
                            let t1 = t + ds + stickiness * m;
                            let vt = Some(VertexTime {
                                vertex: v,
                                dwell: stickiness * m,
                                local: m,
                            });
                            match self.along(inc, r1) {
                                Ok(next) => {
                                    let seg = Segment {
                                        t0: t,
                                        p0: here,
                                        t1,
                                        p1: self.point(next),
                                        vertex_time: vt,
                                    };
                                    if obs.segment(&seg).is_break() {
                                        return done(t1, Fate::Stopped);
                                    }
                                    state = next;
                                }
                                Err(f) => {
                                    let p1 = self.feature_point(inc.edge, f);
                                    let seg = Segment {
                                        t0: t,
                                        p0: here,
                                        t1,
                                        p1,
                                        vertex_time: vt,
                                    };
                                    if obs.segment(&seg).is_break() {
                                        return done(t1, Fate::Stopped);
                                    }
                                    match f {
                                        Feature::Target(k) => return done(t1, Fate::Target(k)),
                                        Feature::End(end) => state = At::Vertex(self.endpoint(inc.edge, end)),
                                    }
                                }
                            }
                            t = t1;
                        }
                        Behavior::Lattice { stay, cumulative } => {
                            let stays = if *stay > 0.0 {
                                Geometric::new(1.0 - stay).expect("valid probability").sample(rng) as f64
                            } else {
                                0.0
                            };
                            let dwell = (stays + 1.0) * self.delta * self.delta;
                            let t1 = t + dwell;
                            let k = pick(cumulative, rng.random());
                            let incs = self.g.incidences(v);
                            if k == incs.len() {
                                let seg = Segment {
                                    t0: t,
                                    p0: here,
                                    t1,
                                    p1: here,
                                    vertex_time: Some(VertexTime {
                                        vertex: v,
                                        dwell,
                                        local: 0.0,
                                    }),
                                };
                                if obs.segment(&seg).is_break() {
                                    return done(t, Fate::Stopped);
                                }
                                return done(t1, Fate::Killed);
                            }
                            let inc = incs[k];
                            let vt = Some(VertexTime {
                                vertex: v,
                                dwell,
                                local: self.delta,
                            });
                            let (next, p1) = match self.along(inc, self.delta) {
                                Ok(next) => (Some(next), self.point(next)),
                                Err(f) => (None, self.feature_point(inc.edge, f)),
                            };
                            let seg = Segment {
                                t0: t,
                                p0: here,
                                t1,
                                p1,
                                vertex_time: vt,
                            };
                            if obs.segment(&seg).is_break() {
                                return done(t1, Fate::Stopped);
                            }
                            state = match (next, p1) {
                                (Some(n), _) => n,
                                (None, GraphPoint::Vertex(w)) => At::Vertex(w),
                                (None, _) => {
                                    let (_, f) = self.first_feature(inc);
                                    match f {
                                        Feature::Target(k) => return done(t1, Fate::Target(k)),
                                        Feature::End(_) => unreachable!("vertex features map to vertices"),
                                    }
                                }
                            };
                            t = t1;
                        }
                    }
                }
                At::Edge(e, x) => {
                    let ((lo, flo), (hi, fhi)) = self.bracket(e, x);
                    let (a_lo, a_hi) = (x - lo, hi - x);
                    let width = (a_lo + a_hi) / WIDTH_SIGMAS;
                    let dt = self.cap.min(horizon - t).min(width * width);
                    let x1 = x + dt.sqrt() * normal(rng);
                    let c_lo = crossing(rng, a_lo, x1 - lo, dt, self.bridge);
                    let c_hi = crossing(rng, a_hi, hi - x1, dt, self.bridge);
                    let hit = match (c_lo, c_hi) {
                        (Some(a), Some(b)) if b < a => Some((b, fhi)),
                        (Some(a), _) => Some((a, flo)),
                        (None, Some(b)) => Some((b, fhi)),
                        (None, None) => None,
                    };
                    let p0 = GraphPoint::Interior { edge: e, x };
                    match hit {
                        Some((tau, f)) => {
                            let t1 = t + tau;
                            let p1 = self.feature_point(e, f);
                            let seg = Segment {
                                t0: t,
                                p0,
                                t1,
                                p1,
                                vertex_time: None,
                            };
                            if obs.segment(&seg).is_break() {
                                return done(t1, Fate::Stopped);
                            }
                            match f {
                                Feature::Target(k) => return done(t1, Fate::Target(k)),
                                Feature::End(end) => state = At::Vertex(self.endpoint(e, end)),
                            }
                            t = t1;
                        }
                        None => {
                            let t1 = t + dt;
                            let seg = Segment {
                                t0: t,
                                p0,
                                t1,
                                p1: GraphPoint::Interior { edge: e, x: x1 },
                                vertex_time: None,
                            };
                            if obs.segment(&seg).is_break() {
                                return done(t1, Fate::Stopped);
                            }
                            state = At::Edge(e, x1);
                            t = t1;
                        }
                    }
                }
            }
        }
    }
}
