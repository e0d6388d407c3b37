use std::ops::ControlFlow;

use rand::SeedableRng;
use rand_distr::{Distribution, Exp1};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boundary::WentzellData;
use crate::graph::{End, GraphPoint, Incidence, MetricGraph, ShadowMap, VertexId};
use crate::resolvent::EdgeFunction;

use super::engine::{Engine, Fate, NoObserver, Observer, Outcome, Segment};
use super::glue::GlueSimulator;
use super::trajectory::{canonical_start, CrossoverChain};
use super::{SimConfig, SimError};

/// RNG for one path: the ChaCha stream `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Run `n` independent paths in parallel; results come back in path order.
pub fn run_paths<T: Send>(n: usize, seed: u64, f: impl Fn(&mut ChaCha8Rng, usize) -> T + Sync) -> Vec<T> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i as u64);
            f(&mut rng, i)
        })
        .collect()
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Estimate {
            mean,
            se: (var / n as f64).sqrt(),
            n,
        }
    }

    /// Whether `value` lies within `k` standard errors plus `allowance`.
    pub fn agrees(&self, value: f64, k: f64, allowance: f64) -> bool {
        (self.mean - value).abs() <= k * self.se + allowance
    }

    pub fn z_score(&self, value: f64) -> f64 {
        if self.se > 0.0 {
            (self.mean - value) / self.se
        } else if self.mean == value {
            0.0
        } else {
            f64::INFINITY.copysign(self.mean - value)
        }
    }
}

/// Stops at the first vertex visit.
struct FirstVertex {
    hit: Option<(f64, VertexId)>,
}

impl Observer for FirstVertex {
    fn vertex(&mut self, t: f64, v: VertexId) -> ControlFlow<()> {
        self.hit = Some((t, v));
        ControlFlow::Break(())
    }
}

fn transform_samples(hits: &[Option<(f64, VertexId)>], lambda: f64, n_vertices: usize) -> Vec<Estimate> {
    (0..n_vertices)
        .map(|k| {
            let xs: Vec<f64> = hits
                .iter()
                .map(|h| match h {
                    Some((t, v)) if v.index() == k => (-lambda * t).exp(),
                    _ => 0.0,
                })
                .collect();
            Estimate::from_samples(&xs)
        })
        .collect()
}

/// `E_ξ[e^{−λH_V}; X(H_V) = v]` for every vertex v, by simulation.
pub fn mc_hitting_transform(
    g: &MetricGraph,
    data: &WentzellData,
    start: GraphPoint,
    lambda: f64,
    cfg: &SimConfig,
) -> Result<Vec<Estimate>, SimError> {
    let start = canonical_start(g, start)?;
    let engine = Engine::new(g, data, cfg, cfg.max_dt.unwrap_or(f64::INFINITY), &[])?;
    let hits = run_paths(cfg.paths, cfg.seed, |rng, _| {
        let mut obs = FirstVertex { hit: None };
        engine.run(rng, start, 0.0, &mut obs);
        obs.hit
    });
    Ok(transform_samples(&hits, lambda, g.vertex_count()))
}

/// Value of `f` at the end of a run stopped by its horizon.
struct Clock<'a> {
    g: &'a MetricGraph,
    f: &'a EdgeFunction,
    start: GraphPoint,
    horizon: f64,
    last: Option<Segment>,
    value: f64,
}

impl Observer for Clock<'_> {
    fn segment(&mut self, s: &Segment) -> ControlFlow<()> {
        self.last = Some(*s);
        ControlFlow::Continue(())
    }

    fn finish(&mut self, o: &Outcome) {
        let Some(s) = self.last else {
            self.value = self.f.at(self.g, self.start);
            return;
        };
        self.value = match (o.fate, s.vertex_time) {
            (Fate::Killed, _) if o.time <= self.horizon => 0.0,
            // The last step overran the horizon through time spent at the
            // vertex: weight the two states by their share of the step.
            (_, Some(vt)) if s.t1 > self.horizon => {
                let at_vertex = (vt.dwell / (s.t1 - s.t0)).clamp(0.0, 1.0);
                let fv = self.f.vertex_value(self.g, vt.vertex);
                let f1 = if s.p1.is_cemetery() { fv } else { self.f.at(self.g, s.p1) };
                at_vertex * fv + (1.0 - at_vertex) * f1
            }
            _ => self.f.at(self.g, s.p1),
        };
    }
}

/// `R_λf(ξ) = E_ξ ∫_0^ζ e^{−λt} f(X_t) dt = E_ξ[f(X_τ)]/λ` with `τ`
/// exponential of rate λ and independent of the path, truncated at the
/// horizon.
pub fn mc_resolvent(
    g: &MetricGraph,
    data: &WentzellData,
    start: GraphPoint,
    lambda: f64,
    f: &EdgeFunction,
    cfg: &SimConfig,
) -> Result<Estimate, SimError> {
    let start = canonical_start(g, start)?;
    let engine = Engine::new(g, data, cfg, cfg.max_dt.unwrap_or(f64::INFINITY), &[])?;
    let xs = run_paths(cfg.paths, cfg.seed, |rng, _| {
        let tau = <Exp1 as Distribution<f64>>::sample(&Exp1, rng) / lambda;
        if tau >= cfg.horizon {
            return 0.0;
        }
        let mut obs = Clock {
            g,
            f,
            start,
            horizon: tau,
            last: None,
            value: 0.0,
        };
        engine.run_until(rng, start, 0.0, tau, &mut obs);
        obs.value / lambda
    });
    Ok(Estimate::from_samples(&xs))
}

/// Lifetimes of independent paths, `+∞` for paths alive at the horizon.
pub fn mc_lifetimes(
    g: &MetricGraph,
    data: &WentzellData,
    start: GraphPoint,
    cfg: &SimConfig,
) -> Result<Vec<f64>, SimError> {
    let start = canonical_start(g, start)?;
    let engine = Engine::new(g, data, cfg, cfg.max_dt.unwrap_or(f64::INFINITY), &[])?;
    Ok(run_paths(cfg.paths, cfg.seed, |rng, _| {
        let out = engine.run(rng, start, 0.0, &mut NoObserver);
        match out.fate {
            Fate::Killed => out.time,
            _ => f64::INFINITY,
        }
    }))
}

/// `R_λ1(ξ) = E_ξ[(1 − e^{−λζ})/λ]`.
pub fn mc_survival_resolvent(
    g: &MetricGraph,
    data: &WentzellData,
    start: GraphPoint,
    lambda: f64,
    cfg: &SimConfig,
) -> Result<Estimate, SimError> {
    let xs: Vec<f64> = mc_lifetimes(g, data, start, cfg)?
        .into_iter()
        .map(|z| -(-lambda * z).exp_m1() / lambda)
        .collect();
    Ok(Estimate::from_samples(&xs))
}

/// Frequencies with which a path started at `v` first reaches distance
/// `level` along each edge incident with `v`, in the order of L(v).
pub fn mc_exit_edges(
    g: &MetricGraph,
    data: &WentzellData,
    v: VertexId,
    level: f64,
    cfg: &SimConfig,
) -> Result<Vec<Estimate>, SimError> {
    let incs: Vec<Incidence> = g.incidences(v).to_vec();
    let targets: Vec<GraphPoint> = incs
        .iter()
        .map(|inc| {
            let len = g.length(inc.edge);
            if level >= len / 2.0 && !g.edge(inc.edge).is_external() {
                return Err(SimError::NotOnGraph(format!(
                    "exit level {level} on edge `{}`",
                    g.edge_name(inc.edge)
                )));
            }
            let x = match inc.end {
                End::Initial => level,
                End::Terminal => len - level,
            };
            Ok(GraphPoint::Interior { edge: inc.edge, x })
        })
        .collect::<Result<_, _>>()?;
    let engine = Engine::new(g, data, cfg, cfg.max_dt.unwrap_or(f64::INFINITY), &targets)?;
    let exits = run_paths(cfg.paths, cfg.seed, |rng, _| {
        match engine.run(rng, GraphPoint::Vertex(v), 0.0, &mut NoObserver).fate {
            Fate::Target(k) => Some(k),
            _ => None,
        }
    });
    Ok((0..incs.len())
        .map(|k| {
            let xs: Vec<f64> = exits.iter().map(|e| (*e == Some(k)) as u8 as f64).collect();
            Estimate::from_samples(&xs)
        })
        .collect())
}

/// `E_v[e^{−λ(H_via + H_v∘θ_{H_via})}]`: go from `v` to `via`, then back.
pub fn mc_return_transform(
    g: &MetricGraph,
    data: &WentzellData,
    v: VertexId,
    via: GraphPoint,
    lambda: f64,
    cfg: &SimConfig,
) -> Result<Estimate, SimError> {
    let via = canonical_start(g, via)?;
    let cap = cfg.max_dt.unwrap_or(f64::INFINITY);
    let out = Engine::new(g, data, cfg, cap, &[via])?;
    let back = Engine::new(g, data, cfg, cap, &[GraphPoint::Vertex(v)])?;
    let xs = run_paths(cfg.paths, cfg.seed, |rng, _| {
        let first = out.run(rng, GraphPoint::Vertex(v), 0.0, &mut NoObserver);
        if first.fate != Fate::Target(0) {
            return 0.0;
        }
        let second = back.run(rng, via, first.time, &mut NoObserver);
        if second.fate == Fate::Target(0) {
            (-lambda * second.time).exp()
        } else {
            0.0
        }
    });
    Ok(Estimate::from_samples(&xs))
}

/// Hitting transforms of the joined graph computed with the glued process.
pub fn mc_glue_hitting_transform(
    joined: &MetricGraph,
    shadow: &ShadowMap,
    data: &WentzellData,
    start: GraphPoint,
    lambda: f64,
    cfg: &SimConfig,
) -> Result<Vec<Estimate>, SimError> {
    let sim = GlueSimulator::new(joined, shadow, data, cfg, cfg.max_dt.unwrap_or(f64::INFINITY))?;
    let start = canonical_start(joined, start)?;
    let hits = run_paths(cfg.paths, cfg.seed, |rng, _| {
        let mut obs = FirstVertex { hit: None };
        sim.run(rng, start, &mut obs);
        obs.hit
    });
    Ok(transform_samples(&hits, lambda, joined.vertex_count()))
}

/// Crossover chains of independent glued paths.
pub fn mc_crossover_chains(
    joined: &MetricGraph,
    shadow: &ShadowMap,
    data: &WentzellData,
    start: GraphPoint,
    cfg: &SimConfig,
) -> Result<Vec<CrossoverChain>, SimError> {
    let sim = GlueSimulator::new(joined, shadow, data, cfg, cfg.max_dt.unwrap_or(f64::INFINITY))?;
    let start = canonical_start(joined, start)?;
    Ok(run_paths(cfg.paths, cfg.seed, |rng, _| sim.run(rng, start, &mut NoObserver).1))
}
