use std::ops::ControlFlow;

use crate::boundary::WentzellData;
use crate::graph::{GraphPoint, MetricGraph, VertexId};

use super::engine::{Engine, Fate, Observer, Outcome, Segment};
use super::mc::{path_rng, run_paths};
use super::{SimConfig, SimError};

/// Step cap used when recording full trajectories.
pub(crate) const RECORD_DT: f64 = 0.01;

/// One switch of the crossover chain; `vertex == None` is the cemetery and
/// comes with `time == +∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossover {
    pub time: f64,
    pub vertex: Option<VertexId>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CrossoverChain {
    pub steps: Vec<Crossover>,
}

impl CrossoverChain {
    pub(crate) fn push(&mut self, time: f64, vertex: VertexId) {
        self.steps.push(Crossover {
            time,
            vertex: Some(vertex),
        });
    }

    pub(crate) fn terminate(&mut self) {
        self.steps.push(Crossover {
            time: f64::INFINITY,
            vertex: None,
        });
    }

    /// Finite switches, without the terminal cemetery entry.
    pub fn finite(&self) -> impl Iterator<Item = &Crossover> {
        self.steps.iter().filter(|c| c.time.is_finite())
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.steps.windows(2).all(|w| w[0].time < w[1].time)
    }

    pub fn is_terminated(&self) -> bool {
        matches!(
            self.steps.last(),
            Some(Crossover {
                time,
                vertex: None
            }) if time.is_infinite()
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// (time, position), strictly increasing in time, starting at t = 0.
    pub events: Vec<(f64, GraphPoint)>,
    /// Killing time, or +∞ if the path was alive at the horizon.
    pub lifetime: f64,
    pub horizon: f64,
    /// Accumulated local time per vertex.
    pub local_time: Vec<f64>,
    pub crossovers: Option<CrossoverChain>,
}

impl Trajectory {
    pub fn start(&self) -> GraphPoint {
        self.events[0].1
    }

    pub fn is_killed(&self) -> bool {
        self.lifetime.is_finite()
    }

    /// Times at which the path is recorded at a vertex.
    pub fn vertex_visits(&self) -> impl Iterator<Item = (f64, VertexId)> + '_ {
        self.events.iter().filter_map(|&(t, p)| match p {
            GraphPoint::Vertex(v) => Some((t, v)),
            _ => None,
        })
    }

    /// Whether every jump to the cemetery comes straight from a vertex.
    pub fn killed_at_vertex(&self) -> bool {
        self.events
            .windows(2)
            .filter(|w| w[1].1 == GraphPoint::Cemetery)
            .all(|w| matches!(w[0].1, GraphPoint::Vertex(_)))
    }

    pub fn times_increasing(&self) -> bool {
        self.events.windows(2).all(|w| w[0].0 < w[1].0)
    }
}

/// Observer that keeps every sampled state.
#[derive(Clone, Debug)]
pub struct TrajectoryRecorder {
    events: Vec<(f64, GraphPoint)>,
    local_time: Vec<f64>,
    lifetime: f64,
}

impl TrajectoryRecorder {
    pub fn new(g: &MetricGraph, start: GraphPoint, t0: f64) -> Self {
        TrajectoryRecorder {
            events: vec![(t0, start)],
            local_time: vec![0.0; g.vertex_count()],
            lifetime: f64::INFINITY,
        }
    }

    fn push(&mut self, t: f64, p: GraphPoint) {
        match self.events.last() {
            Some(&(s, _)) if s >= t => {}
            _ => self.events.push((t, p)),
        }
    }

    pub fn into_trajectory(self, horizon: f64, crossovers: Option<CrossoverChain>) -> Trajectory {
        Trajectory {
            events: self.events,
            lifetime: self.lifetime,
            horizon,
            local_time: self.local_time,
            crossovers,
        }
    }
}

impl Observer for TrajectoryRecorder {
    fn vertex(&mut self, t: f64, v: VertexId) -> ControlFlow<()> {
        self.push(t, GraphPoint::Vertex(v));
        ControlFlow::Continue(())
    }

    fn segment(&mut self, s: &Segment) -> ControlFlow<()> {
        if let Some(vt) = s.vertex_time {
            self.local_time[vt.vertex.index()] += vt.local;
        }
        self.push(s.t1, s.p1);
        ControlFlow::Continue(())
    }

    fn finish(&mut self, o: &Outcome) {
        if o.fate == Fate::Killed {
            // The last sample sits at the vertex at the killing time; the
            // path is at that vertex from the previous sample on.
            if let Some(&(t, GraphPoint::Vertex(_))) = self.events.last() {
                if t >= o.time && self.events.len() > 1 {
                    self.events.pop();
                }
            }
            self.events.push((o.time, GraphPoint::Cemetery));
            self.lifetime = o.time;
        }
    }
}

/// One trajectory on `[0, T]` with the RNG stream of path 0.
pub fn simulate_path(
    g: &MetricGraph,
    data: &WentzellData,
    start: GraphPoint,
    cfg: &SimConfig,
) -> Result<Trajectory, SimError> {
    let start = canonical_start(g, start)?;
    let engine = Engine::new(g, data, cfg, cfg.max_dt.unwrap_or(RECORD_DT), &[])?;
    let mut rng = path_rng(cfg.seed, 0);
    let mut rec = TrajectoryRecorder::new(g, start, 0.0);
    engine.run(&mut rng, start, 0.0, &mut rec);
    Ok(rec.into_trajectory(cfg.horizon, None))
}

/// The first `n` trajectories of a run, path `k` on RNG stream `k`.
pub fn simulate_paths(
    g: &MetricGraph,
    data: &WentzellData,
    start: GraphPoint,
    cfg: &SimConfig,
    n: usize,
) -> Result<Vec<Trajectory>, SimError> {
    let start = canonical_start(g, start)?;
    let engine = Engine::new(g, data, cfg, cfg.max_dt.unwrap_or(RECORD_DT), &[])?;
    Ok(run_paths(n, cfg.seed, |rng, _| {
        let mut rec = TrajectoryRecorder::new(g, start, 0.0);
        engine.run(rng, start, 0.0, &mut rec);
        rec.into_trajectory(cfg.horizon, None)
    }))
}

pub(crate) fn canonical_start(g: &MetricGraph, p: GraphPoint) -> Result<GraphPoint, SimError> {
    match p {
        GraphPoint::Cemetery => Err(SimError::CemeteryStart),
        GraphPoint::Vertex(v) if v.index() < g.vertex_count() => Ok(p),
        GraphPoint::Vertex(v) => Err(SimError::NotOnGraph(format!("vertex #{}", v.index()))),
        GraphPoint::Interior { edge, x } => {
            if edge.index() >= g.edge_count() {
                return Err(SimError::NotOnGraph(format!("edge #{}", edge.index())));
            }
            Ok(g.point(edge, x)?)
        }
    }
}

/// Successive hits of `connected` vertices, each different from the previous
/// one, terminated by `(+∞, Δ)`.
pub fn extract_crossovers(traj: &Trajectory, connected: &[VertexId]) -> CrossoverChain {
    let mut chain = CrossoverChain::default();
    let mut last = match traj.start() {
        GraphPoint::Vertex(v) if connected.contains(&v) => Some(v),
        _ => None,
    };
    for (t, v) in traj.vertex_visits() {
        if connected.contains(&v) && last != Some(v) {
            chain.push(t, v);
            last = Some(v);
        }
    }
    chain.terminate();
    chain
}
