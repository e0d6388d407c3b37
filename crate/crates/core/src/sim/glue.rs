//! Glued simulation: run the process on the two components, switching at
//! shadow points.

use std::ops::ControlFlow;

use rand::Rng;

use crate::boundary::WentzellData;
use crate::graph::{GraphPoint, MetricGraph, ShadowMap, VertexId};

use super::engine::{Engine, Fate, Observer, Outcome, Segment};
use super::mc::path_rng;
use super::trajectory::{canonical_start, CrossoverChain, Trajectory, TrajectoryRecorder, RECORD_DT};
use super::{SimConfig, SimError};

/// Simulator for a joined graph built from the disjoint union of its
/// components, with shadow points as switching targets.
#[derive(Clone, Debug)]
pub struct GlueSimulator {
    joined: MetricGraph,
    shadow: ShadowMap,
    engine: Engine,
    /// Joined-graph vertex each shadow target stands for.
    restart: Vec<VertexId>,
}

impl GlueSimulator {
    pub fn new(
        joined: &MetricGraph,
        shadow: &ShadowMap,
        data: &WentzellData,
        cfg: &SimConfig,
        cap: f64,
    ) -> Result<Self, SimError> {
        cfg.validate(joined)?;
        let union = shadow.component_union(joined)?;
        let union_data = shadow.union_data(joined, &union, data)?;
        let targets: Vec<GraphPoint> = shadow
            .shadows()
            .iter()
            .map(|(sp, _)| GraphPoint::Interior {
                edge: shadow.union_edge(sp.side, sp.edge),
                x: sp.position,
            })
            .collect();
        let restart = shadow.shadows().iter().map(|s| s.1).collect();
        // The component union has no internal edge shorter than the joined
        // graph, so the lattice step stays admissible.
        let engine = Engine::new(&union, &union_data, cfg, cap, &targets)?;
        Ok(GlueSimulator {
            joined: joined.clone(),
            shadow: shadow.clone(),
            engine,
            restart,
        })
    }

    pub fn joined(&self) -> &MetricGraph {
        &self.joined
    }

    pub fn union(&self) -> &MetricGraph {
        self.engine.graph()
    }

    fn to_union(&self, p: GraphPoint) -> GraphPoint {
        match self.shadow.to_component(p) {
            (side, GraphPoint::Interior { edge, x }) => GraphPoint::Interior {
                edge: self.shadow.union_edge(side, edge),
                x,
            },
            (_, other) => other,
        }
    }

    fn to_joined(&self, p: GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::Interior { edge, x } => {
                let (side, e) = self.shadow.union_edge_origin(edge);
                self.shadow
                    .to_joined(&self.joined, side, GraphPoint::Interior { edge: e, x })
                    .expect("union points before a shadow map into the joined graph")
            }
            other => other,
        }
    }

    /// One glued path from `start` (a point of the joined graph). The
    /// observer sees joined-graph coordinates.
    pub fn run<R: Rng + ?Sized, O: Observer + ?Sized>(
        &self,
        rng: &mut R,
        start: GraphPoint,
        obs: &mut O,
    ) -> (Outcome, CrossoverChain) {
        let mut chain = CrossoverChain::default();
        let mut adapter = Joined {
            sim: self,
            inner: obs,
            last_vertex: None,
        };
        let mut from = self.to_union(start);
        let mut t = 0.0;
        loop {
            let out = self.engine.run(rng, from, t, &mut Skip(&mut adapter));
            match out.fate {
                Fate::Target(k) => {
                    let v = self.restart[k];
                    chain.push(out.time, v);
                    from = GraphPoint::Vertex(v);
                    t = out.time;
                }
                _ => {
                    chain.terminate();
                    adapter.inner.finish(&out);
                    return (out, chain);
                }
            }
        }
    }
}

/// Forwards everything except `finish`, which the glue loop handles.
struct Skip<'a, 'b, O: ?Sized>(&'a mut Joined<'b, O>);

impl<O: Observer + ?Sized> Observer for Skip<'_, '_, O> {
    fn vertex(&mut self, t: f64, v: VertexId) -> ControlFlow<()> {
        self.0.vertex(t, v)
    }

    fn segment(&mut self, s: &Segment) -> ControlFlow<()> {
        self.0.segment(s)
    }
}

struct Joined<'a, O: ?Sized> {
    sim: &'a GlueSimulator,
    inner: &'a mut O,
    last_vertex: Option<(f64, VertexId)>,
}

impl<O: Observer + ?Sized> Observer for Joined<'_, O> {
    fn vertex(&mut self, t: f64, v: VertexId) -> ControlFlow<()> {
        if self.last_vertex == Some((t, v)) {
            return ControlFlow::Continue(());
        }
        self.last_vertex = Some((t, v));
        self.inner.vertex(t, v)
    }

    fn segment(&mut self, s: &Segment) -> ControlFlow<()> {
        let mapped = Segment {
            p0: self.sim.to_joined(s.p0),
            p1: self.sim.to_joined(s.p1),
            ..*s
        };
        self.inner.segment(&mapped)?;
        // Reaching a shadow point is a vertex visit of the joined graph.
        if let GraphPoint::Vertex(v) = mapped.p1 {
            if !matches!(s.p1, GraphPoint::Vertex(_)) {
                return self.vertex(s.t1, v);
            }
        }
        ControlFlow::Continue(())
    }
}

/// A glued trajectory on the joined graph, with its crossover chain.
pub fn glue_simulate(
    joined: &MetricGraph,
    shadow: &ShadowMap,
    data: &WentzellData,
    start: GraphPoint,
    cfg: &SimConfig,
) -> Result<Trajectory, SimError> {
    let start = canonical_start(joined, start)?;
    let sim = GlueSimulator::new(joined, shadow, data, cfg, cfg.max_dt.unwrap_or(RECORD_DT))?;
    let mut rng = path_rng(cfg.seed, 0);
    let mut rec = TrajectoryRecorder::new(joined, start, 0.0);
    let (_, chain) = sim.run(&mut rng, start, &mut rec);
    Ok(rec.into_trajectory(cfg.horizon, Some(chain)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{join_graphs, EdgeId, GraphBuilder, JoinPair, Orientation};
    use crate::sim::extract_crossovers;

    fn two_stars() -> (MetricGraph, ShadowMap) {
        let g1 = GraphBuilder::new().vertex("a").external("e", "a").build().unwrap();
        let g2 = GraphBuilder::new().vertex("b").external("l", "b").build().unwrap();
        join_graphs(
            &g1,
            &g2,
            &[JoinPair {
                left: EdgeId::from_index(0),
                right: EdgeId::from_index(0),
                length: 1.0,
                orientation: Orientation::Forward,
            }],
        )
        .unwrap()
    }

    #[test]
    fn glued_trajectory_alternates_between_ends() {
        let (g, sm) = two_stars();
        let d = WentzellData::standard(&g);
        let cfg = SimConfig::default().with_horizon(10.0).with_seed(3);
        let tr = glue_simulate(&g, &sm, &d, GraphPoint::Vertex(VertexId::from_index(0)), &cfg).unwrap();
        assert!(tr.times_increasing());
        let chain = tr.crossovers.clone().unwrap();
        assert!(chain.is_terminated() && chain.is_strictly_increasing());
        assert!(chain.finite().count() > 1);
        for w in chain.steps.windows(2) {
            if let (Some(a), Some(b)) = (w[0].vertex, w[1].vertex) {
                assert_ne!(a, b);
            }
        }
        assert_eq!(extract_crossovers(&tr, &sm.connected_vertices()), chain);
        for &(_, p) in &tr.events {
            if let GraphPoint::Interior { edge, x } = p {
                assert_eq!(edge, EdgeId::from_index(0));
                assert!(x > 0.0 && x < 1.0);
            }
        }
    }
}
