//! Path simulation of Brownian motion on a metric graph with Wentzell vertex
//! conditions.
//!
//! Motion inside edges is exact: Gaussian increments, with first-passage
//! times through vertices and target points drawn from the Brownian-bridge
//! law. What happens at a vertex depends on its [`VertexClass`]:
//!
//! * traps absorb until the horizon;
//! * holding vertices wait an exponential time and then kill the path;
//! * instantaneous vertices reflect, either exactly (reflected increments
//!   with their Skorokhod local time) or through the δ-lattice scheme of
//!   [`vertex_step_probabilities`].
//!
//! Every path draws from its own ChaCha stream keyed by `(seed, path index)`,
//! so Monte Carlo output does not depend on the number of worker threads.
//!
//! [`VertexClass`]: crate::boundary::VertexClass

mod engine;
mod glue;
mod lattice;
mod mc;
mod sampling;
pub mod stats;
mod trajectory;

use thiserror::Error;

use crate::boundary::BoundaryError;
use crate::graph::{GraphError, MetricGraph};

pub use engine::{Engine, Fate, NoObserver, Observer, Outcome, Segment, VertexTime};
pub use glue::{glue_simulate, GlueSimulator};
pub use lattice::{vertex_step_probabilities, StepProbabilities};
pub use mc::{
    mc_crossover_chains, mc_exit_edges, mc_glue_hitting_transform, mc_hitting_transform, mc_lifetimes, mc_resolvent,
    mc_return_transform, mc_survival_resolvent, path_rng, run_paths, Estimate,
};
pub use trajectory::{
    extract_crossovers, simulate_path, simulate_paths, Crossover, CrossoverChain, Trajectory, TrajectoryRecorder,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("lattice step must be positive and finite, got {0}")]
    BadDelta(f64),
    #[error("lattice step {delta} exceeds the limit {limit} (min internal length / 8)")]
    DeltaTooLarge { delta: f64, limit: f64 },
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("time step cap must be positive, got {0}")]
    BadStep(f64),
    #[error("path count must be positive")]
    NoPaths,
    #[error("cannot start a path at the cemetery")]
    CemeteryStart,
    #[error("lattice step {delta} too large at vertex `{vertex}`: stay probability is negative")]
    NegativeStay { vertex: String, delta: f64 },
    #[error("vertex `{0}` has no edge weights")]
    NotInstantaneous(String),
    #[error("point is not on the graph: {0}")]
    NotOnGraph(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}

/// Treatment of instantaneous vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VertexScheme {
    /// Reflected Gaussian increments with exact local time.
    #[default]
    Exact,
    /// δ-lattice random walk at the vertex, exact motion elsewhere.
    Lattice,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub delta: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Use the Brownian-bridge crossing test between samples.
    pub bridge: bool,
    pub paths: usize,
    pub scheme: VertexScheme,
    /// Upper bound on a single time step. `None` lets each estimator choose.
    pub max_dt: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            delta: 0.005,
            horizon: 20.0,
            seed: 0,
            bridge: true,
            paths: 10_000,
            scheme: VertexScheme::Exact,
            max_dt: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, g: &MetricGraph) -> Result<(), SimError> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(SimError::BadDelta(self.delta));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SimError::BadHorizon(self.horizon));
        }
        if let Some(limit) = g.min_internal_length().map(|l| l / 8.0) {
            if self.delta > limit {
                return Err(SimError::DeltaTooLarge { delta: self.delta, limit });
            }
        }
        if let Some(dt) = self.max_dt {
            if !(dt > 0.0) {
                return Err(SimError::BadStep(dt));
            }
        }
        if self.paths == 0 {
            return Err(SimError::NoPaths);
        }
        Ok(())
    }

    pub fn with_paths(mut self, paths: usize) -> Self {
        self.paths = paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_scheme(mut self, scheme: VertexScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_max_dt(mut self, dt: f64) -> Self {
        self.max_dt = Some(dt);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    #[test]
    fn config_validation() {
        let g = GraphBuilder::new()
            .vertex("a")
            .vertex("b")
            .internal("i", "a", "b", 0.4)
            .build()
            .unwrap();
        assert!(SimConfig::default().validate(&g).is_ok());
        assert_eq!(
            SimConfig::default().with_delta(0.1).validate(&g),
            Err(SimError::DeltaTooLarge { delta: 0.1, limit: 0.05 })
        );
        assert_eq!(
            SimConfig::default().with_horizon(0.0).validate(&g),
            Err(SimError::BadHorizon(0.0))
        );
        assert_eq!(SimConfig::default().with_delta(-1.0).validate(&g), Err(SimError::BadDelta(-1.0)));
    }
}
