//! Resolvent, hitting transforms and semigroup of the process, computed from
//! the boundary matrices without simulation.
//!
//! The resolvent `u = R_λ f` is written as `u = u_D + u_H`: `u_D` is the
//! potential of Brownian motion killed at the first vertex it reaches (zero
//! at every vertex), and `u_H` is a combination of decaying exponentials on
//! each edge whose coefficients are fixed by the vertex conditions.

mod feller;
mod function;
mod kernel;
mod quadrature;
mod semigroup;
mod solve;

use thiserror::Error;

use crate::boundary::BoundaryError;
use crate::graph::GraphError;

pub use feller::{feller_checks, FellerOptions, FellerReport};
pub use function::{sample_grid, EdgeFunction, Profile};
pub use kernel::{dirichlet_kernel, dirichlet_resolvent_apply, hitting_transform, passage_weights};
pub use semigroup::{semigroup_from_resolvent, SemigroupApproximation};
pub use solve::{solve_resolvent, ResolventSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResolventError {
    #[error("lambda must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("the cemetery point is not on the graph")]
    Cemetery,
    #[error("point must lie in the interior of an edge")]
    VertexStart,
    #[error("function does not decay along external edge `{0}`")]
    NonDecaying(String),
    #[error("function is discontinuous at vertex `{vertex}` (gap {gap:e})")]
    Discontinuous { vertex: String, gap: f64 },
    #[error("expected {expected} edge profiles, got {got}")]
    ProfileCount { expected: usize, got: usize },
    #[error("lambda*t = {0} is outside the stable window (0, 3]")]
    StabilityWindow(f64),
    #[error("series did not reach tolerance after {0} terms")]
    NoConvergence(usize),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
