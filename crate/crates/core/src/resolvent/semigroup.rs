use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::boundary::WentzellData;
use crate::graph::{GraphPoint, MetricGraph};

use super::function::{sample_grid, EdgeFunction};
use super::solve::{solve_resolvent, ResolventSolution};
use super::ResolventError;

const MAX_TERMS: usize = 400;
const BATCH: usize = 8;

/// Truncated series `Σ_{n≥1} (-1)^{n+1}/n! · nλ e^{nλt} R_{nλ} f`.
#[derive(Clone, Debug)]
pub struct SemigroupApproximation {
    pub t: f64,
    pub lambda: f64,
    terms: Vec<(f64, ResolventSolution)>,
}

fn coefficient(n: usize, lambda: f64, t: f64) -> f64 {
    let nf = n as f64;
    let mag = ((nf * lambda).ln() + nf * lambda * t - ln_gamma(nf + 1.0)).exp();
    if n % 2 == 1 {
        mag
    } else {
        -mag
    }
}

pub fn semigroup_from_resolvent(
    g: &MetricGraph,
    data: &WentzellData,
    t: f64,
    f: &EdgeFunction,
    lambda: f64,
    tol: f64,
) -> Result<SemigroupApproximation, ResolventError> {
    if !(lambda > 0.0) {
        return Err(ResolventError::BadLambda(lambda));
    }
    let lt = lambda * t;
    if !(t >= 0.0 && lt <= 3.0) {
        return Err(ResolventError::StabilityWindow(lt));
    }
    let grid = sample_grid(g, 9, 10.0);
    let min_terms = lt.exp() + 10.0;
    let mut terms = Vec::new();
    let mut n = 1;
    while n <= MAX_TERMS {
        let batch: Vec<usize> = (n..n + BATCH).collect();
        let solved: Vec<Result<(f64, ResolventSolution, f64), ResolventError>> = batch
            .par_iter()
            .map(|&k| {
                let sol = solve_resolvent(g, data, k as f64 * lambda, f)?;
                let c = coefficient(k, lambda, t);
                let sup = grid.iter().fold(0.0f64, |m, &p| m.max(sol.at(p).abs()));
                Ok((c, sol, (c * sup).abs()))
            })
            .collect();
        for (k, item) in batch.into_iter().zip(solved) {
            let (c, sol, size) = item?;
            terms.push((c, sol));
            if size < tol && k as f64 > min_terms {
                return Ok(SemigroupApproximation { t, lambda, terms });
            }
        }
        n += BATCH;
    }
    Err(ResolventError::NoConvergence(MAX_TERMS))
}

impl SemigroupApproximation {
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Series value at a point, summed in term order with Neumaier
    /// compensation.
    pub fn at(&self, p: GraphPoint) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (c, sol) in &self.terms {
            let x = c * sol.at(p);
            let s = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - s) + x;
            } else {
                comp += (x - s) + sum;
            }
            sum = s;
        }
        sum + comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    #[test]
    fn coefficients_alternate() {
        assert!((coefficient(1, 2.0, 0.0) - 2.0).abs() < 1e-15);
        assert!((coefficient(2, 2.0, 0.0) + 2.0).abs() < 1e-14);
        assert!((coefficient(3, 1.0, 0.5) - 3.0 * (1.5f64).exp() / 6.0).abs() < 1e-13);
    }

    #[test]
    fn zero_maps_to_zero_and_window_enforced() {
        let g = GraphBuilder::new().vertex("v").external("e", "v").build().unwrap();
        let d = WentzellData::standard(&g);
        let f = EdgeFunction::zero(&g);
        let s = semigroup_from_resolvent(&g, &d, 0.1, &f, 8.0, 1e-12).unwrap();
        assert_eq!(s.at(GraphPoint::Vertex(crate::graph::VertexId::from_index(0))), 0.0);
        assert!(matches!(
            semigroup_from_resolvent(&g, &d, 1.0, &f, 8.0, 1e-12),
            Err(ResolventError::StabilityWindow(_))
        ));
    }
}
