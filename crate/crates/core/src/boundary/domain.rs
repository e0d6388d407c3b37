use crate::graph::MetricGraph;

use super::{BoundaryError, WentzellData};

/// One-sided limits of f, f′ (inward) and f″ at each incidence of a vertex,
/// in the order of L(v).
#[derive(Clone, Debug, PartialEq)]
pub struct VertexTraces {
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub second: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexResidual {
    /// `a f(v) − Σ b_l f′(v_l) + (c/2) f″(v)`.
    pub wentzell: f64,
    /// Largest pairwise gap between the one-sided values of f.
    pub value_gap: f64,
    /// Largest pairwise gap between the one-sided values of f″.
    pub second_gap: f64,
}

fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

pub fn check_domain_membership(
    g: &MetricGraph,
    data: &WentzellData,
    traces: &[VertexTraces],
) -> Result<Vec<VertexResidual>, BoundaryError> {
    if traces.len() != g.vertex_count() {
        let missing = g.vertices().nth(traces.len()).unwrap_or_else(|| g.vertices().last().unwrap());
        return Err(BoundaryError::MissingTrace(g.vertex_name(missing).to_string()));
    }
    g.vertices()
        .zip(traces)
        .map(|(v, t)| {
            let deg = g.degree(v);
            if t.values.len() != deg || t.derivatives.len() != deg || t.second.len() != deg {
                return Err(BoundaryError::MissingTrace(g.vertex_name(v).to_string()));
            }
            let d = data.vertex(v);
            let flux: f64 = d.b.iter().zip(&t.derivatives).map(|(b, df)| b * df).sum();
            Ok(VertexResidual {
                wentzell: d.a * t.values[0] - flux + d.c / 2.0 * t.second[0],
                value_gap: spread(&t.values),
                second_gap: spread(&t.second),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    #[test]
    fn zero_function_is_in_domain() {
        let g = GraphBuilder::new()
            .vertex("v")
            .external("e1", "v")
            .external("e2", "v")
            .external("e3", "v")
            .build()
            .unwrap();
        let d = WentzellData::standard(&g);
        let t = VertexTraces {
            values: vec![0.0; 3],
            derivatives: vec![0.0; 3],
            second: vec![0.0; 3],
        };
        let r = check_domain_membership(&g, &d, &[t]).unwrap();
        assert_eq!(r[0].wentzell, 0.0);
    }

    #[test]
    fn decaying_exponential_violates_standard_conditions() {
        let g = GraphBuilder::new()
            .vertex("v")
            .external("e1", "v")
            .external("e2", "v")
            .external("e3", "v")
            .build()
            .unwrap();
        let d = WentzellData::standard(&g);
        let kappa = 1.7;
        let t = VertexTraces {
            values: vec![1.0; 3],
            derivatives: vec![-kappa; 3],
            second: vec![kappa * kappa; 3],
        };
        let r = check_domain_membership(&g, &d, &[t]).unwrap();
        assert!((r[0].wentzell - kappa).abs() < 1e-15);
        assert!(check_domain_membership(&g, &d, &[]).is_err());
    }
}
