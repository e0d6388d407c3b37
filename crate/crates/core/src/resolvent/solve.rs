use std::sync::Arc;

use nalgebra::DVector;

use crate::boundary::{
    assemble, check_domain_membership, find_invertible_kappa, KappaReport, VertexResidual, VertexTraces, WentzellData,
};
use crate::graph::{EdgeId, GraphPoint, MetricGraph};

use super::function::{EdgeFunction, Profile};
use super::kernel::{dirichlet_apply_edge, endpoint_flux};
use super::ResolventError;

/// `u = R_λ f` on the whole graph.
#[derive(Clone, Debug)]
pub struct ResolventSolution {
    graph: Arc<MetricGraph>,
    f: Arc<EdgeFunction>,
    lambda: f64,
    kappa: f64,
    /// Coefficients of `e^{-κx}` (external) and of `e^{-κ(ρ-x)}`, `e^{-κx}`
    /// (internal), in trace-slot order.
    scaled: Vec<f64>,
    report: KappaReport,
    vertex_values: Vec<f64>,
    traces: Vec<VertexTraces>,
    residuals: Vec<VertexResidual>,
}

pub fn solve_resolvent(
    g: &MetricGraph,
    data: &WentzellData,
    lambda: f64,
    f: &EdgeFunction,
) -> Result<ResolventSolution, ResolventError> {
    super::kernel::kappa_of(lambda)?;
    f.check_tails(g)?;
    let scale = g.vertices().fold(1.0f64, |m, v| m.max(f.vertex_value(g, v).abs()));
    let (gap, worst) = f.continuity_gap(g);
    if gap > 1e-9 * scale {
        return Err(ResolventError::Discontinuous {
            vertex: g.vertex_name(worst.unwrap()).to_string(),
            gap,
        });
    }

    let m = assemble(g, data)?;
    let report = find_invertible_kappa(&m, lambda)?;
    let (lambda, kappa) = (report.lambda, report.kappa);
    let n = m.n;
    let ne = g.external_count();
    let ni = g.internal_count();

    // Traces of u_D: zero values, known inward derivatives, and
    // u_D'' = 2(λ·0 - f) at each end.
    let mut d_u = DVector::zeros(n);
    let mut f_end = DVector::zeros(n);
    for v in g.vertices() {
        for &inc in g.incidences(v) {
            let s = crate::boundary::matrices_slot(g, inc);
            d_u[s] = endpoint_flux(g, kappa, f, inc.edge, inc.end);
            f_end[s] = f.end_value(g, inc.edge, inc.end);
        }
    }
    let dd_u = &f_end * -2.0;
    let rhs = -(&m.b * &d_u + &m.c * &dd_u);

    let mut z = m.scaled_z(kappa);
    let row_scale = crate::boundary::equilibrate(&mut z);
    let rhs = DVector::from_iterator(n, rhs.iter().zip(&row_scale).map(|(r, s)| r * s));
    let s = z
        .lu()
        .solve(&rhs)
        .ok_or(crate::boundary::BoundaryError::Singular { lambda, retries: 0 })?;

    let (val, der) = m.scaled_traces(kappa);
    let u_v = &val * &s;
    let du_v = &d_u + (&der * &s) * kappa;
    let ddu_v = (&u_v * lambda - &f_end) * 2.0;

    let mut traces = Vec::with_capacity(g.vertex_count());
    let mut vertex_values = Vec::with_capacity(g.vertex_count());
    for v in g.vertices() {
        let slots: Vec<usize> = g
            .incidences(v)
            .iter()
            .map(|&i| crate::boundary::matrices_slot(g, i))
            .collect();
        vertex_values.push(u_v[slots[0]]);
        traces.push(VertexTraces {
            values: slots.iter().map(|&k| u_v[k]).collect(),
            derivatives: slots.iter().map(|&k| du_v[k]).collect(),
            second: slots.iter().map(|&k| ddu_v[k]).collect(),
        });
    }
    let residuals = check_domain_membership(g, data, &traces)?;
    debug_assert_eq!(s.len(), ne + 2 * ni);

    Ok(ResolventSolution {
        graph: Arc::new(g.clone()),
        f: Arc::new(f.clone()),
        lambda,
        kappa,
        scaled: s.iter().copied().collect(),
        report,
        vertex_values,
        traces,
        residuals,
    })
}

impl ResolventSolution {
    /// The λ actually used (after any perturbation).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn report(&self) -> &KappaReport {
        &self.report
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn source(&self) -> &EdgeFunction {
        &self.f
    }

    pub fn vertex_values(&self) -> &[f64] {
        &self.vertex_values
    }

    pub fn traces(&self) -> &[VertexTraces] {
        &self.traces
    }

    pub fn residuals(&self) -> &[VertexResidual] {
        &self.residuals
    }

    /// Largest boundary residual (Wentzell equation, value gap, f'' gap).
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.wentzell.abs().max(r.value_gap).max(r.second_gap))
            .fold(0.0, f64::max)
    }

    /// Coefficients of the ansatz `r_e e^{-κx}`, `r⁺ e^{κx} + r⁻ e^{κ(ρ-x)}`.
    /// Entries underflow to zero on long edges.
    pub fn coefficients(&self) -> Vec<f64> {
        let g = &self.graph;
        let ne = g.external_count();
        let ni = g.internal_count();
        let mut r = self.scaled.clone();
        for (m, e) in g.internal_edges().enumerate() {
            let q = (-self.kappa * g.length(e)).exp();
            r[ne + m] *= q;
            r[ne + ni + m] *= q;
        }
        r
    }

    fn homogeneous(&self, e: EdgeId, x: f64) -> f64 {
        let g = &self.graph;
        let k = e.index();
        if g.edge(e).is_external() {
            self.scaled[k] * (-self.kappa * x).exp()
        } else {
            let rho = g.length(e);
            let ni = g.internal_count();
            self.scaled[k] * (-self.kappa * (rho - x)).exp() + self.scaled[k + ni] * (-self.kappa * x).exp()
        }
    }

    /// `u(e, x)` for 0 ≤ x ≤ length.
    pub fn value(&self, e: EdgeId, x: f64) -> f64 {
        let len = self.graph.length(e);
        let particular = if x > 0.0 && x < len {
            dirichlet_apply_edge(&self.graph, self.kappa, &self.f, e, x)
        } else {
            0.0
        };
        particular + self.homogeneous(e, x)
    }

    pub fn at(&self, p: GraphPoint) -> f64 {
        match p {
            GraphPoint::Interior { edge, x } => self.value(edge, x),
            GraphPoint::Vertex(v) => self.vertex_values[v.index()],
            GraphPoint::Cemetery => 0.0,
        }
    }

    /// `λu − ½u'' − f` at an interior point, with u'' from a central
    /// difference of step h.
    pub fn generator_residual(&self, e: EdgeId, x: f64, h: f64) -> f64 {
        let u0 = self.value(e, x);
        let upp = (self.value(e, x + h) - 2.0 * u0 + self.value(e, x - h)) / (h * h);
        self.lambda * u0 - 0.5 * upp - self.f.value(e, x)
    }

    /// The solution as an edge function (evaluated lazily).
    pub fn to_edge_function(&self) -> EdgeFunction {
        let me = Arc::new(self.clone());
        let g = &self.graph;
        let scale = 1.0 / self.kappa;
        let profiles = g
            .edge_ids()
            .map(|e| {
                let me = Arc::clone(&me);
                let len = g.length(e);
                let scale = self.f.profile(e).scale().min(scale);
                Profile::Custom {
                    f: Arc::new(move |x: f64| if x <= len { me.value(e, x) } else { 0.0 }),
                    scale,
                }
            })
            .collect();
        EdgeFunction::new(g, profiles).expect("one profile per edge")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::RawVertexData;
    use crate::graph::GraphBuilder;

    fn star(n: usize) -> MetricGraph {
        let mut b = GraphBuilder::new().vertex("v");
        for k in 0..n {
            b = b.external(&format!("e{k}"), "v");
        }
        b.build().unwrap()
    }

    #[test]
    fn zero_source_gives_zero() {
        let g = star(3);
        let d = WentzellData::standard(&g);
        let u = solve_resolvent(&g, &d, 1.0, &EdgeFunction::zero(&g)).unwrap();
        assert!(u.coefficients().iter().all(|&c| c == 0.0));
        assert_eq!(u.value(EdgeId::from_index(1), 0.4), 0.0);
    }

    #[test]
    fn trap_vertex_value() {
        let g = star(2);
        let d = WentzellData::normalize(
            &g,
            vec![RawVertexData {
                a: 0.0,
                b: vec![0.0, 0.0],
                c: 1.0,
            }],
        )
        .unwrap();
        let f = EdgeFunction::from_vertex_values(&g, &[2.0], 0.5);
        let lambda = 1.5;
        let u = solve_resolvent(&g, &d, lambda, &f).unwrap();
        assert!((u.vertex_values()[0] - 2.0 / lambda).abs() < 1e-12);
    }

    #[test]
    fn symmetric_star_reduces_to_reflected_half_line() {
        // Radially symmetric f = e^{-x} on a standard 3-star: u solves the
        // half-line problem with u'(0) = 0, so
        // u = e^{-x}/(λ - 1/2) + C e^{-κx} with -1/(λ - 1/2) - κC = 0.
        let g = star(3);
        let d = WentzellData::standard(&g);
        let f = EdgeFunction::from_vertex_values(&g, &[1.0], 1.0);
        let lambda = 2.0;
        let kappa = 2.0;
        let u = solve_resolvent(&g, &d, lambda, &f).unwrap();
        let a = 1.0 / (lambda - 0.5);
        let c = -a / kappa;
        for e in 0..3 {
            for x in [0.0f64, 0.3, 1.0, 2.5] {
                let want = a * (-x).exp() + c * (-kappa * x).exp();
                let got = u.value(EdgeId::from_index(e), x);
                assert!((got - want).abs() < 1e-12, "{e} {x}: {got} vs {want}");
            }
        }
        assert!(u.max_residual() < 1e-12);
    }
}
