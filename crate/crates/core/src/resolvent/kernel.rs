//! Kernels of Brownian motion killed at the first vertex it reaches, and the
//! Laplace transforms of that first hitting time.

use crate::graph::{EdgeId, End, GraphPoint, MetricGraph};

use super::function::EdgeFunction;
use super::quadrature::integrate;
use super::ResolventError;

/// Tails of `e^{-κ|x-y|}` beyond this many multiples of `1/κ` are dropped.
const CUTOFF: f64 = 40.0;

pub(crate) fn kappa_of(lambda: f64) -> Result<f64, ResolventError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ResolventError::BadLambda(lambda));
    }
    Ok((2.0 * lambda).sqrt())
}

/// `1 - e^{-t}` for t ≥ 0, accurate near 0.
fn one_minus_exp(t: f64) -> f64 {
    -(-t).exp_m1()
}

/// Killed-BM resolvent density on [0, ρ]:
/// `2 sinh(κm) sinh(κ(ρ-M)) / (κ sinh κρ)` with m = min, M = max.
pub(crate) fn green_internal(kappa: f64, rho: f64, x: f64, y: f64) -> f64 {
    let (m, big) = if x < y { (x, y) } else { (y, x) };
    if m <= 0.0 || big >= rho {
        return 0.0;
    }
    (-kappa * (big - m)).exp() * one_minus_exp(2.0 * kappa * m) * one_minus_exp(2.0 * kappa * (rho - big))
        / (kappa * one_minus_exp(2.0 * kappa * rho))
}

/// Killed-BM resolvent density on [0, ∞).
pub(crate) fn green_external(kappa: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 || y <= 0.0 {
        return 0.0;
    }
    let m = x.min(y);
    (-kappa * (x - y).abs()).exp() * one_minus_exp(2.0 * kappa * m) / kappa
}

/// `sinh(κd) / sinh(κρ)` for 0 ≤ d ≤ ρ, without overflow.
fn sinh_ratio(kappa: f64, rho: f64, d: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    (-kappa * (rho - d)).exp() * one_minus_exp(2.0 * kappa * d) / one_minus_exp(2.0 * kappa * rho)
}

/// Image-series form of the internal kernel, summed until the next pair of
/// terms is below 1e-14 relative to the running total.
fn image_series(kappa: f64, rho: f64, x: f64, y: f64) -> f64 {
    let term = |k: f64| (-kappa * (x - y + 2.0 * k * rho).abs()).exp() - (-kappa * (x + y + 2.0 * k * rho).abs()).exp();
    let mut sum = term(0.0);
    let mut k = 1.0;
    loop {
        let t = term(k) + term(-k);
        sum += t;
        if t.abs() <= 1e-14 * sum.abs() || k > 1e7 {
            break;
        }
        k += 1.0;
    }
    sum / kappa
}

pub fn dirichlet_kernel(g: &MetricGraph, lambda: f64, xi: GraphPoint, eta: GraphPoint) -> Result<f64, ResolventError> {
    let kappa = kappa_of(lambda)?;
    match (xi, eta) {
        (GraphPoint::Cemetery, _) | (_, GraphPoint::Cemetery) => Err(ResolventError::Cemetery),
        (GraphPoint::Interior { edge: e1, x }, GraphPoint::Interior { edge: e2, x: y }) if e1 == e2 => {
            if g.edge(e1).is_external() {
                Ok(green_external(kappa, x, y))
            } else {
                Ok(image_series(kappa, g.length(e1), x, y))
            }
        }
        _ => Ok(0.0),
    }
}

/// Integration range and quadrature controls around `x` for a kernel that
/// decays like `e^{-κ|x-y|}`.
fn window(g: &MetricGraph, f: &EdgeFunction, e: EdgeId, kappa: f64, x: f64) -> (f64, f64, f64, Vec<f64>) {
    let p = f.profile(e);
    let len = g.length(e);
    let lo = (x - CUTOFF / kappa).max(0.0);
    let hi = (x + CUTOFF / kappa).min(len).min(p.support_end().max(0.0));
    let width = (1.0 / kappa).min(p.scale()).min(0.5);
    let mut breaks = p.breakpoints(lo, hi);
    breaks.push(x);
    (lo, hi, width, breaks)
}

/// `∫ G(x, y) f(y) dy` over the edge through ξ.
pub(crate) fn dirichlet_apply_edge(g: &MetricGraph, kappa: f64, f: &EdgeFunction, e: EdgeId, x: f64) -> f64 {
    let (lo, hi, width, breaks) = window(g, f, e, kappa, x);
    let p = f.profile(e);
    if g.edge(e).is_external() {
        integrate(|y| green_external(kappa, x, y) * p.value(y), lo, hi, &breaks, width)
    } else {
        let rho = g.length(e);
        integrate(|y| green_internal(kappa, rho, x, y) * p.value(y), lo, hi, &breaks, width)
    }
}

pub fn dirichlet_resolvent_apply(
    g: &MetricGraph,
    lambda: f64,
    f: &EdgeFunction,
    xi: GraphPoint,
) -> Result<f64, ResolventError> {
    let kappa = kappa_of(lambda)?;
    match xi {
        GraphPoint::Cemetery => Err(ResolventError::Cemetery),
        GraphPoint::Vertex(_) => Ok(0.0),
        GraphPoint::Interior { edge, x } => {
            if g.edge(edge).is_external() {
                f.check_tails(g)?;
            }
            Ok(dirichlet_apply_edge(g, kappa, f, edge, x))
        }
    }
}

/// Weight of the exit through the given end when started at distance `d`
/// from it along edge `e`.
pub(crate) fn end_weight(g: &MetricGraph, kappa: f64, e: EdgeId, d: f64) -> f64 {
    if g.edge(e).is_external() {
        (-kappa * d).exp()
    } else {
        let rho = g.length(e);
        sinh_ratio(kappa, rho, rho - d)
    }
}

/// Inward derivative at one end of the killed-BM potential `u_D = R^D f`,
/// i.e. `2 ∫ w(y) f(y) dy` with `w` the exit weight through that end.
pub(crate) fn endpoint_flux(g: &MetricGraph, kappa: f64, f: &EdgeFunction, e: EdgeId, end: End) -> f64 {
    let p = f.profile(e);
    let len = g.length(e);
    let width = (1.0 / kappa).min(p.scale()).min(0.5);
    match end {
        End::Initial => {
            let hi = (CUTOFF / kappa).min(len).min(p.support_end().max(0.0));
            let breaks = p.breakpoints(0.0, hi);
            2.0 * integrate(|y| end_weight(g, kappa, e, y) * p.value(y), 0.0, hi, &breaks, width)
        }
        End::Terminal => {
            let lo = (len - CUTOFF / kappa).max(0.0);
            let breaks = p.breakpoints(lo, len);
            2.0 * integrate(|y| end_weight(g, kappa, e, len - y) * p.value(y), lo, len, &breaks, width)
        }
    }
}

/// `E_ξ[e^{-λH}; X_H = v]` for the first vertex hitting time H, as a vector
/// indexed by vertex. λ = 0 gives plain exit probabilities.
pub fn passage_weights(g: &MetricGraph, lambda: f64, xi: GraphPoint) -> Result<Vec<f64>, ResolventError> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(ResolventError::BadLambda(lambda));
    }
    let (edge, x) = match xi {
        GraphPoint::Interior { edge, x } => (edge, x),
        GraphPoint::Vertex(_) => return Err(ResolventError::VertexStart),
        GraphPoint::Cemetery => return Err(ResolventError::Cemetery),
    };
    let mut w = vec![0.0; g.vertex_count()];
    let e = g.edge(edge);
    let kappa = (2.0 * lambda).sqrt();
    match e.terminal() {
        None => w[e.initial().index()] += (-kappa * x).exp(),
        Some(t) => {
            let rho = e.length();
            let (w0, w1) = if lambda == 0.0 {
                ((rho - x) / rho, x / rho)
            } else {
                (sinh_ratio(kappa, rho, rho - x), sinh_ratio(kappa, rho, x))
            };
            w[e.initial().index()] += w0;
            w[t.index()] += w1;
        }
    }
    Ok(w)
}

/// Same quantity as [`passage_weights`], named for comparison with the
/// simulated first-hit transform.
pub fn hitting_transform(g: &MetricGraph, xi: GraphPoint, lambda: f64) -> Result<Vec<f64>, ResolventError> {
    passage_weights(g, lambda, xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, VertexId};

    fn interval(rho: f64) -> MetricGraph {
        GraphBuilder::new()
            .vertex("a")
            .vertex("b")
            .internal("i", "a", "b", rho)
            .build()
            .unwrap()
    }

    fn half_line() -> MetricGraph {
        GraphBuilder::new().vertex("a").external("e", "a").build().unwrap()
    }

    #[test]
    fn external_diagonal() {
        let g = half_line();
        let e = EdgeId::from_index(0);
        let (lambda, x) = (0.8, 0.6);
        let k = (2.0f64 * lambda).sqrt();
        let p = GraphPoint::Interior { edge: e, x };
        let got = dirichlet_kernel(&g, lambda, p, p).unwrap();
        assert!((got - (1.0 - (-2.0 * k * x).exp()) / k).abs() < 1e-15);
    }

    #[test]
    fn spectral_series_matches_images() {
        let g = interval(1.0);
        let e = EdgeId::from_index(0);
        let p = GraphPoint::Interior { edge: e, x: 0.5 };
        let img = dirichlet_kernel(&g, 0.5, p, p).unwrap();
        let pi = std::f64::consts::PI;
        // Σ 2 sin²(nπ/2)/(λ + n²π²/2) with the n⁻² part summed exactly:
        // Σ_odd 4/(n²π²) = 1/2.
        let lambda = 0.5;
        let mut spec = 0.5;
        for n in (1..200_000).step_by(2) {
            let a = n as f64 * pi;
            spec -= 8.0 * lambda / (a * a * (2.0 * lambda + a * a));
        }
        assert!((img - spec).abs() < 1e-8, "{img} {spec}");
        let closed = green_internal(1.0, 1.0, 0.5, 0.5);
        assert!((img - closed).abs() < 1e-14);
    }

    #[test]
    fn kernel_vanishes_at_vertices_and_across_edges() {
        let g = GraphBuilder::new()
            .vertex("a")
            .external("e", "a")
            .external("f", "a")
            .build()
            .unwrap();
        let p = GraphPoint::Interior {
            edge: EdgeId::from_index(0),
            x: 0.3,
        };
        let q = GraphPoint::Interior {
            edge: EdgeId::from_index(1),
            x: 0.3,
        };
        let v = GraphPoint::Vertex(VertexId::from_index(0));
        assert_eq!(dirichlet_kernel(&g, 1.0, p, q).unwrap(), 0.0);
        assert_eq!(dirichlet_kernel(&g, 1.0, p, v).unwrap(), 0.0);
        assert!(dirichlet_kernel(&g, 0.0, p, p).is_err());
    }

    #[test]
    fn constant_on_half_line() {
        let g = half_line();
        let f = EdgeFunction::constant(&g, 1.0);
        let lambda = 0.7;
        let k = (2.0f64 * lambda).sqrt();
        for x in [0.1, 0.5, 2.0, 7.0] {
            let p = GraphPoint::Interior {
                edge: EdgeId::from_index(0),
                x,
            };
            let got = dirichlet_resolvent_apply(&g, lambda, &f, p).unwrap();
            let want = (1.0 - (-k * x).exp()) / lambda;
            assert!((got - want).abs() < 1e-12, "{x}: {got} vs {want}");
        }
    }

    #[test]
    fn interval_weights() {
        let g = interval(1.0);
        let p = GraphPoint::Interior {
            edge: EdgeId::from_index(0),
            x: 0.5,
        };
        let w = passage_weights(&g, 0.5, p).unwrap();
        let want = (0.5f64).sinh() / 1.0f64.sinh();
        assert!((w[0] - want).abs() < 1e-15 && (w[1] - want).abs() < 1e-15);
        let p = GraphPoint::Interior {
            edge: EdgeId::from_index(0),
            x: 0.3,
        };
        let w = passage_weights(&g, 1e-12, p).unwrap();
        assert!((w[0] - 0.7).abs() < 1e-6 && (w[1] - 0.3).abs() < 1e-6);
        let w0 = passage_weights(&g, 0.0, p).unwrap();
        assert!((w0[0] - 0.7).abs() < 1e-15 && (w0[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn flux_matches_closed_form_for_constant() {
        // inward derivative of (1/λ)(1 - e^{-κx}) at 0 is κ/λ = 2/κ
        let g = half_line();
        let f = EdgeFunction::constant(&g, 1.0);
        let k = 1.3;
        let got = endpoint_flux(&g, k, &f, EdgeId::from_index(0), End::Initial);
        assert!((got - 2.0 / k).abs() < 1e-13);
    }
}
