use rayon::prelude::*;

use crate::boundary::WentzellData;
use crate::graph::{GraphPoint, MetricGraph};

use super::function::{sample_grid, EdgeFunction};
use super::solve::{solve_resolvent, ResolventSolution};
use super::ResolventError;

#[derive(Clone, Debug)]
pub struct FellerOptions {
    /// λ values for contraction, positivity, tails and the resolvent identity.
    pub lambdas: Vec<f64>,
    /// Increasing λ values for the `‖λR_λf − f‖ → 0` check.
    pub approximation_lambdas: Vec<f64>,
    pub per_edge: usize,
    /// How far out external edges are sampled.
    pub extent: f64,
    /// Distance along external edges at which tail decay is read off.
    pub tail_point: f64,
}

impl Default for FellerOptions {
    fn default() -> Self {
        FellerOptions {
            lambdas: vec![0.5, 1.0, 2.0],
            approximation_lambdas: vec![10.0, 100.0, 1000.0, 10000.0],
            per_edge: 15,
            extent: 8.0,
            tail_point: 60.0,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct FellerReport {
    /// (λ, f index, sup |λR_λf|, sup |f|)
    pub contraction: Vec<(f64, usize, f64, f64)>,
    /// (λ, f index, min R_λf) for sampled-nonnegative f
    pub positivity: Vec<(f64, usize, f64)>,
    /// (λ, μ, f index, sup |R_λf − R_μf − (μ−λ)R_λR_μf|)
    pub identity: Vec<(f64, f64, usize, f64)>,
    /// (f index, [(λ, sup |λR_λf − f|)])
    pub approximation: Vec<(usize, Vec<(f64, f64)>)>,
    /// (λ, f index, max |R_λf| at the tail point of external edges)
    pub tails: Vec<(f64, usize, f64)>,
}

impl FellerReport {
    pub fn contraction_holds(&self) -> bool {
        self.contraction.iter().all(|&(_, _, l, r)| l <= r * (1.0 + 1e-12) + 1e-15)
    }

    pub fn positivity_holds(&self) -> bool {
        self.positivity.iter().all(|&(_, _, m)| m >= -1e-12)
    }

    pub fn identity_residual(&self) -> f64 {
        self.identity.iter().map(|r| r.3).fold(0.0, f64::max)
    }

    pub fn approximation_decreasing(&self) -> bool {
        self.approximation
            .iter()
            .all(|(_, seq)| seq.windows(2).all(|w| w[1].1 < w[0].1))
    }

    pub fn max_tail(&self) -> f64 {
        self.tails.iter().map(|r| r.2).fold(0.0, f64::max)
    }
}

fn sup_on(grid: &[GraphPoint], h: impl Fn(GraphPoint) -> f64) -> f64 {
    grid.iter().fold(0.0f64, |m, &p| m.max(h(p).abs()))
}

pub fn feller_checks(
    g: &MetricGraph,
    data: &WentzellData,
    suite: &[EdgeFunction],
    opts: &FellerOptions,
) -> Result<FellerReport, ResolventError> {
    let grid = sample_grid(g, opts.per_edge, opts.extent);
    let mut report = FellerReport::default();

    let jobs: Vec<(usize, usize)> = (0..suite.len())
        .flat_map(|fi| (0..opts.lambdas.len()).map(move |li| (fi, li)))
        .collect();
    let solutions: Vec<ResolventSolution> = jobs
        .par_iter()
        .map(|&(fi, li)| solve_resolvent(g, data, opts.lambdas[li], &suite[fi]))
        .collect::<Result<_, _>>()?;
    let sol = |fi: usize, li: usize| &solutions[fi * opts.lambdas.len() + li];

    for (fi, f) in suite.iter().enumerate() {
        let f_sup = sup_on(&grid, |p| f.at(g, p));
        let nonneg = grid.iter().all(|&p| f.at(g, p) >= 0.0);
        for (li, &lambda) in opts.lambdas.iter().enumerate() {
            let u = sol(fi, li);
            report
                .contraction
                .push((lambda, fi, sup_on(&grid, |p| lambda * u.at(p)), f_sup));
            if nonneg {
                let min = grid.iter().map(|&p| u.at(p)).fold(f64::INFINITY, f64::min);
                report.positivity.push((lambda, fi, min));
            }
            let tail = g
                .external_edges()
                .map(|e| u.value(e, opts.tail_point).abs())
                .fold(0.0, f64::max);
            report.tails.push((lambda, fi, tail));
        }
    }

    let pairs: Vec<(usize, usize, usize)> = (0..suite.len())
        .flat_map(|fi| {
            let n = opts.lambdas.len();
            (0..n).flat_map(move |a| (0..n).filter(move |&b| b != a).map(move |b| (fi, a, b)))
        })
        .collect();
    let identity: Vec<(f64, f64, usize, f64)> = pairs
        .par_iter()
        .map(|&(fi, a, b)| {
            let (lambda, mu) = (opts.lambdas[a], opts.lambdas[b]);
            let inner = sol(fi, b).to_edge_function();
            let composed = solve_resolvent(g, data, lambda, &inner)?;
            let (ua, ub) = (sol(fi, a), sol(fi, b));
            let res = sup_on(&grid, |p| ua.at(p) - ub.at(p) - (mu - lambda) * composed.at(p));
            Ok((lambda, mu, fi, res))
        })
        .collect::<Result<_, ResolventError>>()?;
    report.identity = identity;

    for (fi, f) in suite.iter().enumerate() {
        let seq: Vec<(f64, f64)> = opts
            .approximation_lambdas
            .par_iter()
            .map(|&lambda| {
                let u = solve_resolvent(g, data, lambda, f)?;
                Ok((lambda, sup_on(&grid, |p| lambda * u.at(p) - f.at(g, p))))
            })
            .collect::<Result<_, ResolventError>>()?;
        report.approximation.push((fi, seq));
    }
    Ok(report)
}
