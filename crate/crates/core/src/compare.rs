//! Scenario-driven comparison of simulated and analytic quantities.

use std::path::Path;

use thiserror::Error;

use crate::boundary::{BoundaryError, VertexClass, WentzellData};
use crate::graph::GraphPoint;
use crate::io::{parse_function, parse_point, swap_ac, GraphDocument, IoError, Perturbation, Scenario, ScenarioRow};
use crate::report::{ComparisonReport, RunMeta};
use crate::resolvent::{hitting_transform, solve_resolvent, EdgeFunction, ResolventError};
use crate::sim::{
    mc_exit_edges, mc_hitting_transform, mc_lifetimes, mc_resolvent, mc_survival_resolvent, Estimate, SimConfig,
    SimError,
};

/// Allowance constants C in `3·SE + C·δ`, per quantity.
pub const HITTING_ALLOWANCE: f64 = 2.0;
pub const RESOLVENT_ALLOWANCE: f64 = 2.0;
pub const SURVIVAL_ALLOWANCE: f64 = 2.0;
pub const EXIT_ALLOWANCE: f64 = 2.0;
pub const HOLDING_ALLOWANCE: f64 = 0.0;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Command-line values that take precedence over the scenario's config.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub paths: Option<usize>,
    pub delta: Option<f64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
}

pub fn scenario_config(scenario: &Scenario, ov: &Overrides) -> SimConfig {
    let c = &scenario.config;
    let mut cfg = SimConfig::default();
    if let Some(p) = ov.paths.or(c.paths) {
        cfg = cfg.with_paths(p);
    }
    if let Some(d) = ov.delta.or(c.delta) {
        cfg = cfg.with_delta(d);
    }
    if let Some(h) = ov.horizon.or(c.horizon) {
        cfg = cfg.with_horizon(h);
    }
    if let Some(s) = ov.seed.or(c.seed) {
        cfg = cfg.with_seed(s);
    }
    if let Some(s) = c.scheme {
        cfg = cfg.with_scheme(s.into());
    }
    cfg
}

/// Run every row of `scenario` against the graph and data in `doc`.
/// `base` resolves relative paths in function specs.
pub fn run_scenario(
    doc: &GraphDocument,
    scenario: &Scenario,
    base: Option<&Path>,
    ov: &Overrides,
) -> Result<ComparisonReport, CompareError> {
    let g = &doc.graph;
    let data = doc.data()?;
    let sim_data = match scenario.simulate_with {
        None => data.clone(),
        Some(Perturbation::SwapAc) => WentzellData::normalize(g, swap_ac(&doc.raw))?,
    };
    let cfg = scenario_config(scenario, ov);
    if !scenario.rows.is_empty() {
        cfg.validate(g)?;
    }
    let mut report = ComparisonReport::new(RunMeta {
        seed: cfg.seed,
        delta: cfg.delta,
        horizon: cfg.horizon,
        paths: cfg.paths,
        graph_hash: doc.hash(),
    });
    let delta = cfg.delta;
    for (k, row) in scenario.rows.iter().enumerate() {
        let row_err = |message: String| CompareError::Row { row: k + 1, message };
        match row {
            ScenarioRow::Hitting {
                start,
                lambda,
                vertex,
                allowance,
            } => {
                let p = parse_point(g, start)?;
                let v = g
                    .vertex_by_name(vertex)
                    .ok_or_else(|| row_err(format!("unknown vertex `{vertex}`")))?;
                let exact = hitting_transform(g, p, *lambda)?[v.index()];
                let est = mc_hitting_transform(g, &sim_data, p, *lambda, &cfg)?[v.index()];
                report.push(
                    format!("hitting[{vertex}]({start}, lambda={lambda})"),
                    exact,
                    &est,
                    allowance.unwrap_or(HITTING_ALLOWANCE) * delta,
                );
            }
            ScenarioRow::Resolvent {
                start,
                lambda,
                f,
                allowance,
            } => {
                let p = parse_point(g, start)?;
                let func = parse_function(g, f, base)?;
                let exact = solve_resolvent(g, &data, *lambda, &func)?.at(p);
                let est = mc_resolvent(g, &sim_data, p, *lambda, &func, &cfg)?;
                report.push(
                    format!("resolvent[{f}]({start}, lambda={lambda})"),
                    exact,
                    &est,
                    allowance.unwrap_or(RESOLVENT_ALLOWANCE) * delta,
                );
            }
            ScenarioRow::Survival {
                start,
                lambda,
                allowance,
            } => {
                let p = parse_point(g, start)?;
                let exact = solve_resolvent(g, &data, *lambda, &EdgeFunction::constant(g, 1.0))?.at(p);
                let est = mc_survival_resolvent(g, &sim_data, p, *lambda, &cfg)?;
                report.push(
                    format!("survival({start}, lambda={lambda})"),
                    exact,
                    &est,
                    allowance.unwrap_or(SURVIVAL_ALLOWANCE) * delta,
                );
            }
            ScenarioRow::Exit {
                vertex,
                edge,
                level,
                allowance,
            } => {
                let v = g
                    .vertex_by_name(vertex)
                    .ok_or_else(|| row_err(format!("unknown vertex `{vertex}`")))?;
                let e = g
                    .edge_by_name(edge)
                    .ok_or_else(|| row_err(format!("unknown edge `{edge}`")))?;
                let pos = g
                    .incidences(v)
                    .iter()
                    .position(|inc| inc.edge == e)
                    .ok_or_else(|| row_err(format!("edge `{edge}` is not incident with `{vertex}`")))?;
                let exact = match data.classify(v) {
                    VertexClass::Instantaneous { weights, killing, .. } if killing <= 0.0 => weights[pos],
                    _ => {
                        return Err(row_err(format!(
                            "exit rows need an instantaneous vertex without killing at `{vertex}`"
                        )))
                    }
                };
                let est = mc_exit_edges(g, &sim_data, v, *level, &cfg)?[pos];
                report.push(
                    format!("exit[{edge}]({vertex}, level={level})"),
                    exact,
                    &est,
                    allowance.unwrap_or(EXIT_ALLOWANCE) * delta,
                );
            }
            ScenarioRow::Holding { vertex, allowance } => {
                let v = g
                    .vertex_by_name(vertex)
                    .ok_or_else(|| row_err(format!("unknown vertex `{vertex}`")))?;
                let exact = match data.classify(v) {
                    VertexClass::ExponentialHolding { rate } => 1.0 / rate,
                    _ => return Err(row_err(format!("vertex `{vertex}` is not a holding vertex"))),
                };
                let times = mc_lifetimes(g, &sim_data, GraphPoint::Vertex(v), &cfg)?;
                let capped: Vec<f64> = times.iter().map(|t| t.min(cfg.horizon)).collect();
                report.push(
                    format!("holding({vertex})"),
                    exact,
                    &Estimate::from_samples(&capped),
                    allowance.unwrap_or(HOLDING_ALLOWANCE) * delta,
                );
            }
        }
    }
    Ok(report)
}
