//! Monte Carlo versus analytic comparison reports.

use std::fmt::Write as _;

use serde::Serialize;

use crate::sim::Estimate;

/// Number of standard errors in the pass rule.
pub const SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub quantity: String,
    pub analytic: f64,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
    /// `C·δ`, added to `3·SE` in the pass rule.
    pub allowance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMeta {
    pub seed: u64,
    pub delta: f64,
    pub horizon: f64,
    pub paths: usize,
    pub graph_hash: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub meta: RunMeta,
    pub rows: Vec<ReportRow>,
}

impl ComparisonReport {
    pub fn new(meta: RunMeta) -> Self {
        ComparisonReport { meta, rows: Vec::new() }
    }

    /// Add a row; it passes when `|analytic − MC| ≤ 3·SE + allowance`.
    pub fn push(&mut self, quantity: impl Into<String>, analytic: f64, est: &Estimate, allowance: f64) {
        self.rows.push(ReportRow {
            quantity: quantity.into(),
            analytic,
            estimate: est.mean,
            se: est.se,
            z: est.z_score(analytic),
            allowance,
            pass: est.agrees(analytic, SIGMAS, allowance),
        });
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    fn meta_lines(&self) -> String {
        let m = &self.meta;
        format!(
            "# seed={} delta={} horizon={} paths={} graph={}\n",
            m.seed, m.delta, m.horizon, m.paths, m.graph_hash
        )
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(["quantity", "analytic", "estimate", "se", "z", "allowance", "pass"])
                .expect("in-memory write");
        }
        for r in &self.rows {
            w.serialize(r).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 fields");
        self.meta_lines() + &body
    }

    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.quantity.chars().count()).max().unwrap_or(8).max(8);
        let mut s = self.meta_lines();
        let _ = writeln!(
            s,
            "{:<width$}  {:>12}  {:>12}  {:>10}  {:>7}  {:>9}  result",
            "quantity", "analytic", "estimate", "se", "z", "allowance"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<width$}  {:>12.6}  {:>12.6}  {:>10.2e}  {:>7.2}  {:>9.2e}  {}",
                r.quantity,
                r.analytic,
                r.estimate,
                r.se,
                r.z,
                r.allowance,
                if r.pass { "pass" } else { "FAIL" }
            );
        }
        let failed = self.rows.iter().filter(|r| !r.pass).count();
        let _ = writeln!(s, "{} rows, {} failed", self.rows.len(), failed);
        s
    }
}
