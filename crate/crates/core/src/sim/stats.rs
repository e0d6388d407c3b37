//! Test statistics used to compare simulated and exact laws.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Asymptotic Kolmogorov–Smirnov constant at the 1% level.
const KS_C_01: f64 = 1.6276;

/// `sup |F_n − F|` for a sample against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// One-sample critical value at 1% (Stephens' finite-n correction).
pub fn ks_critical(n: usize) -> f64 {
    let s = (n as f64).sqrt();
    KS_C_01 / (s + 0.12 + 0.11 / s)
}

/// `sup |F_n − G_m|` between two samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

pub fn ks_two_sample_critical(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    KS_C_01 * ((n + m) / (n * m)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Pearson homogeneity test for a table of counts, one row per group.
/// Columns with no observations are dropped.
pub fn chi_square_homogeneity(table: &[Vec<f64>]) -> ChiSquareTest {
    let cols = table.first().map_or(0, |r| r.len());
    let col_tot: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let keep: Vec<usize> = (0..cols).filter(|&j| col_tot[j] > 0.0).collect();
    let row_tot: Vec<f64> = table.iter().map(|r| keep.iter().map(|&j| r[j]).sum()).collect();
    let total: f64 = row_tot.iter().sum();
    let mut stat = 0.0;
    for (r, row) in table.iter().enumerate() {
        for &j in &keep {
            let expected = row_tot[r] * col_tot[j] / total;
            if expected > 0.0 {
                stat += (row[j] - expected).powi(2) / expected;
            }
        }
    }
    let rows = row_tot.iter().filter(|&&t| t > 0.0).count();
    let dof = (rows.saturating_sub(1)) * (keep.len().saturating_sub(1));
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(stat)
    };
    ChiSquareTest {
        statistic: stat,
        dof,
        p_value,
    }
}
