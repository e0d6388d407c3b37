use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::graph::{End, Incidence, MetricGraph, VertexId};

use super::{BoundaryError, WentzellData};

/// Per-vertex blocks in the order of L(v).
#[derive(Clone, Debug, PartialEq)]
pub struct VertexBlocks {
    pub vertex: VertexId,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

/// Boundary conditions written as `A f(V) + B f'(V) + C f''(V) = 0`, where
/// the trace vectors list external edges first, then initial ends of internal
/// edges, then terminal ends.
#[derive(Clone, Debug)]
pub struct BoundaryMatrices {
    pub n: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// `perm[r]` is the trace slot of the r-th incidence in vertex order.
    pub perm: Vec<usize>,
    pub blocks: Vec<VertexBlocks>,
    /// Lengths of internal edges in edge order.
    pub lengths: Vec<f64>,
    pub n_external: usize,
}

/// Trace slot of an incidence.
pub(crate) fn slot(g: &MetricGraph, inc: Incidence) -> usize {
    let ne = g.external_count();
    let ni = g.internal_count();
    let k = inc.edge.index();
    if k < ne {
        k
    } else {
        match inc.end {
            End::Initial => k,
            End::Terminal => k + ni,
        }
    }
}

pub fn assemble(g: &MetricGraph, data: &WentzellData) -> Result<BoundaryMatrices, BoundaryError> {
    if let Some(t) = g.tadpoles().next() {
        return Err(BoundaryError::Tadpole(g.edge_name(t).to_string()));
    }
    let n = g.external_count() + 2 * g.internal_count();
    let mut perm = Vec::with_capacity(n);
    let mut blocks = Vec::with_capacity(g.vertex_count());
    for v in g.vertices() {
        let inc = g.incidences(v);
        let d = data.vertex(v);
        let m = inc.len();
        let mut a = DMatrix::zeros(m, m);
        let mut b = DMatrix::zeros(m, m);
        let mut c = DMatrix::zeros(m, m);
        a[(0, 0)] = d.a;
        for (j, bj) in d.b.iter().enumerate() {
            b[(0, j)] = -bj;
        }
        c[(0, 0)] = d.c / 2.0;
        for k in 1..m {
            c[(k, k - 1)] = 1.0;
            c[(k, k)] = -1.0;
        }
        perm.extend(inc.iter().map(|&i| slot(g, i)));
        blocks.push(VertexBlocks { vertex: v, a, b, c });
    }

    // A = P^{-1} Ã P: entry (perm[r], perm[s]) = Ã(r, s).
    let mut big = [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
    let mut offset = 0;
    for blk in &blocks {
        let m = blk.a.nrows();
        for r in 0..m {
            for s in 0..m {
                let (i, j) = (perm[offset + r], perm[offset + s]);
                big[0][(i, j)] = blk.a[(r, s)];
                big[1][(i, j)] = blk.b[(r, s)];
                big[2][(i, j)] = blk.c[(r, s)];
            }
        }
        offset += m;
    }
    let [a, b, c] = big;
    Ok(BoundaryMatrices {
        n,
        a,
        b,
        c,
        perm,
        blocks,
        lengths: g.internal_edges().map(|e| g.length(e)).collect(),
        n_external: g.external_count(),
    })
}

impl BoundaryMatrices {
    pub fn n_internal(&self) -> usize {
        self.lengths.len()
    }

    /// Dense permutation matrix with `P[r, perm[r]] = 1`.
    pub fn permutation_matrix(&self) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.n, self.n);
        for (r, &s) in self.perm.iter().enumerate() {
            p[(r, s)] = 1.0;
        }
        p
    }

    /// Block-diagonal matrices Ã, B̃, C̃ in incidence order.
    pub fn block_diagonal(&self) -> [DMatrix<f64>; 3] {
        let mut out = [
            DMatrix::zeros(self.n, self.n),
            DMatrix::zeros(self.n, self.n),
            DMatrix::zeros(self.n, self.n),
        ];
        let mut off = 0;
        for blk in &self.blocks {
            let m = blk.a.nrows();
            out[0].view_mut((off, off), (m, m)).copy_from(&blk.a);
            out[1].view_mut((off, off), (m, m)).copy_from(&blk.b);
            out[2].view_mut((off, off), (m, m)).copy_from(&blk.c);
            off += m;
        }
        out
    }

    /// Value and inward-derivative trace maps for the exponential ansatz in
    /// the scaled basis `s_e e^{-κx}` on external edges and
    /// `s⁺ e^{-κ(ρ-x)} + s⁻ e^{-κx}` on internal edges. The derivative map
    /// returns `f'(V)/κ`.
    pub(crate) fn scaled_traces(&self, kappa: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let ne = self.n_external;
        let ni = self.n_internal();
        let mut val = DMatrix::zeros(self.n, self.n);
        let mut der = DMatrix::zeros(self.n, self.n);
        for k in 0..ne {
            val[(k, k)] = 1.0;
            der[(k, k)] = -1.0;
        }
        for (m, &rho) in self.lengths.iter().enumerate() {
            let q = (-kappa * rho).exp();
            let (p, mi) = (ne + m, ne + ni + m);
            // initial end: s⁺ e^{-κρ} + s⁻
            val[(p, p)] = q;
            val[(p, mi)] = 1.0;
            der[(p, p)] = q;
            der[(p, mi)] = -1.0;
            // terminal end: s⁺ + s⁻ e^{-κρ}
            val[(mi, p)] = 1.0;
            val[(mi, mi)] = q;
            der[(mi, p)] = -1.0;
            der[(mi, mi)] = q;
        }
        (val, der)
    }

    /// Boundary operator applied to the scaled ansatz.
    pub(crate) fn scaled_z(&self, kappa: f64) -> DMatrix<f64> {
        let (val, der) = self.scaled_traces(kappa);
        (&self.a + &self.c * (kappa * kappa)) * val + &self.b * der * kappa
    }
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// `Z(κ) = (A + κ²C) X₊(κ) + κ B X₋(κ)` for the ansatz `r_e e^{-κx}` on
/// external edges and `r⁺ e^{κx} + r⁻ e^{κ(ρ-x)}` on internal edges. `X₋`
/// maps coefficients to inward derivatives divided by κ, so its external
/// block is `-1`.
pub fn z_matrix(m: &BoundaryMatrices, kappa: Complex64) -> DMatrix<Complex64> {
    let n = m.n;
    let ne = m.n_external;
    let ni = m.n_internal();
    let mut xp = DMatrix::<Complex64>::identity(n, n);
    let mut xm = DMatrix::<Complex64>::identity(n, n);
    for k in 0..ne {
        xm[(k, k)] = Complex64::new(-1.0, 0.0);
    }
    for (j, &rho) in m.lengths.iter().enumerate() {
        let e = (kappa * rho).exp();
        let (p, q) = (ne + j, ne + ni + j);
        xp[(p, q)] = e;
        xp[(q, p)] = e;
        xm[(p, q)] = -e;
        xm[(q, p)] = -e;
    }
    let a = to_complex(&m.a);
    let b = to_complex(&m.b);
    let c = to_complex(&m.c);
    (a + c * (kappa * kappa)) * xp + b * xm * kappa
}

/// `Ẑ±(κ) = A ± κB + κ²C`.
pub fn hat_z(m: &BoundaryMatrices, kappa: Complex64, sign: f64) -> DMatrix<Complex64> {
    to_complex(&m.a) + to_complex(&m.b) * (kappa * sign) + to_complex(&m.c) * (kappa * kappa)
}

/// `Ã(v) + sκB̃(v) + κ²C̃(v)` for one vertex.
pub fn vertex_block_sum(blk: &VertexBlocks, kappa: Complex64, sign: f64) -> DMatrix<Complex64> {
    to_complex(&blk.a) + to_complex(&blk.b) * (kappa * sign) + to_complex(&blk.c) * (kappa * kappa)
}

/// `(a + s κ Σb + κ² c/2)(-κ²)^{n-1}`.
pub fn block_determinant_formula(a: f64, b_sum: f64, c: f64, degree: usize, kappa: Complex64, sign: f64) -> Complex64 {
    (kappa * (sign * b_sum) + a + kappa * kappa * (c / 2.0)) * (-kappa * kappa).powi(degree as i32 - 1)
}

/// Z(κ) assembled row by row from the vertex conditions applied to the
/// exponential ansatz, without the block/permutation machinery.
pub fn z_matrix_direct(g: &MetricGraph, data: &WentzellData, kappa: Complex64) -> DMatrix<Complex64> {
    let ne = g.external_count();
    let ni = g.internal_count();
    let n = ne + 2 * ni;
    let one = Complex64::new(1.0, 0.0);
    // (column, coefficient) lists for the value and inward derivative at an
    // incidence.
    let value = |inc: Incidence| -> Vec<(usize, Complex64)> {
        let k = inc.edge.index();
        if k < ne {
            return vec![(k, one)];
        }
        let e = (kappa * g.length(inc.edge)).exp();
        let (p, q) = (k, k + ni);
        match inc.end {
            End::Initial => vec![(p, one), (q, e)],
            End::Terminal => vec![(p, e), (q, one)],
        }
    };
    let deriv = |inc: Incidence| -> Vec<(usize, Complex64)> {
        let k = inc.edge.index();
        if k < ne {
            return vec![(k, -kappa)];
        }
        let e = (kappa * g.length(inc.edge)).exp();
        let (p, q) = (k, k + ni);
        match inc.end {
            End::Initial => vec![(p, kappa), (q, -kappa * e)],
            End::Terminal => vec![(p, -kappa * e), (q, kappa)],
        }
    };
    let row_of = |inc: Incidence| -> usize {
        let k = inc.edge.index();
        if k < ne || inc.end == End::Initial {
            k
        } else {
            k + ni
        }
    };

    let mut z = DMatrix::<Complex64>::zeros(n, n);
    let k2 = kappa * kappa;
    for v in g.vertices() {
        let incs = g.incidences(v);
        let d = data.vertex(v);
        let first = row_of(incs[0]);
        for (col, coef) in value(incs[0]) {
            z[(first, col)] += coef * (d.a + d.c / 2.0 * k2);
        }
        for (j, &inc) in incs.iter().enumerate() {
            for (col, coef) in deriv(inc) {
                z[(first, col)] -= coef * d.b[j];
            }
        }
        for w in incs.windows(2) {
            let row = row_of(w[1]);
            for (col, coef) in value(w[0]) {
                z[(row, col)] += coef * k2;
            }
            for (col, coef) in value(w[1]) {
                z[(row, col)] -= coef * k2;
            }
        }
    }
    z
}

#[derive(Clone, Debug, PartialEq)]
pub struct KappaReport {
    pub lambda: f64,
    pub kappa: f64,
    /// `ln |det Z(κ)|` of the unscaled matrix.
    pub log_abs_det: f64,
    /// `log10` of the 2-norm condition number of the row-equilibrated,
    /// scaled system.
    pub log10_cond: f64,
    /// Number of λ perturbations applied.
    pub retries: usize,
}

impl KappaReport {
    pub fn abs_det(&self) -> f64 {
        self.log_abs_det.exp()
    }
}

const MAX_RETRIES: usize = 3;
const LOG10_COND_LIMIT: f64 = 13.0;

pub(crate) fn equilibrate_rows(z: &mut DMatrix<f64>) -> Vec<f64> {
    let mut scales = Vec::with_capacity(z.nrows());
    for mut row in z.row_iter_mut() {
        let m = row.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let s = if m > 0.0 { 1.0 / m } else { 1.0 };
        row *= s;
        scales.push(s);
    }
    scales
}

pub(crate) fn log10_condition(z: &DMatrix<f64>) -> f64 {
    if z.nrows() == 0 {
        return 0.0;
    }
    let sv = z.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        (max / min).log10()
    }
}

/// Check that Z(√(2λ)) is invertible, perturbing λ by factors of
/// `1 + 1e-6` up to three times if it is not.
pub fn find_invertible_kappa(m: &BoundaryMatrices, lambda: f64) -> Result<KappaReport, BoundaryError> {
    let mut lam = lambda;
    for retries in 0..=MAX_RETRIES {
        let kappa = (2.0 * lam).sqrt();
        let mut z = m.scaled_z(kappa);
        let lu_det = z.clone().lu().determinant();
        let scale_log: f64 = m.lengths.iter().map(|rho| 2.0 * kappa * rho).sum();
        let log_abs_det = lu_det.abs().ln() + scale_log;
        equilibrate_rows(&mut z);
        let log10_cond = log10_condition(&z);
        if log10_cond < LOG10_COND_LIMIT && lambda > 0.0 {
            return Ok(KappaReport {
                lambda: lam,
                kappa,
                log_abs_det,
                log10_cond,
                retries,
            });
        }
        lam *= 1.0 + 1e-6;
    }
    Err(BoundaryError::Singular {
        lambda,
        retries: MAX_RETRIES,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::RawVertexData;
    use crate::graph::GraphBuilder;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn two_edge_star_blocks() {
        let g = GraphBuilder::new()
            .vertex("v")
            .external("e1", "v")
            .external("e2", "v")
            .build()
            .unwrap();
        let m = assemble(&g, &WentzellData::standard(&g)).unwrap();
        assert_eq!(m.b.row(0).iter().copied().collect::<Vec<_>>(), vec![-0.5, -0.5]);
        assert!(m.a.iter().all(|&x| x == 0.0));
        assert_eq!(m.c.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);
        assert_eq!(m.c.row(1).iter().copied().collect::<Vec<_>>(), vec![1.0, -1.0]);
    }

    #[test]
    fn interval_permutation_is_identity() {
        let g = GraphBuilder::new()
            .vertex("a")
            .vertex("b")
            .internal("i", "a", "b", 1.0)
            .build()
            .unwrap();
        let m = assemble(&g, &WentzellData::standard(&g)).unwrap();
        assert_eq!(m.n, 2);
        assert_eq!(m.perm, vec![0, 1]);
    }

    #[test]
    fn trap_block() {
        let g = GraphBuilder::new().vertex("v").external("e", "v").build().unwrap();
        let d = WentzellData::normalize(
            &g,
            vec![RawVertexData {
                a: 0.0,
                b: vec![0.0],
                c: 1.0,
            }],
        )
        .unwrap();
        let m = assemble(&g, &d).unwrap();
        assert_eq!(m.blocks[0].a[(0, 0)], 0.0);
        assert_eq!(m.blocks[0].b[(0, 0)], 0.0);
        assert_eq!(m.blocks[0].c[(0, 0)], 0.5);
    }

    #[test]
    fn tadpole_rejected() {
        let g = GraphBuilder::new()
            .vertex("v")
            .external("e", "v")
            .internal("t", "v", "v", 1.0)
            .build()
            .unwrap();
        assert!(matches!(
            assemble(&g, &WentzellData::standard(&g)),
            Err(BoundaryError::Tadpole(_))
        ));
    }

    #[test]
    fn no_internal_edges_gives_minus_hat_z() {
        let g = GraphBuilder::new()
            .vertex("v")
            .external("e1", "v")
            .external("e2", "v")
            .external("e3", "v")
            .build()
            .unwrap();
        let m = assemble(&g, &WentzellData::standard(&g)).unwrap();
        let k = Complex64::new(0.7, 0.3);
        let diff = z_matrix(&m, k) - hat_z(&m, k, -1.0);
        assert!(diff.norm() < 1e-15);
    }

    #[test]
    fn scaled_system_matches_complex_z() {
        let g = GraphBuilder::new()
            .vertex("a")
            .vertex("b")
            .external("e", "a")
            .internal("i", "a", "b", 0.8)
            .internal("j", "b", "a", 1.3)
            .build()
            .unwrap();
        let m = assemble(&g, &WentzellData::standard(&g)).unwrap();
        let kappa = 1.4;
        let z = z_matrix(&m, c(kappa));
        let zs = m.scaled_z(kappa);
        // columns of r⁺ and r⁻ pick up e^{-κρ}
        for col in 0..m.n {
            let scale = if col < m.n_external {
                1.0
            } else {
                let j = (col - m.n_external) % m.n_internal();
                (-kappa * m.lengths[j]).exp()
            };
            for row in 0..m.n {
                assert!((z[(row, col)].re * scale - zs[(row, col)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn three_star_invertible_at_half() {
        let g = GraphBuilder::new()
            .vertex("v")
            .external("e1", "v")
            .external("e2", "v")
            .external("e3", "v")
            .build()
            .unwrap();
        let m = assemble(&g, &WentzellData::standard(&g)).unwrap();
        let r = find_invertible_kappa(&m, 0.5).unwrap();
        assert_eq!(r.retries, 0);
        assert!((r.kappa - 1.0).abs() < 1e-15);
        // det = (0 + κ·1 + 0)(-κ²)² = 1
        assert!(r.log_abs_det.abs() < 1e-12);
    }
}
