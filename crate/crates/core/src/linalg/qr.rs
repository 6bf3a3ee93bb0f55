//! Householder QR with column pivoting and the rank-revealing solves built on it.

use super::{norm_inf, DenseMatrix};
use crate::{Error, Result};

/// `A P = Q R` with Householder reflectors and greedy column pivoting.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    m: usize,
    n: usize,
    /// Column-major `m x n`; the upper triangle holds `R`.
    r: Vec<f64>,
    /// Householder vectors; `vs[k]` acts on rows `k..m`.
    vs: Vec<Vec<f64>>,
    betas: Vec<f64>,
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn new(a: &DenseMatrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut r = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                r[j * m + i] = a.get(i, j);
            }
        }
        let steps = m.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut vs = Vec::with_capacity(steps);
        let mut betas = Vec::with_capacity(steps);

        for k in 0..steps {
            // Pivot: largest trailing column norm, lowest index on ties.
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..n {
                let nrm: f64 = r[j * m + k..(j + 1) * m].iter().map(|v| v * v).sum();
                if nrm > best_norm {
                    best_norm = nrm;
                    best = j;
                }
            }
            if best != k {
                for i in 0..m {
                    r.swap(k * m + i, best * m + i);
                }
                perm.swap(k, best);
            }

            let x = &r[k * m + k..(k + 1) * m];
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut v = x.to_vec();
            let beta = if norm == 0.0 {
                0.0
            } else {
                let alpha = if x[0] >= 0.0 { -norm } else { norm };
                v[0] -= alpha;
                let vtv: f64 = v.iter().map(|t| t * t).sum();
                if vtv == 0.0 {
                    0.0
                } else {
                    2.0 / vtv
                }
            };
            if beta != 0.0 {
                for j in k..n {
                    let col = &mut r[j * m + k..(j + 1) * m];
                    let s: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                    let f = beta * s;
                    for (c, vi) in col.iter_mut().zip(&v) {
                        *c -= f * vi;
                    }
                }
            }
            vs.push(v);
            betas.push(beta);
        }
        Self {
            m,
            n,
            r,
            vs,
            betas,
            perm,
        }
    }

    /// Column permutation: column `k` of `A P` is column `perm()[k]` of `A`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    #[inline]
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.r[j * self.m + i]
    }

    /// `|R_kk|` for `k < min(m, n)`, non-increasing up to rounding.
    pub fn pivots(&self) -> Vec<f64> {
        (0..self.m.min(self.n)).map(|k| self.r(k, k).abs()).collect()
    }

    /// Number of leading pivots exceeding `rtol * |R_00|`.
    pub fn rank(&self, rtol: f64) -> usize {
        let piv = self.pivots();
        match piv.first() {
            None | Some(&0.0) => 0,
            Some(&first) => piv.iter().take_while(|&&p| p > rtol * first).count(),
        }
    }

    /// `v <- Q^T v`.
    pub fn apply_qt(&self, v: &mut [f64]) {
        for k in 0..self.vs.len() {
            self.reflect(k, v);
        }
    }

    /// `v <- Q v`.
    pub fn apply_q(&self, v: &mut [f64]) {
        for k in (0..self.vs.len()).rev() {
            self.reflect(k, v);
        }
    }

    fn reflect(&self, k: usize, v: &mut [f64]) {
        let beta = self.betas[k];
        if beta == 0.0 {
            return;
        }
        let h = &self.vs[k];
        let tail = &mut v[k..];
        let s: f64 = h.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
        let f = beta * s;
        for (t, hi) in tail.iter_mut().zip(h) {
            *t -= f * hi;
        }
    }
}

/// Default relative rank tolerance `max(rows, cols) * eps`.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// Numerical rank with the default relative tolerance.
pub fn numerical_rank(a: &DenseMatrix) -> usize {
    numerical_rank_with_tol(a, default_rank_tol(a.rows(), a.cols()))
}

/// Numerical rank: pivots of the column-pivoted QR above `rtol` times the
/// leading pivot.
pub fn numerical_rank_with_tol(a: &DenseMatrix, rtol: f64) -> usize {
    if a.rows() == 0 || a.cols() == 0 {
        return 0;
    }
    PivotedQr::new(a).rank(rtol)
}

/// Minimum-norm `y` with `M y = c`, or [`Error::Inconsistent`].
pub fn least_norm_solution(mat: &DenseMatrix, c: &[f64]) -> Result<Vec<f64>> {
    let (p, m) = (mat.rows(), mat.cols());
    if c.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "{p}x{m} system with right-hand side of length {}",
            c.len()
        )));
    }
    super::check_finite(c, "right-hand side")?;
    let mut y = vec![0.0; m];
    if p > 0 && m > 0 {
        // M^T P = Q R  =>  P^T M = R^T Q^T.
        let qr = PivotedQr::new(&mat.transpose());
        let rank = qr.rank(default_rank_tol(p, m));
        let perm = qr.perm();
        let mut w = vec![0.0; m];
        for i in 0..rank {
            let mut acc = c[perm[i]];
            for (j, wj) in w.iter().enumerate().take(i) {
                acc -= qr.r(j, i) * wj;
            }
            w[i] = acc / qr.r(i, i);
        }
        qr.apply_q(&mut w);
        y = w;
    }
    let residual = norm_inf(&super::sub(&mat.mul_vec(&y), c));
    if residual > 1e-9 * (1.0 + norm_inf(c)) {
        return Err(Error::Inconsistent { residual });
    }
    Ok(y)
}

/// Orthonormal basis (as columns) of `{y : M^T y = 0}`.
pub fn left_null_space(mat: &DenseMatrix) -> DenseMatrix {
    let m = mat.rows();
    if mat.cols() == 0 {
        return DenseMatrix::identity(m);
    }
    let qr = PivotedQr::new(mat);
    let rank = qr.rank(default_rank_tol(m, mat.cols()));
    let mut basis = DenseMatrix::zeros(m, m - rank);
    for (k, j) in (rank..m).enumerate() {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        qr.apply_q(&mut e);
        for (i, v) in e.iter().enumerate() {
            basis.set(i, k, *v);
        }
    }
    basis
}

/// A nonzero `d` with `M d ~ 0` scaled to `||d||_inf = 1`, or `None` when `M`
/// has full column rank.
pub fn null_vector(mat: &DenseMatrix) -> Option<Vec<f64>> {
    let q = mat.cols();
    if q == 0 {
        return None;
    }
    if mat.rows() == 0 {
        let mut d = vec![0.0; q];
        d[0] = 1.0;
        return Some(d);
    }
    let qr = PivotedQr::new(mat);
    let rank = qr.rank(default_rank_tol(mat.rows(), q));
    if rank == q {
        return None;
    }
    // R11 z = -R[0..rank, rank]
    let mut z = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut acc = -qr.r(i, rank);
        for (j, zj) in z.iter().enumerate().skip(i + 1) {
            acc -= qr.r(i, j) * zj;
        }
        z[i] = acc / qr.r(i, i);
    }
    let mut d = vec![0.0; q];
    for (k, zk) in z.iter().enumerate() {
        d[qr.perm()[k]] = *zk;
    }
    d[qr.perm()[rank]] = 1.0;
    let scale = norm_inf(&d);
    d.iter_mut().for_each(|v| *v /= scale);
    Some(d)
}
