//! Dense two-phase primal simplex for `min c^T x  s.t.  A x = b, x >= 0`.
//!
//! Pricing uses Bland's rule throughout, so degenerate problems terminate.
//! An optimal basis is re-solved against the original data before it is
//! returned, which gives primal and dual vectors free of tableau drift; the
//! result is only reported `Optimal` after primal feasibility, dual
//! feasibility and the duality gap have been checked against [`tol::FEAS`]
//! and [`tol::GAP`].

use std::cell::Cell;

use crate::linalg::{dot, norm_inf, DenseMatrix, Lu};
use crate::{tol, Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const MAX_REINVERSIONS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct StandardLp {
    pub c: Vec<f64>,
    pub a_eq: DenseMatrix,
    pub b_eq: Vec<f64>,
}

impl StandardLp {
    pub fn new(c: Vec<f64>, a_eq: DenseMatrix, b_eq: Vec<f64>) -> Result<Self> {
        if c.len() != a_eq.cols() || b_eq.len() != a_eq.rows() {
            return Err(Error::DimensionMismatch(format!(
                "cost {} / matrix {}x{} / rhs {}",
                c.len(),
                a_eq.rows(),
                a_eq.cols(),
                b_eq.len()
            )));
        }
        crate::linalg::check_finite(&c, "LP cost")?;
        crate::linalg::check_finite(&b_eq, "LP right-hand side")?;
        Ok(Self { c, a_eq, b_eq })
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.b_eq.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; empty unless `Optimal`.
    pub x: Vec<f64>,
    /// Multipliers of `A x = b`; empty unless `Optimal`.
    pub y: Vec<f64>,
    pub objective: f64,
    /// Sum of artificials at the end of phase one.
    pub phase_one_objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Returns the optimal dual vector of a solved LP.
pub fn dual_of(lp: &StandardLp, sol: &LpSolution) -> Result<Vec<f64>> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotOptimal(sol.status));
    }
    debug_assert_eq!(sol.y.len(), lp.num_constraints());
    Ok(sol.y.clone())
}

/// Worst certificate errors observed on the current thread since the last
/// [`audit::reset`].
pub mod audit {
    use super::*;

    #[derive(Debug, Clone, Copy, Default, PartialEq)]
    pub struct LpAudit {
        pub solves: usize,
        /// Largest `|c^T x - b^T y| / (1 + |c^T x|)`.
        pub max_relative_gap: f64,
        /// Largest `x_j * (c - A^T y)_j`.
        pub max_complementarity: f64,
        /// Largest dual infeasibility `max(0, -(c - A^T y)_j)`.
        pub max_dual_infeasibility: f64,
    }

    thread_local! {
        static AUDIT: Cell<LpAudit> = Cell::new(LpAudit::default());
    }

    pub fn reset() {
        AUDIT.with(|a| a.set(LpAudit::default()));
    }

    pub fn snapshot() -> LpAudit {
        AUDIT.with(|a| a.get())
    }

    pub(super) fn record(gap: f64, cs: f64, dual_inf: f64) {
        AUDIT.with(|a| {
            let mut s = a.get();
            s.solves += 1;
            s.max_relative_gap = s.max_relative_gap.max(gap);
            s.max_complementarity = s.max_complementarity.max(cs);
            s.max_dual_infeasibility = s.max_dual_infeasibility.max(dual_inf);
            a.set(s);
        });
    }
}

struct Tableau<'a> {
    lp: &'a StandardLp,
    /// Row multipliers making the right-hand side non-negative.
    signs: Vec<f64>,
    /// `m x (n + m)` body; columns `n..n+m` are the artificials.
    body: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    iterations: usize,
    cap: usize,
}

impl<'a> Tableau<'a> {
    fn new(lp: &'a StandardLp) -> Self {
        let (m, n) = (lp.num_constraints(), lp.num_vars());
        let signs: Vec<f64> = lp
            .b_eq
            .iter()
            .map(|&b| if b < 0.0 { -1.0 } else { 1.0 })
            .collect();
        let body = (0..m)
            .map(|i| {
                let mut row: Vec<f64> = lp.a_eq.row(i).iter().map(|v| v * signs[i]).collect();
                row.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
                row
            })
            .collect();
        let rhs = lp.b_eq.iter().zip(&signs).map(|(b, s)| b * s).collect();
        Self {
            lp,
            signs,
            body,
            rhs,
            basis: (n..n + m).collect(),
            reduced: vec![0.0; n + m],
            iterations: 0,
            cap: 50 * (n + m).max(1),
        }
    }

    fn n(&self) -> usize {
        self.lp.num_vars()
    }

    fn price(&mut self, cost: &[f64]) {
        let width = cost.len();
        for j in 0..width {
            let cb: f64 = self
                .basis
                .iter()
                .zip(&self.body)
                .map(|(&b, row)| cost[b] * row[j])
                .sum();
            self.reduced[j] = cost[j] - cb;
        }
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.rhs)
            .map(|(&b, r)| cost[b] * r)
            .sum()
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.body[row][col];
        for v in self.body[row].iter_mut() {
            *v /= p;
        }
        self.rhs[row] /= p;
        let prow = self.body[row].clone();
        let prhs = self.rhs[row];
        for i in 0..self.body.len() {
            if i == row {
                continue;
            }
            let f = self.body[i][col];
            if f != 0.0 {
                for (v, pv) in self.body[i].iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                self.rhs[i] -= f * prhs;
                self.body[i][col] = 0.0;
            }
        }
        let f = self.reduced[col];
        if f != 0.0 {
            for (v, pv) in self.reduced.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.reduced[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Bland-rule iterations over columns `0..allowed`.
    fn run(&mut self, allowed: usize) -> Result<LpStatus> {
        loop {
            let Some(enter) = (0..allowed).find(|&j| self.reduced[j] < -tol::FEAS) else {
                return Ok(LpStatus::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.body.iter().enumerate() {
                let a = row[enter];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[i].max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Ok(LpStatus::Unbounded);
            };
            self.iterations += 1;
            if self.iterations > self.cap {
                return Err(Error::IterationLimit(self.cap));
            }
            self.pivot(row, enter);
        }
    }

    /// Moves zero-level artificials out of the basis where a structural
    /// column can replace them; rows where none can are redundant.
    fn drive_out_artificials(&mut self) {
        let n = self.n();
        for i in 0..self.basis.len() {
            if self.basis[i] < n {
                continue;
            }
            let best = (0..n)
                .map(|j| (j, self.body[i][j].abs()))
                .fold((usize::MAX, PIVOT_TOL), |b, c| if c.1 > b.1 { c } else { b });
            if best.0 != usize::MAX {
                self.pivot(i, best.0);
            }
        }
    }

    fn basis_matrix(&self) -> DenseMatrix {
        let m = self.basis.len();
        let n = self.n();
        let mut b = DenseMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            if j < n {
                for i in 0..m {
                    b.set(i, k, self.lp.a_eq.get(i, j));
                }
            } else {
                b.set(j - n, k, self.signs[j - n]);
            }
        }
        b
    }

    /// Rebuilds body, right-hand side and reduced costs from the original
    /// data for the current basis.
    fn reinvert(&mut self, cost: &[f64]) -> Result<()> {
        let m = self.basis.len();
        let n = self.n();
        let lu = Lu::new(&self.basis_matrix())?;
        let mut body = vec![vec![0.0; n + m]; m];
        for j in 0..n + m {
            let col: Vec<f64> = if j < n {
                self.lp.a_eq.column(j)
            } else {
                (0..m)
                    .map(|i| if i == j - n { self.signs[i] } else { 0.0 })
                    .collect()
            };
            for (i, v) in lu.solve(&col).into_iter().enumerate() {
                body[i][j] = v;
            }
        }
        for (k, &j) in self.basis.iter().enumerate() {
            for (i, row) in body.iter_mut().enumerate() {
                row[j] = if i == k { 1.0 } else { 0.0 };
            }
        }
        self.body = body;
        self.rhs = lu.solve(&self.lp.b_eq);
        self.price(cost);
        Ok(())
    }

    /// Primal and dual vectors for the current basis, computed from the
    /// original data; `None` when they fail the optimality checks.
    fn certified_point(&self) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        let (m, n) = (self.basis.len(), self.n());
        let lp = self.lp;
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; m];
        if m > 0 {
            let lu = Lu::new(&self.basis_matrix())?;
            let xb = lu.solve(&lp.b_eq);
            let cb: Vec<f64> = self
                .basis
                .iter()
                .map(|&j| if j < n { lp.c[j] } else { 0.0 })
                .collect();
            y = lu.solve_transpose(&cb);
            for (k, &j) in self.basis.iter().enumerate() {
                if j < n {
                    if xb[k] < -tol::FEAS {
                        return Ok(None);
                    }
                    x[j] = xb[k].max(0.0);
                } else if xb[k].abs() > tol::FEAS {
                    return Ok(None);
                }
            }
        }
        let reduced: Vec<f64> = (0..n).map(|j| lp.c[j] - lp.a_eq.col_dot(j, &y)).collect();
        if reduced.iter().any(|&r| r < -tol::FEAS) {
            return Ok(None);
        }
        let resid = norm_inf(&crate::linalg::sub(&lp.a_eq.mul_vec(&x), &lp.b_eq));
        if resid > tol::FEAS * (1.0 + norm_inf(&lp.b_eq)) {
            return Ok(None);
        }
        Ok(Some((x, y)))
    }
}

/// Solves a standard-form LP.
///
/// Returns `Err` only for an exceeded iteration cap or an unrecoverable
/// numerical breakdown; infeasibility and unboundedness are statuses.
pub fn solve_lp(lp: &StandardLp) -> Result<LpSolution> {
    let (m, n) = (lp.num_constraints(), lp.num_vars());
    let mut tab = Tableau::new(lp);

    // Phase one: minimise the sum of artificials.
    let phase1: Vec<f64> = (0..n + m).map(|j| if j < n { 0.0 } else { 1.0 }).collect();
    tab.price(&phase1);
    let status = tab.run(n + m)?;
    debug_assert_eq!(status, LpStatus::Optimal, "phase one is bounded below");
    let phase_one_objective = tab.objective(&phase1).max(0.0);
    if phase_one_objective > 1e-8 * norm_inf(&lp.b_eq).max(1.0) {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: vec![],
            y: vec![],
            objective: f64::NAN,
            phase_one_objective,
            iterations: tab.iterations,
        });
    }
    tab.drive_out_artificials();

    // Phase two: artificials may leave but never re-enter.
    let cost: Vec<f64> = (0..n + m).map(|j| if j < n { lp.c[j] } else { 0.0 }).collect();
    tab.price(&cost);
    for attempt in 0..=MAX_REINVERSIONS {
        if tab.run(n)? == LpStatus::Unbounded {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: vec![],
                y: vec![],
                objective: f64::NEG_INFINITY,
                phase_one_objective,
                iterations: tab.iterations,
            });
        }
        if let Some((x, y)) = tab.certified_point()? {
            let objective = dot(&lp.c, &x);
            let gap = (objective - dot(&lp.b_eq, &y)).abs() / (1.0 + objective.abs());
            let reduced: Vec<f64> = (0..n).map(|j| lp.c[j] - lp.a_eq.col_dot(j, &y)).collect();
            let cs = x
                .iter()
                .zip(&reduced)
                .map(|(xj, rj)| xj * rj)
                .fold(0.0, f64::max);
            let dual_inf = reduced.iter().fold(0.0, |m: f64, r| m.max(-r));
            if gap <= tol::GAP && cs <= tol::GAP {
                audit::record(gap, cs, dual_inf);
                return Ok(LpSolution {
                    status: LpStatus::Optimal,
                    x,
                    y,
                    objective,
                    phase_one_objective,
                    iterations: tab.iterations,
                });
            }
        }
        if attempt < MAX_REINVERSIONS {
            tab.reinvert(&cost)?;
        }
    }
    Err(Error::Numerical(
        "optimal basis failed certification after reinversion".into(),
    ))
}
