use crate::linalg::{check_finite, dot, norm1, DenseMatrix};
use crate::simplex::{solve_lp, LpStatus, StandardLp};
use crate::{Error, Result};

/// Optimal primal-dual pair of basis pursuit.
#[derive(Debug, Clone, PartialEq)]
pub struct BpSolution {
    pub x: Vec<f64>,
    /// Solves `max b^T y  s.t.  ||A^T y||_inf <= 1`.
    pub y: Vec<f64>,
    /// `||x||_1`, equal to `b^T y` up to the LP gap tolerance.
    pub objective: f64,
}

/// `[A, -A]`, the constraint matrix of the split form `x = u - v`.
pub fn bp_split_matrix(a: &DenseMatrix) -> DenseMatrix {
    let n = a.cols();
    let mut out = DenseMatrix::zeros(a.rows(), 2 * n);
    for i in 0..a.rows() {
        for j in 0..n {
            let v = a.get(i, j);
            out.set(i, j, v);
            out.set(i, n + j, -v);
        }
    }
    out
}

/// Solves `min ||x||_1  s.t.  Ax = b` as `min 1^T(u + v)  s.t.  A(u - v) = b`.
pub fn solve_bp(a: &DenseMatrix, b: &[f64]) -> Result<BpSolution> {
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "A has {} rows, b has length {}",
            a.rows(),
            b.len()
        )));
    }
    check_finite(b, "b")?;
    let n = a.cols();
    let lp = StandardLp::new(vec![1.0; 2 * n], bp_split_matrix(a), b.to_vec())?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => {
            return Err(Error::Numerical("basis pursuit LP reported unbounded".into()))
        }
    }
    let x: Vec<f64> = (0..n).map(|j| sol.x[j] - sol.x[n + j]).collect();
    let objective = norm1(&x);
    debug_assert!((objective - dot(b, &sol.y)).abs() <= 1e-7 * (1.0 + objective));
    Ok(BpSolution {
        x,
        y: sol.y,
        objective,
    })
}
