use super::{Blocks, DualCertificate, SupportPattern};
use crate::linalg::DenseMatrix;
use crate::simplex::{solve_lp, LpStatus, StandardLp};
use crate::{Error, Result};

/// Optimum of `max eps  s.t.  A_I^T y = s,  |a_i^T y| <= 1 - eps (i not in I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxMargin {
    /// `eps*`; positive exactly when a strict certificate exists. Infinite
    /// when `I^c` is empty.
    pub epsilon: f64,
    pub certificate: DualCertificate,
}

/// Solves the max-margin certificate LP.
///
/// In standard form the free variables are split, `y = y+ - y-` and
/// `eps = e+ - e-`, with one slack per off-support inequality.
pub fn certificate_lp(a: &DenseMatrix, sp: &SupportPattern) -> Result<MaxMargin> {
    let blocks = Blocks::new(a, sp)?;
    let y_eq = blocks.equality_point(sp)?;
    let m = a.rows();
    let k = sp.len();
    let q = blocks.off_idx.len();
    if q == 0 {
        return Ok(MaxMargin {
            epsilon: f64::INFINITY,
            certificate: DualCertificate::evaluate(a, sp, y_eq),
        });
    }

    // Columns: y+ (m) | y- (m) | e+ | e- | slacks (2q).
    let nv = 2 * m + 2 + 2 * q;
    let rows = k + 2 * q;
    let mut mat = DenseMatrix::zeros(rows, nv);
    let mut rhs = vec![0.0; rows];
    for (r, s) in sp.signs().iter().enumerate() {
        for i in 0..m {
            let v = blocks.support.get(i, r);
            mat.set(r, i, v);
            mat.set(r, m + i, -v);
        }
        rhs[r] = *s;
    }
    for c in 0..q {
        for (row, sign) in [(k + 2 * c, 1.0), (k + 2 * c + 1, -1.0)] {
            for i in 0..m {
                let v = sign * blocks.off.get(i, c);
                mat.set(row, i, v);
                mat.set(row, m + i, -v);
            }
            mat.set(row, 2 * m, 1.0);
            mat.set(row, 2 * m + 1, -1.0);
            mat.set(row, 2 * m + 2 + (row - k), 1.0);
            rhs[row] = 1.0;
        }
    }
    let mut cost = vec![0.0; nv];
    cost[2 * m] = -1.0;
    cost[2 * m + 1] = 1.0;

    let sol = solve_lp(&StandardLp::new(cost, mat, rhs)?)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!(
            "max-margin LP ended with status {:?}",
            sol.status
        )));
    }
    let y: Vec<f64> = (0..m).map(|i| sol.x[i] - sol.x[m + i]).collect();
    let epsilon = sol.x[2 * m] - sol.x[2 * m + 1];
    Ok(MaxMargin {
        epsilon,
        certificate: DualCertificate::evaluate(a, sp, y),
    })
}
