//! Brute-force uniqueness decision for small instances.
//!
//! For basis pursuit the optimal set is the face
//! `{x : Ax = b, ||x||_1 <= t*}`. Minimising and maximising every coordinate
//! over it gives a box whose widths are all zero exactly when the solution is
//! unique. The other models reduce to basis pursuit with `b* = A x*`.
//!
//! Only the simplex solver is shared with the certificate path.

use crate::linalg::{norm1, DenseMatrix};
use crate::simplex::{solve_lp, LpStatus, StandardLp};
use crate::solvers::{reduce_to_bp, solve_bp, ProblemInstance};
use crate::{tol, Error, Result};

/// Relative and absolute slack added to `t*` in the face LPs, so that the
/// computed optimum stays feasible after rounding.
const FACE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FaceRange {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// `t* = min ||x||_1` over `Ax = b`.
    pub optimal_value: f64,
    /// Point of the face attaining `lower[j]`.
    pub lower_points: Vec<Vec<f64>>,
    /// Point of the face attaining `upper[j]`.
    pub upper_points: Vec<Vec<f64>>,
}

impl FaceRange {
    pub fn widths(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }

    pub fn max_width(&self) -> f64 {
        self.widths().into_iter().fold(0.0, f64::max)
    }

    /// Every width at most `1e-7`.
    pub fn is_singleton(&self) -> bool {
        self.max_width() <= tol::FACE_WIDTH
    }

    /// All attaining points, lower ones first.
    pub fn attaining_points(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.lower_points.iter().chain(&self.upper_points)
    }
}

/// Per-coordinate range of the optimal face of basis pursuit.
///
/// Each bound is one LP in `x = u - v` with `A(u - v) = b` and
/// `1^T(u + v) + w = t* (1 + 1e-12) + 1e-12`.
pub fn bp_face_range(a: &DenseMatrix, b: &[f64]) -> Result<FaceRange> {
    let opt = solve_bp(a, b)?;
    let t_star = opt.objective;
    let (m, n) = (a.rows(), a.cols());
    let nv = 2 * n + 1;
    let mut mat = DenseMatrix::zeros(m + 1, nv);
    for i in 0..m {
        for j in 0..n {
            let v = a.get(i, j);
            mat.set(i, j, v);
            mat.set(i, n + j, -v);
        }
    }
    for j in 0..nv {
        mat.set(m, j, 1.0);
    }
    let mut rhs = b.to_vec();
    rhs.push(t_star * (1.0 + FACE_SLACK) + FACE_SLACK);

    let mut out = FaceRange {
        lower: Vec::with_capacity(n),
        upper: Vec::with_capacity(n),
        optimal_value: t_star,
        lower_points: Vec::with_capacity(n),
        upper_points: Vec::with_capacity(n),
    };
    for j in 0..n {
        for sense in [1.0, -1.0] {
            let mut cost = vec![0.0; nv];
            cost[j] = sense;
            cost[n + j] = -sense;
            let sol = solve_lp(&StandardLp::new(cost, mat.clone(), rhs.clone())?)?;
            if sol.status != LpStatus::Optimal {
                return Err(Error::Numerical(format!(
                    "face LP for coordinate {j} ended with status {:?}",
                    sol.status
                )));
            }
            let x: Vec<f64> = (0..n).map(|k| sol.x[k] - sol.x[n + k]).collect();
            if sense > 0.0 {
                out.lower.push(x[j]);
                out.lower_points.push(x);
            } else {
                out.upper.push(x[j]);
                out.upper_points.push(x);
            }
        }
    }
    Ok(out)
}

/// Brute-force verdict: `true` iff the reduced basis-pursuit face is a
/// single point. `x*` must be optimal for its model.
pub fn oracle_unique(inst: &ProblemInstance, x: &[f64]) -> Result<bool> {
    let red = reduce_to_bp(inst, x, tol::KKT)?;
    let face = bp_face_range(&red.a, &red.b_star)?;
    // The reduced face contains x*, so its value can only be <= ||x*||_1.
    debug_assert!(face.optimal_value <= norm1(x) * (1.0 + 1e-6) + 1e-6);
    Ok(face.is_singleton())
}
