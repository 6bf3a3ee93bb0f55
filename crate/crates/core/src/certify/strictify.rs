use super::SupportPattern;
use crate::linalg::{dot, norm1, norm_inf, DenseMatrix};
use crate::simplex::{solve_lp, LpStatus, StandardLp};
use crate::{tol, Error, Result};

/// How many times `alpha` is halved before giving up.
pub const STRICTIFY_HALVINGS: usize = 20;

/// Off-support correlations within this of `+-1` count as touching.
const TOUCH_TOL: f64 = tol::STRICT;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationCase {
    /// No off-support correlation touches `+-1`; `y*` is returned as is.
    Untouched,
    /// `q* = 0`: `y = y* + p*`.
    Shift,
    /// `q* > 0`: `y = (y* + p*/q*) / 2`.
    Average,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrictifyOutcome {
    pub y: Vec<f64>,
    pub case: PerturbationCase,
    /// The `alpha` that succeeded.
    pub alpha: f64,
    /// LP solves performed.
    pub attempts: usize,
    /// Off-support indices with `a_i^T y* = -1`.
    pub lower: Vec<usize>,
    /// Off-support indices with `a_i^T y* = +1`.
    pub upper: Vec<usize>,
    /// `1 - max_{i not in I} |a_i^T y|` for the returned `y`.
    pub margin: f64,
}

/// `1e-3 (1 + max |a_ij|)`.
pub fn default_alpha(a: &DenseMatrix) -> f64 {
    1e-3 * (1.0 + a.max_abs())
}

/// Turns an optimal basis-pursuit dual `y*` for the optimal point `x*` into a
/// strict certificate, when one exists.
///
/// With `L`, `U` the off-support indices where `a_i^T y*` is `-1` and `+1`,
/// `r = 1_L - 1_U`, `b = A x*` and `t = ||x*||_1`, the LP
///
/// ```text
/// min -b^T p + t q   s.t.  -q 1 <= A^T p - alpha r <= q 1,  q >= 0
/// ```
///
/// has optimal value 0. Its solution gives either `y* + p*` (when `q* = 0`)
/// or `(y* + p*/q*) / 2`, which keeps `b^T y = t` and `|a_i^T y| <= 1` while
/// pulling `L` and `U` strictly inside. In the second case `q*` is first
/// raised to at least `alpha` along the optimal ray `(y*, 1)`; without that,
/// an index of `U` can land on `-1` (or of `L` on `+1`). The result is accepted when it is
/// still optimal, dual feasible, and has off-support margin at least `1e-6`;
/// otherwise `alpha` is halved, up to [`STRICTIFY_HALVINGS`] times.
///
/// `sp` must be the support and signs of `x*`.
pub fn strictify(
    a: &DenseMatrix,
    sp: &SupportPattern,
    y_star: &[f64],
    x_star: &[f64],
    alpha: f64,
) -> Result<StrictifyOutcome> {
    let (m, n) = (a.rows(), a.cols());
    if x_star.len() != n || y_star.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "A is {m}x{n}, x* has length {}, y* has length {}",
            x_star.len(),
            y_star.len()
        )));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let b = a.mul_vec(x_star);
    let t = norm1(x_star);
    let corr = a.tr_mul_vec(y_star);
    if norm_inf(&corr) > 1.0 + tol::SUPPORT || (dot(&b, y_star) - t).abs() > tol::GAP * (1.0 + t) {
        return Err(Error::InvalidArgument(
            "y* is not an optimal dual for x*".into(),
        ));
    }
    if SupportPattern::from_point(x_star) != *sp {
        return Err(Error::InvalidArgument(
            "support pattern does not match x*".into(),
        ));
    }
    let off = sp.complement(n);
    let lower: Vec<usize> = off.iter().copied().filter(|&i| corr[i] <= -1.0 + TOUCH_TOL).collect();
    let upper: Vec<usize> = off.iter().copied().filter(|&i| corr[i] >= 1.0 - TOUCH_TOL).collect();
    let margin_of = |y: &[f64]| {
        let c = a.tr_mul_vec(y);
        off.iter().map(|&i| 1.0 - c[i].abs()).fold(f64::INFINITY, f64::min)
    };
    if lower.is_empty() && upper.is_empty() {
        return Ok(StrictifyOutcome {
            y: y_star.to_vec(),
            case: PerturbationCase::Untouched,
            alpha,
            attempts: 0,
            margin: margin_of(y_star),
            lower,
            upper,
        });
    }
    let mut direction = vec![0.0; n];
    for &i in &lower {
        direction[i] = 1.0;
    }
    for &i in &upper {
        direction[i] = -1.0;
    }

    let mut alpha = alpha;
    for attempt in 1..=STRICTIFY_HALVINGS + 1 {
        let (p, q) = solve_perturbation_lp(a, &b, t, &direction, alpha)?;
        let (y, case) = if q <= tol::FEAS {
            (y_star.iter().zip(&p).map(|(a, b)| a + b).collect::<Vec<_>>(), PerturbationCase::Shift)
        } else {
            // (y*, 1) is an optimal ray, so (p* + d y*, q* + d) is optimal too.
            // The LP is homogeneous in (alpha, p, q), which leaves alpha/q*
            // unchanged under halving; lifting q to alpha bounds it instead.
            let lift = (alpha - q).max(0.0);
            let q = q + lift;
            (
                y_star
                    .iter()
                    .zip(&p)
                    .map(|(ys, pi)| 0.5 * (ys + (pi + lift * ys) / q))
                    .collect(),
                PerturbationCase::Average,
            )
        };
        let c = a.tr_mul_vec(&y);
        let optimal = (dot(&b, &y) - t).abs() <= tol::GAP * (1.0 + t);
        let feasible = sp.indices().iter().all(|&i| c[i].abs() <= 1.0 + tol::FEAS);
        let margin = margin_of(&y);
        if optimal && feasible && margin >= tol::STRICT {
            return Ok(StrictifyOutcome {
                y,
                case,
                alpha,
                attempts: attempt,
                lower,
                upper,
                margin,
            });
        }
        alpha *= 0.5;
    }
    Err(Error::StrictificationFailed {
        attempts: STRICTIFY_HALVINGS + 1,
    })
}

/// Solves the perturbation LP with `p = p+ - p-` and returns `(p*, q*)`.
fn solve_perturbation_lp(
    a: &DenseMatrix,
    b: &[f64],
    t: f64,
    direction: &[f64],
    alpha: f64,
) -> Result<(Vec<f64>, f64)> {
    let (m, n) = (a.rows(), a.cols());
    // Columns: p+ (m) | p- (m) | q | slacks (2n).
    let nv = 2 * m + 1 + 2 * n;
    let mut mat = DenseMatrix::zeros(2 * n, nv);
    let mut rhs = vec![0.0; 2 * n];
    for i in 0..n {
        for (row, sign) in [(i, 1.0), (n + i, -1.0)] {
            for k in 0..m {
                let v = sign * a.get(k, i);
                mat.set(row, k, v);
                mat.set(row, m + k, -v);
            }
            mat.set(row, 2 * m, -1.0);
            mat.set(row, 2 * m + 1 + row, 1.0);
            rhs[row] = sign * alpha * direction[i];
        }
    }
    let mut cost = vec![0.0; nv];
    for k in 0..m {
        cost[k] = -b[k];
        cost[m + k] = b[k];
    }
    cost[2 * m] = t;
    let sol = solve_lp(&StandardLp::new(cost, mat, rhs)?)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!(
            "perturbation LP ended with status {:?}",
            sol.status
        )));
    }
    let p = (0..m).map(|k| sol.x[k] - sol.x[m + k]).collect();
    Ok((p, sol.x[2 * m]))
}
