use super::bp::solve_bp;
use super::instance::{Model, ProblemInstance};
use crate::linalg::{dot, norm1, norm2, norm_inf, sub, DenseMatrix};
use crate::{support, Error, Result};

/// First-order optimality of a point for its model, with `f = 0.5||.||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// Smallest achievable violation of the stationarity equation.
    pub stationarity_residual: f64,
    /// Best subgradient `p* in d||x||_1`.
    pub subgradient: Vec<f64>,
    /// `lambda`, `eta` or `nu`; 0 for basis pursuit.
    pub multiplier: f64,
    /// Constraint violation (`||Ax - b||_inf`, `f(Ax - b) - sigma` or
    /// `||x||_1 - tau`, clipped at 0).
    pub feasibility_slack: f64,
    /// `eta * |f(Ax - b) - sigma|` or `nu * |tau - ||x||_1|`.
    pub complementarity: f64,
    /// Set when `supp(x)` is empty and the multiplier is reported as 0.
    pub degenerate_multiplier: bool,
}

impl KktReport {
    pub fn is_optimal(&self, tol: f64) -> bool {
        self.stationarity_residual <= tol
            && self.feasibility_slack <= tol
            && self.complementarity <= tol
    }

    /// Name of the first violated condition, if any.
    pub fn violation(&self, tol: f64) -> Option<String> {
        if self.feasibility_slack > tol {
            Some(format!("feasibility violated by {:e}", self.feasibility_slack))
        } else if self.stationarity_residual > tol {
            Some(format!(
                "stationarity residual {:e} exceeds {tol:e}",
                self.stationarity_residual
            ))
        } else if self.complementarity > tol {
            Some(format!("complementarity violated by {:e}", self.complementarity))
        } else {
            None
        }
    }
}

/// Residual of `s_i + scale * g_i = 0` on the support and
/// `|scale * g_i| <= 1` off it; also returns the clipped subgradient.
fn stationarity(x: &[f64], supp: &[usize], g: &[f64], scale: f64) -> (f64, Vec<f64>) {
    let mut worst: f64 = 0.0;
    let mut p = vec![0.0; x.len()];
    let mut k = 0;
    for i in 0..x.len() {
        let q = -scale * g[i];
        if k < supp.len() && supp[k] == i {
            let s = x[i].signum();
            worst = worst.max((q - s).abs());
            p[i] = s;
            k += 1;
        } else {
            worst = worst.max(q.abs() - 1.0);
            p[i] = q.clamp(-1.0, 1.0);
        }
    }
    (worst.max(0.0), p)
}

/// Evaluates the model's optimality conditions at `x`.
///
/// For basis pursuit the stationarity residual is the relative optimality
/// gap `(||x||_1 - t*) / (1 + t*)` against the LP optimum, and the
/// subgradient is `A^T y*` from the optimal dual.
pub fn kkt_report(inst: &ProblemInstance, x: &[f64]) -> Result<KktReport> {
    let a = inst.a();
    let b = inst.b();
    if x.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "x has length {}, A has {} columns",
            x.len(),
            a.cols()
        )));
    }
    crate::linalg::check_finite(x, "x")?;
    let r = sub(&a.mul_vec(x), b);
    let g = a.tr_mul_vec(&r);
    let supp = support(x);

    let report = match inst.model {
        Model::BasisPursuit => {
            let feasibility_slack = norm_inf(&r);
            let (stationarity_residual, subgradient) = match solve_bp(a, b) {
                Ok(opt) => (
                    ((norm1(x) - opt.objective) / (1.0 + opt.objective)).max(0.0),
                    a.tr_mul_vec(&opt.y),
                ),
                Err(Error::Infeasible) => (f64::INFINITY, vec![0.0; x.len()]),
                Err(e) => return Err(e),
            };
            KktReport {
                stationarity_residual,
                subgradient,
                multiplier: 0.0,
                feasibility_slack,
                complementarity: 0.0,
                degenerate_multiplier: false,
            }
        }
        Model::PenalizedLs { lambda } => {
            let (res, p) = stationarity(x, &supp, &g, 1.0 / lambda);
            KktReport {
                stationarity_residual: res,
                subgradient: p,
                multiplier: lambda,
                feasibility_slack: 0.0,
                complementarity: 0.0,
                degenerate_multiplier: false,
            }
        }
        Model::ResidualConstrained { sigma } => {
            let f = 0.5 * norm2(&r).powi(2);
            // eta >= 0 minimising sum_{i in I} (s_i + eta g_i)^2.
            let (eta, degenerate) = if supp.is_empty() {
                (0.0, true)
            } else {
                let sg: f64 = supp.iter().map(|&i| x[i].signum() * g[i]).sum();
                let gg: f64 = supp.iter().map(|&i| g[i] * g[i]).sum();
                (if gg > 0.0 { (-sg / gg).max(0.0) } else { 0.0 }, false)
            };
            let (res, p) = stationarity(x, &supp, &g, eta);
            KktReport {
                stationarity_residual: res,
                subgradient: p,
                multiplier: eta,
                feasibility_slack: (f - sigma).max(0.0),
                complementarity: eta * (f - sigma).abs(),
                degenerate_multiplier: degenerate,
            }
        }
        Model::L1Constrained { tau } => {
            let l1 = norm1(x);
            // nu >= 0 minimising sum_{i in I} (nu s_i + g_i)^2.
            let (nu, degenerate) = if supp.is_empty() {
                (0.0, true)
            } else {
                let sg: f64 = supp.iter().map(|&i| x[i].signum() * g[i]).sum();
                ((-sg / supp.len() as f64).max(0.0), false)
            };
            // nu s_i + g_i = 0 on I, |g_i| <= nu off I.
            let mut worst: f64 = 0.0;
            let mut p = vec![0.0; x.len()];
            let mut k = 0;
            for i in 0..x.len() {
                if k < supp.len() && supp[k] == i {
                    let s = x[i].signum();
                    worst = worst.max((nu * s + g[i]).abs());
                    p[i] = s;
                    k += 1;
                } else {
                    worst = worst.max(g[i].abs() - nu);
                    p[i] = if nu > 0.0 { (-g[i] / nu).clamp(-1.0, 1.0) } else { 0.0 };
                }
            }
            KktReport {
                stationarity_residual: worst.max(0.0),
                subgradient: p,
                multiplier: nu,
                feasibility_slack: (l1 - tau).max(0.0),
                complementarity: nu * (tau - l1).abs(),
                degenerate_multiplier: degenerate,
            }
        }
    };
    Ok(report)
}

/// Basis-pursuit problem `min ||x||_1 s.t. Ax = b*` whose solution set equals
/// the instance's solution set.
#[derive(Debug, Clone, PartialEq)]
pub struct BpReduction {
    pub a: DenseMatrix,
    pub b_star: Vec<f64>,
}

/// Reduces an optimal point of any model to basis pursuit with `b* = A x*`.
///
/// Fails with [`Error::NotOptimalPoint`] when `x*` violates its KKT
/// conditions by more than `kkt_tol`, and with [`Error::NotBounding`] for the
/// l1-constrained model when `||x*||_1 < tau`.
pub fn reduce_to_bp(inst: &ProblemInstance, x: &[f64], kkt_tol: f64) -> Result<BpReduction> {
    let report = kkt_report(inst, x)?;
    if let Some(why) = report.violation(kkt_tol) {
        return Err(Error::NotOptimalPoint(why));
    }
    if let Model::L1Constrained { tau } = inst.model {
        let l1 = norm1(x);
        if (l1 - tau).abs() > kkt_tol * tau.max(1.0) {
            return Err(Error::NotBounding { l1, tau });
        }
    }
    let b_star = match inst.model {
        Model::BasisPursuit => inst.b().to_vec(),
        _ => inst.a().mul_vec(x),
    };
    debug_assert!(dot(&b_star, &b_star).is_finite());
    Ok(BpReduction {
        a: inst.a().clone(),
        b_star,
    })
}
