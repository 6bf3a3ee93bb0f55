use super::barrier::spd_solve;
use super::{Blocks, DualCertificate, SupportPattern};
use crate::linalg::{left_null_space, norm_inf, DenseMatrix};
use crate::{tol, Error, Result};

pub const ADMM_MAX_ITERS: usize = 10_000;
/// Iterates larger than this in the infinity norm count as divergence.
pub const ADMM_DIVERGENCE_BOUND: f64 = 1e8;

/// Residual ratio that triggers a change of `rho`.
const BALANCE_RATIO: f64 = 10.0;
const RHO_MIN: f64 = 1e-4;
const RHO_MAX: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOutcome {
    pub certificate: DualCertificate,
    pub iterations: usize,
    /// `||z - A_{I^c}^T y||_inf` at exit.
    pub primal_residual: f64,
}

/// The unique root in `(-1, 1)` of `rho z^3 - rho v z^2 - (2 + rho) z + rho v`,
/// i.e. the minimiser of `-log(1 - z^2) + rho/2 (z - v)^2`.
///
/// The cubic is `2` at `z = -1` and `-2` at `z = 1`, so Newton steps are
/// safeguarded by keeping that bracket and bisecting when a step leaves it.
pub fn cubic_z_update(rho: f64, v: f64) -> f64 {
    let f = |z: f64| ((rho * z - rho * v) * z - (2.0 + rho)) * z + rho * v;
    let df = |z: f64| (3.0 * rho * z - 2.0 * rho * v) * z - (2.0 + rho);
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    let mut z = v.clamp(-0.5, 0.5);
    for _ in 0..200 {
        let fz = f(z);
        if fz == 0.0 {
            return z;
        }
        if fz > 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let d = df(z);
        let mut next = z - fz / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == z || hi - lo <= 4.0 * f64::EPSILON {
            break;
        }
        z = next;
    }
    z.clamp(-1.0 + f64::EPSILON, 1.0 - f64::EPSILON)
}

/// ADMM on `min phi(z)  s.t.  z = A_{I^c}^T y,  A_I^T y = s` with the
/// log-barrier `phi`, in scaled form with penalty `rho`, from the origin.
///
/// The `y`-step is a least-squares problem over the affine set, solved in a
/// null-space basis `Z` of `A_I^T` with a Cholesky factor of
/// `Z^T A_{I^c} A_{I^c}^T Z` computed once. The `z`-step is
/// [`cubic_z_update`] per coordinate. `rho` is the starting penalty; it is
/// doubled or halved (with `u` rescaled) whenever the primal and dual
/// residuals differ by more than a factor of 10. Since the `y`-step is a
/// plain least-squares solve, `rho` does not enter the factorisation.
/// Stops as soon as `y` is a valid certificate and the primal residual is
/// at most `1e-6`; returns [`Error::Diverged`] when the iterates blow up or
/// the budget runs out.
pub fn certificate_admm(
    a: &DenseMatrix,
    sp: &SupportPattern,
    rho: f64,
    max_iters: usize,
) -> Result<AdmmOutcome> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let blocks = Blocks::new(a, sp)?;
    let y_p = blocks.equality_point(sp)?;
    let q = blocks.off_idx.len();
    if q == 0 {
        return Ok(AdmmOutcome {
            certificate: DualCertificate::evaluate(a, sp, y_p),
            iterations: 0,
            primal_residual: 0.0,
        });
    }
    let offt = blocks.off.transpose();
    let basis = left_null_space(&blocks.support);
    // B = A_{I^c}^T Z, so A_{I^c}^T y = c0 + B w for y = y_p + Z w.
    let bmat = offt.matmul(&basis)?;
    let bt = bmat.transpose();
    let gram = bt.matmul(&bmat)?;
    let c0 = offt.mul_vec(&y_p);

    let mut rho = rho;
    let mut z = vec![0.0; q];
    let mut u = vec![0.0; q];
    for it in 1..=max_iters {
        let z_prev = z.clone();
        let target: Vec<f64> = z.iter().zip(&u).zip(&c0).map(|((zi, ui), ci)| zi + ui - ci).collect();
        let w = if basis.cols() == 0 {
            Vec::new()
        } else {
            spd_solve(&gram, &bt.mul_vec(&target))
                .ok_or_else(|| Error::Numerical("singular ADMM normal equations".into()))?
        };
        let bw = bmat.mul_vec(&w);
        let zy: Vec<f64> = c0.iter().zip(&bw).map(|(c, b)| c + b).collect();
        let y: Vec<f64> = y_p.iter().zip(basis.mul_vec(&w)).map(|(p, d)| p + d).collect();

        for i in 0..q {
            z[i] = cubic_z_update(rho, zy[i] - u[i]);
        }
        let r: Vec<f64> = z.iter().zip(&zy).map(|(zi, ci)| zi - ci).collect();
        u.iter_mut().zip(&r).for_each(|(ui, ri)| *ui += ri);

        let primal_residual = norm_inf(&r);
        if norm_inf(&y).max(norm_inf(&u)) > ADMM_DIVERGENCE_BOUND || !primal_residual.is_finite() {
            return Err(Error::Diverged { iterations: it });
        }
        let dz: Vec<f64> = z.iter().zip(&z_prev).map(|(a, b)| a - b).collect();
        let dual_residual = rho * norm_inf(&bt.mul_vec(&dz));
        if primal_residual > BALANCE_RATIO * dual_residual && rho < RHO_MAX {
            rho *= 2.0;
            u.iter_mut().for_each(|v| *v *= 0.5);
        } else if dual_residual > BALANCE_RATIO * primal_residual && rho > RHO_MIN {
            rho *= 0.5;
            u.iter_mut().for_each(|v| *v *= 2.0);
        }
        if primal_residual <= tol::STRICT {
            let certificate = DualCertificate::evaluate(a, sp, y);
            if certificate.is_valid() {
                return Ok(AdmmOutcome {
                    certificate,
                    iterations: it,
                    primal_residual,
                });
            }
        }
    }
    Err(Error::Diverged { iterations: max_iters })
}
