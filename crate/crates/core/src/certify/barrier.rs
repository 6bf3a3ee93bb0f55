use super::{Blocks, DualCertificate, SupportPattern};
use crate::linalg::{dot, left_null_space, least_norm_solution, norm2, Cholesky, DenseMatrix};
use crate::{Error, Result};

const MAX_NEWTON: usize = 100;
const MAX_OUTER: usize = 60;
const MAX_INNER: usize = 50;
const ARMIJO: f64 = 0.25;
/// Stop when half the squared Newton decrement drops below this.
const DECREMENT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierOutcome {
    pub certificate: DualCertificate,
    pub newton_steps: usize,
    /// Augmented-Lagrangian rounds spent finding a strictly interior start.
    pub phase_one_rounds: usize,
    /// Barrier value at the start point and after every accepted Newton step.
    pub objective_history: Vec<f64>,
}

/// `-sum log(1 - z_i) + log(1 + z_i)`, infinite outside `(-1, 1)^q`.
fn barrier_value(z: &[f64]) -> f64 {
    let mut v = 0.0;
    for &zi in z {
        if zi.abs() >= 1.0 {
            return f64::INFINITY;
        }
        v -= (-zi).ln_1p() + zi.ln_1p();
    }
    v
}

fn is_interior(z: &[f64]) -> bool {
    z.iter().all(|v| v.abs() < 1.0)
}

/// First and second derivative weights of the barrier at `z`.
fn barrier_weights(z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    z.iter()
        .map(|&zi| {
            let d = 1.0 - zi * zi;
            (2.0 * zi / d, 2.0 * (1.0 + zi * zi) / (d * d))
        })
        .unzip()
}

/// `sum_c w_c a_c a_c^T` over the columns of `cols`.
fn weighted_gram(cols: &DenseMatrix, w: &[f64]) -> DenseMatrix {
    let m = cols.rows();
    let mut g = DenseMatrix::zeros(m, m);
    for (c, wc) in w.iter().enumerate() {
        let col = cols.column(c);
        for i in 0..m {
            let wi = wc * col[i];
            if wi == 0.0 {
                continue;
            }
            for j in 0..m {
                g.set(i, j, g.get(i, j) + wi * col[j]);
            }
        }
    }
    g
}

/// Solves `H d = rhs` for symmetric positive semidefinite `H`, adding a small
/// ridge when the factorization breaks down.
pub(super) fn spd_solve(h: &DenseMatrix, rhs: &[f64]) -> Option<Vec<f64>> {
    if h.rows() == 0 {
        return Some(Vec::new());
    }
    if let Ok(ch) = Cholesky::new(h) {
        return Some(ch.solve(rhs));
    }
    let scale = (0..h.rows()).map(|i| h.get(i, i)).fold(1.0, f64::max);
    let mut ridge = 1e-12 * scale;
    for _ in 0..6 {
        let mut hr = h.clone();
        for i in 0..h.rows() {
            hr.set(i, i, h.get(i, i) + ridge);
        }
        if let Ok(ch) = Cholesky::new(&hr) {
            return Some(ch.solve(rhs));
        }
        ridge *= 100.0;
    }
    None
}

/// Backtracks from `t = 1` until the point stays interior and satisfies
/// Armijo with the given directional decrease. Returns the step and value.
fn line_search(f: impl Fn(f64) -> f64, f0: f64, decrease: f64) -> Option<(f64, f64)> {
    let mut t = 1.0;
    while t > 1e-14 {
        let ft = f(t);
        if ft.is_finite() && ft <= f0 - ARMIJO * t * decrease {
            return Some((t, ft));
        }
        t *= 0.5;
    }
    None
}

/// Moves `y` onto `A_I^T y = s` by the least-norm correction.
fn project_affine(blocks: &Blocks, sp: &SupportPattern, y: &[f64]) -> Option<Vec<f64>> {
    let ait = blocks.support.transpose();
    let h: Vec<f64> = ait
        .mul_vec(y)
        .iter()
        .zip(sp.signs())
        .map(|(v, s)| v - s)
        .collect();
    let d = least_norm_solution(&ait, &h).ok()?;
    Some(y.iter().zip(&d).map(|(a, b)| a - b).collect())
}

/// Finds a strictly interior point of the affine set by minimising the
/// augmented Lagrangian `phi(y) + mu^T h + rho/2 ||h||^2`, `h = A_I^T y - s`,
/// from `y = 0` and projecting after each round.
fn interior_start(blocks: &Blocks, sp: &SupportPattern, m: usize) -> Option<(Vec<f64>, usize)> {
    let ait = blocks.support.transpose();
    let offt = blocks.off.transpose();
    let k = sp.len();
    let mut y = vec![0.0; m];
    let mut mu = vec![0.0; k];
    let mut rho = 1.0;
    let mut prev_h = f64::INFINITY;
    let aug = |y: &[f64], mu: &[f64], rho: f64| -> f64 {
        let phi = barrier_value(&offt.mul_vec(y));
        let h: Vec<f64> = ait.mul_vec(y).iter().zip(sp.signs()).map(|(v, s)| v - s).collect();
        phi + dot(mu, &h) + 0.5 * rho * dot(&h, &h)
    };
    let support_gram = weighted_gram(&blocks.support, &vec![1.0; k]);
    for round in 1..=MAX_OUTER {
        for _ in 0..MAX_INNER {
            let z = offt.mul_vec(&y);
            let (w1, w2) = barrier_weights(&z);
            let h: Vec<f64> = ait.mul_vec(&y).iter().zip(sp.signs()).map(|(v, s)| v - s).collect();
            let mult: Vec<f64> = mu.iter().zip(&h).map(|(a, b)| a + rho * b).collect();
            let grad: Vec<f64> = blocks
                .off
                .mul_vec(&w1)
                .iter()
                .zip(blocks.support.mul_vec(&mult))
                .map(|(a, b)| a + b)
                .collect();
            let mut hess = weighted_gram(&blocks.off, &w2);
            for i in 0..m {
                for j in 0..m {
                    hess.set(i, j, hess.get(i, j) + rho * support_gram.get(i, j));
                }
            }
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            let dy = spd_solve(&hess, &neg)?;
            let dec = -dot(&grad, &dy);
            if dec <= 0.0 || 0.5 * dec < DECREMENT_TOL {
                break;
            }
            let f0 = aug(&y, &mu, rho);
            let step = line_search(
                |t| {
                    let yt: Vec<f64> = y.iter().zip(&dy).map(|(a, d)| a + t * d).collect();
                    aug(&yt, &mu, rho)
                },
                f0,
                dec,
            );
            match step {
                Some((t, _)) => y.iter_mut().zip(&dy).for_each(|(a, d)| *a += t * d),
                None => break,
            }
        }
        if let Some(yp) = project_affine(blocks, sp, &y) {
            if is_interior(&offt.mul_vec(&yp)) {
                return Some((yp, round));
            }
        }
        let h: Vec<f64> = ait.mul_vec(&y).iter().zip(sp.signs()).map(|(v, s)| v - s).collect();
        let hn = norm2(&h);
        mu.iter_mut().zip(&h).for_each(|(a, b)| *a += rho * b);
        if hn > 0.25 * prev_h {
            rho *= 10.0;
        }
        prev_h = hn;
        if rho > 1e12 {
            break;
        }
    }
    None
}

/// Minimises the log barrier of the off-support constraints over
/// `{y : A_I^T y = s}` by Newton's method in a null-space basis of `A_I^T`.
///
/// `y0`, if given, is projected onto the affine set and used when it is
/// strictly interior; otherwise a start point is found by an
/// augmented-Lagrangian phase from `y = 0`. Every accepted step satisfies an
/// Armijo decrease, so `objective_history` is strictly decreasing. Returns
/// [`Error::BarrierInfeasible`] when no interior start is found or the final
/// point is not a valid certificate.
pub fn certificate_barrier(
    a: &DenseMatrix,
    sp: &SupportPattern,
    y0: Option<&[f64]>,
) -> Result<BarrierOutcome> {
    let blocks = Blocks::new(a, sp)?;
    let m = a.rows();
    let y_eq = blocks.equality_point(sp)?;
    if blocks.off_idx.is_empty() {
        return Ok(BarrierOutcome {
            certificate: DualCertificate::evaluate(a, sp, y_eq),
            newton_steps: 0,
            phase_one_rounds: 0,
            objective_history: vec![0.0],
        });
    }
    if let Some(y0) = y0 {
        if y0.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "start point has length {}, expected {m}",
                y0.len()
            )));
        }
    }
    let offt = blocks.off.transpose();
    let given = y0
        .and_then(|y0| project_affine(&blocks, sp, y0))
        .filter(|y| is_interior(&offt.mul_vec(y)));
    let (mut y, phase_one_rounds) = match given {
        Some(y) => (y, 0),
        None => interior_start(&blocks, sp, m).ok_or(Error::BarrierInfeasible)?,
    };

    let basis = left_null_space(&blocks.support);
    let basis_t = basis.transpose();
    let mut phi = barrier_value(&offt.mul_vec(&y));
    let mut history = vec![phi];
    let mut newton_steps = 0;
    if basis.cols() > 0 {
        for _ in 0..MAX_NEWTON {
            let z = offt.mul_vec(&y);
            let (w1, w2) = barrier_weights(&z);
            let grad = basis_t.mul_vec(&blocks.off.mul_vec(&w1));
            let hess = basis_t
                .matmul(&weighted_gram(&blocks.off, &w2))?
                .matmul(&basis)?;
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(dw) = spd_solve(&hess, &neg) else { break };
            let dec = -dot(&grad, &dw);
            if dec <= 0.0 || 0.5 * dec <= DECREMENT_TOL {
                break;
            }
            let dy = basis.mul_vec(&dw);
            let step = line_search(
                |t| {
                    let yt: Vec<f64> = y.iter().zip(&dy).map(|(a, d)| a + t * d).collect();
                    barrier_value(&offt.mul_vec(&yt))
                },
                phi,
                dec,
            );
            let Some((t, ft)) = step else { break };
            y.iter_mut().zip(&dy).for_each(|(a, d)| *a += t * d);
            phi = ft;
            history.push(phi);
            newton_steps += 1;
        }
    }
    // Null-space steps drift off the affine set only by rounding; undo that
    // when the correction keeps the point interior.
    if let Some(yp) = project_affine(&blocks, sp, &y) {
        if is_interior(&offt.mul_vec(&yp)) {
            y = yp;
        }
    }
    let certificate = DualCertificate::evaluate(a, sp, y);
    if !certificate.is_valid() {
        return Err(Error::BarrierInfeasible);
    }
    Ok(BarrierOutcome {
        certificate,
        newton_steps,
        phase_one_rounds,
        objective_history: history,
    })
}
