//! Random instances with a known uniqueness verdict.
//!
//! Unique instances come from a dual point found by alternating projections
//! between the affine set `{A_I^T y = s}` and the slab
//! `{|a_i^T y| <= 1 - delta, i not in I}`: any `x*` with support `I` and
//! signs `s` is then the unique basis-pursuit solution for `b = A x*`.
//! Non-unique instances replace one off-support column by `A_I beta` with
//! `beta^T s = +-1`, which pins `a_i^T y` to `+-1` on the whole affine set.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::certify::{check_condition1, DualCertificate, SupportPattern};
use crate::linalg::{dot, norm_inf, Cholesky, DenseMatrix};
use crate::oracle::oracle_unique;
use crate::solvers::{Model, ProblemInstance};
use crate::{Error, Result};

/// Fresh draws before giving up.
pub const MAX_REDRAWS: usize = 20;
/// Alternating-projection iterations per draw.
pub const MAX_PROJECTION_ITERS: usize = 2_000;
/// Both projection residuals must fall below this.
pub const PROJECTION_TOL: f64 = 1e-9;
const HILDRETH_SWEEPS: usize = 500;
/// Gaps above this that stop shrinking mean the two sets are disjoint.
const STALL_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    /// i.i.d. `N(0, 1/m)` entries.
    Gaussian,
    /// `[I_m | G]` with `G` Gaussian as above; needs `n >= m`.
    PartialIdentity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub seed: u64,
    pub ensemble: Ensemble,
}

impl GeneratorSpec {
    pub fn new(m: usize, n: usize, k: usize, delta: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            m,
            n,
            k,
            delta,
            seed,
            ensemble: Ensemble::Gaussian,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_ensemble(mut self, ensemble: Ensemble) -> Result<Self> {
        self.ensemble = ensemble;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidArgument("m and n must be positive".into()));
        }
        if self.k > self.m.min(self.n) {
            return Err(Error::InvalidArgument(format!(
                "k = {} exceeds min(m, n) = {}",
                self.k,
                self.m.min(self.n)
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.ensemble == Ensemble::PartialIdentity && self.n < self.m {
            return Err(Error::InvalidArgument("partial identity needs n >= m".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub x_star: Vec<f64>,
    /// Dual point with `A_I^T y = s` and `||A^T y||_inf <= 1`; strict for
    /// unique instances, touching `+-1` for non-unique ones.
    pub certificate: DualCertificate,
    pub support: SupportPattern,
    /// Draws discarded before this one.
    pub redraws: usize,
}

impl GeneratedInstance {
    pub fn bp_instance(&self) -> ProblemInstance {
        ProblemInstance::new(Model::BasisPursuit, self.a.clone(), self.b.clone())
            .expect("generated dimensions are consistent")
    }
}

/// Outcome of [`alternating_projection`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRun {
    pub y: Vec<f64>,
    pub converged: bool,
    /// Distances between consecutive iterates, alternating slab and affine
    /// steps. Non-increasing for projections onto two convex sets.
    pub gaps: Vec<f64>,
}

fn draw_matrix(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let normal = Normal::new(0.0, 1.0 / (spec.m as f64).sqrt()).expect("valid deviation");
    let mut a = DenseMatrix::zeros(spec.m, spec.n);
    for i in 0..spec.m {
        for j in 0..spec.n {
            let v = match spec.ensemble {
                Ensemble::PartialIdentity if j < spec.m => f64::from(u8::from(i == j)),
                _ => rng.sample(normal),
            };
            a.set(i, j, v);
        }
    }
    a
}

fn draw_pattern(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> SupportPattern {
    let mut idx = sample(rng, spec.n, spec.k).into_vec();
    idx.sort_unstable();
    let signs = idx
        .iter()
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    SupportPattern::new(idx, signs, spec.n).expect("sampled pattern is valid")
}

fn draw_point(sp: &SupportPattern, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (&i, s) in sp.indices().iter().zip(sp.signs()) {
        x[i] = s * rng.random_range(0.5..1.5);
    }
    x
}

/// Projection onto `{y : A_I^T y = s}` through the normal equations of `A_I`.
struct AffineProjector {
    ai: DenseMatrix,
    chol: Cholesky,
    s: Vec<f64>,
}

impl AffineProjector {
    fn new(ai: DenseMatrix, s: &[f64]) -> Option<Self> {
        let gram = ai.transpose().matmul(&ai).ok()?;
        let chol = Cholesky::new(&gram).ok()?;
        Some(Self {
            ai,
            chol,
            s: s.to_vec(),
        })
    }

    fn project(&self, y: &[f64]) -> Vec<f64> {
        let h: Vec<f64> = self
            .ai
            .tr_mul_vec(y)
            .iter()
            .zip(&self.s)
            .map(|(v, s)| v - s)
            .collect();
        let c = self.chol.solve(&h);
        let d = self.ai.mul_vec(&c);
        y.iter().zip(&d).map(|(a, b)| a - b).collect()
    }
}

/// Exact projection onto `{y : |a_i^T y| <= c}` for the columns of `cols`
/// by Hildreth's dual coordinate ascent.
fn project_slab(cols: &[Vec<f64>], c: f64, y0: &[f64]) -> Vec<f64> {
    let mut y = y0.to_vec();
    let mut mu = vec![0.0; cols.len()];
    let norms: Vec<f64> = cols.iter().map(|a| dot(a, a)).collect();
    for _ in 0..HILDRETH_SWEEPS {
        let mut change: f64 = 0.0;
        for (i, a) in cols.iter().enumerate() {
            if norms[i] == 0.0 {
                continue;
            }
            let v = dot(a, &y) + mu[i] * norms[i];
            let target = v - v.clamp(-c, c);
            let new = target / norms[i];
            let step = mu[i] - new;
            if step != 0.0 {
                y.iter_mut().zip(a).for_each(|(yi, ai)| *yi += step * ai);
                change = change.max(step.abs() * norms[i].sqrt());
                mu[i] = new;
            }
        }
        if change <= 1e-15 {
            break;
        }
    }
    y
}

/// Alternates projections onto `{A_I^T y = s}` and the slab
/// `{|a_i^T y| <= 1 - delta}` over the columns `off` from the least-norm
/// point of the affine set.
pub fn alternating_projection(
    a: &DenseMatrix,
    sp: &SupportPattern,
    off: &[usize],
    delta: f64,
    max_iters: usize,
) -> Result<ProjectionRun> {
    let ai = a.column_submatrix(sp.indices())?;
    let proj = AffineProjector::new(ai, sp.signs())
        .ok_or_else(|| Error::GenerationFailed("support columns are linearly dependent".into()))?;
    let cols: Vec<Vec<f64>> = off.iter().map(|&j| a.column(j)).collect();
    let bound = 1.0 - delta;
    let mut y = proj.project(&vec![0.0; a.rows()]);
    let mut gaps = Vec::new();
    for _ in 0..max_iters {
        let slab_violation = cols
            .iter()
            .map(|c| dot(c, &y).abs() - bound)
            .fold(0.0, f64::max);
        if slab_violation <= PROJECTION_TOL {
            return Ok(ProjectionRun {
                y,
                converged: true,
                gaps,
            });
        }
        let ys = project_slab(&cols, bound, &y);
        gaps.push(dist(&y, &ys));
        let ya = proj.project(&ys);
        gaps.push(dist(&ys, &ya));
        y = ya;
        // Disjoint sets: the gap settles at their positive distance.
        let g = gaps.len();
        if g > 100 && gaps[g - 1] > STALL_GAP && gaps[g - 51] - gaps[g - 1] <= 1e-9 * gaps[g - 1] {
            break;
        }
    }
    Ok(ProjectionRun {
        y,
        converged: false,
        gaps,
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Draws an instance whose basis-pursuit solution `x*` is unique, with a
/// strict certificate of margin at least `delta`.
pub fn generate_unique(spec: &GeneratorSpec) -> Result<GeneratedInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut last = String::new();
    for redraws in 0..=MAX_REDRAWS {
        let a = draw_matrix(spec, &mut rng);
        let sp = draw_pattern(spec, &mut rng);
        let x_star = draw_point(&sp, spec.n, &mut rng);
        let off = sp.complement(spec.n);
        let y = if sp.is_empty() {
            vec![0.0; spec.m]
        } else {
            let run = match alternating_projection(&a, &sp, &off, spec.delta, MAX_PROJECTION_ITERS) {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            if !run.converged {
                last = "alternating projection did not reach the slab".into();
                continue;
            }
            run.y
        };
        let certificate = DualCertificate::evaluate(&a, &sp, y);
        if !certificate.is_valid() || certificate.margin < spec.delta - PROJECTION_TOL {
            last = format!("certificate margin {:e} below delta", certificate.margin);
            continue;
        }
        if !check_condition1(&a, &sp, crate::certify::Engine::Lp)?.holds() {
            last = "condition check rejected the draw".into();
            continue;
        }
        let b = a.mul_vec(&x_star);
        return Ok(GeneratedInstance {
            a,
            b,
            x_star,
            certificate,
            support: sp,
            redraws,
        });
    }
    Err(Error::GenerationFailed(format!(
        "{} draws failed for m = {}, n = {}, k = {}, delta = {}; last: {last}",
        MAX_REDRAWS + 1,
        spec.m,
        spec.n,
        spec.k,
        spec.delta
    )))
}

/// Draws an instance whose basis-pursuit solution set through `x*` is not a
/// single point. Needs `k >= 1` and `n > k`.
pub fn generate_nonunique(spec: &GeneratorSpec) -> Result<GeneratedInstance> {
    spec.validate()?;
    if spec.k == 0 || spec.n <= spec.k {
        return Err(Error::InvalidArgument(
            "a non-unique instance needs 1 <= k < n".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("valid deviation");
    let mut last = String::new();
    for redraws in 0..=MAX_REDRAWS {
        let mut a = draw_matrix(spec, &mut rng);
        let sp = draw_pattern(spec, &mut rng);
        let x_star = draw_point(&sp, spec.n, &mut rng);
        let mut off = sp.complement(spec.n);
        let i0 = off.remove(rng.random_range(0..off.len()));

        let mut beta: Vec<f64> = (0..spec.k).map(|_| rng.sample(normal)).collect();
        let bs = dot(&beta, sp.signs());
        if bs.abs() < 0.1 {
            last = "beta nearly orthogonal to the signs".into();
            continue;
        }
        let target = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        beta.iter_mut().for_each(|v| *v *= target / bs);
        let ai = a.column_submatrix(sp.indices())?;
        let col = ai.mul_vec(&beta);
        for (i, v) in col.iter().enumerate() {
            a.set(i, i0, *v);
        }

        let run = match alternating_projection(&a, &sp, &off, spec.delta, MAX_PROJECTION_ITERS) {
            Ok(r) => r,
            Err(e) => {
                last = e.to_string();
                continue;
            }
        };
        if !run.converged {
            last = "alternating projection did not reach the slab".into();
            continue;
        }
        let certificate = DualCertificate::evaluate(&a, &sp, run.y);
        if certificate.eq_residual > crate::tol::EQ_RESIDUAL || norm_inf(&a.tr_mul_vec(&certificate.y)) > 1.0 + 1e-9 {
            last = "dual point is not feasible".into();
            continue;
        }
        let b = a.mul_vec(&x_star);
        let inst = ProblemInstance::new(Model::BasisPursuit, a.clone(), b.clone())?;
        if oracle_unique(&inst, &x_star)? {
            last = "oracle found a unique solution".into();
            continue;
        }
        return Ok(GeneratedInstance {
            a,
            b,
            x_star,
            certificate,
            support: sp,
            redraws,
        });
    }
    Err(Error::GenerationFailed(format!(
        "{} draws failed for m = {}, n = {}, k = {}; last: {last}",
        MAX_REDRAWS + 1,
        spec.m,
        spec.n,
        spec.k
    )))
}
