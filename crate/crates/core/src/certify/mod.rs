//! Deciding the uniqueness condition for a matrix, support and sign pattern.
//!
//! The condition holds when `A_I` has full column rank and some `y` satisfies
//! `A_I^T y = s` and `|a_i^T y| < 1` for all `i` outside `I`. Three engines
//! search for such a `y`:
//!
//! * [`certificate_lp`] maximises the margin `1 - max |a_i^T y|` exactly with
//!   the simplex solver. It is the deciding engine.
//! * [`certificate_barrier`] minimises the log barrier
//!   `-sum log(1 - a_i^T y) + log(1 + a_i^T y)` over the affine set with
//!   Newton's method.
//! * [`certificate_admm`] splits `z = A_{I^c}^T y` and runs ADMM, whose
//!   `z`-step is a scalar cubic per coordinate.
//!
//! The barrier and ADMM engines can only confirm; a failure from them is
//! reported as indeterminate with a recommendation to cross-check with LP.
//! [`strictify`] turns an optimal but degenerate basis-pursuit dual into a
//! strict certificate by an LP perturbation.

mod admm;
mod barrier;
mod lp;
mod strictify;

pub use admm::{certificate_admm, cubic_z_update, AdmmOutcome, ADMM_DIVERGENCE_BOUND, ADMM_MAX_ITERS};
pub use barrier::{certificate_barrier, BarrierOutcome};
pub use lp::{certificate_lp, MaxMargin};
pub use strictify::{default_alpha, strictify, PerturbationCase, StrictifyOutcome, STRICTIFY_HALVINGS};

use crate::linalg::{numerical_rank, DenseMatrix};
use crate::{tol, Error, Result};

/// Below this the max-margin LP optimum is read as zero.
pub const LP_ZERO_MARGIN: f64 = 1e-9;

/// Sorted support `I` with signs `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPattern {
    indices: Vec<usize>,
    signs: Vec<f64>,
}

impl SupportPattern {
    /// Validates that indices are strictly increasing and below `n`, and
    /// that every sign is `+1` or `-1`.
    pub fn new(indices: Vec<usize>, signs: Vec<f64>, n: usize) -> Result<Self> {
        if indices.len() != signs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} support indices but {} signs",
                indices.len(),
                signs.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, cols: n });
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "support must be sorted and duplicate-free".into(),
            ));
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::InvalidArgument("signs must be +1 or -1".into()));
        }
        Ok(Self { indices, signs })
    }

    /// `I = supp(x)` and `s = sign(x_I)` under the crate support threshold.
    pub fn from_point(x: &[f64]) -> Self {
        let indices = crate::support(x);
        let signs = indices.iter().map(|&i| x[i].signum()).collect();
        Self { indices, signs }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `I^c` within `0..n`.
    pub fn complement(&self, n: usize) -> Vec<usize> {
        let mut k = 0;
        (0..n)
            .filter(|&i| {
                if k < self.indices.len() && self.indices[k] == i {
                    k += 1;
                    false
                } else {
                    true
                }
            })
            .collect()
    }

    fn check_against(&self, a: &DenseMatrix) -> Result<()> {
        match self.indices.last() {
            Some(&i) if i >= a.cols() => Err(Error::IndexOutOfRange {
                index: i,
                cols: a.cols(),
            }),
            _ => Ok(()),
        }
    }
}

/// A candidate `y` with its two defining quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub y: Vec<f64>,
    /// `||A_I^T y - s||_inf`.
    pub eq_residual: f64,
    /// `1 - max_{i not in I} |a_i^T y|`; infinite when `I^c` is empty.
    pub margin: f64,
}

impl DualCertificate {
    /// Recomputes both quantities from scratch.
    pub fn evaluate(a: &DenseMatrix, sp: &SupportPattern, y: Vec<f64>) -> Self {
        assert_eq!(y.len(), a.rows(), "certificate length must equal rows of A");
        let corr = a.tr_mul_vec(&y);
        let eq_residual = sp
            .indices()
            .iter()
            .zip(sp.signs())
            .map(|(&i, s)| (corr[i] - s).abs())
            .fold(0.0, f64::max);
        let margin = sp
            .complement(a.cols())
            .iter()
            .map(|&i| 1.0 - corr[i].abs())
            .fold(f64::INFINITY, f64::min);
        Self {
            y,
            eq_residual,
            margin,
        }
    }

    /// `eq_residual <= 1e-8` and `margin >= 1e-6`.
    pub fn is_valid(&self) -> bool {
        self.eq_residual <= tol::EQ_RESIDUAL && self.margin >= tol::STRICT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Lp,
    Barrier,
    Admm,
}

impl Engine {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "lp" => Ok(Self::Lp),
            "barrier" => Ok(Self::Barrier),
            "admm" => Ok(Self::Admm),
            other => Err(Error::InvalidArgument(format!("unknown engine {other}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Lp => "lp",
            Self::Barrier => "barrier",
            Self::Admm => "admm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionStatus {
    Holds,
    Fails,
    Indeterminate,
}

/// Why a condition check failed or was inconclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionReason {
    RankDeficient,
    NoEqualitySolution,
    NoStrictCertificate,
    BorderlineMargin,
    EngineInconclusive,
}

impl ConditionReason {
    pub fn code(&self) -> &'static str {
        match self {
            Self::RankDeficient => "rank deficient",
            Self::NoEqualitySolution => "no equality solution",
            Self::NoStrictCertificate => "no strict certificate",
            Self::BorderlineMargin => "borderline margin",
            Self::EngineInconclusive => "engine inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition1Outcome {
    pub status: ConditionStatus,
    pub engine: Engine,
    pub rank: usize,
    pub full_column_rank: bool,
    /// Exact max-margin optimum; only the LP engine computes it.
    pub max_margin: Option<f64>,
    pub certificate: Option<DualCertificate>,
    pub reason: Option<ConditionReason>,
    /// Set when an iterative engine failed; only the LP engine is decisive.
    pub cross_check_recommended: bool,
    /// Newton steps (barrier), iterations (ADMM) or 0 (LP).
    pub iterations: usize,
}

impl Condition1Outcome {
    pub fn holds(&self) -> bool {
        self.status == ConditionStatus::Holds
    }
}

/// Checks full column rank of `A_I` and the existence of a strict certificate.
pub fn check_condition1(a: &DenseMatrix, sp: &SupportPattern, engine: Engine) -> Result<Condition1Outcome> {
    sp.check_against(a)?;
    let mut out = Condition1Outcome {
        status: ConditionStatus::Holds,
        engine,
        rank: 0,
        full_column_rank: true,
        max_margin: None,
        certificate: None,
        reason: None,
        cross_check_recommended: false,
        iterations: 0,
    };
    if sp.is_empty() {
        // Vacuous: y = 0 gives ||A^T y||_inf = 0 < 1.
        out.certificate = Some(DualCertificate::evaluate(a, sp, vec![0.0; a.rows()]));
        if engine == Engine::Lp {
            out.max_margin = Some(if a.cols() == 0 { f64::INFINITY } else { 1.0 });
        }
        return Ok(out);
    }

    out.rank = numerical_rank(&a.column_submatrix(sp.indices())?);
    out.full_column_rank = out.rank == sp.len();
    if !out.full_column_rank {
        out.status = ConditionStatus::Fails;
        out.reason = Some(ConditionReason::RankDeficient);
        return Ok(out);
    }

    match engine {
        Engine::Lp => match certificate_lp(a, sp) {
            Ok(mm) => {
                out.max_margin = Some(mm.epsilon);
                if mm.epsilon >= tol::STRICT && mm.certificate.is_valid() {
                    out.certificate = Some(mm.certificate);
                } else if mm.epsilon <= LP_ZERO_MARGIN {
                    out.status = ConditionStatus::Fails;
                    out.reason = Some(ConditionReason::NoStrictCertificate);
                } else {
                    out.status = ConditionStatus::Indeterminate;
                    out.reason = Some(ConditionReason::BorderlineMargin);
                }
            }
            Err(Error::NoEqualitySolution) => {
                out.status = ConditionStatus::Fails;
                out.reason = Some(ConditionReason::NoEqualitySolution);
            }
            Err(e) => return Err(e),
        },
        Engine::Barrier => match certificate_barrier(a, sp, None) {
            Ok(b) => {
                out.iterations = b.newton_steps;
                out.certificate = Some(b.certificate);
            }
            Err(Error::BarrierInfeasible | Error::NoEqualitySolution) => {
                out.status = ConditionStatus::Indeterminate;
                out.reason = Some(ConditionReason::EngineInconclusive);
                out.cross_check_recommended = true;
            }
            Err(e) => return Err(e),
        },
        Engine::Admm => match certificate_admm(a, sp, 1.0, ADMM_MAX_ITERS) {
            Ok(r) => {
                out.iterations = r.iterations;
                out.certificate = Some(r.certificate);
            }
            Err(Error::Diverged { iterations }) => {
                out.iterations = iterations;
                out.status = ConditionStatus::Indeterminate;
                out.reason = Some(ConditionReason::EngineInconclusive);
                out.cross_check_recommended = true;
            }
            Err(Error::NoEqualitySolution) => {
                out.status = ConditionStatus::Indeterminate;
                out.reason = Some(ConditionReason::EngineInconclusive);
                out.cross_check_recommended = true;
            }
            Err(e) => return Err(e),
        },
    }
    Ok(out)
}

/// `A_I`, `A_{I^c}` and the index list of `I^c`.
pub(crate) struct Blocks {
    pub support: DenseMatrix,
    pub off: DenseMatrix,
    pub off_idx: Vec<usize>,
}

impl Blocks {
    pub fn new(a: &DenseMatrix, sp: &SupportPattern) -> Result<Self> {
        sp.check_against(a)?;
        let off_idx = sp.complement(a.cols());
        Ok(Self {
            support: a.column_submatrix(sp.indices())?,
            off: a.column_submatrix(&off_idx)?,
            off_idx,
        })
    }

    /// Least-norm solution of `A_I^T y = s`.
    pub fn equality_point(&self, sp: &SupportPattern) -> Result<Vec<f64>> {
        crate::linalg::least_norm_solution(&self.support.transpose(), sp.signs())
            .map_err(|e| match e {
                Error::Inconsistent { .. } => Error::NoEqualitySolution,
                other => other,
            })
    }
}
