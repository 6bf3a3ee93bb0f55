//! Uniqueness verdicts for a given solution.
//!
//! [`verify_bp`] and [`verify_model`] decide uniqueness of `x*` exactly
//! (up to the certificate margin band). The remaining functions are the
//! cheaper sufficient tests built on the equicorrelation set
//! `J = {i : |a_i^T(b - Ax*)| = lambda}` and the reduced check on the active
//! columns `A_P`.

use crate::certify::{
    check_condition1, Condition1Outcome, ConditionReason, ConditionStatus, DualCertificate, Engine,
    SupportPattern,
};
use crate::linalg::{dot, norm1, norm_inf, null_vector, numerical_rank, sub, DenseMatrix};
use crate::oracle::bp_face_range;
use crate::solvers::{kkt_report, reduce_to_bp, solve_bp, Model, ProblemInstance};
use crate::{support, tol, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictStatus {
    Unique,
    NotUnique,
    Indeterminate,
}

impl VerdictStatus {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Unique => "Unique",
            Self::NotUnique => "NotUnique",
            Self::Indeterminate => "Indeterminate",
        }
    }
}

/// Evidence that `x*` is not the only solution.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// A different optimal point with the same objective.
    SecondPoint(Vec<f64>),
    /// `d != 0` supported on `I` with `A d = 0`; `x* + t d` stays optimal for
    /// small `|t|`.
    NullDirection(Vec<f64>),
}

impl Witness {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::SecondPoint(_) => "second_point",
            Self::NullDirection(_) => "null_direction",
        }
    }

    pub fn vector(&self) -> &[f64] {
        match self {
            Self::SecondPoint(v) | Self::NullDirection(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessVerdict {
    pub status: VerdictStatus,
    pub certificate: Option<DualCertificate>,
    pub witness: Option<Witness>,
    /// Short reason code for anything other than a clean verdict.
    pub reason: Option<&'static str>,
    pub support: Vec<usize>,
    pub signs: Vec<f64>,
    /// Max-margin LP optimum, when it was computed.
    pub max_margin: Option<f64>,
    /// `x* = 0` of a non-basis-pursuit model, decided through the reduction
    /// `b* = 0`.
    pub zero_solution: bool,
}

impl UniquenessVerdict {
    fn new(status: VerdictStatus, sp: &SupportPattern) -> Self {
        Self {
            status,
            certificate: None,
            witness: None,
            reason: None,
            support: sp.indices().to_vec(),
            signs: sp.signs().to_vec(),
            max_margin: None,
            zero_solution: false,
        }
    }

    fn indeterminate(sp: &SupportPattern, reason: &'static str) -> Self {
        Self {
            reason: Some(reason),
            ..Self::new(VerdictStatus::Indeterminate, sp)
        }
    }

    pub fn is_unique(&self) -> bool {
        self.status == VerdictStatus::Unique
    }
}

fn check_dims(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Result<()> {
    if b.len() != a.rows() || x.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, b has length {}, x has length {}",
            a.rows(),
            a.cols(),
            b.len(),
            x.len()
        )));
    }
    Ok(())
}

/// `||Ax - b||_inf <= 1e-8 (1 + ||b||_inf)`.
fn is_feasible(a: &DenseMatrix, b: &[f64], x: &[f64]) -> bool {
    norm_inf(&sub(&a.mul_vec(x), b)) <= tol::EQ_RESIDUAL * (1.0 + norm_inf(b))
}

/// Decides whether `x*` is the unique solution of `min ||x||_1 s.t. Ax = b`,
/// with the LP engine.
pub fn verify_bp(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Result<UniquenessVerdict> {
    verify_bp_with(a, b, x, Engine::Lp)
}

/// [`verify_bp`] with a chosen certificate engine. Only the LP engine can
/// produce `NotUnique`; the others return `Indeterminate` when they fail.
pub fn verify_bp_with(a: &DenseMatrix, b: &[f64], x: &[f64], engine: Engine) -> Result<UniquenessVerdict> {
    check_dims(a, b, x)?;
    let sp = SupportPattern::from_point(x);
    if !is_feasible(a, b, x) {
        return Ok(UniquenessVerdict::indeterminate(&sp, "not feasible"));
    }
    let c1 = check_condition1(a, &sp, engine)?;
    let mut verdict = UniquenessVerdict::new(VerdictStatus::Unique, &sp);
    verdict.max_margin = c1.max_margin;
    match c1.status {
        ConditionStatus::Holds => {
            verdict.certificate = c1.certificate;
            return Ok(verdict);
        }
        ConditionStatus::Indeterminate => {
            verdict.status = VerdictStatus::Indeterminate;
            verdict.reason = Some(if c1.cross_check_recommended {
                "engine inconclusive"
            } else {
                "borderline margin"
            });
            return Ok(verdict);
        }
        ConditionStatus::Fails => {}
    }

    // Condition fails: x* is not the unique solution, provided it is a
    // solution at all.
    let opt = solve_bp(a, b)?;
    let l1 = norm1(x);
    if l1 - opt.objective > tol::KKT * (1.0 + opt.objective) {
        verdict.status = VerdictStatus::Indeterminate;
        verdict.reason = Some("not optimal");
        return Ok(verdict);
    }
    verdict.status = VerdictStatus::NotUnique;
    verdict.reason = c1.reason.map(|r| r.code());
    verdict.witness = witness_for(a, b, x, &sp, &c1)?;
    if verdict.witness.is_none() {
        verdict.status = VerdictStatus::Indeterminate;
        verdict.reason = Some("borderline margin");
    }
    Ok(verdict)
}

fn witness_for(
    a: &DenseMatrix,
    b: &[f64],
    x: &[f64],
    sp: &SupportPattern,
    c1: &Condition1Outcome,
) -> Result<Option<Witness>> {
    if c1.reason == Some(ConditionReason::RankDeficient) {
        let ai = a.column_submatrix(sp.indices())?;
        if let Some(d) = null_vector(&ai) {
            let mut full = vec![0.0; a.cols()];
            for (&i, v) in sp.indices().iter().zip(&d) {
                full[i] = *v;
            }
            return Ok(Some(Witness::NullDirection(full)));
        }
    }
    // The face range's attaining points are optimal; take the one farthest
    // from x*.
    let face = bp_face_range(a, b)?;
    let best = face
        .attaining_points()
        .map(|p| (norm_inf(&sub(p, x)), p))
        .fold(None::<(f64, &Vec<f64>)>, |acc, cur| match acc {
            Some(a) if a.0 >= cur.0 => Some(a),
            _ => Some(cur),
        });
    Ok(best
        .filter(|(dist, _)| *dist > tol::FACE_WIDTH)
        .map(|(_, p)| Witness::SecondPoint(p.clone())))
}

/// Decides uniqueness of `x*` for any of the four models: optimality gate,
/// reduction to basis pursuit with `b* = A x*`, then [`verify_bp`].
pub fn verify_model(inst: &ProblemInstance, x: &[f64]) -> Result<UniquenessVerdict> {
    verify_model_with(inst, x, Engine::Lp)
}

pub fn verify_model_with(inst: &ProblemInstance, x: &[f64], engine: Engine) -> Result<UniquenessVerdict> {
    check_dims(inst.a(), inst.b(), x)?;
    let sp = SupportPattern::from_point(x);
    if inst.model == Model::BasisPursuit {
        // Feasibility plus the condition already implies optimality.
        return verify_bp_with(inst.a(), inst.b(), x, engine);
    }
    let red = match reduce_to_bp(inst, x, tol::KKT) {
        Ok(r) => r,
        Err(Error::NotOptimalPoint(_)) => return Ok(UniquenessVerdict::indeterminate(&sp, "not optimal")),
        Err(Error::NotBounding { .. }) => return Ok(UniquenessVerdict::indeterminate(&sp, "not bounding")),
        Err(e) => return Err(e),
    };
    let mut v = verify_bp_with(&red.a, &red.b_star, x, engine)?;
    v.zero_solution = sp.is_empty();
    Ok(v)
}

/// `J = {i : |a_i^T(b - Ax*)| = lambda}` with the stored correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct EquicorrelationSet {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

/// Members are within relative tolerance `1e-6` of `lambda`.
pub fn equicorrelation(a: &DenseMatrix, b: &[f64], lambda: f64, x: &[f64]) -> Result<EquicorrelationSet> {
    check_dims(a, b, x)?;
    let corr = a.tr_mul_vec(&sub(b, &a.mul_vec(x)));
    let (indices, values) = corr
        .iter()
        .enumerate()
        .filter(|(_, c)| (c.abs() - lambda).abs() <= tol::ACTIVE * lambda)
        .map(|(i, c)| (i, c.abs()))
        .unzip();
    Ok(EquicorrelationSet { indices, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SufficientVerdict {
    Unique,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem4Outcome {
    pub verdict: SufficientVerdict,
    pub equicorrelation: EquicorrelationSet,
    pub rank: usize,
}

fn lasso_gate(a: &DenseMatrix, b: &[f64], lambda: f64, x: &[f64]) -> Result<()> {
    let inst = ProblemInstance::new(Model::PenalizedLs { lambda }, a.clone(), b.to_vec())?;
    if let Some(why) = kkt_report(&inst, x)?.violation(tol::KKT) {
        return Err(Error::NotOptimalPoint(why));
    }
    Ok(())
}

fn rank_of(a: &DenseMatrix, idx: &[usize]) -> Result<usize> {
    Ok(numerical_rank(&a.column_submatrix(idx)?))
}

/// Unique when `A_J` has full column rank; inconclusive otherwise.
pub fn theorem4_sufficient(a: &DenseMatrix, b: &[f64], lambda: f64, x: &[f64]) -> Result<Theorem4Outcome> {
    lasso_gate(a, b, lambda, x)?;
    let j = equicorrelation(a, b, lambda, x)?;
    let rank = rank_of(a, &j.indices)?;
    let verdict = if rank == j.indices.len() {
        SufficientVerdict::Unique
    } else {
        SufficientVerdict::Inconclusive
    };
    Ok(Theorem4Outcome {
        verdict,
        equicorrelation: j,
        rank,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Corollary2Outcome {
    /// `|J| != |I| + 1`.
    NotApplicable { j_len: usize, i_len: usize },
    /// Unique iff `rank(A_J) = |J|`.
    Decided { status: VerdictStatus, rank: usize, j: Vec<usize> },
}

/// When `|J| = |I| + 1`, `x*` is unique iff `A_J` has full column rank.
pub fn corollary2_check(a: &DenseMatrix, b: &[f64], lambda: f64, x: &[f64]) -> Result<Corollary2Outcome> {
    lasso_gate(a, b, lambda, x)?;
    let j = equicorrelation(a, b, lambda, x)?;
    let i_len = support(x).len();
    if j.indices.len() != i_len + 1 {
        return Ok(Corollary2Outcome::NotApplicable {
            j_len: j.indices.len(),
            i_len,
        });
    }
    let rank = rank_of(a, &j.indices)?;
    let status = if rank == j.indices.len() {
        VerdictStatus::Unique
    } else {
        VerdictStatus::NotUnique
    };
    Ok(Corollary2Outcome::Decided {
        status,
        rank,
        j: j.indices,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corollary1Report {
    /// `(b - A_I x*_I) / lambda`.
    pub y: Vec<f64>,
    /// `||A_I^T(b - A_I x*_I) - lambda s||_inf / lambda`.
    pub stationarity_residual: f64,
    /// `||A_{I^c}^T(b - A_I x*_I)||_inf / lambda`; must be below 1.
    pub off_support_max: f64,
    pub rank: usize,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Corollary1Outcome {
    NotApplicable(&'static str),
    Report(Corollary1Report),
}

/// For a square, nonsingular `A_I`, checks the sufficient conditions
/// `A_I^T(b - A_I x*_I) = lambda s` and `||A_{I^c}^T(b - A_I x*_I)||_inf < lambda`.
pub fn corollary1_check(a: &DenseMatrix, b: &[f64], lambda: f64, x: &[f64]) -> Result<Corollary1Outcome> {
    check_dims(a, b, x)?;
    let inst = ProblemInstance::new(Model::PenalizedLs { lambda }, a.clone(), b.to_vec())?;
    if kkt_report(&inst, x)?.violation(tol::KKT).is_some() {
        return Ok(Corollary1Outcome::NotApplicable("not optimal"));
    }
    let sp = SupportPattern::from_point(x);
    if sp.len() != a.rows() {
        return Ok(Corollary1Outcome::NotApplicable("support is not square"));
    }
    let rank = rank_of(a, sp.indices())?;
    if rank != sp.len() {
        return Ok(Corollary1Outcome::NotApplicable("support matrix is singular"));
    }
    let r = sub(b, &a.mul_vec(x));
    let y: Vec<f64> = r.iter().map(|v| v / lambda).collect();
    let cert = DualCertificate::evaluate(a, &sp, y.clone());
    let off_support_max = 1.0 - cert.margin;
    let passes = cert.eq_residual <= tol::KKT && cert.margin >= tol::STRICT;
    Ok(Corollary1Outcome::Report(Corollary1Report {
        y,
        stationarity_residual: cert.eq_residual,
        off_support_max: if off_support_max.is_finite() { off_support_max } else { 0.0 },
        rank,
        passes,
    }))
}

/// Sufficient test from an optimal primal-dual pair of basis pursuit:
/// unique when `J = {i : |a_i^T y*| = 1}` equals `supp(x*)` and `A_J` has
/// full column rank. Anything else is indeterminate, since the converse
/// needs a strictly complementary dual.
pub fn recognize_from_dual(a: &DenseMatrix, b: &[f64], x: &[f64], y: &[f64]) -> Result<UniquenessVerdict> {
    check_dims(a, b, x)?;
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "y has length {}, A has {} rows",
            y.len(),
            a.rows()
        )));
    }
    let corr = a.tr_mul_vec(y);
    let l1 = norm1(x);
    if !is_feasible(a, b, x)
        || norm_inf(&corr) > 1.0 + tol::ACTIVE
        || (dot(b, y) - l1).abs() > tol::KKT * (1.0 + l1)
    {
        return Err(Error::NotOptimalPoint("(x*, y*) is not an optimal pair".into()));
    }
    let sp = SupportPattern::from_point(x);
    let j: Vec<usize> = (0..a.cols())
        .filter(|&i| corr[i].abs() >= 1.0 - tol::ACTIVE)
        .collect();
    if j != sp.indices() {
        return Ok(UniquenessVerdict::indeterminate(&sp, "equicorrelation set exceeds support"));
    }
    if rank_of(a, &j)? != j.len() {
        return Ok(UniquenessVerdict::indeterminate(&sp, "rank deficient"));
    }
    let cert = DualCertificate::evaluate(a, &sp, y.to_vec());
    if !cert.is_valid() {
        return Ok(UniquenessVerdict::indeterminate(&sp, "borderline margin"));
    }
    let mut v = UniquenessVerdict::new(VerdictStatus::Unique, &sp);
    v.certificate = Some(cert);
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveSetKind {
    /// Penalized least squares: `|a_i^T(Ax* - b)| = lambda`.
    P1,
    /// Residual-constrained: `eta |a_i^T(Ax* - b)| = 1`.
    P2,
    /// l1-constrained: `|a_i^T(Ax* - b)| = nu`.
    P3,
}

impl ActiveSetKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::P1 => "P1",
            Self::P2 => "P2",
            Self::P3 => "P3",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
    pub kind: ActiveSetKind,
    /// `lambda`, `eta` or `nu`.
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition2Outcome {
    NotApplicable(&'static str),
    Checked {
        active: ActiveSet,
        /// The condition on `A_P` with `I` renumbered into positions of `P`.
        outcome: Condition1Outcome,
    },
}

impl Condition2Outcome {
    pub fn holds(&self) -> Option<bool> {
        match self {
            Self::NotApplicable(_) => None,
            Self::Checked { outcome, .. } => Some(outcome.holds()),
        }
    }
}

/// Checks the uniqueness condition on the active columns `A_P` only.
pub fn reduced_condition2(inst: &ProblemInstance, x: &[f64]) -> Result<Condition2Outcome> {
    let a = inst.a();
    check_dims(a, inst.b(), x)?;
    if inst.model == Model::BasisPursuit {
        return Ok(Condition2Outcome::NotApplicable("basis pursuit has no active set"));
    }
    let sp = SupportPattern::from_point(x);
    if sp.is_empty() {
        return Ok(Condition2Outcome::NotApplicable("zero solution"));
    }
    let report = kkt_report(inst, x)?;
    if let Some(why) = report.violation(tol::KKT) {
        return Err(Error::NotOptimalPoint(why));
    }
    let g = a.tr_mul_vec(&sub(&a.mul_vec(x), inst.b()));
    let mult = report.multiplier;
    let (kind, member): (ActiveSetKind, Box<dyn Fn(f64) -> bool>) = match inst.model {
        Model::PenalizedLs { lambda } => (
            ActiveSetKind::P1,
            Box::new(move |c: f64| (c.abs() - lambda).abs() <= tol::ACTIVE * lambda),
        ),
        Model::ResidualConstrained { .. } => (
            ActiveSetKind::P2,
            Box::new(move |c: f64| (mult * c.abs() - 1.0).abs() <= tol::ACTIVE),
        ),
        Model::L1Constrained { .. } => (
            ActiveSetKind::P3,
            Box::new(move |c: f64| (c.abs() - mult).abs() <= tol::ACTIVE * mult.max(f64::MIN_POSITIVE)),
        ),
        Model::BasisPursuit => unreachable!(),
    };
    let p: Vec<usize> = (0..a.cols()).filter(|&i| member(g[i])).collect();
    let positions: Vec<usize> = sp
        .indices()
        .iter()
        .map(|i| p.binary_search(i))
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Numerical("support is not contained in the active set".into()))?;
    let sub_sp = SupportPattern::new(positions, sp.signs().to_vec(), p.len())?;
    let outcome = check_condition1(&a.column_submatrix(&p)?, &sub_sp, Engine::Lp)?;
    Ok(Condition2Outcome::Checked {
        active: ActiveSet {
            indices: p,
            kind,
            multiplier: mult,
        },
        outcome,
    })
}
