//! Uniqueness certificates for l1-minimization.
//!
//! Given a solution `x*` of basis pursuit, the Lasso, the residual-constrained
//! or the l1-constrained least-squares problem, this crate decides whether
//! `x*` is the unique solution. With `I = supp(x*)` and `s = sign(x*_I)` the
//! answer is "unique" exactly when `A_I` has full column rank and some `y`
//! satisfies `A_I^T y = s` with `|a_i^T y| < 1` for every `i` outside `I`.
//!
//! Every positive verdict carries such a `y` (a [`certify::DualCertificate`])
//! and every negative verdict carries a second optimal point or a null-space
//! direction, so results can be re-validated without trusting the solver.
//!
//! All indices are 0-based.

pub mod certify;
pub mod error;
pub mod generator;
pub mod linalg;
pub mod oracle;
pub mod simplex;
pub mod solvers;
pub mod uniqueness;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;

/// Numerical thresholds shared across modules.
pub mod tol {
    /// Absolute primal/dual feasibility tolerance of the simplex solver.
    pub const FEAS: f64 = 1e-9;
    /// Relative duality-gap tolerance of the simplex solver.
    pub const GAP: f64 = 1e-8;
    /// Minimum margin for `|a_i^T y| < 1` to count as strict.
    pub const STRICT: f64 = 1e-6;
    /// Maximum `||A_I^T y - s||_inf` of a valid certificate.
    pub const EQ_RESIDUAL: f64 = 1e-8;
    /// Relative support threshold: `|x_i| > SUPPORT * max(1, ||x||_inf)`.
    pub const SUPPORT: f64 = 1e-8;
    /// Relative tolerance for equicorrelation / active-set membership.
    pub const ACTIVE: f64 = 1e-6;
    /// Default KKT stationarity tolerance.
    pub const KKT: f64 = 1e-6;
    /// Face widths at or below this are treated as zero by the oracle.
    pub const FACE_WIDTH: f64 = 1e-7;
}

/// Indices `i` with `|x_i| > tol::SUPPORT * max(1, ||x||_inf)`.
pub fn support(x: &[f64]) -> Vec<usize> {
    let scale = linalg::norm_inf(x).max(1.0);
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tol::SUPPORT * scale)
        .map(|(i, _)| i)
        .collect()
}
