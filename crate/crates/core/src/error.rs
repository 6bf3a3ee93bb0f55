use crate::simplex::LpStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("column index {index} out of range for {cols} columns")]
    IndexOutOfRange { index: usize, cols: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A linear system `My = c` has no solution.
    #[error("inconsistent linear system (residual {residual:e})")]
    Inconsistent { residual: f64 },
    #[error("problem is infeasible")]
    Infeasible,
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("LP solution is not optimal (status {0:?})")]
    NotOptimal(LpStatus),
    /// `A_I^T y = s` has no solution.
    #[error("no solution of the certificate equality system")]
    NoEqualitySolution,
    #[error("barrier method found no strictly feasible point")]
    BarrierInfeasible,
    #[error("ADMM diverged after {iterations} iterations")]
    Diverged { iterations: usize },
    #[error("strictification failed after {attempts} attempts")]
    StrictificationFailed { attempts: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        best: Vec<f64>,
        iterations: usize,
        residual: f64,
    },
    /// The supplied point violates an optimality condition.
    #[error("point is not optimal: {0}")]
    NotOptimalPoint(String),
    /// `||x*||_1 < tau`: the l1 constraint is not bounding at the point.
    #[error("l1 constraint is not active (||x||_1 = {l1}, tau = {tau})")]
    NotBounding { l1: f64, tau: f64 },
    #[error("instance generation failed: {0}")]
    GenerationFailed(String),
}
