//! The four l1 models, their KKT conditions, and the reduction of an optimal
//! point to an equivalent basis-pursuit problem.
//!
//! Losses are least squares throughout: `f(r) = 0.5 * ||r||^2`, so the
//! gradient at the residual `r = Ax - b` is `r` itself. [`kkt_report`] is the
//! single place that depends on this choice.

mod bp;
mod instance;
mod kkt;
mod lasso;

pub use bp::{bp_split_matrix, solve_bp, BpSolution};
pub use instance::{Model, ProblemInstance};
pub use kkt::{kkt_report, reduce_to_bp, BpReduction, KktReport};
pub use lasso::{lasso_objective, solve_lasso, soft_threshold, LassoOptions, LassoSolution};
