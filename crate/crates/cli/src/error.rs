use l1cert::Error;

use crate::json::Json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Failure of a command, rendered as a JSON error object.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    /// Short stable code such as `"dimension mismatch"`.
    pub code: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn input(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            exit_code: EXIT_INPUT,
        }
    }

    pub fn to_json(&self, command: Option<&str>) -> Json {
        Json::obj().with("command", command).with(
            "error",
            Json::obj()
                .with("code", self.code)
                .with("exit_code", self.exit_code)
                .with("message", self.message.as_str()),
        )
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, exit_code) = match &e {
            Error::DimensionMismatch(_) => ("dimension mismatch", EXIT_INPUT),
            Error::NonFinite(_) => ("non-finite input", EXIT_INPUT),
            Error::IndexOutOfRange { .. } => ("index out of range", EXIT_INPUT),
            Error::InvalidArgument(_) => ("invalid argument", EXIT_INPUT),
            Error::Infeasible => ("infeasible", EXIT_INPUT),
            Error::NotOptimalPoint(_) => ("not optimal", EXIT_INPUT),
            Error::NotBounding { .. } => ("not bounding", EXIT_INPUT),
            Error::Inconsistent { .. } => ("inconsistent system", EXIT_NUMERICAL),
            Error::IterationLimit(_) => ("iteration limit", EXIT_NUMERICAL),
            Error::Numerical(_) => ("numerical failure", EXIT_NUMERICAL),
            Error::NotOptimal(_) => ("lp not optimal", EXIT_NUMERICAL),
            Error::NoEqualitySolution => ("no equality solution", EXIT_NUMERICAL),
            Error::BarrierInfeasible => ("barrier infeasible", EXIT_NUMERICAL),
            Error::Diverged { .. } => ("diverged", EXIT_NUMERICAL),
            Error::StrictificationFailed { .. } => ("strictification failed", EXIT_NUMERICAL),
            Error::NonConvergence { .. } => ("no convergence", EXIT_NUMERICAL),
            Error::GenerationFailed(_) => ("generation failed", EXIT_NUMERICAL),
        };
        Self {
            code,
            message: e.to_string(),
            exit_code,
        }
    }
}
