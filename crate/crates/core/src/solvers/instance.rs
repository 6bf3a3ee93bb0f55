use crate::linalg::{check_finite, numerical_rank, DenseMatrix};
use crate::{Error, Result};

/// Model tag with its scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    /// `min ||x||_1  s.t.  Ax = b`
    BasisPursuit,
    /// `min 0.5||Ax - b||^2 + lambda ||x||_1`
    PenalizedLs { lambda: f64 },
    /// `min ||x||_1  s.t.  0.5||Ax - b||^2 <= sigma`
    ResidualConstrained { sigma: f64 },
    /// `min 0.5||Ax - b||^2  s.t.  ||x||_1 <= tau`
    L1Constrained { tau: f64 },
}

impl Model {
    /// Builds a model from its CLI name (`bp`, `lasso`, `res-con`, `l1-con`).
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self> {
        let need = |p: Option<f64>| {
            p.ok_or_else(|| Error::InvalidArgument(format!("model {name} needs a parameter")))
        };
        match name {
            "bp" => Ok(Self::BasisPursuit),
            "lasso" => Ok(Self::PenalizedLs { lambda: need(param)? }),
            "res-con" => Ok(Self::ResidualConstrained { sigma: need(param)? }),
            "l1-con" => Ok(Self::L1Constrained { tau: need(param)? }),
            other => Err(Error::InvalidArgument(format!("unknown model {other}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BasisPursuit => "bp",
            Self::PenalizedLs { .. } => "lasso",
            Self::ResidualConstrained { .. } => "res-con",
            Self::L1Constrained { .. } => "l1-con",
        }
    }

    pub fn param(&self) -> Option<f64> {
        match *self {
            Self::BasisPursuit => None,
            Self::PenalizedLs { lambda } => Some(lambda),
            Self::ResidualConstrained { sigma } => Some(sigma),
            Self::L1Constrained { tau } => Some(tau),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub model: Model,
    a: DenseMatrix,
    b: Vec<f64>,
    full_row_rank: bool,
}

impl ProblemInstance {
    pub fn new(model: Model, a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{} but b has length {}",
                a.rows(),
                a.cols(),
                b.len()
            )));
        }
        check_finite(&b, "b")?;
        if let Some(p) = model.param() {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "model parameter must be positive, got {p}"
                )));
            }
        }
        let full_row_rank = numerical_rank(&a) == a.rows();
        Ok(Self {
            model,
            a,
            b,
            full_row_rank,
        })
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Whether `A` has full row rank. Verdicts on rank-deficient `A` are
    /// still computed but the equivalence theorems assume full row rank.
    pub fn is_full_row_rank(&self) -> bool {
        self.full_row_rank
    }
}
