use std::fmt;

use thiserror::Error;

/// Errors produced by the reduction library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("real Schur iteration did not converge within {iterations} iterations")]
    SchurNonConvergence { iterations: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error(
        "matrix is not Hurwitz: eigenvalue with real part {real_part:e} (tolerance {tolerance:e})"
    )]
    StabilityViolation { real_part: f64, tolerance: f64 },

    #[error("singular matrix equation is inconsistent: defect {defect:e} exceeds {tolerance:e}")]
    InconsistentEquation { defect: f64, tolerance: f64 },

    #[error(
        "expected at most one simple zero eigenvalue, found {found} near-zero eigenvalue block(s)"
    )]
    ZeroEigenvalueMultiplicity { found: usize },

    #[error("matrix is not a weighted Laplacian: {0}")]
    NotALaplacian(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("graph generation failed after {attempts} attempts")]
    GenerationFailure { attempts: usize },

    #[error("network validation failed: {}", DisplayViolations(.0))]
    Validation(Vec<Violation>),

    #[error("pencil s^2 M + s D + L is singular at s = {re} + {im}i")]
    SingularPencil { re: f64, im: f64 },

    #[error("time grid must be strictly increasing (violated at index {index})")]
    Grid { index: usize },

    #[error("H2 norm is unbounded: output does not annihilate the consensus mode (residual {residual:e})")]
    UnboundedNorm { residual: f64 },

    #[error("quadrature horizon too short: tail {tail:e} exceeds {limit:e}")]
    Truncation { tail: f64, limit: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// A single violated structural condition of a second-order network.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveMass {
        index: usize,
        value: f64,
    },
    AsymmetricDamping {
        row: usize,
        col: usize,
        difference: f64,
    },
    DampingNotPositiveDefinite {
        min_eigenvalue: f64,
        threshold: f64,
    },
    AsymmetricStiffness {
        row: usize,
        col: usize,
        difference: f64,
    },
    PositiveStiffnessOffDiagonal {
        row: usize,
        col: usize,
        value: f64,
    },
    NonZeroStiffnessRowSum {
        row: usize,
        sum: f64,
    },
    StiffnessNotSemidefinite {
        min_eigenvalue: f64,
    },
    Disconnected {
        fiedler_value: f64,
        threshold: f64,
    },
    NonFinite {
        matrix: &'static str,
    },
}

/// The structural clause a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    Mass,
    Damping,
    Stiffness,
    Connectivity,
}

impl Clause {
    pub fn label(self) -> &'static str {
        match self {
            Clause::Mass => "mass",
            Clause::Damping => "damping",
            Clause::Stiffness => "stiffness",
            Clause::Connectivity => "connectivity",
        }
    }
}

impl Violation {
    pub fn clause(&self) -> Clause {
        match self {
            Violation::NonPositiveMass { .. } => Clause::Mass,
            Violation::AsymmetricDamping { .. } | Violation::DampingNotPositiveDefinite { .. } => {
                Clause::Damping
            }
            Violation::AsymmetricStiffness { .. }
            | Violation::PositiveStiffnessOffDiagonal { .. }
            | Violation::NonZeroStiffnessRowSum { .. }
            | Violation::StiffnessNotSemidefinite { .. } => Clause::Stiffness,
            Violation::Disconnected { .. } => Clause::Connectivity,
            Violation::NonFinite { matrix } => match *matrix {
                "masses" => Clause::Mass,
                "damping" => Clause::Damping,
                _ => Clause::Stiffness,
            },
        }
    }
}

impl fmt::Display for Violation {
    // Indices are reported 1-based.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveMass { index, value } => {
                write!(f, "mass {} is not positive ({value})", index + 1)
            }
            Violation::AsymmetricDamping { row, col, difference } => write!(
                f,
                "damping is asymmetric at ({}, {}) by {difference:e}",
                row + 1,
                col + 1
            ),
            Violation::DampingNotPositiveDefinite { min_eigenvalue, threshold } => write!(
                f,
                "damping is not positive definite: smallest eigenvalue {min_eigenvalue:e} <= {threshold:e}"
            ),
            Violation::AsymmetricStiffness { row, col, difference } => write!(
                f,
                "stiffness is asymmetric at ({}, {}) by {difference:e}",
                row + 1,
                col + 1
            ),
            Violation::PositiveStiffnessOffDiagonal { row, col, value } => write!(
                f,
                "stiffness off-diagonal ({}, {}) is positive ({value:e})",
                row + 1,
                col + 1
            ),
            Violation::NonZeroStiffnessRowSum { row, sum } => {
                write!(f, "stiffness row {} sums to {sum:e}", row + 1)
            }
            Violation::StiffnessNotSemidefinite { min_eigenvalue } => write!(
                f,
                "stiffness is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}"
            ),
            Violation::Disconnected { fiedler_value, threshold } => write!(
                f,
                "stiffness graph is disconnected: second-smallest eigenvalue {fiedler_value:e} <= {threshold:e}"
            ),
            Violation::NonFinite { matrix } => write!(f, "{matrix} contains non-finite entries"),
        }
    }
}

struct DisplayViolations<'a>(&'a [Violation]);

impl fmt::Display for DisplayViolations<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "[{}] {v}", v.clause().label())?;
        }
        Ok(())
    }
}
