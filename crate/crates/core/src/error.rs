use thiserror::Error;

use crate::params::ValidationIssue;

/// Everything that can go wrong below the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {}", format_issues(.0))]
    Invalid(Vec<ValidationIssue>),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("series did not converge within {max_terms} terms (last term {last_term:e})")]
    NonConvergence { max_terms: usize, last_term: f64 },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("no real root: {0}")]
    NoRealRoot(String),

    #[error("degenerate constraint: {0}")]
    DegenerateConstraint(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("no solution found after {seeds} seeds (best residual {best_residual:e})")]
    NoSolutionFound { seeds: usize, best_residual: f64 },

    #[error("singular jacobian")]
    JacobianSingular,

    #[error("z = {0} coincides with a singular point")]
    SingularPoint(f64),

    #[error("not a two-term reduction: {0}")]
    NotAReduction(String),
}

fn format_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
