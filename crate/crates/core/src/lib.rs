//! Solutions of the general Heun equation as series of Gauss hypergeometric
//! functions whose coefficients satisfy two-term recurrences.
//!
//! The pipeline runs from validated parameters ([`params`]) through the
//! constraint solvers ([`reduction`]) to coefficient streams ([`recurrence`])
//! and summation ([`evaluator`]); [`oracle`] supplies an independent power
//! series for certification.

pub mod error;
pub mod evaluator;
pub mod oracle;
pub mod params;
pub mod poly;
pub mod recurrence;
pub mod reduction;
pub mod special;

pub use error::{Error, Result};
pub use evaluator::{evaluate_expansion, evaluate_expansion_deriv, ode_residual, EvalControl, EvalRow};
pub use oracle::{cross_check, frobenius_coefficients, frobenius_eval, FrobeniusSeries};
pub use params::{validate_params, FreeParams, HeunParams, ParamsFile, ValidatedHeunParams};
pub use recurrence::{closed_form_coefficients, three_term_coefficients, two_term_coefficients, CoefficientStream};
pub use reduction::{reduce, Ansatz, CandidateSet, ReductionCase, SeedGrid};
pub use special::{gauss_2f1, gauss_2f1_deriv, pochhammer, EvalResult, EvalStatus, SeriesControl};

/// Shortest round-trip decimal form of a float, used for all text output.
pub fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}
