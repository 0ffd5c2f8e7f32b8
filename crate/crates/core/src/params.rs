//! Heun parameter records and their validation.
//!
//! The general Heun equation
//!
//! ```text
//! u'' + (γ/z + δ/(z−1) + ε/(z−a)) u' + (αβz − q) / (z(z−1)(z−a)) u = 0
//! ```
//!
//! carries seven real parameters tied together by the Fuchsian relation
//! `1 + α + β = γ + δ + ε`. A [`ValidatedHeunParams`] can only be obtained
//! through [`validate_params`], so downstream code never re-checks the
//! relation or the distinctness of the singular points.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance (scaled by parameter magnitude) for the Fuchsian relation.
pub const FUCHSIAN_TOL: f64 = 1e-12;

/// A value closer than this to a non-positive integer counts as one.
pub const INTEGER_PROXIMITY: f64 = 1e-9;

/// Returns `Some(k)` when `x` is within [`INTEGER_PROXIMITY`] of the
/// non-positive integer `k`.
pub fn nonpositive_integer(x: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() < INTEGER_PROXIMITY && r <= 0.0 {
        Some(r as i64)
    } else {
        None
    }
}

pub fn is_nonpositive_integer(x: f64) -> bool {
    nonpositive_integer(x).is_some()
}

/// The seven parameters of the general Heun equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeunParams {
    pub a: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl HeunParams {
    /// Builds a parameter set with δ taken from the Fuchsian relation.
    pub fn with_fuchsian_delta(a: f64, q: f64, alpha: f64, beta: f64, gamma: f64, epsilon: f64) -> Self {
        Self {
            a,
            q,
            alpha,
            beta,
            gamma,
            delta: delta_from_fuchsian(alpha, beta, gamma, epsilon),
            epsilon,
        }
    }

    /// γ + ε, the lower parameter of the leading hypergeometric term.
    pub fn gamma_epsilon(&self) -> f64 {
        self.gamma + self.epsilon
    }

    /// `(1 + α + β) − (γ + δ + ε)`.
    pub fn fuchsian_defect(&self) -> f64 {
        1.0 + self.alpha + self.beta - self.gamma - self.delta - self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IssueCode {
    FuchsianViolated,
    DegenerateSingularity,
    ForbiddenIntegerParameter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub code: IssueCode,
    pub detail: String,
    pub offending_value: f64,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {} ({})", self.code, self.detail, self.offending_value)
    }
}

/// Parameters that passed [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidatedHeunParams(HeunParams);

impl ValidatedHeunParams {
    pub fn get(&self) -> &HeunParams {
        &self.0
    }

    pub fn into_inner(self) -> HeunParams {
        self.0
    }

    /// Returns a copy with a different accessory parameter. `q` does not
    /// enter any of the validity conditions, so no re-validation is needed.
    pub fn with_q(&self, q: f64) -> Self {
        Self(HeunParams { q, ..self.0 })
    }
}

impl Deref for ValidatedHeunParams {
    type Target = HeunParams;

    fn deref(&self) -> &HeunParams {
        &self.0
    }
}

impl TryFrom<HeunParams> for ValidatedHeunParams {
    type Error = Error;

    fn try_from(p: HeunParams) -> Result<Self> {
        validate_params(&p).map_err(Error::Invalid)
    }
}

/// Checks the Fuchsian relation, distinct singular points and the
/// non-positive-integer exclusions on α, β and γ+ε. Every violated condition
/// is reported.
pub fn validate_params(p: &HeunParams) -> std::result::Result<ValidatedHeunParams, Vec<ValidationIssue>> {
    let mut issues = Vec::new();

    let fields = [p.a, p.q, p.alpha, p.beta, p.gamma, p.delta, p.epsilon];
    if fields.iter().any(|x| !x.is_finite()) {
        issues.push(ValidationIssue {
            code: IssueCode::FuchsianViolated,
            detail: "parameters must be finite".into(),
            offending_value: f64::NAN,
        });
        return Err(issues);
    }

    let scale = 1.0 + p.alpha.abs() + p.beta.abs() + p.gamma.abs() + p.delta.abs() + p.epsilon.abs();
    let defect = p.fuchsian_defect();
    if defect.abs() > FUCHSIAN_TOL * scale {
        issues.push(ValidationIssue {
            code: IssueCode::FuchsianViolated,
            detail: "1 + alpha + beta != gamma + delta + epsilon".into(),
            offending_value: defect,
        });
    }

    for (label, value) in [("a = 0", p.a), ("a = 1", p.a - 1.0)] {
        if value.abs() < INTEGER_PROXIMITY {
            issues.push(ValidationIssue {
                code: IssueCode::DegenerateSingularity,
                detail: format!("{label} merges two singular points"),
                offending_value: p.a,
            });
        }
    }

    for (name, value) in [("alpha", p.alpha), ("beta", p.beta), ("gamma + epsilon", p.gamma_epsilon())] {
        if is_nonpositive_integer(value) {
            issues.push(ValidationIssue {
                code: IssueCode::ForbiddenIntegerParameter,
                detail: format!("{name} is zero or a negative integer"),
                offending_value: value,
            });
        }
    }

    if issues.is_empty() {
        Ok(ValidatedHeunParams(*p))
    } else {
        Err(issues)
    }
}

/// δ implied by the Fuchsian relation: `1 + α + β − γ − ε`.
pub fn delta_from_fuchsian(alpha: f64, beta: f64, gamma: f64, epsilon: f64) -> f64 {
    1.0 + alpha + beta - gamma - epsilon
}

/// The parameters a reduction search starts from. δ and ε follow from the
/// order of the reduction and the Fuchsian relation; q is the unknown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeParams {
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl FreeParams {
    pub fn new(a: f64, alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { a, alpha, beta, gamma }
    }

    /// ε fixed by δ = order + 2 and the Fuchsian relation.
    pub fn epsilon_for(&self, order: usize) -> f64 {
        1.0 + self.alpha + self.beta - self.gamma - (order as f64 + 2.0)
    }

    pub fn complete(&self, order: usize, q: f64) -> HeunParams {
        HeunParams {
            a: self.a,
            q,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            delta: order as f64 + 2.0,
            epsilon: self.epsilon_for(order),
        }
    }
}

impl From<&HeunParams> for FreeParams {
    fn from(p: &HeunParams) -> Self {
        Self::new(p.a, p.alpha, p.beta, p.gamma)
    }
}

/// On-disk parameter object. `q`, `delta` and `epsilon` may be omitted where
/// a command can derive them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl ParamsFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Domain(format!("parameter file: {e}")))
    }

    pub fn free(&self) -> FreeParams {
        FreeParams::new(self.a, self.alpha, self.beta, self.gamma)
    }

    /// Fills in the missing member of (δ, ε) from the Fuchsian relation. Both
    /// missing is an error because nothing fixes δ.
    pub fn to_params(&self) -> Result<HeunParams> {
        let q = self
            .q
            .ok_or_else(|| Error::PreconditionViolation("parameter file lacks q".into()))?;
        let (delta, epsilon) = match (self.delta, self.epsilon) {
            (Some(d), Some(e)) => (d, e),
            (Some(d), None) => (d, 1.0 + self.alpha + self.beta - self.gamma - d),
            (None, Some(e)) => (delta_from_fuchsian(self.alpha, self.beta, self.gamma, e), e),
            (None, None) => {
                return Err(Error::PreconditionViolation(
                    "parameter file needs delta or epsilon".into(),
                ))
            }
        };
        Ok(HeunParams {
            a: self.a,
            q,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            delta,
            epsilon,
        })
    }

    /// Parameters for a reduction of the given order: δ = order + 2 is filled
    /// in when absent, and any δ or ε present must agree with it.
    pub fn for_reduction(&self, order: usize) -> Result<FreeParams> {
        let target = order as f64 + 2.0;
        let free = self.free();
        if let Some(d) = self.delta {
            if (d - target).abs() > FUCHSIAN_TOL * target {
                return Err(Error::Invalid(vec![ValidationIssue {
                    code: IssueCode::FuchsianViolated,
                    detail: format!("delta must equal N + 2 = {target} for N = {order}"),
                    offending_value: d,
                }]));
            }
        }
        if let Some(e) = self.epsilon {
            let expected = free.epsilon_for(order);
            if (e - expected).abs() > FUCHSIAN_TOL * (1.0 + expected.abs()) {
                return Err(Error::Invalid(vec![ValidationIssue {
                    code: IssueCode::FuchsianViolated,
                    detail: format!("epsilon must be {expected} for delta = {target}"),
                    offending_value: e,
                }]));
            }
        }
        Ok(free)
    }
}
