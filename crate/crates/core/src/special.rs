//! Gauss hypergeometric and rising-factorial kernels.
//!
//! ```text
//! ₂F₁(a, b; c; z) = Σ_n (a)_n (b)_n / ((c)_n n!) zⁿ,   |z| < 1
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::is_nonpositive_integer;

/// Truncation rule shared by every series in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
    /// Number of successive terms that must fall below `rel_tol × |sum|`.
    pub consecutive_small: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { rel_tol: 1e-14, max_terms: 10_000, consecutive_small: 3 }
    }
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize, consecutive_small: usize) -> Result<Self> {
        if rel_tol.is_nan() || rel_tol <= 0.0 || max_terms == 0 || consecutive_small == 0 {
            return Err(Error::Domain(format!(
                "series control needs rel_tol > 0, max_terms >= 1, consecutive_small >= 1 \
                 (got {rel_tol}, {max_terms}, {consecutive_small})"
            )));
        }
        Ok(Self { rel_tol, max_terms, consecutive_small })
    }

    /// Same control with the relative tolerance scaled by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol * factor, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EvalStatus {
    Converged,
    MaxTermsReached,
}

/// A summed series value with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalResult {
    pub value: f64,
    pub terms_used: usize,
    /// Magnitude of the neglected remainder as estimated by the summation
    /// rule (last included term, or the extrapolation difference).
    pub tail_estimate: f64,
    pub status: EvalStatus,
}

/// Values below this are treated as zero when judging relative convergence.
pub const ABSOLUTE_FLOOR: f64 = 1e-280;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Rising factorial `(x)_n = x (x+1) ⋯ (x+n−1)`, with `(x)_0 = 1`.
pub fn pochhammer(x: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (x + k as f64))
}

/// `₂F₁(a, b; c; z)` by direct summation inside the unit disk.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64, ctl: &SeriesControl) -> Result<EvalResult> {
    if !z.is_finite() || z.abs() >= 1.0 {
        return Err(Error::Domain(format!("2F1 series needs |z| < 1, got z = {z}")));
    }
    if is_nonpositive_integer(c) {
        return Err(Error::Pole(format!("2F1 lower parameter c = {c} is a non-positive integer")));
    }

    let mut sum = CompensatedSum::default();
    sum.add(1.0);
    let mut term = 1.0_f64;
    let mut small_run = 0;
    for k in 0..ctl.max_terms {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum.add(term);
        let total = sum.value();
        if !total.is_finite() {
            return Err(Error::NonFinite { index: k + 1 });
        }
        if term.abs() <= ctl.rel_tol * total.abs().max(ABSOLUTE_FLOOR) {
            small_run += 1;
            if small_run >= ctl.consecutive_small {
                return Ok(EvalResult {
                    value: total,
                    terms_used: k + 2,
                    tail_estimate: term.abs(),
                    status: EvalStatus::Converged,
                });
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence { max_terms: ctl.max_terms, last_term: term.abs() })
}

/// First or second z-derivative of `₂F₁(a, b; c; z)` via
/// `d/dz ₂F₁(a,b;c;z) = (ab/c) ₂F₁(a+1,b+1;c+1;z)`.
pub fn gauss_2f1_deriv(a: f64, b: f64, c: f64, z: f64, order: u8, ctl: &SeriesControl) -> Result<f64> {
    if is_nonpositive_integer(c) {
        return Err(Error::Pole(format!("2F1 lower parameter c = {c} is a non-positive integer")));
    }
    match order {
        1 => Ok(a * b / c * gauss_2f1(a + 1.0, b + 1.0, c + 1.0, z, ctl)?.value),
        2 => {
            let prefactor = a * b / c * ((a + 1.0) * (b + 1.0) / (c + 1.0));
            Ok(prefactor * gauss_2f1(a + 2.0, b + 2.0, c + 2.0, z, ctl)?.value)
        }
        _ => Err(Error::Domain(format!("derivative order must be 1 or 2, got {order}"))),
    }
}
