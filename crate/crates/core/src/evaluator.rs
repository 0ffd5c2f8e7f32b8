//! Summation of `u(z) = Σ c_n ₂F₁(α, β; γ+ε+n; z)` and its derivatives.
//!
//! For the two-term reductions `c_n ~ n⁻²` and `₂F₁(…; γ+ε+n; z) → 1`, so the
//! outer terms decay only algebraically and the partial sums carry an error
//! with an asymptotic expansion in integer powers of `1/M`. The outer series
//! is therefore summed at `M = 16, 32, 64, …` terms and extrapolated to
//! `M → ∞` by Richardson (Neville) extrapolation in `h = 1/M`; the change
//! between successive extrapolants is the tail estimate. Terminating
//! coefficient streams are summed exactly.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt_real;
use crate::recurrence::{closed_form_coefficients, termination_index};
use crate::reduction::Ansatz;
use crate::special::{gauss_2f1, gauss_2f1_deriv, CompensatedSum, EvalResult, EvalStatus, SeriesControl, ABSOLUTE_FLOOR};

/// Distance below which z counts as sitting on a singular point.
pub const SINGULAR_TOL: f64 = 1e-8;

/// Largest n searched for a vanishing coefficient.
pub const TRUNCATION_SEARCH_LIMIT: usize = 500;

const FIRST_LEVEL: usize = 16;
const WINDOW: usize = 7;
const MIN_LEVELS: usize = 3;

/// Outer-series control plus the evaluation-domain guard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalControl {
    pub series: SeriesControl,
    /// Evaluations require `|z| ≤ z_guard` (and always `|z| < 1`).
    pub z_guard: f64,
}

impl Default for EvalControl {
    fn default() -> Self {
        Self { series: SeriesControl::default(), z_guard: 0.95 }
    }
}

impl From<SeriesControl> for EvalControl {
    fn from(series: SeriesControl) -> Self {
        Self { series, ..Self::default() }
    }
}

impl EvalControl {
    pub fn check_z(&self, z: f64) -> Result<()> {
        if !z.is_finite() || z.abs() >= 1.0 || z.abs() > self.z_guard {
            return Err(Error::Domain(format!(
                "expansion is evaluated for |z| <= {} (< 1), got z = {z}",
                self.z_guard
            )));
        }
        Ok(())
    }

    /// Each ₂F₁ is summed to a tenth of the outer tolerance.
    fn inner(&self) -> SeriesControl {
        self.series.tightened(0.1)
    }
}

/// First n with `c_n = 0` from a vanishing Pochhammer factor, if any within
/// the search limit. The expansion is then the finite sum over `n < n₀`.
pub fn detect_truncation(case: &Ansatz) -> Option<usize> {
    termination_index(case.params()).filter(|&n| n <= TRUNCATION_SEARCH_LIMIT)
}

/// `dᵏ/dzᵏ ₂F₁(α, β; γ+ε+n; z)` for k = 0, 1, 2.
fn term_function(case: &Ansatz, n: usize, z: f64, order: u8, ctl: &SeriesControl) -> Result<f64> {
    let p = case.params();
    let c = p.gamma_epsilon() + n as f64;
    match order {
        0 => Ok(gauss_2f1(p.alpha, p.beta, c, z, ctl)?.value),
        _ => gauss_2f1_deriv(p.alpha, p.beta, c, z, order, ctl),
    }
}

/// Neville extrapolation of `(1/M_i, S_i)` to `1/M = 0`.
fn extrapolate(levels: &[(usize, f64)]) -> f64 {
    let h: Vec<f64> = levels.iter().map(|(m, _)| 1.0 / *m as f64).collect();
    let mut p: Vec<f64> = levels.iter().map(|(_, s)| *s).collect();
    let n = p.len();
    for m in 1..n {
        for k in 0..n - m {
            p[k] = (h[k + m] * p[k] - h[k] * p[k + 1]) / (h[k + m] - h[k]);
        }
    }
    p[0]
}

fn sum_series(case: &Ansatz, z: f64, order: u8, ctl: &EvalControl) -> Result<EvalResult> {
    ctl.check_z(z)?;
    let inner = ctl.inner();
    let max_terms = ctl.series.max_terms;

    if let Some(n0) = detect_truncation(case) {
        let coeffs = closed_form_coefficients(case.params(), case.e_list(), n0)?;
        let mut sum = CompensatedSum::default();
        for (n, c) in coeffs.values().iter().enumerate().take(n0) {
            sum.add(c * term_function(case, n, z, order, &inner)?);
        }
        return Ok(EvalResult { value: sum.value(), terms_used: n0, tail_estimate: 0.0, status: EvalStatus::Converged });
    }

    let top = {
        let mut m = FIRST_LEVEL;
        while m * 2 <= max_terms {
            m *= 2;
        }
        m.min(max_terms)
    };
    let coeffs = closed_form_coefficients(case.params(), case.e_list(), top)?;
    let c = coeffs.values();

    let mut sum = CompensatedSum::default();
    let mut levels: Vec<(usize, f64)> = Vec::new();
    let mut previous: Option<f64> = None;
    let mut next_level = FIRST_LEVEL.min(top);
    let mut best = EvalResult { value: 0.0, terms_used: 0, tail_estimate: f64::INFINITY, status: EvalStatus::MaxTermsReached };

    for (n, &cn) in c.iter().enumerate().take(top) {
        sum.add(cn * term_function(case, n, z, order, &inner)?);
        if n + 1 != next_level {
            continue;
        }
        levels.push((next_level, sum.value()));
        let window = &levels[levels.len().saturating_sub(WINDOW)..];
        let value = extrapolate(window);
        if !value.is_finite() {
            return Err(Error::NonFinite { index: n });
        }
        let tail = previous.map_or(f64::INFINITY, |p| (value - p).abs());
        best = EvalResult { value, terms_used: next_level, tail_estimate: tail, status: EvalStatus::MaxTermsReached };
        if levels.len() >= MIN_LEVELS && tail <= ctl.series.rel_tol * value.abs().max(ABSOLUTE_FLOOR) {
            best.status = EvalStatus::Converged;
            return Ok(best);
        }
        previous = Some(value);
        next_level *= 2;
    }
    Ok(best)
}

/// `u(z)` with coefficients from the gamma-ratio closed form.
pub fn evaluate_expansion(case: &Ansatz, z: f64, ctl: &EvalControl) -> Result<EvalResult> {
    sum_series(case, z, 0, ctl)
}

/// `u'(z)` or `u''(z)` by term-wise differentiation.
pub fn evaluate_expansion_deriv(case: &Ansatz, z: f64, order: u8, ctl: &EvalControl) -> Result<EvalResult> {
    if !(1..=2).contains(&order) {
        return Err(Error::Domain(format!("derivative order must be 1 or 2, got {order}")));
    }
    sum_series(case, z, order, ctl)
}

/// Plain partial sum over `n < n_terms`, no extrapolation.
pub fn evaluate_partial(case: &Ansatz, z: f64, n_terms: usize, order: u8, ctl: &EvalControl) -> Result<f64> {
    ctl.check_z(z)?;
    let inner = ctl.inner();
    let coeffs = closed_form_coefficients(case.params(), case.e_list(), n_terms.saturating_sub(1))?;
    let mut sum = CompensatedSum::default();
    for (n, c) in coeffs.values().iter().enumerate().take(n_terms) {
        sum.add(c * term_function(case, n, z, order, &inner)?);
    }
    Ok(sum.value())
}

/// `Σ c_n`, which is `u(0)`.
pub fn coefficient_sum(case: &Ansatz, ctl: &EvalControl) -> Result<EvalResult> {
    evaluate_expansion(case, 0.0, ctl)
}

/// `lim n² c_n`, zero for terminating streams.
///
/// The partial sums of the expansion leave the boundary term
/// `−R_{M+1} c_{M+1} F_M + P_M c_M F_{M+1}` after the recurrence cancels
/// everything else, and it tends to minus this constant. A non-terminating
/// expansion therefore satisfies `z(z−1)(z−a) L[u] = −C` rather than the
/// homogeneous equation.
pub fn asymptotic_constant(case: &Ansatz) -> Result<f64> {
    if detect_truncation(case).is_some() {
        return Ok(0.0);
    }
    let top = 8192;
    let coeffs = closed_form_coefficients(case.params(), case.e_list(), top)?;
    let c = coeffs.values();
    let mut levels = Vec::new();
    let mut n = 64;
    while n <= top {
        levels.push((n, (n * n) as f64 * c[n]));
        n *= 2;
    }
    Ok(extrapolate(&levels))
}

/// `z(z−1)(z−a) u'' + (γ(z−1)(z−a) + δz(z−a) + εz(z−1)) u' + (αβz − q) u`.
pub fn operator_value(case: &Ansatz, z: f64, ctl: &EvalControl) -> Result<f64> {
    let p = case.params();
    let u = evaluate_expansion(case, z, ctl)?.value;
    let du = evaluate_expansion_deriv(case, z, 1, ctl)?.value;
    let d2u = evaluate_expansion_deriv(case, z, 2, ctl)?.value;
    let (zm1, zma) = (z - 1.0, z - p.a);
    Ok(z * zm1 * zma * d2u
        + (p.gamma * zm1 * zma + p.delta * z * zma + p.epsilon * z * zm1) * du
        + (p.alpha * p.beta * z - p.q) * u)
}

/// Value, derivatives and scale-free ODE residual at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalRow {
    pub z: f64,
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
    /// Absent at the singular points 0, 1 and a.
    pub residual: Option<f64>,
    pub terms_used: usize,
    pub converged: bool,
}

fn check_regular_point(case: &Ansatz, z: f64) -> Result<()> {
    let a = case.params().a;
    if [0.0, 1.0, a].iter().any(|s| (z - s).abs() < SINGULAR_TOL) {
        return Err(Error::SingularPoint(z));
    }
    Ok(())
}

/// `|u'' + p u' + r u| / (|u''| + |p u'| + |r u| + tiny)` with
/// `p = γ/z + δ/(z−1) + ε/(z−a)` and `r = (αβz − q)/(z(z−1)(z−a))`.
pub fn ode_residual_terms(case: &Ansatz, z: f64, u: f64, du: f64, d2u: f64) -> f64 {
    let p = case.params();
    let drift = p.gamma / z + p.delta / (z - 1.0) + p.epsilon / (z - p.a);
    let potential = (p.alpha * p.beta * z - p.q) / (z * (z - 1.0) * (z - p.a));
    let terms = [d2u, drift * du, potential * u];
    terms.iter().sum::<f64>().abs() / (terms.iter().map(|t| t.abs()).sum::<f64>() + crate::recurrence::RESIDUAL_TINY)
}

pub fn evaluate_row(case: &Ansatz, z: f64, ctl: &EvalControl) -> Result<EvalRow> {
    ctl.check_z(z)?;
    let u = evaluate_expansion(case, z, ctl)?;
    let du = evaluate_expansion_deriv(case, z, 1, ctl)?;
    let d2u = evaluate_expansion_deriv(case, z, 2, ctl)?;
    Ok(EvalRow {
        z,
        u: u.value,
        du: du.value,
        d2u: d2u.value,
        residual: check_regular_point(case, z).ok().map(|_| ode_residual_terms(case, z, u.value, du.value, d2u.value)),
        terms_used: u.terms_used.max(du.terms_used).max(d2u.terms_used),
        converged: [u.status, du.status, d2u.status].iter().all(|s| *s == EvalStatus::Converged),
    })
}

/// Scale-free residual of the Heun equation at z.
pub fn ode_residual(case: &Ansatz, z: f64) -> Result<f64> {
    ode_residual_with(case, z, &EvalControl::default())
}

pub fn ode_residual_with(case: &Ansatz, z: f64, ctl: &EvalControl) -> Result<f64> {
    check_regular_point(case, z)?;
    Ok(evaluate_row(case, z, ctl)?.residual.unwrap_or(f64::NAN))
}

/// Writes `z,u,u',u'',residual,terms_used`.
pub fn write_eval_csv<W: Write>(rows: &[EvalRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Domain(format!("csv output: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["z", "u", "u'", "u''", "residual", "terms_used"]).map_err(io)?;
    for r in rows {
        w.write_record([fmt_real(r.z), fmt_real(r.u), fmt_real(r.du), fmt_real(r.d2u), r.residual.map(fmt_real).unwrap_or_default(), r.terms_used.to_string()])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Domain(format!("csv output: {e}")))?;
    Ok(())
}
