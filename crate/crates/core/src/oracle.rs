//! Power-series reference solution about z = 0.
//!
//! The Heun equation is multiplied through by `z(z−1)(z−a)` to get
//! `P₂(z) u'' + P₁(z) u' + P₀(z) u = 0` with polynomial coefficients built by
//! polynomial arithmetic. Substituting `u = Σ b_n zⁿ` and collecting `zᵐ`
//! gives, for each m, a linear relation among `b_0..b_{m+1}`; the relation is
//! assembled numerically from the polynomial coefficients and solved for
//! `b_{m+1}`. Nothing here reuses the expansion coefficients.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluator::{evaluate_expansion, EvalControl};
use crate::params::{nonpositive_integer, HeunParams, ValidatedHeunParams};
use crate::poly;
use crate::reduction::Ansatz;
use crate::special::{EvalResult, EvalStatus, ABSOLUTE_FLOOR};

/// Evaluations are restricted to this fraction of the convergence radius.
pub const SAFE_FRACTION: f64 = 0.9;

const TARGET_TAIL: f64 = 1e-18;
const EXTRA_TERMS: usize = 40;
const MAX_ADAPTIVE_TERMS: usize = 20_000;

/// `P₂ u'' + P₁ u' + P₀ u = 0`, coefficients in ascending powers of z.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolynomialOde {
    pub second: Vec<f64>,
    pub first: Vec<f64>,
    pub zeroth: Vec<f64>,
}

impl PolynomialOde {
    pub fn from_params(p: &HeunParams) -> Self {
        let z = [0.0, 1.0];
        let z_minus_1 = [-1.0, 1.0];
        let z_minus_a = [-p.a, 1.0];
        let second = poly::mul(&poly::mul(&z, &z_minus_1), &z_minus_a);
        let first = poly::add(
            &poly::add(
                &poly::scale(&poly::mul(&z_minus_1, &z_minus_a), p.gamma),
                &poly::scale(&poly::mul(&z, &z_minus_a), p.delta),
            ),
            &poly::scale(&poly::mul(&z, &z_minus_1), p.epsilon),
        );
        let zeroth = vec![-p.q, p.alpha * p.beta];
        Self { second, first, zeroth }
    }

    /// Coefficient of `b_j` in the `zᵐ` relation.
    fn weight(&self, m: usize, j: usize) -> f64 {
        let at = |c: &[f64], k: isize| if k >= 0 { c.get(k as usize).copied().unwrap_or(0.0) } else { 0.0 };
        let (m, jf) = (m as isize, j as f64);
        let j = j as isize;
        at(&self.second, m - j + 2) * jf * (jf - 1.0) + at(&self.first, m - j + 1) * jf + at(&self.zeroth, m - j)
    }

    /// Lowest power that can reach back from `zᵐ`.
    fn reach(&self) -> usize {
        self.second.len().max(self.first.len()).max(self.zeroth.len())
    }

    /// `P₂ u'' + P₁ u' + P₀ u` for the polynomial `u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let du = poly::derivative(u);
        let d2u = poly::derivative(&du);
        poly::add(&poly::add(&poly::mul(&self.second, &d2u), &poly::mul(&self.first, &du)), &poly::mul(&self.zeroth, u))
    }
}

/// Exponent-0 power-series solution with `b_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrobeniusSeries {
    pub coefficients: Vec<f64>,
    /// Distance to the nearest other singular point, `min(1, |a|)`.
    pub radius_hint: f64,
    pub params: ValidatedHeunParams,
}

pub fn frobenius_coefficients(p: &ValidatedHeunParams, n_max: usize) -> Result<FrobeniusSeries> {
    let coefficients = power_series(p, n_max)?;
    Ok(FrobeniusSeries { coefficients, radius_hint: p.a.abs().min(1.0), params: *p })
}

/// `b_0..b_{n_max}` for any parameters with γ not a non-positive integer.
pub fn power_series(p: &HeunParams, n_max: usize) -> Result<Vec<f64>> {
    if let Some(k) = nonpositive_integer(p.gamma) {
        return Err(Error::Pole(format!("gamma = {k} has no regular power-series solution at z = 0")));
    }
    let ode = PolynomialOde::from_params(p);
    let reach = ode.reach();
    let mut b = Vec::with_capacity(n_max + 1);
    b.push(1.0);
    for m in 0..n_max {
        let lead = ode.weight(m, m + 1);
        if lead == 0.0 {
            return Err(Error::Pole(format!("vanishing leading weight at power {m}")));
        }
        let lowest = m.saturating_sub(reach);
        let rest: f64 = (lowest..=m).map(|j| ode.weight(m, j) * b[j]).sum();
        let next = -rest / lead;
        if !next.is_finite() {
            return Err(Error::NonFinite { index: m + 1 });
        }
        b.push(next);
    }
    Ok(b)
}

/// Number of terms for a tail of about 1e-18 at |z|.
pub fn terms_needed(radius_hint: f64, z: f64) -> usize {
    let ratio = z.abs() / radius_hint;
    if ratio <= 0.0 {
        return EXTRA_TERMS;
    }
    let n = (TARGET_TAIL.ln() / ratio.ln()).ceil();
    if n.is_finite() && n > 0.0 {
        (n as usize + EXTRA_TERMS).min(MAX_ADAPTIVE_TERMS)
    } else {
        MAX_ADAPTIVE_TERMS
    }
}

impl FrobeniusSeries {
    pub fn safe_radius(&self) -> f64 {
        SAFE_FRACTION * self.radius_hint
    }

    /// Coefficients of `P₂ u'' + P₁ u' + P₀ u` for the truncated series,
    /// each divided by the magnitude of the contributions to it.
    pub fn self_residual(&self) -> Vec<f64> {
        let ode = PolynomialOde::from_params(&self.params);
        let b = &self.coefficients;
        let raw = ode.apply(b);
        let abs_ode = PolynomialOde {
            second: ode.second.iter().map(|c| c.abs()).collect(),
            first: ode.first.iter().map(|c| c.abs()).collect(),
            zeroth: ode.zeroth.iter().map(|c| c.abs()).collect(),
        };
        let abs_b: Vec<f64> = b.iter().map(|c| c.abs()).collect();
        let du = poly::derivative(&abs_b);
        let d2u = poly::derivative(&du);
        let scale = poly::add(
            &poly::add(&poly::mul(&abs_ode.second, &d2u), &poly::mul(&abs_ode.first, &du)),
            &poly::mul(&abs_ode.zeroth, &abs_b),
        );
        raw.iter().zip(&scale).map(|(r, s)| r.abs() / (s + crate::recurrence::RESIDUAL_TINY)).collect()
    }
}

/// Horner evaluation; the tail estimate is the largest of the last three terms.
pub fn frobenius_eval(series: &FrobeniusSeries, z: f64) -> Result<EvalResult> {
    if !z.is_finite() || z.abs() >= series.safe_radius() {
        return Err(Error::Domain(format!(
            "power series is evaluated for |z| < {}, got z = {z}",
            series.safe_radius()
        )));
    }
    let b = &series.coefficients;
    let value = b.iter().rev().fold(0.0, |acc, c| acc * z + c);
    let n = b.len();
    let tail = (n.saturating_sub(3)..n).map(|k| (b[k] * z.powi(k as i32)).abs()).fold(0.0, f64::max);
    let status = if tail <= 1e-12 * value.abs().max(ABSOLUTE_FLOOR) || z == 0.0 {
        EvalStatus::Converged
    } else {
        EvalStatus::MaxTermsReached
    };
    Ok(EvalResult { value, terms_used: n, tail_estimate: if z == 0.0 { 0.0 } else { tail }, status })
}

/// Maximum relative deviation between the expansion and the power series
/// scaled to agree at z = 0.
pub fn cross_check(case: &Ansatz, z_points: &[f64], ctl: &EvalControl) -> Result<f64> {
    let params = case.params();
    let radius = params.a.abs().min(1.0);
    for &z in z_points {
        ctl.check_z(z)?;
        if z.abs() >= SAFE_FRACTION * radius {
            return Err(Error::Domain(format!("z = {z} lies outside the power-series safe radius {}", SAFE_FRACTION * radius)));
        }
    }
    let u0 = evaluate_expansion(case, 0.0, ctl)?.value;
    if u0 == 0.0 {
        return Err(Error::DivisionByZero("expansion vanishes at z = 0".into()));
    }
    let farthest = z_points.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let series = frobenius_coefficients(params, terms_needed(radius, farthest))?;
    let mut worst = 0.0f64;
    for &z in z_points {
        let u = evaluate_expansion(case, z, ctl)?.value;
        let f = u0 * frobenius_eval(&series, z)?.value;
        let dev = (u - f).abs() / u.abs().max(ABSOLUTE_FLOOR);
        worst = worst.max(dev);
    }
    Ok(worst)
}
