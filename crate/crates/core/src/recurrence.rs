//! Expansion coefficients `c_n` of `u = Σ c_n ₂F₁(α, β; γ+ε+n; z)`.
//!
//! In general they obey the three-term recurrence
//!
//! ```text
//! R_n c_n + Q_{n−1} c_{n−1} + P_{n−2} c_{n−2} = 0
//! R_n = (1−a) n (ε+γ+n−1)
//! Q_n = −R_n + a(1+n−δ)(n+ε) + (aαβ − q)
//! P_n = −a/(n+ε+γ) · (n+ε)(n+ε+γ−α)(n+ε+γ−β)
//! ```
//!
//! For the two-term reductions the same sequence has the explicit ratio
//!
//! ```text
//! c_n / c_{n−1} = (γ+ε−α−1+n)(γ+ε−β−1+n) / ((γ+ε−1+n) n) · ∏_k (e_k+n)/(e_k−1+n)
//! ```
//!
//! and the closed form obtained by telescoping it, with `c_0 = 1`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt_real;
use crate::params::{nonpositive_integer, HeunParams, ValidatedHeunParams};

/// Guard for all-zero rows in the mixed relative residual.
pub const RESIDUAL_TINY: f64 = 1e-300;

/// Tolerance for a vanishing `n + ε + γ` in `P_n`.
const P_DENOMINATOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoefficientSource {
    ThreeTerm,
    TwoTermRatio,
    GammaClosedForm,
}

/// How the three-term recurrence is swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Forward for `a ≤ 1/2`, boundary-value solve otherwise.
    Auto,
    /// Plain forward recursion from `c_0 = 1`, `c_1 = −Q_0/R_1`.
    Forward,
    /// Tridiagonal solve of rows `n = 2..M+1` with `c_0 = 1` and `c_{M+1} = 0`,
    /// which selects the solution that is minimal as `n → ∞`. Row `n = 1` is
    /// left out and shows up in [`recurrence_residual`].
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientStream {
    values: Vec<f64>,
    source: CoefficientSource,
    params: ValidatedHeunParams,
    e_list: Vec<f64>,
}

impl CoefficientStream {
    fn new(values: Vec<f64>, source: CoefficientSource, params: ValidatedHeunParams, e_list: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values, source, params, e_list })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> CoefficientSource {
        self.source
    }

    pub fn params(&self) -> &ValidatedHeunParams {
        &self.params
    }

    pub fn e_list(&self) -> &[f64] {
        &self.e_list
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `c_n / c_{n−1}`, `None` for `n = 0` or a vanished predecessor.
    pub fn ratio(&self, n: usize) -> Option<f64> {
        if n == 0 || self.values[n - 1] == 0.0 {
            None
        } else {
            Some(self.values[n] / self.values[n - 1])
        }
    }

    /// Writes `n,c_n,ratio,residual_n`; undefined cells are left empty.
    pub fn write_csv<W: Write>(&self, params: &HeunParams, out: W) -> Result<()> {
        let residuals = recurrence_residuals(self, params);
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Domain(format!("csv output: {e}"));
        w.write_record(["n", "c_n", "ratio", "residual_n"]).map_err(io)?;
        for (n, c) in self.values.iter().enumerate() {
            let ratio = self.ratio(n).map(fmt_real).unwrap_or_default();
            let res = residuals[n].map(fmt_real).unwrap_or_default();
            w.write_record([n.to_string(), fmt_real(*c), ratio, res]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Domain(format!("csv output: {e}")))?;
        Ok(())
    }
}

/// `R_n = (1−a) n (ε+γ+n−1)`.
pub fn coeff_r(n: usize, p: &HeunParams) -> f64 {
    coeff_r_at(n as f64, p)
}

/// `Q_n = −R_n + a(1+n−δ)(n+ε) + (aαβ − q)`.
pub fn coeff_q(n: usize, p: &HeunParams) -> f64 {
    coeff_q_at(n as f64, p)
}

/// `P_n = −a/(n+ε+γ) · (n+ε)(n+ε+γ−α)(n+ε+γ−β)`.
pub fn coeff_p(n: usize, p: &HeunParams) -> Result<f64> {
    let nf = n as f64;
    let s = nf + p.epsilon + p.gamma;
    if s.abs() < P_DENOMINATOR_TOL {
        return Err(Error::DivisionByZero(format!("n + epsilon + gamma vanishes at n = {n}")));
    }
    Ok(-p.a / s * (nf + p.epsilon) * (s - p.alpha) * (s - p.beta))
}

/// `R` at a real index; the reduction identity evaluates it off the integers.
pub fn coeff_r_at(n: f64, p: &HeunParams) -> f64 {
    (1.0 - p.a) * n * (p.epsilon + p.gamma + n - 1.0)
}

pub fn coeff_q_at(n: f64, p: &HeunParams) -> f64 {
    -coeff_r_at(n, p) + p.a * (1.0 + n - p.delta) * (n + p.epsilon) + (p.a * p.alpha * p.beta - p.q)
}

/// Three-term coefficients `c_0..=c_{n_max}` with the sweep picked by [`Sweep::Auto`].
pub fn three_term_coefficients(p: &ValidatedHeunParams, n_max: usize) -> Result<CoefficientStream> {
    three_term_coefficients_with(p, n_max, Sweep::Auto)
}

pub fn three_term_coefficients_with(p: &ValidatedHeunParams, n_max: usize, sweep: Sweep) -> Result<CoefficientStream> {
    let sweep = match sweep {
        Sweep::Auto if p.a <= 0.5 => Sweep::Forward,
        Sweep::Auto => Sweep::Boundary,
        other => other,
    };
    let values = match sweep {
        Sweep::Forward => forward_sweep(p, n_max)?,
        _ => boundary_sweep(p, n_max)?,
    };
    CoefficientStream::new(values, CoefficientSource::ThreeTerm, *p, Vec::new())
}

fn checked_r(n: usize, p: &HeunParams) -> Result<f64> {
    let r = coeff_r(n, p);
    if r == 0.0 {
        Err(Error::DivisionByZero(format!("R_{n} vanishes")))
    } else {
        Ok(r)
    }
}

fn forward_sweep(p: &HeunParams, n_max: usize) -> Result<Vec<f64>> {
    let mut c = Vec::with_capacity(n_max + 1);
    c.push(1.0);
    if n_max >= 1 {
        c.push(-coeff_q(0, p) / checked_r(1, p)?);
    }
    for n in 2..=n_max {
        let next = -(coeff_q(n - 1, p) * c[n - 1] + coeff_p(n - 2, p)? * c[n - 2]) / checked_r(n, p)?;
        c.push(next);
    }
    Ok(c)
}

/// Extra rows past `n_max` so that the dominant solution, which grows like
/// `|a/(a−1)|ⁿ` relative to the minimal one, is damped below round-off.
fn boundary_padding(a: f64) -> usize {
    const MAX_PADDING: usize = 100_000;
    let growth = (a / (a - 1.0)).abs().ln();
    if growth <= 0.0 || !growth.is_finite() {
        return MAX_PADDING;
    }
    (((40.0 / growth).ceil() as usize) + 32).min(MAX_PADDING)
}

fn boundary_sweep(p: &HeunParams, n_max: usize) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Ok(vec![1.0]);
    }
    let m = n_max + boundary_padding(p.a);
    // Row i is the recurrence at n = i + 2 in the unknowns c_1..c_m.
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        let n = i + 2;
        let pn = coeff_p(n - 2, p)?;
        if i == 0 {
            rhs[0] = -pn;
        } else {
            sub[i] = pn;
        }
        diag[i] = coeff_q(n - 1, p);
        sup[i] = coeff_r(n, p);
    }
    let x = solve_tridiagonal(&sub, &diag, &sup, &rhs)
        .ok_or_else(|| Error::DivisionByZero("boundary-value recurrence system is singular".into()))?;
    let mut c = Vec::with_capacity(n_max + 1);
    c.push(1.0);
    c.extend_from_slice(&x[..n_max]);
    Ok(c)
}

/// Gaussian elimination with partial pivoting on a tridiagonal system, in
/// the manner of LAPACK `gtsv`. Row `i` reads `sub[i] x[i−1] + diag[i] x[i]
/// + sup[i] x[i+1]`; `sub[0]` and `sup[m−1]` are ignored.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = diag.len();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut du2 = vec![0.0; m];
    let mut b = rhs.to_vec();
    for i in 0..m.saturating_sub(1) {
        let dl = sub[i + 1];
        if d[i].abs() >= dl.abs() {
            if d[i] == 0.0 {
                return None;
            }
            let f = dl / d[i];
            d[i + 1] -= f * du[i];
            b[i + 1] -= f * b[i];
        } else {
            let f = d[i] / dl;
            d[i] = dl;
            let old_diag = d[i + 1];
            d[i + 1] = du[i] - f * old_diag;
            if i + 2 < m {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du2[i];
            }
            du[i] = old_diag;
            let old_b = b[i];
            b[i] = b[i + 1];
            b[i + 1] = old_b - f * b[i + 1];
        }
    }
    if m == 0 || d[m - 1] == 0.0 {
        return None;
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = b[i];
        if i + 1 < m {
            acc -= du[i] * x[i + 1];
        }
        if i + 2 < m {
            acc -= du2[i] * x[i + 2];
        }
        x[i] = acc / d[i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// The index at which a numerator Pochhammer `(x)_n` first contains a zero
/// factor, i.e. `c_n = 0` for all `n ≥` the returned value.
pub(crate) fn pochhammer_zero(x: f64) -> Option<usize> {
    nonpositive_integer(x).map(|k| (1 - k) as usize)
}

fn check_two_term_inputs(p: &HeunParams, e_list: &[f64]) -> Result<()> {
    for (k, e) in e_list.iter().enumerate() {
        if nonpositive_integer(*e).is_some() {
            return Err(Error::Pole(format!("e_{} = {e} is zero or a negative integer", k + 1)));
        }
    }
    if nonpositive_integer(p.gamma_epsilon()).is_some() {
        return Err(Error::Pole(format!("gamma + epsilon = {} is a non-positive integer", p.gamma_epsilon())));
    }
    Ok(())
}

/// First index from which the two-term coefficients vanish identically.
pub(crate) fn termination_index(p: &HeunParams) -> Option<usize> {
    let s = p.gamma_epsilon();
    [s - p.alpha, s - p.beta].into_iter().filter_map(pochhammer_zero).min()
}

/// Two-term coefficients by iterating the explicit ratio.
pub fn two_term_coefficients(p: &ValidatedHeunParams, e_list: &[f64], n_max: usize) -> Result<CoefficientStream> {
    check_two_term_inputs(p, e_list)?;
    let s = p.gamma_epsilon();
    let (x1, x2) = (s - p.alpha, s - p.beta);
    let stop = termination_index(p);
    let mut c = Vec::with_capacity(n_max + 1);
    c.push(1.0);
    for n in 1..=n_max {
        if stop.is_some_and(|z| n >= z) {
            c.push(0.0);
            continue;
        }
        let nf = n as f64;
        let mut ratio = (x1 - 1.0 + nf) * (x2 - 1.0 + nf) / ((s - 1.0 + nf) * nf);
        for e in e_list {
            ratio *= (e + nf) / (e - 1.0 + nf);
        }
        c.push(c[n - 1] * ratio);
    }
    CoefficientStream::new(c, CoefficientSource::TwoTermRatio, *p, e_list.to_vec())
}

/// Gamma-ratio closed form
///
/// ```text
/// c_n = (γ+ε−α)_n (γ+ε−β)_n / (n! (γ+ε)_n) · ∏_k (e_k+n)/e_k
/// ```
///
/// with the Pochhammer quotient accumulated factor-pairwise so that it
/// neither overflows nor meets the poles of the gamma functions.
pub fn closed_form_coefficients(p: &ValidatedHeunParams, e_list: &[f64], n_max: usize) -> Result<CoefficientStream> {
    check_two_term_inputs(p, e_list)?;
    let s = p.gamma_epsilon();
    let (x1, x2) = (s - p.alpha, s - p.beta);
    let stop = termination_index(p);
    let mut values = Vec::with_capacity(n_max + 1);
    let mut hyper = 1.0;
    for n in 0..=n_max {
        if n > 0 {
            let k = (n - 1) as f64;
            hyper *= (x1 + k) * (x2 + k) / ((k + 1.0) * (s + k));
        }
        if stop.is_some_and(|z| n >= z) {
            values.push(0.0);
            continue;
        }
        let nf = n as f64;
        let extra: f64 = e_list.iter().map(|e| (e + nf) / e).product();
        values.push(hyper * extra);
    }
    CoefficientStream::new(values, CoefficientSource::GammaClosedForm, *p, e_list.to_vec())
}

/// One closed-form coefficient computed from scratch.
pub fn closed_form_coefficient(p: &ValidatedHeunParams, e_list: &[f64], n: usize) -> Result<f64> {
    check_two_term_inputs(p, e_list)?;
    if termination_index(p).is_some_and(|z| n >= z) {
        return Ok(0.0);
    }
    let s = p.gamma_epsilon();
    let (x1, x2) = (s - p.alpha, s - p.beta);
    let hyper: f64 = (0..n)
        .map(|k| {
            let k = k as f64;
            (x1 + k) * (x2 + k) / ((k + 1.0) * (s + k))
        })
        .product();
    let nf = n as f64;
    Ok(hyper * e_list.iter().map(|e| (e + nf) / e).product::<f64>())
}

/// Per-row mixed relative residual of the three-term recurrence; entry `n`
/// is `None` for `n = 0`, where no recurrence row exists.
pub fn recurrence_residuals(stream: &CoefficientStream, p: &HeunParams) -> Vec<Option<f64>> {
    let c = stream.values();
    (0..c.len())
        .map(|n| {
            if n == 0 {
                return None;
            }
            let r = coeff_r(n, p) * c[n];
            let q = coeff_q(n - 1, p) * c[n - 1];
            let pp = if n >= 2 {
                match coeff_p(n - 2, p) {
                    Ok(v) => v * c[n - 2],
                    Err(_) => return Some(f64::INFINITY),
                }
            } else {
                0.0
            };
            Some((r + q + pp).abs() / (r.abs() + q.abs() + pp.abs() + RESIDUAL_TINY))
        })
        .collect()
}

/// Largest mixed relative residual of `R_n c_n + Q_{n−1} c_{n−1} + P_{n−2} c_{n−2}`
/// over the stream, including the boundary row `n = 1`.
pub fn recurrence_residual(stream: &CoefficientStream, p: &HeunParams) -> f64 {
    recurrence_residuals(stream, p)
        .into_iter()
        .flatten()
        .fold(0.0, f64::max)
}
