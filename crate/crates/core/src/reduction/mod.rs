//! Parameter constraints under which the three-term recurrence collapses to
//! the two-term ratio.
//!
//! Inserting the ratio into the three-term recurrence and clearing
//! denominators leaves a polynomial identity in `n`:
//!
//! ```text
//! (1−a)(γ+ε−α−1+n)(γ+ε−β−1+n) ∏(e_k+n)
//!     + Q_{n−1} ∏(e_k−1+n)
//!     − a(ε+n−2)(n−1) ∏(e_k−2+n)  =  Σ_{m=0}^{N+1} A_m nᵐ
//! ```
//!
//! The `n^{N+2}` terms cancel for any parameters and `A_{N+1} = 2+N−δ`, so
//! δ = N+2 is forced. With that, the identity has degree ≤ N and vanishes
//! identically iff it vanishes at N+1 distinct points. Everything here works
//! from evaluations of the identity at collocation points; the coefficients
//! `A_m` are only ever extracted numerically for reporting.

mod closed_form;
mod general;

use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::params::{nonpositive_integer, validate_params, FreeParams, HeunParams, ValidatedHeunParams};
use crate::recurrence::{coeff_q_at, coeff_r_at};

pub use closed_form::{
    n1_e1, n1_quadratic, n2_cubic, n2_product_ratio, n2_sum, q_candidates_n0, q_candidates_n1, q_candidates_n2,
    q_for_n0,
};
pub use general::{solve_reduction_general, SeedGrid};

/// Collocation values must stay below this multiple of the local summand scale.
pub const COLLOCATION_TOL: f64 = 1e-9;

/// Allowed deviation of the extracted `A_{N+1}` from `2+N−δ` before
/// round-off allowance.
pub const A_TOP_TOL: f64 = 1e-8;

/// Tolerance on δ = N+2 for an accepted case.
pub const DELTA_TOL: f64 = 1e-12;

/// δ forced by a reduction of order N.
pub fn delta_for_reduction(order: usize) -> f64 {
    order as f64 + 2.0
}

/// The three summands of the identity at `n`.
pub fn identity_terms(p: &HeunParams, e_list: &[f64], n: f64) -> [f64; 3] {
    let s = p.gamma_epsilon();
    let prod = |shift: f64| e_list.iter().map(|e| e + shift + n).product::<f64>();
    let upper = (1.0 - p.a) * (s - p.alpha - 1.0 + n) * (s - p.beta - 1.0 + n) * prod(0.0);
    let middle = coeff_q_at(n - 1.0, p) * prod(-1.0);
    let lower = -p.a * (p.epsilon + n - 2.0) * (n - 1.0) * prod(-2.0);
    [upper, middle, lower]
}

/// Left-hand side of the polynomial identity at a (possibly non-integer) `n`.
pub fn identity_lhs(p: &HeunParams, e_list: &[f64], n: f64) -> f64 {
    identity_terms(p, e_list, n).iter().sum()
}

/// Magnitude sum of the three summands, the natural scale at `n`. The middle
/// summand is measured by the magnitudes of the parts of `Q_{n−1}`, which can
/// cancel to zero exactly.
pub fn identity_scale(p: &HeunParams, e_list: &[f64], n: f64) -> f64 {
    let [upper, _, lower] = identity_terms(p, e_list, n);
    let m = n - 1.0;
    let q_parts = coeff_r_at(m, p).abs()
        + (p.a * (1.0 + m - p.delta) * (m + p.epsilon)).abs()
        + (p.a * p.alpha * p.beta).abs()
        + p.q.abs();
    let prod = e_list.iter().map(|e| e - 1.0 + n).product::<f64>().abs();
    upper.abs() + q_parts * prod + lower.abs()
}

/// Forward difference `Δ^order f(start)` with unit step, and the largest
/// summand scale over the points it touches.
pub fn identity_difference(p: &HeunParams, e_list: &[f64], order: usize, start: f64) -> (f64, f64) {
    let mut values: Vec<f64> = (0..=order).map(|k| identity_lhs(p, e_list, start + k as f64)).collect();
    let scale = (0..=order)
        .map(|k| identity_scale(p, e_list, start + k as f64))
        .fold(0.0, f64::max);
    for level in 0..order {
        for k in 0..order - level {
            values[k] = values[k + 1] - values[k];
        }
    }
    (values[0], scale)
}

/// Monomial coefficients of the polynomial through `(xs[i], ys[i])`.
fn interpolate_monomial(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut dd = ys.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
        }
    }
    // Expand the Newton form from the innermost coefficient outwards.
    let mut coeffs = vec![0.0; n];
    for i in (0..n).rev() {
        let mut next = vec![0.0; n];
        for k in 0..n {
            if k + 1 < n {
                next[k + 1] += coeffs[k];
            }
            next[k] -= xs[i] * coeffs[k];
        }
        next[0] += dd[i];
        coeffs = next;
    }
    coeffs
}

/// Outcome of checking the identity for a parameter set and ansatz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub collocation_points: Vec<f64>,
    pub identity_values: Vec<f64>,
    /// Summand magnitude at each point.
    pub scales: Vec<f64>,
    /// `A_0..A_{N+1}` interpolated from `n = 1..N+2`.
    pub extracted_a: Vec<f64>,
    pub a_top: f64,
    pub a_top_expected: f64,
    pub a_top_tolerance: f64,
    pub tolerance_used: f64,
    pub passed: bool,
}

impl ConstraintReport {
    /// Largest `|value| / scale` over the collocation points.
    pub fn max_relative_value(&self) -> f64 {
        self.identity_values
            .iter()
            .zip(&self.scales)
            .map(|(v, s)| if *s > 0.0 { v.abs() / s } else { v.abs() })
            .fold(0.0, f64::max)
    }

    pub fn failure_detail(&self) -> Option<String> {
        if self.passed {
            return None;
        }
        Some(format!(
            "identity max relative value {:e} (tolerance {:e}); A_top {} vs expected {}",
            self.max_relative_value(),
            self.tolerance_used,
            self.a_top,
            self.a_top_expected
        ))
    }
}

/// Evaluates the identity at `n = 1..N+3` and at `off_grid`, and extracts
/// `A_{N+1}` by an order-(N+1) finite difference. The order N is the length
/// of `e_list`.
pub fn verify_constraints(p: &HeunParams, e_list: &[f64], off_grid: f64) -> ConstraintReport {
    let order = e_list.len();
    let mut points: Vec<f64> = (1..=order + 3).map(|n| n as f64).collect();
    points.push(off_grid);
    let values: Vec<f64> = points.iter().map(|&n| identity_lhs(p, e_list, n)).collect();
    let scales: Vec<f64> = points.iter().map(|&n| identity_scale(p, e_list, n)).collect();

    let nodes: Vec<f64> = (1..=order + 2).map(|n| n as f64).collect();
    let node_values: Vec<f64> = nodes.iter().map(|&n| identity_lhs(p, e_list, n)).collect();
    let extracted_a = interpolate_monomial(&nodes, &node_values);

    let (diff, diff_scale) = identity_difference(p, e_list, order + 1, 1.0);
    let factorial: f64 = (1..=order + 1).map(|k| k as f64).product();
    let a_top = diff / factorial;
    let a_top_expected = 2.0 + order as f64 - p.delta;
    // Round-off of an order-(N+1) difference grows like 2^{N+1} ε · scale.
    let a_top_tolerance = A_TOP_TOL + 2f64.powi(order as i32 + 1) * 4.0 * f64::EPSILON * diff_scale / factorial;

    let collocation_ok = values
        .iter()
        .zip(&scales)
        .all(|(v, s)| v.is_finite() && v.abs() <= COLLOCATION_TOL * s);
    let top_ok = (a_top - a_top_expected).abs() <= a_top_tolerance;

    ConstraintReport {
        collocation_points: points,
        identity_values: values,
        scales,
        extracted_a,
        a_top,
        a_top_expected,
        a_top_tolerance,
        tolerance_used: COLLOCATION_TOL,
        passed: collocation_ok && top_ok,
    }
}

/// A reproducible non-integer point in (0, 10) derived from the inputs.
pub fn default_off_grid_point(p: &HeunParams, e_list: &[f64]) -> f64 {
    let seed = [p.a, p.q, p.alpha, p.beta, p.gamma, p.delta, p.epsilon]
        .iter()
        .chain(e_list)
        .fold(0xcbf2_9ce4_8422_2325_u64, |h, x| (h ^ x.to_bits()).wrapping_mul(0x0100_0000_01b3));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n: f64 = rng.random_range(0.0..10.0);
        if (n - n.round()).abs() > 0.05 {
            return n;
        }
    }
}

/// Heun parameters together with the auxiliary ansatz parameters `e_1..e_N`.
/// Nothing is checked here; evaluation of broken inputs is allowed so that
/// sensitivity can be measured. [`ReductionCase`] is the certified form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ansatz {
    params: ValidatedHeunParams,
    e_list: Vec<f64>,
}

impl Ansatz {
    pub fn new(params: ValidatedHeunParams, e_list: Vec<f64>) -> Self {
        Self { params, e_list }
    }

    pub fn params(&self) -> &ValidatedHeunParams {
        &self.params
    }

    pub fn e_list(&self) -> &[f64] {
        &self.e_list
    }

    pub fn order(&self) -> usize {
        self.e_list.len()
    }

    /// `(1+e_1, …, 1+e_N, γ+ε−α, γ+ε−β)`.
    pub fn ansatz_upper(&self) -> Vec<f64> {
        let s = self.params.gamma_epsilon();
        self.e_list
            .iter()
            .map(|e| 1.0 + e)
            .chain([s - self.params.alpha, s - self.params.beta])
            .collect()
    }

    /// `(e_1, …, e_N, γ+ε)`.
    pub fn ansatz_lower(&self) -> Vec<f64> {
        self.e_list
            .iter()
            .copied()
            .chain([self.params.gamma_epsilon()])
            .collect()
    }

    pub fn with_q(&self, q: f64) -> Self {
        Self { params: self.params.with_q(q), e_list: self.e_list.clone() }
    }
}

/// A certified two-term reduction. The constructor runs
/// [`verify_constraints`] and refuses anything that does not pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionCase {
    #[serde(flatten)]
    ansatz: Ansatz,
    q_root_index: usize,
    report: ConstraintReport,
}

impl ReductionCase {
    pub fn new(params: ValidatedHeunParams, e_list: Vec<f64>, q_root_index: usize) -> Result<Self> {
        let off_grid = default_off_grid_point(&params, &e_list);
        Self::new_with_off_grid(params, e_list, q_root_index, off_grid)
    }

    pub fn new_with_off_grid(
        params: ValidatedHeunParams,
        e_list: Vec<f64>,
        q_root_index: usize,
        off_grid: f64,
    ) -> Result<Self> {
        let order = e_list.len();
        let target = delta_for_reduction(order);
        if (params.delta - target).abs() > DELTA_TOL * target {
            return Err(Error::NotAReduction(format!("delta = {} but N + 2 = {target}", params.delta)));
        }
        for (k, e) in e_list.iter().enumerate() {
            if !e.is_finite() || nonpositive_integer(*e).is_some() {
                return Err(Error::NotAReduction(format!("e_{} = {e} is not admissible", k + 1)));
            }
        }
        let report = verify_constraints(&params, &e_list, off_grid);
        if let Some(detail) = report.failure_detail() {
            return Err(Error::NotAReduction(detail));
        }
        Ok(Self { ansatz: Ansatz::new(params, e_list), q_root_index, report })
    }

    pub fn order(&self) -> usize {
        self.ansatz.order()
    }

    pub fn q(&self) -> f64 {
        self.ansatz.params.q
    }

    pub fn q_root_index(&self) -> usize {
        self.q_root_index
    }

    pub fn report(&self) -> &ConstraintReport {
        &self.report
    }

    pub fn ansatz(&self) -> &Ansatz {
        &self.ansatz
    }

    /// `e_list` in ascending order, the form used to compare solution sets.
    pub fn sorted_e(&self) -> Vec<f64> {
        let mut e = self.ansatz.e_list.clone();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn to_json(&self) -> Value {
        json!({
            "N": self.order(),
            "q": self.q(),
            "e": self.ansatz.e_list,
            "q_root_index": self.q_root_index,
            "report": {
                "points": self.report.collocation_points,
                "values": self.report.identity_values,
                "A_top": self.report.a_top,
                "passed": self.report.passed,
            },
        })
    }
}

impl Deref for ReductionCase {
    type Target = Ansatz;

    fn deref(&self) -> &Ansatz {
        &self.ansatz
    }
}

/// Re-runs the identity check on an existing case.
pub fn verify_reduction(case: &Ansatz) -> ConstraintReport {
    verify_constraints(case.params(), case.e_list(), default_off_grid_point(case.params(), case.e_list()))
}

pub fn verify_reduction_at(case: &Ansatz, off_grid: f64) -> ConstraintReport {
    verify_constraints(case.params(), case.e_list(), off_grid)
}

/// A root of the q-condition that did not become a [`ReductionCase`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub q_re: f64,
    pub q_im: f64,
    pub q_root_index: Option<usize>,
    pub reason: String,
}

/// Everything a reduction search produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSet {
    pub order: usize,
    pub method: ReductionMethod,
    pub cases: Vec<ReductionCase>,
    pub rejected: Vec<Rejection>,
}

impl CandidateSet {
    pub fn to_json(&self) -> Value {
        json!({
            "N": self.order,
            "method": self.method,
            "cases": self.cases.iter().map(ReductionCase::to_json).collect::<Vec<_>>(),
            "rejected": self.rejected,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionMethod {
    ClosedForm,
    General,
}

/// Validates the completed parameters for a given order; q plays no part in
/// validity, so a placeholder is used.
pub(crate) fn validated_for(free: &FreeParams, order: usize) -> Result<ValidatedHeunParams> {
    validate_params(&free.complete(order, 0.0)).map_err(Error::Invalid)
}

/// Closed forms for N ≤ 2 unless `force_general`; the general solver
/// otherwise.
pub fn reduce(free: &FreeParams, order: usize, force_general: bool, grid: &SeedGrid) -> Result<CandidateSet> {
    if force_general || order > 2 {
        return solve_reduction_general(free, order, grid);
    }
    match order {
        0 => q_candidates_n0(free),
        1 => q_candidates_n1(free),
        _ => q_candidates_n2(free),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchor_free() -> FreeParams {
        FreeParams::new(2.0, 3.0, 2.0, 1.0)
    }

    fn anchor() -> HeunParams {
        anchor_free().complete(0, 4.0)
    }

    #[test]
    fn identity_vanishes_for_anchor() {
        assert!(identity_lhs(&anchor(), &[], 1.0).abs() < 1e-12);
        let v = identity_lhs(&anchor(), &[], 7.3);
        assert!(v.abs() <= 1e-9 * identity_scale(&anchor(), &[], 7.3));
    }

    #[test]
    fn identity_at_one_is_first_recurrence_row() {
        // R_1 c_1 + Q_0 c_0 with c_1 = ratio at n = 1
        let p = HeunParams { q: 5.0, ..anchor() };
        let v = identity_lhs(&p, &[], 1.0);
        assert!(v.abs() > 0.5);
        assert_eq!(v, -1.0);
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_for_reduction(0), 2.0);
        assert_eq!(delta_for_reduction(1), 3.0);
        assert_eq!(delta_for_reduction(2), 4.0);
    }

    #[test]
    fn anchor_case_verifies() {
        let p = validate_params(&anchor()).unwrap();
        let case = ReductionCase::new(p, vec![], 0).unwrap();
        let r = case.report();
        assert!(r.passed);
        assert!(r.a_top.abs() < 1e-12);
        assert_eq!(case.ansatz_upper(), vec![1.0, 2.0]);
        assert_eq!(case.ansatz_lower(), vec![4.0]);
    }

    #[test]
    fn perturbed_delta_shows_in_a_top() {
        let mut p = anchor();
        p.delta = 2.01;
        p.epsilon = 1.0 + p.alpha + p.beta - p.gamma - p.delta;
        let r = verify_constraints(&p, &[], 3.7);
        assert!((r.a_top + 0.01).abs() < 1e-10, "{}", r.a_top);
        assert!((r.a_top - r.a_top_expected).abs() < 1e-10);
        assert!(!r.passed);
        let v = validate_params(&p).unwrap();
        assert!(matches!(ReductionCase::new(v, vec![], 0), Err(Error::NotAReduction(_))));
    }

    #[test]
    fn interpolation_recovers_monomials() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let f = |x: f64| 2.0 - 3.0 * x + 0.5 * x * x * x;
        let ys: Vec<_> = xs.iter().map(|&x| f(x)).collect();
        let c = interpolate_monomial(&xs, &ys);
        for (got, want) in c.iter().zip([2.0, -3.0, 0.0, 0.5]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn off_grid_point_is_reproducible_and_non_integer() {
        let a = default_off_grid_point(&anchor(), &[1.5]);
        assert_eq!(a, default_off_grid_point(&anchor(), &[1.5]));
        assert!(a > 0.0 && a < 10.0 && (a - a.round()).abs() > 0.05);
    }

    #[test]
    fn case_json_shape() {
        let case = ReductionCase::new(validate_params(&anchor()).unwrap(), vec![], 0).unwrap();
        let v = case.to_json();
        assert_eq!(v["N"], 0);
        assert_eq!(v["q"], 4.0);
        assert_eq!(v["report"]["passed"], true);
        assert_eq!(v["report"]["points"].as_array().unwrap().len(), 4);
    }
}
