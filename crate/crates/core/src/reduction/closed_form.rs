//! Explicit solutions of the reduction constraints for N = 0, 1, 2.

use crate::error::{Error, Result};
use crate::params::{nonpositive_integer, FreeParams};
use crate::poly;

use super::{validated_for, CandidateSet, ReductionCase, ReductionMethod, Rejection};

/// N = 0: `q = aγ + (α−1)(β−1)`.
pub fn q_for_n0(free: &FreeParams) -> f64 {
    free.a * free.gamma + (free.alpha - 1.0) * (free.beta - 1.0)
}

/// N = 1: coefficients (ascending) of the quadratic in q.
pub fn n1_quadratic(free: &FreeParams) -> [f64; 3] {
    let FreeParams { a, alpha: al, beta: be, gamma: ga } = *free;
    let c0 = (al - 2.0) * (al - 1.0) * (be - 2.0) * (be - 1.0)
        + a * (4.0 + 2.0 * a - 4.0 * al - 4.0 * be + 3.0 * al * be) * ga
        + 2.0 * a * a * ga * ga;
    let c1 = -(4.0 + a - 3.0 * al - 3.0 * be + 2.0 * al * be + 3.0 * a * ga);
    [c0, c1, 1.0]
}

/// N = 1: `e_1 = −q + a(1+γ) − 1 + (α−1)(β−1)`.
pub fn n1_e1(free: &FreeParams, q: f64) -> f64 {
    -q + free.a * (1.0 + free.gamma) - 1.0 + (free.alpha - 1.0) * (free.beta - 1.0)
}

/// N = 2: coefficients (ascending) of the monic cubic in q.
pub fn n2_cubic(free: &FreeParams) -> [f64; 4] {
    let FreeParams { a, alpha: al, beta: be, gamma: ga } = *free;
    let c2 = -(10.0 + 3.0 * al * (be - 2.0) - 6.0 * be + a * (4.0 + 6.0 * ga));
    let c1 = 33.0 - 2.0 * al * (2.0 * be - 5.0) * (3.0 * be - 4.0)
        + be * (11.0 * be - 40.0)
        + al * al * (11.0 + 3.0 * (be - 4.0) * be)
        + a * a * (4.0 + ga * (18.0 + 11.0 * ga))
        + 2.0 * a * (6.0 - 4.0 * be + 15.0 * ga - 11.0 * be * ga + al * (2.0 * be + 6.0 * be * ga - 11.0 * ga - 4.0));
    let c0 = -(al - 1.0) * (al - 2.0) * (al - 3.0) * (be - 1.0) * (be - 2.0) * (be - 3.0)
        - 2.0
            * a
            * (18.0 + 6.0 * a * a + 9.0 * (al - 3.0) * al - 27.0 * be
                + (37.0 - 11.0 * al) * al * be
                + (9.0 + al * (3.0 * al - 11.0)) * be * be
                + a * (9.0 - 9.0 * al - 9.0 * be + 5.0 * al * be))
            * ga
        + a * a * (18.0 * al + 18.0 * be - 18.0 - 18.0 * a - 11.0 * al * be) * ga * ga
        - 6.0 * a * a * a * ga * ga * ga;
    [c0, c1, c2, 1.0]
}

/// N = 2: `e_1 + e_2 = −q + a(2+γ) − 3 + (α−1)(β−1)`.
pub fn n2_sum(free: &FreeParams, q: f64) -> f64 {
    -q + free.a * (2.0 + free.gamma) - 3.0 + (free.alpha - 1.0) * (free.beta - 1.0)
}

/// N = 2: `(e_1+1)(e_2+1)/(e_1 e_2)`.
pub fn n2_product_ratio(free: &FreeParams, q: f64) -> f64 {
    let FreeParams { a, alpha: al, beta: be, gamma: ga } = *free;
    (-q + a * (al - 3.0) * (be - 3.0) + 3.0 * a * ga) / ((a - 1.0) * (al - 3.0) * (be - 3.0))
}

fn admissible_e(e: &[f64]) -> std::result::Result<(), String> {
    match e.iter().find(|x| nonpositive_integer(**x).is_some()) {
        Some(bad) => Err(format!("e = {bad} is zero or a negative integer")),
        None => Ok(()),
    }
}

pub fn q_candidates_n0(free: &FreeParams) -> Result<CandidateSet> {
    let params = validated_for(free, 0)?.with_q(q_for_n0(free));
    let case = ReductionCase::new(params, Vec::new(), 0)?;
    Ok(CandidateSet { order: 0, method: ReductionMethod::ClosedForm, cases: vec![case], rejected: Vec::new() })
}

/// Collects cases for each real root, given a rule that maps q to the
/// ansatz parameters (or a reason to reject).
fn assemble<F>(free: &FreeParams, order: usize, coeffs: &[f64], mut ansatz_for: F) -> Result<CandidateSet>
where
    F: FnMut(f64) -> std::result::Result<Vec<f64>, String>,
{
    let base = validated_for(free, order)?;
    let all = match coeffs.len() {
        3 => poly::quadratic_roots(coeffs[2], coeffs[1], coeffs[0]).to_vec(),
        4 => poly::cubic_roots(coeffs[3], coeffs[2], coeffs[1], coeffs[0]).to_vec(),
        _ => poly::roots(coeffs),
    };
    let (real, complex) = poly::split_real(coeffs, &all);
    let mut rejected: Vec<Rejection> = complex
        .iter()
        .map(|z| Rejection { q_re: z.re, q_im: z.im, q_root_index: None, reason: "complex q root".into() })
        .collect();
    if real.is_empty() {
        let roots: Vec<String> = complex.iter().map(|z| format!("{}{:+}i", z.re, z.im)).collect();
        return Err(Error::NoRealRoot(format!("q-condition of order {order} has roots {}", roots.join(", "))));
    }

    let mut cases = Vec::new();
    for (index, q) in real.into_iter().enumerate() {
        let reject = |reason: String| Rejection { q_re: q, q_im: 0.0, q_root_index: Some(index), reason };
        let e = match ansatz_for(q).and_then(|e| admissible_e(&e).map(|_| e)) {
            Ok(e) => e,
            Err(reason) => {
                rejected.push(reject(reason));
                continue;
            }
        };
        match ReductionCase::new(base.with_q(q), e, index) {
            Ok(case) => cases.push(case),
            Err(err) => rejected.push(reject(err.to_string())),
        }
    }
    Ok(CandidateSet { order, method: ReductionMethod::ClosedForm, cases, rejected })
}

pub fn q_candidates_n1(free: &FreeParams) -> Result<CandidateSet> {
    let coeffs = n1_quadratic(free);
    assemble(free, 1, &coeffs, |q| Ok(vec![n1_e1(free, q)]))
}

pub fn q_candidates_n2(free: &FreeParams) -> Result<CandidateSet> {
    for (name, value, forbidden) in [("alpha", free.alpha, 3.0), ("beta", free.beta, 3.0), ("a", free.a, 1.0)] {
        if (value - forbidden).abs() < crate::params::INTEGER_PROXIMITY {
            return Err(Error::PreconditionViolation(format!(
                "N = 2 closed form needs {name} != {forbidden}"
            )));
        }
    }
    let coeffs = n2_cubic(free);
    assemble(free, 2, &coeffs, |q| {
        let sum = n2_sum(free, q);
        let ratio = n2_product_ratio(free, q);
        if (ratio - 1.0).abs() < 1e-12 {
            return Err("degenerate constraint: (e1+1)(e2+1)/(e1 e2) = 1 leaves e1 e2 undetermined".into());
        }
        let product = (sum + 1.0) / (ratio - 1.0);
        match poly::quadratic_roots(1.0, -sum, product) {
            [r1, r2] if poly::is_real(&r1) && poly::is_real(&r2) => Ok(vec![r1.re, r2.re]),
            [r1, r2] => Err(format!("complex e pair {}{:+}i, {}{:+}i", r1.re, r1.im, r2.re, r2.im)),
        }
    })
}
