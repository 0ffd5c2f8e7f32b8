//! Frozen reference values, each worked out by hand or from an independent
//! closed form.

use heunx_core::evaluator::{evaluate_expansion, evaluate_expansion_deriv, evaluate_partial, EvalControl};
use heunx_core::oracle::{frobenius_coefficients, frobenius_eval};
use heunx_core::params::{delta_from_fuchsian, validate_params, FreeParams, HeunParams, IssueCode};
use heunx_core::recurrence::{
    closed_form_coefficients, coeff_p, coeff_q, coeff_r, recurrence_residual, three_term_coefficients,
    two_term_coefficients,
};
use heunx_core::reduction::{
    delta_for_reduction, identity_lhs, q_for_n0, solve_reduction_general, verify_reduction, Ansatz, SeedGrid,
};
use heunx_core::special::{gauss_2f1, gauss_2f1_deriv, pochhammer, SeriesControl};
use heunx_core::ValidatedHeunParams;
use statrs::function::gamma::gamma;

fn anchor() -> HeunParams {
    HeunParams { a: 2.0, q: 4.0, alpha: 3.0, beta: 2.0, gamma: 1.0, delta: 2.0, epsilon: 3.0 }
}

fn valid(p: HeunParams) -> ValidatedHeunParams {
    validate_params(&p).unwrap()
}

#[test]
fn validation_examples() {
    assert!(validate_params(&anchor()).is_ok());
    let issues = validate_params(&HeunParams { a: 1.0, ..anchor() }).unwrap_err();
    assert!(issues.iter().any(|i| i.code == IssueCode::DegenerateSingularity));
    // α = 0 with ε adjusted so the Fuchsian relation still holds.
    let p = HeunParams { alpha: 0.0, epsilon: 0.0, ..anchor() };
    let issues = validate_params(&p).unwrap_err();
    assert!(issues.iter().any(|i| i.code == IssueCode::ForbiddenIntegerParameter && i.offending_value == 0.0));
}

#[test]
fn fuchsian_delta_examples() {
    assert_eq!(delta_from_fuchsian(3.0, 2.0, 1.0, 3.0), 2.0);
    assert_eq!(delta_from_fuchsian(0.0, 0.0, 0.0, 0.0), 1.0);
    assert_eq!(delta_from_fuchsian(2.0, 2.0, 1.0, 1.0), 3.0);
}

#[test]
fn pochhammer_examples() {
    assert_eq!(pochhammer(7.25, 0), 1.0);
    assert_eq!(pochhammer(3.0, 2), 12.0);
    assert_eq!(pochhammer(-2.0, 4), 0.0);
}

#[test]
fn hypergeometric_examples() {
    let ctl = SeriesControl::default();
    assert_eq!(gauss_2f1(0.3, -1.7, 2.2, 0.0, &ctl).unwrap().value, 1.0);
    assert!((gauss_2f1(2.0, 1.3, 1.3, 0.5, &ctl).unwrap().value - 4.0).abs() < 1e-13);
    let log = gauss_2f1(1.0, 1.0, 2.0, 0.5, &ctl).unwrap().value;
    assert!((log - 2.0 * std::f64::consts::LN_2).abs() < 1e-14);
    assert!((gauss_2f1_deriv(0.3, -1.7, 2.2, 0.0, 1, &ctl).unwrap() - 0.3 * -1.7 / 2.2).abs() < 1e-15);
    assert!((gauss_2f1_deriv(2.0, 1.3, 1.3, 0.5, 1, &ctl).unwrap() - 16.0).abs() < 1e-12);
    let h = 1e-5;
    let f = |z: f64| gauss_2f1(1.0, 1.0, 2.0, z, &ctl).unwrap().value;
    let fd = (f(0.25 + h) - f(0.25 - h)) / (2.0 * h);
    assert!((gauss_2f1_deriv(1.0, 1.0, 2.0, 0.25, 1, &ctl).unwrap() - fd).abs() < 1e-7);
}

#[test]
fn gauss_sum_at_unit_argument() {
    // Σ c_n = ₂F₁(γ+ε−α, γ+ε−β; γ+ε; 1) = Γ(s)Γ(α+β−s)/(Γ(α)Γ(β)) for N = 0.
    let free = FreeParams::new(2.0, 2.6, 1.9, 0.4);
    let p = valid(free.complete(0, q_for_n0(&free)));
    let s = p.gamma_epsilon();
    let exact = gamma(s) * gamma(p.alpha + p.beta - s) / (gamma(p.alpha) * gamma(p.beta));
    let sum = evaluate_expansion(&Ansatz::new(p, vec![]), 0.0, &EvalControl::default()).unwrap();
    assert!((sum.value - exact).abs() < 1e-12 * exact.abs(), "{} vs {exact}", sum.value);
}

#[test]
fn recurrence_coefficient_examples() {
    let p = anchor();
    assert_eq!(coeff_r(0, &p), 0.0);
    assert_eq!(coeff_r(1, &p), -4.0);
    assert_eq!(coeff_r(2, &p), -10.0);
    assert_eq!(coeff_q(0, &p), 2.0);
    assert_eq!(coeff_q(1, &p), 12.0);
    let zero_q = HeunParams { q: p.a * p.alpha * p.beta + p.a * (1.0 - p.delta) * p.epsilon, ..p };
    assert_eq!(coeff_q(0, &zero_q), 0.0);
    assert_eq!(coeff_p(0, &p).unwrap(), -3.0);
    assert!((coeff_p(1, &p).unwrap() + 9.6).abs() < 1e-14);
}

#[test]
fn coefficient_stream_examples() {
    let p = valid(anchor());
    assert_eq!(three_term_coefficients(&p, 0).unwrap().values(), &[1.0]);
    let three = three_term_coefficients(&p, 2).unwrap();
    assert!((three.values()[1] - 0.5).abs() < 1e-15 && (three.values()[2] - 0.3).abs() < 1e-15);
    let two = two_term_coefficients(&p, &[], 2).unwrap();
    assert_eq!(two.values(), &[1.0, 0.5, 0.3]);
    let closed = closed_form_coefficients(&p, &[], 60).unwrap();
    assert!(recurrence_residual(&three_term_coefficients(&p, 60).unwrap(), &p) < 1e-13);
    assert!(recurrence_residual(&closed, &p) < 1e-12);
    let moved = p.with_q(4.1);
    let broken = two_term_coefficients(&moved, &[], 60).unwrap();
    assert!(recurrence_residual(&broken, &moved) > 1e-3);
}

#[test]
fn reduction_examples() {
    assert_eq!(delta_for_reduction(0), 2.0);
    assert_eq!(delta_for_reduction(1), 3.0);
    assert_eq!(delta_for_reduction(2), 4.0);
    let p = anchor();
    assert!(identity_lhs(&p, &[], 1.0).abs() < 1e-12);
    assert!(identity_lhs(&HeunParams { q: 5.0, ..p }, &[], 1.0).abs() > 0.5);
    assert!(identity_lhs(&p, &[], 7.3).abs() < 1e-9 * 100.0);

    let report = verify_reduction(&Ansatz::new(valid(p), vec![]));
    assert!(report.passed && report.a_top.abs() < 1e-12);

    // δ moved off N + 2 (ε adjusted to keep the Fuchsian relation).
    let moved = HeunParams { delta: 2.01, epsilon: 2.99, ..p };
    let report = verify_reduction(&Ansatz::new(valid(moved), vec![]));
    assert!((report.a_top + 0.01).abs() < 1e-9, "{}", report.a_top);
    assert!(!report.passed);
}

#[test]
fn order_three_example_hits_forbidden_parameter() {
    // β = 1.5 gives γ+ε = α+β−1−N = −2.
    let free = FreeParams::new(2.0, 0.5, 1.5, 0.7);
    assert!(solve_reduction_general(&free, 3, &SeedGrid::default()).is_err());
    let issues = validate_params(&free.complete(3, 0.0)).unwrap_err();
    assert!(issues.iter().any(|i| i.code == IssueCode::ForbiddenIntegerParameter));
}

#[test]
fn expansion_examples() {
    let case = Ansatz::new(valid(anchor()), vec![]);
    let ctl = EvalControl::default();
    let partial: Vec<f64> = (1..=4).map(|m| evaluate_partial(&case, 0.0, m, 0, &ctl).unwrap()).collect();
    assert_eq!(partial[0], 1.0);
    assert_eq!(partial[1], 1.5);
    assert!((partial[2] - 1.8).abs() < 1e-15);
    assert!((partial[3] - 2.0).abs() < 1e-15);
    let single = evaluate_partial(&case, 0.3, 1, 0, &ctl).unwrap();
    let leading = gauss_2f1(3.0, 2.0, 4.0, 0.3, &SeriesControl::default()).unwrap().value;
    assert!((single - leading).abs() < 1e-14 * leading);
    let d = evaluate_expansion_deriv(&case, 0.0, 1, &ctl).unwrap().value;
    assert!((d - 3.0).abs() < 1e-12);
}

#[test]
fn power_series_examples() {
    let s = frobenius_coefficients(&valid(anchor()), 60).unwrap();
    assert_eq!(s.coefficients[1], 2.0);
    assert_eq!(frobenius_eval(&s, 0.0).unwrap().value, 1.0);
    assert!(frobenius_eval(&s, 0.25).unwrap().tail_estimate < 1e-12);
}
