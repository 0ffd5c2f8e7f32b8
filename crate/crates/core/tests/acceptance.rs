//! End-to-end acceptance criteria. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line; the process exits with
//! a failure status if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use heunx_core::evaluator::{asymptotic_constant, detect_truncation, ode_residual, operator_value, EvalControl};
use heunx_core::oracle::cross_check;
use heunx_core::params::FreeParams;
use heunx_core::recurrence::{closed_form_coefficients, three_term_coefficients};
use heunx_core::reduction::{
    identity_difference, identity_lhs, identity_scale, q_candidates_n1, q_candidates_n2, reduce, solve_reduction_general,
    verify_reduction, verify_reduction_at, CandidateSet, ReductionCase, SeedGrid,
};
use heunx_core::special::{gauss_2f1, gauss_2f1_deriv, pochhammer, SeriesControl};
use heunx_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{accepted_cases, draw_free, relative_gap};

const Z_POINTS: [f64; 3] = [0.1, 0.25, 0.4];

struct Outcome {
    passed: bool,
    summary: String,
}

impl Outcome {
    fn new(passed: bool, summary: impl Into<String>) -> Self {
        Self { passed, summary: summary.into() }
    }
}

fn timed(limit: Option<Duration>, body: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = body();
    let elapsed = start.elapsed();
    out.summary = format!("{} [{:.3} s]", out.summary, elapsed.as_secs_f64());
    if let Some(limit) = limit {
        if elapsed > limit {
            out.passed = false;
            out.summary = format!("{}; exceeded {:.1} s budget", out.summary, limit.as_secs_f64());
        }
    }
    out
}

fn anchor_free() -> FreeParams {
    FreeParams::new(2.0, 3.0, 2.0, 1.0)
}

fn criterion_1() -> Outcome {
    let run = || -> Result<Outcome> {
        let set = reduce(&anchor_free(), 0, false, &SeedGrid::default())?;
        let case = &set.cases[0];
        let three = three_term_coefficients(case.params(), 2)?;
        let closed = closed_form_coefficients(case.params(), case.e_list(), 2)?;
        let expected = [1.0, 0.5, 0.3];
        let mut worst = 0.0f64;
        for ((t, c), e) in three.values().iter().zip(closed.values()).zip(expected) {
            worst = worst.max(relative_gap(*t, e)).max(relative_gap(*c, e)).max(relative_gap(*t, *c));
        }
        let ok = set.cases.len() == 1 && case.q() == 4.0 && worst <= 1e-13;
        Ok(Outcome::new(
            ok,
            format!(
                "q = {}, c_1 = {} / {}, c_2 = {} / {}, max relative gap {:e}",
                case.q(),
                three.values()[1],
                closed.values()[1],
                three.values()[2],
                closed.values()[2],
                worst
            ),
        ))
    };
    run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")))
}

fn criterion_2(cases: &[ReductionCase]) -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_case = String::new();
    for case in cases {
        let three = match three_term_coefficients(case.params(), 50) {
            Ok(s) => s,
            Err(e) => return Outcome::new(false, format!("three-term generation failed: {e}")),
        };
        let two = match closed_form_coefficients(case.params(), case.e_list(), 50) {
            Ok(s) => s,
            Err(e) => return Outcome::new(false, format!("two-term generation failed: {e}")),
        };
        for n in 0..=50 {
            let gap = relative_gap(three.values()[n], two.values()[n]);
            if gap > worst {
                worst = gap;
                worst_case = format!("N = {}, a = {}, n = {n}", case.order(), case.params().a);
            }
        }
    }
    Outcome::new(
        worst <= 1e-11,
        format!("{} cases, max entrywise relative gap {:e} ({worst_case})", cases.len(), worst),
    )
}

fn criterion_3(cases: &[ReductionCase]) -> Outcome {
    let mut worst_diff = 0.0f64;
    let mut worst_top = 0.0f64;
    for case in cases {
        let order = case.order();
        let (diff, scale) = identity_difference(case.params(), case.e_list(), order + 2, 0.0);
        worst_diff = worst_diff.max(diff.abs() / scale.max(f64::MIN_POSITIVE));
        let report = verify_reduction(case);
        worst_top = worst_top.max((report.a_top - report.a_top_expected).abs());
        let expected = 2.0 + order as f64 - case.params().delta;
        worst_top = worst_top.max((report.a_top_expected - expected).abs());
    }
    Outcome::new(
        worst_diff <= 1e-8 && worst_top <= 1e-7,
        format!(
            "{} cases, max scaled (N+2)-th difference {:e}, max |A_(N+1) - (2+N-delta)| {:e}",
            cases.len(),
            worst_diff,
            worst_top
        ),
    )
}

fn criterion_4(cases: &[ReductionCase]) -> Outcome {
    let ctl = EvalControl::default();
    let mut worst_residual = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut min_shift_residual = f64::INFINITY;
    let mut min_shift_oracle = f64::INFINITY;
    let mut certified = 0;
    let mut terminating = 0;
    let mut defect_gap = 0.0f64;
    for case in cases {
        let run = || -> Result<(f64, f64, f64, f64, f64)> {
            let mut residual = 0.0f64;
            let mut shifted = 0.0f64;
            let moved = case.with_q(case.q() + 1e-2);
            let constant = asymptotic_constant(case)?;
            let mut gap = 0.0f64;
            for z in Z_POINTS {
                residual = residual.max(ode_residual(case, z)?);
                shifted = shifted.max(ode_residual(&moved, z)?);
                let l = operator_value(case, z, &ctl)?;
                gap = gap.max((l + constant).abs() / constant.abs().max(1.0));
            }
            let oracle = cross_check(case, &Z_POINTS, &ctl)?;
            let shifted_oracle = cross_check(&moved, &Z_POINTS, &ctl)?;
            Ok((residual, oracle, shifted, shifted_oracle, gap))
        };
        match run() {
            Ok((r, o, sr, so, gap)) => {
                worst_residual = worst_residual.max(r);
                worst_oracle = worst_oracle.max(o);
                min_shift_residual = min_shift_residual.min(sr);
                min_shift_oracle = min_shift_oracle.min(so);
                defect_gap = defect_gap.max(gap);
                if r < 1e-7 && o < 1e-7 {
                    certified += 1;
                }
                if detect_truncation(case).is_some() {
                    terminating += 1;
                }
            }
            Err(e) => return Outcome::new(false, format!("evaluation failed: {e}")),
        }
    }
    let ok = worst_residual < 1e-7 && worst_oracle < 1e-7 && min_shift_residual > 1e-4 && min_shift_oracle > 1e-4;
    Outcome::new(
        ok,
        format!(
            "{certified}/{} cases certified ({terminating} terminating); max ode_residual {:e}, max cross_check {:e}; \
             q+0.01 gives min ode_residual {:e}, min cross_check {:e}; \
             non-terminating sums satisfy z(z-1)(z-a)L[u] = -lim n^2 c_n to {:e}",
            cases.len(),
            worst_residual,
            worst_oracle,
            min_shift_residual,
            min_shift_oracle,
            defect_gap
        ),
    )
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-7 * x.abs().max(y.abs()).max(1.0)
}

fn same_case(a: &ReductionCase, b: &ReductionCase) -> bool {
    close(a.q(), b.q()) && a.sorted_e().iter().zip(b.sorted_e()).all(|(x, y)| close(*x, y))
}

fn sets_agree(closed: &Result<CandidateSet>, general: &Result<CandidateSet>) -> bool {
    let closed_cases: &[ReductionCase] = closed.as_ref().map(|s| s.cases.as_slice()).unwrap_or(&[]);
    let general_cases: &[ReductionCase] = general.as_ref().map(|s| s.cases.as_slice()).unwrap_or(&[]);
    closed_cases.len() == general_cases.len()
        && closed_cases.iter().all(|c| general_cases.iter().any(|g| same_case(c, g)))
        && general_cases.iter().all(|g| closed_cases.iter().any(|c| same_case(c, g)))
}

fn criterion_5(rng: &mut ChaCha8Rng) -> Outcome {
    let grid = SeedGrid::default();
    let mut mismatches = Vec::new();
    let mut compared = [0usize; 2];
    for (slot, order) in [1usize, 2].into_iter().enumerate() {
        for draw in 0..50 {
            let free = draw_free(rng, order);
            let closed = if order == 1 { q_candidates_n1(&free) } else { q_candidates_n2(&free) };
            let general = solve_reduction_general(&free, order, &grid);
            compared[slot] += closed.as_ref().map(|s| s.cases.len()).unwrap_or(0);
            if !sets_agree(&closed, &general) {
                mismatches.push(format!("N = {order} draw {draw} ({free:?})"));
            }
        }
    }

    let mut n3_cases = 0;
    let mut n3_failures = Vec::new();
    for draw in 0..10 {
        let free = draw_free(rng, 3);
        let Ok(set) = solve_reduction_general(&free, 3, &grid) else { continue };
        for case in &set.cases {
            n3_cases += 1;
            let on_grid = (1..=7).all(|n| {
                let n = n as f64;
                identity_lhs(case.params(), case.e_list(), n).abs()
                    <= 1e-9 * identity_scale(case.params(), case.e_list(), n).max(f64::MIN_POSITIVE)
            });
            let off = rng.random_range(0.05..0.95) + rng.random_range(0..10) as f64;
            let off_grid = verify_reduction_at(case.ansatz(), off.min(9.95)).passed;
            if !(on_grid && off_grid) {
                n3_failures.push(format!("draw {draw} q = {}", case.q()));
            }
        }
    }
    let ok = mismatches.is_empty() && n3_failures.is_empty() && n3_cases > 0;
    Outcome::new(
        ok,
        format!(
            "N=1: {} closed-form cases, N=2: {} closed-form cases, {} set mismatches {:?}; N=3: {} cases, {} failures {:?}",
            compared[0],
            compared[1],
            mismatches.len(),
            mismatches.iter().take(3).collect::<Vec<_>>(),
            n3_cases,
            n3_failures.len(),
            n3_failures.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_6() -> Outcome {
    let run = || -> Result<Outcome> {
        let mut lines = Vec::new();
        let mut ok = true;
        let mut count = 0;
        for (free, order) in [
            (FreeParams::new(1.7, 0.6, 2.0, 0.4), 2),
            (FreeParams::new(1.6, 0.35, 1.0, 0.8), 1),
            (FreeParams::new(-1.4, 0.35, 2.0, 0.8), 1),
            (FreeParams::new(2.5, 1.3, 2.0, 0.45), 1),
            (FreeParams::new(0.6, 2.3, 1.0, 1.2), 0),
        ] {
            let set = reduce(&free, order, false, &SeedGrid::default())?;
            for case in &set.cases {
                count += 1;
                let n0 = detect_truncation(case);
                let mut worst = 0.0f64;
                for z in Z_POINTS {
                    worst = worst.max(ode_residual(case, z)?);
                }
                ok &= n0.is_some_and(|n| n <= 500) && worst < 1e-10;
                lines.push(format!("N={order} beta={} n0={n0:?} residual {worst:e}", free.beta));
            }
        }
        Ok(Outcome::new(ok && count > 0, format!("{count} cases: {}", lines.join("; "))))
    };
    run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")))
}

fn criterion_7(rng: &mut ChaCha8Rng) -> Outcome {
    let ctl = SeriesControl::default();
    let mut binomial = 0.0f64;
    for _ in 0..500 {
        let a = rng.random_range(-3.0..3.0);
        let b = rng.random_range(0.1..3.0);
        let z = rng.random_range(-0.9..=0.9);
        let value = gauss_2f1(a, b, b, z, &ctl).map(|r| r.value).unwrap_or(f64::NAN);
        let exact = (1.0f64 - z).powf(-a);
        binomial = binomial.max(relative_gap(value, exact));
    }

    let mut derivative = 0.0f64;
    let h = 1e-5;
    for _ in 0..200 {
        let a = rng.random_range(-3.0..3.0);
        let b = rng.random_range(-3.0..3.0);
        let c = rng.random_range(0.5..4.0);
        let z = rng.random_range(-0.8..=0.8);
        let f = |x: f64| gauss_2f1(a, b, c, x, &ctl).map(|r| r.value).unwrap_or(f64::NAN);
        let fd = (f(z + h) - f(z - h)) / (2.0 * h);
        let d = gauss_2f1_deriv(a, b, c, z, 1, &ctl).unwrap_or(f64::NAN);
        derivative = derivative.max(relative_gap(fd, d));
    }

    let mut composition = 0.0f64;
    for _ in 0..500 {
        let x = rng.random_range(-10.0..10.0);
        let m = rng.random_range(0..=20);
        let n = rng.random_range(0..=20);
        let lhs = pochhammer(x, m + n);
        let rhs = pochhammer(x, m) * pochhammer(x + m as f64, n);
        composition = composition.max(relative_gap(rhs, lhs));
    }
    Outcome::new(
        binomial <= 1e-12 && derivative <= 1e-6 && composition <= 1e-13,
        format!("binomial {binomial:e}, derivative vs difference {derivative:e}, Pochhammer composition {composition:e}"),
    )
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4e55_2024);
    let cases = accepted_cases(&mut rng, 100);

    let results = [
        ("1 anchor reduction and coefficients", timed(Some(Duration::from_millis(100)), criterion_1)),
        ("2 two-term vs three-term coefficients", timed(Some(Duration::from_secs(5)), || criterion_2(&cases))),
        ("3 identity degree and leading coefficient", timed(None, || criterion_3(&cases))),
        ("4 equation residual and power-series oracle", timed(None, || criterion_4(&cases))),
        ("5 closed forms vs general solver", timed(Some(Duration::from_secs(60)), || criterion_5(&mut rng))),
        ("6 terminating expansions", timed(None, criterion_6)),
        ("7 kernel sanity", timed(None, || criterion_7(&mut rng))),
    ];

    let mut failed = 0;
    for (name, outcome) in &results {
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("criterion {name}: {tag}: {}", outcome.summary);
        failed += usize::from(!outcome.passed);
    }
    if failed > 0 {
        println!("{failed} of {} acceptance criteria failed", results.len());
        std::process::exit(1);
    }
}
