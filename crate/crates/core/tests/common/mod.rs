#![allow(dead_code)]

use heunx_core::params::FreeParams;
use heunx_core::reduction::{reduce, ReductionCase, SeedGrid};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Smallest distance kept from integers for drawn exponent parameters.
pub const INTEGER_MARGIN: f64 = 0.05;

/// Smallest |a| drawn, so that z = 0.4 lies inside the power-series radius.
pub const MIN_ABS_A: f64 = 0.5;

pub fn clear_of_integers(x: f64) -> bool {
    (x - x.round()).abs() >= INTEGER_MARGIN
}

/// Uniform draw from [-3, 3] for (a, α, β, γ) that avoids the forbidden
/// integer values of every derived parameter for the given order.
pub fn draw_free(rng: &mut ChaCha8Rng, order: usize) -> FreeParams {
    loop {
        let a = rng.random_range(-3.0..3.0);
        let alpha = rng.random_range(-3.0..3.0);
        let beta = rng.random_range(-3.0..3.0);
        let gamma = rng.random_range(-3.0..3.0);
        let free = FreeParams::new(a, alpha, beta, gamma);
        let s = alpha + beta - 1.0 - order as f64;
        let ok = f64::abs(a) >= MIN_ABS_A
            && f64::abs(a - 1.0) >= INTEGER_MARGIN
            && [alpha, beta, gamma, s].iter().all(|x| clear_of_integers(*x));
        if ok {
            return free;
        }
    }
}

/// Accepted reductions with N cycling through 0, 1, 2, one draw at a time.
pub fn accepted_cases(rng: &mut ChaCha8Rng, count: usize) -> Vec<ReductionCase> {
    let grid = SeedGrid::default();
    let mut cases = Vec::with_capacity(count);
    let mut order = 0;
    while cases.len() < count {
        let free = draw_free(rng, order);
        if let Ok(set) = reduce(&free, order, false, &grid) {
            for case in set.cases {
                if cases.len() < count {
                    cases.push(case);
                }
            }
        }
        order = (order + 1) % 3;
    }
    cases
}

pub fn relative_gap(x: f64, reference: f64) -> f64 {
    if x == reference {
        0.0
    } else {
        (x - reference).abs() / reference.abs().max(f64::MIN_POSITIVE)
    }
}
