//! Reduction constraints of arbitrary order by multi-start damped Newton.
//!
//! Writing `E(x) = ∏(x + e_k) = Σ_j σ_j x^{N−j}` (σ_0 = 1), the identity at a
//! collocation point `n` reads
//!
//! ```text
//! U(n) E(n) + (Q̃(n−1) − q) E(n−1) − W(n) E(n−2) = 0
//! ```
//!
//! which is bilinear in q and σ. The unknowns `(q, σ_1..σ_N)` are found from
//! the N+1 collocation rows `n = 1..N+1`; the roots of `E` give the e_k.
//! Seeds come from the linear pencil `(M0 − q M1) σ = 0` of those rows, whose
//! eigenvalues are the roots of the degree-(N+1) q-condition, and from a
//! coarse grid around the order-1 quadratic roots.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{FreeParams, HeunParams};
use crate::poly;

use super::{validated_for, n1_quadratic, CandidateSet, ReductionCase, ReductionMethod, Rejection};

/// Seeds and iteration limits for [`solve_reduction_general`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedGrid {
    /// Offsets added to each base q, in units of `1 + |q_base|`.
    pub q_offsets: Vec<f64>,
    /// Starting e-sets; empty means `{0.5, 1.5, …, N−0.5}` and two rescalings.
    pub e_sets: Vec<Vec<f64>>,
    pub max_seeds: usize,
    /// Start from the eigenpairs of the collocation pencil as well.
    pub pencil_seeds: bool,
    pub max_iter: usize,
}

impl Default for SeedGrid {
    fn default() -> Self {
        Self {
            q_offsets: vec![0.0, -0.5, 0.5, -1.0, 1.0, -2.0, 2.0, -4.0, 4.0],
            e_sets: Vec::new(),
            max_seeds: 200,
            pencil_seeds: true,
            max_iter: 100,
        }
    }
}

/// A solution must reach this relative collocation residual to be kept.
const ACCEPT_RESIDUAL: f64 = 1e-10;

/// Solutions closer than this (relative) in (q, sorted e) are the same.
const DEDUP_TOL: f64 = 1e-8;

/// Collocation data at one point n.
struct Row {
    n: f64,
    upper: f64,
    middle: f64,
    lower: f64,
}

fn rows(p: &HeunParams, order: usize) -> Vec<Row> {
    let s = p.gamma_epsilon();
    let p0 = HeunParams { q: 0.0, ..*p };
    (1..=order + 1)
        .map(|n| {
            let n = n as f64;
            Row {
                n,
                upper: (1.0 - p.a) * (s - p.alpha - 1.0 + n) * (s - p.beta - 1.0 + n),
                middle: crate::recurrence::coeff_q_at(n - 1.0, &p0),
                lower: p.a * (p.epsilon + n - 2.0) * (n - 1.0),
            }
        })
        .collect()
}

/// `E(x)` from `σ_1..σ_N`, with its monomials `x^{N−j}` for j = 1..N.
fn e_poly(sigma: &[f64], x: f64) -> (f64, Vec<f64>) {
    let order = sigma.len();
    let powers: Vec<f64> = (0..=order).map(|k| x.powi(k as i32)).collect();
    let mut value = powers[order];
    let mut monomials = Vec::with_capacity(order);
    for (j, s) in sigma.iter().enumerate() {
        let m = powers[order - 1 - j];
        value += s * m;
        monomials.push(m);
    }
    (value, monomials)
}

/// Residuals, per-row scales and Jacobian in the (q, σ) unknowns.
fn sigma_system(rows: &[Row], y: &[f64]) -> (DVector<f64>, DVector<f64>, DMatrix<f64>) {
    let q = y[0];
    let sigma = &y[1..];
    let dim = rows.len();
    let mut f = DVector::zeros(dim);
    let mut scale = DVector::zeros(dim);
    let mut jac = DMatrix::zeros(dim, dim);
    for (i, r) in rows.iter().enumerate() {
        let (e0, m0) = e_poly(sigma, r.n);
        let (e1, m1) = e_poly(sigma, r.n - 1.0);
        let (e2, m2) = e_poly(sigma, r.n - 2.0);
        let terms = [r.upper * e0, (r.middle - q) * e1, -r.lower * e2];
        f[i] = terms.iter().sum();
        scale[i] = terms.iter().map(|t| t.abs()).sum();
        jac[(i, 0)] = -e1;
        for j in 0..sigma.len() {
            jac[(i, j + 1)] = r.upper * m0[j] + (r.middle - q) * m1[j] - r.lower * m2[j];
        }
    }
    (f, scale, jac)
}

/// Same system in the (q, e) unknowns.
fn e_system(rows: &[Row], y: &[f64]) -> (DVector<f64>, DVector<f64>, DMatrix<f64>) {
    let q = y[0];
    let e = &y[1..];
    let dim = rows.len();
    let mut f = DVector::zeros(dim);
    let mut scale = DVector::zeros(dim);
    let mut jac = DMatrix::zeros(dim, dim);
    let prod_except = |shift: f64, skip: Option<usize>| -> f64 {
        e.iter()
            .enumerate()
            .filter(|(k, _)| Some(*k) != skip)
            .map(|(_, ek)| ek + shift)
            .product()
    };
    for (i, r) in rows.iter().enumerate() {
        let terms = [
            r.upper * prod_except(r.n, None),
            (r.middle - q) * prod_except(r.n - 1.0, None),
            -r.lower * prod_except(r.n - 2.0, None),
        ];
        f[i] = terms.iter().sum();
        scale[i] = terms.iter().map(|t| t.abs()).sum();
        jac[(i, 0)] = -prod_except(r.n - 1.0, None);
        for j in 0..e.len() {
            jac[(i, j + 1)] = r.upper * prod_except(r.n, Some(j)) + (r.middle - q) * prod_except(r.n - 1.0, Some(j))
                - r.lower * prod_except(r.n - 2.0, Some(j));
        }
    }
    (f, scale, jac)
}

fn relative_residual(f: &DVector<f64>, scale: &DVector<f64>) -> f64 {
    f.iter()
        .zip(scale.iter())
        .map(|(v, s)| if *s > 0.0 { v.abs() / s } else { v.abs() })
        .fold(0.0, f64::max)
}

fn merit(f: &DVector<f64>, scale: &DVector<f64>) -> f64 {
    f.iter()
        .zip(scale.iter())
        .map(|(v, s)| {
            let r = v / s.max(f64::MIN_POSITIVE);
            r * r
        })
        .sum()
}

/// Damped Newton with step halving. Returns the final point and its
/// relative residual.
fn damped_newton<F>(y0: Vec<f64>, system: F, max_iter: usize) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> (DVector<f64>, DVector<f64>, DMatrix<f64>),
{
    let mut y = y0;
    let (mut f, mut scale, mut jac) = system(&y);
    for _ in 0..max_iter {
        let res = relative_residual(&f, &scale);
        if !res.is_finite() {
            break;
        }
        if res <= 1e-15 {
            return Ok((y, res));
        }
        let step = jac.clone().lu().solve(&(-&f)).ok_or(Error::JacobianSingular)?;
        if step.iter().any(|v| !v.is_finite()) {
            return Err(Error::JacobianSingular);
        }
        let current = merit(&f, &scale);
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= 1.0 / 1024.0 {
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a + lambda * b).collect();
            let (tf, ts, tj) = system(&trial);
            if merit(&tf, &ts) < current {
                y = trial;
                f = tf;
                scale = ts;
                jac = tj;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        let tiny_step = step.iter().zip(&y).all(|(d, v)| (lambda * d).abs() <= 1e-15 * (1.0 + v.abs()));
        if !accepted || tiny_step {
            break;
        }
    }
    let res = relative_residual(&f, &scale);
    Ok((y, res))
}

/// Elementary symmetric functions σ_1..σ_N of a set.
fn symmetric_functions(e: &[f64]) -> Vec<f64> {
    // ∏(x + e_k) in ascending powers; σ_j is the coefficient of x^{N−j}.
    let coeffs = e.iter().fold(vec![1.0], |acc, ek| poly::mul(&acc, &[*ek, 1.0]));
    let order = e.len();
    (1..=order).map(|j| coeffs[order - j]).collect()
}

/// e_k from σ: the negated roots of `E(x) = x^N + σ_1 x^{N−1} + … + σ_N`.
fn e_from_sigma(sigma: &[f64]) -> std::result::Result<Vec<f64>, Vec<Complex<f64>>> {
    let order = sigma.len();
    let mut asc: Vec<f64> = (0..order).map(|k| sigma[order - 1 - k]).collect();
    asc.push(1.0);
    let all = poly::roots(&asc);
    let (real, complex) = poly::split_real(&asc, &all);
    if complex.is_empty() {
        Ok(real.into_iter().map(|r| -r).collect())
    } else {
        Err(all.into_iter().map(|z| -z).collect())
    }
}

struct Seed {
    q: f64,
    sigma: Vec<f64>,
}

fn pencil_seeds(rows: &[Row], order: usize, rejected: &mut Vec<Rejection>) -> Vec<Seed> {
    let dim = order + 1;
    let m0 = DMatrix::from_fn(dim, dim, |i, j| {
        let r = &rows[i];
        let k = (order - j) as i32;
        r.upper * r.n.powi(k) + r.middle * (r.n - 1.0).powi(k) - r.lower * (r.n - 2.0).powi(k)
    });
    let m1 = DMatrix::from_fn(dim, dim, |i, j| (rows[i].n - 1.0).powi((order - j) as i32));
    let Some(m1_inv) = m1.clone().try_inverse() else {
        return Vec::new();
    };
    let eig = (&m1_inv * &m0).complex_eigenvalues();
    let mut seeds = Vec::new();
    for z in eig.iter() {
        if !poly::is_real(z) {
            if z.im > 0.0 {
                rejected.push(Rejection { q_re: z.re, q_im: z.im, q_root_index: None, reason: "complex q root".into() });
                rejected.push(Rejection { q_re: z.re, q_im: -z.im, q_root_index: None, reason: "complex q root".into() });
            }
            continue;
        }
        let q = z.re;
        let pencil = &m0 - &m1 * q;
        let svd = pencil.svd(false, true);
        let Some(v_t) = svd.v_t else { continue };
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, s)| if *s < best.1 { (i, *s) } else { best });
        let v = v_t.row(imin);
        if v[0].abs() < 1e-12 * v.norm() {
            continue;
        }
        let sigma: Vec<f64> = (1..dim).map(|j| v[j] / v[0]).collect();
        seeds.push(Seed { q, sigma });
    }
    seeds
}

fn grid_seeds(free: &FreeParams, order: usize, grid: &SeedGrid) -> Vec<Seed> {
    let [c0, c1, c2] = n1_quadratic(free);
    let bases: Vec<f64> = poly::quadratic_roots(c2, c1, c0).iter().map(|z| z.re).collect();
    let e_sets: Vec<Vec<f64>> = if grid.e_sets.is_empty() {
        let base: Vec<f64> = (0..order).map(|k| k as f64 + 0.5).collect();
        vec![
            base.clone(),
            base.iter().map(|e| 3.0 * e).collect(),
            base.iter().map(|e| -e - 0.25).collect(),
        ]
    } else {
        grid.e_sets.iter().filter(|s| s.len() == order).cloned().collect()
    };
    let mut seeds = Vec::new();
    for e in &e_sets {
        let sigma = symmetric_functions(e);
        for base in &bases {
            for off in &grid.q_offsets {
                seeds.push(Seed { q: base + off * (1.0 + base.abs()), sigma: sigma.clone() });
            }
        }
    }
    seeds
}

fn same_solution(a: &(f64, Vec<f64>), b: &(f64, Vec<f64>)) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= DEDUP_TOL * (1.0 + x.abs().max(y.abs()));
    close(a.0, b.0) && a.1.iter().zip(&b.1).all(|(x, y)| close(*x, *y))
}

/// Finds every real `(q, e_1..e_N)` reachable from the seeds for which the
/// identity vanishes, and certifies each one as a [`ReductionCase`].
pub fn solve_reduction_general(free: &FreeParams, order: usize, grid: &SeedGrid) -> Result<CandidateSet> {
    let base = validated_for(free, order)?;
    let rows = rows(&base, order);
    let mut rejected = Vec::new();

    let mut seeds = Vec::new();
    if grid.pencil_seeds {
        seeds.extend(pencil_seeds(&rows, order, &mut rejected));
    }
    seeds.extend(grid_seeds(free, order, grid));
    seeds.truncate(grid.max_seeds);
    let seeds_tried = seeds.len();

    let mut best_residual = f64::INFINITY;
    let mut found: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut complex_e: Vec<(f64, Vec<Complex<f64>>)> = Vec::new();

    for seed in seeds {
        let mut y0 = vec![seed.q];
        y0.extend(&seed.sigma);
        let Ok((y, res)) = damped_newton(y0, |y| sigma_system(&rows, y), grid.max_iter) else {
            continue;
        };
        best_residual = best_residual.min(res);
        if res > ACCEPT_RESIDUAL {
            continue;
        }
        let mut e = match e_from_sigma(&y[1..]) {
            Ok(e) => e,
            Err(roots) => {
                if !complex_e.iter().any(|(q, _)| (q - y[0]).abs() <= DEDUP_TOL * (1.0 + q.abs())) {
                    complex_e.push((y[0], roots));
                }
                continue;
            }
        };
        let mut q = y[0];
        // Polish in the original unknowns; repeated e_k make this singular,
        // in which case the σ-space solution stands.
        let mut ye = vec![q];
        ye.extend(&e);
        if let Ok((polished, pres)) = damped_newton(ye, |y| e_system(&rows, y), 5) {
            if pres <= res {
                q = polished[0];
                e = polished[1..].to_vec();
            }
        }
        e.sort_by(f64::total_cmp);
        let candidate = (q, e);
        if !found.iter().any(|f| same_solution(f, &candidate)) {
            found.push(candidate);
        }
    }

    for (q, roots) in complex_e {
        let text: Vec<String> = roots.iter().map(|z| format!("{}{:+}i", z.re, z.im)).collect();
        rejected.push(Rejection { q_re: q, q_im: 0.0, q_root_index: None, reason: format!("complex e set {}", text.join(", ")) });
    }

    found.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| {
        a.1.iter().zip(&b.1).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    }));
    let mut cases = Vec::new();
    for (index, (q, e)) in found.into_iter().enumerate() {
        match ReductionCase::new(base.with_q(q), e, index) {
            Ok(case) => cases.push(case),
            Err(err) => rejected.push(Rejection { q_re: q, q_im: 0.0, q_root_index: Some(index), reason: err.to_string() }),
        }
    }
    if cases.is_empty() && rejected.is_empty() {
        return Err(Error::NoSolutionFound { seeds: seeds_tried, best_residual });
    }
    Ok(CandidateSet { order, method: ReductionMethod::General, cases, rejected })
}
