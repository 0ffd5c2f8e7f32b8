//! Dense real polynomials in ascending coefficient order and their roots.

use nalgebra::{Complex, DMatrix};

/// Relative size of the imaginary part below which a root counts as real.
pub const REAL_ROOT_TOL: f64 = 1e-9;

pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Value and first derivative by Horner's scheme.
pub fn eval_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

pub fn mul(lhs: &[f64], rhs: &[f64]) -> Vec<f64> {
    if lhs.is_empty() || rhs.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; lhs.len() + rhs.len() - 1];
    for (i, &a) in lhs.iter().enumerate() {
        for (j, &b) in rhs.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

pub fn add(lhs: &[f64], rhs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; lhs.len().max(rhs.len())];
    for (i, &a) in lhs.iter().enumerate() {
        out[i] += a;
    }
    for (i, &b) in rhs.iter().enumerate() {
        out[i] += b;
    }
    out
}

pub fn scale(coeffs: &[f64], factor: f64) -> Vec<f64> {
    coeffs.iter().map(|c| c * factor).collect()
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// Monic polynomial with the given roots, `∏ (x − r)`.
pub fn from_roots(roots: &[f64]) -> Vec<f64> {
    roots.iter().fold(vec![1.0], |acc, &r| mul(&acc, &[-r, 1.0]))
}

/// Largest coefficient magnitude, used as the natural residual scale.
pub fn coefficient_scale(coeffs: &[f64]) -> f64 {
    coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
}

/// Residual magnitude relative to the sum of monomial magnitudes at `x`.
pub fn relative_residual(coeffs: &[f64], x: f64) -> f64 {
    let mut pow = 1.0;
    let mut mag = 0.0;
    for &c in coeffs {
        mag += (c * pow).abs();
        pow *= x;
    }
    eval(coeffs, x).abs() / mag.max(f64::MIN_POSITIVE)
}

/// One Newton step, kept only when it lowers the residual.
pub fn polish(coeffs: &[f64], x: f64) -> f64 {
    let (p, dp) = eval_with_derivative(coeffs, x);
    if dp == 0.0 || !dp.is_finite() {
        return x;
    }
    let next = x - p / dp;
    if next.is_finite() && eval(coeffs, next).abs() <= p.abs() {
        next
    } else {
        x
    }
}

/// Roots of `c2 x² + c1 x + c0` without cancellation in the real case.
pub fn quadratic_roots(c2: f64, c1: f64, c0: f64) -> [Complex<f64>; 2] {
    if c2 == 0.0 {
        let r = Complex::new(-c0 / c1, 0.0);
        return [r, r];
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc >= 0.0 {
        let t = -0.5 * (c1 + c1.signum() * disc.sqrt());
        let (r1, r2) = if t == 0.0 { (0.0, 0.0) } else { (t / c2, c0 / t) };
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        [Complex::new(lo, 0.0), Complex::new(hi, 0.0)]
    } else {
        let re = -c1 / (2.0 * c2);
        let im = (-disc).sqrt() / (2.0 * c2.abs());
        [Complex::new(re, -im), Complex::new(re, im)]
    }
}

/// Roots of `c3 x³ + c2 x² + c1 x + c0` (c3 ≠ 0): trigonometric form for three
/// real roots, Cardano otherwise.
pub fn cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> [Complex<f64>; 3] {
    let (b, c, d) = (c2 / c3, c1 / c3, c0 / c3);
    // x = t − b/3 gives t³ + p t + r = 0
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let r = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (r / 2.0).powi(2) + (p / 3.0).powi(3);

    if p == 0.0 && r == 0.0 {
        let x = Complex::new(-shift, 0.0);
        return [x, x, x];
    }
    if disc <= 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * r / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut xs = [0.0; 3];
        for (k, x) in xs.iter_mut().enumerate() {
            *x = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift;
        }
        xs.sort_by(f64::total_cmp);
        xs.map(|x| Complex::new(x, 0.0))
    } else {
        let sq = disc.sqrt();
        let u = (-r / 2.0 + sq).cbrt();
        let v = (-r / 2.0 - sq).cbrt();
        let real = u + v - shift;
        let re = -(u + v) / 2.0 - shift;
        let im = (u - v) * 3.0_f64.sqrt() / 2.0;
        [Complex::new(real, 0.0), Complex::new(re, -im.abs()), Complex::new(re, im.abs())]
    }
}

/// All complex roots of a polynomial of any degree, from the eigenvalues of
/// its companion matrix.
pub fn roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let degree = c.len().saturating_sub(1);
    match degree {
        0 => Vec::new(),
        1 => vec![Complex::new(-c[0] / c[1], 0.0)],
        2 => quadratic_roots(c[2], c[1], c[0]).to_vec(),
        _ => {
            let lead = c[degree];
            let mut m = DMatrix::<f64>::zeros(degree, degree);
            for i in 1..degree {
                m[(i, i - 1)] = 1.0;
            }
            for i in 0..degree {
                m[(i, degree - 1)] = -c[i] / lead;
            }
            m.complex_eigenvalues().iter().copied().collect()
        }
    }
}

pub fn is_real(z: &Complex<f64>) -> bool {
    z.im.abs() <= REAL_ROOT_TOL * (1.0 + z.re.abs())
}

/// Real roots (ascending, each polished once) and the remaining complex ones.
pub fn split_real(coeffs: &[f64], all: &[Complex<f64>]) -> (Vec<f64>, Vec<Complex<f64>>) {
    let mut real = Vec::new();
    let mut complex = Vec::new();
    for z in all {
        if is_real(z) {
            real.push(polish(coeffs, z.re));
        } else {
            complex.push(*z);
        }
    }
    real.sort_by(f64::total_cmp);
    (real, complex)
}
