//! Polynomial root finding: companion-matrix eigenvalues refined by Newton steps.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Evaluate a real polynomial (coefficients in ascending order) at a complex point.
pub fn poly_eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Evaluate the derivative of a real polynomial at a complex point.
pub fn poly_eval_deriv(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * z + c * k as f64;
    }
    acc
}

/// All complex roots of a real polynomial with coefficients in ascending order
/// (`coeffs[k]` multiplies x^k). Degree up to 6 is supported; higher degrees
/// work but are not tuned. Roots are polished by Newton iteration and returned
/// with exact conjugate pairing for complex roots.
pub fn roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    // Strip trailing zero coefficients (zero leading coefficient).
    let mut deg = coeffs.len();
    while deg > 0 && coeffs[deg - 1] == 0.0 {
        deg -= 1;
    }
    if deg == 0 {
        return Err(Error::EmptyPolynomial);
    }
    let coeffs = &coeffs[..deg];
    let degree = deg - 1;
    if degree == 0 {
        return Ok(Vec::new());
    }

    // Scale to a monic polynomial for the companion matrix.
    let lead = coeffs[degree];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();

    let mut raw = if degree == 1 {
        vec![Complex64::new(-monic[0], 0.0)]
    } else {
        let mut m = DMatrix::<f64>::zeros(degree, degree);
        for i in 1..degree {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..degree {
            m[(i, degree - 1)] = -monic[i];
        }
        m.complex_eigenvalues().iter().copied().collect::<Vec<_>>()
    };

    // Newton polishing on the original (unscaled) polynomial.
    for r in raw.iter_mut() {
        *r = newton_polish(coeffs, *r);
    }

    pair_conjugates(&mut raw);
    Ok(raw)
}

/// A handful of Newton steps; falls back to the input if the derivative vanishes.
fn newton_polish(coeffs: &[f64], mut z: Complex64) -> Complex64 {
    for _ in 0..50 {
        let f = poly_eval(coeffs, z);
        let df = poly_eval_deriv(coeffs, z);
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        z -= step;
        if step.norm() <= 1e-15 * z.norm().max(1e-300) {
            break;
        }
    }
    z
}

/// Force numerically conjugate root pairs to be exactly conjugate, and tiny
/// imaginary parts of nearly real roots to zero.
fn pair_conjugates(roots: &mut [Complex64]) {
    let scale = roots
        .iter()
        .map(|r| r.norm())
        .fold(0.0_f64, f64::max)
        .max(1e-300);
    let tol = 1e-10 * scale;
    let n = roots.len();
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] {
            continue;
        }
        if roots[i].im.abs() < tol {
            roots[i].im = 0.0;
            used[i] = true;
            continue;
        }
        // find the closest conjugate partner
        let want = roots[i].conj();
        let mut best: Option<(usize, f64)> = None;
        for j in (i + 1)..n {
            if used[j] {
                continue;
            }
            let d = (roots[j] - want).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, d)) = best {
            if d < 1e-6 * scale {
                let re = 0.5 * (roots[i].re + roots[j].re);
                let im = 0.5 * (roots[i].im.abs() + roots[j].im.abs());
                let s = roots[i].im.signum();
                roots[i] = Complex64::new(re, s * im);
                roots[j] = Complex64::new(re, -s * im);
                used[i] = true;
                used[j] = true;
            }
        }
    }
}

/// Residual bound check used by tests: |p(r)| < tol·max|coeff|·max(1,|r|)^degree.
pub fn residual_ok(coeffs: &[f64], root: Complex64, tol: f64) -> bool {
    let degree = coeffs.len() - 1;
    let max_coeff = coeffs.iter().map(|c| c.abs()).fold(0.0_f64, f64::max);
    poly_eval(coeffs, root).norm() < tol * max_coeff * root.norm().max(1.0).powi(degree as i32)
}
