//! Causal time-domain kernels represented as finite sums of complex
//! exponentials, f(t) = sum_j c_j t^{k_j} exp(s_j t) for t >= 0 (k_j <= 1),
//! with closed-form evaluation, convolution and finite-window Fourier
//! transforms.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// One term c · t^tpow · exp(s t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub residue: Complex64,
    pub pole: Complex64,
    /// Polynomial-in-t prefactor degree (0 or 1; 1 only for confluent poles).
    pub tpow: u8,
}

/// A causal kernel: f(t) = sum of terms for t >= 0, identically 0 for t < 0.
///
/// Poles are expected in the closed left half-plane and terms in
/// conjugate-closed sets so that evaluations are real.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    terms: Vec<ExpTerm>,
}

/// exp(z) that never produces NaN from hugely negative real parts.
pub(crate) fn exp_c(z: Complex64) -> Complex64 {
    if z.re < -745.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z.exp()
    }
}

/// e^z - 1, accurate for small |z|.
pub(crate) fn expm1_c(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        // z (1 + z/2 + z^2/6 + z^3/24 + z^4/120)
        let z2 = z * z;
        z * (Complex64::new(1.0, 0.0) + z / 2.0 + z2 / 6.0 + z2 * z / 24.0 + z2 * z2 / 120.0)
    } else {
        exp_c(z) - 1.0
    }
}

/// Integral of exp(z u) over u in [0, t]: (e^{zt} - 1)/z, with the z -> 0 limit t.
pub(crate) fn window_integral(z: Complex64, t: f64) -> Complex64 {
    let w = z * t;
    if w.norm() < 1e-4 {
        let w2 = w * w;
        t * (Complex64::new(1.0, 0.0) + w / 2.0 + w2 / 6.0 + w2 * w / 24.0 + w2 * w2 / 120.0)
    } else {
        expm1_c(w) / z
    }
}

/// Integral of u·exp(z u) over u in [0, t], with the z -> 0 limit t^2/2.
pub(crate) fn window_integral_t1(z: Complex64, t: f64) -> Complex64 {
    let w = z * t;
    if w.norm() < 1e-4 {
        // t^2 (1/2 + w/3 + w^2/8 + w^3/30 + w^4/144)
        let w2 = w * w;
        (t * t)
            * (Complex64::new(0.5, 0.0) + w / 3.0 + w2 / 8.0 + w2 * w / 30.0 + w2 * w2 / 144.0)
    } else {
        let e = exp_c(w);
        (t * e) / z - (e - 1.0) / (z * z)
    }
}

impl ExpSum {
    /// Build a kernel, enforcing stability (poles in the closed left
    /// half-plane up to rounding) and a nonempty term list.
    pub fn new(terms: Vec<ExpTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain("ExpSum requires at least one term".into()));
        }
        let scale = terms
            .iter()
            .map(|t| t.pole.norm())
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        for t in &terms {
            if t.pole.re > 1e-9 * scale {
                return Err(Error::UnstableModel {
                    pole: format!("{:e}{:+e}i", t.pole.re, t.pole.im),
                });
            }
            if t.tpow > 1 {
                return Err(Error::ConfluentPoles);
            }
        }
        Ok(Self { terms })
    }

    /// Build without the stability check (runaway diagnostics only).
    pub fn new_unchecked(terms: Vec<ExpTerm>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    /// Largest pole real part (all <= 0 for stable kernels); the slowest
    /// decay rate is its magnitude.
    pub fn slowest_decay_rate(&self) -> f64 {
        -self
            .terms
            .iter()
            .map(|t| t.pole.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Complex evaluation of the deriv_order-th derivative at t >= 0.
    fn eval_complex(&self, t: f64, deriv_order: u8) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for term in &self.terms {
            let s = term.pole;
            let e = exp_c(s * t);
            let v = match (term.tpow, deriv_order) {
                (0, 0) => e,
                (0, 1) => s * e,
                (0, 2) => s * s * e,
                (1, 0) => t * e,
                (1, 1) => (1.0 + s * t) * e,
                (1, 2) => (2.0 * s + s * s * t) * e,
                _ => unreachable!("tpow <= 1, deriv_order <= 2"),
            };
            acc += term.residue * v;
        }
        acc
    }

    /// Re[ sum_j c_j (d/dt)^n t^k e^{s_j t} ], derivatives handled analytically.
    /// Returns 0 for t < 0 (causality).
    pub fn eval(&self, t: f64, deriv_order: u8) -> f64 {
        assert!(deriv_order <= 2, "deriv_order must be 0, 1 or 2");
        if t < 0.0 {
            return 0.0;
        }
        self.eval_complex(t, deriv_order).re
    }

    /// Causal convolution (f * g)(t) = integral of f(t-tau) g(tau) over [0, t],
    /// returned in closed form. Pole confluences are absorbed into t·e^{st}
    /// terms where the result stays within prefactor degree 1, and error out
    /// otherwise.
    pub fn convolve(&self, other: &ExpSum) -> Result<ExpSum> {
        let scale = self
            .terms
            .iter()
            .chain(other.terms.iter())
            .map(|t| t.pole.norm())
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        let tol = 1e-9 * scale;

        let mut out: Vec<ExpTerm> = Vec::new();
        let mut push = |residue: Complex64, pole: Complex64, tpow: u8| {
            if residue.norm() == 0.0 {
                return;
            }
            for t in out.iter_mut() {
                if t.tpow == tpow && (t.pole - pole).norm() <= 1e-14 * scale {
                    t.residue += residue;
                    return;
                }
            }
            out.push(ExpTerm {
                residue,
                pole,
                tpow,
            });
        };

        for f in &self.terms {
            for g in &other.terms {
                let c = f.residue * g.residue;
                let s1 = f.pole;
                let s2 = g.pole;
                let confluent = (s2 - s1).norm() <= tol;
                match (f.tpow, g.tpow, confluent) {
                    (0, 0, false) => {
                        let inv = 1.0 / (s2 - s1);
                        push(c * inv, s2, 0);
                        push(-c * inv, s1, 0);
                    }
                    (0, 0, true) => {
                        push(c, s1, 1);
                    }
                    (0, 1, false) | (1, 0, false) => {
                        // exp at sa convolved with t·exp at sb
                        let (sa, sb) = if f.tpow == 0 { (s1, s2) } else { (s2, s1) };
                        let a = sb - sa;
                        let inv = 1.0 / a;
                        let inv2 = inv * inv;
                        push(c * inv, sb, 1);
                        push(-c * inv2, sb, 0);
                        push(c * inv2, sa, 0);
                    }
                    (1, 1, false) => {
                        let d = s1 - s2;
                        let inv2 = 1.0 / (d * d);
                        let inv3 = inv2 / d;
                        push(c * inv2, s1, 1);
                        push(-2.0 * c * inv3, s1, 0);
                        push(c * inv2, s2, 1);
                        push(2.0 * c * inv3, s2, 0);
                    }
                    _ => return Err(Error::ConfluentPoles),
                }
            }
        }
        if out.is_empty() {
            // identically zero convolution (cancelling residues)
            out.push(ExpTerm {
                residue: Complex64::new(0.0, 0.0),
                pole: Complex64::new(0.0, 0.0),
                tpow: 0,
            });
        }
        ExpSum::new(out)
    }

    /// Finite-window Fourier transform Phi(omega, t) = integral over [0, t]
    /// of f(u) e^{i omega u} du, in closed form with the resonant limits
    /// handled exactly.
    pub fn windowed_fourier(&self, omega: f64, t: f64) -> Complex64 {
        assert!(t >= 0.0, "windowed_fourier requires t >= 0");
        let iw = Complex64::new(0.0, omega);
        let mut acc = Complex64::new(0.0, 0.0);
        for term in &self.terms {
            let z = term.pole + iw;
            let v = match term.tpow {
                0 => window_integral(z, t),
                1 => window_integral_t1(z, t),
                _ => unreachable!(),
            };
            acc += term.residue * v;
        }
        acc
    }

    /// Laplace transform at s = -i·omega (the t -> infinity window limit for
    /// stable kernels).
    pub fn laplace_at(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for term in &self.terms {
            let d = s - term.pole;
            acc += match term.tpow {
                0 => term.residue / d,
                1 => term.residue / (d * d),
                _ => unreachable!(),
            };
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sin_kernel(omega: f64) -> ExpSum {
        // sin(omega t)/omega scaled: here exactly sin(t) for omega = 1:
        // residues ±1/(2i·omega)·... use f = (1/(2i w)) e^{iwt} - (1/(2i w)) e^{-iwt} = sin(wt)/w
        let half = Complex64::new(0.0, -0.5 / omega);
        ExpSum::new(vec![
            ExpTerm {
                residue: half,
                pole: Complex64::new(0.0, omega),
                tpow: 0,
            },
            ExpTerm {
                residue: -half,
                pole: Complex64::new(0.0, -omega),
                tpow: 0,
            },
        ])
        .unwrap()
    }

    fn decaying(rate: f64) -> ExpSum {
        ExpSum::new(vec![ExpTerm {
            residue: Complex64::new(1.0, 0.0),
            pole: Complex64::new(-rate, 0.0),
            tpow: 0,
        }])
        .unwrap()
    }

    #[test]
    fn sine_values_and_derivatives() {
        let f = sin_kernel(1.0);
        // sin(pi/2) = 1
        assert_relative_eq!(
            f.eval(std::f64::consts::FRAC_PI_2, 0),
            1.0,
            max_relative = 1e-12
        );
        // derivative at 0 is 1 (retarded normalization)
        assert_relative_eq!(f.eval(0.0, 1), 1.0, max_relative = 1e-12);
        // second derivative is -sin
        assert_relative_eq!(
            f.eval(std::f64::consts::FRAC_PI_2, 2),
            -1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn causality() {
        let f = sin_kernel(2.0);
        assert_eq!(f.eval(-1.0, 0), 0.0);
        assert_eq!(f.eval(-1e-12, 2), 0.0);
    }

    #[test]
    fn textbook_exponential_convolution() {
        // e^{-at} * e^{-bt} = (e^{-at} - e^{-bt})/(b - a)
        let (a, b) = (1.0, 3.0);
        let conv = decaying(a).convolve(&decaying(b)).unwrap();
        for &t in &[0.0_f64, 0.1, 0.7, 2.5] {
            let expect = ((-a * t).exp() - (-b * t).exp()) / (b - a);
            assert_relative_eq!(conv.eval(t, 0), expect, epsilon = 1e-14, max_relative = 1e-12);
        }
    }

    #[test]
    fn sine_self_convolution() {
        // (sin * sin)(t) = (sin t - t cos t)/2; at t = pi the value is pi/2
        let f = sin_kernel(1.0);
        let conv = f.convolve(&f).unwrap();
        let t = std::f64::consts::PI;
        assert_relative_eq!(conv.eval(t, 0), t / 2.0, max_relative = 1e-12);
        for &t in &[0.3_f64, 1.0, 2.0] {
            let expect = (t.sin() - t * t.cos()) / 2.0;
            assert_relative_eq!(conv.eval(t, 0), expect, epsilon = 1e-13, max_relative = 1e-11);
        }
    }

    #[test]
    fn confluent_pole_produces_secular_term() {
        let conv = decaying(2.0).convolve(&decaying(2.0)).unwrap();
        // e^{-2t} * e^{-2t} = t e^{-2t}
        for &t in &[0.0_f64, 0.5, 1.5] {
            assert_relative_eq!(
                conv.eval(t, 0),
                t * (-2.0 * t).exp(),
                epsilon = 1e-14,
                max_relative = 1e-12
            );
        }
        assert!(conv.terms().iter().any(|tm| tm.tpow == 1));
    }

    #[test]
    fn nested_confluence_errors_out() {
        let te = ExpSum::new(vec![ExpTerm {
            residue: Complex64::new(1.0, 0.0),
            pole: Complex64::new(-1.0, 0.0),
            tpow: 1,
        }])
        .unwrap();
        // t e^{-t} * e^{-t} would need a t^2 prefactor
        assert!(matches!(
            te.convolve(&decaying(1.0)),
            Err(Error::ConfluentPoles)
        ));
    }

    #[test]
    fn window_fourier_static_limit() {
        // f = e^{-t}, omega = 0, t -> infinity gives the Laplace value 1
        let f = decaying(1.0);
        let v = f.windowed_fourier(0.0, 80.0);
        assert_relative_eq!(v.re, 1.0, max_relative = 1e-12);
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn window_fourier_zero_window() {
        let f = sin_kernel(3.0);
        let v = f.windowed_fourier(5.0, 0.0);
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn window_fourier_resonant_limit() {
        // f = e^{i w0 t} term exactly at omega = -w0: integrand is 1, value t.
        let f = ExpSum::new(vec![
            ExpTerm {
                residue: Complex64::new(0.5, 0.0),
                pole: Complex64::new(0.0, 2.0),
                tpow: 0,
            },
            ExpTerm {
                residue: Complex64::new(0.5, 0.0),
                pole: Complex64::new(0.0, -2.0),
                tpow: 0,
            },
        ])
        .unwrap();
        // cos(2t): Phi(2, t) has the resonant half-term t/2
        let t = 7.0;
        let v = f.windowed_fourier(2.0, t);
        // exact: t/2 + sin(4t)/8·... compute directly:
        // integral cos(2u) e^{2iu} du over [0,t] = t/2 + (e^{4it}-1)/(8i)
        let exact = Complex64::new(t / 2.0, 0.0)
            + (Complex64::new(0.0, 4.0 * t).exp() - 1.0) / Complex64::new(0.0, 8.0);
        assert!((v - exact).norm() < 1e-12 * exact.norm());
    }

    #[test]
    fn laplace_matches_long_window() {
        let f = decaying(0.7);
        let omega = 1.3;
        let w = f.windowed_fourier(omega, 40.0 / 0.7);
        let l = f.laplace_at(Complex64::new(0.0, -omega));
        assert!((w - l).norm() < 1e-6 * l.norm());
    }

    #[test]
    fn unstable_pole_rejected() {
        let r = ExpSum::new(vec![ExpTerm {
            residue: Complex64::new(1.0, 0.0),
            pole: Complex64::new(1.0, 0.0),
            tpow: 0,
        }]);
        assert!(r.is_err());
    }
}
