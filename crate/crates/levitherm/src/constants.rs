//! Physical constants (CODATA 2018) and thermal statistical factors.
//!
//! All internal computation is in SI units with hbar kept explicit.
//! Angular frequencies are in rad/s throughout.

use crate::error::{Error, Result};

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum (m/s).
pub const C: f64 = 299_792_458.0;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Boltzmann constant (J/K).
pub const KB: f64 = 1.380_649e-23;

/// Fixed CODATA constants bundled for callers that want them as a value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConstants {
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Speed of light (m/s).
    pub c: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Boltzmann constant (J/K).
    pub kb: f64,
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self {
            hbar: HBAR,
            c: C,
            eps0: EPS0,
            kb: KB,
        }
    }
}

/// Inverse temperature beta = 1/(kB T) in 1/J.
pub fn beta_from_temperature(t_kelvin: f64) -> f64 {
    1.0 / (KB * t_kelvin)
}

/// coth(beta·hbar·omega/2), computed without overflow or cancellation.
///
/// Limits: 2/(beta·hbar·omega) as omega -> 0 and 1 as omega -> infinity.
pub fn thermal_coth(beta: f64, omega: f64) -> Result<f64> {
    if omega <= 0.0 {
        return Err(Error::Domain(format!(
            "thermal_coth requires omega > 0, got {omega}"
        )));
    }
    if beta <= 0.0 {
        return Err(Error::Domain(format!(
            "thermal_coth requires beta > 0, got {beta}"
        )));
    }
    Ok(coth(0.5 * beta * HBAR * omega))
}

/// coth(x) for x > 0, stable for both tiny and huge arguments.
pub(crate) fn coth(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 1e-4 {
        // Laurent series: 1/x + x/3 - x^3/45
        1.0 / x + x / 3.0 - x * x * x / 45.0
    } else if x > 20.0 {
        // 1 + 2 e^{-2x} to machine precision for x > 20
        1.0 + 2.0 * (-2.0 * x).exp()
    } else {
        let e = (-2.0 * x).exp();
        (1.0 + e) / (1.0 - e)
    }
}

/// Bose–Einstein occupation n(T, omega) = 1/(exp(hbar·omega/kB·T) - 1).
pub fn bose_occupation(t_kelvin: f64, omega: f64) -> Result<f64> {
    if t_kelvin <= 0.0 {
        return Err(Error::Domain(format!(
            "bose_occupation requires T > 0, got {t_kelvin}"
        )));
    }
    if omega <= 0.0 {
        return Err(Error::Domain(format!(
            "bose_occupation requires omega > 0, got {omega}"
        )));
    }
    let x = HBAR * omega / (KB * t_kelvin);
    if x > 700.0 {
        return Ok(0.0);
    }
    Ok(1.0 / x.exp_m1())
}

/// 1/sinh^2(x) for x > 0 without overflow; used by the specific-heat integrand.
pub(crate) fn inv_sinh_sq(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 1e-4 {
        let x2 = x * x;
        1.0 / x2 - 1.0 / 3.0 + x2 / 15.0
    } else if x > 350.0 {
        0.0
    } else {
        let e = (-x).exp();
        let s = 0.5 * (1.0 / e - e);
        1.0 / (s * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coth_saturates_at_unity() {
        // beta·hbar·omega -> infinity
        let beta = 1.0 / (KB * 1e-6);
        let omega = 1e16;
        assert_relative_eq!(thermal_coth(beta, omega).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn coth_classical_asymptote() {
        // beta·hbar·omega = 1e-6 -> 2/(beta hbar omega) within 1e-8 relative
        let omega = 1e12;
        let beta = 1e-6 / (HBAR * omega);
        let expect = 2.0 / (beta * HBAR * omega);
        assert_relative_eq!(
            thermal_coth(beta, omega).unwrap(),
            expect,
            max_relative = 1e-8
        );
    }

    #[test]
    fn coth_at_unit_argument() {
        // beta·hbar·omega = 2 -> coth(1) = 1.3130352854993312
        let omega = 1e13;
        let beta = 2.0 / (HBAR * omega);
        assert_relative_eq!(
            thermal_coth(beta, omega).unwrap(),
            1.313_035_285_499_331_2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn bose_half_occupation_at_ln2() {
        // hbar·omega/kB·T = ln 2 -> n = 1
        let omega = 1e13;
        let t = HBAR * omega / (KB * std::f64::consts::LN_2);
        assert_relative_eq!(bose_occupation(t, omega).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn bose_freezes_out() {
        let omega = 1e15;
        assert_eq!(bose_occupation(1e-8, omega).unwrap(), 0.0);
    }

    #[test]
    fn bose_at_unit_argument() {
        // hbar·omega/kB·T = 1 -> 1/(e - 1)
        let omega = 1e13;
        let t = HBAR * omega / KB;
        assert_relative_eq!(
            bose_occupation(t, omega).unwrap(),
            1.0 / (std::f64::consts::E - 1.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn coth_equals_one_plus_two_bose() {
        // coth(beta hbar omega/2) = 1 + 2 n at 1e-12 across a wide argument range
        for &x in &[1e-6, 1e-3, 0.1, 1.0, 5.0, 30.0, 200.0] {
            let omega = 1e13;
            let t = HBAR * omega / (KB * x);
            let beta = beta_from_temperature(t);
            let lhs = thermal_coth(beta, omega).unwrap();
            let rhs = 1.0 + 2.0 * bose_occupation(t, omega).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(thermal_coth(1.0, -1.0).is_err());
        assert!(thermal_coth(1.0, 0.0).is_err());
        assert!(bose_occupation(-1.0, 1.0).is_err());
    }

    #[test]
    fn inv_sinh_sq_matches_naive() {
        for &x in &[1e-3_f64, 0.1, 1.0, 10.0, 100.0] {
            let naive = 1.0 / x.sinh().powi(2);
            assert_relative_eq!(inv_sinh_sq(x), naive, max_relative = 1e-10);
        }
    }
}
