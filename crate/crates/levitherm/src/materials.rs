//! Permittivity models, dipole polarizabilities and the built-in material
//! database (gold, silica) with bulk thermal data.

use crate::constants::{C, EPS0, HBAR, KB};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Permittivity-model parameters plus bulk thermal data for a named material.
///
/// The optical response is the single-resonance form
/// eps(omega) = 1 + omega_pl^2 / (omega_1^2 - omega^2 - i gamma_d omega),
/// with omega_1 = 0 for metals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub name: String,
    /// Plasma frequency (rad/s).
    pub omega_pl: f64,
    /// Lorentz resonance frequency (rad/s); 0 for metals.
    pub omega_1: f64,
    /// Dielectric damping (rad/s).
    pub gamma_d: f64,
    /// Einstein temperature (K) fixing the internal-mode frequency.
    pub theta_e: f64,
    /// Mass density (kg/m^3).
    pub rho: f64,
    /// Bulk heat capacity (J/(kg·K)), used by the quasi-equilibrium baseline.
    pub c_bulk: f64,
    /// Sound velocity (m/s), diagnostics only.
    pub c_sound: f64,
}

impl MaterialSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_pl", self.omega_pl),
            ("gamma_d", self.gamma_d),
            ("theta_e", self.theta_e),
            ("rho", self.rho),
            ("c_bulk", self.c_bulk),
            ("c_sound", self.c_sound),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "material {}: {} must be > 0, got {}",
                    self.name, name, v
                )));
            }
        }
        if self.omega_1 < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "material {}: omega_1 must be >= 0",
                self.name
            )));
        }
        Ok(())
    }

    /// Internal-mode angular frequency kB·Theta_E/hbar (rad/s).
    pub fn omega_theta(&self) -> f64 {
        KB * self.theta_e / HBAR
    }
}

/// Gold: Drude parameters omega_pl = 2pi·2.72e15 Hz, gamma_d = 2pi·6.45e12 Hz.
/// Handbook bulk data; Einstein temperature from the low-order fit of the
/// lattice specific heat.
pub fn gold() -> MaterialSpec {
    MaterialSpec {
        name: "gold".into(),
        omega_pl: 2.0 * std::f64::consts::PI * 2.72e15,
        omega_1: 0.0,
        gamma_d: 2.0 * std::f64::consts::PI * 6.45e12,
        theta_e: 135.66,
        rho: 19_300.0,
        c_bulk: 129.0,
        c_sound: 3_240.0,
    }
}

/// Silica: effective Drude parameters for the optical-range response of the
/// matched oscillator model (a single-resonance stand-in; the measured
/// infrared resonances of fused silica are not resolved by this form).
pub fn silica() -> MaterialSpec {
    MaterialSpec {
        name: "silica".into(),
        omega_pl: 3.719_17e16,
        omega_1: 0.0,
        gamma_d: 1.546_03e14,
        theta_e: 328.02,
        rho: 2_200.0,
        c_bulk: 730.0,
        c_sound: 5_900.0,
    }
}

/// Look up a built-in material by name.
pub fn builtin(name: &str) -> Option<MaterialSpec> {
    match name.to_ascii_lowercase().as_str() {
        "gold" => Some(gold()),
        "silica" => Some(silica()),
        _ => None,
    }
}

/// Parse a material database: a JSON array of MaterialSpec objects in SI
/// units. Unknown keys are rejected.
pub fn parse_database(json: &str) -> Result<Vec<MaterialSpec>> {
    let mats: Vec<MaterialSpec> = serde_json::from_str(json)
        .map_err(|e| Error::InvalidConfig(format!("material database: {e}")))?;
    for m in &mats {
        m.validate()?;
    }
    Ok(mats)
}

/// Spherical nanoparticle geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// Radius (m).
    pub radius: f64,
}

impl Geometry {
    pub fn from_radius_nm(radius_nm: f64) -> Result<Self> {
        let g = Self {
            radius: radius_nm * 1e-9,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "radius must be > 0, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Volume (4pi/3) R^3 in m^3.
    pub fn volume(&self) -> f64 {
        4.0 * std::f64::consts::PI / 3.0 * self.radius.powi(3)
    }

    /// The long-wavelength treatment is strained above a few hundred nm.
    pub fn long_wavelength_strained(&self) -> bool {
        self.radius > 300e-9
    }
}

/// Generalized permittivity eps(omega) = 1 + omega_pl^2/(omega_1^2 - omega^2 - i gamma_d omega).
pub fn permittivity(mat: &MaterialSpec, omega: f64) -> Result<Complex64> {
    if omega <= 0.0 {
        return Err(Error::Domain(format!(
            "permittivity requires omega > 0, got {omega}"
        )));
    }
    let den = Complex64::new(
        mat.omega_1 * mat.omega_1 - omega * omega,
        -mat.gamma_d * omega,
    );
    Ok(1.0 + mat.omega_pl * mat.omega_pl / den)
}

/// Clausius–Mossotti dipole polarizability alpha = 3 eps0 V (eps-1)/(eps+2),
/// in SI units C^2·s^2/kg.
pub fn cm_polarizability(mat: &MaterialSpec, geo: &Geometry, omega: f64) -> Result<Complex64> {
    let eps = permittivity(mat, omega)?;
    let den = eps + 2.0;
    if den.norm() == 0.0 {
        return Err(Error::LosslessResonance);
    }
    Ok(3.0 * EPS0 * geo.volume() * (eps - 1.0) / den)
}

/// Radiation-reaction-corrected polarizability
/// alpha_tilde = alpha / (1 - i alpha omega^3 / (6 pi eps0 c^3)).
pub fn dressed_polarizability(alpha: Complex64, omega: f64) -> Complex64 {
    let beta = omega.powi(3) / (6.0 * std::f64::consts::PI * EPS0 * C.powi(3));
    alpha / (Complex64::new(1.0, 0.0) - Complex64::new(0.0, beta) * alpha)
}

/// Net absorption factor chi = Im[alpha_tilde] - omega^3 |alpha_tilde|^2/(6 pi eps0 c^3).
///
/// For a dressed passive response this equals Im[alpha]/|1 - i beta alpha|^2 >= 0;
/// a negative value beyond rounding signals an implementation bug.
pub fn absorption_chi(alpha_tilde: Complex64, omega: f64) -> Result<f64> {
    let beta = omega.powi(3) / (6.0 * std::f64::consts::PI * EPS0 * C.powi(3));
    let chi = alpha_tilde.im - beta * alpha_tilde.norm_sqr();
    if chi < -1e-12 * alpha_tilde.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::ActiveMedium { chi, omega });
    }
    Ok(chi)
}

/// chi(omega) for a material/geometry directly from the bare polarizability.
pub fn chi(mat: &MaterialSpec, geo: &Geometry, omega: f64) -> Result<f64> {
    let alpha = cm_polarizability(mat, geo, omega)?;
    absorption_chi(dressed_polarizability(alpha, omega), omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gold_reduces_to_drude_form() {
        let m = gold();
        for &omega in &[1e13, 1e14, 1e15, 1e16] {
            let eps = permittivity(&m, omega).unwrap();
            let drude = 1.0
                - m.omega_pl * m.omega_pl
                    / Complex64::new(omega * omega, omega * m.gamma_d);
            assert!((eps - drude).norm() < 1e-12 * drude.norm());
        }
    }

    #[test]
    fn permittivity_tends_to_unity() {
        for m in [gold(), silica()] {
            let eps = permittivity(&m, 100.0 * m.omega_pl).unwrap();
            assert!((eps - 1.0).norm() < 1e-4);
        }
    }

    #[test]
    fn plasma_edge_real_part_vanishes() {
        // omega = omega_pl, omega_1 = 0, gamma_d -> 0: Re eps -> 0
        let mut m = gold();
        m.gamma_d = 1e3;
        let eps = permittivity(&m, m.omega_pl).unwrap();
        assert!(eps.re.abs() < 1e-12);
    }

    #[test]
    fn imaginary_part_positive() {
        for m in [gold(), silica()] {
            for k in 0..30 {
                let omega = 1e10 * 10f64.powf(k as f64 * 7.0 / 29.0);
                let eps = permittivity(&m, omega).unwrap();
                assert!(eps.im > 0.0, "Im eps <= 0 at {omega}");
            }
        }
    }

    #[test]
    fn perfect_conductor_limit() {
        // eps -> infinity gives alpha -> 3 eps0 V
        let geo = Geometry::from_radius_nm(50.0).unwrap();
        let mut m = gold();
        m.omega_pl = 1e20; // enormous plasma frequency drives |eps| up
        let alpha = cm_polarizability(&m, &geo, 1e13).unwrap();
        let expect = 3.0 * EPS0 * geo.volume();
        assert_relative_eq!(alpha.re, expect, max_relative = 1e-3);
    }

    #[test]
    fn vacuum_material_has_zero_polarizability() {
        // eps = 1 (omega_pl -> 0) gives alpha = 0
        let geo = Geometry::from_radius_nm(50.0).unwrap();
        let mut m = gold();
        m.omega_pl = 1e-6;
        let alpha = cm_polarizability(&m, &geo, 1e14).unwrap();
        assert!(alpha.norm() < 1e-40);
    }

    #[test]
    fn dressing_limits() {
        let geo = Geometry::from_radius_nm(50.0).unwrap();
        // alpha = 0 stays 0
        assert_eq!(
            dressed_polarizability(Complex64::new(0.0, 0.0), 1e15),
            Complex64::new(0.0, 0.0)
        );
        // low frequency: alpha_tilde -> alpha
        let m = gold();
        let alpha = cm_polarizability(&m, &geo, 1e10).unwrap();
        let at = dressed_polarizability(alpha, 1e10);
        assert!((at - alpha).norm() < 1e-10 * alpha.norm());
    }

    #[test]
    fn dressing_reduces_magnitude_near_resonance() {
        // near the Froehlich resonance the radiative correction damps the response
        let geo = Geometry::from_radius_nm(50.0).unwrap();
        let m = gold();
        let omega = m.omega_pl / 3f64.sqrt();
        let alpha = cm_polarizability(&m, &geo, omega).unwrap();
        let at = dressed_polarizability(alpha, omega);
        assert!(at.norm() < alpha.norm());
    }

    #[test]
    fn chi_zero_for_zero_response() {
        assert_eq!(absorption_chi(Complex64::new(0.0, 0.0), 1e15).unwrap(), 0.0);
    }

    #[test]
    fn purely_real_response_is_flagged_active() {
        // a lossless (purely real) alpha_tilde makes chi negative: the Im part
        // is required for a passive result
        let at = Complex64::new(1e-33, 0.0);
        assert!(matches!(
            absorption_chi(at, 1e15),
            Err(Error::ActiveMedium { .. })
        ));
    }

    #[test]
    fn chi_positive_in_thermal_band() {
        let geo = Geometry::from_radius_nm(50.0).unwrap();
        let m = gold();
        let omega = KB * 300.0 / HBAR;
        assert!(chi(&m, &geo, omega).unwrap() > 0.0);
    }

    #[test]
    fn passivity_on_log_grid() {
        // chi >= 0 for gold and silica on omega in [1e10, 1e17]
        for m in [gold(), silica()] {
            let geo = Geometry::from_radius_nm(100.0).unwrap();
            for k in 0..=70 {
                let omega = 1e10 * 10f64.powf(k as f64 / 10.0);
                let c = chi(&m, &geo, omega).unwrap();
                assert!(c >= 0.0, "{} chi < 0 at {omega}", m.name);
            }
        }
    }

    #[test]
    fn static_polarizability_real_for_dielectrics() {
        let mut m = silica();
        m.omega_1 = 2.0e14; // genuine Lorentz dielectric
        let geo = Geometry::from_radius_nm(50.0).unwrap();
        let alpha = cm_polarizability(&m, &geo, 1e6).unwrap();
        assert!(alpha.re > 0.0);
        assert!(alpha.im.abs() < 1e-6 * alpha.re);
    }

    #[test]
    fn database_roundtrip_and_unknown_key_rejection() {
        let good = serde_json::to_string(&vec![gold(), silica()]).unwrap();
        let mats = parse_database(&good).unwrap();
        assert_eq!(mats.len(), 2);
        let bad = r#"[{"name":"x","omega_pl":1.0,"omega_1":0.0,"gamma_d":1.0,
            "theta_e":1.0,"rho":1.0,"c_bulk":1.0,"c_sound":1.0,"bogus":3}]"#;
        assert!(parse_database(bad).is_err());
    }

    #[test]
    fn geometry_flags() {
        let g = Geometry::from_radius_nm(400.0).unwrap();
        assert!(g.long_wavelength_strained());
        assert!(!Geometry::from_radius_nm(50.0)
            .unwrap()
            .long_wavelength_strained());
        assert!(Geometry::from_radius_nm(-1.0).is_err());
    }
}
