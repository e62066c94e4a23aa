//! Mapping measured material data onto the minimal-model parameters, the
//! coupling bound, diagnostic ratios, and the model polarizability used to
//! validate the match.

use crate::constants::{beta_from_temperature, C, EPS0, HBAR, KB};
use crate::error::{Error, Result};
use crate::materials::{Geometry, MaterialSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// The matched minimal-model parameters.
///
/// The coupling rate `g` follows the response-function convention: it enters
/// every kernel through the product 2·Omega·omega_theta·g^2, consistent with
/// the matching identities and the g bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Dipole resonance frequency (rad/s).
    pub omega_big: f64,
    /// Internal-mode frequency (rad/s).
    pub omega_theta: f64,
    /// Dipole–internal-mode energy exchange rate (rad/s).
    pub g: f64,
    /// Dipole–internal-bath damping rate (rad/s).
    pub gamma_i: f64,
    /// Effective charge squared over dipole mass, q^2/m (C^2/kg).
    pub q2_over_m: f64,
    /// Internal-bath spectral cutoff (rad/s).
    pub itb_cutoff: f64,
    /// Radiative high-frequency cutoff (rad/s) for finite-time noise integrals.
    pub em_cutoff: f64,
    /// Particle volume (m^3).
    pub volume: f64,
}

/// Warnings produced when a parameter set leaves the intended regime.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegimeFlags {
    /// g/omega_theta or omega_theta/Omega above 0.1.
    pub hierarchy_strained: bool,
    /// Gamma_EM + 4 gamma_I >= Omega: the dipole response is overdamped.
    pub overdamped_dipole: bool,
}

impl ModelParams {
    /// Radiation-reaction frequency scale omega_q = 6 pi c^3 eps0 / (q^2/m).
    pub fn omega_q(&self) -> f64 {
        6.0 * std::f64::consts::PI * C.powi(3) * EPS0 / self.q2_over_m
    }

    /// Radiative damping rate of the dipole, Gamma_EM = Omega^2/omega_q.
    pub fn gamma_em(&self) -> f64 {
        self.omega_big * self.omega_big / self.omega_q()
    }

    /// Total dipole damping Gamma_EM + 4 gamma_I.
    pub fn total_damping(&self) -> f64 {
        self.gamma_em() + 4.0 * self.gamma_i
    }

    pub fn validate(&self) -> Result<RegimeFlags> {
        for (name, v) in [
            ("Omega", self.omega_big),
            ("omega_theta", self.omega_theta),
            ("g", self.g),
            ("gamma_I", self.gamma_i),
            ("q2_over_m", self.q2_over_m),
            ("itb_cutoff", self.itb_cutoff),
            ("em_cutoff", self.em_cutoff),
            ("volume", self.volume),
        ] {
            if !(v > 0.0) && name != "g" {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
            if name == "g" && v < 0.0 {
                return Err(Error::InvalidConfig(format!("g must be >= 0, got {v}")));
            }
        }
        if !(self.g < self.omega_theta && self.omega_theta < self.omega_big) {
            return Err(Error::InvalidConfig(format!(
                "parameter ordering g < omega_theta < Omega violated: g={:.3e}, omega_theta={:.3e}, Omega={:.3e}",
                self.g, self.omega_theta, self.omega_big
            )));
        }
        Ok(RegimeFlags {
            hierarchy_strained: self.g / self.omega_theta > 0.1
                || self.omega_theta / self.omega_big > 0.1,
            overdamped_dipole: self.total_damping() >= self.omega_big,
        })
    }
}

/// Initial temperatures of the four subsystems (field, dipole, internal mode,
/// internal bath).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureSet {
    pub t_em: f64,
    pub t_omega: f64,
    pub t_theta: f64,
    pub t_gamma: f64,
}

impl TemperatureSet {
    /// Common particle temperature, field at a different one.
    pub fn particle_field(t_particle: f64, t_em: f64) -> Self {
        Self {
            t_em,
            t_omega: t_particle,
            t_theta: t_particle,
            t_gamma: t_particle,
        }
    }

    pub fn uniform(t: f64) -> Self {
        Self::particle_field(t, t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("T_EM", self.t_em),
            ("T_Omega", self.t_omega),
            ("T_theta", self.t_theta),
            ("T_gamma", self.t_gamma),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn beta_em(&self) -> f64 {
        beta_from_temperature(self.t_em)
    }
    pub fn beta_omega(&self) -> f64 {
        beta_from_temperature(self.t_omega)
    }
    pub fn beta_theta(&self) -> f64 {
        beta_from_temperature(self.t_theta)
    }
    pub fn beta_gamma(&self) -> f64 {
        beta_from_temperature(self.t_gamma)
    }
}

/// Default internal-bath cutoff, 50·omega_theta.
pub const ITB_CUTOFF_OVER_OMEGA_THETA: f64 = 50.0;
/// Default radiative cutoff, 50·Omega.
pub const EM_CUTOFF_OVER_OMEGA: f64 = 50.0;

/// Match a material/geometry pair to model parameters at coupling rate `g`.
///
/// Identities: gamma_I = gamma_D/4; q^2/m = eps0·V·omega_pl^2;
/// omega_theta = kB·Theta_E/hbar; and Omega solves
/// omega_pl^2/3 + omega_1^2 = Omega^2 + 2·omega_theta·g^2/Omega
/// (Newton iteration seeded at the g = 0 value).
pub fn match_model(mat: &MaterialSpec, geo: &Geometry, g: f64) -> Result<ModelParams> {
    mat.validate()?;
    geo.validate()?;
    if !(g >= 0.0) {
        return Err(Error::InvalidConfig(format!("g must be >= 0, got {g}")));
    }
    let omega_theta = mat.omega_theta();
    let rhs = mat.omega_pl * mat.omega_pl / 3.0 + mat.omega_1 * mat.omega_1;
    let mut omega = rhs.sqrt();
    if !(omega > 0.0) {
        return Err(Error::UnphysicalCoupling);
    }
    // Newton on f(W) = W^2 + 2 omega_theta g^2 / W - rhs
    for _ in 0..100 {
        let f = omega * omega + 2.0 * omega_theta * g * g / omega - rhs;
        let df = 2.0 * omega - 2.0 * omega_theta * g * g / (omega * omega);
        let step = f / df;
        omega -= step;
        if !(omega > 0.0) {
            return Err(Error::UnphysicalCoupling);
        }
        if step.abs() <= 1e-15 * omega {
            break;
        }
    }

    let params = ModelParams {
        omega_big: omega,
        omega_theta,
        g,
        gamma_i: mat.gamma_d / 4.0,
        q2_over_m: EPS0 * geo.volume() * mat.omega_pl * mat.omega_pl,
        itb_cutoff: ITB_CUTOFF_OVER_OMEGA_THETA * omega_theta,
        em_cutoff: EM_CUTOFF_OVER_OMEGA * omega,
        volume: geo.volume(),
    };
    Ok(params)
}

/// Upper bound on the coupling rate from integrating the internal-bath
/// spectral density over a half-width `delta` around omega_theta:
/// g_max = omega_theta·sqrt((2/pi)(gamma_I/Omega)(delta/omega_theta)).
pub fn g_upper_bound(p: &ModelParams, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 0.5 * p.omega_theta) {
        return Err(Error::Domain(format!(
            "delta must lie in (0, omega_theta/2], got {delta}"
        )));
    }
    Ok(p.omega_theta
        * ((2.0 / std::f64::consts::PI) * (p.gamma_i / p.omega_big) * (delta / p.omega_theta))
            .sqrt())
}

/// Thermal field–dipole coupling ratio
/// gamma_e/Omega = (kB T / hbar Omega)^2 · sqrt(V omega_pl^2 Omega / (2 pi c^3)),
/// with a weak-coupling flag when it is below 1e-2.
pub fn em_coupling_ratio(p: &ModelParams, t_em: f64) -> (f64, bool) {
    let v_wpl2 = p.q2_over_m / EPS0;
    let ratio = (KB * t_em / (HBAR * p.omega_big)).powi(2)
        * (v_wpl2 * p.omega_big / (2.0 * std::f64::consts::PI * C.powi(3))).sqrt();
    (ratio, ratio < 1e-2)
}

/// Full model polarizability
/// alpha(omega) = (q^2/m)·[Omega^2 - omega^2 - i 4 gamma_I omega
///                + 2 Omega omega_theta g^2/(omega^2 - omega_theta^2)]^{-1}.
pub fn model_polarizability(p: &ModelParams, omega: f64) -> Result<Complex64> {
    if omega <= 0.0 {
        return Err(Error::Domain(format!(
            "model_polarizability requires omega > 0, got {omega}"
        )));
    }
    if (omega - p.omega_theta).abs() < 1e-9 * p.omega_theta {
        return Err(Error::Domain(
            "model_polarizability: omega at the undamped internal-mode pole".into(),
        ));
    }
    let den = Complex64::new(
        p.omega_big * p.omega_big - omega * omega
            + 2.0 * p.omega_big * p.omega_theta * p.g * p.g
                / (omega * omega - p.omega_theta * p.omega_theta),
        -4.0 * p.gamma_i * omega,
    );
    Ok(p.q2_over_m / den)
}

/// Optical-range approximation of the model polarizability, valid for
/// omega near Omega:
/// alpha = (q^2/m)·[Omega^2 - omega^2 - i 4 gamma_I omega + 2 omega_theta g^2/Omega]^{-1}.
pub fn optical_range_polarizability(p: &ModelParams, omega: f64) -> Complex64 {
    let den = Complex64::new(
        p.omega_big * p.omega_big - omega * omega
            + 2.0 * p.omega_theta * p.g * p.g / p.omega_big,
        -4.0 * p.gamma_i * omega,
    );
    p.q2_over_m / den
}

/// Spacing scale of the phonon spectrum of a sphere, pi·c_s/R (diagnostic).
pub fn phonon_frequency_scale(radius: f64, c_sound: f64) -> f64 {
    std::f64::consts::PI * c_sound / radius
}
