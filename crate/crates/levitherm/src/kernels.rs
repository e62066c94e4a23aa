//! Spectral densities and noise kernels of the composite environment: the
//! Markovian field noise, the Ohmic internal-bath noise with cutoff, and the
//! non-stationary dipole initial-state kernel.
//!
//! All weights are exposed in mass-reduced form: the oscillator masses cancel
//! identically in the internal-energy formula (each noise kernel carries the
//! mass that the energy prefactor divides out), so none of these functions
//! takes a mass. Normalizations are pinned by three independent anchors: the
//! t = 0 energy, the exact short-time curvature of the closed
//! dipole–internal-mode system, and detailed balance (equal-temperature
//! steady state equals the initial thermal energy). The first two fix the
//! initial-state kernel; the third fixes the field and bath weights.

use crate::constants::thermal_coth;
use crate::error::Result;
use crate::expsum::ExpSum;
use crate::matching::ModelParams;

/// Which bath a spectrum describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSource {
    /// Thermal electromagnetic field after the weak-coupling replacement.
    Em,
    /// Internal phonon bath (Ohmic with exponential cutoff).
    Itb,
}

/// Evaluation contract for a stationary noise spectrum. `weight(omega)` is
/// the symmetrized (Hadamard) spectral weight that multiplies the windowed
/// propagator magnitudes in the energy integrals.
#[derive(Debug, Clone)]
pub struct NoiseSpectrum {
    pub source: NoiseSource,
    /// Inverse temperature of the bath (1/J).
    pub beta: f64,
    /// High-frequency cutoff (rad/s); `None` disables the cutoff factor.
    pub cutoff: Option<f64>,
    /// Damping rate the bath exerts on the dipole: Gamma_EM for the field,
    /// 4·gamma_I for the internal bath.
    damping: f64,
}

impl NoiseSpectrum {
    pub fn em(p: &ModelParams, beta_em: f64) -> Self {
        Self {
            source: NoiseSource::Em,
            beta: beta_em,
            cutoff: Some(p.em_cutoff),
            damping: p.gamma_em(),
        }
    }

    pub fn itb(p: &ModelParams, beta_gamma: f64) -> Self {
        Self {
            source: NoiseSource::Itb,
            beta: beta_gamma,
            cutoff: Some(p.itb_cutoff),
            damping: 4.0 * p.gamma_i,
        }
    }

    pub fn without_cutoff(mut self) -> Self {
        self.cutoff = None;
        self
    }

    /// Damping rate this bath contributes to the dipole.
    pub fn damping(&self) -> f64 {
        self.damping
    }

    /// Spectral weight damping·omega·coth(beta hbar omega/2)·f_c(omega).
    ///
    /// Ohmic-times-coth: detailed balance against the damping this bath
    /// exerts on the dipole.
    pub fn weight(&self, omega: f64) -> Result<f64> {
        let coth = thermal_coth(self.beta, omega)?;
        Ok(self.damping * omega * coth * self.cutoff_factor(omega))
    }

    pub fn cutoff_factor(&self, omega: f64) -> f64 {
        match self.cutoff {
            Some(lam) => (-omega / lam).exp(),
            None => 1.0,
        }
    }
}

/// Ohmic internal-bath spectral density in mass-reduced form:
/// J(omega)/m = (2 gamma_I/pi)·omega·exp(-omega/Lambda).
pub fn itb_spectral_density(p: &ModelParams, omega: f64) -> f64 {
    (2.0 * p.gamma_i / std::f64::consts::PI) * omega * (-omega / p.itb_cutoff).exp()
}

/// Markovian field noise weight in mass-reduced form:
/// Gamma_EM·omega·coth(beta_EM hbar omega/2), uncut.
pub fn em_markov_spectrum(p: &ModelParams, beta_em: f64, omega: f64) -> Result<f64> {
    Ok(p.gamma_em() * omega * thermal_coth(beta_em, omega)?)
}

/// Non-stationary noise kernel of the dipole initial state, mass-reduced:
/// 2·omega_theta·g^2·coth(beta_Omega hbar Omega/2)·
///   [Gdot(lambda)·Gdot(lambda') + Omega^2·G(lambda)·G(lambda')].
///
/// The prefactor convention is fixed by the exact short-time curvature of the
/// closed two-mode system (see the energy tests).
pub fn odf_initial_kernel(
    p: &ModelParams,
    beta_omega: f64,
    g_omega: &ExpSum,
    lambda: f64,
    lambda_p: f64,
) -> Result<f64> {
    let coth = thermal_coth(beta_omega, p.omega_big)?;
    let gd = g_omega.eval(lambda, 1) * g_omega.eval(lambda_p, 1);
    let gg = g_omega.eval(lambda, 0) * g_omega.eval(lambda_p, 0);
    Ok(2.0 * p.omega_theta * p.g * p.g * coth * (gd + p.omega_big * p.omega_big * gg))
}
