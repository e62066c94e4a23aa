//! Laplace-domain retarded and Hadamard kernels of the matched model, their
//! residue inversion to exponential-sum time kernels, and radiation-reaction
//! diagnostics.
//!
//! The coupled-mode quartic is never solved as a raw polynomial at physical
//! parameters: the slow pole pair sits at i·omega_theta·(1 + delta) with
//! |delta| as small as 1e-18, far below what companion-matrix eigenvalues can
//! resolve against the carrier. `ThetaFactorization` instead iterates on the
//! product form and stores the offsets delta exactly.

use crate::constants::thermal_coth;
use crate::error::{Error, Result};
use crate::expsum::{ExpSum, ExpTerm};
use crate::matching::ModelParams;
use crate::roots::{poly_eval, poly_eval_deriv, roots};
use num_complex::Complex64;

/// Which kernel a LaplaceKernel holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelLabel {
    /// Dipole mode dressed by field and internal bath.
    GOmega,
    /// Internal mode dressed by the full environment.
    GTheta,
    /// Free internal mode.
    GThetaFree,
    /// Free internal-mode Hadamard kernel.
    HThetaFree,
    /// Nanoparticle response kernel (dipole dressed by internal mode and bath).
    GNp,
}

/// A strictly proper rational kernel in the Laplace variable s, with real
/// polynomial coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceKernel {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
    pub label: KernelLabel,
}

impl LaplaceKernel {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly_eval(&self.numerator, s) / poly_eval(&self.denominator, s)
    }

    fn degree(coeffs: &[f64]) -> usize {
        coeffs
            .iter()
            .rposition(|c| *c != 0.0)
            .unwrap_or(0)
    }

    pub fn is_strictly_proper(&self) -> bool {
        Self::degree(&self.numerator) < Self::degree(&self.denominator)
    }
}

/// Retarded dipole propagator G_Omega(s) = 1/(s^2 + Gamma s + Omega^2) with
/// Gamma = Gamma_EM + 4 gamma_I.
pub fn g_omega_laplace(p: &ModelParams) -> LaplaceKernel {
    let gamma = p.total_damping();
    LaplaceKernel {
        numerator: vec![1.0],
        denominator: vec![p.omega_big * p.omega_big, gamma, 1.0],
        label: KernelLabel::GOmega,
    }
}

/// Retarded internal-mode propagator
/// G_theta(s) = (s^2 + Gamma s + Omega^2) / D(s),
/// D(s) = (s^2 + omega_theta^2)(s^2 + Gamma s + Omega^2) - 2 Omega omega_theta g^2.
pub fn g_theta_laplace(p: &ModelParams) -> Result<LaplaceKernel> {
    let k = g_theta_laplace_unchecked(p);
    // stability check via the structured solver; g = 0 leaves the free
    // internal mode marginally stable on the imaginary axis, which is fine
    let fac = ThetaFactorization::new(p)?;
    for pole in fac.poles() {
        if pole.re > 0.0 || (p.g > 0.0 && pole.re == 0.0) {
            return Err(Error::UnstableModel {
                pole: format!("{:e}{:+e}i", pole.re, pole.im),
            });
        }
    }
    Ok(k)
}

fn g_theta_laplace_unchecked(p: &ModelParams) -> LaplaceKernel {
    let gamma = p.total_damping();
    let w2 = p.omega_big * p.omega_big;
    let wt2 = p.omega_theta * p.omega_theta;
    let coupling = 2.0 * p.omega_big * p.omega_theta * p.g * p.g;
    LaplaceKernel {
        numerator: vec![w2, gamma, 1.0],
        denominator: vec![
            wt2 * w2 - coupling,
            gamma * wt2,
            w2 + wt2,
            gamma,
            1.0,
        ],
        label: KernelLabel::GTheta,
    }
}

/// Nanoparticle response kernel
/// G_NP(s) = (s^2 + omega_theta^2) / [(s^2 + 4 gamma_I s + Omega^2)(s^2 + omega_theta^2) - 2 Omega omega_theta g^2];
/// (q^2/m)·G_NP(-i omega) reproduces the model polarizability.
pub fn g_np_laplace(p: &ModelParams) -> LaplaceKernel {
    let d = 4.0 * p.gamma_i;
    let w2 = p.omega_big * p.omega_big;
    let wt2 = p.omega_theta * p.omega_theta;
    let coupling = 2.0 * p.omega_big * p.omega_theta * p.g * p.g;
    LaplaceKernel {
        numerator: vec![wt2, 0.0, 1.0],
        denominator: vec![wt2 * w2 - coupling, d * wt2, w2 + wt2, d, 1.0],
        label: KernelLabel::GNp,
    }
}

/// Free internal-mode retarded and Hadamard kernels:
/// G_theta^0 = 1/(s^2 + omega_theta^2),
/// H_theta^0 = coth(beta_theta hbar omega_theta/2)·s/(omega_theta (s^2 + omega_theta^2)).
pub fn free_idf_kernels(
    p: &ModelParams,
    beta_theta: f64,
) -> Result<(LaplaceKernel, LaplaceKernel)> {
    let wt2 = p.omega_theta * p.omega_theta;
    let coth = thermal_coth(beta_theta, p.omega_theta)?;
    Ok((
        LaplaceKernel {
            numerator: vec![1.0],
            denominator: vec![wt2, 0.0, 1.0],
            label: KernelLabel::GThetaFree,
        },
        LaplaceKernel {
            numerator: vec![0.0, coth / p.omega_theta],
            denominator: vec![wt2, 0.0, 1.0],
            label: KernelLabel::HThetaFree,
        },
    ))
}

/// Partial-fraction inversion of a strictly proper kernel to an ExpSum.
/// Roots are grouped at relative tolerance 1e-9; groups of multiplicity two
/// produce t·e^{st} terms, higher multiplicities error out.
pub fn to_exp_sum(k: &LaplaceKernel) -> Result<ExpSum> {
    if !k.is_strictly_proper() {
        return Err(Error::Domain(
            "to_exp_sum requires a strictly proper kernel".into(),
        ));
    }
    // balance the polynomial before companion-matrix eigenvalues
    let n = LaplaceKernel::degree(&k.denominator);
    let c0 = k.denominator[0].abs();
    let cn = k.denominator[n].abs();
    let scale = if c0 > 0.0 {
        (c0 / cn).powf(1.0 / n as f64)
    } else {
        1.0
    };
    let scaled: Vec<f64> = k
        .denominator
        .iter()
        .enumerate()
        .map(|(i, c)| c * scale.powi(i as i32))
        .collect();
    let raw = roots(&scaled)?;
    let mut ps: Vec<Complex64> = raw.into_iter().map(|z| z * scale).collect();
    // polish in original coordinates
    for z in ps.iter_mut() {
        for _ in 0..20 {
            let f = poly_eval(&k.denominator, *z);
            let df = poly_eval_deriv(&k.denominator, *z);
            if df.norm() == 0.0 {
                break;
            }
            let step = f / df;
            *z -= step;
            if step.norm() <= 1e-15 * z.norm().max(1e-300) {
                break;
            }
        }
    }

    // sqrt(eps)-scale grouping: numerically computed double roots split by
    // about 1e-8 relative, while distinct physical poles sit much further apart
    let pole_scale = ps.iter().map(|p| p.norm()).fold(0.0_f64, f64::max).max(1e-300);
    let tol = 1e-7 * pole_scale;

    let mut used = vec![false; ps.len()];
    let mut terms = Vec::new();
    for i in 0..ps.len() {
        if used[i] {
            continue;
        }
        let mut group = vec![i];
        for j in (i + 1)..ps.len() {
            if !used[j] && (ps[j] - ps[i]).norm() <= tol {
                used[j] = true;
                group.push(j);
            }
        }
        used[i] = true;
        let p = ps[group[0]];
        match group.len() {
            1 => {
                let res = poly_eval(&k.numerator, p) / poly_eval_deriv(&k.denominator, p);
                terms.push(ExpTerm {
                    residue: res,
                    pole: p,
                    tpow: 0,
                });
            }
            2 => {
                // double pole: expand D around p through third order
                let p_mid = 0.5 * (ps[group[0]] + ps[group[1]]);
                let d2 = poly_second_deriv(&k.denominator, p_mid);
                let d3 = poly_third_deriv(&k.denominator, p_mid);
                let n0 = poly_eval(&k.numerator, p_mid);
                let n1 = poly_eval_deriv(&k.numerator, p_mid);
                let a = 2.0 * n0 / d2;
                let b = (2.0 / d2) * (n1 - n0 * d3 / (3.0 * d2));
                terms.push(ExpTerm {
                    residue: a,
                    pole: p_mid,
                    tpow: 1,
                });
                terms.push(ExpTerm {
                    residue: b,
                    pole: p_mid,
                    tpow: 0,
                });
            }
            _ => return Err(Error::ConfluentPoles),
        }
    }
    ExpSum::new(terms)
}

fn poly_second_deriv(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &c) in coeffs.iter().enumerate().skip(2).rev() {
        acc = acc * z + c * (k * (k - 1)) as f64;
    }
    acc
}

fn poly_third_deriv(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &c) in coeffs.iter().enumerate().skip(3).rev() {
        acc = acc * z + c * (k * (k - 1) * (k - 2)) as f64;
    }
    acc
}

/// The coupled-mode quartic D(s) in factorized form, with the slow pole pair
/// represented as i·omega_theta·(1 + delta) so that decay rates proportional
/// to g^2 survive at any coupling.
#[derive(Debug, Clone)]
pub struct ThetaFactorization {
    /// Carrier frequency of the slow pair (the bare internal-mode frequency).
    pub omega_theta: f64,
    /// Slow pole offset: pole_+ = i·omega_theta·(1 + delta), pole_- its conjugate.
    pub delta: Complex64,
    /// Fast pole pair (roots of the dressed dipole quadratic, g^2-corrected).
    pub fast: [Complex64; 2],
    /// Total dipole damping Gamma_EM + 4 gamma_I.
    pub gamma: f64,
    /// Dipole frequency.
    pub omega_big: f64,
    /// Coupling product 2 Omega omega_theta g^2.
    pub coupling: f64,
}

impl ThetaFactorization {
    pub fn new(p: &ModelParams) -> Result<Self> {
        let gamma = p.total_damping();
        let wt = p.omega_theta;
        let wb = p.omega_big;
        let coupling = 2.0 * wb * wt * p.g * p.g;

        // slow pair: delta solves delta(2 + delta) = -2 Omega g^2/(omega_theta P(s)),
        // s = i omega_theta (1 + delta), P(s) = s^2 + Gamma s + Omega^2
        let mut delta = Complex64::new(0.0, 0.0);
        for _ in 0..60 {
            let s = Complex64::new(0.0, wt) * (1.0 + delta);
            let pval = s * s + gamma * s + wb * wb;
            if pval.norm() == 0.0 {
                return Err(Error::UnstableModel {
                    pole: "slow/fast pole collision".into(),
                });
            }
            let rhs = -coupling / (wt * wt * pval);
            // branch of delta^2 + 2 delta - rhs·... : delta = -1 + sqrt(1 + rhs)
            let next = (Complex64::new(1.0, 0.0) + rhs).sqrt() - 1.0;
            let diff = (next - delta).norm();
            delta = next;
            if diff <= 1e-16 * delta.norm().max(1e-300) {
                break;
            }
        }

        // fast pair: Newton on D(s) seeded at the dressed-dipole quadratic roots
        let disc = Complex64::new(gamma * gamma - 4.0 * wb * wb, 0.0).sqrt();
        let seeds = [
            (Complex64::new(-gamma, 0.0) + disc) / 2.0,
            (Complex64::new(-gamma, 0.0) - disc) / 2.0,
        ];
        let mut fast = [Complex64::new(0.0, 0.0); 2];
        for (i, &seed) in seeds.iter().enumerate() {
            let mut s = seed;
            for _ in 0..60 {
                let f = (s * s + wt * wt) * (s * s + gamma * s + wb * wb) - coupling;
                let df = 2.0 * s * (s * s + gamma * s + wb * wb)
                    + (s * s + wt * wt) * (2.0 * s + gamma);
                if df.norm() == 0.0 {
                    break;
                }
                let step = f / df;
                s -= step;
                if step.norm() <= 1e-16 * s.norm().max(1e-300) {
                    break;
                }
            }
            fast[i] = s;
        }
        // keep conjugate symmetry for underdamped fast pairs
        if fast[0].im != 0.0 || fast[1].im != 0.0 {
            let re = 0.5 * (fast[0].re + fast[1].re);
            let im = 0.5 * (fast[0].im.abs() + fast[1].im.abs());
            if im > 1e-12 * wb {
                fast = [Complex64::new(re, im), Complex64::new(re, -im)];
            } else {
                fast[0].im = 0.0;
                fast[1].im = 0.0;
            }
        }

        let fac = Self {
            omega_theta: wt,
            delta,
            fast,
            gamma,
            omega_big: wb,
            coupling,
        };
        if fac.kappa_slow() <= 0.0 && p.g > 0.0 {
            return Err(Error::UnstableModel {
                pole: format!("slow pair decay rate {:e}", fac.kappa_slow()),
            });
        }
        Ok(fac)
    }

    /// Decay rate of the slow pair, kappa = omega_theta·Im(delta).
    pub fn kappa_slow(&self) -> f64 {
        self.omega_theta * self.delta.im
    }

    /// Shift of the slow-pair frequency away from the carrier,
    /// omega_theta·Re(delta).
    pub fn slow_frequency_shift(&self) -> f64 {
        self.omega_theta * self.delta.re
    }

    /// The slow poles as (carrier, offset) with pole = i·carrier + offset.
    /// Index 0 is the positive-frequency pole.
    pub fn slow_split(&self) -> [(f64, Complex64); 2] {
        let off = Complex64::new(0.0, self.omega_theta) * self.delta;
        [
            (self.omega_theta, off),
            (-self.omega_theta, off.conj()),
        ]
    }

    /// All four poles as plain complex numbers (offset precision collapsed).
    pub fn poles(&self) -> [Complex64; 4] {
        let [(c0, o0), (c1, o1)] = self.slow_split();
        [
            Complex64::new(0.0, c0) + o0,
            Complex64::new(0.0, c1) + o1,
            self.fast[0],
            self.fast[1],
        ]
    }

    /// (s^2 + omega_theta^2) evaluated at the positive slow pole without
    /// cancellation: -omega_theta^2·delta·(2 + delta).
    fn slow_s2_plus_wt2(&self) -> Complex64 {
        -self.omega_theta * self.omega_theta * self.delta * (2.0 + self.delta)
    }

    /// D'(s) at the positive-frequency slow pole.
    pub fn dprime_slow(&self) -> Complex64 {
        let s = Complex64::new(0.0, self.omega_theta) * (1.0 + self.delta);
        let pval = s * s + self.gamma * s + self.omega_big * self.omega_big;
        2.0 * s * pval + self.slow_s2_plus_wt2() * (2.0 * s + self.gamma)
    }

    /// D'(s) at fast pole i (0 or 1).
    pub fn dprime_fast(&self, i: usize) -> Complex64 {
        let s = self.fast[i];
        let pval = s * s + self.gamma * s + self.omega_big * self.omega_big;
        2.0 * s * pval
            + (s * s + self.omega_theta * self.omega_theta) * (2.0 * s + self.gamma)
    }
}

/// Roots of the radiation-reaction characteristic equation
/// s^2 + Omega^2 - s^3/omega_q = 0, which always has exactly one
/// right-half-plane (runaway) root near omega_q in the weak-coupling regime.
#[derive(Debug, Clone)]
pub struct RadiationReactionPoles {
    /// The unphysical growing root.
    pub runaway: Complex64,
    /// The oscillatory pair; its damping approximates Gamma_EM/2.
    pub oscillatory: [Complex64; 2],
}

/// Solve the radiation-reaction cubic. This is the only operation allowed to
/// return a right-half-plane root.
pub fn rr_poles(p: &ModelParams) -> Result<RadiationReactionPoles> {
    let wq = p.omega_q();
    let wb = p.omega_big;
    // s^3 - wq s^2 - wq Omega^2 = 0, scaled by wq: z = s/wq
    let r = wb / wq;
    let rs = roots(&[-r * r, 0.0, -1.0, 1.0])?;
    let mut runaway = None;
    let mut osc = Vec::new();
    for z in rs {
        let s = z * wq;
        if s.re > 0.0 {
            if runaway.is_some() {
                return Err(Error::Domain(
                    "radiation-reaction cubic produced two growing roots".into(),
                ));
            }
            runaway = Some(s);
        } else {
            osc.push(s);
        }
    }
    let runaway = runaway.ok_or_else(|| {
        Error::Domain("radiation-reaction cubic produced no growing root".into())
    })?;
    if osc.len() != 2 {
        return Err(Error::Domain(
            "radiation-reaction cubic produced an unexpected root pattern".into(),
        ));
    }
    Ok(RadiationReactionPoles {
        runaway,
        oscillatory: [osc[0], osc[1]],
    })
}

/// Radiative damping rate Gamma_EM = Omega^2/omega_q.
pub fn markov_damping(p: &ModelParams) -> f64 {
    p.gamma_em()
}
