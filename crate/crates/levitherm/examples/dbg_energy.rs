// quick debug binary
use levitherm::matching::{ModelParams, TemperatureSet};
use levitherm::energy::EnergyEvaluator;
use levitherm::quad::QuadratureSpec;
use levitherm::constants::{HBAR, KB};

fn main() {
    let omega: f64 = 1e14;
    let wt: f64 = 3e13;
    let g = 2e12;
    let p = ModelParams {
        omega_big: omega,
        omega_theta: wt,
        g,
        gamma_i: 1e1,
        q2_over_m: 1e-30,
        itb_cutoff: 50.0 * wt,
        em_cutoff: 50.0 * omega,
        volume: 1e-22,
    };
    let t_particle = HBAR * wt / KB * 1.3;
    let t_field = HBAR * omega / KB * 0.7;
    let temps = TemperatureSet { t_em: t_field, t_omega: t_field, t_theta: t_particle, t_gamma: t_particle };
    let ev = EnergyEvaluator::new(&p, &temps, &QuadratureSpec::default()).unwrap();
    let horizon = 60.0 / wt;
    for frac in [0.1, 0.35, 0.6, 0.85, 1.0] {
        let t = frac * horizon;
        match ev.u_at(t) {
            Ok(u) => println!("t = {t:.3e}  u = {u:.6e}"),
            Err(e) => println!("t = {t:.3e}  ERROR: {e}"),
        }
    }
}
