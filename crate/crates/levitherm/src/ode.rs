//! Embedded adaptive Runge–Kutta integration (Dormand–Prince 5(4)).

use crate::error::{Error, Result};

/// Dormand–Prince coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [
    1.0 / 5.0,
    3.0 / 10.0,
    4.0 / 5.0,
    8.0 / 9.0,
    1.0,
    1.0,
];
/// 5th-order solution weights.
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// 4th-order (embedded) weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step; 0 means (t1 - t0)/100.
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            initial_step: 0.0,
            max_steps: 50_000_000,
        }
    }
}

/// Dense record of the accepted solver steps.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

/// Integrate dy/dt = f(t, y) from t0 to t1, recording every accepted step.
pub fn integrate<F>(f: F, t0: f64, t1: f64, y0: &[f64], opts: &OdeOptions) -> Result<OdeSolution>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = if opts.initial_step > 0.0 {
        opts.initial_step
    } else {
        (t1 - t0) / 100.0
    };

    let mut sol = OdeSolution {
        t: vec![t0],
        y: vec![y.clone()],
    };

    let mut k = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    f(t, &y, &mut k[0]);

    let mut steps = 0usize;
    while t < t1 {
        if steps >= opts.max_steps {
            return Err(Error::StepSizeUnderflow {
                t,
                len: sol.t.len(),
            });
        }
        steps += 1;
        if t + h > t1 {
            h = t1 - t;
        }
        if h <= f64::EPSILON * t.abs().max(1e-300) {
            return Err(Error::StepSizeUnderflow {
                t,
                len: sol.t.len(),
            });
        }

        for stage in 0..6 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    acc += A[stage][j] * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            let ts = t + C[stage] * h;
            let (head, tail) = k.split_at_mut(stage + 1);
            let _ = head;
            f(ts, &ytmp, &mut tail[0]);
        }

        // error estimate from the embedded pair
        let mut err_norm: f64 = 0.0;
        let mut y5 = vec![0.0; n];
        for i in 0..n {
            let mut v5 = 0.0;
            let mut v4 = 0.0;
            for j in 0..7 {
                v5 += B5[j] * k[j][i];
                v4 += B4[j] * k[j][i];
            }
            y5[i] = y[i] + h * v5;
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y5[i].abs());
            let e = h * (v5 - v4) / sc;
            err_norm += e * e;
        }
        err_norm = (err_norm / n as f64).sqrt();

        if err_norm <= 1.0 {
            t += h;
            y.copy_from_slice(&y5);
            sol.t.push(t);
            sol.y.push(y.clone());
            // FSAL: k7 of the accepted step is f at the new point
            let last = k[6].clone();
            k[0].copy_from_slice(&last);
            if k[0].iter().all(|v| *v == 0.0) {
                f(t, &y, &mut k[0]);
            }
        } else {
            f(t, &y, &mut k[0]);
        }

        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }

    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay() {
        let sol = integrate(
            |_, y, dy| dy[0] = -y[0],
            0.0,
            5.0,
            &[1.0],
            &OdeOptions::default(),
        )
        .unwrap();
        let last = sol.y.last().unwrap()[0];
        assert_relative_eq!(last, (-5.0_f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn harmonic_oscillator_long_run() {
        let opts = OdeOptions {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            ..Default::default()
        };
        let sol = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            200.0,
            &[0.0, 1.0],
            &opts,
        )
        .unwrap();
        let t = *sol.t.last().unwrap();
        let x = sol.y.last().unwrap()[0];
        assert_relative_eq!(x, t.sin(), epsilon = 1e-6);
    }
}
