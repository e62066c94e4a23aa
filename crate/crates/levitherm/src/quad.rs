//! Adaptive Gauss–Kronrod (G7/K15) quadrature with interval pre-splitting and
//! a declining-exponential change of variables for semi-infinite ranges.

use crate::error::{Error, Result};

/// 15-point Kronrod abscissae (positive half, descending).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_26,
    0.0,
];

/// 7-point Gauss weights (for the odd Kronrod abscissae).
const WG: [f64; 4] = [
    0.129_484_966_168_869_93,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod weights.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Tolerances and interval control for adaptive quadrature.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureSpec {
    /// Relative tolerance, in (0, 1e-2].
    pub rel_tol: f64,
    /// Absolute tolerance in the integrand's value units.
    pub abs_tol: f64,
    /// Maximum number of interval subdivisions before giving up.
    pub max_subdivisions: usize,
    /// Frequencies (rad/s) at which the interval is pre-split, sorted ascending.
    pub split_points: Vec<f64>,
    /// Decay scale for the semi-infinite tail map; 0 means derive it from the
    /// split points or the lower limit.
    pub tail_scale: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_subdivisions: 4000,
            split_points: Vec::new(),
            tail_scale: 0.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(Error::InvalidConfig(format!(
                "rel_tol must lie in (0, 1e-2], got {}",
                self.rel_tol
            )));
        }
        if self.split_points.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidConfig(
                "split_points must be sorted ascending".into(),
            ));
        }
        Ok(())
    }

    pub fn with_splits(mut self, splits: &[f64]) -> Self {
        self.split_points = splits.to_vec();
        self.split_points.sort_by(f64::total_cmp);
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// Result of one adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_bound: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// QUADPACK-style error rescaling.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One G7/K15 panel over [a, b].
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    let mut fv = [0.0_f64; 15];
    fv[7] = f_center;

    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[14 - j] = f2;
        let sum = f1 + f2;
        res_kronrod += WGK[j] * sum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * sum;
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let value = res_kronrod * half;
    let err = rescale_error((res_kronrod - res_gauss) * half, res_abs * half, res_asc * half);
    (value, err)
}

/// Adaptive integration of `f` over [a, b] where `b` may be infinite.
///
/// The interval is pre-split at `spec.split_points`; semi-infinite tails use
/// the substitution omega = a0 - L·ln(1 - x) so that exponentially decaying
/// integrands become polynomial-like on [0, 1).
pub fn quad_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    spec.validate()?;
    let mut evals = 0usize;

    let mut panels: Vec<Panel> = Vec::new();
    let mut edges: Vec<f64> = vec![a];
    for &s in &spec.split_points {
        if s > a && s < b {
            edges.push(s);
        }
    }

    if b.is_finite() {
        edges.push(b);
        for w in edges.windows(2) {
            let (v, e) = gk15(&f, w[0], w[1]);
            evals += 15;
            panels.push(Panel {
                a: w[0],
                b: w[1],
                value: v,
                error: e,
            });
        }
        refine(&f, &mut panels, spec, &mut evals)
    } else {
        // finite head panels up to the last edge, then a mapped tail
        let tail_from = *edges.last().unwrap();
        for w in edges.windows(2) {
            let (v, e) = gk15(&f, w[0], w[1]);
            evals += 15;
            panels.push(Panel {
                a: w[0],
                b: w[1],
                value: v,
                error: e,
            });
        }
        let lambda = if spec.tail_scale > 0.0 {
            spec.tail_scale
        } else {
            spec.split_points
                .last()
                .copied()
                .unwrap_or(0.0)
                .max(a.abs())
                .max(1.0)
        };
        let head = refine(&f, &mut panels, spec, &mut evals)?;

        let g = |x: f64| {
            let one_minus = 1.0 - x;
            if one_minus <= 1e-300 {
                return 0.0;
            }
            let omega = tail_from - lambda * one_minus.ln();
            f(omega) * lambda / one_minus
        };
        let (v, e) = gk15(&g, 0.0, 1.0);
        evals += 15;
        let mut tail_panels = vec![Panel {
            a: 0.0,
            b: 1.0,
            value: v,
            error: e,
        }];
        let tail = refine(&g, &mut tail_panels, spec, &mut evals)?;
        Ok(QuadResult {
            value: head.value + tail.value,
            error_bound: head.error_bound + tail.error_bound,
            evaluations: evals,
        })
    }
}

fn refine<F: Fn(f64) -> f64>(
    f: &F,
    panels: &mut Vec<Panel>,
    spec: &QuadratureSpec,
    evals: &mut usize,
) -> Result<QuadResult> {
    let mut subdivisions = 0usize;
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let target = (spec.rel_tol * total.abs()).max(spec.abs_tol);
        if err <= target || err <= 1e-15 * total.abs() {
            return Ok(QuadResult {
                value: total,
                error_bound: err,
                evaluations: *evals,
            });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                estimate: total,
                error_bound: err,
                subdivisions,
            });
        }
        // split the worst panel
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("panels nonempty");
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval exhausted at machine precision; accept its estimate
            panels.push(Panel { error: 0.0, ..p });
            continue;
        }
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        *evals += 30;
        panels.push(Panel {
            a: p.a,
            b: mid,
            value: v1,
            error: e1,
        });
        panels.push(Panel {
            a: mid,
            b: p.b,
            value: v2,
            error: e2,
        });
        subdivisions += 1;
    }
}

/// A frozen quadrature rule: the adaptive panel structure of a reference
/// integrand recorded as explicit nodes and weights, reusable for repeated
/// integrals that share the same difficult regions.
#[derive(Debug, Clone)]
pub struct FrozenQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl FrozenQuadrature {
    /// Run the adaptive algorithm on `f` over [a, b] (b may be infinite) and
    /// freeze the resulting panels.
    pub fn build<F: Fn(f64) -> f64>(
        f: F,
        a: f64,
        b: f64,
        spec: &QuadratureSpec,
    ) -> Result<FrozenQuadrature> {
        spec.validate()?;
        // Re-run the adaptive pass, but capture panels. Finite part:
        let mut edges: Vec<f64> = vec![a];
        for &s in &spec.split_points {
            if s > a && (b.is_infinite() || s < b) {
                edges.push(s);
            }
        }
        let mut evals = 0usize;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();

        let mut capture_identity = |panels: &[Panel]| {
            for p in panels {
                let center = 0.5 * (p.a + p.b);
                let half = 0.5 * (p.b - p.a);
                for j in 0..8 {
                    if j == 7 {
                        nodes.push(center);
                        weights.push(WGK[7] * half);
                    } else {
                        nodes.push(center - half * XGK[j]);
                        weights.push(WGK[j] * half);
                        nodes.push(center + half * XGK[j]);
                        weights.push(WGK[j] * half);
                    }
                }
            }
        };

        if b.is_finite() {
            edges.push(b);
            let mut panels = Vec::new();
            for w in edges.windows(2) {
                let (v, e) = gk15(&f, w[0], w[1]);
                panels.push(Panel {
                    a: w[0],
                    b: w[1],
                    value: v,
                    error: e,
                });
            }
            refine(&f, &mut panels, spec, &mut evals)?;
            capture_identity(&panels);
        } else {
            let tail_from = *edges.last().unwrap();
            let mut panels = Vec::new();
            for w in edges.windows(2) {
                let (v, e) = gk15(&f, w[0], w[1]);
                panels.push(Panel {
                    a: w[0],
                    b: w[1],
                    value: v,
                    error: e,
                });
            }
            refine(&f, &mut panels, spec, &mut evals)?;
            capture_identity(&panels);

            let lambda = if spec.tail_scale > 0.0 {
                spec.tail_scale
            } else {
                spec.split_points
                    .last()
                    .copied()
                    .unwrap_or(0.0)
                    .max(a.abs())
                    .max(1.0)
            };
            let g = |x: f64| {
                let one_minus = 1.0 - x;
                if one_minus <= 1e-300 {
                    return 0.0;
                }
                let omega = tail_from - lambda * one_minus.ln();
                f(omega) * lambda / one_minus
            };
            let (v, e) = gk15(&g, 0.0, 1.0);
            let mut tail_panels = vec![Panel {
                a: 0.0,
                b: 1.0,
                value: v,
                error: e,
            }];
            refine(&g, &mut tail_panels, spec, &mut evals)?;
            // capture tail nodes mapped back to omega with the Jacobian folded in
            for p in &tail_panels {
                let center = 0.5 * (p.a + p.b);
                let half = 0.5 * (p.b - p.a);
                let mut push = |x: f64, w: f64| {
                    let one_minus = 1.0 - x;
                    if one_minus <= 1e-300 {
                        return;
                    }
                    nodes.push(tail_from - lambda * one_minus.ln());
                    weights.push(w * lambda / one_minus);
                };
                for j in 0..8 {
                    if j == 7 {
                        push(center, WGK[7] * half);
                    } else {
                        push(center - half * XGK[j], WGK[j] * half);
                        push(center + half * XGK[j], WGK[j] * half);
                    }
                }
            }
        }
        Ok(FrozenQuadrature { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Integrate `g` with the frozen nodes and weights.
    pub fn integrate_with<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }

    /// Integrate using precomputed values matched to `nodes()` order and a
    /// per-node factor.
    pub fn integrate_tabulated<G: Fn(usize, f64) -> f64>(&self, g: G) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(i, (&x, &w))| w * g(i, x))
            .sum()
    }
}
