//! Parametric hazard heads: closed-form hazard and cumulative hazard for the
//! Weibull and log-logistic families, their analytic partial derivatives,
//! weight activations, and mixture assembly.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Times below this floor are clamped before hazard evaluation; `t^(shape-1)`
/// is singular at 0 for shape < 1 and times are normalized to [0, 1], so an
/// absolute floor is meaningful.
pub const TIME_FLOOR: f64 = 1e-8;

/// Cumulative hazards are capped here before exponentiation so that
/// `exp(-H)` underflows to 0 instead of wandering through subnormals.
const CUM_HAZARD_CAP: f64 = 700.0;

/// Number of quadrature nodes for the cumulative hazard of mixtures with
/// negative weights.
pub(crate) const QUADRATURE_POINTS: usize = 256;

/// Distribution family of one hazard head. Both families take a scale and a
/// shape parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadFamily {
    Weibull,
    LogLogistic,
}

/// Partial derivatives of one head's hazard and cumulative hazard with
/// respect to its scale and shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadPartials {
    pub hazard_scale: f64,
    pub hazard_shape: f64,
    pub cum_hazard_scale: f64,
    pub cum_hazard_shape: f64,
}

impl HeadFamily {
    /// Hazard at `t` (clamped to [`TIME_FLOOR`]).
    pub fn hazard(self, scale: f64, shape: f64, t: f64) -> f64 {
        let t = t.max(TIME_FLOOR);
        match self {
            HeadFamily::Weibull => scale * shape * t.powf(shape - 1.0),
            HeadFamily::LogLogistic => {
                scale * shape * t.powf(shape - 1.0) / (1.0 + scale * t.powf(shape))
            }
        }
    }

    /// Cumulative hazard on [0, t]; exactly 0 for t <= 0.
    pub fn cum_hazard(self, scale: f64, shape: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let t = t.max(TIME_FLOOR);
        match self {
            HeadFamily::Weibull => scale * t.powf(shape),
            HeadFamily::LogLogistic => (1.0 + scale * t.powf(shape)).ln(),
        }
    }

    /// Analytic partials; the finite-difference oracle in the tests is the
    /// ground truth these must match.
    pub fn partials(self, scale: f64, shape: f64, t: f64) -> HeadPartials {
        let t = t.max(TIME_FLOOR);
        let ln_t = t.ln();
        let t_pow_sm1 = t.powf(shape - 1.0);
        let t_pow_s = t.powf(shape);
        match self {
            HeadFamily::Weibull => HeadPartials {
                hazard_scale: shape * t_pow_sm1,
                hazard_shape: scale * t_pow_sm1 * (1.0 + shape * ln_t),
                cum_hazard_scale: t_pow_s,
                cum_hazard_shape: scale * t_pow_s * ln_t,
            },
            HeadFamily::LogLogistic => {
                let u = scale * t_pow_s;
                let denom = 1.0 + u;
                HeadPartials {
                    hazard_scale: shape * t_pow_sm1 / (denom * denom),
                    hazard_shape: scale * t_pow_sm1 * (1.0 + shape * ln_t + u) / (denom * denom),
                    cum_hazard_scale: t_pow_s / denom,
                    cum_hazard_shape: u * ln_t / denom,
                }
            }
        }
    }
}

/// Per-sample parameters of a J-head mixture, post-activation.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub scale: Vec<f64>,
    pub shape: Vec<f64>,
    pub weight: Vec<f64>,
}

impl HeadParams {
    pub fn n_heads(&self) -> usize {
        self.scale.len()
    }
}

/// Weighted mixture hazard, clipped below at zero.
pub fn mixture_hazard(families: &[HeadFamily], params: &HeadParams, t: f64) -> f64 {
    raw_mixture_hazard(families, params, t).max(0.0)
}

/// Weighted hazard sum before clipping; negative-weight mixtures can dip
/// below zero here.
pub(crate) fn raw_mixture_hazard(families: &[HeadFamily], params: &HeadParams, t: f64) -> f64 {
    families
        .iter()
        .enumerate()
        .map(|(j, &family)| params.weight[j] * family.hazard(params.scale[j], params.shape[j], t))
        .sum()
}

/// Mixture cumulative hazard. With nonnegative weights this is the analytic
/// weighted sum of head cumulative hazards. Any negative weight switches to a
/// composite-trapezoid integral of the clipped hazard over [0, t], which
/// keeps the implied survival function non-increasing.
pub fn mixture_cum_hazard(families: &[HeadFamily], params: &HeadParams, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if params.weight.iter().all(|&w| w >= 0.0) {
        families
            .iter()
            .enumerate()
            .map(|(j, &family)| {
                params.weight[j] * family.cum_hazard(params.scale[j], params.shape[j], t)
            })
            .sum()
    } else {
        quadrature_cum_hazard(families, params, t)
    }
}

fn quadrature_cum_hazard(families: &[HeadFamily], params: &HeadParams, t: f64) -> f64 {
    let step = t / (QUADRATURE_POINTS - 1) as f64;
    let mut acc = 0.0;
    let mut prev = mixture_hazard(families, params, 0.0);
    for q in 1..QUADRATURE_POINTS {
        let h = mixture_hazard(families, params, q as f64 * step);
        acc += 0.5 * (prev + h) * step;
        prev = h;
    }
    acc
}

/// Survival probability `exp(-H(t))`; exactly 1 at t = 0.
pub fn survival(families: &[HeadFamily], params: &HeadParams, t: f64) -> f64 {
    let h = mixture_cum_hazard(families, params, t).min(CUM_HAZARD_CAP);
    (-h).exp()
}

/// Activation applied to the raw head-weight scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightActivation {
    ReLU,
    Sigmoid,
    Softmax,
    Tanh,
    Identity,
}

impl WeightActivation {
    pub const ALL: [WeightActivation; 5] = [
        WeightActivation::ReLU,
        WeightActivation::Sigmoid,
        WeightActivation::Softmax,
        WeightActivation::Tanh,
        WeightActivation::Identity,
    ];

    /// Applies the activation to a vector of raw scores, returning the
    /// weights and the full Jacobian `d w_i / d raw_j`. All kinds except
    /// softmax are elementwise, so their Jacobian is diagonal.
    pub fn apply(self, raw: &[f64]) -> (Vec<f64>, Array2<f64>) {
        let n = raw.len();
        let mut weights = vec![0.0; n];
        self.values(raw, &mut weights);
        let mut jacobian = Array2::zeros((n, n));
        match self {
            WeightActivation::Softmax => {
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        jacobian[[i, j]] = weights[i] * (delta - weights[j]);
                    }
                }
            }
            _ => {
                for i in 0..n {
                    jacobian[[i, i]] = self.derivative_at(raw[i]);
                }
            }
        }
        (weights, jacobian)
    }

    /// Weights without the Jacobian; `out` must have the same length as `raw`.
    pub(crate) fn values(self, raw: &[f64], out: &mut [f64]) {
        match self {
            WeightActivation::ReLU => {
                for (o, &x) in out.iter_mut().zip(raw) {
                    *o = x.max(0.0);
                }
            }
            WeightActivation::Sigmoid => {
                for (o, &x) in out.iter_mut().zip(raw) {
                    *o = sigmoid(x);
                }
            }
            WeightActivation::Tanh => {
                for (o, &x) in out.iter_mut().zip(raw) {
                    *o = x.tanh();
                }
            }
            WeightActivation::Identity => out.copy_from_slice(raw),
            WeightActivation::Softmax => {
                // Max subtraction keeps the result exactly invariant under a
                // common additive shift of the raw scores.
                let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for (o, &x) in out.iter_mut().zip(raw) {
                    *o = (x - max).exp();
                    total += *o;
                }
                for o in out.iter_mut() {
                    *o /= total;
                }
            }
        }
    }

    /// Elementwise derivative; must not be called for softmax. The ReLU
    /// subgradient at exactly 0 is 0, keeping dead parameters dead.
    fn derivative_at(self, x: f64) -> f64 {
        match self {
            WeightActivation::ReLU => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            WeightActivation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            WeightActivation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            WeightActivation::Identity => 1.0,
            WeightActivation::Softmax => unreachable!("softmax has no elementwise derivative"),
        }
    }

    /// Pulls an upstream gradient w.r.t. the weights back to the raw scores:
    /// `out_j = sum_i upstream_i * d w_i / d raw_j`. Equivalent to a product
    /// with the full Jacobian but without materializing it.
    pub(crate) fn backprop(self, raw: &[f64], weights: &[f64], upstream: &[f64], out: &mut [f64]) {
        match self {
            WeightActivation::Softmax => {
                let dot: f64 = upstream.iter().zip(weights).map(|(&g, &w)| g * w).sum();
                for j in 0..out.len() {
                    out[j] = weights[j] * (upstream[j] - dot);
                }
            }
            _ => {
                for j in 0..out.len() {
                    out[j] = upstream[j] * self.derivative_at(raw[j]);
                }
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Weibull heads whose weighted hazard sum reproduces the polynomial
/// `sum_n coeffs[n] * t^n`: the head for degree n uses shape n+1 and unit
/// scale, so its hazard is the monomial `(n+1) * t^n`, and the weight
/// `coeffs[n] / (n+1)` restores the coefficient.
pub fn weibull_heads_for_polynomial(coeffs: &[f64]) -> (Vec<HeadFamily>, HeadParams) {
    let families = vec![HeadFamily::Weibull; coeffs.len()];
    let params = HeadParams {
        scale: vec![1.0; coeffs.len()],
        shape: (0..coeffs.len()).map(|n| (n + 1) as f64).collect(),
        weight: coeffs
            .iter()
            .enumerate()
            .map(|(n, &a)| a / (n + 1) as f64)
            .collect(),
    };
    (families, params)
}
