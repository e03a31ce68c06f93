//! The negative survival log-likelihood, its ElasticNet penalty, and the
//! exact per-sample gradients with respect to the raw boosting scores.

use crate::heads::{self, HeadFamily, WeightActivation, QUADRATURE_POINTS, TIME_FLOOR};
use ndarray::Array2;

/// Floor inside the event log term: clipping can zero the mixture hazard,
/// and `log h` must stay finite with a flat (zero-gradient) dead region.
pub const HAZARD_FLOOR: f64 = 1e-12;

/// Raw per-sample boosting scores, one `n x J` matrix per parameter kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub scale: Array2<f64>,
    pub shape: Array2<f64>,
    pub weight: Array2<f64>,
}

impl ScoreSet {
    pub fn constant(n: usize, scale: &[f64], shape: &[f64], weight: &[f64]) -> Self {
        let j = scale.len();
        Self {
            scale: Array2::from_shape_fn((n, j), |(_, col)| scale[col]),
            shape: Array2::from_shape_fn((n, j), |(_, col)| shape[col]),
            weight: Array2::from_shape_fn((n, j), |(_, col)| weight[col]),
        }
    }

    pub fn n_samples(&self) -> usize {
        self.scale.nrows()
    }

    pub fn n_heads(&self) -> usize {
        self.scale.ncols()
    }

    /// Applies ReLU to scale/shape scores and the weight activation to the
    /// weight scores, yielding per-sample head parameters.
    pub fn activate(&self, activation: WeightActivation) -> SampleParams {
        let scale = self.scale.mapv(|v| v.max(0.0));
        let shape = self.shape.mapv(|v| v.max(0.0));
        let mut weight = Array2::zeros(self.weight.raw_dim());
        for (raw, mut out) in self.weight.rows().into_iter().zip(weight.rows_mut()) {
            activation.values(raw.as_slice().unwrap(), out.as_slice_mut().unwrap());
        }
        SampleParams { scale, shape, weight }
    }
}

/// Post-activation per-sample parameters, matrices shaped `n x J`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleParams {
    pub scale: Array2<f64>,
    pub shape: Array2<f64>,
    pub weight: Array2<f64>,
}

impl SampleParams {
    pub fn n_samples(&self) -> usize {
        self.scale.nrows()
    }

    pub fn head_params(&self, i: usize) -> heads::HeadParams {
        heads::HeadParams {
            scale: self.scale.row(i).to_vec(),
            shape: self.shape.row(i).to_vec(),
            weight: self.weight.row(i).to_vec(),
        }
    }
}

/// The two loss components, both averaged over the batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub likelihood: f64,
    pub regularization: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.likelihood + self.regularization
    }
}

/// Per-sample likelihood state shared between the loss and the gradients.
struct SampleEval {
    /// Per-head hazard at the observation time.
    head_hazard: Vec<f64>,
    /// Unclipped weighted hazard sum at the observation time.
    raw_mix: f64,
    /// -delta * log(h) + H
    neg_log_lik: f64,
}

fn eval_sample(
    families: &[HeadFamily],
    scale: &[f64],
    shape: &[f64],
    weight: &[f64],
    t: f64,
    event: bool,
) -> SampleEval {
    let j = families.len();
    let mut head_hazard = vec![0.0; j];
    let mut raw_mix = 0.0;
    for k in 0..j {
        let h = families[k].hazard(scale[k], shape[k], t);
        head_hazard[k] = h;
        raw_mix += weight[k] * h;
    }

    let cum_hazard = if weight.iter().all(|&w| w >= 0.0) {
        (0..j).map(|k| weight[k] * families[k].cum_hazard(scale[k], shape[k], t)).sum()
    } else {
        quadrature_cum_hazard(families, scale, shape, weight, t)
    };

    let log_arg = raw_mix.max(0.0).max(HAZARD_FLOOR);
    let neg_log_lik = if event { -log_arg.ln() + cum_hazard } else { cum_hazard };
    SampleEval {
        head_hazard,
        raw_mix,
        neg_log_lik,
    }
}

fn quadrature_cum_hazard(
    families: &[HeadFamily],
    scale: &[f64],
    shape: &[f64],
    weight: &[f64],
    t: f64,
) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let step = t / (QUADRATURE_POINTS - 1) as f64;
    let mix = |u: f64| -> f64 {
        families
            .iter()
            .enumerate()
            .map(|(k, &f)| weight[k] * f.hazard(scale[k], shape[k], u))
            .sum::<f64>()
            .max(0.0)
    };
    let mut acc = 0.0;
    let mut prev = mix(0.0);
    for q in 1..QUADRATURE_POINTS {
        let h = mix(q as f64 * step);
        acc += 0.5 * (prev + h) * step;
        prev = h;
    }
    acc
}

/// Negative mean log-likelihood plus the ElasticNet term
/// `alpha * (l1_ratio * |theta|_1 + (1 - l1_ratio) * |theta|_2^2)`, where
/// theta stacks every post-activation per-sample parameter and both norms are
/// averaged over the batch.
pub fn loss(
    families: &[HeadFamily],
    params: &SampleParams,
    times: &[f64],
    events: &[bool],
    alpha: f64,
    l1_ratio: f64,
) -> LossTerms {
    let n = times.len();
    let mut lik = 0.0;
    let mut reg = 0.0;
    for i in 0..n {
        let t = times[i].max(TIME_FLOOR);
        let eval = eval_sample(
            families,
            params.scale.row(i).as_slice().unwrap(),
            params.shape.row(i).as_slice().unwrap(),
            params.weight.row(i).as_slice().unwrap(),
            t,
            events[i],
        );
        lik += eval.neg_log_lik;
        if alpha > 0.0 {
            reg += elastic_net(params, i, alpha, l1_ratio);
        }
    }
    LossTerms {
        likelihood: lik / n as f64,
        regularization: reg / n as f64,
    }
}

fn elastic_net(params: &SampleParams, i: usize, alpha: f64, l1_ratio: f64) -> f64 {
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for block in [&params.scale, &params.shape, &params.weight] {
        for &v in block.row(i) {
            l1 += v.abs();
            l2 += v * v;
        }
    }
    alpha * (l1_ratio * l1 + (1.0 - l1_ratio) * l2)
}

fn elastic_net_grad(theta: f64, alpha: f64, l1_ratio: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    // subgradient 0 at exactly theta = 0
    let sign = if theta > 0.0 {
        1.0
    } else if theta < 0.0 {
        -1.0
    } else {
        0.0
    };
    alpha * (l1_ratio * sign + 2.0 * (1.0 - l1_ratio) * theta)
}

/// Negative gradients of the per-sample loss with respect to every raw score:
/// `3J` vectors of length `n`, ordered scale_0..J, shape_0..J, weight_0..J.
/// Equivalently `-n` times the gradient of the batch-mean loss, the scaling
/// every boosting tree is fitted against.
///
/// The chain rule runs loss -> (h, H) -> head parameters -> activation, with
/// `dL/dh = -delta/h` (zero in the clipped and floored regions), `dL/dH = 1`,
/// analytic head partials, and the weight activation applied last (softmax
/// through its full Jacobian). Mixtures with a negative weight differentiate
/// the clipped-hazard quadrature instead of the analytic cumulative hazard so
/// the gradient matches the loss actually computed.
pub fn pseudo_residuals(
    families: &[HeadFamily],
    activation: WeightActivation,
    scores: &ScoreSet,
    times: &[f64],
    events: &[bool],
    alpha: f64,
    l1_ratio: f64,
) -> Vec<Vec<f64>> {
    let n = scores.n_samples();
    let j = scores.n_heads();
    let params = scores.activate(activation);
    let mut residuals = vec![vec![0.0; n]; 3 * j];

    for i in 0..n {
        let t = times[i].max(TIME_FLOOR);
        let scale = params.scale.row(i);
        let shape = params.shape.row(i);
        let weight = params.weight.row(i);
        let scale = scale.as_slice().unwrap();
        let shape = shape.as_slice().unwrap();
        let weight = weight.as_slice().unwrap();
        let eval = eval_sample(families, scale, shape, weight, t, events[i]);

        // d(loss)/d(raw mixture hazard) through the log term; flat when the
        // hazard is clipped or floored.
        let log_coef = if events[i] && eval.raw_mix > HAZARD_FLOOR {
            -1.0 / eval.raw_mix
        } else {
            0.0
        };

        let negative_weights = weight.iter().any(|&w| w < 0.0);
        let mut d_scale = vec![0.0; j];
        let mut d_shape = vec![0.0; j];
        let mut d_weight = vec![0.0; j];

        if negative_weights {
            // Differentiate the clipped-hazard quadrature node by node.
            let step = t / (QUADRATURE_POINTS - 1) as f64;
            for q in 0..QUADRATURE_POINTS {
                let u = (q as f64 * step).max(TIME_FLOOR);
                let coef = if q == 0 || q == QUADRATURE_POINTS - 1 {
                    0.5 * step
                } else {
                    step
                };
                let mut mix = 0.0;
                let mut node_hazard = vec![0.0; j];
                for k in 0..j {
                    node_hazard[k] = families[k].hazard(scale[k], shape[k], u);
                    mix += weight[k] * node_hazard[k];
                }
                if mix <= 0.0 {
                    continue;
                }
                for k in 0..j {
                    let p = families[k].partials(scale[k], shape[k], u);
                    d_scale[k] += coef * weight[k] * p.hazard_scale;
                    d_shape[k] += coef * weight[k] * p.hazard_shape;
                    d_weight[k] += coef * node_hazard[k];
                }
            }
        }

        for k in 0..j {
            let p = families[k].partials(scale[k], shape[k], t);
            if !negative_weights {
                d_scale[k] = weight[k] * p.cum_hazard_scale;
                d_shape[k] = weight[k] * p.cum_hazard_shape;
                d_weight[k] = families[k].cum_hazard(scale[k], shape[k], t);
            }
            // log-hazard term at the observation time
            d_scale[k] += log_coef * weight[k] * p.hazard_scale;
            d_shape[k] += log_coef * weight[k] * p.hazard_shape;
            d_weight[k] += log_coef * eval.head_hazard[k];
            // ElasticNet on the post-activation parameters
            d_scale[k] += elastic_net_grad(scale[k], alpha, l1_ratio);
            d_shape[k] += elastic_net_grad(shape[k], alpha, l1_ratio);
            d_weight[k] += elastic_net_grad(weight[k], alpha, l1_ratio);
        }

        // Chain through the activations: ReLU subgradient for scale/shape,
        // the configured activation (possibly coupled) for the weights.
        for k in 0..j {
            let relu_scale = if scores.scale[[i, k]] > 0.0 { 1.0 } else { 0.0 };
            let relu_shape = if scores.shape[[i, k]] > 0.0 { 1.0 } else { 0.0 };
            residuals[k][i] = -d_scale[k] * relu_scale;
            residuals[j + k][i] = -d_shape[k] * relu_shape;
        }
        let raw_weight = scores.weight.row(i);
        let mut pulled = vec![0.0; j];
        activation.backprop(raw_weight.as_slice().unwrap(), weight, &d_weight, &mut pulled);
        for k in 0..j {
            residuals[2 * j + k][i] = -pulled[k];
        }
    }

    residuals
}
