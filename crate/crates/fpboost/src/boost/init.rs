//! Offset initialization for the 3J parameter models: either random normal
//! draws or draws centered on a parametric fit to the Kaplan-Meier curve.

use crate::data::{kaplan_meier, SurvivalDataset};
use crate::error::{Error, Result};
use crate::heads::{HeadFamily, WeightActivation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Constant offsets for the parameter models, pre-activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Offsets {
    pub scale: Vec<f64>,
    pub shape: Vec<f64>,
    pub weight: Vec<f64>,
}

/// Random initialization: scale offsets from N(0.5, 1), shape offsets from
/// N(0, 2), weight offsets from N(0, 1), with the second argument read as the
/// standard deviation. Draw order is all scales, then all shapes, then all
/// weights, so a seed pins the offsets exactly.
pub fn init_random(seed: u64, n_heads: usize) -> Offsets {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale_dist = Normal::new(0.5, 1.0).unwrap();
    let shape_dist = Normal::new(0.0, 2.0).unwrap();
    let weight_dist = Normal::new(0.0, 1.0).unwrap();
    Offsets {
        scale: (0..n_heads).map(|_| scale_dist.sample(&mut rng)).collect(),
        shape: (0..n_heads).map(|_| shape_dist.sample(&mut rng)).collect(),
        weight: (0..n_heads).map(|_| weight_dist.sample(&mut rng)).collect(),
    }
}

/// A fitted (scale, shape) pair for one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveFit {
    pub scale: f64,
    pub shape: f64,
}

/// Least-squares fit of a Weibull cumulative hazard to the KM curve:
/// H = scale * t^shape linearizes to log H = log scale + shape * log t.
/// Knots are trimmed to survival in [0.01, 0.99] when enough remain; the
/// extreme knots of large samples carry most of the order-statistic noise.
fn fit_weibull_to_km(points: &[(f64, f64)]) -> Result<CurveFit> {
    let xy: Vec<(f64, f64)> = points.iter().map(|&(t, h)| (t.ln(), h.ln())).collect();
    let (slope, intercept) = linear_regression(&xy)?;
    let fit = CurveFit {
        scale: intercept.exp(),
        shape: slope,
    };
    if fit.scale <= 0.0 || fit.shape <= 0.0 {
        return Err(Error::Validation(
            "degenerate KM curve: Weibull fit has non-positive parameters".into(),
        ));
    }
    Ok(fit)
}

/// Log-logistic fit: H = log(1 + scale * t^shape), so
/// log(exp(H) - 1) = log scale + shape * log t gives the starting point,
/// refined by a shrinking grid on the cumulative-hazard least squares.
fn fit_loglogistic_to_km(points: &[(f64, f64)]) -> Result<CurveFit> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|&(t, h)| (t.ln(), (h.exp() - 1.0).max(1e-300).ln()))
        .collect();
    let (slope, intercept) = linear_regression(&xy)?;
    let mut best = CurveFit {
        scale: intercept.exp().max(1e-12),
        shape: slope.max(1e-6),
    };
    let sse = |fit: CurveFit| -> f64 {
        points
            .iter()
            .map(|&(t, h)| {
                let model = (1.0 + fit.scale * t.powf(fit.shape)).ln();
                (model - h) * (model - h)
            })
            .sum()
    };
    let mut best_sse = sse(best);
    let mut half_width = 0.5; // log10 units
    for _ in 0..4 {
        let mut round_best = best;
        for gs in -2..=2 {
            for gk in -2..=2 {
                let candidate = CurveFit {
                    scale: best.scale * 10f64.powf(half_width * gs as f64 / 2.0),
                    shape: best.shape * 10f64.powf(half_width * gk as f64 / 2.0),
                };
                let s = sse(candidate);
                if s < best_sse {
                    best_sse = s;
                    round_best = candidate;
                }
            }
        }
        best = round_best;
        half_width /= 4.0;
    }
    Ok(best)
}

fn linear_regression(xy: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = xy.len() as f64;
    if xy.len() < 2 {
        return Err(Error::Validation(
            "degenerate KM curve: need at least two usable knots".into(),
        ));
    }
    let mean_x = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in xy {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx <= 0.0 {
        return Err(Error::Validation(
            "degenerate KM curve: knots have no time spread".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok((slope, mean_y - slope * mean_x))
}

/// Cumulative-hazard points (t, -log S) from the KM curve, restricted to
/// knots with survival strictly inside (0, 1) and trimmed to [0.01, 0.99]
/// when at least two trimmed knots survive.
fn usable_km_points(times: &[f64], events: &[bool]) -> Result<Vec<(f64, f64)>> {
    let km = kaplan_meier(times, events)?;
    let all: Vec<(f64, f64)> = km
        .knots()
        .iter()
        .zip(km.values())
        .filter(|&(&t, &s)| t > 0.0 && s > 0.0 && s < 1.0)
        .map(|(&t, &s)| (t, -s.ln()))
        .collect();
    let trimmed: Vec<(f64, f64)> = km
        .knots()
        .iter()
        .zip(km.values())
        .filter(|&(&t, &s)| t > 0.0 && (0.01..=0.99).contains(&s))
        .map(|(&t, &s)| (t, -s.ln()))
        .collect();
    let points = if trimmed.len() >= 2 { trimmed } else { all };
    if points.len() < 2 {
        return Err(Error::Validation(
            "degenerate KM curve: too few events for a parametric fit".into(),
        ));
    }
    Ok(points)
}

pub(crate) fn km_curve_fits(train: &SurvivalDataset) -> Result<(CurveFit, CurveFit)> {
    let times: Vec<f64> = train.times().to_vec();
    let points = usable_km_points(&times, train.events())?;
    Ok((fit_weibull_to_km(&points)?, fit_loglogistic_to_km(&points)?))
}

/// KM initialization: one Weibull and one log-logistic curve are fitted to
/// the training KM estimate; each head draws its scale and shape offsets from
/// N(center, center/10) around its family's fit. Weight offsets target a
/// uniform 1/J split through the activation inverse where that inverse
/// exists, and 0 otherwise.
pub fn init_km(
    train: &SurvivalDataset,
    families: &[HeadFamily],
    activation: WeightActivation,
    seed: u64,
) -> Result<Offsets> {
    let (weibull, loglogistic) = km_curve_fits(train)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = families.len();
    let mut scale = Vec::with_capacity(j);
    let mut shape = Vec::with_capacity(j);
    for &family in families {
        let fit = match family {
            HeadFamily::Weibull => weibull,
            HeadFamily::LogLogistic => loglogistic,
        };
        let scale_dist = Normal::new(fit.scale, fit.scale / 10.0).unwrap();
        let shape_dist = Normal::new(fit.shape, fit.shape / 10.0).unwrap();
        scale.push(scale_dist.sample(&mut rng));
        shape.push(shape_dist.sample(&mut rng));
    }
    let weight = vec![uniform_weight_offset(activation, j); j];
    Ok(Offsets { scale, shape, weight })
}

/// Raw score whose activation equals 1/J, or 0 where the inverse does not
/// exist (softmax maps any constant to uniform; sigmoid/tanh cannot reach 1).
fn uniform_weight_offset(activation: WeightActivation, n_heads: usize) -> f64 {
    let target = 1.0 / n_heads as f64;
    match activation {
        WeightActivation::Identity | WeightActivation::ReLU => target,
        WeightActivation::Sigmoid => {
            if n_heads > 1 {
                (target / (1.0 - target)).ln()
            } else {
                0.0
            }
        }
        WeightActivation::Tanh => {
            if n_heads > 1 {
                target.atanh()
            } else {
                0.0
            }
        }
        WeightActivation::Softmax => 0.0,
    }
}
