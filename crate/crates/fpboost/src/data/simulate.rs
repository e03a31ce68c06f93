//! Synthetic data from a known Weibull hazard mixture, used as the oracle
//! generator in recovery tests.

use super::SurvivalDataset;
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixture cumulative hazard: H(t) = sum_j w_j * scale_j * t^shape_j.
fn cum_hazard(spec: &[(f64, f64, f64)], t: f64) -> f64 {
    spec.iter().map(|&(scale, shape, w)| w * scale * t.powf(shape)).sum()
}

fn hazard(spec: &[(f64, f64, f64)], t: f64) -> f64 {
    spec.iter()
        .map(|&(scale, shape, w)| w * scale * shape * t.powf(shape - 1.0))
        .sum()
}

/// Inverse transform: solve H(t) = target by bisection. H is strictly
/// increasing because every weight and scale is positive.
fn invert_cum_hazard(spec: &[(f64, f64, f64)], target: f64) -> f64 {
    let mut hi = 1.0_f64;
    while cum_hazard(spec, hi) < target {
        hi *= 2.0;
        if hi > 1e12 {
            return hi;
        }
    }
    let mut lo = 0.0_f64;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cum_hazard(spec, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Mean of S(t) over [0, c] by trapezoid; P(censored) for C ~ U(0, c).
fn censored_fraction(spec: &[(f64, f64, f64)], c: f64) -> f64 {
    const STEPS: usize = 512;
    let h = c / STEPS as f64;
    let mut acc = 0.5 * ((-cum_hazard(spec, 0.0)).exp() + (-cum_hazard(spec, c)).exp());
    for i in 1..STEPS {
        acc += (-cum_hazard(spec, i as f64 * h)).exp();
    }
    acc * h / c
}

/// Draws `n` subjects whose event times follow the survival function
/// S(t) = exp(-sum_j w_j * scale_j * t^shape_j) given by `spec` (one
/// `(scale, shape, weight)` triple per Weibull head). Features are the
/// one-hot label of the head responsible for the drawn time, so the marginal
/// time distribution is exactly S while features still carry signal.
/// Censoring times are uniform on [0, c] with c calibrated so the expected
/// censored fraction is `censor_rate`.
pub fn simulate_weibull_mixture(
    n: usize,
    spec: &[(f64, f64, f64)],
    censor_rate: f64,
    seed: u64,
) -> Result<SurvivalDataset> {
    if n == 0 {
        return Err(Error::EmptyInput("simulate_weibull_mixture"));
    }
    if spec.is_empty() {
        return Err(Error::Validation("mixture spec must have at least one head".into()));
    }
    for &(scale, shape, w) in spec {
        if scale <= 0.0 || shape <= 0.0 || w <= 0.0 {
            return Err(Error::Validation(format!(
                "mixture parameters must be positive, got ({scale}, {shape}, {w})"
            )));
        }
    }
    if !(0.0..1.0).contains(&censor_rate) {
        return Err(Error::Validation(format!(
            "censor_rate must lie in [0, 1), got {censor_rate}"
        )));
    }

    let censor_max = if censor_rate > 0.0 {
        // censored_fraction(c) decreases from 1 (c -> 0) to 0 (c -> inf);
        // bisect for the requested rate.
        let mut hi = 1.0_f64;
        while censored_fraction(spec, hi) > censor_rate && hi < 1e12 {
            hi *= 2.0;
        }
        let mut lo = 1e-9_f64;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if censored_fraction(spec, mid) > censor_rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    } else {
        None
    };

    let n_heads = spec.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Array2::zeros((n, n_heads));
    let mut times = Array1::zeros(n);
    let mut events = Vec::with_capacity(n);

    for i in 0..n {
        let u: f64 = rng.random::<f64>().max(1e-300);
        let event_time = invert_cum_hazard(spec, -u.ln());

        // Label the head that generated the event: head j with probability
        // proportional to its hazard share at the drawn time.
        let total = hazard(spec, event_time);
        let mut pick: f64 = rng.random::<f64>() * total;
        let mut label = n_heads - 1;
        for (j, &(scale, shape, w)) in spec.iter().enumerate() {
            pick -= w * scale * shape * event_time.powf(shape - 1.0);
            if pick <= 0.0 {
                label = j;
                break;
            }
        }
        features[[i, label]] = 1.0;

        match censor_max {
            Some(c_max) => {
                let censor_time = rng.random::<f64>() * c_max;
                if event_time <= censor_time {
                    times[i] = event_time;
                    events.push(true);
                } else {
                    times[i] = censor_time;
                    events.push(false);
                }
            }
            None => {
                times[i] = event_time;
                events.push(true);
            }
        }
    }

    let names = (0..n_heads).map(|j| format!("group_{j}")).collect();
    SurvivalDataset::new(features, times, events, names)
}
