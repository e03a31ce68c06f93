//! Seeded random-search hyperparameter optimization, selecting on validation
//! C-index.

use crate::boost::{fit, FPBoostConfig, InitStrategy};
use crate::data::{stratified_split, SurvivalDataset};
use crate::error::{Error, Result};
use crate::metrics::c_index;
use crate::util::derive_seed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ops::RangeInclusive;
use std::time::{Duration, Instant};

/// Hyperparameter ranges for random search. Integer axes are sampled
/// uniformly over their sets, real axes uniformly over their intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub n_weibull: RangeInclusive<usize>,
    pub n_loglogistic: RangeInclusive<usize>,
    pub n_estimators: RangeInclusive<usize>,
    pub max_depth_choices: Vec<usize>,
    pub activations: Vec<crate::heads::WeightActivation>,
    pub learning_rate: (f64, f64),
    pub alpha: (f64, f64),
    pub l1_ratio: (f64, f64),
    pub inits: Vec<InitStrategy>,
    pub patience_choices: Vec<Option<usize>>,
    pub min_leaf: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            n_weibull: 0..=32,
            n_loglogistic: 0..=32,
            n_estimators: 1..=512,
            max_depth_choices: vec![1, 3, 6],
            activations: crate::heads::WeightActivation::ALL.to_vec(),
            learning_rate: (0.01, 1.0),
            alpha: (0.0, 1.0),
            l1_ratio: (0.0, 1.0),
            inits: vec![InitStrategy::Random, InitStrategy::Km],
            patience_choices: vec![None],
            min_leaf: 1,
        }
    }
}

/// Draws one configuration. Deterministic per `(seed, trial_index)`; head
/// counts are resampled until at least one head exists.
pub fn sample_config(space: &SearchSpace, seed: u64, trial_index: u64) -> FPBoostConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    let (n_weibull, n_loglogistic) = loop {
        let w = rng.random_range(space.n_weibull.clone());
        let l = rng.random_range(space.n_loglogistic.clone());
        if w + l > 0 {
            break (w, l);
        }
    };
    FPBoostConfig {
        n_weibull,
        n_loglogistic,
        n_estimators: rng.random_range(space.n_estimators.clone()),
        max_depth: space.max_depth_choices[rng.random_range(0..space.max_depth_choices.len())],
        min_leaf: space.min_leaf,
        learning_rate: rng.random_range(space.learning_rate.0..=space.learning_rate.1),
        alpha: rng.random_range(space.alpha.0..=space.alpha.1),
        l1_ratio: rng.random_range(space.l1_ratio.0..=space.l1_ratio.1),
        weight_activation: space.activations[rng.random_range(0..space.activations.len())],
        init: space.inits[rng.random_range(0..space.inits.len())],
        patience: space.patience_choices[rng.random_range(0..space.patience_choices.len())],
        seed: derive_seed(seed, "trial", trial_index),
    }
}

/// Outcome of one trial. Failed trials keep their reason instead of being
/// dropped. Wall time is informational and excluded from serialization so
/// trial logs stay byte-reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: u64,
    pub config: FPBoostConfig,
    pub c_index: Option<f64>,
    pub error: Option<String>,
    pub iterations: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Random search: `n_trials` sampled configurations, each fitted on an inner
/// stratified train/validation split (20% validation) and scored by
/// validation C-index, averaged over `repeats` independent splits. Returns
/// the best trial (ties broken by lower index) and all trials in index order.
pub fn random_search(
    space: &SearchSpace,
    train: &SurvivalDataset,
    n_trials: u64,
    seed: u64,
    repeats: usize,
    parallel: bool,
) -> Result<(TrialResult, Vec<TrialResult>)> {
    if n_trials == 0 {
        return Err(Error::Validation("n_trials must be >= 1".into()));
    }
    if repeats == 0 {
        return Err(Error::Validation("repeats must be >= 1".into()));
    }

    let splits: Vec<(SurvivalDataset, SurvivalDataset)> = (0..repeats)
        .map(|r| stratified_split(train, 0.2, derive_seed(seed, "tune-split", r as u64)))
        .collect::<Result<_>>()?;

    let run_trial = |trial_index: u64| -> TrialResult {
        let started = Instant::now();
        let config = sample_config(space, seed, trial_index);
        let mut scores = Vec::with_capacity(repeats);
        let mut iterations = 0usize;
        let mut failure: Option<String> = None;
        for (r, (inner_train, valid)) in splits.iter().enumerate() {
            let mut repeat_config = config.clone();
            repeat_config.seed = derive_seed(config.seed, "repeat", r as u64);
            match evaluate_trial(&repeat_config, inner_train, valid) {
                Ok((c, iters)) => {
                    scores.push(c);
                    iterations = iterations.max(iters);
                }
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
        let (c_index, error) = match failure {
            Some(reason) => (None, Some(reason)),
            None => (Some(scores.iter().sum::<f64>() / scores.len() as f64), None),
        };
        TrialResult {
            trial_index,
            config,
            c_index,
            error,
            iterations,
            wall_time: started.elapsed(),
        }
    };

    let results: Vec<TrialResult> = if parallel {
        (0..n_trials).into_par_iter().map(run_trial).collect()
    } else {
        (0..n_trials).map(run_trial).collect()
    };

    let best = results
        .iter()
        .filter(|t| t.c_index.is_some())
        .max_by(|a, b| {
            a.c_index
                .partial_cmp(&b.c_index)
                .unwrap()
                // ties go to the lower trial index
                .then(b.trial_index.cmp(&a.trial_index))
        })
        .cloned();

    match best {
        Some(best) => Ok((best, results)),
        None => {
            let reasons: Vec<String> = results
                .iter()
                .map(|t| format!("trial {}: {}", t.trial_index, t.error.as_deref().unwrap_or("?")))
                .collect();
            Err(Error::AllTrialsFailed(reasons.join("\n")))
        }
    }
}

fn evaluate_trial(
    config: &FPBoostConfig,
    inner_train: &SurvivalDataset,
    valid: &SurvivalDataset,
) -> Result<(f64, usize)> {
    let (model, trace) = fit(config, inner_train, Some(valid))?;
    let risks: Vec<f64> = (0..valid.len())
        .map(|i| model.risk_score(valid.feature_row(i)))
        .collect::<Result<_>>()?;
    let c = c_index(&risks, &valid.times().to_vec(), valid.events())?;
    Ok((c, trace.len()))
}
