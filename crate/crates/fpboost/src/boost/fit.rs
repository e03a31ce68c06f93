//! The boosting loop: evaluate parameters, compute pseudo-residuals, fit one
//! tree per parameter model, and step the raw scores.

use super::init::{init_km, init_random, Offsets};
use super::loss::{loss, pseudo_residuals, ScoreSet};
use super::{rmst_risk, FPBoostConfig, FPBoostModel, InitStrategy, ParameterModel, TraceEntry, TrainTrace};
use crate::data::{censoring_km, SurvivalDataset};
use crate::error::{Error, Result};
use crate::metrics::c_index;
use crate::trees::{fit_tree, RegressionTree};
use rayon::prelude::*;

/// Trains a model. Each iteration fits all 3J trees against residuals
/// evaluated at the iteration-start scores (synchronous update). With
/// `patience` set, training stops once the validation C-index has failed to
/// improve for that many consecutive iterations and the model is truncated to
/// its best-validation iteration.
pub fn fit(
    config: &FPBoostConfig,
    train: &SurvivalDataset,
    valid: Option<&SurvivalDataset>,
) -> Result<(FPBoostModel, TrainTrace)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyInput("fit"));
    }
    if config.patience.is_some() && valid.is_none() {
        return Err(Error::Config {
            field: "patience",
            message: "early stopping requires a validation set".into(),
        });
    }
    if let Some(v) = valid {
        if v.dim() != train.dim() {
            return Err(Error::DimensionMismatch {
                expected: train.dim(),
                actual: v.dim(),
            });
        }
    }

    let families = config.families();
    let n = train.len();
    let n_params = 3 * families.len();
    let offsets: Offsets = match config.init {
        InitStrategy::Random => init_random(config.seed, families.len()),
        InitStrategy::Km => init_km(train, &families, config.weight_activation, config.seed)?,
    };

    let times: Vec<f64> = train.times().to_vec();
    let events = train.events().to_vec();
    let x = train.features().view();

    let mut scores = ScoreSet::constant(n, &offsets.scale, &offsets.shape, &offsets.weight);
    let mut valid_scores = valid.map(|v| {
        ScoreSet::constant(v.len(), &offsets.scale, &offsets.shape, &offsets.weight)
    });

    // A head whose scale, shape, or (ReLU-gated) weight starts at zero gets
    // zero gradient through the activation subgradient and never revives.
    {
        let initial = scores.activate(config.weight_activation);
        let all_dead = (0..families.len()).all(|j| {
            initial.scale[[0, j]] * initial.shape[[0, j]] * initial.weight[[0, j]] == 0.0
        });
        if all_dead {
            log::warn!(
                "every head is dead at initialization (zero scale, shape, or weight after \
                 activation); the model cannot learn from seed {} - consider km init, more \
                 heads, or another seed",
                config.seed
            );
        }
    }

    let mut tree_lists: Vec<Vec<RegressionTree>> = vec![Vec::new(); n_params];
    let mut trace = TrainTrace::default();
    let mut best_c = f64::NEG_INFINITY;
    let mut best_iter = 0usize;

    for m in 0..config.n_estimators {
        let params = scores.activate(config.weight_activation);
        let terms = loss(&families, &params, &times, &events, config.alpha, config.l1_ratio);

        let residuals = pseudo_residuals(
            &families,
            config.weight_activation,
            &scores,
            &times,
            &events,
            config.alpha,
            config.l1_ratio,
        );
        let trees: Vec<RegressionTree> = residuals
            .par_iter()
            .map(|target| fit_tree(x, target, config.max_depth, config.min_leaf))
            .collect::<Result<_>>()?;

        for (p, tree) in trees.iter().enumerate() {
            apply_tree_update(&mut scores, p, families.len(), tree, train, config.learning_rate)?;
            if let (Some(vs), Some(v)) = (valid_scores.as_mut(), valid) {
                apply_tree_update(vs, p, families.len(), tree, v, config.learning_rate)?;
            }
        }
        for (list, tree) in tree_lists.iter_mut().zip(trees) {
            list.push(tree);
        }

        let valid_c = match (valid_scores.as_ref(), valid) {
            (Some(vs), Some(v)) => {
                let vp = vs.activate(config.weight_activation);
                let risks: Vec<f64> = (0..v.len())
                    .map(|i| rmst_risk(&families, &vp.head_params(i)))
                    .collect();
                Some(c_index(&risks, &v.times().to_vec(), v.events())?)
            }
            _ => None,
        };
        trace.entries.push(TraceEntry {
            likelihood: terms.likelihood,
            regularization: terms.regularization,
            valid_c_index: valid_c,
        });

        if let (Some(patience), Some(c)) = (config.patience, valid_c) {
            if c > best_c {
                best_c = c;
                best_iter = m;
            } else if m - best_iter >= patience {
                break;
            }
        }
    }

    // Early stopping keeps the best-validation snapshot, not the last state.
    if config.patience.is_some() {
        for list in &mut tree_lists {
            list.truncate(best_iter + 1);
        }
    }

    let models: Vec<ParameterModel> = offsets
        .scale
        .iter()
        .chain(&offsets.shape)
        .chain(&offsets.weight)
        .zip(tree_lists)
        .map(|(&offset, trees)| ParameterModel { offset, trees })
        .collect();

    let censoring = censoring_km(&times, &events)?;
    let model = FPBoostModel::from_parts(
        config.clone(),
        families,
        train.dim(),
        models,
        Some(censoring),
    );
    Ok((model, trace))
}

fn apply_tree_update(
    scores: &mut ScoreSet,
    param_index: usize,
    n_heads: usize,
    tree: &RegressionTree,
    data: &SurvivalDataset,
    learning_rate: f64,
) -> Result<()> {
    let block = param_index / n_heads;
    let head = param_index % n_heads;
    let matrix = match block {
        0 => &mut scores.scale,
        1 => &mut scores.shape,
        _ => &mut scores.weight,
    };
    for i in 0..data.len() {
        let row = data.feature_row(i);
        let step = tree.predict(row.as_slice().expect("contiguous feature row"))?;
        matrix[[i, head]] += learning_rate * step;
    }
    Ok(())
}
