//! The repeated-split evaluation protocol: one fixed outer test split, many
//! seeded train/validation re-splits, mean and 95% confidence interval per
//! metric.

use crate::boost::{fit, FPBoostConfig};
use crate::data::{preprocess_apply, preprocess_fit_transform, stratified_split, SurvivalDataset};
use crate::error::{Error, Result};
use crate::metrics::{default_time_grid, evaluate, EvaluationReport};
use crate::util::derive_seed;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Fraction of the data held out once as the outer test set.
    pub test_frac: f64,
    /// Fraction of the outer training set re-split into validation per seed.
    pub valid_frac: f64,
    pub n_seeds: usize,
    pub master_seed: u64,
    pub grid_points: usize,
    pub model: FPBoostConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            test_frac: 0.2,
            valid_frac: 0.2,
            n_seeds: 30,
            master_seed: 0,
            grid_points: 100,
            model: FPBoostConfig::default(),
        }
    }
}

/// Per-metric aggregate over seeds, with a normal-approximation 95% CI
/// half-width `1.96 * s / sqrt(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub ci95: f64,
    pub per_seed: Vec<f64>,
}

impl MetricSummary {
    fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ci95 = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            1.96 * (var / n).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            ci95,
            per_seed: values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub master_seed: u64,
    pub n_seeds: usize,
    pub c_index: MetricSummary,
    pub ibs: MetricSummary,
    pub c_td: MetricSummary,
    pub auc: MetricSummary,
}

impl ExperimentSummary {
    /// Aligned table, values scaled by 100 with one decimal.
    pub fn to_table(&self) -> String {
        let mut out = String::from("metric    mean   ci95\n");
        for (name, m) in [
            ("c-index", &self.c_index),
            ("ibs", &self.ibs),
            ("c-td", &self.c_td),
            ("auc", &self.auc),
        ] {
            out.push_str(&format!(
                "{name:<9} {:>5.1} \u{b1} {:.1}\n",
                m.mean * 100.0,
                m.ci95 * 100.0
            ));
        }
        out
    }
}

/// Runs the full protocol on a raw (unpreprocessed) dataset: one stratified
/// outer test split from the master seed, then `n_seeds` independent runs,
/// each with its own train/validation split, preprocessing fitted on its
/// training portion, and evaluation of all metrics on the shared test set.
pub fn run_experiment(raw: &SurvivalDataset, config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.model.validate()?;
    if config.n_seeds == 0 {
        return Err(Error::Validation("n_seeds must be >= 1".into()));
    }
    let (outer_train, outer_test) = stratified_split(
        raw,
        config.test_frac,
        derive_seed(config.master_seed, "outer-split", 0),
    )?;

    let reports: Vec<EvaluationReport> = (0..config.n_seeds)
        .into_par_iter()
        .map(|s| {
            run_single_seed(&outer_train, &outer_test, config, s as u64)
                .map_err(|e| Error::Validation(format!("seed {s} failed: {e}")))
        })
        .collect::<Result<_>>()?;

    Ok(ExperimentSummary {
        master_seed: config.master_seed,
        n_seeds: config.n_seeds,
        c_index: MetricSummary::from_values(reports.iter().map(|r| r.c_index).collect()),
        ibs: MetricSummary::from_values(reports.iter().map(|r| r.ibs).collect()),
        c_td: MetricSummary::from_values(reports.iter().map(|r| r.c_td).collect()),
        auc: MetricSummary::from_values(reports.iter().map(|r| r.auc).collect()),
    })
}

fn run_single_seed(
    outer_train: &SurvivalDataset,
    outer_test: &SurvivalDataset,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<EvaluationReport> {
    let split_seed = derive_seed(config.master_seed, "inner-split", seed);
    let (inner_train, valid) = stratified_split(outer_train, config.valid_frac, split_seed)?;

    let (train_p, meta) = preprocess_fit_transform(&inner_train)?;
    let valid_p = preprocess_apply(&meta, &valid)?;
    let test_p = preprocess_apply(&meta, outer_test)?;

    let mut model_config = config.model.clone();
    model_config.seed = derive_seed(config.master_seed, "fit", seed);
    let (model, _) = fit(&model_config, &train_p, Some(&valid_p))?;

    evaluate_model(&model, &test_p, config.grid_points)
}

/// Scores a fitted model on an already-preprocessed dataset, using the
/// model's stored training censoring distribution for IPCW.
pub fn evaluate_model(
    model: &crate::boost::FPBoostModel,
    test: &SurvivalDataset,
    grid_points: usize,
) -> Result<EvaluationReport> {
    let censoring = model
        .censoring()
        .ok_or_else(|| Error::Validation("model carries no censoring distribution".into()))?;
    let times: Vec<f64> = test.times().to_vec();
    let grid = default_time_grid(&times, grid_points)?;

    let mut risks = Vec::with_capacity(test.len());
    let mut surv = Array2::zeros((test.len(), grid.len()));
    let grid_raw: Vec<f64> = grid.iter().map(|&t| t * model.time_scale()).collect();
    for i in 0..test.len() {
        let row = test.feature_row(i);
        risks.push(model.risk_score(row)?);
        let s = model.predict_survival(row, &grid_raw)?;
        for (k, &v) in s.iter().enumerate() {
            surv[[i, k]] = v;
        }
    }
    evaluate(&risks, surv.view(), &times, test.events(), censoring, &grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::simulate_weibull_mixture;

    fn small_experiment(n_seeds: usize, master_seed: u64) -> ExperimentSummary {
        let raw = simulate_weibull_mixture(300, &[(2.0, 1.0, 1.0), (0.4, 2.5, 0.8)], 0.3, 1).unwrap();
        let config = ExperimentConfig {
            n_seeds,
            master_seed,
            grid_points: 30,
            model: FPBoostConfig {
                n_weibull: 2,
                n_loglogistic: 0,
                n_estimators: 10,
                max_depth: 1,
                learning_rate: 0.2,
                ..FPBoostConfig::default()
            },
            ..ExperimentConfig::default()
        };
        run_experiment(&raw, &config).unwrap()
    }

    #[test]
    fn summary_has_all_metrics_with_ci() {
        let summary = small_experiment(2, 5);
        assert_eq!(summary.c_index.per_seed.len(), 2);
        for m in [&summary.c_index, &summary.ibs, &summary.c_td, &summary.auc] {
            assert!(m.mean.is_finite());
            assert!(m.ci95 >= 0.0);
        }
        let table = summary.to_table();
        assert!(table.contains("c-index"));
        assert!(table.contains("auc"));
    }

    #[test]
    fn ci_shrinks_with_more_seeds() {
        let narrow = small_experiment(10, 7);
        let wide = small_experiment(3, 7);
        // the same data and protocol with more seeds gives a tighter interval
        assert!(
            narrow.c_index.ci95 <= wide.c_index.ci95 + 1e-9,
            "{} vs {}",
            narrow.c_index.ci95,
            wide.c_index.ci95
        );
    }

    #[test]
    fn summary_is_deterministic_per_master_seed() {
        let a = small_experiment(3, 9);
        let b = small_experiment(3, 9);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
