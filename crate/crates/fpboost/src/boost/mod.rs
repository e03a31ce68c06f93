//! The gradient-boosted hazard-mixture estimator: configuration, the trained
//! model, training entry point, and model persistence.

mod fit;
mod init;
mod loss;

pub use fit::fit;
pub use init::{init_km, init_random, Offsets};
pub use loss::{loss, pseudo_residuals, LossTerms, SampleParams, ScoreSet, HAZARD_FLOOR};

use crate::data::{PreprocessMeta, StepFunction};
use crate::error::{Error, Result};
use crate::heads::{self, HeadFamily, HeadParams, WeightActivation, TIME_FLOOR};
use crate::trees::RegressionTree;
use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};
use std::path::Path;

const FORMAT_VERSION: u32 = 1;

/// Number of grid nodes for the restricted-mean-survival risk integral.
const RISK_GRID_POINTS: usize = 256;

/// How the 3J constant offsets are initialized before boosting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitStrategy {
    Random,
    Km,
}

/// Hyperparameters of the boosted hazard-mixture model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FPBoostConfig {
    /// Number of Weibull heads.
    pub n_weibull: usize,
    /// Number of log-logistic heads.
    pub n_loglogistic: usize,
    /// Boosting iterations M; every parameter model grows one tree per iteration.
    pub n_estimators: usize,
    pub max_depth: usize,
    /// Minimum samples per leaf; 1 keeps the tree knob set minimal.
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
    /// Learning rate scaling every tree's contribution, in (0, 1].
    pub learning_rate: f64,
    /// ElasticNet strength.
    pub alpha: f64,
    /// ElasticNet L1/L2 mix: 1 is pure L1, 0 pure L2.
    pub l1_ratio: f64,
    pub weight_activation: WeightActivation,
    pub init: InitStrategy,
    /// Stop when the validation C-index has not improved for this many
    /// consecutive iterations; requires a validation set.
    pub patience: Option<usize>,
    pub seed: u64,
}

fn default_min_leaf() -> usize {
    1
}

impl Default for FPBoostConfig {
    fn default() -> Self {
        Self {
            n_weibull: 4,
            n_loglogistic: 4,
            n_estimators: 100,
            max_depth: 3,
            min_leaf: 1,
            learning_rate: 0.1,
            alpha: 0.0,
            l1_ratio: 0.0,
            weight_activation: WeightActivation::ReLU,
            init: InitStrategy::Random,
            patience: None,
            seed: 0,
        }
    }
}

impl FPBoostConfig {
    pub fn n_heads(&self) -> usize {
        self.n_weibull + self.n_loglogistic
    }

    /// Head families in model order: Weibull heads first, then log-logistic.
    pub fn families(&self) -> Vec<HeadFamily> {
        let mut families = vec![HeadFamily::Weibull; self.n_weibull];
        families.extend(vec![HeadFamily::LogLogistic; self.n_loglogistic]);
        families
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_heads() == 0 {
            return Err(Error::Config {
                field: "n_weibull",
                message: "at least one head is required (n_weibull + n_loglogistic >= 1)".into(),
            });
        }
        if self.n_estimators == 0 {
            return Err(Error::Config {
                field: "n_estimators",
                message: "must be >= 1".into(),
            });
        }
        if self.max_depth == 0 {
            return Err(Error::Config {
                field: "max_depth",
                message: "must be >= 1".into(),
            });
        }
        if self.min_leaf == 0 {
            return Err(Error::Config {
                field: "min_leaf",
                message: "must be >= 1".into(),
            });
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config {
                field: "learning_rate",
                message: format!("must lie in (0, 1], got {}", self.learning_rate),
            });
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config {
                field: "alpha",
                message: format!("must be >= 0, got {}", self.alpha),
            });
        }
        if !(0.0..=1.0).contains(&self.l1_ratio) {
            return Err(Error::Config {
                field: "l1_ratio",
                message: format!("must lie in [0, 1], got {}", self.l1_ratio),
            });
        }
        if self.patience == Some(0) {
            return Err(Error::Config {
                field: "patience",
                message: "must be >= 1 when set".into(),
            });
        }
        Ok(())
    }
}

/// One boosted parameter model: a constant offset plus a list of trees whose
/// predictions are scaled by the learning rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterModel {
    pub offset: f64,
    pub trees: Vec<RegressionTree>,
}

impl ParameterModel {
    fn raw_score(&self, x: &[f64], learning_rate: f64) -> Result<f64> {
        let mut score = self.offset;
        for tree in &self.trees {
            score += learning_rate * tree.predict(x)?;
        }
        Ok(score)
    }
}

/// Trained model: 3J parameter models in the order scale_0..J, shape_0..J,
/// weight_0..J, plus everything needed to score raw data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FPBoostModel {
    format_version: u32,
    pub config: FPBoostConfig,
    families: Vec<HeadFamily>,
    n_features: usize,
    models: Vec<ParameterModel>,
    /// Raw-time divisor applied before hazard evaluation.
    time_scale: f64,
    preprocess: Option<PreprocessMeta>,
    /// Censoring-distribution KM curve of the training data, kept for IPCW
    /// at evaluation time.
    censoring: Option<StepFunction>,
}

impl FPBoostModel {
    pub(crate) fn from_parts(
        config: FPBoostConfig,
        families: Vec<HeadFamily>,
        n_features: usize,
        models: Vec<ParameterModel>,
        censoring: Option<StepFunction>,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            config,
            families,
            n_features,
            models,
            time_scale: 1.0,
            preprocess: None,
            censoring,
        }
    }

    /// Attaches preprocessing statistics; prediction then expects raw times
    /// and divides them by the training time scale.
    pub fn with_preprocess(mut self, meta: PreprocessMeta) -> Self {
        self.time_scale = meta.time_scale;
        self.preprocess = Some(meta);
        self
    }

    pub fn families(&self) -> &[HeadFamily] {
        &self.families
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_heads(&self) -> usize {
        self.families.len()
    }

    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub fn preprocess(&self) -> Option<&PreprocessMeta> {
        self.preprocess.as_ref()
    }

    pub fn censoring(&self) -> Option<&StepFunction> {
        self.censoring.as_ref()
    }

    pub fn parameter_models(&self) -> &[ParameterModel] {
        &self.models
    }

    /// Per-sample head parameters: tree sums plus offsets, through ReLU for
    /// scale/shape and the configured activation for the weights.
    pub fn predict_params(&self, x: ArrayView1<'_, f64>) -> Result<HeadParams> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let owned;
        let x: &[f64] = match x.as_slice() {
            Some(s) => s,
            None => {
                owned = x.to_vec();
                &owned
            }
        };
        let j = self.n_heads();
        let lr = self.config.learning_rate;
        let mut scale = Vec::with_capacity(j);
        let mut shape = Vec::with_capacity(j);
        let mut raw_weight = Vec::with_capacity(j);
        for head in 0..j {
            scale.push(self.models[head].raw_score(x, lr)?.max(0.0));
            shape.push(self.models[j + head].raw_score(x, lr)?.max(0.0));
            raw_weight.push(self.models[2 * j + head].raw_score(x, lr)?);
        }
        let mut weight = vec![0.0; j];
        self.config.weight_activation.values(&raw_weight, &mut weight);
        Ok(HeadParams { scale, shape, weight })
    }

    /// Survival probabilities at raw times; the model applies its stored time
    /// scale. On a non-decreasing grid the output is made non-increasing.
    pub fn predict_survival(&self, x: ArrayView1<'_, f64>, times: &[f64]) -> Result<Vec<f64>> {
        let params = self.predict_params(x)?;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            out.push(heads::survival(&self.families, &params, t / self.time_scale));
        }
        // A sorted grid gets a strictly consistent curve even when the
        // quadrature fallback leaves sub-1e-9 wiggles.
        if times.windows(2).all(|w| w[0] <= w[1]) {
            for k in 1..out.len() {
                out[k] = out[k].min(out[k - 1]);
            }
        }
        Ok(out)
    }

    /// Scalar risk: the negated restricted mean survival time over the
    /// normalized horizon [TIME_FLOOR, 1]. Higher risk means shorter
    /// expected survival.
    pub fn risk_score(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        let params = self.predict_params(x)?;
        Ok(rmst_risk(&self.families, &params))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let contents = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::ModelFormat(format!("cannot read model file: {e}")))?;
        let model: FPBoostModel = serde_json::from_str(&contents)
            .map_err(|e| Error::ModelFormat(format!("malformed model file: {e}")))?;
        if model.format_version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                model.format_version
            )));
        }
        if model.models.len() != 3 * model.families.len() {
            return Err(Error::ModelFormat(format!(
                "expected {} parameter models, found {}",
                3 * model.families.len(),
                model.models.len()
            )));
        }
        Ok(model)
    }
}

/// Negated restricted mean survival time on normalized [TIME_FLOOR, 1] by
/// composite trapezoid.
pub(crate) fn rmst_risk(families: &[HeadFamily], params: &HeadParams) -> f64 {
    let lo = TIME_FLOOR;
    let hi = 1.0;
    let step = (hi - lo) / (RISK_GRID_POINTS - 1) as f64;
    let mut acc = 0.0;
    let mut prev = heads::survival(families, params, lo);
    for q in 1..RISK_GRID_POINTS {
        let s = heads::survival(families, params, lo + q as f64 * step);
        acc += 0.5 * (prev + s) * step;
        prev = s;
    }
    -acc
}

/// Per-iteration training record; one entry per completed boosting round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub likelihood: f64,
    pub regularization: f64,
    pub valid_c_index: Option<f64>,
}

/// Training trace, in iteration order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub entries: Vec<TraceEntry>,
}

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the trace as a CSV: iteration, likelihood, regularization,
    /// validation C-index (empty when absent).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::Writer::from_path(path.as_ref())?;
        writer.write_record(["iteration", "likelihood", "regularization", "valid_c_index"])?;
        for (m, entry) in self.entries.iter().enumerate() {
            writer.write_record([
                m.to_string(),
                format!("{}", entry.likelihood),
                format!("{}", entry.regularization),
                entry.valid_c_index.map(|c| format!("{c}")).unwrap_or_default(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}
