//! Train-time standardization and time normalization, replayable on held-out
//! data so test sets always see the training statistics.

use super::{ColumnLayout, SurvivalDataset};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Statistics captured from a training set. One-hot columns keep the identity
/// transform (mean 0, std 1); zero-variance numeric columns store std 0 and
/// map to all-zeros on apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessMeta {
    pub layout: Option<ColumnLayout>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Maximum raw training time; all times are divided by it.
    pub time_scale: f64,
}

/// Fits standardization statistics on `train` and returns the transformed
/// dataset together with the statistics. Numeric columns become mean 0 /
/// std 1 (population std), times are divided by the maximum training time, so
/// every transformed training time lies in [0, 1].
pub fn preprocess_fit_transform(train: &SurvivalDataset) -> Result<(SurvivalDataset, PreprocessMeta)> {
    if train.is_empty() {
        return Err(Error::EmptyInput("preprocess_fit_transform"));
    }
    let n = train.len() as f64;
    let d = train.dim();
    let one_hot = train
        .layout()
        .map(|l| l.one_hot_mask())
        .unwrap_or_else(|| vec![false; d]);

    let mut means = vec![0.0; d];
    let mut stds = vec![1.0; d];
    for (j, (mean, std)) in means.iter_mut().zip(stds.iter_mut()).enumerate() {
        if one_hot[j] {
            continue;
        }
        let col = train.features().column(j);
        let m = col.sum() / n;
        let var = col.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / n;
        *mean = m;
        *std = var.sqrt();
    }

    let time_scale = train.times().iter().cloned().fold(0.0_f64, f64::max);
    if time_scale <= 0.0 {
        return Err(Error::Validation(
            "cannot normalize times: maximum training time is 0".into(),
        ));
    }

    let meta = PreprocessMeta {
        layout: train.layout().cloned(),
        means,
        stds,
        time_scale,
    };
    let transformed = preprocess_apply(&meta, train)?;
    Ok((transformed, meta))
}

/// Applies training statistics to a dataset. Times may exceed 1 after
/// scaling and are not clipped.
pub fn preprocess_apply(meta: &PreprocessMeta, ds: &SurvivalDataset) -> Result<SurvivalDataset> {
    if ds.dim() != meta.means.len() {
        return Err(Error::DimensionMismatch {
            expected: meta.means.len(),
            actual: ds.dim(),
        });
    }
    let mut features = ds.features().clone();
    for (j, mut col) in features.columns_mut().into_iter().enumerate() {
        let (mean, std) = (meta.means[j], meta.stds[j]);
        if mean == 0.0 && std == 1.0 {
            continue;
        }
        for x in col.iter_mut() {
            *x = if std > 0.0 { (*x - mean) / std } else { 0.0 };
        }
    }
    let times = ds.times().mapv(|t| t / meta.time_scale);
    let mut out = SurvivalDataset::new(features, times, ds.events().to_vec(), ds.feature_names().to_vec())?;
    if let Some(layout) = ds.layout() {
        out = out.with_layout(layout.clone());
    }
    Ok(out)
}
