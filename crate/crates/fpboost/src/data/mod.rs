//! Dataset ingestion, preprocessing, stratified splitting, and the
//! Kaplan-Meier estimators used for initialization and IPCW.

mod km;
mod load;
mod preprocess;
mod simulate;
mod split;

pub use km::{censoring_km, kaplan_meier, StepFunction};
pub use load::{load_csv, load_csv_with_layout, write_csv, CsvSchema};
pub use preprocess::{preprocess_apply, preprocess_fit_transform, PreprocessMeta};
pub use simulate::simulate_weibull_mixture;
pub use split::stratified_split;

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

/// One subject: encoded features, observed time, and whether the event was
/// observed (`true`) or the subject was censored (`false`).
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalRecord<'a> {
    pub features: ArrayView1<'a, f64>,
    pub time: f64,
    pub event: bool,
}

/// How one source column maps into the encoded feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    /// One-hot encoded; `levels` fixes both the block width and column order.
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

/// Source-column encoding layout. A layout captured from a training file lets
/// test files be encoded into the identical feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnLayout {
    pub time_col: String,
    pub event_col: String,
    pub columns: Vec<ColumnSpec>,
}

impl ColumnLayout {
    /// Encoded feature dimension: numeric columns count 1, categorical
    /// columns count one per level.
    pub fn encoded_dim(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match &c.kind {
                ColumnKind::Numeric => 1,
                ColumnKind::Categorical { levels } => levels.len(),
            })
            .sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.encoded_dim());
        for col in &self.columns {
            match &col.kind {
                ColumnKind::Numeric => names.push(col.name.clone()),
                ColumnKind::Categorical { levels } => {
                    for level in levels {
                        names.push(format!("{}={}", col.name, level));
                    }
                }
            }
        }
        names
    }

    /// True for encoded columns that came from a one-hot block; those are not
    /// standardized.
    pub(crate) fn one_hot_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.encoded_dim());
        for col in &self.columns {
            match &col.kind {
                ColumnKind::Numeric => mask.push(false),
                ColumnKind::Categorical { levels } => mask.extend(std::iter::repeat(true).take(levels.len())),
            }
        }
        mask
    }
}

/// Immutable survival dataset: an `n x d` encoded feature matrix plus one
/// `(time, event)` pair per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    features: Array2<f64>,
    times: Array1<f64>,
    events: Vec<bool>,
    feature_names: Vec<String>,
    layout: Option<ColumnLayout>,
}

impl SurvivalDataset {
    /// Builds a dataset, validating that dimensions agree, times are
    /// nonnegative, and no feature or time is NaN.
    pub fn new(
        features: Array2<f64>,
        times: Array1<f64>,
        events: Vec<bool>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n = features.nrows();
        if times.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: times.len(),
            });
        }
        if events.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: events.len(),
            });
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::DimensionMismatch {
                expected: features.ncols(),
                actual: feature_names.len(),
            });
        }
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Validation(format!(
                    "time must be finite and >= 0, got {t} in row {}",
                    i + 1
                )));
            }
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("features contain NaN or infinity".into()));
        }
        Ok(Self {
            features,
            times,
            events,
            feature_names,
            layout: None,
        })
    }

    pub(crate) fn with_layout(mut self, layout: ColumnLayout) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Encoded feature dimension d.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn times(&self) -> &Array1<f64> {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Source-column layout, present when the dataset came from a CSV file.
    pub fn layout(&self) -> Option<&ColumnLayout> {
        self.layout.as_ref()
    }

    pub fn record(&self, i: usize) -> SurvivalRecord<'_> {
        SurvivalRecord {
            features: self.features.row(i),
            time: self.times[i],
            event: self.events[i],
        }
    }

    /// Fraction of censored records.
    pub fn censoring_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.events.iter().filter(|&&e| !e).count() as f64 / self.len() as f64
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let features = self.features.select(ndarray::Axis(0), indices);
        let times = Array1::from_iter(indices.iter().map(|&i| self.times[i]));
        let events = indices.iter().map(|&i| self.events[i]).collect();
        Self {
            features,
            times,
            events,
            feature_names: self.feature_names.clone(),
            layout: self.layout.clone(),
        }
    }
}
