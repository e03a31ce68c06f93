//! Survival analysis with gradient-boosted mixtures of parametric hazards.
//!
//! The model predicts, for each subject, the parameters of a weighted sum of
//! Weibull and log-logistic hazard functions. One regression-tree ensemble is
//! boosted per distribution parameter by following the exact gradient of the
//! negative survival log-likelihood, so no proportional-hazard or discrete-time
//! assumption is needed. The crate also ships the censoring-aware evaluation
//! stack (Kaplan-Meier, IPCW, concordance, Brier/IBS, time-dependent AUC)
//! required to score such models on right-censored data.
//!
//! ```no_run
//! use fpboost::boost::{fit, FPBoostConfig};
//! use fpboost::data::simulate_weibull_mixture;
//!
//! let data = simulate_weibull_mixture(500, &[(1.0, 1.0, 1.0)], 0.3, 7).unwrap();
//! let config = FPBoostConfig {
//!     n_weibull: 1,
//!     n_loglogistic: 0,
//!     n_estimators: 50,
//!     ..FPBoostConfig::default()
//! };
//! let (model, trace) = fit(&config, &data, None).unwrap();
//! let survival = model.predict_survival(data.feature_row(0), &[0.0, 0.5, 1.0]).unwrap();
//! assert_eq!(survival[0], 1.0);
//! assert_eq!(trace.len(), 50);
//! ```

pub mod boost;
pub mod data;
pub mod error;
pub mod experiment;
pub mod heads;
pub mod metrics;
pub mod trees;
pub mod tune;

mod util;

pub use boost::{FPBoostConfig, FPBoostModel, TrainTrace};
pub use data::{PreprocessMeta, StepFunction, SurvivalDataset};
pub use error::{Error, Result};
pub use heads::{HeadFamily, HeadParams, WeightActivation};
pub use metrics::EvaluationReport;
pub use trees::RegressionTree;
pub use util::derive_seed;
