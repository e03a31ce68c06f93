//! Shared helpers for the criterion benches.

use fpboost::data::simulate_weibull_mixture;
use fpboost::SurvivalDataset;

/// A fixed two-group mixture dataset for reproducible benches.
pub fn bench_dataset(n: usize) -> SurvivalDataset {
    simulate_weibull_mixture(n, &[(2.0, 1.0, 0.7), (0.5, 2.5, 0.6)], 0.3, 99).unwrap()
}
