//! Seeded stratified splitting on the censoring indicator.

use super::SurvivalDataset;
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Splits a dataset into `(train, test)` with the test side holding
/// approximately `test_frac` of each censoring stratum (rounded per stratum,
/// so counts are within one sample of the exact fraction). Deterministic per
/// seed; the two sides partition the input exactly.
pub fn stratified_split(
    ds: &SurvivalDataset,
    test_frac: f64,
    seed: u64,
) -> Result<(SurvivalDataset, SurvivalDataset)> {
    if !(0.0..1.0).contains(&test_frac) || test_frac <= 0.0 {
        return Err(Error::Validation(format!(
            "test_frac must lie in (0, 1), got {test_frac}"
        )));
    }
    let censored: Vec<usize> = (0..ds.len()).filter(|&i| !ds.events()[i]).collect();
    let observed: Vec<usize> = (0..ds.len()).filter(|&i| ds.events()[i]).collect();
    if censored.is_empty() || observed.is_empty() {
        return Err(Error::Validation(
            "stratified split requires both censored and event records".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for stratum in [censored, observed] {
        let mut indices = stratum;
        indices.shuffle(&mut rng);
        let n_test = (indices.len() as f64 * test_frac).round() as usize;
        test_idx.extend_from_slice(&indices[..n_test]);
        train_idx.extend_from_slice(&indices[n_test..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((ds.select(&train_idx), ds.select(&test_idx)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array1, Array2};

    fn dataset(n_censored: usize, n_events: usize) -> SurvivalDataset {
        let n = n_censored + n_events;
        let features = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let times = Array1::from_shape_fn(n, |i| 1.0 + i as f64);
        let mut events = vec![false; n_censored];
        events.extend(vec![true; n_events]);
        SurvivalDataset::new(features, times, events, vec!["x".into()]).unwrap()
    }

    #[test]
    fn per_stratum_counts_are_proportional() {
        let ds = dataset(60, 40);
        let (train, test) = stratified_split(&ds, 0.2, 3).unwrap();
        assert_eq!(test.len(), 20);
        assert_eq!(train.len(), 80);
        assert_eq!(test.events().iter().filter(|&&e| !e).count(), 12);
        assert_eq!(test.events().iter().filter(|&&e| e).count(), 8);
    }

    #[test]
    fn same_seed_gives_identical_split() {
        let ds = dataset(50, 50);
        let (tr1, te1) = stratified_split(&ds, 0.25, 11).unwrap();
        let (tr2, te2) = stratified_split(&ds, 0.25, 11).unwrap();
        assert_eq!(tr1.features(), tr2.features());
        assert_eq!(te1.features(), te2.features());
    }

    #[test]
    fn different_seeds_differ() {
        let ds = dataset(50, 50);
        let (_, te1) = stratified_split(&ds, 0.2, 1).unwrap();
        let (_, te2) = stratified_split(&ds, 0.2, 2).unwrap();
        assert_ne!(te1.features(), te2.features());
    }

    #[test]
    fn split_is_an_exact_partition() {
        let ds = dataset(33, 67);
        let (train, test) = stratified_split(&ds, 0.3, 5).unwrap();
        assert_eq!(train.len() + test.len(), ds.len());
        // Feature 0 was the original row index; union must be 0..n with no repeats.
        let mut seen: Vec<i64> = train
            .features()
            .column(0)
            .iter()
            .chain(test.features().column(0).iter())
            .map(|&x| x as i64)
            .collect();
        seen.sort_unstable();
        let expected: Vec<i64> = (0..ds.len() as i64).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn empty_stratum_is_error() {
        let ds = dataset(0, 10);
        assert!(stratified_split(&ds, 0.2, 0).is_err());
    }
}
