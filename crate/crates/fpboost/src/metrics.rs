//! Censoring-aware evaluation: Harrell's C-index, IPCW weights, Brier score
//! and its time integral, IPCW-weighted concordance, and cumulative AUC.

use crate::data::StepFunction;
use crate::error::{Error, Result};
use crate::util::{quantile_sorted, KahanSum};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

/// Harrell's concordance index. A pair (i, j) is comparable when
/// `t_i < t_j` and subject i had the event; it is concordant when
/// `risk_i > risk_j`, and tied risks count one half.
pub fn c_index(risks: &[f64], times: &[f64], events: &[bool]) -> Result<f64> {
    check_lengths(risks, times, events)?;
    let n = risks.len();
    let mut concordant = KahanSum::default();
    let mut comparable = 0u64;
    for i in 0..n {
        if !events[i] {
            continue;
        }
        for j in 0..n {
            if times[i] >= times[j] {
                continue;
            }
            comparable += 1;
            if risks[i] > risks[j] {
                concordant.add(1.0);
            } else if risks[i] == risks[j] {
                concordant.add(0.5);
            }
        }
    }
    if comparable == 0 {
        return Err(Error::NoComparablePairs);
    }
    Ok(concordant.total() / comparable as f64)
}

/// Inverse-probability-of-censoring weights at horizon `t`:
/// `w_i = event_i * 1(t_i <= t) / G(t_i-) + 1(t_i > t) / G(t)`.
/// Samples whose denominator is 0 get weight 0; the second return value
/// counts them.
pub fn ipcw_weights(
    times: &[f64],
    events: &[bool],
    censor_g: &StepFunction,
    t: f64,
) -> (Vec<f64>, usize) {
    let mut zero_weight = 0usize;
    let weights = times
        .iter()
        .zip(events)
        .map(|(&ti, &event)| {
            if ti <= t {
                if !event {
                    return 0.0;
                }
                let g = censor_g.eval_left(ti);
                if g > 0.0 {
                    1.0 / g
                } else {
                    zero_weight += 1;
                    0.0
                }
            } else {
                let g = censor_g.eval(t);
                if g > 0.0 {
                    1.0 / g
                } else {
                    zero_weight += 1;
                    0.0
                }
            }
        })
        .collect();
    (weights, zero_weight)
}

/// IPCW-weighted Brier score at horizon `t` for survival predictions
/// `surv_at_t` (one per subject, evaluated at `t`).
pub fn brier_score(
    surv_at_t: &[f64],
    times: &[f64],
    events: &[bool],
    censor_g: &StepFunction,
    t: f64,
) -> Result<f64> {
    check_lengths(surv_at_t, times, events)?;
    let (weights, _) = ipcw_weights(times, events, censor_g, t);
    let mut acc = KahanSum::default();
    for i in 0..times.len() {
        let indicator = if times[i] > t { 1.0 } else { 0.0 };
        let diff = indicator - surv_at_t[i];
        acc.add(weights[i] * diff * diff);
    }
    Ok(acc.total() / times.len() as f64)
}

/// Integrated Brier score: trapezoidal integral of BS(t) over `grid`,
/// normalized by the grid span. `surv` holds one row per subject with the
/// predicted survival at each grid time.
pub fn integrated_brier_score(
    surv: ArrayView2<'_, f64>,
    times: &[f64],
    events: &[bool],
    censor_g: &StepFunction,
    grid: &[f64],
) -> Result<f64> {
    let curve = brier_curve(surv, times, events, censor_g, grid)?;
    trapezoid_mean(grid, &curve)
}

/// BS(t) at every grid time.
pub fn brier_curve(
    surv: ArrayView2<'_, f64>,
    times: &[f64],
    events: &[bool],
    censor_g: &StepFunction,
    grid: &[f64],
) -> Result<Vec<f64>> {
    if grid.len() < 2 {
        return Err(Error::Validation("time grid needs at least 2 points".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation("time grid must be strictly increasing".into()));
    }
    if surv.nrows() != times.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            actual: surv.nrows(),
        });
    }
    if surv.ncols() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: surv.ncols(),
        });
    }
    grid.iter()
        .enumerate()
        .map(|(k, &t)| {
            let col: Vec<f64> = surv.column(k).to_vec();
            brier_score(&col, times, events, censor_g, t)
        })
        .collect()
}

fn trapezoid_mean(grid: &[f64], values: &[f64]) -> Result<f64> {
    let span = grid[grid.len() - 1] - grid[0];
    if span <= 0.0 {
        return Err(Error::Validation("time grid span must be positive".into()));
    }
    let mut acc = KahanSum::default();
    for k in 1..grid.len() {
        acc.add(0.5 * (values[k] + values[k - 1]) * (grid[k] - grid[k - 1]));
    }
    Ok(acc.total() / span)
}

/// Default evaluation grid: `n_points` equispaced times between the 1st and
/// 99th percentile of the observed times. Trimming the extremes keeps the
/// censoring distribution away from zero.
pub fn default_time_grid(times: &[f64], n_points: usize) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Err(Error::EmptyInput("default_time_grid"));
    }
    if n_points < 2 {
        return Err(Error::Validation("grid needs at least 2 points".into()));
    }
    let mut sorted = times.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let lo = quantile_sorted(&sorted, 0.01);
    let hi = quantile_sorted(&sorted, 0.99);
    if hi <= lo {
        return Err(Error::Validation(
            "observed times are too concentrated to build a grid".into(),
        ));
    }
    Ok((0..n_points)
        .map(|k| lo + (hi - lo) * k as f64 / (n_points - 1) as f64)
        .collect())
}

/// IPCW-weighted (Uno-style) concordance: comparable pairs as in [`c_index`],
/// each weighted by `G(t_i-)^-2`. Pairs whose weight denominator is 0 are
/// skipped.
pub fn c_td(risks: &[f64], times: &[f64], events: &[bool], censor_g: &StepFunction) -> Result<f64> {
    check_lengths(risks, times, events)?;
    let n = risks.len();
    let mut numerator = KahanSum::default();
    let mut denominator = KahanSum::default();
    let mut any_pair = false;
    for i in 0..n {
        if !events[i] {
            continue;
        }
        let g = censor_g.eval_left(times[i]);
        if g <= 0.0 {
            continue;
        }
        let weight = 1.0 / (g * g);
        for j in 0..n {
            if times[i] >= times[j] {
                continue;
            }
            any_pair = true;
            denominator.add(weight);
            if risks[i] > risks[j] {
                numerator.add(weight);
            } else if risks[i] == risks[j] {
                numerator.add(0.5 * weight);
            }
        }
    }
    if !any_pair {
        return Err(Error::NoComparablePairs);
    }
    Ok(numerator.total() / denominator.total())
}

/// AUC at a single horizon:
/// `sum_ij w_i 1(t_j > t, t_i <= t) 1(r_j <= r_i)` over
/// `(sum_i 1(t_i > t)) * (sum_i w_i 1(t_i <= t))`, with IPCW weights `w`.
/// Returns `None` when the case or control set is empty.
fn auc_at(risks: &[f64], times: &[f64], weights: &[f64], t: f64) -> Option<f64> {
    let n = risks.len();
    let controls = times.iter().filter(|&&tj| tj > t).count();
    let mut case_mass = KahanSum::default();
    for i in 0..n {
        if times[i] <= t {
            case_mass.add(weights[i]);
        }
    }
    if controls == 0 || case_mass.total() <= 0.0 {
        return None;
    }
    let mut num = KahanSum::default();
    for i in 0..n {
        if times[i] > t || weights[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if times[j] > t && risks[j] <= risks[i] {
                num.add(weights[i]);
            }
        }
    }
    Some(num.total() / (controls as f64 * case_mass.total()))
}

/// Cumulative/dynamic AUC integrated over `grid` by trapezoid, normalized by
/// the span of the retained grid points. Grid points with an empty case or
/// control set are skipped; an error is returned if every point is skipped.
pub fn cumulative_auc(
    risks: &[f64],
    times: &[f64],
    events: &[bool],
    censor_g: &StepFunction,
    grid: &[f64],
) -> Result<f64> {
    check_lengths(risks, times, events)?;
    if grid.is_empty() {
        return Err(Error::Validation("empty time grid".into()));
    }
    let mut retained_t = Vec::new();
    let mut retained_auc = Vec::new();
    for &t in grid {
        let (weights, _) = ipcw_weights(times, events, censor_g, t);
        if let Some(auc) = auc_at(risks, times, &weights, t) {
            retained_t.push(t);
            retained_auc.push(auc);
        }
    }
    match retained_t.len() {
        0 => Err(Error::Validation(
            "no grid point had both cases and controls".into(),
        )),
        1 => Ok(retained_auc[0]),
        _ => trapezoid_mean(&retained_t, &retained_auc),
    }
}

/// All evaluation metrics for one model on one dataset, plus the Brier curve
/// and bookkeeping counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub c_index: f64,
    pub ibs: f64,
    pub c_td: f64,
    pub auc: f64,
    pub brier_times: Vec<f64>,
    pub brier_values: Vec<f64>,
    pub comparable_pairs: u64,
    pub zero_weight_samples: usize,
}

impl EvaluationReport {
    /// Plain-text table with the headline metrics scaled by 100 and rounded
    /// to one decimal.
    pub fn to_table(&self) -> String {
        let mut out = String::from("metric    value\n");
        for (name, value) in [
            ("c-index", self.c_index),
            ("ibs", self.ibs),
            ("c-td", self.c_td),
            ("auc", self.auc),
        ] {
            out.push_str(&format!("{name:<9} {:>6.1}\n", value * 100.0));
        }
        out
    }
}

/// Computes every metric in one pass. `surv` holds predicted survival, one
/// row per subject, one column per grid time.
pub fn evaluate(
    risks: &[f64],
    surv: ArrayView2<'_, f64>,
    times: &[f64],
    events: &[bool],
    censor_g: &StepFunction,
    grid: &[f64],
) -> Result<EvaluationReport> {
    let c = c_index(risks, times, events)?;
    let curve = brier_curve(surv, times, events, censor_g, grid)?;
    let ibs = trapezoid_mean(grid, &curve)?;
    let ctd = c_td(risks, times, events, censor_g)?;
    let auc = cumulative_auc(risks, times, events, censor_g, grid)?;

    let mut comparable = 0u64;
    for i in 0..times.len() {
        if !events[i] {
            continue;
        }
        comparable += times.iter().filter(|&&tj| times[i] < tj).count() as u64;
    }
    let zero_weight_samples = grid
        .iter()
        .map(|&t| ipcw_weights(times, events, censor_g, t).1)
        .max()
        .unwrap_or(0);

    Ok(EvaluationReport {
        c_index: c,
        ibs,
        c_td: ctd,
        auc,
        brier_times: grid.to_vec(),
        brier_values: curve,
        comparable_pairs: comparable,
        zero_weight_samples,
    })
}

fn check_lengths(a: &[f64], times: &[f64], events: &[bool]) -> Result<()> {
    if a.len() != times.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            actual: a.len(),
        });
    }
    if events.len() != times.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            actual: events.len(),
        });
    }
    if times.len() < 2 {
        return Err(Error::Validation("need at least 2 subjects".into()));
    }
    Ok(())
}
