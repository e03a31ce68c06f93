//! Product-limit (Kaplan-Meier) estimation and the right-continuous step
//! functions it produces.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Right-continuous piecewise-constant function. `initial` is the value for
/// every `t` before the first knot; survival-type functions start at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    initial: f64,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, initial: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: knots.len(),
                actual: values.len(),
            });
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("step function knots must be strictly increasing".into()));
        }
        Ok(Self { knots, values, initial })
    }

    /// Constant function with no knots.
    pub fn constant(value: f64) -> Self {
        Self {
            knots: Vec::new(),
            values: Vec::new(),
            initial: value,
        }
    }

    /// Value at `t` (right-continuous: the knot at `t` itself counts).
    pub fn eval(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k <= t) {
            0 => self.initial,
            i => self.values[i - 1],
        }
    }

    /// Left limit at `t`: the value just before `t` (knot at `t` excluded).
    pub fn eval_left(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k < t) {
            0 => self.initial,
            i => self.values[i - 1],
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Kaplan-Meier estimate of the survival function.
///
/// Distinct event times become knots; at each knot the survival drops by the
/// factor `1 - d/n` with `d` events and `n` subjects at risk. Subjects
/// censored at a knot are still at risk there (events precede censorings at
/// tied times).
pub fn kaplan_meier(times: &[f64], events: &[bool]) -> Result<StepFunction> {
    if times.is_empty() {
        return Err(Error::EmptyInput("kaplan_meier"));
    }
    if times.len() != events.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            actual: events.len(),
        });
    }
    if times.iter().any(|&t| !t.is_finite() || t < 0.0) {
        return Err(Error::Validation("times must be finite and >= 0".into()));
    }

    let n = times.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| times[a].total_cmp(&times[b]));

    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut survival = 1.0_f64;
    let mut pos = 0;
    while pos < n {
        let t = times[order[pos]];
        let at_risk = n - pos;
        let mut deaths = 0usize;
        let mut group_end = pos;
        while group_end < n && times[order[group_end]] == t {
            if events[order[group_end]] {
                deaths += 1;
            }
            group_end += 1;
        }
        if deaths > 0 {
            survival *= 1.0 - deaths as f64 / at_risk as f64;
            knots.push(t);
            values.push(survival);
        }
        pos = group_end;
    }

    StepFunction::new(knots, values, 1.0)
}

/// Kaplan-Meier estimate of the censoring distribution G(t): the product-limit
/// estimator with the event indicator flipped, used for IPCW.
pub fn censoring_km(times: &[f64], events: &[bool]) -> Result<StepFunction> {
    let flipped: Vec<bool> = events.iter().map(|&e| !e).collect();
    kaplan_meier(times, &flipped)
}
