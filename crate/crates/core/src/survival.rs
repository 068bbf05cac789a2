//! Survival data, step functions and the non-parametric estimators.
//!
//! Hazard is represented only through the cumulative hazard `H`, estimated
//! with Nelson–Aalen increments. The model risk is `f(x, t) = 1 - exp(-H(t|x))`
//! and the survival function is its complement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-censored survival data: one row of covariates per observation plus
/// its observed time and event flag (`true` = failure observed).
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    features: Vec<f64>,
    n_features: usize,
    times: Vec<f64>,
    events: Vec<bool>,
    feature_names: Vec<String>,
    ids: Vec<u64>,
}

impl SurvivalDataset {
    /// Builds a dataset from row-major feature values.
    ///
    /// Row identifiers default to `0..n`; see [`with_ids`](Self::with_ids).
    pub fn new(
        rows: Vec<Vec<f64>>,
        times: Vec<f64>,
        events: Vec<bool>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n = times.len();
        if n == 0 {
            return Err(Error::domain("a survival dataset needs at least one observation"));
        }
        if rows.len() != n || events.len() != n {
            return Err(Error::domain(format!(
                "length mismatch: {} feature rows, {} times, {} events",
                rows.len(),
                n,
                events.len()
            )));
        }
        let d = feature_names.len();
        let mut features = Vec::with_capacity(n * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::domain(format!(
                    "row {i} has {} features, expected {d}",
                    row.len()
                )));
            }
            features.extend(row);
        }
        Self::from_parts(features, d, times, events, feature_names, (0..n as u64).collect())
    }

    fn from_parts(
        features: Vec<f64>,
        n_features: usize,
        times: Vec<f64>,
        events: Vec<bool>,
        feature_names: Vec<String>,
        ids: Vec<u64>,
    ) -> Result<Self> {
        if let Some((i, t)) = times.iter().enumerate().find(|(_, t)| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::domain(format!("time {t} at row {i} is not a finite non-negative number")));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "missing or non-finite feature value at row {}, column {}",
                i / n_features.max(1),
                i % n_features.max(1)
            )));
        }
        Ok(SurvivalDataset {
            features,
            n_features,
            times,
            events,
            feature_names,
            ids,
        })
    }

    /// Replaces the row identifiers (e.g. engine unit numbers).
    pub fn with_ids(mut self, ids: Vec<u64>) -> Result<Self> {
        if ids.len() != self.n_obs() {
            return Err(Error::domain("one identifier per row is required"));
        }
        self.ids = ids;
        Ok(self)
    }

    pub fn n_obs(&self) -> usize {
        self.times.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.n_features + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_obs()).map(|i| self.value(i, j)).collect()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Rows in the given order (indices may repeat).
    pub fn subset(&self, rows: &[usize]) -> Self {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        for &i in rows {
            features.extend_from_slice(self.row(i));
        }
        SurvivalDataset {
            features,
            n_features: self.n_features,
            times: rows.iter().map(|&i| self.times[i]).collect(),
            events: rows.iter().map(|&i| self.events[i]).collect(),
            feature_names: self.feature_names.clone(),
            ids: rows.iter().map(|&i| self.ids[i]).collect(),
        }
    }

    /// Keeps only the listed feature columns, in the listed order.
    pub fn select_features(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&j) = columns.iter().find(|&&j| j >= self.n_features) {
            return Err(Error::domain(format!("feature index {j} out of range")));
        }
        let n = self.n_obs();
        let mut features = Vec::with_capacity(n * columns.len());
        for i in 0..n {
            features.extend(columns.iter().map(|&j| self.value(i, j)));
        }
        Ok(SurvivalDataset {
            features,
            n_features: columns.len(),
            times: self.times.clone(),
            events: self.events.clone(),
            feature_names: columns.iter().map(|&j| self.feature_names[j].clone()).collect(),
            ids: self.ids.clone(),
        })
    }

    /// Feature columns by name; unknown names are an error.
    pub fn select_named(&self, names: &[String]) -> Result<Self> {
        let columns = names
            .iter()
            .map(|name| {
                self.feature_names
                    .iter()
                    .position(|f| f == name)
                    .ok_or_else(|| Error::domain(format!("unknown feature {name}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.select_features(&columns)
    }
}

/// Right-continuous piecewise-constant function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    jump_times: Vec<f64>,
    values: Vec<f64>,
    initial_value: f64,
}

impl StepFunction {
    pub fn new(jump_times: Vec<f64>, values: Vec<f64>, initial_value: f64) -> Result<Self> {
        if jump_times.len() != values.len() {
            return Err(Error::domain("step function needs one value per jump"));
        }
        if jump_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::domain("jump times must be finite and non-negative"));
        }
        if jump_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("jump times must be strictly increasing"));
        }
        Ok(StepFunction {
            jump_times,
            values,
            initial_value,
        })
    }

    /// The constant function.
    pub fn constant(value: f64) -> Self {
        StepFunction {
            jump_times: Vec::new(),
            values: Vec::new(),
            initial_value: value,
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    /// Value at `t`: the value of the last jump at or before `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.eval_unchecked(t))
    }

    /// Left limit `F(t-)`: the value of the last jump strictly before `t`.
    pub fn eval_left(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let k = self.jump_times.partition_point(|&u| u < t);
        Ok(if k == 0 { self.initial_value } else { self.values[k - 1] })
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&u| u <= t);
        if k == 0 {
            self.initial_value
        } else {
            self.values[k - 1]
        }
    }

    /// Applies `f` to every value, keeping the jump times.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        StepFunction {
            jump_times: self.jump_times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            initial_value: f(self.initial_value),
        }
    }
}

/// Right-continuous evaluation of `function` at `t`.
pub fn eval_step(function: &StepFunction, t: f64) -> Result<f64> {
    function.eval(t)
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

/// Counts at one distinct observed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RiskSetRow {
    pub time: f64,
    pub at_risk: usize,
    pub events: usize,
    pub censored: usize,
}

/// Distinct times in increasing order with risk-set sizes. Everyone observed
/// at `time` is at risk at `time`, so events precede censorings on ties.
pub(crate) fn risk_set_table(times: &[f64], events: &[bool]) -> Result<Vec<RiskSetRow>> {
    if times.is_empty() {
        return Err(Error::domain("estimator needs at least one observation"));
    }
    if times.len() != events.len() {
        return Err(Error::domain(format!(
            "times and events differ in length ({} vs {})",
            times.len(),
            events.len()
        )));
    }
    for &t in times {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::domain(format!("time {t} is not a finite non-negative number")));
        }
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

    let mut table = Vec::new();
    let mut at_risk = times.len();
    let mut k = 0;
    while k < order.len() {
        let time = times[order[k]];
        let mut n_events = 0;
        let mut n_censored = 0;
        while k < order.len() && times[order[k]] == time {
            if events[order[k]] {
                n_events += 1;
            } else {
                n_censored += 1;
            }
            k += 1;
        }
        table.push(RiskSetRow {
            time,
            at_risk,
            events: n_events,
            censored: n_censored,
        });
        at_risk -= n_events + n_censored;
    }
    Ok(table)
}

/// Kaplan–Meier product-limit survival curve. Jumps only at event times.
pub fn km_estimate(times: &[f64], events: &[bool]) -> Result<StepFunction> {
    let table = risk_set_table(times, events)?;
    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut surv = 1.0;
    for row in table.iter().filter(|r| r.events > 0) {
        surv *= 1.0 - row.events as f64 / row.at_risk as f64;
        jump_times.push(row.time);
        values.push(surv);
    }
    StepFunction::new(jump_times, values, 1.0)
}

/// Censoring survival curve `G(t)`: Kaplan–Meier with the event flag flipped.
pub fn reverse_km_censoring(times: &[f64], events: &[bool]) -> Result<StepFunction> {
    let flipped: Vec<bool> = events.iter().map(|e| !e).collect();
    km_estimate(times, &flipped)
}

/// Nelson–Aalen cumulative hazard: sum of `d_j / r_j` over event times.
pub fn na_cumhaz(times: &[f64], events: &[bool]) -> Result<StepFunction> {
    let table = risk_set_table(times, events)?;
    Ok(na_from_table(&table))
}

pub(crate) fn na_from_table(table: &[RiskSetRow]) -> StepFunction {
    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut cum = 0.0;
    for row in table.iter().filter(|r| r.events > 0) {
        cum += row.events as f64 / row.at_risk as f64;
        jump_times.push(row.time);
        values.push(cum);
    }
    StepFunction {
        jump_times,
        values,
        initial_value: 0.0,
    }
}

/// Risk of failure by `t` implied by a cumulative hazard: `1 - exp(-H(t))`.
pub fn risk_from_chf(chf: &StepFunction, t: f64) -> Result<f64> {
    Ok(risk_from_hazard(chf.eval(t)?))
}

#[inline]
pub fn risk_from_hazard(h: f64) -> f64 {
    -(-h).exp_m1()
}

/// `S = 1 - f`.
pub fn survival_from_risk(risk: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&risk) {
        return Err(Error::domain(format!("risk {risk} is outside [0, 1]")));
    }
    Ok(1.0 - risk)
}
