//! Two-sample split statistics of the log-rank family.
//!
//! Both statistics are written so that swapping the groups negates the
//! numerator exactly in floating point, which makes `stat(L, R) == stat(R, L)`
//! hold bit-for-bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRule {
    /// Standardised two-sample log-rank statistic.
    #[serde(rename = "logrank")]
    LogRank,
    /// Standardised sum of log-rank scores.
    #[serde(rename = "logrankscore")]
    LogRankScore,
}

impl SplitRule {
    pub fn name(self) -> &'static str {
        match self {
            SplitRule::LogRank => "logrank",
            SplitRule::LogRankScore => "logrankscore",
        }
    }
}

impl std::str::FromStr for SplitRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logrank" => Ok(SplitRule::LogRank),
            "logrankscore" => Ok(SplitRule::LogRankScore),
            other => Err(Error::domain(format!("unknown split rule {other:?}"))),
        }
    }
}

impl std::fmt::Display for SplitRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A pooled sample sorted by time with a group flag per observation.
pub(crate) struct SortedPool<'a> {
    pub times: &'a [f64],
    pub events: &'a [bool],
}

/// Absolute standardised log-rank statistic between `left` and the rest.
///
/// `pool` must be sorted by time. Returns 0 when the variance vanishes.
pub(crate) fn logrank_sorted(pool: &SortedPool<'_>, is_left: &[bool]) -> f64 {
    let n = pool.times.len();
    let mut at_risk = n as f64;
    let mut at_risk_left = is_left.iter().filter(|&&l| l).count() as f64;
    let mut numerator = 0.0;
    let mut variance = 0.0;
    let mut k = 0;
    while k < n {
        let t = pool.times[k];
        let (mut d, mut d_left, mut c, mut c_left) = (0.0, 0.0, 0.0, 0.0);
        while k < n && pool.times[k] == t {
            c += 1.0;
            if is_left[k] {
                c_left += 1.0;
            }
            if pool.events[k] {
                d += 1.0;
                if is_left[k] {
                    d_left += 1.0;
                }
            }
            k += 1;
        }
        if d > 0.0 {
            let at_risk_right = at_risk - at_risk_left;
            let d_right = d - d_left;
            numerator += (d_left * at_risk_right - d_right * at_risk_left) / at_risk;
            if at_risk > 1.0 {
                variance += (at_risk_left * at_risk_right) * d * (at_risk - d)
                    / (at_risk * at_risk * (at_risk - 1.0));
            }
        }
        at_risk -= c;
        at_risk_left -= c_left;
    }
    if variance > 0.0 {
        numerator.abs() / variance.sqrt()
    } else {
        0.0
    }
}

/// Log-rank scores `a_i = δ_i - H(t_i)` with `H` the pooled Nelson–Aalen
/// estimate, plus their mean and sample variance. `pool` must be sorted.
pub(crate) struct ScoreTable {
    pub scores: Vec<f64>,
    pub variance: f64,
}

pub(crate) fn logrank_scores(pool: &SortedPool<'_>) -> ScoreTable {
    let n = pool.times.len();
    let mut scores = vec![0.0; n];
    let mut at_risk = n;
    let mut cum = 0.0;
    let mut k = 0;
    while k < n {
        let start = k;
        let t = pool.times[k];
        let mut d = 0usize;
        while k < n && pool.times[k] == t {
            if pool.events[k] {
                d += 1;
            }
            k += 1;
        }
        cum += d as f64 / at_risk as f64;
        for (score, &event) in scores[start..k].iter_mut().zip(&pool.events[start..k]) {
            *score = if event { 1.0 } else { 0.0 } - cum;
        }
        at_risk -= k - start;
    }
    let variance = if n > 1 {
        let mean = scores.iter().sum::<f64>() / n as f64;
        scores.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    ScoreTable { scores, variance }
}

/// Absolute standardised log-rank score statistic for a left/right grouping
/// of the pool the `table` was computed from.
pub(crate) fn logrank_score_sorted(table: &ScoreTable, is_left: &[bool]) -> f64 {
    let n = table.scores.len();
    let (mut sum_left, mut sum_right) = (0.0, 0.0);
    let mut n_left = 0usize;
    for (a, &l) in table.scores.iter().zip(is_left) {
        if l {
            sum_left += a;
            n_left += 1;
        } else {
            sum_right += a;
        }
    }
    let n_right = n - n_left;
    if n_left == 0 || n_right == 0 || table.variance <= 0.0 {
        return 0.0;
    }
    let (nl, nr, nf) = (n_left as f64, n_right as f64, n as f64);
    let numerator = (nr * sum_left - nl * sum_right) / nf;
    let denominator = ((nl * nr) / nf * table.variance).sqrt();
    if denominator > 0.0 {
        numerator.abs() / denominator
    } else {
        0.0
    }
}

fn pool_groups(
    left: (&[f64], &[bool]),
    right: (&[f64], &[bool]),
) -> Result<(Vec<f64>, Vec<bool>, Vec<bool>)> {
    for (name, (t, e)) in [("left", left), ("right", right)] {
        if t.is_empty() {
            return Err(Error::domain(format!("{name} group is empty")));
        }
        if t.len() != e.len() {
            return Err(Error::domain(format!("{name} group times/events differ in length")));
        }
        if t.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::domain(format!("{name} group has an invalid time")));
        }
    }
    let mut rows: Vec<(f64, bool, bool)> = left
        .0
        .iter()
        .zip(left.1)
        .map(|(&t, &e)| (t, e, true))
        .chain(right.0.iter().zip(right.1).map(|(&t, &e)| (t, e, false)))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok((
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| r.1).collect(),
        rows.iter().map(|r| r.2).collect(),
    ))
}

/// Absolute standardised two-sample log-rank statistic.
///
/// Zero when the groups cannot be told apart (no events, or degenerate risk
/// sets).
pub fn logrank_stat(left: (&[f64], &[bool]), right: (&[f64], &[bool])) -> Result<f64> {
    let (times, events, is_left) = pool_groups(left, right)?;
    Ok(logrank_sorted(&SortedPool { times: &times, events: &events }, &is_left))
}

/// Absolute standardised log-rank score statistic.
pub fn logrank_score_stat(left: (&[f64], &[bool]), right: (&[f64], &[bool])) -> Result<f64> {
    let (times, events, is_left) = pool_groups(left, right)?;
    let table = logrank_scores(&SortedPool { times: &times, events: &events });
    Ok(logrank_score_sorted(&table, &is_left))
}

/// Dispatches on the rule.
pub fn split_stat(rule: SplitRule, left: (&[f64], &[bool]), right: (&[f64], &[bool])) -> Result<f64> {
    match rule {
        SplitRule::LogRank => logrank_stat(left, right),
        SplitRule::LogRankScore => logrank_score_stat(left, right),
    }
}
