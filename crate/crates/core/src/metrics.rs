//! Performance metrics for survival predictions: IPCW Brier score at a
//! horizon, integrated Brier score and Harrell's concordance index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survival::{StepFunction, SurvivalDataset};

/// Default number of horizons in the integrated Brier score grid.
pub const IBS_GRID_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    BrierAtT,
    IntegratedBrier,
    CIndex,
}

impl MetricKind {
    pub fn orientation(self) -> Orientation {
        match self {
            MetricKind::BrierAtT | MetricKind::IntegratedBrier => Orientation::LowerIsBetter,
            MetricKind::CIndex => Orientation::HigherIsBetter,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::BrierAtT => "brier_at_t",
            MetricKind::IntegratedBrier => "integrated_brier",
            MetricKind::CIndex => "c_index",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brier_at_t" | "brier" => Ok(MetricKind::BrierAtT),
            "integrated_brier" | "ibs" => Ok(MetricKind::IntegratedBrier),
            "c_index" => Ok(MetricKind::CIndex),
            other => Err(Error::domain(format!("unknown metric kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    LowerIsBetter,
    HigherIsBetter,
}

impl Orientation {
    pub fn name(self) -> &'static str {
        match self {
            Orientation::LowerIsBetter => "lower_is_better",
            Orientation::HigherIsBetter => "higher_is_better",
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Orientation::LowerIsBetter => a < b,
            Orientation::HigherIsBetter => a > b,
        }
    }
}

/// One model's score Φ. The orientation always follows the metric kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceScore {
    pub value: f64,
    pub metric_kind: MetricKind,
    pub orientation: Orientation,
    pub horizon: Option<f64>,
}

impl PerformanceScore {
    pub fn new(value: f64, metric_kind: MetricKind, horizon: Option<f64>) -> Self {
        PerformanceScore {
            value,
            metric_kind,
            orientation: metric_kind.orientation(),
            horizon,
        }
    }

    pub fn brier(value: f64, horizon: f64) -> Self {
        Self::new(value, MetricKind::BrierAtT, Some(horizon))
    }

    pub fn c_index(value: f64) -> Self {
        Self::new(value, MetricKind::CIndex, None)
    }
}

fn check_aligned(n_pred: usize, test: &SurvivalDataset) -> Result<()> {
    if n_pred != test.n_obs() {
        return Err(Error::domain(format!(
            "{n_pred} predictions for {} test observations",
            test.n_obs()
        )));
    }
    Ok(())
}

/// Inverse-probability-of-censoring weighted Brier score at horizon `t`.
///
/// Observation `i` contributes
/// - `(1 - r_i)^2 / G(t_i-)` if it failed at or before `t`,
/// - `r_i^2 / G(t)` if it is still at risk after `t`,
/// - nothing if it was censored at or before `t`,
///
/// and the sum is divided by the number of test observations.
pub fn brier_score(risks: &[f64], test: &SurvivalDataset, t: f64, censor_curve: &StepFunction) -> Result<f64> {
    check_aligned(risks.len(), test)?;
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain(format!("horizon must be non-negative, got {t}")));
    }
    let g_t = censor_curve.eval(t)?;
    let mut total = 0.0;
    for ((&r, &ti), &event) in risks.iter().zip(test.times()).zip(test.events()) {
        if ti <= t && event {
            let g = censor_curve.eval_left(ti)?;
            if g <= 0.0 {
                return Err(Error::ZeroCensoringWeight { time: ti });
            }
            total += (1.0 - r) * (1.0 - r) / g;
        } else if ti > t {
            if g_t <= 0.0 {
                return Err(Error::ZeroCensoringWeight { time: t });
            }
            total += r * r / g_t;
        }
    }
    Ok(total / test.n_obs() as f64)
}

/// The `points` equally spaced horizons `t_max * k / points`, `k = 1..=points`.
pub fn ibs_grid(t_max: f64, points: usize) -> Vec<f64> {
    (1..=points).map(|k| t_max * k as f64 / points as f64).collect()
}

/// Integrated Brier score over [`IBS_GRID_POINTS`] horizons on `(0, t_max]`.
///
/// `risk_curves[i]` is observation `i`'s predicted risk as a function of time.
pub fn integrated_brier(
    risk_curves: &[StepFunction],
    test: &SurvivalDataset,
    censor_curve: &StepFunction,
    t_max: f64,
) -> Result<f64> {
    integrated_brier_with_grid(risk_curves, test, censor_curve, t_max, IBS_GRID_POINTS)
}

/// Trapezoidal integral of the Brier score across the grid, divided by the
/// integration span so that a constant score integrates to itself.
pub fn integrated_brier_with_grid(
    risk_curves: &[StepFunction],
    test: &SurvivalDataset,
    censor_curve: &StepFunction,
    t_max: f64,
    points: usize,
) -> Result<f64> {
    check_aligned(risk_curves.len(), test)?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::domain(format!("t_max must be positive, got {t_max}")));
    }
    if points < 2 {
        return Err(Error::domain("integration grid needs at least two horizons"));
    }
    let grid = ibs_grid(t_max, points);
    let scores = grid
        .iter()
        .map(|&t| {
            let risks = risk_curves.iter().map(|c| c.eval(t)).collect::<Result<Vec<_>>>()?;
            brier_score(&risks, test, t, censor_curve)
        })
        .collect::<Result<Vec<_>>>()?;
    let area: f64 = grid
        .windows(2)
        .zip(scores.windows(2))
        .map(|(t, b)| (t[1] - t[0]) * (b[0] + b[1]) / 2.0)
        .sum();
    Ok(area / (grid[points - 1] - grid[0]))
}

/// Harrell's concordance index.
///
/// A pair is comparable when the earlier time is an observed event, or when
/// the times tie and exactly one of the two is an event (that one counts as
/// earlier). It is concordant when the earlier observation has the strictly
/// higher risk; equal risks count one half.
pub fn c_index(risks: &[f64], test: &SurvivalDataset) -> Result<f64> {
    check_aligned(risks.len(), test)?;
    let times = test.times();
    let events = test.events();
    let n = risks.len();
    let mut comparable = 0u64;
    let mut concordant2 = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            let earlier = if times[i] < times[j] {
                events[i].then_some((i, j))
            } else if times[j] < times[i] {
                events[j].then_some((j, i))
            } else if events[i] != events[j] {
                Some(if events[i] { (i, j) } else { (j, i) })
            } else {
                None
            };
            let Some((a, b)) = earlier else { continue };
            comparable += 1;
            concordant2 += if risks[a] > risks[b] {
                2
            } else if risks[a] == risks[b] {
                1
            } else {
                0
            };
        }
    }
    if comparable == 0 {
        return Err(Error::Undefined("c-index has no comparable pairs".into()));
    }
    Ok(concordant2 as f64 / (2 * comparable) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(times: &[f64], events: &[bool]) -> SurvivalDataset {
        SurvivalDataset::new(
            vec![vec![0.0]; times.len()],
            times.to_vec(),
            events.to_vec(),
            vec!["x".into()],
        )
        .unwrap()
    }

    #[test]
    fn brier_perfect_and_uniform() {
        let test = data(&[1.0, 3.0], &[true, true]);
        let g = StepFunction::constant(1.0);
        assert_eq!(brier_score(&[1.0, 0.0], &test, 2.0, &g).unwrap(), 0.0);
        assert_eq!(brier_score(&[0.5, 0.5], &test, 2.0, &g).unwrap(), 0.25);
    }

    #[test]
    fn brier_zero_censoring_weight_reports_time() {
        let test = data(&[1.0, 3.0], &[true, true]);
        let g = StepFunction::new(vec![2.0], vec![0.0], 1.0).unwrap();
        match brier_score(&[0.5, 0.5], &test, 2.5, &g) {
            Err(Error::ZeroCensoringWeight { time }) => assert_eq!(time, 2.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn brier_rejects_misaligned() {
        let test = data(&[1.0, 3.0], &[true, true]);
        assert!(brier_score(&[0.5], &test, 2.0, &StepFunction::constant(1.0)).is_err());
    }

    #[test]
    fn ibs_of_perfect_predictions_is_zero() {
        let test = data(&[2.0, 6.0], &[true, true]);
        let curves = vec![
            StepFunction::new(vec![2.0], vec![1.0], 0.0).unwrap(),
            StepFunction::new(vec![6.0], vec![1.0], 0.0).unwrap(),
        ];
        let ibs = integrated_brier(&curves, &test, &StepFunction::constant(1.0), 10.0).unwrap();
        assert_eq!(ibs, 0.0);
    }

    #[test]
    fn ibs_bad_t_max() {
        let test = data(&[2.0], &[true]);
        let curves = vec![StepFunction::constant(0.5)];
        assert!(integrated_brier(&curves, &test, &StepFunction::constant(1.0), 0.0).is_err());
    }

    #[test]
    fn c_index_extremes() {
        let test = data(&[1.0, 2.0, 3.0, 4.0], &[true; 4]);
        assert_eq!(c_index(&[0.9, 0.7, 0.5, 0.1], &test).unwrap(), 1.0);
        assert_eq!(c_index(&[0.3; 4], &test).unwrap(), 0.5);
        assert_eq!(c_index(&[0.1, 0.5, 0.7, 0.9], &test).unwrap(), 0.0);
    }

    #[test]
    fn c_index_without_comparable_pairs() {
        let test = data(&[1.0, 2.0], &[false, false]);
        assert!(matches!(c_index(&[0.1, 0.2], &test), Err(Error::Undefined(_))));
    }

    #[test]
    fn orientation_follows_kind() {
        assert_eq!(PerformanceScore::brier(0.1, 250.0).orientation, Orientation::LowerIsBetter);
        assert_eq!(PerformanceScore::c_index(0.8).orientation, Orientation::HigherIsBetter);
        assert_eq!("ibs".parse::<MetricKind>().unwrap(), MetricKind::IntegratedBrier);
    }
}
