//! Brute-force reference implementations and random input generators.
//!
//! Nothing here calls into the estimators under test; each oracle recounts
//! risk sets, pairs or conflicts directly from the raw inputs.

#![allow(dead_code)]

use rand::Rng;
use survmult::rashomon::PredictionCube;
use survmult::metrics::PerformanceScore;
use survmult::survival::SurvivalDataset;

/// Empirical survival `#{t_i > t} / n`.
pub fn empirical_survival(times: &[f64], t: f64) -> f64 {
    times.iter().filter(|&&ti| ti > t).count() as f64 / times.len() as f64
}

/// Nelson–Aalen at `t` by scanning every observation for every event.
pub fn nelson_aalen_oracle(times: &[f64], events: &[bool], t: f64) -> f64 {
    let mut distinct: Vec<f64> = times
        .iter()
        .zip(events)
        .filter(|(&u, &e)| e && u <= t)
        .map(|(&u, _)| u)
        .collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    distinct
        .iter()
        .map(|&u| {
            let d = times.iter().zip(events).filter(|(&s, &e)| e && s == u).count();
            let r = times.iter().filter(|&&s| s >= u).count();
            d as f64 / r as f64
        })
        .sum()
}

/// Kaplan–Meier at `t` from explicit risk-set counts.
pub fn kaplan_meier_oracle(times: &[f64], events: &[bool], t: f64) -> f64 {
    let mut distinct: Vec<f64> = times
        .iter()
        .zip(events)
        .filter(|(&u, &e)| e && u <= t)
        .map(|(&u, _)| u)
        .collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    distinct
        .iter()
        .map(|&u| {
            let d = times.iter().zip(events).filter(|(&s, &e)| e && s == u).count();
            let r = times.iter().filter(|&&s| s >= u).count();
            1.0 - d as f64 / r as f64
        })
        .product()
}

/// Two-sample log-rank statistic from an explicit table of
/// observed-minus-expected and hypergeometric variance per event time.
pub fn logrank_oracle(left: (&[f64], &[bool]), right: (&[f64], &[bool])) -> f64 {
    let all: Vec<(f64, bool, bool)> = left
        .0
        .iter()
        .zip(left.1)
        .map(|(&t, &e)| (t, e, true))
        .chain(right.0.iter().zip(right.1).map(|(&t, &e)| (t, e, false)))
        .collect();
    let mut event_times: Vec<f64> = all.iter().filter(|o| o.1).map(|o| o.0).collect();
    event_times.sort_by(f64::total_cmp);
    event_times.dedup();
    let (mut o_minus_e, mut var) = (0.0, 0.0);
    for u in event_times {
        let y = all.iter().filter(|o| o.0 >= u).count() as f64;
        let y1 = all.iter().filter(|o| o.0 >= u && o.2).count() as f64;
        let d = all.iter().filter(|o| o.0 == u && o.1).count() as f64;
        let d1 = all.iter().filter(|o| o.0 == u && o.1 && o.2).count() as f64;
        o_minus_e += d1 - y1 * d / y;
        if y > 1.0 {
            var += (y1 / y) * (1.0 - y1 / y) * ((y - d) / (y - 1.0)) * d;
        }
    }
    if var > 0.0 {
        o_minus_e.abs() / var.sqrt()
    } else {
        0.0
    }
}

/// Log-rank score statistic: scores `a_l = δ_l - Σ_{k: t_k <= t_l, δ_k} 1 / #{j: t_j >= t_k}`,
/// standardised sum over the left group.
pub fn logrank_score_oracle(left: (&[f64], &[bool]), right: (&[f64], &[bool])) -> f64 {
    let all: Vec<(f64, bool, bool)> = left
        .0
        .iter()
        .zip(left.1)
        .map(|(&t, &e)| (t, e, true))
        .chain(right.0.iter().zip(right.1).map(|(&t, &e)| (t, e, false)))
        .collect();
    let n = all.len() as f64;
    let scores: Vec<f64> = all
        .iter()
        .map(|&(tl, el, _)| {
            let cum: f64 = all
                .iter()
                .filter(|o| o.1 && o.0 <= tl)
                .map(|o| 1.0 / all.iter().filter(|p| p.0 >= o.0).count() as f64)
                .sum();
            f64::from(u8::from(el)) - cum
        })
        .collect();
    let mean = scores.iter().sum::<f64>() / n;
    let s2 = scores.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let n1 = left.0.len() as f64;
    let s: f64 = scores.iter().zip(&all).filter(|(_, o)| o.2).map(|(a, _)| a).sum();
    let denom = (n1 * (1.0 - n1 / n) * s2).sqrt();
    if denom > 0.0 {
        (s - n1 * mean).abs() / denom
    } else {
        0.0
    }
}

/// IPCW Brier score, one weight case at a time.
pub fn brier_oracle(risks: &[f64], times: &[f64], events: &[bool], t: f64, g_left: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    for i in 0..risks.len() {
        let contribution = if times[i] <= t && events[i] {
            (1.0 - risks[i]).powi(2) / g_left(times[i])
        } else if times[i] > t {
            risks[i].powi(2) / g(t)
        } else {
            0.0
        };
        total += contribution;
    }
    total / risks.len() as f64
}

/// Harrell's c-index over all ordered pairs.
pub fn c_index_oracle(risks: &[f64], times: &[f64], events: &[bool]) -> Option<f64> {
    let n = risks.len();
    let (mut comparable, mut concordant) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let i_first = (times[i] < times[j] && events[i]) || (times[i] == times[j] && events[i] && !events[j]);
            if !i_first {
                continue;
            }
            comparable += 1.0;
            if risks[i] > risks[j] {
                concordant += 1.0;
            } else if risks[i] == risks[j] {
                concordant += 0.5;
            }
        }
    }
    (comparable > 0.0).then(|| concordant / comparable)
}

/// Ambiguity, discrepancy and obscurity by a literal triple loop over
/// observations, members and the reference row.
pub fn multiplicity_oracle(risks: &[Vec<f64>], reference: usize, members: &[usize], delta: f64) -> (f64, f64, f64) {
    let n = risks[0].len();
    let conflict = |k: usize, i: usize| (risks[k][i] - risks[reference][i]).abs() >= delta;

    let mut ambiguous = 0.0;
    for i in 0..n {
        let mut any = 0.0;
        for &k in members {
            if conflict(k, i) {
                any = 1.0;
            }
        }
        ambiguous += any;
    }

    let mut discrepancy: f64 = 0.0;
    for &k in members {
        let mut count = 0.0;
        for i in 0..n {
            if conflict(k, i) {
                count += 1.0;
            }
        }
        discrepancy = discrepancy.max(count / n as f64);
    }

    let mut obscurity = 0.0;
    for i in 0..n {
        let mut count = 0.0;
        for &k in members {
            if conflict(k, i) {
                count += 1.0;
            }
        }
        obscurity += count / members.len() as f64;
    }
    (ambiguous / n as f64, discrepancy, obscurity / n as f64)
}

/// Random right-censored data; times come from a small integer range so that
/// ties occur regularly.
pub fn random_times_events<R: Rng>(rng: &mut R, n: usize, censor_prob: f64) -> (Vec<f64>, Vec<bool>) {
    let times = (0..n).map(|_| rng.random_range(1..=(n as u32 + 3)) as f64).collect();
    let events = (0..n).map(|_| !rng.random_bool(censor_prob)).collect();
    (times, events)
}

pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, d: usize) -> SurvivalDataset {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| (rng.random_range(0..20) as f64) / 4.0).collect())
        .collect();
    let times = rows
        .iter()
        .map(|x| (1.0 + 3.0 * x[0] + rng.random_range(0.0..10.0)).round())
        .collect();
    let events = (0..n).map(|_| rng.random_bool(0.75)).collect();
    let names = (0..d).map(|j| format!("x{j}")).collect();
    SurvivalDataset::new(rows, times, events, names).unwrap()
}

/// Random cube whose risks sit on a 0.01 lattice so that deviations hit the
/// `δ` thresholds exactly now and then. `reference` is made the best model.
pub fn random_cube<R: Rng>(rng: &mut R, m: usize, n: usize, reference: usize) -> PredictionCube {
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(0..=100) as f64 / 100.0).collect())
        .collect();
    let perfs = (0..m)
        .map(|k| {
            let v = if k == reference { 0.05 } else { 0.05 + rng.random_range(1..=40) as f64 / 200.0 };
            PerformanceScore::brier(v, 250.0)
        })
        .collect();
    let ids = (0..m).map(|k| format!("model{k}")).collect();
    PredictionCube::new(rows, perfs, ids).unwrap()
}

pub fn cube_rows(cube: &PredictionCube) -> Vec<Vec<f64>> {
    (0..cube.n_models()).map(|k| cube.row(k).to_vec()).collect()
}
