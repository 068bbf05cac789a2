//! Rashomon sets and predictive multiplicity measures for survival models.
//!
//! Given a prediction cube (risk of model `k` for observation `i` at the
//! observation's own time), a reference model `f_R` with the best score and a
//! tolerance `ε`, the Rashomon set holds every model whose score is within `ε`
//! of the reference. A prediction *conflicts* when it differs from the
//! reference prediction by at least `δ`:
//!
//! - ambiguity: share of observations with a conflict under *some* member;
//! - discrepancy: largest share of conflicting observations for a *single*
//!   member;
//! - obscurity: mean over observations of the share of members in conflict.
//!
//! The reference belongs to its own Rashomon set. It never conflicts with
//! itself but it does count in the obscurity denominator.

mod cube;

use serde::{Deserialize, Serialize};

pub use cube::{build_prediction_cube, build_prediction_cube_with, cube_row, EvalTime, PredictionCube};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::{Orientation, PerformanceScore};

/// Index of the best score; the lowest index wins ties.
pub fn select_reference(performances: &[PerformanceScore]) -> Result<usize> {
    let first = performances
        .first()
        .ok_or_else(|| Error::domain("no performances to choose a reference from"))?;
    if performances.iter().any(|p| p.orientation != first.orientation) {
        return Err(Error::domain("performances mix metric orientations"));
    }
    if let Some(p) = performances.iter().find(|p| p.value.is_nan()) {
        return Err(Error::domain(format!("performance of {:?} is NaN", p.metric_kind)));
    }
    let mut best = 0;
    for (k, p) in performances.iter().enumerate().skip(1) {
        if first.orientation.better(p.value, performances[best].value) {
            best = k;
        }
    }
    Ok(best)
}

/// Members of a Rashomon set, sorted by model index.
#[derive(Debug, Clone, PartialEq)]
pub struct RashomonSelection {
    /// `None` for hand-picked member sets.
    pub epsilon: Option<f64>,
    pub reference_index: usize,
    pub member_indices: Vec<usize>,
    /// Worst admissible score, `Φ(f_R) ± ε`.
    pub performance_bound: Option<f64>,
}

impl RashomonSelection {
    /// An explicit member set; the reference is added if missing.
    pub fn from_members(reference_index: usize, members: impl IntoIterator<Item = usize>) -> Self {
        let mut member_indices: Vec<usize> = members.into_iter().chain([reference_index]).collect();
        member_indices.sort_unstable();
        member_indices.dedup();
        RashomonSelection {
            epsilon: None,
            reference_index,
            member_indices,
            performance_bound: None,
        }
    }

    pub fn size(&self) -> usize {
        self.member_indices.len()
    }

    fn check(&self, cube: &PredictionCube) -> Result<()> {
        if self.reference_index != cube.reference_index() {
            return Err(Error::domain(format!(
                "selection reference {} differs from cube reference {}",
                self.reference_index,
                cube.reference_index()
            )));
        }
        if let Some(&k) = self.member_indices.iter().find(|&&k| k >= cube.n_models()) {
            return Err(Error::domain(format!("member {k} is not a model of the cube")));
        }
        Ok(())
    }
}

/// Models whose score is within `epsilon` of the reference's:
/// `Φ(f) <= Φ(f_R) + ε` for lower-is-better scores and
/// `Φ(f) >= Φ(f_R) - ε` for higher-is-better ones.
pub fn rashomon_set(performances: &[PerformanceScore], reference: usize, epsilon: f64) -> Result<RashomonSelection> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::domain(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let reference_score = performances
        .get(reference)
        .ok_or_else(|| Error::domain(format!("reference {reference} out of range")))?;
    let orientation = reference_score.orientation;
    let bound = match orientation {
        Orientation::LowerIsBetter => reference_score.value + epsilon,
        Orientation::HigherIsBetter => reference_score.value - epsilon,
    };
    let mut member_indices = Vec::new();
    for (k, p) in performances.iter().enumerate() {
        if p.orientation != orientation {
            return Err(Error::domain("performances mix metric orientations"));
        }
        let admitted = match orientation {
            Orientation::LowerIsBetter => p.value <= bound,
            Orientation::HigherIsBetter => p.value >= bound,
        };
        if admitted || k == reference {
            member_indices.push(k);
        }
    }
    Ok(RashomonSelection {
        epsilon: Some(epsilon),
        reference_index: reference,
        member_indices,
        performance_bound: Some(bound),
    })
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `conflicts[j][i]`: member `j` deviates from the reference on observation
/// `i` by at least `delta`.
fn conflict_matrix(cube: &PredictionCube, members: &RashomonSelection, delta: f64) -> Result<Vec<Vec<bool>>> {
    check_delta(delta)?;
    members.check(cube)?;
    let reference = cube.row(cube.reference_index());
    Ok(members
        .member_indices
        .iter()
        .map(|&k| {
            cube.row(k)
                .iter()
                .zip(reference)
                .map(|(f, r)| (f - r).abs() >= delta)
                .collect()
        })
        .collect())
}

/// The three measures computed from one conflict matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplicity {
    pub ambiguity: f64,
    pub discrepancy: f64,
    pub obscurity: f64,
}

fn measures_from_conflicts(conflicts: &[Vec<bool>], n: usize) -> Multiplicity {
    let members = conflicts.len();
    let mut ambiguous = 0usize;
    let mut obscurity_sum = 0.0;
    for i in 0..n {
        let count = conflicts.iter().filter(|row| row[i]).count();
        if count > 0 {
            ambiguous += 1;
        }
        obscurity_sum += count as f64 / members as f64;
    }
    let discrepancy = conflicts
        .iter()
        .map(|row| row.iter().filter(|&&c| c).count() as f64 / n as f64)
        .fold(0.0, f64::max);
    Multiplicity {
        ambiguity: ambiguous as f64 / n as f64,
        discrepancy,
        obscurity: obscurity_sum / n as f64,
    }
}

/// Ambiguity, discrepancy and obscurity in one pass.
pub fn multiplicity(cube: &PredictionCube, members: &RashomonSelection, delta: f64) -> Result<Multiplicity> {
    let conflicts = conflict_matrix(cube, members, delta)?;
    Ok(measures_from_conflicts(&conflicts, cube.n_obs()))
}

/// Share of observations whose reference risk moves by at least `delta`
/// under at least one Rashomon member.
pub fn ambiguity(cube: &PredictionCube, members: &RashomonSelection, delta: f64) -> Result<f64> {
    Ok(multiplicity(cube, members, delta)?.ambiguity)
}

/// Largest share of observations whose risk moves by at least `delta` when
/// the reference is swapped for one Rashomon member.
pub fn discrepancy(cube: &PredictionCube, members: &RashomonSelection, delta: f64) -> Result<f64> {
    Ok(multiplicity(cube, members, delta)?.discrepancy)
}

/// Mean over observations of the share of Rashomon members (reference
/// included) that conflict with the reference.
pub fn obscurity(cube: &PredictionCube, members: &RashomonSelection, delta: f64) -> Result<f64> {
    Ok(multiplicity(cube, members, delta)?.obscurity)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub epsilon: f64,
    pub delta: f64,
    pub ambiguity: f64,
    pub discrepancy: f64,
    pub obscurity: f64,
    pub rashomon_size: usize,
}

/// Measures over an `(ε, δ)` grid, rows ordered by `ε` then `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub dataset_id: String,
    pub rows: Vec<ReportRow>,
}

impl MultiplicityReport {
    /// Checks ranges, non-increase in `δ` within each `ε`, and non-decreasing
    /// Rashomon size in `ε`.
    pub fn check_invariants(&self) -> Result<()> {
        for r in &self.rows {
            for (name, v) in [
                ("ambiguity", r.ambiguity),
                ("discrepancy", r.discrepancy),
                ("obscurity", r.obscurity),
            ] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::domain(format!("{name} {v} outside [0, 1] at ε={}, δ={}", r.epsilon, r.delta)));
                }
            }
            if r.rashomon_size == 0 {
                return Err(Error::domain("empty Rashomon set in report"));
            }
        }
        for w in self.rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.epsilon == b.epsilon {
                if b.delta >= a.delta
                    && (b.ambiguity > a.ambiguity || b.discrepancy > a.discrepancy || b.obscurity > a.obscurity)
                {
                    return Err(Error::domain(format!(
                        "measures increase with δ at ε={} between δ={} and δ={}",
                        a.epsilon, a.delta, b.delta
                    )));
                }
            } else if b.epsilon > a.epsilon && b.rashomon_size < a.rashomon_size {
                return Err(Error::domain(format!(
                    "Rashomon size shrinks from ε={} to ε={}",
                    a.epsilon, b.epsilon
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, epsilon: f64, delta: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.epsilon == epsilon && r.delta == delta)
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain(format!("{name} grid is empty")));
    }
    if let Some(v) = grid.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
        return Err(Error::domain(format!("{name} value {v} outside (0, 1]")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

/// Evaluates the measures for every `(ε, δ)` pair, recomputing Rashomon
/// membership per `ε`.
pub fn sweep(cube: &PredictionCube, eps_grid: &[f64], delta_grid: &[f64]) -> Result<MultiplicityReport> {
    sweep_with(cube, eps_grid, delta_grid, "", Execution::default())
}

pub fn sweep_with(
    cube: &PredictionCube,
    eps_grid: &[f64],
    delta_grid: &[f64],
    dataset_id: &str,
    execution: Execution,
) -> Result<MultiplicityReport> {
    check_grid("epsilon", eps_grid)?;
    check_grid("delta", delta_grid)?;
    let selections = eps_grid
        .iter()
        .map(|&eps| rashomon_set(cube.performances(), cube.reference_index(), eps))
        .collect::<Result<Vec<_>>>()?;
    let n_delta = delta_grid.len();
    let rows = execution.try_map_indexed(eps_grid.len() * n_delta, |cell| {
        let selection = &selections[cell / n_delta];
        let delta = delta_grid[cell % n_delta];
        let m = multiplicity(cube, selection, delta)?;
        Ok::<_, Error>(ReportRow {
            epsilon: eps_grid[cell / n_delta],
            delta,
            ambiguity: m.ambiguity,
            discrepancy: m.discrepancy,
            obscurity: m.obscurity,
            rashomon_size: selection.size(),
        })
    })?;
    Ok(MultiplicityReport {
        dataset_id: dataset_id.to_string(),
        rows,
    })
}

/// Size and score range of the Rashomon set at one `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RashomonSummary {
    pub epsilon: f64,
    pub size: usize,
    pub performance_min: f64,
    pub performance_max: f64,
}

/// Summaries of the Rashomon sets for each `ε`; `scores` (e.g. c-indices)
/// supplies the values whose range is reported, defaulting to the cube's own
/// performances.
pub fn rashomon_summaries(cube: &PredictionCube, eps_grid: &[f64], scores: Option<&[f64]>) -> Result<Vec<RashomonSummary>> {
    let own: Vec<f64> = cube.performances().iter().map(|p| p.value).collect();
    let values = scores.unwrap_or(&own);
    if values.len() != cube.n_models() {
        return Err(Error::domain("one score per model is required"));
    }
    eps_grid
        .iter()
        .map(|&eps| {
            let sel = rashomon_set(cube.performances(), cube.reference_index(), eps)?;
            let (lo, hi) = sel
                .member_indices
                .iter()
                .map(|&k| values[k])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            Ok(RashomonSummary {
                epsilon: eps,
                size: sel.size(),
                performance_min: lo,
                performance_max: hi,
            })
        })
        .collect()
}
