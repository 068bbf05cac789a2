use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::split::{logrank_score_sorted, logrank_scores, logrank_sorted, SortedPool, SplitRule};
use super::HyperParams;
use crate::error::{Error, Result};
use crate::survival::{na_from_table, risk_set_table, StepFunction, SurvivalDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        chf: StepFunction,
        /// Training rows (with bootstrap multiplicity) that reached the leaf.
        count: usize,
    },
}

/// A binary survival tree. Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalTree {
    nodes: Vec<Node>,
    depth: usize,
    n_features: usize,
}

impl SurvivalTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Length of the longest root-to-leaf path (0 for a single leaf).
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn leaves(&self) -> impl Iterator<Item = (&StepFunction, usize)> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { chf, count } => Some((chf, *count)),
            Node::Split { .. } => None,
        })
    }

    /// Cumulative hazard of the leaf `x` falls into.
    pub fn leaf_chf(&self, x: &[f64]) -> Result<&StepFunction> {
        if x.len() != self.n_features {
            return Err(Error::domain(format!(
                "feature vector has {} entries, tree expects {}",
                x.len(),
                self.n_features
            )));
        }
        Ok(self.leaf_chf_unchecked(x))
    }

    pub(crate) fn leaf_chf_unchecked(&self, x: &[f64]) -> &StepFunction {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { chf, .. } => return chf,
            }
        }
    }
}

/// Grows a tree on every row of `data`.
///
/// At each node `mtry` features are drawn without replacement and `nsplit`
/// thresholds uniformly over each feature's node-local range; the pair with
/// the largest split statistic wins. A node becomes a leaf when it reaches
/// `nodedepth`, holds fewer than `2 * nodesize` rows, or has no split with a
/// positive statistic whose children both keep `nodesize` rows.
pub fn fit_tree<R: Rng + ?Sized>(data: &SurvivalDataset, hp: &HyperParams, rng: &mut R) -> Result<SurvivalTree> {
    hp.validate(data.n_features())?;
    let rows: Vec<usize> = (0..data.n_obs()).collect();
    Ok(grow_tree(data, rows, hp, rng))
}

pub(crate) fn grow_tree<R: Rng + ?Sized>(
    data: &SurvivalDataset,
    rows: Vec<usize>,
    hp: &HyperParams,
    rng: &mut R,
) -> SurvivalTree {
    let mut builder = Builder {
        data,
        hp,
        nodes: Vec::new(),
        depth: 0,
    };
    builder.grow(rows, 0, rng);
    SurvivalTree {
        nodes: builder.nodes,
        depth: builder.depth,
        n_features: data.n_features(),
    }
}

struct Builder<'a> {
    data: &'a SurvivalDataset,
    hp: &'a HyperParams,
    nodes: Vec<Node>,
    depth: usize,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    stat: f64,
}

impl Builder<'_> {
    fn grow<R: Rng + ?Sized>(&mut self, mut rows: Vec<usize>, depth: usize, rng: &mut R) -> usize {
        let times = self.data.times();
        rows.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

        let best = if depth < self.hp.nodedepth && rows.len() >= 2 * self.hp.nodesize {
            self.best_split(&rows, rng)
        } else {
            None
        };

        let Some(best) = best else {
            return self.leaf(&rows, depth);
        };

        let id = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: 0,
            right: 0,
        });
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.data.value(i, best.feature) <= best.threshold);
        let left = self.grow(left_rows, depth + 1, rng);
        let right = self.grow(right_rows, depth + 1, rng);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut self.nodes[id]
        {
            *l = left;
            *r = right;
        }
        id
    }

    fn leaf(&mut self, rows: &[usize], depth: usize) -> usize {
        let times: Vec<f64> = rows.iter().map(|&i| self.data.times()[i]).collect();
        let events: Vec<bool> = rows.iter().map(|&i| self.data.events()[i]).collect();
        let chf = match risk_set_table(&times, &events) {
            Ok(table) => na_from_table(&table),
            Err(_) => StepFunction::constant(0.0),
        };
        self.depth = self.depth.max(depth);
        self.nodes.push(Node::Leaf {
            chf,
            count: rows.len(),
        });
        self.nodes.len() - 1
    }

    /// `rows` must be sorted by time.
    fn best_split<R: Rng + ?Sized>(&self, rows: &[usize], rng: &mut R) -> Option<Candidate> {
        let times: Vec<f64> = rows.iter().map(|&i| self.data.times()[i]).collect();
        let events: Vec<bool> = rows.iter().map(|&i| self.data.events()[i]).collect();
        if !events.iter().any(|&e| e) {
            return None;
        }
        let pool = SortedPool {
            times: &times,
            events: &events,
        };
        let scores = match self.hp.splitrule {
            SplitRule::LogRankScore => Some(logrank_scores(&pool)),
            SplitRule::LogRank => None,
        };

        let d = self.data.n_features();
        let features = index::sample(rng, d, self.hp.mtry.min(d));
        let mut best: Option<Candidate> = None;
        let mut is_left = vec![false; rows.len()];
        let mut values = vec![0.0; rows.len()];

        for feature in features.iter() {
            for (v, &i) in values.iter_mut().zip(rows) {
                *v = self.data.value(i, feature);
            }
            let (lo, hi) = values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            if lo >= hi {
                continue;
            }
            let mut thresholds: Vec<f64> = (0..self.hp.nsplit).map(|_| rng.random_range(lo..hi)).collect();
            thresholds.sort_by(f64::total_cmp);
            thresholds.dedup();

            for &threshold in &thresholds {
                let mut n_left = 0;
                for (flag, &v) in is_left.iter_mut().zip(&values) {
                    *flag = v <= threshold;
                    n_left += *flag as usize;
                }
                if n_left < self.hp.nodesize || rows.len() - n_left < self.hp.nodesize {
                    continue;
                }
                let stat = match &scores {
                    Some(table) => logrank_score_sorted(table, &is_left),
                    None => logrank_sorted(&pool, &is_left),
                };
                if stat > 0.0 && best.as_ref().is_none_or(|b| stat > b.stat) {
                    best = Some(Candidate {
                        feature,
                        threshold,
                        stat,
                    });
                }
            }
        }
        best
    }
}
