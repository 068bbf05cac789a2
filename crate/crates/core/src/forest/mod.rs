//! Random survival forests.
//!
//! Each tree is grown on a bootstrap resample of the training rows and stores
//! Nelson–Aalen cumulative hazards in its leaves. The ensemble hazard is the
//! pointwise mean of the leaf hazards, evaluated on the grid of distinct
//! training event times, and risk follows as `1 - exp(-H)`.
//!
//! Tree `k` draws all of its randomness from ChaCha8 stream `k` of the
//! forest seed, so sequential and parallel training agree bit-for-bit.

mod split;
mod tree;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use split::{logrank_score_stat, logrank_stat, split_stat, SplitRule};
pub use tree::{fit_tree, Node, SurvivalTree};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::survival::{risk_from_hazard, StepFunction, SurvivalDataset};

/// Forest hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HyperParams {
    /// Number of trees.
    pub ntree: usize,
    /// Features tried at each node.
    pub mtry: usize,
    /// Minimum rows per leaf; a node needs `2 * nodesize` rows to split.
    pub nodesize: usize,
    /// Maximum tree depth.
    pub nodedepth: usize,
    pub splitrule: SplitRule,
    /// Random thresholds tried per candidate feature.
    pub nsplit: usize,
}

impl HyperParams {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        let positive = [
            ("ntree", self.ntree),
            ("mtry", self.mtry),
            ("nodesize", self.nodesize),
            ("nodedepth", self.nodedepth),
            ("nsplit", self.nsplit),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::domain(format!("{name} must be positive")));
        }
        if self.mtry > n_features {
            return Err(Error::domain(format!(
                "mtry = {} exceeds the {n_features} available features",
                self.mtry
            )));
        }
        Ok(())
    }

    /// Stable identifier used for model ids in reports and cube files.
    pub fn id(&self) -> String {
        format!(
            "ntree{}_mtry{}_nodesize{}_nodedepth{}_{}_nsplit{}",
            self.ntree, self.mtry, self.nodesize, self.nodedepth, self.splitrule, self.nsplit
        )
    }
}

/// How each tree's training rows are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resampling {
    /// `n` draws with replacement.
    #[default]
    Bootstrap,
    /// Every tree sees every row once.
    None,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ForestOptions {
    pub resampling: Resampling,
    pub execution: Execution,
}

const FORMAT_NAME: &str = "survmult-forest";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalForest {
    trees: Vec<SurvivalTree>,
    hyperparams: HyperParams,
    rng_seed: u64,
    event_time_grid: Vec<f64>,
    n_features: usize,
}

/// The deterministic random stream of tree `tree_index`.
pub fn tree_rng(seed: u64, tree_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index as u64);
    rng
}

/// Fits `hp.ntree` bootstrap trees with the default execution mode.
pub fn fit_forest(data: &SurvivalDataset, hp: &HyperParams, seed: u64) -> Result<SurvivalForest> {
    fit_forest_with(data, hp, seed, ForestOptions::default())
}

pub fn fit_forest_with(
    data: &SurvivalDataset,
    hp: &HyperParams,
    seed: u64,
    options: ForestOptions,
) -> Result<SurvivalForest> {
    hp.validate(data.n_features())?;
    let n = data.n_obs();
    let trees = options.execution.map_indexed(hp.ntree, |k| {
        let mut rng = tree_rng(seed, k);
        let rows: Vec<usize> = match options.resampling {
            Resampling::Bootstrap => (0..n).map(|_| rng.random_range(0..n)).collect(),
            Resampling::None => (0..n).collect(),
        };
        tree::grow_tree(data, rows, hp, &mut rng)
    });

    let mut event_time_grid: Vec<f64> = data
        .times()
        .iter()
        .zip(data.events())
        .filter(|(_, &e)| e)
        .map(|(&t, _)| t)
        .collect();
    event_time_grid.sort_by(f64::total_cmp);
    event_time_grid.dedup();

    Ok(SurvivalForest {
        trees,
        hyperparams: *hp,
        rng_seed: seed,
        event_time_grid,
        n_features: data.n_features(),
    })
}

impl SurvivalForest {
    pub fn trees(&self) -> &[SurvivalTree] {
        &self.trees
    }

    pub fn hyperparams(&self) -> &HyperParams {
        &self.hyperparams
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn event_time_grid(&self) -> &[f64] {
        &self.event_time_grid
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::domain(format!(
                "feature vector has {} entries, forest expects {}",
                x.len(),
                self.n_features
            )));
        }
        Ok(())
    }

    /// Mean of the per-tree leaf hazards on the training event-time grid.
    pub fn predict_chf(&self, x: &[f64]) -> Result<StepFunction> {
        self.check_dim(x)?;
        let mut sums = vec![0.0; self.event_time_grid.len()];
        for tree in &self.trees {
            let leaf = tree.leaf_chf_unchecked(x);
            for (s, &g) in sums.iter_mut().zip(&self.event_time_grid) {
                *s += leaf.eval_unchecked(g);
            }
        }
        let ntree = self.trees.len() as f64;
        StepFunction::new(
            self.event_time_grid.clone(),
            sums.into_iter().map(|s| s / ntree).collect(),
            0.0,
        )
    }

    /// Ensemble hazard at a single time. Agrees bit-for-bit with
    /// `predict_chf(x)?.eval(t)` because leaf hazards only jump on the grid.
    pub fn predict_hazard(&self, x: &[f64], t: f64) -> Result<f64> {
        self.check_dim(x)?;
        if t.is_nan() || t < 0.0 {
            return Err(Error::domain(format!("time must be non-negative, got {t}")));
        }
        let sum: f64 = self
            .trees
            .iter()
            .map(|tree| tree.leaf_chf_unchecked(x).eval_unchecked(t))
            .fold(0.0, |acc, h| acc + h);
        Ok(sum / self.trees.len() as f64)
    }

    /// `1 - exp(-H(t | x))`.
    pub fn predict_risk(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(risk_from_hazard(self.predict_hazard(x, t)?))
    }

    /// Writes the forest as versioned JSON.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(
            BufWriter::new(file),
            &Envelope {
                format: FORMAT_NAME.to_string(),
                version: FORMAT_VERSION,
                forest: std::borrow::Cow::Borrowed(self),
            },
        )?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let envelope: Envelope<'static> = serde_json::from_reader(BufReader::new(file))?;
        if envelope.format != FORMAT_NAME || envelope.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported forest file {} v{}",
                envelope.format, envelope.version
            )));
        }
        Ok(envelope.forest.into_owned())
    }
}

/// Free-function form of [`SurvivalForest::predict_chf`].
pub fn predict_chf(forest: &SurvivalForest, x: &[f64]) -> Result<StepFunction> {
    forest.predict_chf(x)
}

/// Free-function form of [`SurvivalForest::predict_risk`].
pub fn predict_risk(forest: &SurvivalForest, x: &[f64], t: f64) -> Result<f64> {
    forest.predict_risk(x, t)
}

#[derive(Serialize, Deserialize)]
struct Envelope<'a> {
    format: String,
    version: u32,
    forest: std::borrow::Cow<'a, SurvivalForest>,
}
