//! Experiment configuration, read from TOML. Every field has a default, so an
//! empty file (or no file at all) resolves to the desk profile on FD001.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use survmult::cmapss::{SubsetId, CONSTANT_TOLERANCE, DEFAULT_FEATURE_WINDOW};
use survmult::forest::SplitRule;
use survmult::metrics::MetricKind;

/// Named hyperparameter grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    /// Full grid: 10 x 5 x 5 x 5 x 2 x 6 = 15,000 configurations.
    Paper,
    /// Reduced grid of 4 configurations for laptops and tests.
    Desk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub ntree: Vec<usize>,
    pub mtry: Vec<usize>,
    pub nodesize: Vec<usize>,
    pub nodedepth: Vec<usize>,
    pub splitrule: Vec<SplitRule>,
    pub nsplit: Vec<usize>,
}

impl GridConfig {
    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => GridConfig {
                ntree: vec![100, 300],
                mtry: vec![3, 5],
                nodesize: vec![5],
                nodedepth: vec![5],
                splitrule: vec![SplitRule::LogRank],
                nsplit: vec![5],
            },
            Profile::Paper => GridConfig {
                ntree: (100..=1900).step_by(200).collect(),
                mtry: (1..=9).step_by(2).collect(),
                nodesize: (5..=85).step_by(20).collect(),
                nodedepth: (5..=85).step_by(20).collect(),
                splitrule: vec![SplitRule::LogRank, SplitRule::LogRankScore],
                nsplit: (5..=15).step_by(2).collect(),
            },
        }
    }

    /// Number of configurations before any `mtry` filtering.
    pub fn size(&self) -> usize {
        self.ntree.len()
            * self.mtry.len()
            * self.nodesize.len()
            * self.nodedepth.len()
            * self.splitrule.len()
            * self.nsplit.len()
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::profile(Profile::Desk)
    }
}

/// Score used for Rashomon membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MembershipConfig {
    pub metric: MetricKind,
    /// Brier horizon, or the upper end of the integration range for the
    /// integrated Brier score. Defaults to `censor_time`.
    pub horizon: Option<f64>,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        MembershipConfig {
            metric: MetricKind::BrierAtT,
            horizon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Subsets to process, e.g. `["FD001", "FD003"]`.
    pub datasets: Vec<String>,
    /// Directory holding `train_FD00x.txt`.
    pub data_dir: PathBuf,
    /// Explicit file per subset; overrides `data_dir`.
    pub paths: BTreeMap<String, PathBuf>,
    pub censor_time: f64,
    pub feature_window: usize,
    /// `"skip"` or `"error"` for engines shorter than the feature window.
    pub short_units: String,
    pub constant_tolerance: f64,
    pub split_ratio: f64,
    pub seed: u64,
    pub eps_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    /// Evaluate cube entries at this common time instead of each
    /// observation's own time. Sensitivity analysis only.
    pub eval_horizon: Option<f64>,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub out_dir: PathBuf,
    pub membership: MembershipConfig,
    pub grid: GridConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            datasets: vec!["FD001".into()],
            data_dir: PathBuf::from("data/CMAPSS"),
            paths: BTreeMap::new(),
            censor_time: 250.0,
            feature_window: DEFAULT_FEATURE_WINDOW,
            short_units: "skip".into(),
            constant_tolerance: CONSTANT_TOLERANCE,
            split_ratio: 0.8,
            seed: 2024,
            eps_grid: vec![0.01, 0.05, 0.10],
            delta_grid: vec![0.01, 0.05, 0.10],
            eval_horizon: None,
            threads: 0,
            out_dir: PathBuf::from("out"),
            membership: MembershipConfig::default(),
            grid: GridConfig::default(),
        }
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    ensure!(!grid.is_empty(), "{name} must not be empty");
    for v in grid {
        ensure!(*v > 0.0 && *v <= 1.0, "{name} value {v} outside (0, 1]");
    }
    ensure!(grid.windows(2).all(|w| w[0] < w[1]), "{name} must be strictly increasing");
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid experiment config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Fills derived defaults and validates every field.
    pub fn resolve(mut self) -> Result<Self> {
        if self.membership.horizon.is_none() {
            self.membership.horizon = Some(self.censor_time);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.datasets.is_empty(), "no datasets configured");
        self.subsets()?;
        ensure!(self.censor_time > 0.0 && self.censor_time.is_finite(), "censor_time must be positive");
        ensure!(self.feature_window > 0, "feature_window must be positive");
        ensure!(
            matches!(self.short_units.as_str(), "skip" | "error"),
            "short_units must be \"skip\" or \"error\""
        );
        ensure!(self.constant_tolerance >= 0.0, "constant_tolerance must be non-negative");
        ensure!(self.split_ratio > 0.0 && self.split_ratio < 1.0, "split_ratio must lie in (0, 1)");
        check_grid("eps_grid", &self.eps_grid)?;
        check_grid("delta_grid", &self.delta_grid)?;
        ensure!(self.delta_grid.iter().all(|d| *d < 1.0), "delta_grid values must be below 1");
        if let Some(h) = self.membership.horizon {
            ensure!(h > 0.0 && h.is_finite(), "membership horizon must be positive");
        }
        if let Some(h) = self.eval_horizon {
            ensure!(h >= 0.0 && h.is_finite(), "eval_horizon must be non-negative");
        }
        let g = &self.grid;
        for (name, list) in [
            ("ntree", &g.ntree),
            ("mtry", &g.mtry),
            ("nodesize", &g.nodesize),
            ("nodedepth", &g.nodedepth),
            ("nsplit", &g.nsplit),
        ] {
            ensure!(!list.is_empty(), "grid.{name} must not be empty");
            ensure!(list.iter().all(|v| *v > 0), "grid.{name} values must be positive");
        }
        ensure!(!g.splitrule.is_empty(), "grid.splitrule must not be empty");
        Ok(())
    }

    /// Configured subsets in FD001..FD004 order, without duplicates.
    pub fn subsets(&self) -> Result<Vec<SubsetId>> {
        let mut out = Vec::new();
        for name in &self.datasets {
            let id: SubsetId = name.parse()?;
            if !out.contains(&id) {
                out.push(id);
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn data_path(&self, subset: SubsetId) -> PathBuf {
        self.paths
            .get(subset.name())
            .cloned()
            .unwrap_or_else(|| self.data_dir.join(subset.train_file_name()))
    }

    pub fn horizon(&self) -> f64 {
        self.membership.horizon.unwrap_or(self.censor_time)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serialising config")
    }

    /// SHA-256 (hex) of the resolved config with `out_dir` and `threads`
    /// blanked, since neither changes any result.
    pub fn hash(&self) -> Result<String> {
        let mut normalised = self.clone();
        normalised.out_dir = PathBuf::new();
        normalised.threads = 0;
        let text = normalised.to_toml()?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }
}

/// Parses a comma-separated list of numbers such as `0.01,0.05,0.1`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("{s:?} is not a number")))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        bail!("empty grid {text:?}");
    }
    Ok(values)
}
