//! ingest → reformulate → split → train grid → score → cube → sweep.

use std::path::Path;

use anyhow::{Context, Result};
use log::{info, warn};
use survmult::cmapss::{
    drop_constant_features, parse_cmapss, split_train_test, to_survival, CensoringPolicy, ShortUnitPolicy, SubsetId,
};
use survmult::forest::{fit_forest, SurvivalForest};
use survmult::metrics::{brier_score, c_index, integrated_brier, MetricKind, PerformanceScore};
use survmult::rashomon::{
    cube_row, rashomon_summaries, sweep_with, EvalTime, MultiplicityReport, PredictionCube,
};
use survmult::survival::{reverse_km_censoring, risk_from_hazard, StepFunction, SurvivalDataset};
use survmult::Execution;

use crate::config::ExperimentConfig;
use crate::grid::build_model_grid;
use crate::output::{self, ModelRecord, HEATMAP_METRICS};

/// Reformulated and split data for one subset.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub subset: SubsetId,
    pub units: usize,
    pub skipped_units: Vec<u32>,
    pub removed_features: Vec<String>,
    /// All engines, constant columns removed.
    pub full: SurvivalDataset,
    pub train: SurvivalDataset,
    pub test: SurvivalDataset,
}

pub fn prepare(config: &ExperimentConfig, subset: SubsetId) -> Result<PreparedData> {
    let path = config.data_path(subset);
    let raw = parse_cmapss(&path, subset).with_context(|| format!("ingesting {subset}"))?;
    let units = raw.units().len();
    let short = if config.short_units == "error" {
        ShortUnitPolicy::Error
    } else {
        ShortUnitPolicy::Skip
    };
    let policy = CensoringPolicy::new(config.censor_time)?;
    let reformulated = to_survival(&raw, policy, config.feature_window, short)?;
    if !reformulated.skipped_units.is_empty() {
        warn!(
            "{subset}: skipped {} engines shorter than {} cycles",
            reformulated.skipped_units.len(),
            config.feature_window
        );
    }
    let (full, removed_features) = drop_constant_features(&reformulated.dataset, config.constant_tolerance)?;
    info!(
        "{subset}: {units} engines, {} features after dropping {} constant columns",
        full.n_features(),
        removed_features.len()
    );
    let (train, test) = split_train_test(&full, config.split_ratio, config.seed)?;
    Ok(PreparedData {
        subset,
        units,
        skipped_units: reformulated.skipped_units,
        removed_features,
        full,
        train,
        test,
    })
}

/// Seed of grid member `k`.
pub fn model_seed(config: &ExperimentConfig, k: usize) -> u64 {
    config.seed.wrapping_add(k as u64)
}

struct Scored {
    row: Vec<f64>,
    performance: PerformanceScore,
    brier: f64,
    c_index: f64,
}

fn score_model(
    forest: &SurvivalForest,
    test: &SurvivalDataset,
    censor: &StepFunction,
    config: &ExperimentConfig,
) -> Result<Scored> {
    let h = config.horizon();
    let at_horizon = (0..test.n_obs())
        .map(|i| forest.predict_risk(test.row(i), h))
        .collect::<survmult::Result<Vec<_>>>()?;
    let brier = brier_score(&at_horizon, test, h, censor)?;
    let c = c_index(&at_horizon, test)?;
    let performance = match config.membership.metric {
        MetricKind::BrierAtT => PerformanceScore::brier(brier, h),
        MetricKind::CIndex => PerformanceScore::c_index(c),
        MetricKind::IntegratedBrier => {
            let curves = (0..test.n_obs())
                .map(|i| Ok(forest.predict_chf(test.row(i))?.map(risk_from_hazard)))
                .collect::<survmult::Result<Vec<_>>>()?;
            PerformanceScore::new(integrated_brier(&curves, test, censor, h)?, MetricKind::IntegratedBrier, Some(h))
        }
    };
    let eval = config.eval_horizon.map_or(EvalTime::OwnTime, EvalTime::Common);
    let row = cube_row(forest, test, eval)?;
    Ok(Scored {
        row,
        performance,
        brier,
        c_index: c,
    })
}

/// Trains every grid member, scores it on the test split and assembles the
/// prediction cube. Forests are dropped as soon as they are scored.
pub fn train_grid(config: &ExperimentConfig, data: &PreparedData, config_hash: &str) -> Result<(PredictionCube, Vec<ModelRecord>)> {
    let grid = build_model_grid(&config.grid, data.train.n_features());
    anyhow::ensure!(!grid.is_empty(), "{}: no valid configuration in the grid", data.subset);
    info!("{}: training {} configurations", data.subset, grid.len());
    let censor = reverse_km_censoring(data.train.times(), data.train.events())?;
    let scored = Execution::Parallel.try_map_indexed(grid.len(), |k| {
        let forest = fit_forest(&data.train, &grid[k], model_seed(config, k))?;
        score_model(&forest, &data.test, &censor, config).with_context(|| format!("scoring model {k} ({})", grid[k].id()))
    })?;

    let dataset = data.subset.name();
    let mut rows = Vec::with_capacity(grid.len());
    let mut perfs = Vec::with_capacity(grid.len());
    let mut records = Vec::with_capacity(grid.len());
    for (k, (s, hp)) in scored.into_iter().zip(&grid).enumerate() {
        records.push(ModelRecord {
            dataset: dataset.to_string(),
            config_hash: config_hash.to_string(),
            model: k,
            id: hp.id(),
            seed: model_seed(config, k),
            metric: s.performance.metric_kind.name().to_string(),
            performance: s.performance.value,
            brier_at_t: s.brier,
            c_index: s.c_index,
        });
        rows.push(s.row);
        perfs.push(s.performance);
    }
    let ids = grid.iter().map(|h| h.id()).collect();
    let mut cube = PredictionCube::new(rows, perfs, ids)?;
    cube.annotate("config_hash", config_hash)?;
    cube.annotate("dataset", dataset)?;
    Ok((cube, records))
}

/// Writes the cube and per-model scores for one subset.
pub fn train_subset(config: &ExperimentConfig, subset: SubsetId, config_hash: &str) -> Result<PredictionCube> {
    let data = prepare(config, subset)?;
    let (cube, records) = train_grid(config, &data, config_hash)?;
    let out = &config.out_dir;
    output::write_atomic(&output::cube_path(out, subset.name()), cube.to_text().as_bytes())?;
    output::write_models(&output::models_path(out, subset.name()), &records)?;
    Ok(cube)
}

/// Sweeps `(ε, δ)` on a cube and writes `report_<subset>.csv`.
pub fn sweep_subset(config: &ExperimentConfig, dataset: &str, cube: &PredictionCube, config_hash: &str) -> Result<MultiplicityReport> {
    let report = sweep_with(cube, &config.eps_grid, &config.delta_grid, dataset, Execution::Parallel)?;
    report.check_invariants()?;
    output::write_report(&output::report_path(&config.out_dir, dataset), &report, config_hash)?;
    Ok(report)
}

/// Sweep plus Rashomon characteristics and heatmaps.
pub fn analyze_subset(
    config: &ExperimentConfig,
    dataset: &str,
    cube: &PredictionCube,
    models: &[ModelRecord],
    config_hash: &str,
) -> Result<MultiplicityReport> {
    anyhow::ensure!(
        models.len() == cube.n_models(),
        "{} model records for a cube of {} models",
        models.len(),
        cube.n_models()
    );
    let report = sweep_subset(config, dataset, cube, config_hash)?;
    let out = &config.out_dir;
    let perf = rashomon_summaries(cube, &config.eps_grid, None)?;
    let c: Vec<f64> = models.iter().map(|m| m.c_index).collect();
    let c_ranges = rashomon_summaries(cube, &config.eps_grid, Some(&c))?;
    let metric = cube.performances()[0].metric_kind.name();
    output::write_rashomon(&output::rashomon_path(out, dataset), dataset, config_hash, metric, &perf, &c_ranges)?;
    for m in HEATMAP_METRICS {
        let svg = output::heatmap_svg(&report, m, config_hash);
        output::write_atomic(&output::heatmap_path(out, dataset, m), svg.as_bytes())?;
    }
    Ok(report)
}

/// Loads the cube and model scores written by [`train_subset`].
pub fn load_trained(out: &Path, dataset: &str) -> Result<(PredictionCube, Vec<ModelRecord>)> {
    let cube = PredictionCube::load(output::cube_path(out, dataset))
        .with_context(|| format!("loading the cube for {dataset}; run `train` first"))?;
    let models = output::read_models(&output::models_path(out, dataset))?;
    Ok((cube, models))
}

/// Writes `config_resolved.toml` with the hash in a leading comment.
pub fn write_resolved_config(config: &ExperimentConfig) -> Result<String> {
    let hash = config.hash()?;
    let text = format!("# config_hash = {hash}\n{}", config.to_toml()?);
    output::write_atomic(&config.out_dir.join("config_resolved.toml"), text.as_bytes())?;
    Ok(hash)
}

fn failure_marker(out: &Path, dataset: &str) -> std::path::PathBuf {
    out.join(format!("FAILED_{dataset}.txt"))
}

/// Runs `f` on a pool sized by `config.threads`.
pub fn with_pool<T: Send>(config: &ExperimentConfig, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .context("building the worker pool")?;
    pool.install(f)
}

/// Full pipeline over every configured subset. A failing subset leaves a
/// `FAILED_<subset>.txt` marker with the error and aborts the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<MultiplicityReport>> {
    config.validate()?;
    let hash = write_resolved_config(config)?;
    with_pool(config, || {
        let mut reports = Vec::new();
        for subset in config.subsets()? {
            let dataset = subset.name();
            let marker = failure_marker(&config.out_dir, dataset);
            let result = train_subset(config, subset, &hash).and_then(|cube| {
                let (_, models) = load_trained(&config.out_dir, dataset)?;
                analyze_subset(config, dataset, &cube, &models, &hash)
            });
            match result {
                Ok(report) => {
                    if marker.exists() {
                        std::fs::remove_file(&marker).ok();
                    }
                    reports.push(report);
                }
                Err(e) => {
                    output::write_atomic(&marker, format!("{e:#}\n").as_bytes()).ok();
                    return Err(e.context(format!("{dataset} failed")));
                }
            }
        }
        Ok(reports)
    })
}
