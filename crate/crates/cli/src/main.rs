use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use log::error;
use survmult::cmapss::{survival_to_csv, synthetic_fleet};
use survmult_cli::config::{parse_grid, ExperimentConfig, GridConfig, Profile};
use survmult_cli::{output, pipeline, report};

#[derive(Parser)]
#[command(name = "survmult", version, about = "Predictive multiplicity of random survival forests on CMAPSS")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// TOML experiment config; every field is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Subset(s) to process, e.g. FD001 or FD001,FD003.
    #[arg(long, global = true, value_delimiter = ',')]
    dataset: Vec<String>,
    /// Comma-separated ε values.
    #[arg(long, global = true)]
    epsilon_grid: Option<String>,
    /// Comma-separated δ values.
    #[arg(long, global = true)]
    delta_grid: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replace the hyperparameter grid with a named profile.
    #[arg(long, global = true, value_enum)]
    profile: Option<Profile>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory holding train_FD00x.txt.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw telemetry and write the survival dataset as CSV.
    Ingest,
    /// Train the grid and write the prediction cube and model scores.
    Train,
    /// Sweep a trained cube and write reports, Rashomon summaries and heatmaps.
    Analyze,
    /// Sweep a trained cube and write only the report CSV.
    Sweep,
    /// Print report CSVs as a fixed-width table.
    Report {
        /// Report files; defaults to every report_*.csv in the output directory.
        paths: Vec<PathBuf>,
    },
    /// Train and analyze every configured subset.
    Run,
    /// Write a synthetic fleet in the CMAPSS layout into the data directory.
    Synth {
        #[arg(long, default_value_t = 100)]
        units: usize,
    },
}

fn resolve(opts: &Opts) -> Result<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = opts.profile {
        cfg.grid = GridConfig::profile(p);
    }
    if !opts.dataset.is_empty() {
        cfg.datasets = opts.dataset.clone();
    }
    if let Some(g) = &opts.epsilon_grid {
        cfg.eps_grid = parse_grid(g)?;
    }
    if let Some(g) = &opts.delta_grid {
        cfg.delta_grid = parse_grid(g)?;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(o) = &opts.out {
        cfg.out_dir = o.clone();
    }
    if let Some(d) = &opts.data_dir {
        cfg.data_dir = d.clone();
    }
    if let Some(t) = opts.threads {
        cfg.threads = t;
    }
    cfg.resolve()
}

fn print_reports(cfg: &ExperimentConfig) -> Result<()> {
    let paths: Vec<PathBuf> = cfg
        .subsets()?
        .iter()
        .map(|s| output::report_path(&cfg.out_dir, s.name()))
        .collect();
    print!("{}", report::render_reports(&paths)?);
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = resolve(&cli.opts)?;
    match cli.command {
        Command::Ingest => {
            for subset in cfg.subsets()? {
                let data = pipeline::prepare(&cfg, subset)?;
                let path = cfg.out_dir.join(format!("survival_{}.csv", subset.name()));
                output::write_atomic(&path, survival_to_csv(&data.full).as_bytes())?;
                let censored = data.full.events().iter().filter(|e| !**e).count();
                println!(
                    "{subset}: {} engines, {} skipped, {} features, {} censored, {} train / {} test; removed: {}",
                    data.units,
                    data.skipped_units.len(),
                    data.full.n_features(),
                    censored,
                    data.train.n_obs(),
                    data.test.n_obs(),
                    data.removed_features.join(" ")
                );
            }
        }
        Command::Train => {
            let hash = pipeline::write_resolved_config(&cfg)?;
            pipeline::with_pool(&cfg, || {
                for subset in cfg.subsets()? {
                    let cube = pipeline::train_subset(&cfg, subset, &hash)?;
                    println!(
                        "{subset}: {} models x {} test engines, reference {}",
                        cube.n_models(),
                        cube.n_obs(),
                        cube.model_ids()[cube.reference_index()]
                    );
                }
                Ok(())
            })?;
        }
        Command::Analyze | Command::Sweep => {
            let hash = cfg.hash()?;
            let full = matches!(cli.command, Command::Analyze);
            pipeline::with_pool(&cfg, || {
                for subset in cfg.subsets()? {
                    let (cube, models) = pipeline::load_trained(&cfg.out_dir, subset.name())?;
                    if full {
                        pipeline::analyze_subset(&cfg, subset.name(), &cube, &models, &hash)?;
                    } else {
                        pipeline::sweep_subset(&cfg, subset.name(), &cube, &hash)?;
                    }
                }
                Ok(())
            })?;
            print_reports(&cfg)?;
        }
        Command::Report { paths } => {
            let paths = if paths.is_empty() {
                report::find_reports(&cfg.out_dir)?
            } else {
                paths
            };
            print!("{}", report::render_reports(&paths)?);
        }
        Command::Synth { units } => {
            for subset in cfg.subsets()? {
                let path = cfg.data_path(subset);
                let text = synthetic_fleet(subset, units, cfg.seed).to_text();
                output::write_atomic(&path, text.as_bytes())?;
                println!("{subset}: {units} synthetic engines written to {}", path.display());
            }
        }
        Command::Run => {
            pipeline::run_experiment(&cfg)?;
            print_reports(&cfg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
