use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use lincomb_harness::dataset::{self, DatasetSummary};
use lincomb_harness::generate::{self, Generator};
use lincomb_harness::{cross_validate, report, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "lincomb",
    version,
    about = "Cross-validated benchmarks of bagged linear ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Overrides the configured output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recompute rank and summary files from a results file.
    Evaluate {
        #[arg(long)]
        results: PathBuf,
        /// Defaults to the directory holding the results file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print average ranks and the Friedman test for one criterion.
    Rank {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value = "micro_f1_loss")]
        criterion: String,
    },
    /// Write a synthetic dataset as CSV.
    Generate {
        /// banana, spirals or gaussians.
        #[arg(long)]
        kind: Generator,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dimensions (gaussians only).
        #[arg(long, default_value_t = 2)]
        dims: usize,
        /// Classes (gaussians only).
        #[arg(long, default_value_t = 2)]
        classes: usize,
        /// Noise scale (banana 0.3, spirals 0.5) or center spread
        /// (gaussians 3.0).
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print size, dimension, class count and imbalance ratio of CSV files.
    Describe { files: Vec<PathBuf> },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            jobs,
            output,
        } => {
            let mut cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = output {
                cfg.output = o;
            }
            let mut datasets = Vec::with_capacity(cfg.datasets.len());
            for path in &cfg.datasets {
                let data = dataset::load_csv(path)?;
                let id = dataset::dataset_id(path);
                eprintln!("{}", DatasetSummary::of(&id, &data));
                datasets.push((id, data));
            }
            let outcome = cross_validate(&cfg, &datasets, jobs)?;
            report::emit_report(&outcome.records, &outcome.timings, &cfg.output)?;
            eprintln!(
                "{} records written to {}",
                outcome.records.len(),
                cfg.output.display()
            );
        }
        Command::Evaluate { results, output } => {
            let records = report::read_results(&results)?;
            let dir = output.unwrap_or_else(|| {
                results
                    .parent()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            report::emit_summaries(&records, &dir)?;
            print!("{}", report::ranks_csv(&records)?);
        }
        Command::Rank { results, criterion } => {
            let records = report::read_results(&results)?;
            report::check_criterion(&criterion)?;
            for learner in report::learners(&records) {
                print!(
                    "{}",
                    report::render_rank_table(&report::rank_table(&records, &learner, &criterion)?)
                );
            }
        }
        Command::Generate {
            kind,
            n,
            seed,
            dims,
            classes,
            scale,
            output,
        } => {
            let data = match kind {
                Generator::Banana => generate::banana(n, scale.unwrap_or(0.3), seed)?,
                Generator::Spirals => generate::spirals(n, scale.unwrap_or(0.5), seed)?,
                Generator::Gaussians => {
                    generate::gaussians(n, dims, classes, scale.unwrap_or(3.0), seed)?
                }
            };
            dataset::write_csv(&data, &output)?;
            eprintln!(
                "{}",
                DatasetSummary::of(&dataset::dataset_id(&output), &data)
            );
        }
        Command::Describe { files } => {
            for path in files {
                let data = dataset::load_csv(&path)?;
                println!("{}", DatasetSummary::of(&dataset::dataset_id(&path), &data));
            }
        }
    }
    Ok(())
}
