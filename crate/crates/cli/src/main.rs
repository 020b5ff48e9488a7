//! Command-line front end for the stylodelta library.
//!
//! The pipeline is split into composable stages that hand artifacts to
//! each other through files: `ingest` turns a manifest of text files into
//! a frequency matrix, `distmat` turns that into a distance matrix,
//! `cluster` and `attribute` score it, `contributions` explains a single
//! author pair, and `sweep` and `robustness` probe how stable the results
//! are. Every stage writes `run_config.json` next to its outputs with the
//! fully resolved parameters, so any artifact can be reproduced from the
//! directory it sits in.

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_ratio, resolve, FileConfig, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "stylodelta",
    version,
    about = "Delta-family stylometry: distances, token contributions, clustering, attribution, and robustness checks"
)]
struct Cli {
    /// JSON file supplying fallback parameter values; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Directory artifacts are written into (default: current directory).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every stage that standardizes frequencies.
#[derive(Args, Debug, Clone, Default)]
struct StandardizeFlags {
    /// Standardization mode: centred or uncentred.
    #[arg(long, value_name = "MODE")]
    zscore: Option<String>,

    /// Degrees-of-freedom correction for the deviation estimate: 0 or 1.
    #[arg(long, value_name = "D")]
    ddof: Option<u8>,

    /// Smoothing constant added before probability normalization.
    #[arg(long, value_name = "EPS")]
    epsilon: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct PipelineFlags {
    /// Restrict the analysis to the N most frequent word types.
    #[arg(long, value_name = "N")]
    mfw: Option<usize>,

    #[command(flatten)]
    standardize: StandardizeFlags,
}

#[derive(Args, Debug, Clone, Default)]
struct MetricFlags {
    /// Distance measure: burrows, quadratic, cosine, jsd, or rtd.
    #[arg(long, value_name = "KIND")]
    metric: Option<String>,

    /// Rank-turbulence exponent; fractions such as 1/3 are accepted.
    #[arg(long, value_name = "ALPHA")]
    alpha: Option<String>,

    /// Mixture weight of the first distribution in the divergence.
    #[arg(long, value_name = "PI")]
    pi1: Option<f64>,

    /// Rank-turbulence normalizer convention: minus-half or plus-half.
    #[arg(long, value_name = "MODE")]
    rtd_normalizer: Option<String>,

    /// Report the raw sum instead of dividing by the word-list size.
    #[arg(long)]
    unnormalized: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize the manifest's documents into a frequency matrix.
    Ingest {
        /// CSV manifest with id, author, title, year, and path columns.
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,

        /// Keep at most this many token types corpus-wide.
        #[arg(long, value_name = "N")]
        vocab_cap: Option<usize>,

        /// Smallest token n-gram length.
        #[arg(long, value_name = "N")]
        ngram_min: Option<usize>,

        /// Largest token n-gram length.
        #[arg(long, value_name = "N")]
        ngram_max: Option<usize>,

        /// Alphabets that count as word characters: both, latin, or cyrillic.
        #[arg(long, default_value = "both", value_name = "SET")]
        scripts: String,
    },

    /// Compute the pairwise distance matrix for one metric.
    Distmat {
        /// Frequency matrix CSV (default: <out-dir>/frequency_matrix.csv).
        #[arg(long, value_name = "FILE")]
        freq: Option<PathBuf>,

        #[command(flatten)]
        pipeline: PipelineFlags,

        #[command(flatten)]
        metric: MetricFlags,
    },

    /// Group documents around medoids; scored against authors when known.
    Cluster {
        /// Distance matrix CSV (default: <out-dir>/distance_matrix.csv).
        #[arg(long, value_name = "FILE")]
        dist: Option<PathBuf>,

        /// Sidecar JSON for the matrix (default: the CSV path with .json).
        #[arg(long, value_name = "FILE")]
        sidecar: Option<PathBuf>,

        /// Manifest supplying true authors for scoring.
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,

        /// Number of clusters (default: the number of distinct authors).
        #[arg(long, value_name = "K")]
        k: Option<usize>,
    },

    /// Attribute each document to its nearest neighbor's author.
    Attribute {
        /// Distance matrix CSV (default: <out-dir>/distance_matrix.csv).
        #[arg(long, value_name = "FILE")]
        dist: Option<PathBuf>,

        /// Sidecar JSON for the matrix (default: the CSV path with .json).
        #[arg(long, value_name = "FILE")]
        sidecar: Option<PathBuf>,

        /// Manifest supplying true authors.
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,

        /// Leave single-document authors out of the accuracy average.
        #[arg(long)]
        exclude_singletons: bool,
    },

    /// Rank the tokens that drive the distance between two authors.
    Contributions {
        /// Frequency matrix CSV (default: <out-dir>/frequency_matrix.csv).
        #[arg(long, value_name = "FILE")]
        freq: Option<PathBuf>,

        /// Manifest mapping documents to authors.
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,

        /// The two author names, comma separated.
        #[arg(long, value_name = "A,B")]
        authors: String,

        /// How many top tokens to write.
        #[arg(long, default_value_t = 30, value_name = "N")]
        top: usize,

        /// Refit standardization on the pair's documents only.
        #[arg(long)]
        restandardize: bool,

        #[command(flatten)]
        pipeline: PipelineFlags,

        #[command(flatten)]
        metric: MetricFlags,
    },

    /// Score clustering or attribution over a word-list and metric grid.
    Sweep {
        /// Frequency matrix CSV (default: <out-dir>/frequency_matrix.csv).
        #[arg(long, value_name = "FILE")]
        freq: Option<PathBuf>,

        /// Manifest mapping documents to authors.
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,

        /// What to score in each cell: cluster or attribute.
        #[arg(long, value_name = "TASK")]
        task: String,

        /// Comma-separated word-list sizes.
        #[arg(long, value_name = "LIST")]
        mfw_grid: Option<String>,

        /// Comma-separated metrics to include.
        #[arg(long, value_name = "LIST")]
        metrics: Option<String>,

        /// Comma-separated rank-turbulence exponents; fractions allowed.
        #[arg(long, value_name = "LIST")]
        alpha_grid: Option<String>,

        /// Leave single-document authors out of attribution scores.
        #[arg(long)]
        exclude_singletons: bool,

        #[command(flatten)]
        standardize: StandardizeFlags,

        /// Mixture weight of the first distribution in the divergence.
        #[arg(long, value_name = "PI")]
        pi1: Option<f64>,

        /// Rank-turbulence normalizer convention: minus-half or plus-half.
        #[arg(long, value_name = "MODE")]
        rtd_normalizer: Option<String>,

        /// Score the raw sum variant instead of the length-normalized one.
        #[arg(long)]
        unnormalized: bool,
    },

    /// Stability checks for the top contributing tokens.
    Robustness {
        #[command(subcommand)]
        check: RobustnessCommand,
    },
}

#[derive(Subcommand)]
enum RobustnessCommand {
    /// Top-token overlap when the word-list size is perturbed.
    Mfw {
        /// Frequency matrix CSV (default: <out-dir>/frequency_matrix.csv).
        #[arg(long, value_name = "FILE")]
        freq: Option<PathBuf>,

        /// Manifest mapping documents to authors.
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,

        /// The two author names, comma separated.
        #[arg(long, value_name = "A,B")]
        authors: String,

        /// Word-list size the comparison is anchored at.
        #[arg(long, default_value_t = 3000, value_name = "N")]
        base_mfw: usize,

        /// Comma-separated perturbed word-list sizes.
        #[arg(long, default_value = "2800,3200", value_name = "LIST")]
        perturbed: String,

        /// How many top tokens to compare.
        #[arg(long, default_value_t = 30, value_name = "N")]
        top: usize,

        /// Refit standardization on the pair's documents only.
        #[arg(long)]
        restandardize: bool,

        #[command(flatten)]
        standardize: StandardizeFlags,

        #[command(flatten)]
        metric: MetricFlags,
    },

    /// Top-token overlap across bootstrap resamples of each author.
    Bootstrap {
        /// Frequency matrix CSV (default: <out-dir>/frequency_matrix.csv).
        #[arg(long, value_name = "FILE")]
        freq: Option<PathBuf>,

        /// Manifest mapping documents to authors.
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,

        /// The two author names, comma separated.
        #[arg(long, value_name = "A,B")]
        authors: String,

        /// Number of bootstrap resamples to draw.
        #[arg(long, value_name = "N")]
        iterations: usize,

        /// Seed for the resampling generator.
        #[arg(long, value_name = "SEED")]
        seed: Option<u64>,

        /// How many top tokens to compare.
        #[arg(long, default_value_t = 30, value_name = "N")]
        top: usize,

        /// Refit standardization on the pair's documents only.
        #[arg(long)]
        restandardize: bool,

        #[command(flatten)]
        pipeline: PipelineFlags,

        #[command(flatten)]
        metric: MetricFlags,
    },

    /// Distance left after zeroing the top contributing tokens.
    Removal {
        /// Frequency matrix CSV (default: <out-dir>/frequency_matrix.csv).
        #[arg(long, value_name = "FILE")]
        freq: Option<PathBuf>,

        /// Manifest mapping documents to authors.
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,

        /// The two author names, comma separated.
        #[arg(long, value_name = "A,B")]
        authors: String,

        /// Comma-separated counts of top tokens to remove, increasing.
        #[arg(long, default_value = "10,50,100", value_name = "LIST")]
        k_list: String,

        /// Refit standardization on the pair's documents only.
        #[arg(long)]
        restandardize: bool,

        #[command(flatten)]
        pipeline: PipelineFlags,

        #[command(flatten)]
        metric: MetricFlags,
    },
}

/// The flag combination shared by the analysis stages, gathered so each
/// dispatch arm stays a few lines long.
struct AnalysisArgs<'a> {
    manifest: Option<&'a PathBuf>,
    mfw: Option<usize>,
    standardize: &'a StandardizeFlags,
    metric: &'a MetricFlags,
}

fn analysis_overrides<'a>(args: AnalysisArgs<'a>, cli: &'a Cli) -> Result<Overrides<'a>> {
    Ok(Overrides {
        manifest: args.manifest.map(PathBuf::as_path),
        mfw: args.mfw,
        zscore: args.standardize.zscore.as_deref(),
        ddof: args.standardize.ddof,
        epsilon: args.standardize.epsilon,
        metric: args.metric.metric.as_deref(),
        alpha: args.metric.alpha.as_deref().map(parse_ratio).transpose()?,
        pi1: args.metric.pi1,
        rtd_normalizer: args.metric.rtd_normalizer.as_deref(),
        unnormalized: args.metric.unnormalized,
        out_dir: cli.out_dir.as_deref(),
        ..Overrides::default()
    })
}

/// Merge flags with the config file and make sure the output directory
/// exists before any handler runs.
fn finalize(overrides: &Overrides, file: &FileConfig) -> Result<RunConfig> {
    let config = resolve(overrides, file)?;
    fs::create_dir_all(&config.out_dir)
        .with_context(|| format!("creating output directory {}", config.out_dir.display()))?;
    Ok(config)
}

fn dispatch(cli: &Cli, file: &FileConfig) -> Result<()> {
    match &cli.command {
        Command::Ingest {
            manifest,
            vocab_cap,
            ngram_min,
            ngram_max,
            scripts,
        } => {
            let overrides = Overrides {
                manifest: manifest.as_deref(),
                vocab_cap: *vocab_cap,
                ngram_min: *ngram_min,
                ngram_max: *ngram_max,
                out_dir: cli.out_dir.as_deref(),
                ..Overrides::default()
            };
            let config = finalize(&overrides, file)?;
            commands::ingest(&config, scripts)
        }

        Command::Distmat {
            freq,
            pipeline,
            metric,
        } => {
            let overrides = analysis_overrides(
                AnalysisArgs {
                    manifest: None,
                    mfw: pipeline.mfw,
                    standardize: &pipeline.standardize,
                    metric,
                },
                cli,
            )?;
            let config = finalize(&overrides, file)?;
            commands::distmat(&config, freq.as_deref())
        }

        Command::Cluster {
            dist,
            sidecar,
            manifest,
            k,
        } => {
            let overrides = Overrides {
                manifest: manifest.as_deref(),
                out_dir: cli.out_dir.as_deref(),
                ..Overrides::default()
            };
            let config = finalize(&overrides, file)?;
            commands::cluster(&config, dist.as_deref(), sidecar.as_deref(), *k)
        }

        Command::Attribute {
            dist,
            sidecar,
            manifest,
            exclude_singletons,
        } => {
            let overrides = Overrides {
                manifest: manifest.as_deref(),
                out_dir: cli.out_dir.as_deref(),
                ..Overrides::default()
            };
            let config = finalize(&overrides, file)?;
            commands::attribute(&config, dist.as_deref(), sidecar.as_deref(), *exclude_singletons)
        }

        Command::Contributions {
            freq,
            manifest,
            authors,
            top,
            restandardize,
            pipeline,
            metric,
        } => {
            let overrides = analysis_overrides(
                AnalysisArgs {
                    manifest: manifest.as_ref(),
                    mfw: pipeline.mfw,
                    standardize: &pipeline.standardize,
                    metric,
                },
                cli,
            )?;
            let config = finalize(&overrides, file)?;
            commands::contributions(&config, freq.as_deref(), authors, *top, *restandardize)
        }

        Command::Sweep {
            freq,
            manifest,
            task,
            mfw_grid,
            metrics,
            alpha_grid,
            exclude_singletons,
            standardize,
            pi1,
            rtd_normalizer,
            unnormalized,
        } => {
            let overrides = Overrides {
                manifest: manifest.as_deref(),
                zscore: standardize.zscore.as_deref(),
                ddof: standardize.ddof,
                epsilon: standardize.epsilon,
                pi1: *pi1,
                rtd_normalizer: rtd_normalizer.as_deref(),
                unnormalized: *unnormalized,
                out_dir: cli.out_dir.as_deref(),
                ..Overrides::default()
            };
            let config = finalize(&overrides, file)?;
            commands::sweep_cmd(
                &config,
                freq.as_deref(),
                task,
                mfw_grid.as_deref(),
                metrics.as_deref(),
                alpha_grid.as_deref(),
                *exclude_singletons,
            )
        }

        Command::Robustness { check } => match check {
            RobustnessCommand::Mfw {
                freq,
                manifest,
                authors,
                base_mfw,
                perturbed,
                top,
                restandardize,
                standardize,
                metric,
            } => {
                let overrides = analysis_overrides(
                    AnalysisArgs {
                        manifest: manifest.as_ref(),
                        mfw: Some(*base_mfw),
                        standardize,
                        metric,
                    },
                    cli,
                )?;
                let config = finalize(&overrides, file)?;
                commands::robustness_mfw(
                    &config,
                    freq.as_deref(),
                    authors,
                    perturbed,
                    *top,
                    *restandardize,
                )
            }

            RobustnessCommand::Bootstrap {
                freq,
                manifest,
                authors,
                iterations,
                seed,
                top,
                restandardize,
                pipeline,
                metric,
            } => {
                let mut overrides = analysis_overrides(
                    AnalysisArgs {
                        manifest: manifest.as_ref(),
                        mfw: pipeline.mfw,
                        standardize: &pipeline.standardize,
                        metric,
                    },
                    cli,
                )?;
                overrides.seed = *seed;
                let config = finalize(&overrides, file)?;
                commands::robustness_bootstrap(
                    &config,
                    freq.as_deref(),
                    authors,
                    *top,
                    *iterations,
                    *restandardize,
                )
            }

            RobustnessCommand::Removal {
                freq,
                manifest,
                authors,
                k_list,
                restandardize,
                pipeline,
                metric,
            } => {
                let overrides = analysis_overrides(
                    AnalysisArgs {
                        manifest: manifest.as_ref(),
                        mfw: pipeline.mfw,
                        standardize: &pipeline.standardize,
                        metric,
                    },
                    cli,
                )?;
                let config = finalize(&overrides, file)?;
                commands::robustness_removal(
                    &config,
                    freq.as_deref(),
                    authors,
                    k_list,
                    *restandardize,
                )
            }
        },
    }
}

fn run() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let file = FileConfig::load(cli.config.as_deref())?;
    if let Some(threads) = cli.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker thread pool")?;
    }
    dispatch(&cli, &file)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
