//! `rga`: batch front-end for report-guided lesion annotation.
//!
//! Exit codes: 0 success, 1 validation or I/O error, 2 completed with
//! per-case failures (listed in the results file).

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::extract::Method;
use commands::stats::BootstrapMetric;
use config::{resolve_config, write_run_manifest, FlagOverrides};
use manifest::read_manifest;

#[derive(Parser)]
#[command(name = "rga", version, about = "Report-guided automatic lesion annotation")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Base RNG seed (flags > config file > default 0)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker pool size; 0 means one per CPU
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// JSON config file with default overrides
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Voxel connectivity: 6, 18 or 26
    #[arg(long, global = true)]
    connectivity: Option<u8>,
    /// Region growth floor as a fraction of the peak confidence
    #[arg(long, global = true)]
    rel_threshold: Option<f64>,
    /// Maximum number of candidates per case
    #[arg(long, global = true)]
    max_lesions: Option<usize>,
    /// Discard candidates with this many voxels or fewer
    #[arg(long, global = true)]
    min_voxels: Option<usize>,
    /// Absolute confidence floor for new peaks
    #[arg(long, global = true)]
    min_peak: Option<f64>,
    /// IoU threshold for counting a candidate as a hit
    #[arg(long, global = true)]
    hit_iou: Option<f64>,
    /// Iteration count for resampling subcommands
    #[arg(long, global = true)]
    iterations: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract PI-RADS / T2W / DWI / DCE scores from the reports
    ParseReports {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract lesion candidates from the confidence volumes
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "dynamic")]
        method: Method,
        /// Global threshold for the static method
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Produce automatic voxel-level annotations (full pipeline)
    Annotate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lesion-level FROC evaluation, with and without report masking
    EvalLocalisation {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Case-level ROC/AUROC evaluation plus a DSC report
    EvalDetection {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// One-sided permutation test between two groups of run metrics
    Permtest {
        #[arg(long)]
        group_a: PathBuf,
        #[arg(long)]
        group_b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bootstrap 95% confidence interval over per-case scores
    Bootstrap {
        /// CSV of score,label lines (label 0 or 1)
        #[arg(long)]
        values: PathBuf,
        #[arg(long, value_enum, default_value = "auroc")]
        metric: BootstrapMetric,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Annotation-efficiency ratio from (budget, performance) points
    Efficiency {
        /// CSV of n_manual,performance lines
        #[arg(long)]
        points: PathBuf,
        /// Supervised performance to match
        #[arg(long)]
        target: f64,
        /// Manual annotations used by the supervised baseline
        #[arg(long)]
        n_supervised: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic scenario: volumes, labels, reports, manifest
    Synth {
        /// Scenario spec (JSON)
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let flags = FlagOverrides {
        rel_threshold: cli.common.rel_threshold,
        max_lesions: cli.common.max_lesions,
        min_voxels: cli.common.min_voxels,
        min_peak: cli.common.min_peak,
        connectivity: cli.common.connectivity,
        hit_iou: cli.common.hit_iou,
        seed: cli.common.seed,
        iterations: cli.common.iterations,
    };
    let cfg = resolve_config(cli.common.config.as_deref(), &flags)?;
    let jobs = cli.common.jobs;

    match cli.command {
        Command::ParseReports { manifest, out } => {
            let m = read_manifest(&manifest)?;
            write_run_manifest(&out, "parse-reports", &cfg)?;
            commands::parse_reports::run(&m, &out, jobs)
        }
        Command::Extract { manifest, out, method, threshold } => {
            let m = read_manifest(&manifest)?;
            write_run_manifest(&out, "extract", &cfg)?;
            commands::extract::run(&m, &out, jobs, &cfg.extraction, method, threshold)
        }
        Command::Annotate { manifest, out } => {
            let m = read_manifest(&manifest)?;
            write_run_manifest(&out, "annotate", &cfg)?;
            commands::annotate::run(&m, &out, jobs, &cfg.extraction)
        }
        Command::EvalLocalisation { manifest, out } => {
            let m = read_manifest(&manifest)?;
            write_run_manifest(&out, "eval-localisation", &cfg)?;
            commands::evaluate::run_localisation(&m, &out, jobs, &cfg)
        }
        Command::EvalDetection { manifest, out } => {
            let m = read_manifest(&manifest)?;
            write_run_manifest(&out, "eval-detection", &cfg)?;
            commands::evaluate::run_detection(&m, &out, jobs, &cfg)
        }
        Command::Permtest { group_a, group_b, out } => {
            commands::stats::run_permtest(&group_a, &group_b, cfg.iterations, cfg.seed, out.as_deref())?;
            Ok(false)
        }
        Command::Bootstrap { values, metric, out } => {
            commands::stats::run_bootstrap(&values, metric, cfg.iterations, cfg.seed, out.as_deref())?;
            Ok(false)
        }
        Command::Efficiency { points, target, n_supervised, out } => {
            commands::efficiency::run(&points, target, n_supervised, out.as_deref())?;
            Ok(false)
        }
        Command::Synth { scenario, out } => {
            write_run_manifest(&out, "synth", &cfg)?;
            commands::synth::run(&scenario, &out, jobs, cli.common.seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("completed with per-case failures; see the results file");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
