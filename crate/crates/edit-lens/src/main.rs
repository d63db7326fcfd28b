//! `edit-lens` — post-edit based MT error analysis from one manifest.
//!
//! Exit codes: 0 success, 2 input error (files, manifest, flags),
//! 3 computation precondition failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use edit_lens::config::RunConfig;
use edit_lens::error::{Error, Result};
use edit_lens::exec;
use edit_lens::manifest::{load_manifest, LoadedRun};
use edit_lens::report::{
    cmd_breakdown, cmd_errors, cmd_report, cmd_score, cmd_shifts, cmd_sigtest, to_json, MetricKind,
    SigTestKind,
};

#[derive(Parser)]
#[command(
    name = "edit-lens",
    version,
    about = "Post-edit based machine translation error analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Evaluation manifest (TOML)
    manifest: PathBuf,

    /// TOML file overriding any configuration default
    #[arg(long)]
    config: Option<PathBuf>,

    /// Directory for the JSON/TSV/CSV reports; prints TSV to stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for per-segment fan-out (0 = all cores)
    #[arg(long)]
    threads: Option<usize>,

    /// RNG seed for resampling tests (also via EDIT_LENS_SEED)
    #[arg(long)]
    seed: Option<u64>,

    /// Lowercase tokens before comparison
    #[arg(long)]
    lowercase: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus-level scores per system
    Score {
        #[command(flatten)]
        common: CommonArgs,
        /// hter | mter | bleu | krs
        #[arg(long, default_value = "hter")]
        metric: String,
    },
    /// Morphology / lexical / word-order error profile per system
    Errors {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Shifted-block classification by POS and dependency label
    Shifts {
        #[command(flatten)]
        common: CommonArgs,
        /// System whose reduction is reported
        #[arg(long)]
        focal: String,
        /// System the reduction is measured against
        #[arg(long)]
        baseline: String,
        /// Keep word classes shifted at least this often in some system
        #[arg(long, default_value_t = 10)]
        threshold: u64,
    },
    /// Length-binned scores and per-document scores with TTR correlation
    Breakdown {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        focal: String,
        /// Comma-separated upper bin edges, e.g. 15,25,35
        #[arg(long)]
        bins: Option<String>,
    },
    /// Significance test between two systems
    Sigtest {
        #[command(flatten)]
        common: CommonArgs,
        /// bootstrap | ztest | ar
        #[arg(long)]
        test: String,
        /// First system (the test is one-sided in its favor)
        #[arg(long)]
        a: String,
        /// Second system
        #[arg(long)]
        b: String,
        /// Metric for bootstrap: hter | mter
        #[arg(long, default_value = "hter")]
        metric: String,
        /// Resampling iterations
        #[arg(long)]
        iterations: Option<u64>,
        /// Significance level echoed into the result
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
    },
    /// Full pipeline report (scores, profiles, shifts, breakdowns, tests)
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Focal system (default: lowest HTER)
        #[arg(long)]
        focal: Option<String>,
        /// Baseline system (default: best of the rest)
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

/// Thread count is an execution detail: it never changes results and is
/// deliberately kept out of the configuration echoed into reports.
fn apply_common(common: &CommonArgs) -> Result<(LoadedRun, usize)> {
    let mut run = load_manifest(&common.manifest)?;
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        run.config = run.config.overlay_toml(&text)?;
    }
    if let Ok(value) = std::env::var("EDIT_LENS_SEED") {
        run.config.seed = value.parse().map_err(|_| {
            Error::Manifest(format!("EDIT_LENS_SEED must be an integer, got {value:?}"))
        })?;
    }
    if let Some(seed) = common.seed {
        run.config.seed = seed;
    }
    if common.lowercase {
        run.config.ter.lowercase = true;
    }
    run.config.validate()?;
    Ok((run, common.threads.unwrap_or(0)))
}

fn parse_bins(spec: &str) -> Result<Vec<usize>> {
    let edges: std::result::Result<Vec<usize>, _> =
        spec.split(',').map(|p| p.trim().parse::<usize>()).collect();
    let edges = edges.map_err(|_| Error::Manifest(format!("invalid --bins value {spec:?}")))?;
    let cfg = RunConfig {
        bins: edges.clone(),
        ..RunConfig::default()
    };
    cfg.validate()?;
    Ok(edges)
}

/// Files to write: (name, content).
type Emission = Vec<(String, String)>;

fn dispatch(cli: Cli) -> Result<()> {
    let (common, emission): (&CommonArgs, Emission) = match &cli.command {
        Command::Score { common, metric } => {
            let (run, threads) = apply_common(common)?;
            let metric: MetricKind = metric.parse()?;
            let report = exec::with_threads(threads, || cmd_score(&run, metric))?;
            (
                common,
                vec![
                    ("score.json".into(), to_json(&report)),
                    ("score.tsv".into(), report.to_tsv()),
                ],
            )
        }
        Command::Errors { common } => {
            let (run, threads) = apply_common(common)?;
            let report = exec::with_threads(threads, || cmd_errors(&run))?;
            (
                common,
                vec![
                    ("errors.json".into(), to_json(&report)),
                    ("errors.tsv".into(), report.to_tsv()),
                ],
            )
        }
        Command::Shifts {
            common,
            focal,
            baseline,
            threshold,
        } => {
            let (run, threads) = apply_common(common)?;
            let report =
                exec::with_threads(threads, || cmd_shifts(&run, focal, baseline, *threshold))?;
            (
                common,
                vec![
                    ("shifts.json".into(), to_json(&report)),
                    ("shifts.tsv".into(), report.to_tsv()),
                ],
            )
        }
        Command::Breakdown {
            common,
            focal,
            bins,
        } => {
            let (mut run, threads) = apply_common(common)?;
            if let Some(spec) = bins {
                run.config.bins = parse_bins(spec)?;
            }
            let report = exec::with_threads(threads, || cmd_breakdown(&run, focal))?;
            if let Some(w) = &report.warning {
                eprintln!("warning: {w}");
            }
            (
                common,
                vec![
                    ("breakdown.json".into(), to_json(&report)),
                    ("breakdown.tsv".into(), report.to_tsv()),
                    ("breakdown_bins.csv".into(), report.bins_csv()),
                    ("breakdown_docs.csv".into(), report.docs_csv()),
                ],
            )
        }
        Command::Sigtest {
            common,
            test,
            a,
            b,
            metric,
            iterations,
            alpha,
        } => {
            let (mut run, threads) = apply_common(common)?;
            if let Some(n) = iterations {
                run.config.bootstrap_iterations = *n;
                run.config.randomization_iterations = *n;
            }
            let test: SigTestKind = test.parse()?;
            let metric: MetricKind = metric.parse()?;
            let report =
                exec::with_threads(threads, || cmd_sigtest(&run, test, a, b, metric, *alpha))?;
            (
                common,
                vec![
                    ("sigtest.json".into(), to_json(&report)),
                    ("sigtest.tsv".into(), report.to_tsv()),
                ],
            )
        }
        Command::Report {
            common,
            focal,
            baseline,
            alpha,
        } => {
            let (run, threads) = apply_common(common)?;
            let report = exec::with_threads(threads, || {
                cmd_report(&run, focal.as_deref(), baseline.as_deref(), *alpha)
            })?;
            (
                common,
                vec![
                    ("report.json".into(), to_json(&report)),
                    ("report.tsv".into(), report.to_tsv()),
                ],
            )
        }
    };
    emit(common, emission)
}

fn emit(common: &CommonArgs, files: Emission) -> Result<()> {
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            for (name, content) in &files {
                let path = dir.join(name);
                std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
            }
            Ok(())
        }
        None => {
            // TSV preview on stdout; JSON and CSVs only materialize with --out
            for (name, content) in &files {
                if name.ends_with(".tsv") {
                    print!("{content}");
                }
            }
            Ok(())
        }
    }
}
