use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use wavaug::harness::{
    aggregate, emit_report, parse_config, run_experiment_with, run_selftest, Aggregate,
    ExperimentSpec, Ledger, ReportFormat, ResultRecord,
};

/// Overrides the output directory of `run`, `coldstart` and `report`.
const OUT_DIR_ENV: &str = "WAVAUG_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "wavaug",
    version,
    about = "Wavelet augmentation experiments for DLinear forecasting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (horizon, method, seed) of a config, resuming from its ledger.
    Run {
        config: PathBuf,
        /// Suppress per-run progress lines.
        #[arg(long)]
        quiet: bool,
    },
    /// Aggregate a ledger and write report files.
    Report {
        ledger: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        /// Output directory; defaults to the ledger's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cold-start sweep: retrain on the most recent fraction of the training split.
    Coldstart {
        config: PathBuf,
        /// Comma-separated keep fractions in (0, 1]; full data is always added.
        #[arg(long, value_delimiter = ',', required = true)]
        fractions: Vec<f64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let mut spec = parse_config(path)?;
    spec.apply_env_overrides();
    Ok(spec)
}

fn progress(quiet: bool) -> impl FnMut(&ResultRecord) {
    move |r| {
        if !quiet {
            eprintln!(
                "{} frac={} h={} {} seed={} mse={:.4} mae={:.4} epoch={} ({:.1}s)",
                r.dataset,
                r.fraction,
                r.horizon,
                r.method,
                r.seed,
                r.mse,
                r.mae,
                r.best_epoch,
                r.wall_time
            );
        }
    }
}

fn print_table(aggs: &[Aggregate]) {
    println!(
        "{:<12} {:>8} {:>5} {:<10} {:>17} {:>17} {:>4}",
        "dataset", "fraction", "h", "method", "mse", "mae", "rank"
    );
    for a in aggs {
        let mark = match a.rank {
            1 => "*",
            2 => "+",
            _ => "",
        };
        println!(
            "{:<12} {:>8} {:>5} {:<10} {:>8.4}±{:<8.4} {:>8.4}±{:<8.4} {:>3}{}",
            a.dataset,
            a.fraction,
            a.horizon,
            a.method,
            a.mse_mean,
            a.mse_std,
            a.mae_mean,
            a.mae_std,
            a.rank,
            mark
        );
    }
}

fn run_and_report(spec: &ExperimentSpec, quiet: bool) -> Result<()> {
    let records = run_experiment_with(spec, progress(quiet))
        .with_context(|| format!("running experiment `{}`", spec.name))?;
    let aggs = aggregate(&records)?;
    let files = emit_report(&aggs, &spec.out_dir, ReportFormat::Csv)?;
    print_table(&aggs);
    println!("ledger: {}", spec.ledger_path().display());
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, quiet } => {
            let spec = load_spec(&config)?;
            run_and_report(&spec, quiet)?;
        }
        Command::Coldstart {
            config,
            fractions,
            quiet,
        } => {
            let mut spec = load_spec(&config)?;
            for &f in &fractions {
                if !(f > 0.0 && f <= 1.0) {
                    bail!("fraction {f} is outside (0, 1]");
                }
            }
            spec.downsample = Some(fractions);
            run_and_report(&spec, quiet)?;
        }
        Command::Report {
            ledger,
            format,
            out,
        } => {
            let format: ReportFormat = format.parse()?;
            let records = Ledger::read(&ledger)?;
            if records.is_empty() {
                bail!("ledger {} holds no records", ledger.display());
            }
            let aggs = aggregate(&records)?;
            let out_dir = match (std::env::var_os(OUT_DIR_ENV), out) {
                (_, Some(dir)) => dir,
                (Some(dir), None) => PathBuf::from(dir),
                (None, None) => ledger.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            let files = emit_report(&aggs, &out_dir, format)?;
            print_table(&aggs);
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Selftest => {
            let mut all = true;
            for c in run_selftest() {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                all &= c.passed;
            }
            return Ok(all);
        }
    }
    Ok(true)
}

/// Context layers added here, then the library error, whose message already
/// carries its own causes.
fn describe(err: &anyhow::Error) -> String {
    let mut parts = Vec::new();
    for cause in err.chain() {
        parts.push(cause.to_string());
        if cause.downcast_ref::<wavaug::Error>().is_some() {
            break;
        }
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: selftest failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}
