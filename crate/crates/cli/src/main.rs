//! `vgsearch`: run verifier-guided search experiments from TOML configs,
//! sweep (granularity, budget) grids into CSVs, profile score stability,
//! pick granularities from accuracy tables, and emit plot-ready curves.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;
use vgsearch_core::adaptive::{
    am_g_select, cm_g_select, largest_effective_g, read_accuracy_csv,
};
use vgsearch_core::harness::{
    report_curves, run_cell, run_stability, run_sweep, write_stability_csv, ExperimentSpec,
    HarnessError,
};

#[derive(Parser)]
#[command(name = "vgsearch", version, about = "Verifier-guided test-time search experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the first grid cell of a config and print per-question results.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the full grid and write sweep.csv, summary.csv, and
    /// accuracy_table.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Measure verifier score drift across a step gap on the first grid
    /// cell.
    ProfileStability {
        #[arg(long)]
        config: PathBuf,
        /// Step gap between compared scores.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Where to write the histogram CSV (printed summary only when
        /// omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Pick a granularity from an accuracy-table CSV and print it.
    SelectG {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, value_enum)]
        strategy: SelectStrategy,
        #[arg(long, default_value = "all")]
        difficulty: String,
        /// Budget column of the table to select within.
        #[arg(long)]
        n: u32,
        /// Accuracy tolerance below the g=1 baseline (cm only).
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Fraction of baseline accuracy to retain (retention only).
        #[arg(long, default_value_t = 0.95)]
        retention: f64,
        /// Largest granularity to consider; defaults to the table's
        /// largest.
        #[arg(long)]
        g_max: Option<u32>,
    },
    /// Convert a summary CSV into per-strategy accuracy-vs-compute curves.
    Report {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SelectStrategy {
    /// Largest granularity whose prefix preserves baseline accuracy
    /// within epsilon.
    Cm,
    /// Accuracy argmax, ties toward the larger granularity.
    Am,
    /// Largest granularity retaining a fraction of baseline accuracy.
    Retention,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(inner) = source {
                eprintln!("  caused by: {inner}");
                source = inner.source();
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run { config } => {
            let spec = ExperimentSpec::from_path(&config)?;
            let g = spec.effective_granularities()[0];
            let n = spec.sweep.budgets[0];
            let rows = run_cell(&spec, g, n)?;
            for row in &rows {
                println!(
                    "{}\t{}\t{}",
                    row.question_id,
                    if row.correct { "correct" } else { "wrong" },
                    row.selected_answer
                );
            }
            let correct = rows.iter().filter(|r| r.correct).count();
            println!(
                "accuracy {correct}/{} at g={g} n={n} ({} proposer steps, {} verifier calls)",
                rows.len(),
                rows.iter().map(|r| r.proposer_steps).sum::<u64>(),
                rows.iter().map(|r| r.verifier_calls).sum::<u64>(),
            );
            Ok(())
        }
        Command::Sweep { config, output } => {
            let spec = ExperimentSpec::from_path(&config)?;
            let outputs = run_sweep(&spec, &output)?;
            println!("{}", outputs.sweep_csv.display());
            println!("{}", outputs.summary_csv.display());
            println!("{}", outputs.accuracy_csv.display());
            Ok(())
        }
        Command::ProfileStability { config, k, output } => {
            let spec = ExperimentSpec::from_path(&config)?;
            let profile = run_stability(&spec, k)?;
            if let Some(path) = output {
                write_stability_csv(&profile, File::create(&path)?)?;
                println!("{}", path.display());
            }
            println!(
                "k={} deltas={} skipped={} range={} fraction_below_1pct={}",
                profile.k,
                profile.deltas_counted,
                profile.skipped_histories,
                profile.score_range,
                profile.fraction_below_1pct
            );
            Ok(())
        }
        Command::SelectG { table, strategy, difficulty, n, epsilon, retention, g_max } => {
            let table = read_accuracy_csv(File::open(&table)?)?;
            let g_max = g_max
                .or_else(|| table.granularities().last().copied())
                .ok_or_else(|| HarnessError::Spec("accuracy table is empty".into()))?;
            let g = match strategy {
                SelectStrategy::Cm => cm_g_select(&table, &difficulty, n, epsilon, g_max),
                SelectStrategy::Am => am_g_select(&table, &difficulty, n, g_max)?,
                SelectStrategy::Retention => {
                    largest_effective_g(&table, &difficulty, n, retention, g_max)?
                }
            };
            println!("{g}");
            Ok(())
        }
        Command::Report { summary, output } => {
            for path in report_curves(&summary, &output)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}
