//! Command-line front end for the switching-cost bandit simulator.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use combat_harness::config::RecordGranularity;
use combat_harness::figures::{ExponentReport, SweepOutput};
use combat_harness::{
    aggregate, load_config, parse_seed_list, preset, run_experiment, run_sweep, with_thread_pool,
    write_curves_csv, write_records_csv, write_sweep_csv, ExperimentConfig, ExperimentOutput,
    FigurePreset, SweepPlan, SweepVariable,
};
use std::path::PathBuf;

/// Simulator for adversarial combinatorial bandits with switching costs.
#[derive(Parser)]
#[command(name = "combat-switch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonRunArgs {
    /// Seed list (`0..20`, `0..=19`, or `3,5,8`); overrides the config.
    #[arg(long)]
    seeds: Option<String>,

    /// Worker threads (default: COMBAT_SWITCH_THREADS or all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment config file and write run records.
    Run {
        /// Path to the key-value config file.
        #[arg(long)]
        config: PathBuf,

        /// Records CSV path; overrides the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,

        /// Mean/SE curves CSV path.
        #[arg(long)]
        agg_out: Option<PathBuf>,

        /// Recording granularity (`round` or `batch`); overrides the config.
        #[arg(long)]
        granularity: Option<String>,

        #[command(flatten)]
        common: CommonRunArgs,
    },

    /// Sweep one variable over a list of values and fit the growth exponent.
    Sweep {
        /// Base config file; the swept field is overwritten per value.
        #[arg(long)]
        config: PathBuf,

        /// Which variable to sweep: I, lambda, K, or T.
        #[arg(long)]
        vary: String,

        /// Comma-separated values for the swept variable.
        #[arg(long)]
        values: String,

        /// Sweep summary CSV path.
        #[arg(long)]
        out: Option<PathBuf>,

        #[command(flatten)]
        common: CommonRunArgs,
    },

    /// Validate a replay loss file.
    ReplayCheck {
        /// Path to the CSV loss file.
        path: PathBuf,

        /// Expected number of base arms (columns).
        #[arg(long)]
        arms: usize,

        /// Require at least this many rounds (rows).
        #[arg(long)]
        rounds: Option<usize>,
    },

    /// Run a named figure preset (fig5a..fig6f) and emit its CSV data.
    Figure {
        /// Preset name, e.g. fig5a.
        name: String,

        /// Output directory for the CSV files (default: current directory).
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,

        #[command(flatten)]
        common: CommonRunArgs,
    },
}

fn resolve_threads(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("COMBAT_SWITCH_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn apply_common(config: &mut ExperimentConfig, common: &CommonRunArgs) -> Result<()> {
    if let Some(seeds) = &common.seeds {
        config.seeds = parse_seed_list(seeds)?;
    }
    Ok(())
}

fn print_run_metadata(output: &ExperimentOutput) {
    let mut seen = std::collections::BTreeSet::new();
    for run in &output.runs {
        if seen.insert(run.summary.policy.clone()) {
            println!(
                "# policy {}: batches={} {}",
                run.summary.policy, run.summary.num_batches, run.summary.metadata
            );
        }
    }
}

fn print_exponents(vary: SweepVariable, reports: &[ExponentReport]) {
    for report in reports {
        println!(
            "policy {}: regret grows as {}^{:.3} (r^2 = {:.4})",
            report.policy,
            vary.label(),
            report.exponent,
            report.r_squared
        );
    }
}

fn run_command(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            agg_out,
            granularity,
            common,
        } => {
            let mut experiment = load_config(&config)
                .with_context(|| format!("loading config {}", config.display()))?;
            apply_common(&mut experiment, &common)?;
            if let Some(g) = granularity {
                experiment.granularity = match g.to_ascii_lowercase().as_str() {
                    "round" => RecordGranularity::Round,
                    "batch" => RecordGranularity::Batch,
                    other => bail!("config field `granularity`: unknown value `{other}`"),
                };
            }
            if let Some(path) = out {
                experiment.output_path = Some(path);
            }
            let threads = resolve_threads(common.threads);
            let output = with_thread_pool(threads, || run_experiment(&experiment))?;
            print_run_metadata(&output);
            let records = output.records();
            let out_path = experiment
                .output_path
                .clone()
                .unwrap_or_else(|| PathBuf::from("records.csv"));
            write_records_csv(&out_path, &records)
                .with_context(|| format!("writing {}", out_path.display()))?;
            println!("wrote {} records to {}", records.len(), out_path.display());
            if let Some(agg_path) = agg_out {
                let curves = aggregate(&records)?;
                write_curves_csv(&agg_path, &curves)
                    .with_context(|| format!("writing {}", agg_path.display()))?;
                println!(
                    "wrote {} curve points to {}",
                    curves.len(),
                    agg_path.display()
                );
            }
            Ok(())
        }

        Command::Sweep {
            config,
            vary,
            values,
            out,
            common,
        } => {
            let mut base = load_config(&config)
                .with_context(|| format!("loading config {}", config.display()))?;
            apply_common(&mut base, &common)?;
            let vary = SweepVariable::parse(&vary)
                .with_context(|| format!("unknown sweep variable `{vary}`"))?;
            let values: Vec<f64> = values
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .context("parsing --values")?;
            let plan = SweepPlan { base, vary, values };
            let threads = resolve_threads(common.threads);
            let SweepOutput { points, reports } = with_thread_pool(threads, || run_sweep(&plan))?;
            print_exponents(vary, &reports);
            if let Some(path) = out {
                write_sweep_csv(&path, &points)
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {} sweep points to {}", points.len(), path.display());
            }
            Ok(())
        }

        Command::ReplayCheck { path, arms, rounds } => {
            let adversary = combat_core::adversary::ReplayAdversary::from_path(&path, arms)?;
            if let Some(min_rounds) = rounds {
                if adversary.num_rounds() < min_rounds {
                    bail!(
                        "replay file {} has {} rounds, need at least {min_rounds}",
                        path.display(),
                        adversary.num_rounds()
                    );
                }
            }
            println!(
                "ok: {} rounds x {arms} arms, all values in [0, 1]",
                adversary.num_rounds()
            );
            Ok(())
        }

        Command::Figure {
            name,
            out_dir,
            common,
        } => {
            let threads = resolve_threads(common.threads);
            match preset(&name)? {
                FigurePreset::Curves(mut config) => {
                    apply_common(&mut config, &common)?;
                    let output = with_thread_pool(threads, || run_experiment(&config))?;
                    print_run_metadata(&output);
                    let records = output.records();
                    let curves = aggregate(&records)?;
                    let records_path = out_dir.join(format!("{name}_records.csv"));
                    let curves_path = out_dir.join(format!("{name}_curves.csv"));
                    write_records_csv(&records_path, &records)
                        .with_context(|| format!("writing {}", records_path.display()))?;
                    write_curves_csv(&curves_path, &curves)
                        .with_context(|| format!("writing {}", curves_path.display()))?;
                    println!(
                        "wrote {} and {}",
                        records_path.display(),
                        curves_path.display()
                    );
                }
                FigurePreset::Sweep(mut plan) => {
                    apply_common(&mut plan.base, &common)?;
                    let SweepOutput { points, reports } =
                        with_thread_pool(threads, || run_sweep(&plan))?;
                    print_exponents(plan.vary, &reports);
                    let sweep_path = out_dir.join(format!("{name}_sweep.csv"));
                    write_sweep_csv(&sweep_path, &points)
                        .with_context(|| format!("writing {}", sweep_path.display()))?;
                    println!("wrote {}", sweep_path.display());
                }
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run_command(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
