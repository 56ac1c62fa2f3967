use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use pcade::experiment::{
    emit_trajectory, format_table, load_runs, load_stats, run_experiment, summarize_records, write_rank_tables,
    ExperimentConfig,
};
use pcade::stats::{stats_csv, RankTable};
use pcade::{total_rank, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "pcade", version, about = "Constrained DE experiments with PCA-projection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config and PCADE_OUT_DIR.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Base seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Summarize run records into statistics.
    Stats {
        /// Run record file or directory searched recursively.
        runs: PathBuf,
        /// Directory for per-cell CSV/JSON; prints CSV to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the trajectory CSV of a single record instead.
        #[arg(long, value_name = "STRIDE")]
        trajectory: Option<usize>,
    },
    /// Build rank tables from statistics, or total existing rank tables.
    Rank {
        /// Statistics JSON file or directory.
        #[arg(long, conflicts_with_all = ["mean", "median"])]
        stats: Option<PathBuf>,
        /// Directory for rank tables (with --stats).
        #[arg(long, requires = "stats")]
        out: Option<PathBuf>,
        /// Mean-based rank CSV; repeat once per dimension, paired with --median.
        #[arg(long)]
        mean: Vec<PathBuf>,
        #[arg(long)]
        median: Vec<PathBuf>,
    },
    /// Render statistics as a plain-text table.
    Table {
        /// Statistics JSON file or directory.
        stats: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_config_error(&e) {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(
            c.downcast_ref::<Error>(),
            Some(
                Error::Config(_)
                    | Error::Toml(_)
                    | Error::UnknownProblem { .. }
                    | Error::UnsupportedDimension { .. }
                    | Error::InvalidProblem(_)
                    | Error::Expression { .. }
            )
        ) || c.downcast_ref::<ConfigError>().is_some()
    })
}

#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { config, out, jobs, seed } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", config.display())))?;
            let mut experiment = ExperimentConfig::from_toml(&text)?;
            if let Some(dir) = std::env::var_os("PCADE_OUT_DIR") {
                experiment.out_dir = dir.into();
            }
            if let Some(dir) = out {
                experiment.out_dir = dir;
            }
            if let Some(jobs) = jobs {
                experiment.jobs = jobs;
            }
            if let Some(seed) = seed {
                experiment.base_seed = seed;
            }
            let report = run_experiment(&experiment)?;
            println!(
                "{} runs, {} failed; results in {}",
                report.records.len(),
                report.failures,
                experiment.out_dir.display()
            );
            if report.failures > 0 {
                return Ok(ExitCode::from(EXIT_PARTIAL));
            }
        }
        Command::Stats { runs, out, trajectory } => {
            let records = load_runs(&runs).with_context(|| format!("reading {}", runs.display()))?;
            if let Some(stride) = trajectory {
                let [record] = records.as_slice() else {
                    bail!(ConfigError(format!("--trajectory needs exactly one record, found {}", records.len())));
                };
                print!("{}", emit_trajectory(record, stride)?);
                return Ok(ExitCode::SUCCESS);
            }
            let stats = summarize_records(&records)?;
            match out {
                Some(dir) => write_stats(&dir, &stats)?,
                None => print!("{}", sectioned_csv(&stats)),
            }
        }
        Command::Rank { stats, out, mean, median } => match stats {
            Some(path) => {
                let stats = load_stats(&path)?;
                let dir = out.unwrap_or_else(|| PathBuf::from("ranks"));
                for r in write_rank_tables(&dir, &stats)? {
                    println!("D={}", r.dim);
                    for (name, total) in r.totals {
                        println!("{name},{total}");
                    }
                }
            }
            None => print!("{}", total_csv(&mean, &median)?),
        },
        Command::Table { stats } => {
            print!("{}", format_table(&load_stats(&stats)?));
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// One CSV block per algorithm and dimension, each under a `# <algorithm> D=<dim>` line.
fn sectioned_csv(stats: &[pcade::ProblemStats]) -> String {
    let mut keys: Vec<(&str, usize)> = Vec::new();
    for s in stats {
        if !keys.contains(&(s.algorithm.as_str(), s.dim)) {
            keys.push((s.algorithm.as_str(), s.dim));
        }
    }
    let mut out = String::new();
    for (algorithm, dim) in keys {
        let group: Vec<_> = stats.iter().filter(|s| s.algorithm == algorithm && s.dim == dim).cloned().collect();
        out.push_str(&format!("# {algorithm} D={dim}\n{}", stats_csv(&group)));
    }
    out
}

fn write_stats(dir: &Path, stats: &[pcade::ProblemStats]) -> anyhow::Result<()> {
    for s in stats {
        let sub = dir.join(&s.algorithm);
        std::fs::create_dir_all(&sub)?;
        let stem = format!("{}-{}D", s.problem, s.dim);
        std::fs::write(sub.join(format!("{stem}.csv")), stats_csv(std::slice::from_ref(s)))?;
        std::fs::write(sub.join(format!("{stem}.json")), serde_json::to_string_pretty(s)? + "\n")?;
    }
    Ok(())
}

/// `algorithm,<one column per mean/median pair>,total`, columns named after
/// the mean file stems.
fn total_csv(mean: &[PathBuf], median: &[PathBuf]) -> anyhow::Result<String> {
    if mean.is_empty() || mean.len() != median.len() {
        bail!(ConfigError("give --stats, or matching numbers of --mean and --median".into()));
    }
    let read = |p: &PathBuf| -> anyhow::Result<RankTable> {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        Ok(RankTable::from_csv(&text)?)
    };
    let mut columns = Vec::new();
    for (m, d) in mean.iter().zip(median) {
        let label = m.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        columns.push((label, total_rank(&read(m)?, &read(d)?)?));
    }
    let algorithms: Vec<String> = columns[0].1.iter().map(|(a, _)| a.clone()).collect();
    let mut out = String::from("algorithm");
    for (label, _) in &columns {
        out.push(',');
        out.push_str(label);
    }
    out.push_str(",total\n");
    for a in &algorithms {
        out.push_str(a);
        let mut sum = 0;
        for (_, totals) in &columns {
            let Some((_, t)) = totals.iter().find(|(name, _)| name == a) else {
                bail!(Error::CoverageMismatch(format!("algorithm {a} missing from a rank table")));
            };
            sum += t;
            out.push_str(&format!(",{t}"));
        }
        out.push_str(&format!(",{sum}\n"));
    }
    Ok(out)
}
