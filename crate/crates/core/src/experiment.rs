//! Batch runner: every (problem, dimension) × algorithm × run, executed in a
//! thread pool, with records, per-cell statistics and per-dimension rank
//! tables written under one output directory.
//!
//! ```text
//! out/
//!   runs/<problem>-<dim>D/<algorithm>/run-000.json
//!   stats/<algorithm>/<problem>-<dim>D.{csv,json}
//!   ranks/<dim>D.json, <dim>D_mean.csv, <dim>D_median.csv
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hecopde::{hecopde_run, HecoConfig};
use crate::pmode::{pmode_run, PmodeConfig};
use crate::problem::{Problem, Registry};
use crate::stats::{stats_csv, summarize, total_rank, ProblemStats, RankBasis, RankTable, RunRecord};

pub const DEFAULT_RUNS: usize = 25;
pub const DEFAULT_BUDGET_PER_DIM: u64 = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    Pmode(PmodeConfig),
    Heco(HecoConfig),
}

impl AlgorithmSpec {
    pub fn name(&self) -> String {
        match self {
            Self::Pmode(c) => c.name(),
            Self::Heco(c) => c.name(),
        }
    }

    /// Fills in the budget unless the algorithm sets its own.
    fn with_budget(&self, budget: u64, trajectory: bool) -> Self {
        match self.clone() {
            Self::Pmode(mut c) => {
                if c.max_evaluations == 0 {
                    c.max_evaluations = budget;
                }
                c.trajectory |= trajectory;
                Self::Pmode(c)
            }
            Self::Heco(mut c) => {
                if c.max_evaluations == 0 {
                    c.max_evaluations = budget;
                }
                c.trajectory |= trajectory;
                Self::Heco(c)
            }
        }
    }

    fn budget(&self, dim: usize) -> u64 {
        match self {
            Self::Pmode(c) => c.budget(dim),
            Self::Heco(c) => c.budget(dim),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::Pmode(c) => c.validate(dim),
            Self::Heco(c) => c.validate(dim),
        }
    }

    pub fn run(&self, problem: &Problem, seed: u64) -> Result<RunRecord> {
        match self {
            Self::Pmode(c) => pmode_run(problem, c, seed),
            Self::Heco(c) => hecopde_run(problem, c, seed),
        }
    }
}

fn default_runs() -> usize {
    DEFAULT_RUNS
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET_PER_DIM
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn default_jobs() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problems: Vec<ProblemSpec>,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Evaluation budget per decision variable.
    #[serde(default = "default_budget")]
    pub budget_per_dim: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Problem definition files, relative to the working directory.
    #[serde(default)]
    pub problem_files: Vec<PathBuf>,
    #[serde(default)]
    pub trajectory: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn registry(&self) -> Result<Registry> {
        let mut registry = Registry::builtin();
        for file in &self.problem_files {
            registry.load_file(file)?;
        }
        Ok(registry)
    }

    /// Checks everything that can be checked before running: counts, names,
    /// problem availability, and each algorithm against each dimension.
    pub fn validate(&self, registry: &Registry) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if self.problems.is_empty() || self.algorithms.is_empty() {
            return Err(Error::Config("at least one problem and one algorithm are required".into()));
        }
        let mut names: Vec<String> = self.algorithms.iter().map(AlgorithmSpec::name).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("algorithm name `{}` is used twice; set `label`", w[0])));
        }
        for p in &self.problems {
            if p.dims.is_empty() {
                return Err(Error::Config(format!("problem `{}` lists no dimensions", p.name)));
            }
            for &dim in &p.dims {
                let problem = registry.get(&p.name, dim)?;
                for a in &self.algorithms {
                    let a = a.with_budget(self.budget_per_dim * dim as u64, false);
                    a.validate(problem.dim())
                        .map_err(|e| Error::Config(format!("{} on {}-{dim}D: {e}", a.name(), p.name)))?;
                }
            }
        }
        Ok(())
    }
}

/// Stable 64-bit seed for run `run` of `algorithm` on `problem`.
pub fn derive_seed(base_seed: u64, problem: &str, dim: usize, algorithm: &str, run: usize) -> u64 {
    // FNV-1a over the fields, then a splitmix64 finalizer
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0100_0000_01b3);
    };
    feed(problem.as_bytes());
    feed(&(dim as u64).to_le_bytes());
    feed(algorithm.as_bytes());
    feed(&(run as u64).to_le_bytes());
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    base_seed ^ z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub records: Vec<RunRecord>,
    pub stats: Vec<ProblemStats>,
    pub failures: usize,
}

struct Task<'a> {
    problem: &'a Problem,
    algorithm: AlgorithmSpec,
    name: String,
    run: usize,
    seed: u64,
}

/// Runs every cell and writes all artifacts under `config.out_dir`. A failing
/// run is recorded with its error and does not stop the experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let registry = config.registry()?;
    config.validate(&registry)?;

    let mut problems = Vec::new();
    for p in &config.problems {
        for &dim in &p.dims {
            problems.push(registry.get(&p.name, dim)?);
        }
    }
    let mut tasks = Vec::new();
    for problem in &problems {
        for a in &config.algorithms {
            let algorithm = a.with_budget(config.budget_per_dim * problem.dim() as u64, config.trajectory);
            let name = algorithm.name();
            for run in 0..config.runs {
                let seed = derive_seed(config.base_seed, problem.name(), problem.dim(), &name, run);
                tasks.push(Task { problem, algorithm: algorithm.clone(), name: name.clone(), run, seed });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| tasks.par_iter().map(execute).collect());

    let failures = records.iter().filter(|r| r.error.is_some()).count();
    let stats = write_artifacts(&config.out_dir, &records, &tasks)?;
    Ok(ExperimentReport { records, stats, failures })
}

fn execute(task: &Task) -> RunRecord {
    let budget = task.algorithm.budget(task.problem.dim());
    let outcome = catch_unwind(AssertUnwindSafe(|| task.algorithm.run(task.problem, task.seed)));
    let record = match outcome {
        Ok(Ok(mut record)) => {
            record.algorithm = task.name.clone();
            record
        }
        Ok(Err(e)) => RunRecord::failed(task.problem.name(), task.problem.dim(), &task.name, task.seed, budget, e.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "run panicked".into());
            RunRecord::failed(task.problem.name(), task.problem.dim(), &task.name, task.seed, budget, msg)
        }
    };
    assert!(record.evaluations <= record.max_evaluations, "evaluation budget exceeded");
    if record.error.is_some() {
        log::warn!("run {} of {} on {} failed: {}", task.run, task.name, task.problem.name(), record.error.as_deref().unwrap_or(""));
    }
    record
}

fn cell_id(problem: &str, dim: usize) -> String {
    format!("{problem}-{dim}D")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_artifacts(out: &Path, records: &[RunRecord], tasks: &[Task]) -> Result<Vec<ProblemStats>> {
    for (record, task) in records.iter().zip(tasks) {
        let dir = out.join("runs").join(cell_id(&record.problem, record.dim)).join(&task.name);
        std::fs::create_dir_all(&dir)?;
        write_json(&dir.join(format!("run-{:03}.json", task.run)), record)?;
    }

    let stats = summarize_records(records)?;
    for s in &stats {
        let dir = out.join("stats").join(&s.algorithm);
        std::fs::create_dir_all(&dir)?;
        let stem = cell_id(&s.problem, s.dim);
        std::fs::write(dir.join(format!("{stem}.csv")), stats_csv(std::slice::from_ref(s)))?;
        write_json(&dir.join(format!("{stem}.json")), s)?;
    }
    write_rank_tables(&out.join("ranks"), &stats)?;
    Ok(stats)
}

/// One [`ProblemStats`] per (problem, dimension, algorithm), in first-seen order.
pub fn summarize_records(records: &[RunRecord]) -> Result<Vec<ProblemStats>> {
    let mut groups: Vec<((String, usize, String), Vec<RunRecord>)> = Vec::new();
    for r in records {
        let key = (r.problem.clone(), r.dim, r.algorithm.clone());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, runs)) => runs.push(r.clone()),
            None => groups.push((key, vec![r.clone()])),
        }
    }
    groups.iter().map(|(_, runs)| summarize(runs)).collect()
}

/// Mean-based and median-based ranks of one dimension with their totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionRanks {
    pub dim: usize,
    pub mean: RankTable,
    pub median: RankTable,
    pub totals: Vec<(String, u32)>,
}

pub fn rank_dimensions(stats: &[ProblemStats]) -> Result<Vec<DimensionRanks>> {
    let mut by_dim: BTreeMap<usize, Vec<ProblemStats>> = BTreeMap::new();
    for s in stats {
        by_dim.entry(s.dim).or_default().push(s.clone());
    }
    by_dim
        .into_iter()
        .map(|(dim, group)| {
            let mean = RankTable::from_stats(&group, RankBasis::Mean)?;
            let median = RankTable::from_stats(&group, RankBasis::Median)?;
            let totals = total_rank(&mean, &median)?;
            Ok(DimensionRanks { dim, mean, median, totals })
        })
        .collect()
}

/// Writes `<dim>D.json` plus the two rank CSVs per dimension.
pub fn write_rank_tables(dir: &Path, stats: &[ProblemStats]) -> Result<Vec<DimensionRanks>> {
    let ranks = rank_dimensions(stats)?;
    std::fs::create_dir_all(dir)?;
    for r in &ranks {
        write_json(&dir.join(format!("{}D.json", r.dim)), r)?;
        std::fs::write(dir.join(format!("{}D_mean.csv", r.dim)), r.mean.to_csv())?;
        std::fs::write(dir.join(format!("{}D_median.csv", r.dim)), r.median.to_csv())?;
    }
    Ok(ranks)
}

/// Every `*.json` run record under `dir`, in path order.
pub fn load_runs(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut paths = Vec::new();
    collect_json(dir, &mut paths)?;
    paths.sort();
    paths
        .iter()
        .map(|p| Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?))
        .collect()
}

/// Every `*.json` stats file under `dir`, in path order.
pub fn load_stats(dir: &Path) -> Result<Vec<ProblemStats>> {
    let mut paths = Vec::new();
    collect_json(dir, &mut paths)?;
    paths.sort();
    paths
        .iter()
        .map(|p| Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?))
        .collect()
}

fn collect_json(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if dir.is_file() {
        out.push(dir.to_path_buf());
        return Ok(());
    }
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_json(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    Ok(())
}

/// `(evaluations, best f, best v)` CSV of a run with checkpoints enabled.
pub fn emit_trajectory(record: &RunRecord, stride: usize) -> Result<String> {
    record.trajectory_csv(stride)
}

fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.2e}")
    } else {
        format!("{v}")
    }
}

/// Plain-text table in the usual competition layout: one block per
/// algorithm and dimension, problems as columns and statistics as rows.
pub fn format_table(stats: &[ProblemStats]) -> String {
    let mut blocks: BTreeMap<(String, usize), Vec<&ProblemStats>> = BTreeMap::new();
    for s in stats {
        blocks.entry((s.algorithm.clone(), s.dim)).or_default().push(s);
    }
    let mut out = String::new();
    for ((algorithm, dim), group) in blocks {
        let _ = writeln!(out, "{algorithm} D={dim}");
        let width = group.iter().map(|s| s.problem.len()).max().unwrap_or(0).max(10);
        let _ = write!(out, "{:<8}", "");
        for s in &group {
            let _ = write!(out, " {:>width$}", s.problem);
        }
        out.push('\n');
        let rows: [(&str, &dyn Fn(&ProblemStats) -> String); 9] = [
            ("Best", &|s| sci(s.best)),
            ("Median", &|s| sci(s.median)),
            ("c", &|s| format!("{},{},{}", s.c[0], s.c[1], s.c[2])),
            ("v", &|s| sci(s.vbar)),
            ("Mean", &|s| sci(s.mean)),
            ("Worst", &|s| sci(s.worst)),
            ("std", &|s| sci(s.std)),
            ("SR", &|s| format!("{}", s.sr)),
            ("vio", &|s| sci(s.vio)),
        ];
        for (label, cell) in rows {
            let _ = write!(out, "{label:<8}");
            for s in &group {
                let _ = write!(out, " {:>width$}", cell(s));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
