//! Per-run records, per-problem summary statistics, and the competition
//! ranking procedure (mean-based and median-based ranks, summed into a total
//! rank value per algorithm).

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float_serde;

/// Snapshot of the best-so-far solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub evaluations: u64,
    #[serde(with = "float_serde")]
    pub best_f: f64,
    #[serde(with = "float_serde")]
    pub best_v: f64,
}

/// Terminal result of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    #[serde(default)]
    pub dim: usize,
    pub algorithm: String,
    pub seed: u64,
    #[serde(with = "float_serde::vec")]
    pub best_x: Vec<f64>,
    #[serde(with = "float_serde")]
    pub f: f64,
    #[serde(with = "float_serde")]
    pub v: f64,
    /// Inequalities first, then equalities.
    #[serde(with = "float_serde::vec")]
    pub constraint_violations: Vec<f64>,
    pub evaluations: u64,
    pub max_evaluations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<Checkpoint>>,
    /// Set when the run failed; `f` and `v` are then `+inf`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn failed(problem: &str, dim: usize, algorithm: &str, seed: u64, max_evaluations: u64, error: String) -> Self {
        Self {
            problem: problem.to_string(),
            dim,
            algorithm: algorithm.to_string(),
            seed,
            best_x: Vec::new(),
            f: f64::INFINITY,
            v: f64::INFINITY,
            constraint_violations: Vec::new(),
            evaluations: 0,
            max_evaluations,
            trajectory: None,
            error: Some(error),
        }
    }

    pub fn feasible(&self) -> bool {
        self.error.is_none() && self.v == 0.0
    }

    /// Mean violation over the constraints (0 without constraints).
    pub fn mean_violation(&self) -> f64 {
        if self.error.is_some() {
            return f64::INFINITY;
        }
        if self.constraint_violations.is_empty() {
            return 0.0;
        }
        self.constraint_violations.iter().sum::<f64>() / self.constraint_violations.len() as f64
    }

    /// `(evaluations, best f, best v)` rows for every `stride`-th checkpoint,
    /// always including the last one.
    pub fn trajectory_csv(&self, stride: usize) -> Result<String> {
        let points = self.trajectory.as_ref().ok_or(Error::NoTrajectory)?;
        let stride = stride.max(1);
        let mut out = String::from("evaluations,best_f,best_v\n");
        for (i, c) in points.iter().enumerate() {
            if i % stride == 0 || i + 1 == points.len() {
                let _ = writeln!(out, "{},{},{}", c.evaluations, c.best_f, c.best_v);
            }
        }
        Ok(out)
    }
}

/// Median ordering over runs: feasible first, feasible by `f`, infeasible by `v`.
pub fn run_order(a: &RunRecord, b: &RunRecord) -> Ordering {
    match (a.feasible(), b.feasible()) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => nan_last(a.f).total_cmp(&nan_last(b.f)),
        (false, false) => nan_last(a.v).total_cmp(&nan_last(b.v)),
    }
}

fn nan_last(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Summary of all runs of one algorithm on one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemStats {
    pub problem: String,
    #[serde(default)]
    pub dim: usize,
    pub algorithm: String,
    pub runs: usize,
    #[serde(with = "float_serde")]
    pub best: f64,
    #[serde(with = "float_serde")]
    pub median: f64,
    #[serde(with = "float_serde")]
    pub worst: f64,
    #[serde(with = "float_serde")]
    pub mean: f64,
    #[serde(with = "float_serde")]
    pub std: f64,
    /// Percentage of feasible terminal solutions.
    pub sr: f64,
    /// Violations at the median solution: `> 1`, in `[0.01, 1]`, in `[1e-4, 0.01)`.
    pub c: [usize; 3],
    /// Mean constraint violation at the median solution.
    #[serde(with = "float_serde")]
    pub vbar: f64,
    /// Mean over runs of the per-run mean constraint violation.
    #[serde(with = "float_serde")]
    pub vio: f64,
    pub median_feasible: bool,
}

pub const STATS_CSV_HEADER: &str = "problem,best,median,c1,c2,c3,vbar,mean,worst,std,SR,vio";

impl ProblemStats {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.problem,
            self.best,
            self.median,
            self.c[0],
            self.c[1],
            self.c[2],
            self.vbar,
            self.mean,
            self.worst,
            self.std,
            self.sr,
            self.vio
        )
    }
}

/// Writes stats rows under [`STATS_CSV_HEADER`].
pub fn stats_csv(stats: &[ProblemStats]) -> String {
    let mut out = format!("{STATS_CSV_HEADER}\n");
    for s in stats {
        out.push_str(&s.csv_row());
        out.push('\n');
    }
    out
}

fn violation_buckets(violations: &[f64]) -> [usize; 3] {
    let mut c = [0; 3];
    for &v in violations {
        if v > 1.0 {
            c[0] += 1;
        } else if v >= 0.01 {
            c[1] += 1;
        } else if v >= 0.0001 {
            c[2] += 1;
        }
    }
    c
}

/// Summary statistics in the competition reporting schema.
///
/// The median solution is the lower middle of the runs sorted by
/// [`run_order`]; best and worst are that ordering's extremes. Mean and
/// (sample) standard deviation of `f` include infeasible runs.
pub fn summarize(runs: &[RunRecord]) -> Result<ProblemStats> {
    if runs.is_empty() {
        return Err(Error::Empty("no runs to summarize"));
    }
    let mut order: Vec<&RunRecord> = runs.iter().collect();
    order.sort_by(|a, b| run_order(a, b));
    let n = runs.len();
    let median = order[(n - 1) / 2];

    let mean = runs.iter().map(|r| r.f).sum::<f64>() / n as f64;
    let std = if n > 1 {
        (runs.iter().map(|r| (r.f - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let feasible = runs.iter().filter(|r| r.feasible()).count();

    Ok(ProblemStats {
        problem: runs[0].problem.clone(),
        dim: runs[0].dim,
        algorithm: runs[0].algorithm.clone(),
        runs: n,
        best: order[0].f,
        median: median.f,
        worst: order[n - 1].f,
        mean,
        std,
        sr: 100.0 * feasible as f64 / n as f64,
        c: violation_buckets(&median.constraint_violations),
        vbar: median.mean_violation(),
        vio: runs.iter().map(RunRecord::mean_violation).sum::<f64>() / n as f64,
        median_feasible: median.feasible(),
    })
}

/// Competition ranking: each entry's rank is one plus the number of entries
/// strictly better than it, so tied entries share the smallest rank.
pub fn competition_ranks<T>(items: &[T], cmp: impl Fn(&T, &T) -> Ordering) -> Vec<u32> {
    items
        .iter()
        .map(|a| 1 + items.iter().filter(|b| cmp(b, a) == Ordering::Less).count() as u32)
        .collect()
}

/// Higher feasibility rate, then lower mean violation, then lower mean `f`.
pub fn mean_order(a: &ProblemStats, b: &ProblemStats) -> Ordering {
    b.sr.total_cmp(&a.sr)
        .then(nan_last(a.vio).total_cmp(&nan_last(b.vio)))
        .then(nan_last(a.mean).total_cmp(&nan_last(b.mean)))
}

/// Feasible median before infeasible; feasible by `f`, infeasible by violation.
pub fn median_order(a: &ProblemStats, b: &ProblemStats) -> Ordering {
    match (a.median_feasible, b.median_feasible) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => nan_last(a.median).total_cmp(&nan_last(b.median)),
        (false, false) => nan_last(a.vbar).total_cmp(&nan_last(b.vbar)),
    }
}

pub fn rank_by_mean(stats: &[ProblemStats]) -> Vec<u32> {
    competition_ranks(stats, mean_order)
}

pub fn rank_by_median(stats: &[ProblemStats]) -> Vec<u32> {
    competition_ranks(stats, median_order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankBasis {
    Mean,
    Median,
}

/// Per-problem ranks of a set of algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub algorithms: Vec<String>,
    pub problems: Vec<String>,
    /// `ranks[p][a]` is algorithm `a`'s rank on problem `p`.
    pub ranks: Vec<Vec<u32>>,
}

impl RankTable {
    /// Ranks every algorithm on every problem. Each problem must have exactly
    /// one entry per algorithm.
    pub fn from_stats(stats: &[ProblemStats], basis: RankBasis) -> Result<Self> {
        let mut algorithms: Vec<String> = Vec::new();
        let mut problems: Vec<String> = Vec::new();
        for s in stats {
            if !algorithms.contains(&s.algorithm) {
                algorithms.push(s.algorithm.clone());
            }
            if !problems.contains(&s.problem) {
                problems.push(s.problem.clone());
            }
        }
        let mut ranks = Vec::with_capacity(problems.len());
        for p in &problems {
            let mut row: Vec<&ProblemStats> = Vec::with_capacity(algorithms.len());
            for a in &algorithms {
                let found: Vec<&ProblemStats> =
                    stats.iter().filter(|s| &s.problem == p && &s.algorithm == a).collect();
                if found.len() != 1 {
                    return Err(Error::CoverageMismatch(format!(
                        "entries: problem {p} has {} results for {a}",
                        found.len()
                    )));
                }
                row.push(found[0]);
            }
            let cmp = match basis {
                RankBasis::Mean => mean_order,
                RankBasis::Median => median_order,
            };
            ranks.push(competition_ranks(&row, |a, b| cmp(a, b)));
        }
        Ok(Self { algorithms, problems, ranks })
    }

    /// Sum of ranks over problems, per algorithm.
    pub fn totals(&self) -> Vec<u32> {
        (0..self.algorithms.len()).map(|a| self.ranks.iter().map(|row| row[a]).sum()).collect()
    }

    fn rank_of(&self, problem: &str, algorithm: &str) -> Option<u32> {
        let p = self.problems.iter().position(|x| x == problem)?;
        let a = self.algorithms.iter().position(|x| x == algorithm)?;
        Some(self.ranks[p][a])
    }

    /// `problem,<algorithm>...` header, one row per problem.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("problem");
        for a in &self.algorithms {
            out.push(',');
            out.push_str(a);
        }
        out.push('\n');
        for (p, row) in self.problems.iter().zip(&self.ranks) {
            out.push_str(p);
            for r in row {
                let _ = write!(out, ",{r}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::Empty("rank table"))?;
        let algorithms: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let mut problems = Vec::new();
        let mut ranks = Vec::new();
        for line in lines {
            let mut cells = line.split(',');
            problems.push(cells.next().unwrap_or_default().trim().to_string());
            let row = cells
                .map(|c| {
                    c.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::InvalidProblem(format!("rank table: bad rank `{c}`")))
                })
                .collect::<Result<Vec<u32>>>()?;
            if row.len() != algorithms.len() {
                return Err(Error::DimensionMismatch { expected: algorithms.len(), got: row.len() });
            }
            ranks.push(row);
        }
        Ok(Self { algorithms, problems, ranks })
    }
}

/// Total rank value per algorithm: the sum over problems of the mean-based
/// rank plus the median-based rank. Both tables must cover the same problems
/// and algorithms (in any order). Output follows the mean table's order.
pub fn total_rank(mean: &RankTable, median: &RankTable) -> Result<Vec<(String, u32)>> {
    let set = |v: &[String]| v.iter().cloned().collect::<BTreeSet<String>>();
    if set(&mean.algorithms) != set(&median.algorithms) || mean.algorithms.len() != median.algorithms.len() {
        return Err(Error::CoverageMismatch("algorithms".into()));
    }
    if set(&mean.problems) != set(&median.problems) || mean.problems.len() != median.problems.len() {
        return Err(Error::CoverageMismatch("problems".into()));
    }
    mean.algorithms
        .iter()
        .map(|a| {
            let mut total = 0;
            for p in &mean.problems {
                total += mean.rank_of(p, a).expect("covered");
                total += median.rank_of(p, a).expect("checked above");
            }
            Ok((a.clone(), total))
        })
        .collect()
}
