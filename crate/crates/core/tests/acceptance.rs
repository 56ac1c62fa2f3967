//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits nonzero on any failure.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pcade::experiment::{run_experiment, AlgorithmSpec, ExperimentConfig, ProblemSpec};
use pcade::hecopde::{hecopde_run, hecopde_run_observed, population_size_schedule, weights, HecoConfig};
use pcade::linalg::{sym_eigen, Matrix};
use pcade::pca::{pca_projection, PcaBasis};
use pcade::pmode::{nondominated, pmode_run, PmodeConfig};
use pcade::stats::{rank_by_mean, rank_by_median, summarize, RankTable};
use pcade::wilcoxon::{signed_rank, Alternative};
use pcade::{registry_get, total_rank};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("C1 ranking reproduction", Duration::from_secs(1), c1_ranking),
        ("C2 eigen oracle", Duration::from_secs(5), c2_eigen),
        ("C3 PCA-projection degeneracies", Duration::from_secs(1), c3_degeneracy),
        ("C4 valley alignment", Duration::from_secs(10), c4_valley),
        ("C5 ablation at desk scale", Duration::from_secs(600), c5_ablation),
        ("C6 schedule exactness", Duration::from_secs(30), c6_schedule),
        ("C7 determinism and budget", Duration::from_secs(120), c7_determinism),
        ("C8 dominance and statistics oracles", Duration::from_secs(30), c8_oracles),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, limit, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {name} ({elapsed:.2?}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({elapsed:.2?}): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn read_table(name: &str) -> Result<RankTable, String> {
    let text = std::fs::read_to_string(data_dir().join(name)).map_err(|e| format!("{name}: {e}"))?;
    RankTable::from_csv(&text).map_err(|e| format!("{name}: {e}"))
}

fn c1_ranking() -> Outcome {
    let expected = std::fs::read_to_string(data_dir().join("total_ranks.csv")).map_err(|e| e.to_string())?;
    let dims = ["10", "30", "50", "100"];
    let mut totals: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for d in dims {
        let mean = read_table(&format!("ranks_mean_{d}d.csv"))?;
        let median = read_table(&format!("ranks_median_{d}d.csv"))?;
        check(mean.problems.len() == 28, || format!("{d}D: {} problems", mean.problems.len()))?;
        for (name, t) in total_rank(&mean, &median).map_err(|e| e.to_string())? {
            totals.entry(name).or_default().push(t);
        }
    }
    let mut rows = 0;
    for line in expected.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let want: Vec<u32> = cells[1..].iter().map(|c| c.parse().unwrap()).collect();
        let got = totals.get(cells[0]).ok_or_else(|| format!("{} missing", cells[0]))?;
        let grand: u32 = got.iter().sum();
        check(got[..] == want[..4] && grand == want[4], || {
            format!("{}: got {got:?} total {grand}, expected {want:?}", cells[0])
        })?;
        rows += 1;
    }
    check(rows == 12, || format!("{rows} algorithms"))?;
    Ok(format!("{rows} algorithms x 4 dimensions match, HECO-PDE {:?}", totals["HECO-PDE"]))
}

fn c2_eigen() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_residual = 0.0f64;
    let mut worst_root = 0.0f64;
    for trial in 0..1000 {
        let n = 1 + trial % 6;
        let rows = random_symmetric(n, &mut rng);
        let a = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let eig = sym_eigen(&a).map_err(|e| e.to_string())?;
        let scale = 1.0 + a.frobenius_norm();
        for k in 0..n {
            let v = eig.vectors.column(k);
            let av = a.mul_vec(&v);
            let r = av.iter().zip(&v).map(|(x, y)| (x - eig.values[k] * y).abs()).fold(0.0, f64::max);
            worst_residual = worst_residual.max(r / scale);
            check(r <= 1e-8 * scale, || format!("trial {trial}: residual {r:e}"))?;
        }
        if n <= 3 {
            let mut got = eig.values.clone();
            got.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(char_poly_roots(&rows)) {
                worst_root = worst_root.max((g - w).abs());
                check((g - w).abs() <= 1e-7, || format!("trial {trial}: eigenvalue {g} vs root {w}"))?;
            }
        }
    }
    Ok(format!("max scaled residual {worst_residual:.1e}, max root gap {worst_root:.1e}"))
}

fn max_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
}

fn c3_degeneracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=6);
        let k = rng.random_range(2..=8);

        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let same = vec![p.clone(); k];
        let gap = max_gap(&pca_projection(&same, rng.random_range(1..=n)).map_err(|e| e.to_string())?, &same);
        worst = worst.max(gap);
        check(gap <= 1e-9, || format!("identical points moved by {gap:e}"))?;

        let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let line: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let s = rng.random_range(-3.0..3.0);
                p.iter().zip(&dir).map(|(a, d)| a + s * d).collect()
            })
            .collect();
        let gap = max_gap(&pca_projection(&line, 1).map_err(|e| e.to_string())?, &line);
        worst = worst.max(gap);
        check(gap <= 1e-9, || format!("collinear points moved by {gap:e}"))?;

        let cloud: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let gap = max_gap(&pca_projection(&cloud, n).map_err(|e| e.to_string())?, &cloud);
        worst = worst.max(gap);
        check(gap <= 1e-9, || format!("full basis moved points by {gap:e}"))?;

        let m = rng.random_range(1..=n);
        let basis = PcaBasis::fit(&cloud, m).map_err(|e| e.to_string())?;
        for x in &cloud {
            let y = basis.project(x).map_err(|e| e.to_string())?;
            // discarded components recomputed from the eigenvector columns
            for j in m..n {
                let v = basis.eigenvectors.column(j);
                let c: f64 = y.iter().zip(&basis.mean).zip(&v).map(|((a, b), c)| (a - b) * c).sum();
                worst = worst.max(c.abs());
                check(c.abs() <= 1e-9, || format!("discarded component {c:e}"))?;
            }
        }
    }
    Ok(format!("max deviation {worst:.1e} over 100 random cases"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// |cos| between the first principal direction of `points` and the valley
/// tangent `(1, 2x̄)` at the points' mean.
fn valley_cosine(points: &[Vec<f64>]) -> Result<f64, String> {
    let basis = PcaBasis::fit(points, 1).map_err(|e| e.to_string())?;
    let pc = basis.eigenvectors.column(0);
    let t = [1.0, 2.0 * basis.mean[0]];
    let norm = (t[0] * t[0] + t[1] * t[1]).sqrt();
    Ok(((pc[0] * t[0] + pc[1] * t[1]) / norm).abs())
}

fn c4_valley() -> Outcome {
    let problem = registry_get("rosenbrock-box", 2).map_err(|e| e.to_string())?;
    let mut elite_cos = Vec::new();
    let mut all_cos = Vec::new();
    for trial in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4_000 + trial);
        let mut points: Vec<(f64, Vec<f64>)> = (0..20)
            .map(|_| {
                let x = problem.random_point(&mut rng);
                (problem.evaluate(&x).unwrap().objective, x)
            })
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let all: Vec<Vec<f64>> = points.iter().map(|p| p.1.clone()).collect();
        elite_cos.push(valley_cosine(&all[..6])?);
        all_cos.push(valley_cosine(&all)?);
    }
    let (elite, all) = (median(elite_cos), median(all_cos));
    let detail = format!("median |cos| elite {elite:.3}, all points {all:.3}");
    check(elite - all >= 0.1 && elite > 0.7, || detail.clone())?;
    Ok(detail)
}

fn c5_ablation() -> Outcome {
    let seeds: Vec<u64> = (0..25).map(|s| 50_000 + s).collect();
    let mut summary = Vec::new();
    let mut pairs_better = [0usize; 2];
    for (name, dim) in [("sphere-linear", 10), ("rosenbrock-disk", 2), ("eq-line", 10)] {
        let problem = registry_get(name, dim).map_err(|e| e.to_string())?;
        let terminal = |run: &dyn Fn(u64) -> pcade::Result<pcade::RunRecord>| -> Result<Vec<f64>, String> {
            seeds.iter().map(|&s| run(s).map(|r| r.f).map_err(|e| e.to_string())).collect()
        };
        let pairs: [(&str, Vec<f64>, Vec<f64>); 2] = [
            (
                "HECO-PDE/HECO-DE",
                terminal(&|s| hecopde_run(&problem, &HecoConfig::default(), s))?,
                terminal(&|s| hecopde_run(&problem, &HecoConfig::hecode(), s))?,
            ),
            (
                "PMODE/CMODE",
                terminal(&|s| pmode_run(&problem, &PmodeConfig::default(), s))?,
                terminal(&|s| pmode_run(&problem, &PmodeConfig::cmode(), s))?,
            ),
        ];
        for (k, (label, with, without)) in pairs.iter().enumerate() {
            let better = signed_rank(with, without, Alternative::Less).p_value;
            let worse = signed_rank(with, without, Alternative::Greater).p_value;
            check(worse >= 0.05, || format!("{label} worse on {name}-{dim}D (p = {worse:.2e})"))?;
            if better < 0.05 {
                pairs_better[k] += 1;
            }
            summary.push(format!("{label} {name}-{dim}D p_better={better:.1e}"));
        }
    }
    check(pairs_better.iter().all(|&b| b >= 1), || format!("no significant improvement: {}", summary.join("; ")))?;
    Ok(summary.join("; "))
}

fn c6_schedule() -> Outcome {
    let (t_max, lambda) = (16_656u64, 12usize);
    for i in 1..=lambda {
        let s = i as f64 / lambda as f64;
        let w0 = weights(0, t_max, i, lambda);
        let w1 = weights(t_max, t_max, i, lambda);
        check(w0.w1 == 0.0 && w0.w2 == 0.0 && w0.w3 == 1.0 - s, || format!("t=0, i={i}: {w0:?}"))?;
        check(w1.w1 == 1.0 && w1.w2 == s && w1.w3 == 0.0, || format!("t=T, i={i}: {w1:?}"))?;
    }
    for t in (0..=t_max).step_by(97) {
        check(weights(t, t_max, lambda, lambda).w3 == 0.0, || format!("i=λ at t={t}"))?;
    }
    check(population_size_schedule(0, t_max, 120, 12) == 120, || "μ(0)".into())?;
    check(population_size_schedule(t_max, t_max, 120, 12) == 12, || "μ(T)".into())?;
    check(population_size_schedule(50, 100, 120, 12) == 66, || "μ(T/2)".into())?;

    let problem = registry_get("eq-line", 10).map_err(|e| e.to_string())?;
    let config = HecoConfig::default();
    let t_max = config.t_max(10);
    let mut generations = 0;
    let mut violation = None;
    let mut last_size = 0;
    hecopde_run_observed(&problem, &config, 6, |g| {
        generations += 1;
        let expected = population_size_schedule(g.generation, t_max, 120, 12);
        if violation.is_none()
            && (g.population.len() != expected
                || g.target_size != expected
                || g.archive_cap != 4 * expected
                || g.archive_len > g.archive_cap)
        {
            violation = Some(format!(
                "generation {}: |P| = {}, μ_t = {expected}, |A| = {} cap {}",
                g.generation,
                g.population.len(),
                g.archive_len,
                g.archive_cap
            ));
        }
        last_size = g.population.len();
    })
    .map_err(|e| e.to_string())?;
    if let Some(v) = violation {
        return Err(v);
    }
    check(generations == t_max && last_size == 12, || format!("{generations} generations, final size {last_size}"))?;
    Ok(format!("closed forms exact; {generations} logged generations of a 10D run hold |P| = μ_t and |A| <= 4μ_t"))
}

fn files_under(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn c7_determinism() -> Outcome {
    let mut checked = 0;
    for (name, dim) in [("rosenbrock-disk", 2), ("sphere-linear", 5), ("eq-line", 5)] {
        let problem = registry_get(name, dim).map_err(|e| e.to_string())?;
        let runs: [(&str, Box<dyn Fn() -> pcade::Result<pcade::RunRecord>>); 2] = [
            ("PMODE", Box::new(|| pmode_run(&problem, &PmodeConfig { trajectory: true, ..PmodeConfig::default() }, 17))),
            ("HECO-PDE", Box::new(|| hecopde_run(&problem, &HecoConfig { trajectory: true, ..HecoConfig::default() }, 17))),
        ];
        for (label, run) in runs {
            let a = run().map_err(|e| e.to_string())?;
            let b = run().map_err(|e| e.to_string())?;
            let (ja, jb) = (serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
            check(ja == jb, || format!("{label} on {name}-{dim}D differs between repeats"))?;
            check(a.evaluations <= a.max_evaluations, || format!("{label} used {} > {}", a.evaluations, a.max_evaluations))?;
            let points = a.trajectory.as_ref().unwrap();
            check(points.iter().all(|c| c.evaluations <= a.max_evaluations), || "checkpoint over budget".into())?;
            checked += 1;
        }
    }

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = |jobs: usize, out: &str| ExperimentConfig {
        problems: vec![
            ProblemSpec { name: "sphere-linear".into(), dims: vec![3] },
            ProblemSpec { name: "rosenbrock-disk".into(), dims: vec![2] },
        ],
        algorithms: vec![
            AlgorithmSpec::Pmode(PmodeConfig::default()),
            AlgorithmSpec::Pmode(PmodeConfig::cmode()),
            AlgorithmSpec::Heco(HecoConfig::default()),
            AlgorithmSpec::Heco(HecoConfig::hecode()),
        ],
        runs: 3,
        budget_per_dim: 2_000,
        base_seed: 99,
        out_dir: tmp.path().join(out),
        jobs,
        problem_files: Vec::new(),
        trajectory: true,
    };
    for (jobs, out) in [(1, "serial"), (4, "parallel"), (1, "again")] {
        let report = run_experiment(&config(jobs, out)).map_err(|e| e.to_string())?;
        check(report.failures == 0, || format!("{} failed runs", report.failures))?;
        check(report.records.iter().all(|r| r.evaluations <= r.max_evaluations), || "budget exceeded".into())?;
    }
    let serial = files_under(&tmp.path().join("serial"));
    check(serial.len() == 24 + 16 + 2 * 3, || format!("{} files written", serial.len()))?;
    check(serial == files_under(&tmp.path().join("parallel")), || "jobs=4 output differs from jobs=1".into())?;
    check(serial == files_under(&tmp.path().join("again")), || "rerun output differs".into())?;
    Ok(format!("{checked} repeated runs identical; {} artifacts identical across jobs=1, jobs=4 and a rerun", serial.len()))
}

fn c8_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..10_000 {
        let n = rng.random_range(1..=8);
        let set: Vec<(f64, f64)> =
            (0..n).map(|_| (rng.random_range(0..5) as f64, rng.random_range(0..4) as f64)).collect();
        check(nondominated(&set) == brute_nondominated(&set), || format!("nondominated trial {trial}: {set:?}"))?;

        let runs: Vec<_> = (0..n)
            .map(|_| {
                let violations: Vec<f64> = (0..2)
                    .map(|_| if rng.random_bool(0.6) { 0.0 } else { rng.random_range(1..4) as f64 * 0.5 })
                    .collect();
                run_record(rng.random_range(-3..4) as f64, violations)
            })
            .collect();
        let s = summarize(&runs).map_err(|e| e.to_string())?;
        let (best, med, worst) = brute_summary(&runs);
        check((s.best, s.median, s.worst) == (best, med, worst), || format!("summarize trial {trial}"))?;
        let feasible = runs.iter().filter(|r| r.v == 0.0).count();
        check(s.sr == 100.0 * feasible as f64 / n as f64, || format!("SR trial {trial}"))?;

        let stats: Vec<_> = (0..n)
            .map(|a| {
                let feasible = rng.random_bool(0.5);
                stats_entry(
                    a,
                    [0.0, 40.0, 100.0][rng.random_range(0..3)],
                    rng.random_range(0..3) as f64,
                    rng.random_range(0..4) as f64,
                    feasible,
                    rng.random_range(0..4) as f64,
                    if feasible { 0.0 } else { rng.random_range(1..4) as f64 },
                )
            })
            .collect();
        let mean_keys: Vec<_> = stats.iter().map(mean_key).collect();
        let median_keys: Vec<_> = stats.iter().map(median_key).collect();
        check(rank_by_mean(&stats) == brute_ranks(&mean_keys), || format!("rank_by_mean trial {trial}"))?;
        check(rank_by_median(&stats) == brute_ranks(&median_keys), || format!("rank_by_median trial {trial}"))?;
    }
    Ok("10000 random instances each for nondominated, summarize, rank_by_mean and rank_by_median".into())
}
