//! Brute-force oracles shared by the integration tests. They avoid the
//! library's own code paths on purpose.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use pcade::stats::{ProblemStats, RunRecord};
use rand::Rng;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

pub fn random_symmetric(n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    a
}

/// Roots of the characteristic polynomial of a symmetric matrix with n <= 3,
/// ascending, from closed forms.
pub fn char_poly_roots(a: &[Vec<f64>]) -> Vec<f64> {
    let mut roots = match a.len() {
        1 => vec![a[0][0]],
        2 => {
            // λ² - tr λ + det
            let tr = a[0][0] + a[1][1];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
            vec![(tr - disc) / 2.0, (tr + disc) / 2.0]
        }
        3 => {
            // trigonometric solution of the depressed cubic
            let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
            let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
            let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
            if p2 == 0.0 {
                return vec![q; 3];
            }
            let p = (p2 / 6.0).sqrt();
            let b = |i: usize, j: usize| (a[i][j] - if i == j { q } else { 0.0 }) / p;
            let det_b = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
                + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
            let phi = (det_b / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
            let l1 = q + 2.0 * p * phi.cos();
            let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            vec![l1, 3.0 * q - l1 - l3, l3]
        }
        n => panic!("closed form only for n <= 3, got {n}"),
    };
    roots.sort_by(f64::total_cmp);
    roots
}

/// O(n²) Pareto filter written from the definition.
pub fn brute_nondominated(set: &[(f64, f64)]) -> Vec<usize> {
    let mut out = Vec::new();
    'outer: for i in 0..set.len() {
        for j in 0..set.len() {
            let no_worse = set[j].0 <= set[i].0 && set[j].1 <= set[i].1;
            let strictly = set[j].0 < set[i].0 || set[j].1 < set[i].1;
            if no_worse && strictly {
                continue 'outer;
            }
        }
        out.push(i);
    }
    out
}

pub fn run_record(f: f64, violations: Vec<f64>) -> RunRecord {
    let v = violations.iter().sum();
    RunRecord {
        problem: "P".into(),
        dim: 2,
        algorithm: "A".into(),
        seed: 0,
        best_x: vec![0.0, 0.0],
        f,
        v,
        constraint_violations: violations,
        evaluations: 1,
        max_evaluations: 1,
        trajectory: None,
        error: None,
    }
}

/// `(best, median, worst)` objective values by sorting on an explicit key.
pub fn brute_summary(runs: &[RunRecord]) -> (f64, f64, f64) {
    let mut keyed: Vec<(u8, f64, usize)> = runs
        .iter()
        .enumerate()
        .map(|(i, r)| if r.v == 0.0 { (0, r.f, i) } else { (1, r.v, i) })
        .collect();
    keyed.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = keyed.len();
    (runs[keyed[0].2].f, runs[keyed[(n - 1) / 2].2].f, runs[keyed[n - 1].2].f)
}

pub fn stats_entry(algorithm: usize, sr: f64, vio: f64, mean: f64, median_feasible: bool, median: f64, vbar: f64) -> ProblemStats {
    ProblemStats {
        problem: "P".into(),
        dim: 2,
        algorithm: format!("A{algorithm}"),
        runs: 25,
        best: median,
        median,
        worst: median,
        mean,
        std: 0.0,
        sr,
        c: [0; 3],
        vbar,
        vio,
        median_feasible,
    }
}

/// Competition ranks from a sorted list of keys: an entry's rank is the
/// sorted position of the first entry with an equal key, plus one.
pub fn brute_ranks<K: PartialOrd + Copy>(keys: &[K]) -> Vec<u32> {
    let mut sorted = keys.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    keys.iter()
        .map(|k| 1 + sorted.iter().position(|s| s.partial_cmp(k) == Some(std::cmp::Ordering::Equal)).unwrap() as u32)
        .collect()
}

pub fn mean_key(s: &ProblemStats) -> (f64, f64, f64) {
    (-s.sr, s.vio, s.mean)
}

pub fn median_key(s: &ProblemStats) -> (u8, f64) {
    if s.median_feasible {
        (0, s.median)
    } else {
        (1, s.vbar)
    }
}
