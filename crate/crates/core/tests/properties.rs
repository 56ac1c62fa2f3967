mod common;

use pcade::linalg::{sym_eigen, Matrix};
use pcade::problem::Problem;
use pcade::stats::{rank_by_mean, rank_by_median, summarize, RankTable};
use pcade::{registry_get, total_rank};
use proptest::prelude::*;

use common::*;

fn stats_strategy() -> impl Strategy<Value = Vec<pcade::ProblemStats>> {
    prop::collection::vec((0u8..3, 0u8..3, -3i8..4, any::<bool>(), -3i8..4, 1u8..4), 1..7).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(a, (sr, vio, mean, feas, med, vbar))| {
                stats_entry(
                    a,
                    [0.0, 40.0, 100.0][sr as usize],
                    vio as f64,
                    mean as f64,
                    feas,
                    med as f64,
                    if feas { 0.0 } else { vbar as f64 },
                )
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn ranks_match_sorted_keys(stats in stats_strategy()) {
        let mean: Vec<_> = stats.iter().map(mean_key).collect();
        let median: Vec<_> = stats.iter().map(median_key).collect();
        prop_assert_eq!(rank_by_mean(&stats), brute_ranks(&mean));
        prop_assert_eq!(rank_by_median(&stats), brute_ranks(&median));
    }

    #[test]
    fn ranks_survive_monotone_rescaling(stats in stats_strategy(), scale in 0.5f64..4.0, shift in -10.0f64..10.0) {
        let mut moved = stats.clone();
        for s in &mut moved {
            s.mean = (scale * s.mean + shift).exp();
            s.median = scale * s.median + shift;
        }
        prop_assert_eq!(rank_by_mean(&stats), rank_by_mean(&moved));
        prop_assert_eq!(rank_by_median(&stats), rank_by_median(&moved));
    }

    #[test]
    fn ranks_are_at_least_one_and_ties_share(stats in stats_strategy()) {
        let r = rank_by_mean(&stats);
        prop_assert!(r.iter().all(|&x| x >= 1 && x as usize <= stats.len()));
        prop_assert!(r.contains(&1));
    }

    #[test]
    fn totals_ignore_problem_order(
        ranks in prop::collection::vec(prop::collection::vec(1u32..5, 3), 1..10),
        seed in any::<u64>(),
    ) {
        let problems: Vec<String> = (0..ranks.len()).map(|p| format!("C{p:02}")).collect();
        let algorithms: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let table = RankTable { algorithms: algorithms.clone(), problems: problems.clone(), ranks: ranks.clone() };
        let mut order: Vec<usize> = (0..ranks.len()).collect();
        let mut state = seed;
        for i in (1..order.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (state >> 33) as usize % (i + 1));
        }
        let shuffled = RankTable {
            algorithms,
            problems: order.iter().map(|&i| problems[i].clone()).collect(),
            ranks: order.iter().map(|&i| ranks[i].clone()).collect(),
        };
        let direct: Vec<u32> = (0..3).map(|a| 2 * ranks.iter().map(|r| r[a]).sum::<u32>()).collect();
        let got: Vec<u32> = total_rank(&table, &shuffled).unwrap().into_iter().map(|(_, t)| t).collect();
        prop_assert_eq!(got, direct);
    }

    #[test]
    fn summary_matches_sorting_oracle(
        runs in prop::collection::vec((-3i8..4, prop::collection::vec(prop_oneof![Just(0u8), 1u8..4], 2)), 1..9)
    ) {
        let runs: Vec<_> = runs
            .into_iter()
            .map(|(f, v)| run_record(f as f64, v.into_iter().map(|x| x as f64 * 0.5).collect()))
            .collect();
        let s = summarize(&runs).unwrap();
        prop_assert_eq!((s.best, s.median, s.worst), brute_summary(&runs));
        prop_assert!((0.0..=100.0).contains(&s.sr));
        prop_assert!(s.c.iter().sum::<usize>() <= 2);
    }

    #[test]
    fn violation_shrinks_with_delta(h in -1.0f64..1.0, d1 in 0.0f64..0.5, d2 in 0.0f64..0.5) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let make = |delta: f64| {
            Problem::new("eq", vec![-1.0], vec![1.0], |x| x[0])
                .unwrap()
                .with_equality(move |_| h)
                .with_delta(delta)
                .unwrap()
        };
        let v_lo = make(lo).evaluate(&[0.0]).unwrap().violation;
        let v_hi = make(hi).evaluate(&[0.0]).unwrap().violation;
        prop_assert!(v_hi <= v_lo);
        prop_assert!(v_lo >= 0.0);
    }

    #[test]
    fn eigenvalues_match_characteristic_roots(seed in any::<u64>(), n in 1usize..=3) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows = random_symmetric(n, &mut rng);
        let mut got = sym_eigen(&Matrix::from_rows(&rows).unwrap()).unwrap().values;
        got.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(char_poly_roots(&rows)) {
            prop_assert!((g - w).abs() < 1e-7);
        }
    }
}

#[test]
fn repeated_eigenvalues_match_roots() {
    let rows = vec![vec![2.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, -1.0]];
    let mut got = sym_eigen(&Matrix::from_rows(&rows).unwrap()).unwrap().values;
    got.sort_by(f64::total_cmp);
    for (g, w) in got.iter().zip(char_poly_roots(&rows)) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn ten_dim_rank_examples() {
    let read = |name: &str| RankTable::from_csv(&std::fs::read_to_string(data_dir().join(name)).unwrap()).unwrap();
    let mean = read("ranks_mean_10d.csv");
    let median = read("ranks_median_10d.csv");
    let col = |t: &RankTable, a: &str| t.totals()[t.algorithms.iter().position(|x| x == a).unwrap()];
    assert_eq!((col(&mean, "HECO-PDE"), col(&median, "HECO-PDE")), (68, 87));
    assert_eq!((col(&mean, "CMODE"), col(&median, "CMODE")), (236, 207));
    let totals = total_rank(&mean, &median).unwrap();
    assert!(totals.contains(&("HECO-PDE".into(), 155)));
    assert!(totals.contains(&("CMODE".into(), 443)));
}

#[test]
fn unknown_problem_lists_registered_names() {
    match registry_get("nope", 2) {
        Err(pcade::Error::UnknownProblem { registered, .. }) => assert!(registered.contains(&"eq-line".to_string())),
        other => panic!("unexpected {other:?}"),
    }
}
