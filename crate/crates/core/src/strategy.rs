//! Competition among mutation/crossover strategies with per-strategy circular
//! memories for `F` and `CR`.
//!
//! Strategy `k` is picked with probability `q_k = (n_k + n0) / Σ (n_i + n0)`
//! where `n_k` counts successes. When some `q_k` falls below the reset
//! threshold the counts restart from zero.

use rand::Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use serde::{Deserialize, Serialize};

pub const DEFAULT_MEMORY_SIZE: usize = 5;
pub const DEFAULT_PRIOR: u32 = 2;
pub const DEFAULT_RESET_THRESHOLD: f64 = 1.0 / 20.0;

const PARAM_SCALE: f64 = 0.1;
const MEMORY_INIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mutation {
    CurrentToPbest,
    Randrl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Crossover {
    Binomial,
    Exponential,
}

/// The four competing strategies, indexed as in [`StrategyState`].
pub const STRATEGIES: [(Mutation, Crossover); 4] = [
    (Mutation::CurrentToPbest, Crossover::Binomial),
    (Mutation::CurrentToPbest, Crossover::Exponential),
    (Mutation::Randrl, Crossover::Binomial),
    (Mutation::Randrl, Crossover::Exponential),
];

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyState {
    successes: Vec<u64>,
    prior: u32,
    reset_threshold: f64,
    memory_f: Vec<Vec<f64>>,
    memory_cr: Vec<Vec<f64>>,
    cursor: Vec<usize>,
    success_f: Vec<Vec<f64>>,
    success_cr: Vec<Vec<f64>>,
}

impl StrategyState {
    /// `strategies` competitors, memories of size `memory_size` filled with 0.5.
    ///
    /// # Panics
    /// If `strategies`, `memory_size` or `prior` is zero.
    pub fn new(strategies: usize, memory_size: usize, prior: u32, reset_threshold: f64) -> Self {
        assert!(strategies > 0 && memory_size > 0 && prior > 0, "strategy state needs K, H, n0 > 0");
        Self {
            successes: vec![0; strategies],
            prior,
            reset_threshold,
            memory_f: vec![vec![MEMORY_INIT; memory_size]; strategies],
            memory_cr: vec![vec![MEMORY_INIT; memory_size]; strategies],
            cursor: vec![0; strategies],
            success_f: vec![Vec::new(); strategies],
            success_cr: vec![Vec::new(); strategies],
        }
    }

    pub fn strategies(&self) -> usize {
        self.successes.len()
    }

    pub fn memory_size(&self) -> usize {
        self.memory_f[0].len()
    }

    pub fn successes(&self) -> &[u64] {
        &self.successes
    }

    pub fn memory_f(&self, k: usize) -> &[f64] {
        &self.memory_f[k]
    }

    pub fn memory_cr(&self, k: usize) -> &[f64] {
        &self.memory_cr[k]
    }

    pub fn cursor(&self, k: usize) -> usize {
        self.cursor[k]
    }

    /// Overwrites one memory slot. Intended for tests and warm starts.
    pub fn set_memory(&mut self, k: usize, slot: usize, f: f64, cr: f64) {
        self.memory_f[k][slot] = f;
        self.memory_cr[k][slot] = cr;
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let n0 = self.prior as f64;
        let total: f64 = self.successes.iter().map(|&n| n as f64 + n0).sum();
        self.successes.iter().map(|&n| (n as f64 + n0) / total).collect()
    }

    pub fn select_strategy<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let q = self.probabilities();
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        for (k, qk) in q.iter().enumerate() {
            acc += qk;
            if u < acc {
                return k;
            }
        }
        q.len() - 1
    }

    pub fn record_success(&mut self, k: usize, f: f64, cr: f64) {
        self.successes[k] += 1;
        self.success_f[k].push(f);
        self.success_cr[k].push(cr);
    }

    /// Writes each nonempty success set into its memory slot (Lehmer mean of
    /// `F`, arithmetic mean of `CR`), advances that cursor, clears the sets,
    /// and resets the success counts if some probability fell below the
    /// threshold.
    pub fn end_generation(&mut self) {
        let h = self.memory_size();
        for k in 0..self.strategies() {
            let sf = &self.success_f[k];
            if sf.is_empty() {
                continue;
            }
            let lehmer = sf.iter().map(|f| f * f).sum::<f64>() / sf.iter().sum::<f64>();
            let cr = &self.success_cr[k];
            let mean_cr = cr.iter().sum::<f64>() / cr.len() as f64;
            let slot = self.cursor[k];
            self.memory_f[k][slot] = lehmer;
            self.memory_cr[k][slot] = mean_cr;
            self.cursor[k] = (slot + 1) % h;
            self.success_f[k].clear();
            self.success_cr[k].clear();
        }
        if self.probabilities().iter().any(|&q| q < self.reset_threshold) {
            self.successes.iter_mut().for_each(|n| *n = 0);
        }
    }

    /// Draws `(F, CR)` from a uniformly chosen memory slot of strategy `k`:
    /// `F ~ Cauchy(M_F, 0.1)` redrawn while `<= 0` and capped at 1,
    /// `CR ~ Normal(M_CR, 0.1)` clamped to `[0, 1]`.
    pub fn sample_params<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> (f64, f64) {
        let slot = rng.random_range(0..self.memory_size());
        let loc_f = self.memory_f[k][slot];
        let cauchy = Cauchy::new(loc_f, PARAM_SCALE).expect("finite memory");
        let f = loop {
            let f = cauchy.sample(rng);
            if f > 0.0 {
                break f.min(1.0);
            }
        };
        let normal = Normal::new(self.memory_cr[k][slot], PARAM_SCALE).expect("finite memory");
        let cr = normal.sample(rng).clamp(0.0, 1.0);
        (f, cr)
    }
}

impl Default for StrategyState {
    fn default() -> Self {
        Self::new(STRATEGIES.len(), DEFAULT_MEMORY_SIZE, DEFAULT_PRIOR, DEFAULT_RESET_THRESHOLD)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_start() {
        assert_eq!(StrategyState::default().probabilities(), vec![0.25; 4]);
    }

    #[test]
    fn probabilities_follow_counts() {
        let mut s = StrategyState::default();
        s.record_success(0, 0.5, 0.5);
        assert_eq!(s.successes(), &[1, 0, 0, 0]);
        assert!((s.probabilities()[0] - 1.0 / 3.0).abs() < 1e-15);
        s.record_success(0, 0.5, 0.5);
        assert_eq!(s.successes()[0], 2);
        assert!((s.probabilities()[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn selection_frequencies() {
        let mut s = StrategyState::default();
        s.record_success(0, 0.5, 0.5);
        s.record_success(0, 0.5, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 4];
        let draws = 100_000;
        for _ in 0..draws {
            counts[s.select_strategy(&mut rng)] += 1;
        }
        for (c, q) in counts.iter().zip([0.4, 0.2, 0.2, 0.2]) {
            assert!((*c as f64 / draws as f64 - q).abs() < 0.01);
        }
    }

    #[test]
    fn memory_updates() {
        let mut s = StrategyState::default();
        s.end_generation();
        assert_eq!(s.memory_f(0), &[0.5; 5]);
        assert_eq!(s.cursor(0), 0);

        s.record_success(1, 0.5, 0.9);
        s.end_generation();
        assert_eq!((s.memory_f(1)[0], s.memory_cr(1)[0]), (0.5, 0.9));
        assert_eq!(s.cursor(1), 1);

        s.record_success(2, 0.2, 0.1);
        s.record_success(2, 0.6, 0.3);
        s.end_generation();
        assert!((s.memory_f(2)[0] - 0.5).abs() < 1e-15);
        assert!((s.memory_cr(2)[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn cursor_wraps() {
        let mut s = StrategyState::new(1, 3, 2, 0.0);
        for g in 0..7 {
            s.record_success(0, 0.1 * (g + 1) as f64, 0.5);
            s.end_generation();
        }
        assert_eq!(s.cursor(0), 7 % 3);
    }

    #[test]
    fn reset_restores_uniform() {
        let mut s = StrategyState::default();
        for _ in 0..100 {
            s.record_success(3, 0.5, 0.5);
        }
        // q_0 = 2 / 108 < 1/20
        s.end_generation();
        assert_eq!(s.successes(), &[0; 4]);
        assert_eq!(s.probabilities(), vec![0.25; 4]);
    }

    #[test]
    fn sampled_params_respect_ranges() {
        let mut s = StrategyState::default();
        s.set_memory(0, 0, 1.5, 0.5);
        s.set_memory(0, 1, 1.5, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5_000 {
            let (f, cr) = s.sample_params(0, &mut rng);
            assert!(f > 0.0 && f <= 1.0);
            assert!((0.0..=1.0).contains(&cr));
        }
    }

    #[test]
    fn cr_sampling_mean() {
        let s = StrategyState::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 10_000;
        let mean = (0..n).map(|_| s.sample_params(0, &mut rng).1).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.02);
    }
}
