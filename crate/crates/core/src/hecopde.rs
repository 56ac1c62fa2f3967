//! Decomposition-based DE over the helper objectives `(ẽ, f, v)` (HECO-PDE).
//!
//! Each generation draws `λ` members; the `i`-th drawn member is improved on
//! its own weighted subproblem `f_i`, whose weights move from `f` towards
//! `ẽ` and `v` as the run progresses. Trials come from four competing DE
//! strategies or, with probability `p_pca`, from PCA-projection of the drawn
//! members. With `p_pca = 0` it is the plain baseline (HECO-DE).

use std::cmp::Ordering;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    crossover_binomial, crossover_exponential, mutate_current_to_pbest, mutate_randrl_1, repair_bounds, RepairMode,
};
use crate::pca::{default_retained, pca_projection};
use crate::problem::{best_index, feasibility_order, Individual, Problem};
use crate::stats::RunRecord;
use crate::strategy::{Crossover, Mutation, StrategyState, STRATEGIES};
use crate::tracker::Tracker;

/// Best objective value of a population: the smallest violation when no
/// member is feasible, otherwise the smallest feasible `f`.
pub fn f_star(pop: &[Individual]) -> Result<f64> {
    if pop.is_empty() {
        return Err(Error::Empty("f_star of an empty population"));
    }
    let feasible = pop.iter().filter(|p| p.is_feasible()).map(|p| p.eval.objective_key());
    Ok(feasible
        .reduce(f64::min)
        .unwrap_or_else(|| pop.iter().map(|p| p.eval.violation_key()).fold(f64::INFINITY, f64::min)))
}

/// `|f(x) - f*|`.
pub fn e_tilde(f: f64, f_star: f64) -> f64 {
    (f - f_star).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightTriple {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

/// Weights of subproblem `i` (one-based) at generation `t`.
pub fn weights(t: u64, t_max: u64, i: usize, lambda: usize) -> WeightTriple {
    let r = t as f64 / t_max as f64;
    let s = i as f64 / lambda as f64;
    WeightTriple {
        w1: r.powf(20.0 * i as f64),
        w2: s * r.powf(5.0 * s),
        w3: (1.0 - s) * (1.0 - r).powf(5.0 * s),
    }
}

/// Max-min normalization to `[0, 1]`. A constant group maps to 0. Non-finite
/// values map to 1 and are left out of the min and max.
pub fn normalize_group(values: &[f64]) -> Vec<f64> {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|&v| {
            if !v.is_finite() {
                1.0
            } else if hi > lo {
                (v - lo) / (hi - lo)
            } else {
                0.0
            }
        })
        .collect()
}

/// Normalized `(ẽ, f, v)` of one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriObjective {
    pub e: f64,
    pub f: f64,
    pub v: f64,
}

/// `w1 ẽ + w2 v + w3 f`.
pub fn subproblem_fitness(w: WeightTriple, y: TriObjective) -> f64 {
    w.w1 * y.e + w.w2 * y.v + w.w3 * y.f
}

/// Normalizes `(ẽ, f, v)` of `group` (relative to `f_star`) and returns each
/// member's fitness under `w`.
pub fn group_fitness(group: &[&Individual], f_star: f64, w: WeightTriple) -> Vec<f64> {
    let e = normalize_group(&group.iter().map(|p| e_tilde(p.objective(), f_star)).collect::<Vec<_>>());
    let f = normalize_group(&group.iter().map(|p| p.objective()).collect::<Vec<_>>());
    let v = normalize_group(&group.iter().map(|p| p.violation()).collect::<Vec<_>>());
    (0..group.len())
        .map(|j| subproblem_fitness(w, TriObjective { e: e[j], f: f[j], v: v[j] }))
        .collect()
}

/// `round(μ0 - (t / T_max)(μ0 - μ_Tmax))`.
pub fn population_size_schedule(t: u64, t_max: u64, mu0: usize, mu_final: usize) -> usize {
    let r = t as f64 / t_max as f64;
    (mu0 as f64 - r * (mu0 as f64 - mu_final as f64)).round() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HecoConfig {
    pub subpopulation: usize,
    /// Initial population; `None` means `12 * dim`.
    pub initial_population: Option<usize>,
    /// Final population; `None` means `subpopulation`.
    pub final_population: Option<usize>,
    pub memory_size: usize,
    pub prior: u32,
    pub reset_threshold: f64,
    /// Fraction of the population eligible as `x_pbest`.
    pub pbest: f64,
    pub p_pca: f64,
    pub m_dims: Option<usize>,
    /// Evaluation budget; `0` means `20000 * dim`.
    pub max_evaluations: u64,
    /// Archive cap as a multiple of the current population size.
    pub archive_factor: usize,
    /// Repair for DE trials. PCA trials are always clamped.
    pub repair: RepairMode,
    pub trajectory: bool,
    /// Name used in records; `None` picks one from `p_pca`.
    pub label: Option<String>,
}

impl Default for HecoConfig {
    fn default() -> Self {
        Self {
            subpopulation: 12,
            initial_population: None,
            final_population: None,
            memory_size: crate::strategy::DEFAULT_MEMORY_SIZE,
            prior: crate::strategy::DEFAULT_PRIOR,
            reset_threshold: crate::strategy::DEFAULT_RESET_THRESHOLD,
            pbest: 0.11,
            p_pca: 0.1,
            m_dims: None,
            max_evaluations: 0,
            archive_factor: 4,
            repair: RepairMode::ResampleOperator,
            trajectory: false,
            label: None,
        }
    }
}

impl HecoConfig {
    /// The baseline without PCA-projection.
    pub fn hecode() -> Self {
        Self { p_pca: 0.0, ..Self::default() }
    }

    pub fn name(&self) -> String {
        match &self.label {
            Some(label) => label.clone(),
            None if self.p_pca > 0.0 => "HECO-PDE".into(),
            None => "HECO-DE".into(),
        }
    }

    pub fn budget(&self, dim: usize) -> u64 {
        if self.max_evaluations == 0 {
            20_000 * dim as u64
        } else {
            self.max_evaluations
        }
    }

    pub fn mu0(&self, dim: usize) -> usize {
        self.initial_population.unwrap_or(12 * dim)
    }

    pub fn mu_final(&self) -> usize {
        self.final_population.unwrap_or(self.subpopulation)
    }

    pub fn retained(&self, dim: usize) -> usize {
        self.m_dims.unwrap_or_else(|| default_retained(dim))
    }

    /// Number of generations the budget allows.
    pub fn t_max(&self, dim: usize) -> u64 {
        self.budget(dim).saturating_sub(self.mu0(dim) as u64) / self.subpopulation.max(1) as u64
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let (lambda, mu0, mu_final) = (self.subpopulation, self.mu0(dim), self.mu_final());
        if lambda < 2 {
            return bad(format!("subpopulation {lambda} is below 2"));
        }
        if !(lambda <= mu_final && mu_final <= mu0) {
            return bad(format!(
                "population sizes must satisfy subpopulation {lambda} <= final {mu_final} <= initial {mu0}"
            ));
        }
        if mu_final < 4 {
            return bad(format!("final population {mu_final} is below 4"));
        }
        if self.memory_size == 0 || self.prior == 0 {
            return bad("memory_size and prior must be positive".into());
        }
        if !(0.0..1.0).contains(&self.reset_threshold) {
            return bad(format!("reset_threshold {} is outside [0, 1)", self.reset_threshold));
        }
        if !(self.pbest > 0.0 && self.pbest <= 1.0) {
            return bad(format!("pbest {} is outside (0, 1]", self.pbest));
        }
        if !(0.0..=1.0).contains(&self.p_pca) {
            return bad(format!("p_pca {} is outside [0, 1]", self.p_pca));
        }
        let m = self.retained(dim);
        if m == 0 || m > dim {
            return bad(format!("m_dims {m} must lie in 1..={dim}"));
        }
        if self.archive_factor == 0 {
            return bad("archive_factor must be positive".into());
        }
        if self.t_max(dim) == 0 {
            return bad(format!(
                "budget {} leaves no generation after {mu0} initial evaluations",
                self.budget(dim)
            ));
        }
        Ok(())
    }
}

/// State visible to an observer after each generation.
pub struct HecoGeneration<'a> {
    pub generation: u64,
    pub t_max: u64,
    pub evaluations: u64,
    pub population: &'a [Individual],
    pub target_size: usize,
    pub archive_len: usize,
    pub archive_cap: usize,
    pub strategy: &'a StrategyState,
}

pub fn hecopde_run(problem: &Problem, config: &HecoConfig, seed: u64) -> Result<RunRecord> {
    hecopde_run_observed(problem, config, seed, |_| {})
}

pub fn hecopde_run_observed<O>(problem: &Problem, config: &HecoConfig, seed: u64, mut observer: O) -> Result<RunRecord>
where
    O: FnMut(&HecoGeneration),
{
    let dim = problem.dim();
    config.validate(dim)?;
    let budget = config.budget(dim);
    let t_max = config.t_max(dim);
    let (lambda, mu0, mu_final) = (config.subpopulation, config.mu0(dim), config.mu_final());
    let retained = config.retained(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tracker = Tracker::new(budget, config.trajectory);
    let mut strategy = StrategyState::new(STRATEGIES.len(), config.memory_size, config.prior, config.reset_threshold);

    let mut pop = Vec::with_capacity(mu0);
    for _ in 0..mu0 {
        let ind = problem.individual(problem.random_point(&mut rng))?;
        tracker.observe(&ind);
        pop.push(ind);
    }
    tracker.checkpoint();
    let mut archive: Vec<Vec<f64>> = Vec::new();

    for t in 0..t_max {
        let q: Vec<usize> = index::sample(&mut rng, pop.len(), lambda).into_vec();
        let xs: Vec<&[f64]> = pop.iter().map(|p| p.x.as_slice()).collect();
        let pop_star = f_star(&pop)?;
        let pop_best = best_index(&pop).expect("nonempty");
        let mut projected: Option<Vec<Vec<f64>>> = None;
        let mut children: Vec<(usize, Individual)> = Vec::new();

        for (k, &target) in q.iter().enumerate() {
            let w = weights(t, t_max, k + 1, lambda);
            let mut used = None;
            let y = if rng.random::<f64>() < config.p_pca {
                if projected.is_none() {
                    let members: Vec<&[f64]> = q.iter().map(|&j| xs[j]).collect();
                    projected = Some(pca_projection(&members, retained)?);
                }
                let y = projected.as_ref().expect("computed above")[k].clone();
                repair_bounds(y, problem, RepairMode::Clamp, &mut rng, |_| Vec::new())
            } else {
                let s = strategy.select_strategy(&mut rng);
                let (f, cr) = strategy.sample_params(s, &mut rng);
                used = Some((s, f, cr));
                let refs: Vec<&Individual> = pop.iter().collect();
                let key = group_fitness(&refs, pop_star, w);
                let trial = Trial { xs: &xs, archive: &archive, key: &key, pbest: config.pbest, target, f, cr, strategy: s };
                let y = trial.generate(&mut rng)?;
                repair_bounds(y, problem, config.repair, &mut rng, |r| trial.generate(r).expect("population size validated"))
            };
            let y = problem.individual(y)?;
            tracker.observe(&y);

            // f* over P and the trial
            let star = if feasibility_order(&y.eval, &pop[pop_best].eval) == Ordering::Less {
                f_star(std::slice::from_ref(&y))?
            } else {
                pop_star
            };
            let mut group: Vec<&Individual> = q.iter().map(|&j| &pop[j]).collect();
            group.push(&y);
            let fitness = group_fitness(&group, star, w);
            if fitness[lambda] < fitness[k] {
                if let Some((s, f, cr)) = used {
                    strategy.record_success(s, f, cr);
                }
                children.push((target, y));
            }
        }
        drop(xs);
        strategy.end_generation();

        for (target, y) in children {
            let parent = std::mem::replace(&mut pop[target], y);
            archive.push(parent.x);
        }

        let mu_t = population_size_schedule(t + 1, t_max, mu0, mu_final);
        shrink(&mut pop, mu_t, &mut rng);
        let cap = config.archive_factor * mu_t;
        while archive.len() > cap {
            let victim = rng.random_range(0..archive.len());
            archive.swap_remove(victim);
        }

        tracker.checkpoint();
        observer(&HecoGeneration {
            generation: t + 1,
            t_max,
            evaluations: tracker.evaluations(),
            population: &pop,
            target_size: mu_t,
            archive_len: archive.len(),
            archive_cap: cap,
            strategy: &strategy,
        });
    }

    Ok(tracker.finish(problem, &config.name(), seed))
}

/// Removes random members other than the best until `mu` remain.
fn shrink<R: Rng + ?Sized>(pop: &mut Vec<Individual>, mu: usize, rng: &mut R) {
    while pop.len() > mu.max(1) {
        let best = best_index(pop).expect("nonempty");
        let mut victim = rng.random_range(0..pop.len() - 1);
        if victim >= best {
            victim += 1;
        }
        pop.swap_remove(victim);
    }
}

struct Trial<'a> {
    xs: &'a [&'a [f64]],
    archive: &'a [Vec<f64>],
    key: &'a [f64],
    pbest: f64,
    target: usize,
    f: f64,
    cr: f64,
    strategy: usize,
}

impl Trial<'_> {
    fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let (mutation, crossover) = STRATEGIES[self.strategy];
        let mutant = match mutation {
            Mutation::CurrentToPbest => {
                mutate_current_to_pbest(self.xs, self.archive, self.target, self.f, self.pbest, self.key, rng)?
            }
            Mutation::Randrl => mutate_randrl_1(self.xs, self.target, self.f, self.key, rng)?,
        };
        let x = self.xs[self.target];
        match crossover {
            Crossover::Binomial => crossover_binomial(x, &mutant, self.cr, rng),
            Crossover::Exponential => crossover_exponential(x, &mutant, self.cr, rng),
        }
    }
}
