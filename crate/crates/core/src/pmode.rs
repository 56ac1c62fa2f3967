//! Nondominance-based bi-objective DE over `(f, v)` with PCA-projection mixed
//! in (PMODE). With `p_pca = 0` it is the plain baseline (CMODE).

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{crossover_binomial, mutate_rand_1, repair_bounds, RepairMode};
use crate::pca::{default_retained, pca_projection};
use crate::problem::{Evaluation, Individual, Problem};
use crate::stats::RunRecord;
use crate::tracker::Tracker;

/// `a` Pareto-dominates `b` on `(f, v)`. NaN compares as `+inf`.
pub fn dominates(a: &Evaluation, b: &Evaluation) -> bool {
    dominates_pair((a.objective_key(), a.violation_key()), (b.objective_key(), b.violation_key()))
}

pub fn dominates_pair(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Indices of the members not dominated by any other member, ascending.
pub fn nondominated(set: &[(f64, f64)]) -> Vec<usize> {
    (0..set.len())
        .filter(|&i| !set.iter().any(|other| dominates_pair(*other, set[i])))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PmodeConfig {
    pub population: usize,
    pub subpopulation: usize,
    pub f_range: [f64; 2],
    pub cr_range: [f64; 2],
    /// Generations between infeasible-solution replacements.
    pub replacement_interval: usize,
    pub p_pca: f64,
    /// Retained principal directions; `None` picks a default from the dimension.
    pub m_dims: Option<usize>,
    /// Evaluation budget; `0` means `20000 * dim`.
    pub max_evaluations: u64,
    /// Repair for DE trials. PCA children are always clamped.
    pub repair: RepairMode,
    pub trajectory: bool,
    /// Name used in records; `None` picks one from `p_pca`.
    pub label: Option<String>,
}

impl Default for PmodeConfig {
    fn default() -> Self {
        Self {
            population: 180,
            subpopulation: 8,
            f_range: [0.5, 0.6],
            cr_range: [0.9, 0.95],
            replacement_interval: 22,
            p_pca: 0.1,
            m_dims: None,
            max_evaluations: 0,
            repair: RepairMode::ResampleOperator,
            trajectory: false,
            label: None,
        }
    }
}

impl PmodeConfig {
    /// The baseline without PCA-projection.
    pub fn cmode() -> Self {
        Self { p_pca: 0.0, ..Self::default() }
    }

    pub fn name(&self) -> String {
        match &self.label {
            Some(label) => label.clone(),
            None if self.p_pca > 0.0 => "PMODE".into(),
            None => "CMODE".into(),
        }
    }

    pub fn budget(&self, dim: usize) -> u64 {
        if self.max_evaluations == 0 {
            20_000 * dim as u64
        } else {
            self.max_evaluations
        }
    }

    pub fn retained(&self, dim: usize) -> usize {
        self.m_dims.unwrap_or_else(|| default_retained(dim))
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.subpopulation < 2 || self.subpopulation > self.population {
            return bad(format!(
                "subpopulation {} must lie in 2..={}",
                self.subpopulation, self.population
            ));
        }
        if self.population < 5 {
            return bad(format!("population {} is below 5", self.population));
        }
        if !(0.0..=1.0).contains(&self.p_pca) {
            return bad(format!("p_pca {} is outside [0, 1]", self.p_pca));
        }
        for (name, [lo, hi]) in [("f_range", self.f_range), ("cr_range", self.cr_range)] {
            if !(lo <= hi && lo >= 0.0 && hi.is_finite()) {
                return bad(format!("{name} [{lo}, {hi}] is not a valid range"));
            }
        }
        if self.replacement_interval == 0 {
            return bad("replacement_interval must be positive".into());
        }
        let m = self.retained(dim);
        if m == 0 || m > dim {
            return bad(format!("m_dims {m} must lie in 1..={dim}"));
        }
        let budget = self.budget(dim);
        if budget < (self.population + self.subpopulation) as u64 {
            return bad(format!(
                "budget {budget} is smaller than one generation ({} + {})",
                self.population, self.subpopulation
            ));
        }
        Ok(())
    }
}

/// State visible to an observer after each generation.
pub struct PmodeGeneration<'a> {
    pub generation: u64,
    pub evaluations: u64,
    pub population: &'a [Individual],
    pub archive_len: usize,
    /// `(child, replaced)` pairs made this generation.
    pub replacements: &'a [(Individual, Individual)],
}

pub fn pmode_run(problem: &Problem, config: &PmodeConfig, seed: u64) -> Result<RunRecord> {
    pmode_run_observed(problem, config, seed, |_| {})
}

pub fn pmode_run_observed<O>(problem: &Problem, config: &PmodeConfig, seed: u64, mut observer: O) -> Result<RunRecord>
where
    O: FnMut(&PmodeGeneration),
{
    let dim = problem.dim();
    config.validate(dim)?;
    let budget = config.budget(dim);
    let retained = config.retained(dim);
    let mu = config.population;
    let lambda = config.subpopulation;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tracker = Tracker::new(budget, config.trajectory);

    let mut pop = Vec::with_capacity(mu);
    for _ in 0..mu {
        let ind = problem.individual(problem.random_point(&mut rng))?;
        tracker.observe(&ind);
        pop.push(ind);
    }
    tracker.checkpoint();
    let mut archive: Vec<Individual> = Vec::new();
    let mut generation = 0u64;
    let mut replacements = Vec::new();

    while tracker.evaluations() + lambda as u64 <= budget {
        generation += 1;
        let f = rng.random_range(config.f_range[0]..=config.f_range[1]);
        let cr = rng.random_range(config.cr_range[0]..=config.cr_range[1]);
        let q: Vec<usize> = index::sample(&mut rng, mu, lambda).into_vec();

        let xs: Vec<&[f64]> = pop.iter().map(|p| p.x.as_slice()).collect();
        let mut projected: Option<Vec<Vec<f64>>> = None;
        let mut children = Vec::with_capacity(lambda);
        for (k, &target) in q.iter().enumerate() {
            let x = if rng.random::<f64>() < config.p_pca {
                if projected.is_none() {
                    let members: Vec<&[f64]> = q.iter().map(|&j| xs[j]).collect();
                    projected = Some(pca_projection(&members, retained)?);
                }
                let x = projected.as_ref().expect("computed above")[k].clone();
                repair_bounds(x, problem, RepairMode::Clamp, &mut rng, |_| Vec::new())
            } else {
                let x = de_trial(&xs, target, f, cr, &mut rng)?;
                repair_bounds(x, problem, config.repair, &mut rng, |r| {
                    de_trial(&xs, target, f, cr, r).expect("population size validated")
                })
            };
            children.push(x);
        }
        drop(xs);

        let children: Vec<Individual> = children
            .into_iter()
            .map(|x| {
                let ind = problem.individual(x)?;
                tracker.observe(&ind);
                Ok(ind)
            })
            .collect::<Result<_>>()?;

        let objectives: Vec<(f64, f64)> =
            children.iter().map(|c| (c.eval.objective_key(), c.eval.violation_key())).collect();
        let front = nondominated(&objectives);

        replacements.clear();
        let mut replaced = vec![false; lambda];
        for &c in &front {
            let targets: Vec<usize> = (0..lambda)
                .filter(|&k| !replaced[k] && dominates(&children[c].eval, &pop[q[k]].eval))
                .collect();
            if targets.is_empty() {
                continue;
            }
            let k = targets[rng.random_range(0..targets.len())];
            replaced[k] = true;
            let old = std::mem::replace(&mut pop[q[k]], children[c].clone());
            replacements.push((children[c].clone(), old));
        }

        if !front.iter().any(|&c| children[c].is_feasible()) {
            let least = front
                .iter()
                .copied()
                .reduce(|a, b| if objectives[b].1 < objectives[a].1 { b } else { a })
                .expect("nonempty front");
            archive.push(children[least].clone());
        }

        if generation % config.replacement_interval as u64 == 0 {
            infeasible_replacement(&mut pop, &mut archive, &mut rng);
        }

        tracker.checkpoint();
        observer(&PmodeGeneration {
            generation,
            evaluations: tracker.evaluations(),
            population: &pop,
            archive_len: archive.len(),
            replacements: &replacements,
        });
    }

    Ok(tracker.finish(problem, &config.name(), seed))
}

fn de_trial<R: Rng + ?Sized>(xs: &[&[f64]], target: usize, f: f64, cr: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mutant = mutate_rand_1(xs, target, f, rng)?;
    crossover_binomial(xs[target], &mutant, cr, rng)
}

/// Archived solutions overwrite randomly chosen population members, sparing
/// the best feasible one if any; the archive is then cleared.
fn infeasible_replacement<R: Rng + ?Sized>(pop: &mut [Individual], archive: &mut Vec<Individual>, rng: &mut R) {
    if archive.is_empty() {
        return;
    }
    let protected = (0..pop.len())
        .filter(|&i| pop[i].is_feasible())
        .reduce(|a, b| if pop[b].eval.objective_key() < pop[a].eval.objective_key() { b } else { a });
    let candidates: Vec<usize> = (0..pop.len()).filter(|&i| Some(i) != protected).collect();
    let count = archive.len().min(candidates.len());
    let chosen = index::sample(rng, candidates.len(), count);
    for (slot, ind) in chosen.into_iter().zip(archive.drain(..)) {
        pop[candidates[slot]] = ind;
    }
    archive.clear();
}
