//! Differential-evolution mutations and crossovers, the full-dimension
//! PCA-mutation baseline, and bound repair.
//!
//! Every operator draws only from the `rng` it is given. Each randomized
//! operator has a deterministic core (`*_with` / plain formula functions)
//! taking the random draws explicitly, which is what the tests pin.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pca::PcaBasis;
use crate::problem::Problem;

/// Regeneration attempts before [`RepairMode::ResampleOperator`] falls back to clamping.
pub const RESAMPLE_ATTEMPTS: usize = 20;

/// `count` distinct indices from `0..len`, all different from `exclude`.
pub fn distinct_excluding<R: Rng + ?Sized>(len: usize, exclude: usize, count: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(exclude < len && count < len);
    index::sample(rng, len - 1, count)
        .into_iter()
        .map(|j| if j >= exclude { j + 1 } else { j })
        .collect()
}

/// `base + F (a - b)`.
pub fn rand_1(base: &[f64], a: &[f64], b: &[f64], f: f64) -> Vec<f64> {
    base.iter().zip(a).zip(b).map(|((x, y), z)| x + f * (y - z)).collect()
}

/// `x + F (pbest - x) + F (r1 - r2)`.
pub fn current_to_pbest(x: &[f64], pbest: &[f64], r1: &[f64], r2: &[f64], f: f64) -> Vec<f64> {
    x.iter()
        .zip(pbest)
        .zip(r1.iter().zip(r2))
        .map(|((xi, pb), (a, b))| xi + f * (pb - xi) + f * (a - b))
        .collect()
}

/// DE/rand/1: `x_r1 + F (x_r2 - x_r3)` with `r1, r2, r3, i` mutually distinct.
pub fn mutate_rand_1<T, R>(pop: &[T], i: usize, f: f64, rng: &mut R) -> Result<Vec<f64>>
where
    T: AsRef<[f64]>,
    R: Rng + ?Sized,
{
    if pop.len() < 4 {
        return Err(Error::PopulationTooSmall { needed: 4, got: pop.len() });
    }
    let r = distinct_excluding(pop.len(), i, 3, rng);
    Ok(rand_1(pop[r[0]].as_ref(), pop[r[1]].as_ref(), pop[r[2]].as_ref(), f))
}

/// Indices of the `ceil(p * len)` smallest keys (at least one), stable on ties.
pub fn top_fraction(key: &[f64], p: f64) -> Vec<usize> {
    let count = ((p * key.len() as f64).ceil() as usize).clamp(1, key.len().max(1));
    let mut order: Vec<usize> = (0..key.len()).collect();
    order.sort_by(|&a, &b| key[a].total_cmp(&key[b]));
    order.truncate(count);
    order
}

/// current-to-pbest/1.
///
/// `x_pbest` is uniform over the top `ceil(p |pop|)` members by `key` (lower
/// is better), `x_r1` is uniform over `pop` without `i`, and `x_r2` is uniform
/// over `pop ∪ archive` without `i` and `r1`.
pub fn mutate_current_to_pbest<T, R>(
    pop: &[T],
    archive: &[Vec<f64>],
    i: usize,
    f: f64,
    p: f64,
    key: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>>
where
    T: AsRef<[f64]>,
    R: Rng + ?Sized,
{
    if pop.len() < 3 {
        return Err(Error::PopulationTooSmall { needed: 3, got: pop.len() });
    }
    if key.len() != pop.len() {
        return Err(Error::DimensionMismatch { expected: pop.len(), got: key.len() });
    }
    let top = top_fraction(key, p);
    let pbest = top[rng.random_range(0..top.len())];
    let r1 = distinct_excluding(pop.len(), i, 1, rng)[0];
    let total = pop.len() + archive.len();
    let r2 = loop {
        let r = rng.random_range(0..total);
        if r != i && r != r1 {
            break r;
        }
    };
    let x_r2 = if r2 < pop.len() { pop[r2].as_ref() } else { &archive[r2 - pop.len()] };
    Ok(current_to_pbest(pop[i].as_ref(), pop[pbest].as_ref(), pop[r1].as_ref(), x_r2, f))
}

/// Reorders three drawn indices so the one with the smallest key comes first;
/// the other two keep their draw order. Ties go to the earliest draw.
pub fn randrl_order(drawn: [usize; 3], key: &[f64]) -> [usize; 3] {
    let mut best = 0;
    for j in 1..3 {
        if key[drawn[j]] < key[drawn[best]] {
            best = j;
        }
    }
    let rest: Vec<usize> = (0..3).filter(|&j| j != best).map(|j| drawn[j]).collect();
    [drawn[best], rest[0], rest[1]]
}

/// randrl/1: DE/rand/1 whose base vector is the best of the three draws.
pub fn mutate_randrl_1<T, R>(pop: &[T], i: usize, f: f64, key: &[f64], rng: &mut R) -> Result<Vec<f64>>
where
    T: AsRef<[f64]>,
    R: Rng + ?Sized,
{
    if pop.len() < 4 {
        return Err(Error::PopulationTooSmall { needed: 4, got: pop.len() });
    }
    if key.len() != pop.len() {
        return Err(Error::DimensionMismatch { expected: pop.len(), got: key.len() });
    }
    let r = distinct_excluding(pop.len(), i, 3, rng);
    let [a, b, c] = randrl_order([r[0], r[1], r[2]], key);
    Ok(rand_1(pop[a].as_ref(), pop[b].as_ref(), pop[c].as_ref(), f))
}

fn check_lengths(target: &[f64], mutant: &[f64]) -> Result<()> {
    if target.len() != mutant.len() {
        return Err(Error::DimensionMismatch { expected: target.len(), got: mutant.len() });
    }
    Ok(())
}

/// Binomial crossover with explicit draws: coordinate `j` comes from the
/// mutant when `draws[j] <= cr` or `j == j_rand` (zero-based).
pub fn binomial_with(target: &[f64], mutant: &[f64], cr: f64, j_rand: usize, draws: &[f64]) -> Vec<f64> {
    (0..target.len())
        .map(|j| if draws[j] <= cr || j == j_rand { mutant[j] } else { target[j] })
        .collect()
}

/// Binomial crossover. Draws `j_rand` first, then one uniform per coordinate.
pub fn crossover_binomial<R: Rng + ?Sized>(target: &[f64], mutant: &[f64], cr: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_lengths(target, mutant)?;
    if target.is_empty() {
        return Ok(Vec::new());
    }
    let j_rand = rng.random_range(0..target.len());
    let draws: Vec<f64> = (0..target.len()).map(|_| rng.random::<f64>()).collect();
    Ok(binomial_with(target, mutant, cr, j_rand, &draws))
}

/// Exponential crossover with explicit window: coordinates
/// `start, start+1, ..., start+len-1` (mod D) come from the mutant.
pub fn exponential_with(target: &[f64], mutant: &[f64], start: usize, len: usize) -> Vec<f64> {
    let d = target.len();
    let mut trial = target.to_vec();
    for k in 0..len.min(d) {
        let j = (start + k) % d;
        trial[j] = mutant[j];
    }
    trial
}

/// Exponential crossover. The start is uniform in `0..D`; the run length
/// starts at 0 and grows while successive uniforms are `<= cr`, up to `D - 1`.
pub fn crossover_exponential<R: Rng + ?Sized>(
    target: &[f64],
    mutant: &[f64],
    cr: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_lengths(target, mutant)?;
    let d = target.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let start = rng.random_range(0..d);
    let mut len = 0;
    while len < d - 1 && rng.random::<f64>() <= cr {
        len += 1;
    }
    Ok(exponential_with(target, mutant, start, len))
}

fn signum0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Full-dimension PCA-mutation with explicit perturbations.
///
/// `c[j][i]` is the amount added to the squared projection of individual `j`
/// on direction `i`.
pub fn pca_mutation_with(pop: &[Vec<f64>], c: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = pop.first().map_or(0, Vec::len);
    let basis = PcaBasis::fit(pop, n.max(1))?;
    Ok(pop
        .iter()
        .zip(c)
        .map(|(x, cj)| {
            let y = basis.coordinates(x);
            let mutated: Vec<f64> = y
                .iter()
                .zip(cj)
                .map(|(yi, ci)| signum0(*yi) * (yi * yi + ci).sqrt())
                .collect();
            basis.reconstruct(&mutated)
        })
        .collect())
}

/// PCA-mutation over the whole population: project onto the full eigenbasis,
/// add nondecreasing random amounts in `[0, c_max]` to the squared projection
/// lengths, restore the signs, and map back.
pub fn pca_mutation<R: Rng + ?Sized>(pop: &[Vec<f64>], c_max: f64, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if pop.len() < 2 {
        return Err(Error::PopulationTooSmall { needed: 2, got: pop.len() });
    }
    let n = pop[0].len();
    let c: Vec<Vec<f64>> = pop
        .iter()
        .map(|_| {
            let mut col: Vec<f64> = (0..n).map(|_| c_max * rng.random::<f64>()).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    pca_mutation_with(pop, &c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairMode {
    /// Re-run the generating operator until in bounds; clamp after
    /// [`RESAMPLE_ATTEMPTS`] failures.
    ResampleOperator,
    Clamp,
    Reflect,
}

pub fn clamp_into(x: &mut [f64], problem: &Problem) {
    for ((v, l), u) in x.iter_mut().zip(problem.lower()).zip(problem.upper()) {
        *v = v.clamp(*l, *u);
    }
}

pub fn reflect_into(x: &mut [f64], problem: &Problem) {
    for ((v, l), u) in x.iter_mut().zip(problem.lower()).zip(problem.upper()) {
        if *v < *l || *v > *u {
            if !v.is_finite() {
                *v = v.clamp(*l, *u);
                continue;
            }
            let width = u - l;
            let mut t = (*v - l).rem_euclid(2.0 * width);
            if t > width {
                t = 2.0 * width - t;
            }
            *v = (l + t).clamp(*l, *u);
        }
    }
}

/// Brings `x` into the box. `regenerate` is only called in
/// [`RepairMode::ResampleOperator`].
pub fn repair_bounds<R, G>(x: Vec<f64>, problem: &Problem, mode: RepairMode, rng: &mut R, mut regenerate: G) -> Vec<f64>
where
    R: Rng + ?Sized,
    G: FnMut(&mut R) -> Vec<f64>,
{
    let mut x = x;
    match mode {
        RepairMode::Clamp => clamp_into(&mut x, problem),
        RepairMode::Reflect => reflect_into(&mut x, problem),
        RepairMode::ResampleOperator => {
            let mut attempts = 0;
            while !problem.in_bounds(&x) && attempts < RESAMPLE_ATTEMPTS {
                x = regenerate(rng);
                attempts += 1;
            }
            clamp_into(&mut x, problem);
        }
    }
    x
}
