//! Best-so-far bookkeeping, evaluation counting and checkpoints for one run.

use std::cmp::Ordering;

use crate::problem::{feasibility_order, Individual, Problem};
use crate::stats::{Checkpoint, RunRecord};

/// Number of evenly spaced checkpoints aimed for when trajectories are on.
const CHECKPOINTS: u64 = 200;

pub(crate) struct Tracker {
    best: Option<Individual>,
    evaluations: u64,
    max_evaluations: u64,
    checkpoints: Option<Vec<Checkpoint>>,
    interval: u64,
    next_checkpoint: u64,
}

impl Tracker {
    pub fn new(max_evaluations: u64, trajectory: bool) -> Self {
        let interval = (max_evaluations / CHECKPOINTS).max(1);
        Self {
            best: None,
            evaluations: 0,
            max_evaluations,
            checkpoints: trajectory.then(Vec::new),
            interval,
            next_checkpoint: 0,
        }
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Counts one evaluation of `ind` and updates the best.
    pub fn observe(&mut self, ind: &Individual) {
        self.evaluations += 1;
        assert!(self.evaluations <= self.max_evaluations, "evaluation budget exceeded");
        let better = match &self.best {
            None => true,
            Some(b) => feasibility_order(&ind.eval, &b.eval) == Ordering::Less,
        };
        if better {
            self.best = Some(ind.clone());
        }
    }

    /// Called at generation boundaries.
    pub fn checkpoint(&mut self) {
        if self.evaluations >= self.next_checkpoint {
            self.push_checkpoint();
            while self.next_checkpoint <= self.evaluations {
                self.next_checkpoint += self.interval;
            }
        }
    }

    fn push_checkpoint(&mut self) {
        let (Some(points), Some(best)) = (self.checkpoints.as_mut(), self.best.as_ref()) else {
            return;
        };
        if points.last().is_some_and(|c| c.evaluations >= self.evaluations) {
            return;
        }
        points.push(Checkpoint { evaluations: self.evaluations, best_f: best.objective(), best_v: best.violation() });
    }

    pub fn finish(mut self, problem: &Problem, algorithm: &str, seed: u64) -> RunRecord {
        self.push_checkpoint();
        let best = self.best.expect("at least one evaluation");
        RunRecord {
            problem: problem.name().to_string(),
            dim: problem.dim(),
            algorithm: algorithm.to_string(),
            seed,
            f: best.objective(),
            v: best.violation(),
            constraint_violations: best.eval.constraint_violations().collect(),
            best_x: best.x,
            evaluations: self.evaluations,
            max_evaluations: self.max_evaluations,
            trajectory: self.checkpoints,
            error: None,
        }
    }
}
