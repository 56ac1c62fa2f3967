//! Constrained problems, violation degree, and the built-in problem registry.
//!
//! A problem minimizes `f(x)` inside a box `[L, U]` subject to inequality
//! constraints `g_i(x) <= 0` and equality constraints `h_j(x) = 0`. Equalities
//! are relaxed by a tolerance `delta`, so the violation of an equality is
//! `max(0, |h_j(x)| - delta)`.

mod expr;
mod registry;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use expr::Expr;
pub use registry::{registry_get, CecMeta, ProblemDef, ProblemFile, Registry, BUILTIN_NAMES};

/// Default equality tolerance.
pub const DEFAULT_DELTA: f64 = 1e-4;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A box-constrained problem with optional inequality and equality constraints.
///
/// Immutable after construction; cloning only bumps reference counts.
#[derive(Clone)]
pub struct Problem {
    name: String,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: ScalarFn,
    inequalities: Vec<ScalarFn>,
    equalities: Vec<ScalarFn>,
    delta: f64,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("inequalities", &self.inequalities.len())
            .field("equalities", &self.equalities.len())
            .field("delta", &self.delta)
            .finish()
    }
}

impl Problem {
    pub fn new<F>(name: impl Into<String>, lower: Vec<f64>, upper: Vec<f64>, objective: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if lower.is_empty() {
            return Err(Error::InvalidProblem("dimension must be positive".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] < upper[i])) {
            return Err(Error::InvalidProblem(format!(
                "bound {} is empty: [{}, {}]",
                i + 1,
                lower[i],
                upper[i]
            )));
        }
        Ok(Self {
            name: name.into(),
            lower,
            upper,
            objective: Arc::new(objective),
            inequalities: Vec::new(),
            equalities: Vec::new(),
            delta: DEFAULT_DELTA,
        })
    }

    /// Adds an inequality constraint `g(x) <= 0`.
    pub fn with_inequality<F>(mut self, g: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.inequalities.push(Arc::new(g));
        self
    }

    /// Adds an equality constraint `h(x) = 0`.
    pub fn with_equality<F>(mut self, h: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.equalities.push(Arc::new(h));
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidProblem(format!("equality tolerance must be finite and >= 0, got {delta}")));
        }
        self.delta = delta;
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn num_inequalities(&self) -> usize {
        self.inequalities.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.equalities.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.inequalities.len() + self.equalities.len()
    }

    pub fn in_bounds(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| l <= v && v <= u)
    }

    /// Objective, per-constraint violations and total violation degree at `x`.
    ///
    /// Calls the objective and each constraint exactly once. A non-finite
    /// constraint value sets that violation and the total to `+inf` and raises
    /// `non_finite`; a non-finite objective is kept as-is and also raises the flag.
    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let objective = (self.objective)(x);
        let mut non_finite = !objective.is_finite();

        let mut inequality_violations = Vec::with_capacity(self.inequalities.len());
        for g in &self.inequalities {
            let value = g(x);
            if value.is_finite() {
                inequality_violations.push(value.max(0.0));
            } else {
                non_finite = true;
                inequality_violations.push(f64::INFINITY);
            }
        }
        let mut equality_violations = Vec::with_capacity(self.equalities.len());
        for h in &self.equalities {
            let value = h(x);
            if value.is_finite() {
                equality_violations.push((value.abs() - self.delta).max(0.0));
            } else {
                non_finite = true;
                equality_violations.push(f64::INFINITY);
            }
        }

        let mut violation = 0.0;
        for v in inequality_violations.iter().chain(&equality_violations) {
            violation += v;
        }

        Ok(Evaluation {
            objective,
            inequality_violations,
            equality_violations,
            violation,
            feasible: violation == 0.0,
            non_finite,
        })
    }

    /// Uniform point in the box: `x_i = L_i + (U_i - L_i) * rand`.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let unit: Vec<f64> = (0..self.dim()).map(|_| rng.random::<f64>()).collect();
        self.scale_unit(&unit)
    }

    pub(crate) fn scale_unit(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(r, (l, u))| l + (u - l) * r)
            .collect()
    }

    /// Evaluates `x` into an [`Individual`].
    pub fn individual(&self, x: Vec<f64>) -> Result<Individual> {
        let eval = self.evaluate(&x)?;
        Ok(Individual { x, eval })
    }
}

/// Result of evaluating one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objective: f64,
    pub inequality_violations: Vec<f64>,
    pub equality_violations: Vec<f64>,
    /// Total violation degree `v(x)`, summed in constraint order.
    pub violation: f64,
    pub feasible: bool,
    /// Some objective or constraint value was NaN or infinite.
    pub non_finite: bool,
}

impl Evaluation {
    /// Objective with NaN mapped to `+inf`, for comparisons.
    pub fn objective_key(&self) -> f64 {
        if self.objective.is_nan() {
            f64::INFINITY
        } else {
            self.objective
        }
    }

    pub fn violation_key(&self) -> f64 {
        if self.violation.is_nan() {
            f64::INFINITY
        } else {
            self.violation
        }
    }

    /// All per-constraint violations, inequalities first.
    pub fn constraint_violations(&self) -> impl Iterator<Item = f64> + '_ {
        self.inequality_violations.iter().chain(&self.equality_violations).copied()
    }
}

/// Feasibility rule: feasible before infeasible, feasible by objective,
/// infeasible by violation degree.
pub fn feasibility_order(a: &Evaluation, b: &Evaluation) -> Ordering {
    match (a.feasible, b.feasible) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => a.objective_key().total_cmp(&b.objective_key()),
        (false, false) => a.violation_key().total_cmp(&b.violation_key()),
    }
}

/// A decision vector with its cached evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub x: Vec<f64>,
    pub eval: Evaluation,
}

impl Individual {
    pub fn objective(&self) -> f64 {
        self.eval.objective
    }

    pub fn violation(&self) -> f64 {
        self.eval.violation
    }

    pub fn is_feasible(&self) -> bool {
        self.eval.feasible
    }
}

/// Index of the best individual under [`feasibility_order`]; ties keep the first.
pub fn best_index(pop: &[Individual]) -> Option<usize> {
    (0..pop.len()).reduce(|best, i| {
        if feasibility_order(&pop[i].eval, &pop[best].eval) == Ordering::Less {
            i
        } else {
            best
        }
    })
}
