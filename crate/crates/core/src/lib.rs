//! Constrained differential evolution with PCA-based operators.
//!
//! Two algorithm families share the problem model, DE operators and
//! statistics code here: [`pmode`] (Pareto-dominance multi-objective DE with
//! an optional PCA mutation) and [`hecopde`] (weighted-subproblem DE with
//! strategy competition and a PCA projection of the elite set).

pub mod error;
pub mod experiment;
mod float_serde;
pub mod hecopde;
pub mod linalg;
pub mod operators;
pub mod pca;
pub mod pmode;
pub mod problem;
pub mod stats;
pub mod strategy;
mod tracker;
pub mod wilcoxon;

pub use error::{Error, Result};
pub use problem::{feasibility_order, registry_get, Evaluation, Individual, Problem, Registry};
pub use stats::{summarize, total_rank, ProblemStats, RankTable, RunRecord};
