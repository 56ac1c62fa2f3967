use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Expr, Problem, DEFAULT_DELTA};
use crate::error::{Error, Result};

/// Names served by [`Registry::builtin`].
pub const BUILTIN_NAMES: [&str; 5] = ["sphere-linear", "rosenbrock-box", "rosenbrock-disk", "eq-line", "cec-meta"];

/// Prefix for externally supplied benchmark definitions, e.g. `cec-meta:C01`.
const CEC_META: &str = "cec-meta";

/// Looks up a built-in problem.
pub fn registry_get(name: &str, dim: usize) -> Result<Problem> {
    Registry::builtin().get(name, dim)
}

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

fn builtin(name: &str, dim: usize) -> Option<Result<Problem>> {
    let unsupported = || Err(Error::UnsupportedDimension { name: name.to_string(), dim });
    let p = match name {
        "sphere-linear" => {
            if dim == 0 {
                return Some(unsupported());
            }
            let half = dim as f64 / 2.0;
            Problem::new(name, vec![-100.0; dim], vec![100.0; dim], sphere)
                .map(|p| p.with_inequality(move |x| x.iter().sum::<f64>() - half))
        }
        "rosenbrock-box" => {
            if dim < 2 {
                return Some(unsupported());
            }
            Problem::new(name, vec![-1.0; dim], vec![2.0; dim], rosenbrock)
        }
        "rosenbrock-disk" => {
            if dim != 2 {
                return Some(unsupported());
            }
            Problem::new(name, vec![-1.5; 2], vec![1.5; 2], rosenbrock)
                .map(|p| p.with_inequality(|x| x[0] * x[0] + x[1] * x[1] - 2.0))
        }
        "eq-line" => {
            if dim < 2 {
                return Some(unsupported());
            }
            Problem::new(name, vec![-100.0; dim], vec![100.0; dim], sphere).map(|p| p.with_equality(|x| x[0] - x[1]))
        }
        _ => return None,
    };
    Some(p)
}

/// Table-style metadata carried by externally supplied benchmark problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CecMeta {
    /// e.g. "Non Separable", "Separable", "Rotated".
    #[serde(default)]
    pub objective_type: String,
    pub equalities: usize,
    pub inequalities: usize,
    /// Separability tag per constraint group, e.g. ["Separable", "Non Separable"].
    #[serde(default)]
    pub separability: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bounds {
    /// Same `[lower, upper]` for every coordinate.
    Uniform([f64; 2]),
    PerDim(Vec<[f64; 2]>),
}

/// One problem in a definition file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDef {
    pub name: String,
    pub dim: usize,
    pub bounds: Bounds,
    #[serde(default)]
    pub delta: Option<f64>,
    pub f: String,
    #[serde(default)]
    pub g: Vec<String>,
    #[serde(default)]
    pub h: Vec<String>,
    #[serde(default)]
    pub meta: Option<CecMeta>,
}

/// A definition file: one or more `[[problem]]` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub problem: Vec<ProblemDef>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

impl ProblemDef {
    pub fn build(&self) -> Result<Problem> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::InvalidProblem(format!("{}: dim must be positive", self.name)));
        }
        let (lower, upper): (Vec<f64>, Vec<f64>) = match &self.bounds {
            Bounds::Uniform([l, u]) => (vec![*l; n], vec![*u; n]),
            Bounds::PerDim(b) => {
                if b.len() != n {
                    return Err(Error::InvalidProblem(format!(
                        "{}: {} bounds given for dim {}",
                        self.name,
                        b.len(),
                        n
                    )));
                }
                b.iter().map(|[l, u]| (*l, *u)).unzip()
            }
        };
        if let Some(meta) = &self.meta {
            if meta.equalities != self.h.len() || meta.inequalities != self.g.len() {
                return Err(Error::InvalidProblem(format!(
                    "{}: metadata declares E={} I={} but {} equality and {} inequality expressions were given",
                    self.name,
                    meta.equalities,
                    meta.inequalities,
                    self.h.len(),
                    self.g.len()
                )));
            }
        }
        let parse = |src: &str| -> Result<Expr> {
            let e = Expr::parse(src)?;
            if e.arity() > n {
                return Err(Error::InvalidProblem(format!(
                    "{}: expression `{src}` uses x{} but dim is {n}",
                    self.name,
                    e.arity()
                )));
            }
            Ok(e)
        };
        let f = parse(&self.f)?;
        let mut p = Problem::new(self.name.clone(), lower, upper, move |x| f.eval(x))?
            .with_delta(self.delta.unwrap_or(DEFAULT_DELTA))?;
        for src in &self.g {
            let g = parse(src)?;
            p = p.with_inequality(move |x| g.eval(x));
        }
        for src in &self.h {
            let h = parse(src)?;
            p = p.with_equality(move |x| h.eval(x));
        }
        Ok(p)
    }
}

/// Built-in problems plus any externally loaded definitions.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    external: BTreeMap<String, ProblemDef>,
}

impl Registry {
    pub fn builtin() -> Self {
        Self::default()
    }

    /// Registers every problem in a definition file. Definitions are validated eagerly.
    pub fn load_file(&mut self, path: impl AsRef<Path>) -> Result<usize> {
        let text = std::fs::read_to_string(path)?;
        self.load_str(&text)
    }

    pub fn load_str(&mut self, text: &str) -> Result<usize> {
        let file = ProblemFile::parse(text)?;
        for def in &file.problem {
            def.build()?;
        }
        let count = file.problem.len();
        for def in file.problem {
            self.external.insert(def.name.clone(), def);
        }
        Ok(count)
    }

    pub fn names(&self) -> Vec<String> {
        BUILTIN_NAMES
            .iter()
            .map(|s| s.to_string())
            .chain(self.external.keys().cloned())
            .collect()
    }

    pub fn definition(&self, name: &str) -> Option<&ProblemDef> {
        self.external.get(name.strip_prefix("cec-meta:").unwrap_or(name))
    }

    pub fn get(&self, name: &str, dim: usize) -> Result<Problem> {
        if let Some(p) = builtin(name, dim) {
            return p;
        }
        if name == CEC_META {
            return Err(Error::InvalidProblem(
                "`cec-meta` serves externally supplied definitions; load a problem file and use `cec-meta:<name>`"
                    .into(),
            ));
        }
        match self.definition(name) {
            Some(def) if def.dim == dim => def.build(),
            Some(def) => Err(Error::UnsupportedDimension { name: def.name.clone(), dim }),
            None => Err(Error::UnknownProblem { name: name.to_string(), registered: self.names() }),
        }
    }
}
