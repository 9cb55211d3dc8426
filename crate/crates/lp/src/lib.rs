//! Solver-neutral linear programs over nonnegative variables.

#![allow(clippy::needless_range_loop)]

use std::fmt::Write as _;

use thiserror::Error;

mod lu;
mod simplex;

pub use simplex::SimplexSolver;

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Ge,
    Le,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Le => "<=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min c·v` subject to the constraints, with `v ≥ 0` implicit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub var_names: Vec<String>,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("constraint {constraint:?} references undeclared variable {var}")]
    UnknownVariable { constraint: String, var: VarId },
    #[error("non-finite number in {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed constraint residual of a reported optimum.
    pub feasibility: f64,
    /// Allowed negative excursion of a variable.
    pub nonnegativity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-6,
            nonnegativity: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Empty unless the status is optimal.
    pub values: Vec<f64>,
    /// Row duals `y` with `c - Aᵀy ≥ 0` at optimality.
    pub duals: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// A constraint or bound that a candidate assignment breaks.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplayViolation {
    Constraint { index: usize, residual: f64 },
    Negative { var: VarId, value: f64 },
}

pub trait LpSolver {
    fn solve(&self, lp: &LinearProgram, tol: &Tolerances) -> Result<LpSolution, LpError>;
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: f64) -> VarId {
        self.var_names.push(name.into());
        self.objective.push(cost);
        self.objective.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.constraints.iter().map(|c| c.coeffs.len()).sum()
    }

    pub fn check(&self) -> Result<(), LpError> {
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective".into()));
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() || c.coeffs.iter().any(|e| !e.1.is_finite()) {
                return Err(LpError::NonFinite(c.name.clone()));
            }
            if let Some(&(var, _)) = c.coeffs.iter().find(|e| e.0 >= self.num_vars()) {
                return Err(LpError::UnknownVariable {
                    constraint: c.name.clone(),
                    var,
                });
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, v)| c * v).sum()
    }

    /// Left-hand side of constraint `i` at `values`.
    pub fn activity(&self, i: usize, values: &[f64]) -> f64 {
        self.constraints[i]
            .coeffs
            .iter()
            .map(|&(j, a)| a * values[j])
            .sum()
    }

    /// Checks every constraint and bound at `values`.
    pub fn replay(&self, values: &[f64], tol: &Tolerances) -> Vec<ReplayViolation> {
        let mut out = Vec::new();
        for (var, &value) in values.iter().enumerate() {
            if value < -tol.nonnegativity {
                out.push(ReplayViolation::Negative { var, value });
            }
        }
        for (index, c) in self.constraints.iter().enumerate() {
            let lhs = self.activity(index, values);
            let residual = match c.relation {
                Relation::Eq => (lhs - c.rhs).abs(),
                Relation::Ge => (c.rhs - lhs).max(0.0),
                Relation::Le => (lhs - c.rhs).max(0.0),
            };
            if residual > tol.feasibility {
                out.push(ReplayViolation::Constraint { index, residual });
            }
        }
        out
    }

    /// Renders the program in the CPLEX LP text format.
    pub fn to_lp_text(&self) -> String {
        let names: Vec<String> = self
            .var_names
            .iter()
            .enumerate()
            .map(|(j, n)| lp_name(n, 'v', j))
            .collect();
        let mut out = String::from("Minimize\n obj:");
        let terms: Vec<(VarId, f64)> = self
            .objective
            .iter()
            .copied()
            .enumerate()
            .filter(|e| e.1 != 0.0)
            .collect();
        write_terms(&mut out, &terms, &names);
        out.push_str("\nSubject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, " {}:", lp_name(&c.name, 'c', i));
            write_terms(&mut out, &c.coeffs, &names);
            let _ = writeln!(out, " {} {}", c.relation.symbol(), c.rhs);
        }
        out.push_str("Bounds\n");
        for n in &names {
            let _ = writeln!(out, " {n} >= 0");
        }
        out.push_str("End\n");
        out
    }
}

fn write_terms(out: &mut String, terms: &[(VarId, f64)], names: &[String]) {
    if terms.is_empty() {
        out.push_str(" 0");
        if let Some(n) = names.first() {
            let _ = write!(out, " {n}");
        }
        return;
    }
    for &(j, a) in terms {
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", a.abs(), names[j]);
    }
}

/// LP-format identifiers: letters, digits and `_`, not starting with a
/// digit; empty names get a positional default.
fn lp_name(name: &str, prefix: char, index: usize) -> String {
    let mut s: String = name
        .chars()
        .map(|ch| {
            if ch.is_ascii_alphanumeric() || ch == '_' {
                ch
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() {
        s = format!("{prefix}{index}");
    } else if s.starts_with(|ch: char| ch.is_ascii_digit()) {
        s.insert(0, prefix);
    }
    s
}
