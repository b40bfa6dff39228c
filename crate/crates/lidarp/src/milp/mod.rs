//! Solver-agnostic MILP representation plus an internal LP/MILP solver.
//!
//! Models are always maximized.  Coefficients are exact rationals; the solver
//! can run either in exact rational arithmetic or in `f64` with tolerances.

mod bb;
mod lp_format;
mod scalar;
mod simplex;

use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::instance::Rat;

pub use bb::{solve_bb, BbConfig, BoundSample};
pub use lp_format::{export_lp, format_big, format_solution, import_solution, parse_big};
pub use scalar::Scalar;
pub use simplex::{solve_lp, Arithmetic, LpResult, LpStatus};

pub type VarId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MilpError {
    #[error("name collision: `{0}` is used more than once")]
    NameCollision(String),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("parse error on line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("variable `{name}` is binary but reads {value}")]
    ValueOutOfBounds { name: String, value: String },
    #[error("model is malformed: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub kind: VarKind,
    /// `None` is minus infinity.
    pub lower: Option<BigRational>,
    /// `None` is plus infinity.
    pub upper: Option<BigRational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(BigRational, VarId)>,
    pub sense: Sense,
    pub rhs: BigRational,
}

impl LinearConstraint {
    pub fn activity(&self, values: &[BigRational]) -> BigRational {
        self.terms.iter().fold(BigRational::zero(), |acc, (c, v)| acc + c * &values[*v])
    }

    pub fn is_satisfied(&self, values: &[BigRational], tol: &BigRational) -> bool {
        let a = self.activity(values);
        match self.sense {
            Sense::Le => a <= &self.rhs + tol,
            Sense::Ge => a >= &self.rhs - tol,
            Sense::Eq => (a - &self.rhs).abs() <= *tol,
        }
    }
}

/// A maximization MILP with named variables.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: Vec<(BigRational, VarId)>,
    /// Variable name to the formulation entity it encodes.
    pub metadata: BTreeMap<String, String>,
    by_name: HashMap<String, VarId>,
}

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn rat(v: Rat) -> BigRational {
    BigRational::new(BigInt::from(*v.numer()), BigInt::from(*v.denom()))
}

fn merge_terms(terms: impl IntoIterator<Item = (BigRational, VarId)>) -> Vec<(BigRational, VarId)> {
    let mut acc: BTreeMap<VarId, BigRational> = BTreeMap::new();
    for (c, v) in terms {
        *acc.entry(v).or_insert_with(BigRational::zero) += c;
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(v, c)| (c, v)).collect()
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: Option<BigRational>,
        upper: Option<BigRational>,
    ) -> VarId {
        let id = self.variables.len();
        let name = name.into();
        let (lower, upper) = match kind {
            VarKind::Binary => (Some(BigRational::zero()), Some(BigRational::one())),
            VarKind::Continuous => (lower, upper),
        };
        self.by_name.entry(name.clone()).or_insert(id);
        self.variables.push(Variable { id, name, kind, lower, upper });
        id
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, VarKind::Binary, None, None)
    }

    /// Continuous variable on `[lower, upper]`; `None` bounds are infinite.
    pub fn add_continuous(&mut self, name: impl Into<String>, lower: Option<BigRational>, upper: Option<BigRational>) -> VarId {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    pub fn tag(&mut self, var: VarId, tag: impl Into<String>) {
        let name = self.variables[var].name.clone();
        self.metadata.insert(name, tag.into());
    }

    /// Adds a constraint; repeated variables are merged and zero terms dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (BigRational, VarId)>,
        sense: Sense,
        rhs: BigRational,
    ) {
        let terms = merge_terms(terms);
        self.constraints.push(LinearConstraint { name: name.into(), terms, sense, rhs });
    }

    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (BigRational, VarId)>) {
        self.objective = merge_terms(terms);
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied().filter(|&id| self.variables[id].name == name)
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn n_binary(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn n_continuous(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Continuous).count()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, values: &[BigRational]) -> BigRational {
        self.objective.iter().fold(BigRational::zero(), |acc, (c, v)| acc + c * &values[*v])
    }

    /// Names of constraints (and variables, for bound violations) that the
    /// point violates by more than `tol`.
    pub fn violations(&self, values: &[BigRational], tol: &BigRational) -> Vec<String> {
        let mut out = Vec::new();
        for v in &self.variables {
            let x = &values[v.id];
            if v.lower.as_ref().is_some_and(|l| x < &(l - tol)) || v.upper.as_ref().is_some_and(|u| x > &(u + tol)) {
                out.push(v.name.clone());
            }
        }
        for c in &self.constraints {
            if !c.is_satisfied(values, tol) {
                out.push(c.name.clone());
            }
        }
        out
    }

    /// Checks the structural invariants of the model.
    pub fn validate(&self) -> Result<(), MilpError> {
        for (i, v) in self.variables.iter().enumerate() {
            if v.id != i {
                return Err(MilpError::Malformed(format!("variable `{}` has id {} at position {i}", v.name, v.id)));
            }
            if let (Some(l), Some(u)) = (&v.lower, &v.upper) {
                if l > u {
                    return Err(MilpError::Malformed(format!("variable `{}` has lower > upper", v.name)));
                }
            }
        }
        let n = self.variables.len();
        for c in &self.constraints {
            if c.terms.iter().any(|(_, v)| *v >= n) {
                return Err(MilpError::Malformed(format!("constraint `{}` references a missing variable", c.name)));
            }
        }
        if self.objective.iter().any(|(_, v)| *v >= n) {
            return Err(MilpError::Malformed("objective references a missing variable".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Optimal,
    /// Stopped with an incumbent; relative gap if a bound is known.
    Feasible { gap: Option<f64> },
    Infeasible,
    Unbounded,
    TimeLimit,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iterations: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Value per variable id; empty when no feasible point is known.
    pub values: Vec<BigRational>,
    /// Objective of `values`, recomputed from the model.
    pub objective: Option<BigRational>,
    /// Best proven upper bound on the optimum.
    pub bound: Option<BigRational>,
    pub stats: SolveStats,
    pub warnings: Vec<String>,
    /// Incumbent/bound trace recorded during branch-and-bound.
    pub log: Vec<BoundSample>,
}

impl MilpSolution {
    pub fn has_solution(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, var: VarId) -> &BigRational {
        &self.values[var]
    }

    /// True if the variable is present and equals one.
    pub fn is_one(&self, var: VarId) -> bool {
        self.values.get(var).is_some_and(|v| v.is_one())
    }

    pub fn gap(&self) -> Option<f64> {
        let obj = self.objective.as_ref()?;
        let bound = self.bound.as_ref()?;
        let diff = f64_of(&(bound - obj));
        let denom = f64_of(obj).abs().max(1.0);
        Some((diff / denom).max(0.0))
    }
}

pub fn f64_of(v: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeated_terms_are_merged() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x");
        let y = m.add_binary("y");
        m.add_constraint("c", vec![(int(1), x), (int(2), y), (int(3), x), (int(-2), y)], Sense::Le, int(4));
        assert_eq!(m.constraints[0].terms, vec![(int(4), x)]);
    }

    #[test]
    fn lookup_by_name() {
        let mut m = MilpModel::new();
        let a = m.add_continuous("a", Some(int(0)), None);
        let b = m.add_binary("b#1#2");
        assert_eq!(m.var("a"), Some(a));
        assert_eq!(m.var("b#1#2"), Some(b));
        assert_eq!(m.var("c"), None);
        assert_eq!((m.n_binary(), m.n_continuous()), (1, 1));
    }
}
