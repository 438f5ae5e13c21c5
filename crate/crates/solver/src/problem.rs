//! Solver-agnostic problem representation.

use std::fmt;

use crate::error::SolverError;

/// Handle to a variable of a [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Le,
    Eq,
    Ge,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Le => "<=",
            Comparator::Eq => "=",
            Comparator::Ge => ">=",
        }
    }

    /// Signed amount by which `lhs` violates `lhs (cmp) rhs`; zero when satisfied.
    pub fn violation(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Comparator::Le => (lhs - rhs).max(0.0),
            Comparator::Ge => (rhs - lhs).max(0.0),
            Comparator::Eq => (lhs - rhs).abs(),
        }
    }
}

/// One linear constraint `Σ coeff·x (cmp) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: Option<String>,
    pub terms: Vec<(Var, f64)>,
    pub cmp: Comparator,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * x[v.0]).sum()
    }
}

/// A maximisation LP with bounded variables and general rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub(crate) lower: Vec<f64>,
    pub(crate) upper: Vec<f64>,
    pub(crate) objective: Vec<f64>,
    pub(crate) names: Vec<Option<String>>,
    pub(crate) rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, objective: f64) -> Var {
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(objective);
        self.names.push(None);
        Var(self.lower.len() - 1)
    }

    pub fn add_named_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> Var {
        let v = self.add_var(lower, upper, objective);
        self.names[v.0] = Some(name.into());
        v
    }

    pub fn add_row(&mut self, terms: &[(Var, f64)], cmp: Comparator, rhs: f64) -> usize {
        self.rows.push(Row {
            name: None,
            terms: terms.to_vec(),
            cmp,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn add_named_row(
        &mut self,
        name: impl Into<String>,
        terms: &[(Var, f64)],
        cmp: Comparator,
        rhs: f64,
    ) -> usize {
        let i = self.add_row(terms, cmp, rhs);
        self.rows[i].name = Some(name.into());
        i
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn bounds(&self, v: Var) -> (f64, f64) {
        (self.lower[v.0], self.upper[v.0])
    }

    pub fn set_bounds(&mut self, v: Var, lower: f64, upper: f64) {
        self.lower[v.0] = lower;
        self.upper[v.0] = upper;
    }

    pub fn objective_coeff(&self, v: Var) -> f64 {
        self.objective[v.0]
    }

    pub fn set_objective_coeff(&mut self, v: Var, c: f64) {
        self.objective[v.0] = c;
    }

    pub fn var_name(&self, v: Var) -> String {
        self.names[v.0].clone().unwrap_or_else(|| v.to_string())
    }

    pub fn row_name(&self, i: usize) -> String {
        self.rows[i].name.clone().unwrap_or_else(|| format!("r{i}"))
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or row violation of `x` (absolute).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            worst = worst.max(row.cmp.violation(row.activity(x), row.rhs));
        }
        worst
    }

    /// Checks the structural invariants: finite data, rows referencing declared
    /// variables and non-crossing bounds.
    pub fn validate(&self) -> Result<(), SolverError> {
        for j in 0..self.num_vars() {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(SolverError::Malformed(format!(
                    "variable {} has invalid bounds [{l}, {u}]",
                    self.var_name(Var(j))
                )));
            }
            if l > u {
                return Err(SolverError::Malformed(format!(
                    "variable {} has crossing bounds [{l}, {u}]",
                    self.var_name(Var(j))
                )));
            }
            if !self.objective[j].is_finite() {
                return Err(SolverError::Malformed(format!(
                    "variable {} has a non-finite objective coefficient",
                    self.var_name(Var(j))
                )));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(SolverError::Malformed(format!(
                    "row {} has a non-finite right-hand side",
                    self.row_name(i)
                )));
            }
            for &(v, a) in &row.terms {
                if v.0 >= self.num_vars() {
                    return Err(SolverError::Malformed(format!(
                        "row {} references undeclared variable {v}",
                        self.row_name(i)
                    )));
                }
                if !a.is_finite() {
                    return Err(SolverError::Malformed(format!(
                        "row {} has a non-finite coefficient on {}",
                        self.row_name(i),
                        self.var_name(v)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A [`LinearProgram`] with a subset of variables restricted to {0, 1}.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpProblem {
    pub lp: LinearProgram,
    pub binaries: Vec<Var>,
}

impl MilpProblem {
    pub fn new(lp: LinearProgram) -> Self {
        Self {
            lp,
            binaries: Vec::new(),
        }
    }

    /// Adds a variable with bounds [0, 1] and marks it binary.
    pub fn add_binary(&mut self, name: impl Into<String>, objective: f64) -> Var {
        let v = self.lp.add_named_var(name, 0.0, 1.0, objective);
        self.binaries.push(v);
        v
    }

    pub fn mark_binary(&mut self, v: Var) {
        if !self.binaries.contains(&v) {
            self.binaries.push(v);
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.lp.validate()?;
        for &b in &self.binaries {
            if b.0 >= self.lp.num_vars() {
                return Err(SolverError::Malformed(format!(
                    "binary index {b} out of range ({} variables)",
                    self.lp.num_vars()
                )));
            }
            let (l, u) = self.lp.bounds(b);
            if l < 0.0 || u > 1.0 {
                return Err(SolverError::Malformed(format!(
                    "binary {} has bounds [{l}, {u}] outside [0, 1]",
                    self.lp.var_name(b)
                )));
            }
        }
        Ok(())
    }

    /// Largest distance of a binary from {0, 1}.
    pub fn max_integrality_violation(&self, x: &[f64]) -> f64 {
        self.binaries
            .iter()
            .map(|b| {
                let v = x[b.0];
                (v - v.round()).abs()
            })
            .fold(0.0, f64::max)
    }
}
