use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// A node limit stopped branch-and-bound before the gap closed. The
    /// solution carries the incumbent, if any, and the proven gap.
    LimitReached,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::LimitReached => "limit_reached",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which engine produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Presolve,
    DenseSimplex,
    SparseSimplex,
    InteriorPoint,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub nodes: usize,
    pub presolved_rows: usize,
    pub presolved_vars: usize,
    pub elapsed: Duration,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// Variable values in the original problem's indexing. Empty when no
    /// feasible point is known.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Proven relative optimality gap for MILP solves; `None` for LPs.
    pub gap: Option<f64>,
    /// Best proven upper bound on the objective (MILP only).
    pub bound: Option<f64>,
    pub engine: Option<Engine>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn infeasible() -> Self {
        Self::empty(Status::Infeasible)
    }

    pub fn unbounded() -> Self {
        Self::empty(Status::Unbounded)
    }

    fn empty(status: Status) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            gap: None,
            bound: None,
            engine: None,
            stats: SolveStats::default(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// True when `values` holds a feasible point (optimal or incumbent).
    pub fn has_point(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, v: crate::Var) -> f64 {
        self.values[v.0]
    }
}
