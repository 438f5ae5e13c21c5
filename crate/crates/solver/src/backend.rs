//! Adapters onto the sparse LP engines used for problems too large for the
//! dense tableau.

use std::rc::Rc;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT,
    ZeroConeT,
};
use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::error::SolverError;
use crate::problem::{Comparator, LinearProgram};
use crate::solution::Status;

pub(crate) struct BackendOutcome {
    pub status: Status,
    pub x: Vec<f64>,
    pub iterations: usize,
}

fn op(c: Comparator) -> ComparisonOp {
    match c {
        Comparator::Le => ComparisonOp::Le,
        Comparator::Eq => ComparisonOp::Eq,
        Comparator::Ge => ComparisonOp::Ge,
    }
}

/// Sparse dual simplex whose solutions can be re-optimised after fixing a
/// variable, which branch-and-bound uses for warm starts.
pub(crate) struct SparseSimplex {
    vars: Vec<Variable>,
}

pub(crate) enum SparseNode {
    Optimal {
        objective: f64,
        x: Vec<f64>,
        handle: Rc<microlp::Solution>,
    },
    Infeasible,
    Unbounded,
}

impl SparseSimplex {
    pub fn solve(lp: &LinearProgram) -> Result<(Self, SparseNode), SolverError> {
        let mut pb = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<Variable> = (0..lp.num_vars())
            .map(|j| pb.add_var(lp.objective[j], (lp.lower[j], lp.upper[j])))
            .collect();
        for row in &lp.rows {
            let terms: Vec<(Variable, f64)> =
                row.terms.iter().map(|&(v, a)| (vars[v.0], a)).collect();
            pb.add_constraint(terms.as_slice(), op(row.cmp), row.rhs);
        }
        let this = Self { vars };
        let node = this.wrap(pb.solve())?;
        Ok((this, node))
    }

    pub fn fix(&self, parent: &microlp::Solution, var: usize, value: f64) -> Result<SparseNode, SolverError> {
        self.wrap(parent.clone().fix_var(self.vars[var], value))
    }

    /// Fixes every `(var, value)` of `path` in turn, starting from `root`.
    pub fn fix_path(&self, root: &microlp::Solution, path: &[(usize, f64)]) -> Result<SparseNode, SolverError> {
        let Some((&(last_var, last_value), head)) = path.split_last() else {
            return Err(SolverError::Numerical {
                backend: "sparse simplex",
                detail: "empty fixing path".into(),
            });
        };
        let mut sol = root.clone();
        for &(var, value) in head {
            sol = match sol.fix_var(self.vars[var], value) {
                Ok(outcome) => outcome.into_solution().map_err(|_| SolverError::Numerical {
                    backend: "sparse simplex",
                    detail: "interrupted without a solution".into(),
                })?,
                Err(microlp::Error::Infeasible) => return Ok(SparseNode::Infeasible),
                Err(microlp::Error::Unbounded) => return Ok(SparseNode::Unbounded),
                Err(e) => {
                    return Err(SolverError::Numerical {
                        backend: "sparse simplex",
                        detail: e.to_string(),
                    })
                }
            };
        }
        self.wrap(sol.fix_var(self.vars[last_var], last_value))
    }

    fn wrap(
        &self,
        res: Result<microlp::SolveOutcome, microlp::Error>,
    ) -> Result<SparseNode, SolverError> {
        match res {
            Ok(outcome) => {
                let sol = outcome.into_solution().map_err(|_| SolverError::Numerical {
                    backend: "sparse simplex",
                    detail: "interrupted without a solution".into(),
                })?;
                let x: Vec<f64> = self.vars.iter().map(|&v| sol.var_value_raw(v)).collect();
                Ok(SparseNode::Optimal {
                    objective: sol.objective(),
                    x,
                    handle: Rc::new(sol),
                })
            }
            Err(microlp::Error::Infeasible) => Ok(SparseNode::Infeasible),
            Err(microlp::Error::Unbounded) => Ok(SparseNode::Unbounded),
            Err(e) => Err(SolverError::Numerical {
                backend: "sparse simplex",
                detail: e.to_string(),
            }),
        }
    }
}

pub(crate) fn solve_sparse_simplex(lp: &LinearProgram) -> Result<BackendOutcome, SolverError> {
    let (_, node) = SparseSimplex::solve(lp)?;
    Ok(match node {
        SparseNode::Optimal { x, handle, .. } => BackendOutcome {
            status: Status::Optimal,
            x,
            iterations: handle.stats().lp_iterations as usize,
        },
        SparseNode::Infeasible => BackendOutcome {
            status: Status::Infeasible,
            x: Vec::new(),
            iterations: 0,
        },
        SparseNode::Unbounded => BackendOutcome {
            status: Status::Unbounded,
            x: Vec::new(),
            iterations: 0,
        },
    })
}

/// Primal-dual interior point through the conic form `Ax + s = b`, `s ∈ K`.
pub(crate) fn solve_interior_point(lp: &LinearProgram) -> Result<BackendOutcome, SolverError> {
    let n = lp.num_vars();
    let mut eq: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut le: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for row in &lp.rows {
        let terms: Vec<(usize, f64)> = row.terms.iter().map(|&(v, a)| (v.0, a)).collect();
        match row.cmp {
            Comparator::Eq => eq.push((terms, row.rhs)),
            Comparator::Le => le.push((terms, row.rhs)),
            Comparator::Ge => le.push((terms.iter().map(|&(j, a)| (j, -a)).collect(), -row.rhs)),
        }
    }
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l == u {
            eq.push((vec![(j, 1.0)], l));
            continue;
        }
        if u.is_finite() {
            le.push((vec![(j, 1.0)], u));
        }
        if l.is_finite() {
            le.push((vec![(j, -1.0)], -l));
        }
    }
    let m = eq.len() + le.len();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut b = Vec::with_capacity(m);
    for (i, (terms, rhs)) in eq.iter().chain(le.iter()).enumerate() {
        for &(j, a) in terms {
            cols[j].push((i, a));
        }
        b.push(*rhs);
    }
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for c in cols.iter_mut() {
        c.sort_by_key(|e| e.0);
        // merge duplicate entries
        let mut last: Option<usize> = None;
        for &(i, a) in c.iter() {
            if last == Some(i) {
                *nzval.last_mut().expect("entry") += a;
            } else {
                rowval.push(i);
                nzval.push(a);
                last = Some(i);
            }
        }
        colptr.push(rowval.len());
    }
    let a = CscMatrix::new(m, n, colptr, rowval, nzval);
    let p = CscMatrix::zeros((n, n));
    let q: Vec<f64> = lp.objective.iter().map(|c| -c).collect();
    let cones: Vec<SupportedConeT<f64>> = vec![ZeroConeT(eq.len()), NonnegativeConeT(le.len())];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(400)
        .build()
        .map_err(|e| SolverError::InvalidOption(e.to_string()))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings).map_err(|e| {
        SolverError::Numerical {
            backend: "interior point",
            detail: format!("{e:?}"),
        }
    })?;
    solver.solve();
    let iterations = solver.info.iterations as usize;
    let status = match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Status::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Status::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => Status::Unbounded,
        other => {
            return Err(SolverError::Numerical {
                backend: "interior point",
                detail: format!("terminated with status {other:?}"),
            })
        }
    };
    let x = if status == Status::Optimal {
        solver
            .solution
            .x
            .iter()
            .enumerate()
            .map(|(j, &v)| v.clamp(lp.lower[j], lp.upper[j]))
            .collect()
    } else {
        Vec::new()
    };
    Ok(BackendOutcome {
        status,
        x,
        iterations,
    })
}
