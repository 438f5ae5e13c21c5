//! Linear and mixed-binary programming for the scheduling models.
//!
//! Problems are built with [`LinearProgram`] / [`MilpProblem`] (always
//! maximised), presolved, handed to one of the LP engines and mapped back to
//! the original variables. Binary problems go through a best-bound
//! branch-and-bound that reuses the LP engines for its relaxations.
//!
//! ```
//! use zincflex_solver::{solve_lp, Comparator, LinearProgram, Status};
//!
//! let mut lp = LinearProgram::new();
//! let x = lp.add_var(0.0, f64::INFINITY, 3.0);
//! let y = lp.add_var(0.0, f64::INFINITY, 2.0);
//! lp.add_row(&[(x, 1.0), (y, 1.0)], Comparator::Le, 4.0);
//! lp.add_row(&[(x, 1.0), (y, 3.0)], Comparator::Le, 6.0);
//! lp.add_row(&[(x, 1.0)], Comparator::Le, 3.0);
//! let sol = solve_lp(&lp).unwrap();
//! assert_eq!(sol.status, Status::Optimal);
//! assert!((sol.objective - 11.0).abs() < 1e-9);
//! ```

mod backend;
mod error;
mod lpfile;
mod milp;
mod presolve;
mod problem;
mod simplex;
mod solution;

use std::time::Instant;

use log::{debug, warn};

pub use error::SolverError;
pub use lpfile::{write_lp, write_milp};
pub use milp::relative_gap;
pub use problem::{Comparator, LinearProgram, MilpProblem, Row, Var};
pub use simplex::SimplexOptions;
pub use solution::{Engine, SolveStats, Solution, Status};

use backend::BackendOutcome;
use presolve::{presolve, PresolveOutcome, Presolved};

/// LP engine selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Dense tableau for small problems, sparse simplex for medium ones and
    /// the interior-point method above [`LpOptions::interior_point_rows`].
    #[default]
    Auto,
    DenseSimplex,
    SparseSimplex,
    InteriorPoint,
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub backend: Backend,
    pub presolve: bool,
    pub simplex: SimplexOptions,
    /// Row count (after presolve) from which `Auto` switches to the interior
    /// point method.
    pub interior_point_rows: usize,
    /// Violation above which a returned point is logged as suspicious.
    pub feasibility_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Auto,
            presolve: true,
            simplex: SimplexOptions::default(),
            interior_point_rows: 4000,
            feasibility_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub lp: LpOptions,
    /// Relative gap `(bound - incumbent) / max(|incumbent|, 1)` at which the
    /// search stops.
    pub gap_tol: f64,
    pub integrality_tol: f64,
    pub node_limit: Option<usize>,
    /// A known feasible point used as the first incumbent. Ignored (with a
    /// warning) when it violates the problem.
    pub initial: Option<Vec<f64>>,
    /// Open nodes allowed to keep their parent's warm-start state. Beyond
    /// this, nodes keep only their fixings and are re-derived from the root.
    pub warm_nodes: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            lp: LpOptions::default(),
            gap_tol: 1e-4,
            integrality_tol: 1e-6,
            node_limit: None,
            initial: None,
            warm_nodes: 256,
        }
    }
}

const DENSE_MAX_ROWS: usize = 250;
const DENSE_MAX_VARS: usize = 500;

/// Resolved engine choice for one LP solve.
#[derive(Debug, Clone, Copy)]
pub(crate) enum LpEngine {
    Dense(SimplexOptions),
    Sparse,
    Interior,
}

impl LpEngine {
    fn pick(lp: &LinearProgram, opts: &LpOptions) -> Self {
        match opts.backend {
            Backend::DenseSimplex => LpEngine::Dense(opts.simplex),
            Backend::SparseSimplex => LpEngine::Sparse,
            Backend::InteriorPoint => LpEngine::Interior,
            Backend::Auto => {
                if lp.num_rows() <= DENSE_MAX_ROWS && lp.num_vars() <= DENSE_MAX_VARS {
                    LpEngine::Dense(opts.simplex)
                } else if lp.num_rows() < opts.interior_point_rows {
                    LpEngine::Sparse
                } else {
                    LpEngine::Interior
                }
            }
        }
    }

    fn engine(self) -> Engine {
        match self {
            LpEngine::Dense(_) => Engine::DenseSimplex,
            LpEngine::Sparse => Engine::SparseSimplex,
            LpEngine::Interior => Engine::InteriorPoint,
        }
    }

    pub(crate) fn solve(self, lp: &LinearProgram) -> Result<BackendOutcome, SolverError> {
        match self {
            LpEngine::Dense(o) => {
                let d = simplex::solve_dense(lp, &o)?;
                Ok(BackendOutcome {
                    status: d.status,
                    x: d.x,
                    iterations: d.iterations,
                })
            }
            LpEngine::Sparse => backend::solve_sparse_simplex(lp),
            LpEngine::Interior => backend::solve_interior_point(lp),
        }
    }
}

/// Solves an LP with default options.
pub fn solve_lp(lp: &LinearProgram) -> Result<Solution, SolverError> {
    solve_lp_with(lp, &LpOptions::default())
}

fn identity_presolve(lp: &LinearProgram, binaries: &[usize]) -> Presolved {
    // Presolve with no reductions: route through the same mapping code.
    Presolved::identity(lp.clone(), binaries.to_vec())
}

fn run_presolve(
    lp: &LinearProgram,
    binaries: &[usize],
    enabled: bool,
) -> Result<Option<Presolved>, Status> {
    if !enabled {
        return Ok(Some(identity_presolve(lp, binaries)));
    }
    let mut is_binary = vec![false; lp.num_vars()];
    for &b in binaries {
        is_binary[b] = true;
    }
    match presolve(lp, &is_binary, 1e-9) {
        PresolveOutcome::Reduced(p) => Ok(Some(*p)),
        PresolveOutcome::Infeasible => Err(Status::Infeasible),
        PresolveOutcome::Unbounded => Err(Status::Unbounded),
    }
}

fn finish(lp: &LinearProgram, mut sol: Solution, tol: f64, started: Instant) -> Solution {
    if sol.has_point() {
        sol.objective = lp.objective_value(&sol.values);
        sol.stats.max_violation = lp.max_violation(&sol.values);
        if sol.stats.max_violation > tol * 1e3 {
            warn!(
                "solution violates constraints by {:.3e} ({:?})",
                sol.stats.max_violation, sol.engine
            );
        }
    }
    sol.stats.elapsed = started.elapsed();
    sol
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &LpOptions) -> Result<Solution, SolverError> {
    lp.validate()?;
    let started = Instant::now();
    let pre = match run_presolve(lp, &[], opts.presolve) {
        Ok(p) => p.expect("presolve result"),
        Err(status) => {
            let mut s = Solution::infeasible();
            s.status = status;
            s.engine = Some(Engine::Presolve);
            return Ok(finish(lp, s, opts.feasibility_tol, started));
        }
    };
    let reduced = &pre.reduced;
    debug!(
        "lp {}x{} presolved to {}x{}",
        lp.num_rows(),
        lp.num_vars(),
        reduced.num_rows(),
        reduced.num_vars()
    );
    let mut stats = SolveStats {
        presolved_rows: lp.num_rows() - reduced.num_rows(),
        presolved_vars: lp.num_vars() - reduced.num_vars(),
        ..SolveStats::default()
    };
    let (status, values, engine) = if reduced.num_vars() == 0 && reduced.num_rows() == 0 {
        (Status::Optimal, pre.postsolve(&[]), Engine::Presolve)
    } else {
        let eng = LpEngine::pick(reduced, opts);
        let out = eng.solve(reduced)?;
        stats.iterations = out.iterations;
        let values = if out.status == Status::Optimal {
            pre.postsolve(&out.x)
        } else {
            Vec::new()
        };
        (out.status, values, eng.engine())
    };
    let sol = Solution {
        status,
        values,
        objective: f64::NAN,
        gap: None,
        bound: None,
        engine: Some(engine),
        stats,
    };
    Ok(finish(lp, sol, opts.feasibility_tol, started))
}

/// Solves a binary program to the given relative gap with default options.
pub fn solve_milp(p: &MilpProblem, gap_tol: f64) -> Result<Solution, SolverError> {
    solve_milp_with(
        p,
        &MilpOptions {
            gap_tol,
            ..MilpOptions::default()
        },
    )
}

pub fn solve_milp_with(p: &MilpProblem, opts: &MilpOptions) -> Result<Solution, SolverError> {
    p.validate()?;
    if !(opts.gap_tol >= 0.0) {
        return Err(SolverError::InvalidOption(format!(
            "gap tolerance must be non-negative, got {}",
            opts.gap_tol
        )));
    }
    let started = Instant::now();
    let lp = &p.lp;
    let binaries: Vec<usize> = p.binaries.iter().map(|v| v.0).collect();

    let initial = opts.initial.as_ref().and_then(|x| {
        let ok = x.len() == lp.num_vars()
            && lp.max_violation(x) <= opts.lp.feasibility_tol
            && p.max_integrality_violation(x) <= opts.integrality_tol;
        if !ok {
            warn!("initial point rejected as infeasible");
        }
        ok.then(|| x.clone())
    });

    let pre = match run_presolve(lp, &binaries, opts.lp.presolve) {
        Ok(pre) => pre.expect("presolve result"),
        Err(status) => {
            let mut s = Solution::infeasible();
            s.status = status;
            s.engine = Some(Engine::Presolve);
            return Ok(finish(lp, s, opts.lp.feasibility_tol, started));
        }
    };
    let reduced = &pre.reduced;
    let offset = pre.objective_offset;
    let initial_reduced = initial.as_ref().map(|x| {
        let r = pre.restrict(x);
        (reduced.objective_value(&r), r)
    });

    let eng = LpEngine::pick(reduced, &opts.lp);
    let limits = milp::SearchLimits {
        gap_tol: opts.gap_tol,
        integrality_tol: opts.integrality_tol,
        node_limit: opts.node_limit,
        warm_nodes: opts.warm_nodes,
    };
    let result = if reduced.num_vars() == 0 && reduced.num_rows() == 0 {
        milp::SearchResult {
            status: Status::Optimal,
            incumbent: Some((0.0, Vec::new())),
            bound: 0.0,
            nodes: 0,
            iterations: 0,
        }
    } else {
        match eng {
            LpEngine::Sparse => {
                let mut e = milp::WarmEngine {
                    lp: reduced,
                    solver: None,
                    iterations: 0,
                };
                milp::branch_and_bound(&mut e, &pre.reduced_binaries, limits, initial_reduced)?
            }
            other => {
                let mut e = milp::ResolveEngine {
                    lp: reduced,
                    engine: other,
                    iterations: 0,
                };
                milp::branch_and_bound(&mut e, &pre.reduced_binaries, limits, initial_reduced)?
            }
        }
    };

    let stats = SolveStats {
        iterations: result.iterations,
        nodes: result.nodes,
        presolved_rows: lp.num_rows() - reduced.num_rows(),
        presolved_vars: lp.num_vars() - reduced.num_vars(),
        ..SolveStats::default()
    };
    let (values, inc_obj) = match &result.incumbent {
        Some((v, x)) => {
            let mut full = pre.postsolve(x);
            for &b in &binaries {
                full[b] = full[b].round();
            }
            (full, Some(v + offset))
        }
        None => (Vec::new(), None),
    };
    let status = match result.status {
        Status::Infeasible if values.is_empty() => Status::Infeasible,
        s => s,
    };
    let bound = result.bound + offset;
    let sol = Solution {
        status,
        gap: inc_obj.map(|v| relative_gap(bound, v)),
        bound: (status != Status::Infeasible && status != Status::Unbounded).then_some(bound),
        values,
        objective: f64::NAN,
        engine: Some(eng.engine()),
        stats,
    };
    Ok(finish(lp, sol, opts.lp.feasibility_tol, started))
}
