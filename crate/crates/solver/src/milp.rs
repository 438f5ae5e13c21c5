//! Best-bound branch-and-bound over binary variables.
//!
//! Nodes are evaluated lazily: an open node stores its parent's relaxation and
//! the single fixing that distinguishes it, and inherits the parent's bound
//! until it is popped. After each expansion the search plunges into the child
//! nearer the relaxed value before returning to the best open node. Only a
//! bounded number of open nodes keep the parent's relaxation; the others keep
//! their path of fixings and are replayed from the root. Ties in the bound go
//! to the deeper node, then to the node created first, which keeps the search
//! order deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use log::{debug, warn};

use crate::backend::{SparseNode, SparseSimplex};
use crate::error::SolverError;
use crate::problem::LinearProgram;
use crate::solution::Status;
use crate::LpEngine;

pub(crate) enum Relaxation<H> {
    Optimal { objective: f64, x: Vec<f64>, handle: H },
    Infeasible,
    Unbounded,
}

/// Something that can solve the root relaxation and re-solve it with one more
/// variable fixed.
pub(crate) trait RelaxationEngine {
    type Handle: Clone;
    fn root(&mut self) -> Result<Relaxation<Self::Handle>, SolverError>;
    fn child(
        &mut self,
        parent: &Self::Handle,
        var: usize,
        value: f64,
    ) -> Result<Relaxation<Self::Handle>, SolverError>;
    fn iterations(&self) -> usize;

    /// Applies `path` to the root one fixing at a time.
    fn replay(
        &mut self,
        root: &Self::Handle,
        path: &[(usize, f64)],
    ) -> Result<Relaxation<Self::Handle>, SolverError> {
        let mut current = root.clone();
        let mut last = None;
        for &(var, value) in path {
            match self.child(&current, var, value)? {
                Relaxation::Optimal { objective, x, handle } => {
                    current = handle.clone();
                    last = Some(Relaxation::Optimal { objective, x, handle });
                }
                other => return Ok(other),
            }
        }
        Ok(last.unwrap_or(Relaxation::Infeasible))
    }

    /// Solves the node defined by `path` without reusing any earlier state.
    /// Used after a warm-started re-solve fails numerically.
    fn fresh(
        &mut self,
        root: &Self::Handle,
        path: &[(usize, f64)],
    ) -> Result<Relaxation<Self::Handle>, SolverError> {
        self.replay(root, path)
    }
}

/// Fixings from the root to a node, shared between siblings.
struct PathLink {
    var: usize,
    value: f64,
    up: Option<Rc<PathLink>>,
}

fn collect_path(link: &Option<Rc<PathLink>>, last: (usize, f64)) -> Vec<(usize, f64)> {
    let mut out = vec![last];
    let mut cur = link.clone();
    while let Some(l) = cur {
        out.push((l.var, l.value));
        cur = l.up.clone();
    }
    out.reverse();
    out
}

/// Re-solves every node from scratch with the node's fixings applied as bounds.
pub(crate) struct ResolveEngine<'a> {
    pub lp: &'a LinearProgram,
    pub engine: LpEngine,
    pub iterations: usize,
}

type Fixings = Rc<Vec<(usize, f64)>>;

impl ResolveEngine<'_> {
    fn run(&mut self, fixings: Fixings) -> Result<Relaxation<Fixings>, SolverError> {
        let mut lp = self.lp.clone();
        for &(j, v) in fixings.iter() {
            lp.lower[j] = v;
            lp.upper[j] = v;
        }
        let out = self.engine.solve(&lp)?;
        self.iterations += out.iterations;
        Ok(match out.status {
            Status::Optimal => Relaxation::Optimal {
                objective: lp.objective_value(&out.x),
                x: out.x,
                handle: fixings,
            },
            Status::Unbounded => Relaxation::Unbounded,
            _ => Relaxation::Infeasible,
        })
    }
}

impl RelaxationEngine for ResolveEngine<'_> {
    type Handle = Fixings;

    fn root(&mut self) -> Result<Relaxation<Fixings>, SolverError> {
        self.run(Rc::new(Vec::new()))
    }

    fn child(
        &mut self,
        parent: &Fixings,
        var: usize,
        value: f64,
    ) -> Result<Relaxation<Fixings>, SolverError> {
        let mut f = (**parent).clone();
        f.push((var, value));
        self.run(Rc::new(f))
    }

    fn iterations(&self) -> usize {
        self.iterations
    }

    fn replay(&mut self, _root: &Fixings, path: &[(usize, f64)]) -> Result<Relaxation<Fixings>, SolverError> {
        self.run(Rc::new(path.to_vec()))
    }
}

/// Warm-started dual simplex: each child re-optimises from its parent's basis.
pub(crate) struct WarmEngine<'a> {
    pub lp: &'a LinearProgram,
    pub solver: Option<SparseSimplex>,
    pub iterations: usize,
}

impl WarmEngine<'_> {
    /// `start` is the iteration count of the state the solve began from;
    /// microlp counts cumulatively along a chain of fixings.
    fn convert(&mut self, node: SparseNode, start: u64) -> Relaxation<Rc<microlp::Solution>> {
        match node {
            SparseNode::Optimal {
                objective,
                x,
                handle,
            } => {
                self.iterations += handle.stats().lp_iterations.saturating_sub(start) as usize;
                Relaxation::Optimal {
                    objective,
                    x,
                    handle,
                }
            }
            SparseNode::Infeasible => Relaxation::Infeasible,
            SparseNode::Unbounded => Relaxation::Unbounded,
        }
    }
}

impl RelaxationEngine for WarmEngine<'_> {
    type Handle = Rc<microlp::Solution>;

    fn root(&mut self) -> Result<Relaxation<Self::Handle>, SolverError> {
        let (solver, node) = SparseSimplex::solve(self.lp)?;
        self.solver = Some(solver);
        Ok(self.convert(node, 0))
    }

    fn child(
        &mut self,
        parent: &Self::Handle,
        var: usize,
        value: f64,
    ) -> Result<Relaxation<Self::Handle>, SolverError> {
        let solver = self.solver.as_ref().expect("root solved first");
        let node = solver.fix(parent, var, value)?;
        Ok(self.convert(node, parent.stats().lp_iterations))
    }

    fn replay(
        &mut self,
        root: &Self::Handle,
        path: &[(usize, f64)],
    ) -> Result<Relaxation<Self::Handle>, SolverError> {
        let solver = self.solver.as_ref().expect("root solved first");
        let node = solver.fix_path(root, path)?;
        Ok(self.convert(node, root.stats().lp_iterations))
    }

    fn fresh(
        &mut self,
        _root: &Self::Handle,
        path: &[(usize, f64)],
    ) -> Result<Relaxation<Self::Handle>, SolverError> {
        let mut lp = self.lp.clone();
        for &(j, v) in path {
            lp.lower[j] = v;
            lp.upper[j] = v;
        }
        let (_, node) = SparseSimplex::solve(&lp)?;
        Ok(self.convert(node, 0))
    }

    fn iterations(&self) -> usize {
        self.iterations
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SearchLimits {
    pub gap_tol: f64,
    pub integrality_tol: f64,
    pub node_limit: Option<usize>,
    pub warm_nodes: usize,
}

pub(crate) struct SearchResult {
    pub status: Status,
    pub incumbent: Option<(f64, Vec<f64>)>,
    pub bound: f64,
    pub nodes: usize,
    pub iterations: usize,
}

struct Open<H> {
    bound: f64,
    depth: usize,
    seq: usize,
    parent: Option<H>,
    path: Option<Rc<PathLink>>,
    var: usize,
    value: f64,
}

impl<H> PartialEq for Open<H> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<H> Eq for Open<H> {}
impl<H> PartialOrd for Open<H> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<H> Ord for Open<H> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Relative gap with the denominator floored at one.
pub fn relative_gap(bound: f64, incumbent: f64) -> f64 {
    ((bound - incumbent) / incumbent.abs().max(1.0)).max(0.0)
}

fn most_fractional(x: &[f64], binaries: &[usize], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in binaries {
        let f = x[j] - x[j].floor();
        let dist = f.min(1.0 - f);
        if dist > tol && best.map_or(true, |(_, d)| dist > d) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

pub(crate) fn branch_and_bound<E: RelaxationEngine>(
    engine: &mut E,
    binaries: &[usize],
    limits: SearchLimits,
    initial: Option<(f64, Vec<f64>)>,
) -> Result<SearchResult, SolverError> {
    let mut binaries = binaries.to_vec();
    binaries.sort_unstable();
    let mut incumbent = initial;
    let mut nodes = 1usize;
    let close_enough = |bound: f64, inc: &Option<(f64, Vec<f64>)>| match inc {
        Some((v, _)) => bound - v <= limits.gap_tol * v.abs().max(1.0),
        None => false,
    };

    let root = engine.root()?;
    let (root_obj, root_x, root_h) = match root {
        Relaxation::Infeasible => {
            return Ok(SearchResult {
                status: if incumbent.is_some() {
                    Status::Optimal
                } else {
                    Status::Infeasible
                },
                bound: incumbent.as_ref().map_or(f64::NEG_INFINITY, |i| i.0),
                incumbent,
                nodes,
                iterations: engine.iterations(),
            })
        }
        Relaxation::Unbounded => {
            return Ok(SearchResult {
                status: Status::Unbounded,
                incumbent: None,
                bound: f64::INFINITY,
                nodes,
                iterations: engine.iterations(),
            })
        }
        Relaxation::Optimal {
            objective,
            x,
            handle,
        } => (objective, x, handle),
    };

    let mut heap: BinaryHeap<Open<E::Handle>> = BinaryHeap::new();
    let mut seq = 0usize;
    let mut warm_open = 0usize;
    let mut limit_hit = false;
    // Largest bound among nodes abandoned after numerical failures.
    let mut dropped: Option<f64> = None;
    let root_handle = root_h.clone();

    // Expands a solved node: records an integral point, or pushes the child
    // farther from the relaxed value and returns the nearer one, which is
    // explored next (plunging).
    let mut expand = |obj: f64,
                      x: Vec<f64>,
                      h: E::Handle,
                      path: Option<Rc<PathLink>>,
                      depth: usize,
                      heap: &mut BinaryHeap<Open<E::Handle>>,
                      warm_open: &mut usize,
                      incumbent: &mut Option<(f64, Vec<f64>)>|
     -> Option<Open<E::Handle>> {
        if close_enough(obj, incumbent) {
            return None;
        }
        match most_fractional(&x, &binaries, limits.integrality_tol) {
            None => {
                if incumbent.as_ref().map_or(true, |(v, _)| obj > *v) {
                    let mut x = x;
                    for &j in &binaries {
                        x[j] = x[j].round();
                    }
                    debug!("new incumbent {obj:.6} at depth {depth}");
                    *incumbent = Some((obj, x));
                }
                None
            }
            Some(j) => {
                let first = if x[j] >= 0.5 { 1.0 } else { 0.0 };
                let keep = *warm_open < limits.warm_nodes;
                if keep {
                    *warm_open += 1;
                }
                heap.push(Open {
                    bound: obj,
                    depth: depth + 1,
                    seq,
                    parent: keep.then(|| h.clone()),
                    path: path.clone(),
                    var: j,
                    value: 1.0 - first,
                });
                seq += 1;
                let next = Open {
                    bound: obj,
                    depth: depth + 1,
                    seq,
                    parent: Some(h),
                    path,
                    var: j,
                    value: first,
                };
                seq += 1;
                Some(next)
            }
        }
    };

    let mut plunge = expand(root_obj, root_x, root_h, None, 0, &mut heap, &mut warm_open, &mut incumbent);

    loop {
        let (node, plunging) = match plunge.take() {
            Some(n) => (n, true),
            None => match heap.pop() {
                Some(n) => (n, false),
                None => break,
            },
        };
        if close_enough(node.bound, &incumbent) {
            if plunging {
                continue;
            }
            heap.clear();
            break;
        }
        if limits.node_limit.is_some_and(|l| nodes >= l) {
            heap.push(node);
            limit_hit = true;
            break;
        }
        nodes += 1;
        let attempt = match &node.parent {
            Some(parent) => {
                if !plunging {
                    warm_open -= 1;
                }
                engine.child(parent, node.var, node.value)
            }
            None => engine.replay(&root_handle, &collect_path(&node.path, (node.var, node.value))),
        };
        let relaxation = match attempt {
            Ok(r) => r,
            Err(e) => {
                debug!("re-solving node from scratch after: {e}");
                match engine.fresh(&root_handle, &collect_path(&node.path, (node.var, node.value))) {
                    Ok(r) => r,
                    Err(e) => {
                        warn!("abandoning a node with bound {:.6}: {e}", node.bound);
                        dropped = Some(dropped.map_or(node.bound, |d| d.max(node.bound)));
                        continue;
                    }
                }
            }
        };
        let path = Some(Rc::new(PathLink {
            var: node.var,
            value: node.value,
            up: node.path.clone(),
        }));
        match relaxation {
            Relaxation::Optimal {
                objective,
                x,
                handle,
            } => {
                // Guard against the relaxation drifting above its parent.
                let objective = objective.min(node.bound);
                plunge = expand(objective, x, handle, path, node.depth, &mut heap, &mut warm_open, &mut incumbent);
            }
            Relaxation::Infeasible => {}
            Relaxation::Unbounded => {
                return Err(SolverError::Numerical {
                    backend: "branch-and-bound",
                    detail: "unbounded child of a bounded relaxation".into(),
                })
            }
        }
    }

    let open_bound = match (heap.peek().map(|n| n.bound), dropped) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    let incomplete = dropped.is_some_and(|d| !close_enough(d, &incumbent));
    let bound = match (&incumbent, open_bound) {
        (Some((v, _)), Some(b)) => b.max(*v),
        (Some((v, _)), None) => *v,
        (None, Some(b)) => b,
        (None, None) => f64::NEG_INFINITY,
    };
    let status = if limit_hit || incomplete {
        Status::LimitReached
    } else if incumbent.is_some() {
        Status::Optimal
    } else {
        Status::Infeasible
    };
    Ok(SearchResult {
        status,
        incumbent,
        bound,
        nodes,
        iterations: engine.iterations(),
    })
}
