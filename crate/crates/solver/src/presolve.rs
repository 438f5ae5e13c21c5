//! Bound tightening and free-column elimination ahead of the simplex.
//!
//! Three reductions run to a fixpoint:
//! - rows with a single non-fixed variable become bounds (equality rows fix it),
//! - rows with no non-fixed variable are checked and dropped,
//! - a free, zero-cost, continuous column appearing in exactly one equality row
//!   is dropped together with that row and recovered afterwards.
//!
//! Chains of state-space equalities with a fixed initial state collapse under
//! the first rule; unconstrained state trajectories collapse under the third.

use crate::problem::{Comparator, LinearProgram, Var};

#[derive(Debug, Clone)]
struct Eliminated {
    var: usize,
    coef: f64,
    others: Vec<(usize, f64)>,
    rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Presolved {
    pub reduced: LinearProgram,
    /// reduced index -> original index
    pub kept: Vec<usize>,
    /// original index -> reduced index
    pub col_map: Vec<Option<usize>>,
    pub reduced_binaries: Vec<usize>,
    fixed: Vec<Option<f64>>,
    eliminated: Vec<Eliminated>,
    pub objective_offset: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum PresolveOutcome {
    Reduced(Box<Presolved>),
    Infeasible,
    Unbounded,
}

impl Presolved {
    /// Maps a reduced-space point back to the original variables.
    pub fn postsolve(&self, reduced_values: &[f64]) -> Vec<f64> {
        let n = self.fixed.len();
        let mut x = vec![0.0; n];
        for (j, slot) in x.iter_mut().enumerate() {
            if let Some(v) = self.fixed[j] {
                *slot = v;
            } else if let Some(r) = self.col_map[j] {
                *slot = reduced_values[r];
            }
        }
        for e in self.eliminated.iter().rev() {
            let s: f64 = e.others.iter().map(|&(k, a)| a * x[k]).sum();
            x[e.var] = (e.rhs - s) / e.coef;
        }
        x
    }

    /// No reductions: the reduced problem is the original one.
    pub fn identity(lp: LinearProgram, binaries: Vec<usize>) -> Self {
        let n = lp.num_vars();
        Self {
            reduced: lp,
            kept: (0..n).collect(),
            col_map: (0..n).map(Some).collect(),
            reduced_binaries: binaries,
            fixed: vec![None; n],
            eliminated: Vec::new(),
            objective_offset: 0.0,
        }
    }

    /// Maps an original-space point into the reduced space.
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.kept.iter().map(|&j| x[j]).collect()
    }
}

fn row_tol(rhs: f64, tol: f64) -> f64 {
    tol * (1.0 + rhs.abs())
}

pub(crate) fn presolve(lp: &LinearProgram, is_binary: &[bool], tol: f64) -> PresolveOutcome {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let mut lo = lp.lower.clone();
    let mut hi = lp.upper.clone();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let mut row_active = vec![true; m];

    let fix = |j: usize, v: f64, fixed: &mut Vec<Option<f64>>, lo: &mut [f64], hi: &mut [f64]| {
        fixed[j] = Some(v);
        lo[j] = v;
        hi[j] = v;
    };

    // Pre-existing fixed variables.
    for j in 0..n {
        if lo[j] == hi[j] {
            fixed[j] = Some(lo[j]);
        }
    }

    let mut changed = true;
    let mut passes = 0usize;
    while changed && passes < 10_000 {
        changed = false;
        passes += 1;
        for (i, row) in lp.rows.iter().enumerate() {
            if !row_active[i] {
                continue;
            }
            let mut constant = 0.0;
            let mut single: Option<(usize, f64)> = None;
            let mut active_terms = 0usize;
            for &(Var(j), a) in &row.terms {
                if a == 0.0 {
                    continue;
                }
                match fixed[j] {
                    Some(v) => constant += a * v,
                    None => {
                        active_terms += 1;
                        single = Some((j, a));
                    }
                }
            }
            let rhs = row.rhs - constant;
            match active_terms {
                0 => {
                    if row.cmp.violation(0.0, rhs) > row_tol(row.rhs, tol) {
                        return PresolveOutcome::Infeasible;
                    }
                    row_active[i] = false;
                    changed = true;
                }
                1 => {
                    let (j, a) = single.expect("one active term");
                    let bound = rhs / a;
                    let slack = row_tol(row.rhs, tol) / a.abs();
                    match row.cmp {
                        Comparator::Eq => {
                            if bound < lo[j] - slack || bound > hi[j] + slack {
                                return PresolveOutcome::Infeasible;
                            }
                            let mut v = bound.clamp(lo[j], hi[j]);
                            if is_binary[j] {
                                if (v - v.round()).abs() > slack.max(tol) {
                                    return PresolveOutcome::Infeasible;
                                }
                                v = v.round();
                            }
                            fix(j, v, &mut fixed, &mut lo, &mut hi);
                        }
                        cmp => {
                            // a·x <= rhs  or  a·x >= rhs
                            let upper_side = matches!(
                                (cmp, a > 0.0),
                                (Comparator::Le, true) | (Comparator::Ge, false)
                            );
                            if upper_side {
                                hi[j] = hi[j].min(bound);
                            } else {
                                lo[j] = lo[j].max(bound);
                            }
                            if is_binary[j] {
                                lo[j] = (lo[j] - slack.max(tol)).ceil().max(0.0);
                                hi[j] = (hi[j] + slack.max(tol)).floor().min(1.0);
                            }
                            if lo[j] > hi[j] + slack {
                                return PresolveOutcome::Infeasible;
                            }
                            if lo[j] >= hi[j] {
                                let v = if is_binary[j] { lo[j] } else { 0.5 * (lo[j] + hi[j]) };
                                fix(j, v, &mut fixed, &mut lo, &mut hi);
                            }
                        }
                    }
                    row_active[i] = false;
                    changed = true;
                }
                _ => {}
            }
        }
    }

    // Column incidence over active rows and non-fixed variables.
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in lp.rows.iter().enumerate() {
        if !row_active[i] {
            continue;
        }
        for &(Var(j), a) in &row.terms {
            if a != 0.0 && fixed[j].is_none() {
                col_rows[j].push(i);
            }
        }
    }
    let mut count: Vec<usize> = col_rows.iter().map(Vec::len).collect();
    let mut eliminated_flag = vec![false; n];
    let mut eliminated = Vec::new();

    let candidate = |j: usize, count: &[usize], row_active: &[bool], col_rows: &[Vec<usize>]| {
        if count[j] != 1 || is_binary[j] || lp.objective[j] != 0.0 {
            return None;
        }
        if lp.lower[j] != f64::NEG_INFINITY || lp.upper[j] != f64::INFINITY {
            return None;
        }
        col_rows[j]
            .iter()
            .copied()
            .find(|&i| row_active[i])
            .filter(|&i| lp.rows[i].cmp == Comparator::Eq)
    };

    let mut work: Vec<usize> = (0..n).rev().filter(|&j| fixed[j].is_none()).collect();
    while let Some(j) = work.pop() {
        if eliminated_flag[j] || fixed[j].is_some() {
            continue;
        }
        let Some(i) = candidate(j, &count, &row_active, &col_rows) else {
            continue;
        };
        let row = &lp.rows[i];
        let mut constant = 0.0;
        let mut coef = 0.0;
        let mut others = Vec::new();
        for &(Var(k), a) in &row.terms {
            if a == 0.0 {
                continue;
            }
            if let Some(v) = fixed[k] {
                constant += a * v;
            } else if k == j {
                coef += a;
            } else {
                others.push((k, a));
            }
        }
        if coef.abs() < 1e-12 {
            continue;
        }
        row_active[i] = false;
        eliminated_flag[j] = true;
        count[j] = 0;
        for &(k, _) in &others {
            count[k] -= 1;
            if count[k] <= 1 {
                work.push(k);
            }
        }
        eliminated.push(Eliminated {
            var: j,
            coef,
            others,
            rhs: row.rhs - constant,
        });
    }

    // Columns left without any active row take their best bound.
    for j in 0..n {
        if fixed[j].is_some() || eliminated_flag[j] || count[j] > 0 {
            continue;
        }
        let c = lp.objective[j];
        let v = if c > 0.0 {
            hi[j]
        } else if c < 0.0 {
            lo[j]
        } else if lo[j] <= 0.0 && hi[j] >= 0.0 {
            0.0
        } else if lo[j].is_finite() {
            lo[j]
        } else {
            hi[j]
        };
        if !v.is_finite() {
            return PresolveOutcome::Unbounded;
        }
        fixed[j] = Some(v);
    }

    let mut col_map = vec![None; n];
    let mut kept = Vec::new();
    let mut reduced = LinearProgram::new();
    let mut reduced_binaries = Vec::new();
    for j in 0..n {
        if fixed[j].is_none() && !eliminated_flag[j] {
            col_map[j] = Some(kept.len());
            kept.push(j);
            let v = reduced.add_var(lo[j], hi[j], lp.objective[j]);
            reduced.names[v.0] = lp.names[j].clone();
            if is_binary[j] {
                reduced_binaries.push(v.0);
            }
        }
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if !row_active[i] {
            continue;
        }
        let mut constant = 0.0;
        let mut terms = Vec::with_capacity(row.terms.len());
        for &(Var(j), a) in &row.terms {
            if a == 0.0 {
                continue;
            }
            match (fixed[j], col_map[j]) {
                (Some(v), _) => constant += a * v,
                (None, Some(r)) => terms.push((Var(r), a)),
                (None, None) => unreachable!("eliminated column in active row"),
            }
        }
        let k = reduced.add_row(&terms, row.cmp, row.rhs - constant);
        reduced.rows[k].name = row.name.clone();
    }
    let objective_offset = (0..n)
        .filter_map(|j| fixed[j].map(|v| lp.objective[j] * v))
        .sum();

    PresolveOutcome::Reduced(Box::new(Presolved {
        reduced,
        kept,
        col_map,
        reduced_binaries,
        fixed,
        eliminated,
        objective_offset,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unwrap(out: PresolveOutcome) -> Box<Presolved> {
        match out {
            PresolveOutcome::Reduced(p) => p,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn equality_chain_collapses() {
        // x0 fixed, x1 = 2 x0 + 1, x2 = x1 - 3
        let mut lp = LinearProgram::new();
        let x0 = lp.add_var(2.0, 2.0, 0.0);
        let x1 = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let x2 = lp.add_var(0.0, 10.0, 0.0);
        lp.add_row(&[(x1, 1.0), (x0, -2.0)], Comparator::Eq, 1.0);
        lp.add_row(&[(x2, 1.0), (x1, -1.0)], Comparator::Eq, -3.0);
        let p = unwrap(presolve(&lp, &[false; 3], 1e-9));
        assert_eq!(p.reduced.num_vars(), 0);
        assert_eq!(p.reduced.num_rows(), 0);
        let x = p.postsolve(&[]);
        assert_eq!(x, vec![2.0, 5.0, 2.0]);
        assert_eq!(p.objective_offset, 5.0);
    }

    #[test]
    fn singleton_inequality_becomes_bound() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, f64::INFINITY, 1.0);
        let y = lp.add_var(0.0, f64::INFINITY, 1.0);
        lp.add_row(&[(x, 2.0)], Comparator::Le, 4.0);
        lp.add_row(&[(x, 1.0), (y, 1.0)], Comparator::Le, 5.0);
        let p = unwrap(presolve(&lp, &[false; 2], 1e-9));
        assert_eq!(p.reduced.num_rows(), 1);
        assert_eq!(p.reduced.bounds(Var(0)), (0.0, 2.0));
    }

    #[test]
    fn free_singleton_chain_is_eliminated_and_recovered() {
        // p in [0, 3] with objective; t1 = t0 + p ; t2 = t1 + p ; t free
        let mut lp = LinearProgram::new();
        let p = lp.add_var(0.0, 3.0, 1.0);
        let q = lp.add_var(0.0, 3.0, 1.0);
        let t1 = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let t2 = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        lp.add_row(&[(p, 1.0), (q, 1.0)], Comparator::Le, 4.0);
        lp.add_row(&[(t1, 1.0), (p, -1.0)], Comparator::Eq, 10.0);
        lp.add_row(&[(t2, 1.0), (t1, -1.0), (q, -1.0)], Comparator::Eq, 0.0);
        let pre = unwrap(presolve(&lp, &[false; 4], 1e-9));
        assert_eq!(pre.reduced.num_vars(), 2);
        assert_eq!(pre.reduced.num_rows(), 1);
        let x = pre.postsolve(&[1.5, 2.5]);
        assert_eq!(x, vec![1.5, 2.5, 11.5, 14.0]);
    }

    #[test]
    fn contradictory_fixings_are_infeasible() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, 1.0, 0.0);
        lp.add_row(&[(x, 1.0)], Comparator::Eq, 2.0);
        assert!(matches!(
            presolve(&lp, &[false], 1e-9),
            PresolveOutcome::Infeasible
        ));
    }

    #[test]
    fn binary_bounds_are_rounded() {
        let mut lp = LinearProgram::new();
        let b = lp.add_var(0.0, 1.0, 1.0);
        let y = lp.add_var(0.0, 1.0, 1.0);
        lp.add_row(&[(b, 2.0)], Comparator::Le, 1.5);
        lp.add_row(&[(b, 1.0), (y, 1.0)], Comparator::Le, 1.0);
        let pre = unwrap(presolve(&lp, &[true, false], 1e-9));
        // b <= 0.75 rounds down to b = 0
        let x = pre.postsolve(&pre.restrict(&[0.0, 0.3]));
        assert_eq!(x[0], 0.0);
    }

    #[test]
    fn empty_column_with_unbounded_objective() {
        let mut lp = LinearProgram::new();
        lp.add_var(0.0, f64::INFINITY, 1.0);
        assert!(matches!(
            presolve(&lp, &[false], 1e-9),
            PresolveOutcome::Unbounded
        ));
    }
}
