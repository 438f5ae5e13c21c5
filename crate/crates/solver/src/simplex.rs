//! Dense two-phase primal simplex on a full tableau.
//!
//! Variables are shifted onto `y >= 0` (free ones split in two), finite upper
//! bounds become rows, every row gets a slack or an artificial. Phase one
//! drives the artificials to zero, phase two maximises the objective.
//! Entering columns follow Dantzig's rule; after a run of degenerate pivots the
//! solver switches to Bland's rule until the objective moves again.

use crate::error::SolverError;
use crate::problem::{Comparator, LinearProgram};
use crate::solution::Status;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub pivot_tol: f64,
    pub optimality_tol: f64,
    pub feasibility_tol: f64,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_limit: usize,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-9,
            optimality_tol: 1e-9,
            feasibility_tol: 1e-7,
            degenerate_limit: 50,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DenseOutcome {
    pub status: Status,
    pub x: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
enum ColMap {
    Fixed(f64),
    /// x = offset + sign * y[col]
    Shift { col: usize, offset: f64, sign: f64 },
    /// x = y[pos] - y[neg]
    Split { pos: usize, neg: usize },
}

struct Tableau {
    /// m rows of width `width` (columns + rhs)
    a: Vec<f64>,
    /// reduced costs, same width; last entry holds -objective
    z: Vec<f64>,
    basis: Vec<usize>,
    m: usize,
    width: usize,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.width + j]
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let w = self.width;
        let piv = self.a[p * w + q];
        {
            let row = &mut self.a[p * w..(p + 1) * w];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[q] = 1.0;
        }
        let prow: Vec<f64> = self.a[p * w..(p + 1) * w].to_vec();
        for i in 0..self.m {
            if i == p {
                continue;
            }
            let f = self.a[i * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * w..(i + 1) * w];
            for (v, &pv) in row.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            row[q] = 0.0;
        }
        let f = self.z[q];
        if f != 0.0 {
            for (v, &pv) in self.z.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.z[q] = 0.0;
        }
        self.basis[p] = q;
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

fn run_phase(
    t: &mut Tableau,
    allowed: &[bool],
    opts: &SimplexOptions,
    iterations: &mut usize,
) -> Result<PhaseEnd, SolverError> {
    let rhs = t.rhs_col();
    let mut degenerate_run = 0usize;
    let mut bland = false;
    loop {
        if *iterations >= opts.max_iterations {
            return Err(SolverError::IterationLimit(*iterations));
        }
        // Entering column.
        let mut enter = None;
        let mut best = opts.optimality_tol;
        for j in 0..rhs {
            if !allowed[j] || t.z[j] <= opts.optimality_tol {
                continue;
            }
            if bland {
                enter = Some(j);
                break;
            }
            if t.z[j] > best {
                best = t.z[j];
                enter = Some(j);
            }
        }
        let Some(q) = enter else {
            return Ok(PhaseEnd::Optimal);
        };
        // Ratio test.
        let mut leave: Option<(usize, f64, f64)> = None;
        for i in 0..t.m {
            let aiq = t.at(i, q);
            if aiq <= opts.pivot_tol {
                continue;
            }
            let ratio = t.at(i, rhs).max(0.0) / aiq;
            match leave {
                None => leave = Some((i, ratio, aiq)),
                Some((li, lr, la)) => {
                    let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                    let better = if tie {
                        if bland {
                            t.basis[i] < t.basis[li]
                        } else {
                            aiq > la || (aiq == la && t.basis[i] < t.basis[li])
                        }
                    } else {
                        ratio < lr
                    };
                    if better {
                        leave = Some((i, ratio, aiq));
                    }
                }
            }
        }
        let Some((p, ratio, _)) = leave else {
            return Ok(PhaseEnd::Unbounded);
        };
        if ratio <= 1e-12 {
            degenerate_run += 1;
            if degenerate_run > opts.degenerate_limit {
                bland = true;
            }
        } else {
            degenerate_run = 0;
            bland = false;
        }
        t.pivot(p, q);
        *iterations += 1;
        // Keep basic values non-negative against round-off.
        for i in 0..t.m {
            let v = &mut t.a[i * t.width + rhs];
            if *v < 0.0 && *v > -opts.feasibility_tol {
                *v = 0.0;
            }
        }
    }
}

pub(crate) fn solve_dense(
    lp: &LinearProgram,
    opts: &SimplexOptions,
) -> Result<DenseOutcome, SolverError> {
    let n = lp.num_vars();
    let mut maps = Vec::with_capacity(n);
    let mut ny = 0usize;
    // (y column, upper bound on y) rows to add
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let map = if l == u {
            ColMap::Fixed(l)
        } else if l.is_finite() {
            let col = ny;
            ny += 1;
            if u.is_finite() {
                upper_rows.push((col, u - l));
            }
            ColMap::Shift {
                col,
                offset: l,
                sign: 1.0,
            }
        } else if u.is_finite() {
            let col = ny;
            ny += 1;
            ColMap::Shift {
                col,
                offset: u,
                sign: -1.0,
            }
        } else {
            let pos = ny;
            ny += 2;
            ColMap::Split { pos, neg: pos + 1 }
        };
        maps.push(map);
    }

    // Standard-form rows over y.
    struct StdRow {
        coeffs: Vec<(usize, f64)>,
        cmp: Comparator,
        rhs: f64,
    }
    let mut rows: Vec<StdRow> = Vec::with_capacity(lp.num_rows() + upper_rows.len());
    for row in &lp.rows {
        let mut rhs = row.rhs;
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(row.terms.len());
        for &(v, a) in &row.terms {
            match maps[v.0] {
                ColMap::Fixed(x) => rhs -= a * x,
                ColMap::Shift { col, offset, sign } => {
                    rhs -= a * offset;
                    coeffs.push((col, a * sign));
                }
                ColMap::Split { pos, neg } => {
                    coeffs.push((pos, a));
                    coeffs.push((neg, -a));
                }
            }
        }
        rows.push(StdRow {
            coeffs,
            cmp: row.cmp,
            rhs,
        });
    }
    for &(col, ub) in &upper_rows {
        rows.push(StdRow {
            coeffs: vec![(col, 1.0)],
            cmp: Comparator::Le,
            rhs: ub,
        });
    }
    for r in rows.iter_mut() {
        if r.rhs < 0.0 {
            r.rhs = -r.rhs;
            for c in r.coeffs.iter_mut() {
                c.1 = -c.1;
            }
            r.cmp = match r.cmp {
                Comparator::Le => Comparator::Ge,
                Comparator::Ge => Comparator::Le,
                Comparator::Eq => Comparator::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows
        .iter()
        .filter(|r| r.cmp != Comparator::Eq)
        .count();
    let n_art = rows
        .iter()
        .filter(|r| r.cmp != Comparator::Le)
        .count();
    let ncols = ny + n_slack + n_art;
    let width = ncols + 1;
    let mut t = Tableau {
        a: vec![0.0; m * width],
        z: vec![0.0; width],
        basis: vec![0; m],
        m,
        width,
    };
    let art_start = ny + n_slack;
    let mut next_slack = ny;
    let mut next_art = art_start;
    for (i, r) in rows.iter().enumerate() {
        for &(c, a) in &r.coeffs {
            t.a[i * width + c] += a;
        }
        t.a[i * width + ncols] = r.rhs;
        match r.cmp {
            Comparator::Le => {
                t.a[i * width + next_slack] = 1.0;
                t.basis[i] = next_slack;
                next_slack += 1;
            }
            Comparator::Ge => {
                t.a[i * width + next_slack] = -1.0;
                next_slack += 1;
                t.a[i * width + next_art] = 1.0;
                t.basis[i] = next_art;
                next_art += 1;
            }
            Comparator::Eq => {
                t.a[i * width + next_art] = 1.0;
                t.basis[i] = next_art;
                next_art += 1;
            }
        }
    }

    let mut iterations = 0usize;
    let is_art = |j: usize| j >= art_start && j < ncols;

    if n_art > 0 {
        // Phase one: maximise -Σ artificials.
        for i in 0..m {
            if is_art(t.basis[i]) {
                for j in 0..width {
                    t.z[j] += t.a[i * width + j];
                }
            }
        }
        for j in art_start..ncols {
            t.z[j] -= 1.0;
        }
        // z[rhs] currently holds +Σ b_art, which is -objective of phase one.
        let allowed: Vec<bool> = (0..ncols).map(|j| !is_art(j)).collect();
        match run_phase(&mut t, &allowed, opts, &mut iterations)? {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => {
                return Err(SolverError::Numerical {
                    backend: "dense simplex",
                    detail: "phase one reported unbounded".into(),
                })
            }
        }
        let infeas = t.z[ncols];
        let scale = 1.0 + rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if infeas > opts.feasibility_tol * scale {
            return Ok(DenseOutcome {
                status: Status::Infeasible,
                x: Vec::new(),
                iterations,
            });
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        let mut redundant = Vec::new();
        for i in 0..m {
            if !is_art(t.basis[i]) {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..art_start {
                let v = t.at(i, j).abs();
                if v > 1e-9 && best.map_or(true, |(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            match best {
                Some((j, _)) => {
                    t.pivot(i, j);
                    iterations += 1;
                }
                None => redundant.push(i),
            }
        }
        if !redundant.is_empty() {
            // Remove redundant rows from the tableau.
            let keep: Vec<usize> = (0..m).filter(|i| !redundant.contains(i)).collect();
            let mut a = Vec::with_capacity(keep.len() * width);
            let mut basis = Vec::with_capacity(keep.len());
            for &i in &keep {
                a.extend_from_slice(&t.a[i * width..(i + 1) * width]);
                basis.push(t.basis[i]);
            }
            t.a = a;
            t.basis = basis;
            t.m = keep.len();
        }
    }

    // Phase two objective over y.
    let mut cy = vec![0.0; ncols];
    for (j, map) in maps.iter().enumerate() {
        let c = lp.objective[j];
        match *map {
            ColMap::Fixed(_) => {}
            ColMap::Shift { col, sign, .. } => cy[col] += c * sign,
            ColMap::Split { pos, neg } => {
                cy[pos] += c;
                cy[neg] -= c;
            }
        }
    }
    t.z.iter_mut().for_each(|v| *v = 0.0);
    t.z[..ncols].copy_from_slice(&cy);
    for i in 0..t.m {
        let cb = cy[t.basis[i]];
        if cb != 0.0 {
            for j in 0..width {
                t.z[j] -= cb * t.a[i * width + j];
            }
        }
    }
    for &b in &t.basis {
        t.z[b] = 0.0;
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| !is_art(j)).collect();
    let end = run_phase(&mut t, &allowed, opts, &mut iterations)?;
    if let PhaseEnd::Unbounded = end {
        return Ok(DenseOutcome {
            status: Status::Unbounded,
            x: Vec::new(),
            iterations,
        });
    }

    let mut y = vec![0.0; ncols];
    for i in 0..t.m {
        y[t.basis[i]] = t.at(i, ncols).max(0.0);
    }
    let x = maps
        .iter()
        .map(|map| match *map {
            ColMap::Fixed(v) => v,
            ColMap::Shift { col, offset, sign } => offset + sign * y[col],
            ColMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    Ok(DenseOutcome {
        status: Status::Optimal,
        x,
        iterations,
    })
}
