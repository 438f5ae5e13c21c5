//! Human-readable dump in the CPLEX LP text format, for debugging models.

use std::fmt::Write;

use crate::problem::{Comparator, LinearProgram, MilpProblem, Var};

fn term(out: &mut String, first: bool, coef: f64, name: &str) {
    let sign = if coef < 0.0 { "-" } else { "+" };
    if first {
        if coef < 0.0 {
            out.push_str("- ");
        }
    } else {
        let _ = write!(out, " {sign} ");
    }
    let a = coef.abs();
    if a == 1.0 {
        out.push_str(name);
    } else {
        let _ = write!(out, "{a} {name}");
    }
}

fn body(lp: &LinearProgram, binaries: &[Var]) -> String {
    let mut out = String::from("Maximize\n obj: ");
    let mut first = true;
    for j in 0..lp.num_vars() {
        let c = lp.objective_coeff(Var(j));
        if c != 0.0 {
            term(&mut out, first, c, &lp.var_name(Var(j)));
            first = false;
        }
    }
    if first {
        out.push('0');
    }
    out.push_str("\nSubject To\n");
    for (i, row) in lp.rows().iter().enumerate() {
        let _ = write!(out, " {}: ", lp.row_name(i));
        let mut first = true;
        for &(v, a) in &row.terms {
            term(&mut out, first, a, &lp.var_name(v));
            first = false;
        }
        if first {
            out.push('0');
        }
        let cmp = match row.cmp {
            Comparator::Le => "<=",
            Comparator::Eq => "=",
            Comparator::Ge => ">=",
        };
        let _ = writeln!(out, " {cmp} {}", row.rhs);
    }
    out.push_str("Bounds\n");
    for j in 0..lp.num_vars() {
        let v = Var(j);
        if binaries.contains(&v) {
            continue;
        }
        let (l, u) = lp.bounds(v);
        let name = lp.var_name(v);
        match (l.is_finite(), u.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
            (true, false) => {
                if l != 0.0 {
                    let _ = writeln!(out, " {name} >= {l}");
                }
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {u}");
            }
            (true, true) if l == u => {
                let _ = writeln!(out, " {name} = {l}");
            }
            (true, true) => {
                let _ = writeln!(out, " {l} <= {name} <= {u}");
            }
        }
    }
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for &b in binaries {
            let _ = writeln!(out, " {}", lp.var_name(b));
        }
    }
    out.push_str("End\n");
    out
}

pub fn write_lp(lp: &LinearProgram) -> String {
    body(lp, &[])
}

pub fn write_milp(p: &MilpProblem) -> String {
    body(&p.lp, &p.binaries)
}
