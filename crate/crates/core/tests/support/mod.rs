//! Brute-force oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use zincflex::market_data::{synthesize_scenario, FurnaceConfig, ScenarioBundle, SynthSpec};
use zincflex::mfrr::{build_mfrr_problem, MfrrDayInput, MfrrSolution, MIN_DOWN_SHARE};
use zincflex::solver::{solve_lp_with, Backend, Comparator, LinearProgram, LpOptions, Status, Var};
use zincflex::thermal::{simulate, FurnaceParameters, FurnaceState, LidSchedule, PowerInput, Setpoints};
use zincflex::{Zone, Zones};

pub fn scenario(days: usize, seed: u64) -> ScenarioBundle {
    let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
    synthesize_scenario(&SynthSpec::new(start, days, seed)).unwrap()
}

// ---------------------------------------------------------------- thermal

/// Parameters within ±50% of the reference furnace, setpoints 400-500 °C
/// with an upper-minus-lower gap of at most 2 °C.
pub fn plausible(rng: &mut ChaCha8Rng) -> (FurnaceParameters, Setpoints) {
    let base = FurnaceConfig::default().params;
    loop {
        let v = base.positive_values().map(|x| x * rng.gen_range(0.5..1.5));
        let mut p = base.with_positive_values(v);
        p.t_ambient = rng.gen_range(0.0..35.0);
        let t_l = rng.gen_range(400.0..500.0);
        let sp = Setpoints::new(t_l + rng.gen_range(0.0..2.0), t_l);
        if p.euler_stable() && sp.validate(&p).is_ok() {
            return (p, sp);
        }
    }
}

/// Largest wall distance from its setpoint over `minutes` of constant
/// steady-state power, starting from zinc = wall = setpoint.
pub fn steady_drift(p: &FurnaceParameters, sp: &Setpoints, lid: bool, minutes: usize) -> f64 {
    let (p_l, p_u) = zincflex::thermal::steady_state_power(p, sp, lid).unwrap();
    let powers = vec![PowerInput::new(p_u, p_l); minutes];
    let trace = simulate(&FurnaceState::at_setpoints(sp), p, &powers, &LidSchedule(vec![lid; minutes])).unwrap();
    trace
        .states
        .iter()
        .map(|s| (s.t_wu - sp.t_sp_u).abs().max((s.t_wl - sp.t_sp_l).abs()))
        .fold(0.0, f64::max)
}

// ------------------------------------------------------- small LP oracles

/// `max c·x` over `0 ≤ x ≤ upper` and the listed rows.
#[derive(Debug, Clone)]
pub struct SmallLp {
    pub obj: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Comparator, f64)>,
}

impl SmallLp {
    pub fn random(rng: &mut ChaCha8Rng, max_vars: usize, max_rows: usize) -> Self {
        let n = rng.gen_range(1..=max_vars);
        let m = rng.gen_range(0..=max_rows);
        let coef = |rng: &mut ChaCha8Rng| f64::from(rng.gen_range(-4i32..=4)) * 0.5;
        let obj = (0..n).map(|_| coef(rng)).collect();
        let upper = (0..n).map(|_| f64::from(rng.gen_range(1i32..=8))).collect();
        let rows = (0..m)
            .map(|_| {
                let a = (0..n).map(|_| coef(rng)).collect();
                let cmp = match rng.gen_range(0..7) {
                    0..=3 => Comparator::Le,
                    4 | 5 => Comparator::Ge,
                    _ => Comparator::Eq,
                };
                (a, cmp, f64::from(rng.gen_range(-6i32..=12)))
            })
            .collect();
        Self { obj, upper, rows }
    }

    /// Rewrites the right-hand sides so a random integer point of the box
    /// satisfies every row.
    pub fn plant(&mut self, rng: &mut ChaCha8Rng) {
        let x: Vec<f64> = self.upper.iter().map(|&u| f64::from(rng.gen_range(0..=u as i32))).collect();
        for (a, cmp, b) in &mut self.rows {
            let ax: f64 = a.iter().zip(&x).map(|(a, x)| a * x).sum();
            let room = f64::from(rng.gen_range(0i32..=3));
            *b = match cmp {
                Comparator::Le => ax + room,
                Comparator::Ge => ax - room,
                Comparator::Eq => ax,
            };
        }
    }

    pub fn lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new();
        let vars: Vec<Var> = self
            .obj
            .iter()
            .zip(&self.upper)
            .map(|(&c, &u)| lp.add_var(0.0, u, c))
            .collect();
        for (a, cmp, b) in &self.rows {
            let terms: Vec<(Var, f64)> = vars.iter().copied().zip(a.iter().copied()).collect();
            lp.add_row(&terms, *cmp, *b);
        }
        lp
    }
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-9 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

/// Optimum by enumerating every basic point, with `fixed[j] = Some(v)`
/// substituted out first. `None` when infeasible.
pub fn vertex_optimum(p: &SmallLp, fixed: &[Option<f64>]) -> Option<f64> {
    let free: Vec<usize> = (0..p.obj.len()).filter(|&j| fixed[j].is_none()).collect();
    let n = free.len();
    let offset: f64 = fixed
        .iter()
        .zip(&p.obj)
        .filter_map(|(f, c)| f.map(|v| v * c))
        .sum();
    // a·x <= b, or = b when the flag is set
    let mut cons: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (a, cmp, b) in &p.rows {
        let rest: f64 = fixed.iter().zip(a).filter_map(|(f, c)| f.map(|v| v * c)).sum();
        let a: Vec<f64> = free.iter().map(|&j| a[j]).collect();
        let b = b - rest;
        match cmp {
            Comparator::Le => cons.push((a, b, false)),
            Comparator::Ge => cons.push((a.iter().map(|v| -v).collect(), -b, false)),
            Comparator::Eq => cons.push((a, b, true)),
        }
    }
    for (i, &j) in free.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        cons.push((e.clone(), p.upper[j], false));
        cons.push((e.iter().map(|v| -v).collect(), 0.0, false));
    }
    let feasible = |x: &[f64]| {
        cons.iter().all(|(a, b, eq)| {
            let s: f64 = a.iter().zip(x).map(|(u, v)| u * v).sum();
            if *eq {
                (s - b).abs() <= 1e-7
            } else {
                s <= b + 1e-7
            }
        })
    };
    let value = |x: &[f64]| offset + free.iter().zip(x).map(|(&j, v)| p.obj[j] * v).sum::<f64>();
    if n == 0 {
        return feasible(&[]).then(|| value(&[]));
    }
    let m = cons.len();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = idx.iter().map(|&i| cons[i].0.clone()).collect();
        let b = idx.iter().map(|&i| cons[i].1).collect();
        if let Some(x) = gauss(a, b) {
            if feasible(&x) {
                let v = value(&x);
                best = Some(best.map_or(v, |w: f64| w.max(v)));
            }
        }
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < m - n + k {
                idx[k] += 1;
                for t in k + 1..n {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// A mixed-binary instance: the first `nbin` variables are binary.
pub fn random_milp(rng: &mut ChaCha8Rng, max_bin: usize, max_cont: usize, max_rows: usize) -> (SmallLp, usize) {
    let nbin = rng.gen_range(1..=max_bin);
    let ncont = rng.gen_range(0..=max_cont);
    let mut p = SmallLp::random(rng, 1, max_rows);
    let n = nbin + ncont;
    let coef = |rng: &mut ChaCha8Rng| f64::from(rng.gen_range(-4i32..=4)) * 0.5;
    p.obj = (0..n).map(|_| coef(rng)).collect();
    p.upper = (0..n)
        .map(|j| if j < nbin { 1.0 } else { f64::from(rng.gen_range(1i32..=8)) })
        .collect();
    for row in &mut p.rows {
        row.0 = (0..n).map(|_| coef(rng)).collect();
    }
    (p, nbin)
}

pub fn enumerate_binaries(p: &SmallLp, nbin: usize) -> Option<f64> {
    let n = p.obj.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << nbin) {
        let fixed: Vec<Option<f64>> = (0..n)
            .map(|j| (j < nbin).then(|| f64::from((mask >> j) & 1)))
            .collect();
        if let Some(v) = vertex_optimum(p, &fixed) {
            best = Some(best.map_or(v, |w: f64| w.max(v)));
        }
    }
    best
}

// ------------------------------------------------------------------ mFRR

pub const MFRR_HOURS: usize = 4;

/// Four-hour, upper-zone-only day with random prices and one lid-off window.
pub fn mfrr_instance(rng: &mut ChaCha8Rng) -> MfrrDayInput {
    let f = FurnaceConfig::default();
    let minutes = MFRR_HOURS * 60;
    let off_start = rng.gen_range(0..minutes - 30);
    let off_len = rng.gen_range(0..=30);
    let lids = LidSchedule((0..minutes).map(|t| !(off_start..off_start + off_len).contains(&t)).collect());
    let spot: Vec<f64> = (0..MFRR_HOURS).map(|_| rng.gen_range(0.3..1.2)).collect();
    let balancing = spot
        .iter()
        .map(|s| if rng.gen_bool(0.6) { s + rng.gen_range(0.0..1.5) } else { s - rng.gen_range(0.0..0.2) })
        .collect();
    let mfrr = (0..MFRR_HOURS).map(|_| rng.gen_range(0.0..0.05)).collect();
    let mut input = MfrrDayInput::new(f.params, f.setpoints, lids, f.p_min, f.p_nom, mfrr, spot, balancing).unwrap();
    input.zones = Zones::only(Zone::Upper);
    input.steps_per_hour = 4;
    input
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Idle,
    Up,
    Down,
}

/// Best objective over every assignment of the bid indicator and the
/// regulation mode of the single participating zone, each LP solved with
/// the dense simplex. Start and end indicators follow from the modes.
pub fn mfrr_enumeration(input: &MfrrDayInput) -> Option<f64> {
    let problem = build_mfrr_problem(input).unwrap();
    let l = &problem.layout;
    assert_eq!(l.zones.len(), 1, "oracle expects one participating zone");
    let zv = &l.zones[0];
    let hours = l.g.len();
    let opts = LpOptions {
        backend: Backend::DenseSimplex,
        ..LpOptions::default()
    };
    let modes = [Mode::Idle, Mode::Up, Mode::Down];
    let mut best: Option<f64> = None;
    for code in 0..6usize.pow(hours as u32) {
        let mut lp = problem.milp.lp.clone();
        let mut c = code;
        let mut prev = Mode::Idle;
        let fix = |lp: &mut LinearProgram, v: Var, on: bool| {
            let x = if on { 1.0 } else { 0.0 };
            lp.set_bounds(v, x, x);
        };
        for h in 0..hours {
            let g = c % 2 == 1;
            let mode = modes[(c / 2) % 3];
            c /= 6;
            let (up, down) = (mode == Mode::Up, mode == Mode::Down);
            let (was_up, was_down) = (prev == Mode::Up, prev == Mode::Down);
            fix(&mut lp, l.g[h], g);
            fix(&mut lp, zv.u_up[h], up);
            fix(&mut lp, zv.u_down[h], down);
            fix(&mut lp, zv.y_up[h], up && !was_up);
            fix(&mut lp, zv.z_up[h], was_up && !up);
            fix(&mut lp, zv.y_down[h], down && !was_down);
            fix(&mut lp, zv.z_down[h], was_down && !down);
            prev = mode;
        }
        let sol = solve_lp_with(&lp, &opts).unwrap();
        match sol.status {
            Status::Optimal => best = Some(best.map_or(sol.objective, |b: f64| b.max(sol.objective))),
            Status::Infeasible => {}
            s => panic!("enumerated LP ended with {s:?}"),
        }
    }
    best
}

/// Structural rules every mFRR schedule must satisfy; returns the first
/// violation.
pub fn mfrr_invariants(input: &MfrrDayInput, sol: &MfrrSolution) -> Result<(), String> {
    let tol = 1e-6;
    let hours = sol.g.len();
    for z in input.zones.list() {
        let q = z.index();
        let mut starts_up = 0i32;
        let mut starts_down = 0i32;
        for h in 0..hours {
            let (up, down) = (sol.u_up[q][h], sol.u_down[q][h]);
            if up && down {
                return Err(format!("hour {h}: simultaneous up and down"));
            }
            let base = if q == 0 { input.baseline.hourly_u[h] } else { input.baseline.hourly_l[h] };
            let room = (input.p_nom[q] - base).max(0.0);
            let bd = sol.zone_bd[q][h];
            if down && bd < MIN_DOWN_SHARE * room - tol {
                return Err(format!("hour {h}: down-regulation {bd} below 10% of {room}"));
            }
            if !down && bd > tol {
                return Err(format!("hour {h}: down-regulation {bd} without the down flag"));
            }
            if !up && sol.zone_bu[q][h] > tol {
                return Err(format!("hour {h}: up-regulation without the up flag"));
            }
            let was_up = h > 0 && sol.u_up[q][h - 1];
            let was_down = h > 0 && sol.u_down[q][h - 1];
            if sol.y_up[q][h] != (up && !was_up) || sol.z_up[q][h] != (was_up && !up) {
                return Err(format!("hour {h}: up start/end flags inconsistent"));
            }
            if sol.y_down[q][h] != (down && !was_down) || sol.z_down[q][h] != (was_down && !down) {
                return Err(format!("hour {h}: down start/end flags inconsistent"));
            }
            if sol.z_up[q][h] && !sol.y_down[q][h] {
                return Err(format!("hour {h}: up-regulation ends without rebound"));
            }
            starts_up += i32::from(sol.y_up[q][h]);
            starts_down += i32::from(sol.y_down[q][h]);
            if starts_down > starts_up {
                return Err(format!("hour {h}: down-regulation before any up-regulation"));
            }
            let real = sol.zone_p[q][h] + sol.zone_bu[q][h] - sol.zone_bd[q][h];
            if (real - base).abs() > tol * base.max(1.0) {
                return Err(format!("hour {h}: power {real} does not reconcile with baseline {base}"));
            }
        }
    }
    for h in 0..hours {
        if !sol.g[h] && sol.p_bu[h] > tol {
            return Err(format!("hour {h}: activated although the bid was not accepted"));
        }
        if !sol.indicator[h] && sol.p_bu[h] > tol {
            return Err(format!("hour {h}: activation without a positive differential"));
        }
    }
    Ok(())
}
