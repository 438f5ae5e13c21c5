//! Acceptance criteria. Each test prints one PASS/FAIL line with the
//! measured quantity, its pinned tolerance and the runtime against its
//! budget, also without `--nocapture`. Tests hold a common lock so timings
//! are not distorted by each other.

mod support;

use std::fs;
use std::io::{self, Write};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zincflex::backtest::{fcr_day_input, run_backtest, sweep_temperature, BacktestConfig, BacktestResult};
use zincflex::estimation::{diagnose, fit_parameters, one_step_residuals, simulate_telemetry};
use zincflex::fcr::solve_fcr;
use zincflex::frequency::normalize;
use zincflex::market_data::{synthesize_scenario, FurnaceConfig, SynthSpec};
use zincflex::mfrr::solve_mfrr;
use zincflex::report::{write_backtest, DEFAULT_INVESTMENT_DKK};
use zincflex::solver::{solve_lp, solve_milp_with, Backend, MilpOptions, MilpProblem, Status, Var};
use zincflex::thermal::{simulate, step, FurnaceParameters, FurnaceState, LidSchedule, PowerInput};

use support::{
    enumerate_binaries, mfrr_enumeration, mfrr_instance, mfrr_invariants, plausible, random_milp, steady_drift,
    vertex_optimum, SmallLp,
};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Prints the verdict line and fails the test on any violation.
fn verdict(id: u32, name: &str, failures: &[String], detail: &str, elapsed: Duration, budget: Duration) {
    let in_time = elapsed <= budget;
    let pass = failures.is_empty() && in_time;
    // written to the raw handle so the line survives output capture
    let mut out = io::stdout().lock();
    let _ = writeln!(
        out,
        "criterion {id} {name}: {} ({detail}; {:.2} s of {:.0} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    for f in failures.iter().take(10) {
        let _ = writeln!(out, "  {f}");
    }
    let _ = out.flush();
    drop(out);
    assert!(failures.is_empty(), "criterion {id}: {} violation(s), first: {}", failures.len(), failures[0]);
    assert!(in_time, "criterion {id}: runtime {elapsed:?} over budget {budget:?}");
}

// 1 ---------------------------------------------------------------------

const CONTINUITY_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

#[test]
fn criterion_1_frequency_normalisation() {
    let _g = serial();
    let t = Instant::now();
    let mut failures = Vec::new();
    for (f, v) in [(49.8, -1.0), (49.98, 0.0), (50.0, 0.0), (50.02, 0.0), (50.2, 1.0)] {
        let got = normalize(f).unwrap();
        if got != v {
            failures.push(format!("normalize({f}) = {got}, expected {v}"));
        }
    }
    let mut worst_jump = 0.0f64;
    for b in [49.8, 49.98, 50.02, 50.2] {
        let at = normalize(b).unwrap();
        for x in [b.next_down(), b.next_up(), b - 1e-13, b + 1e-13] {
            worst_jump = worst_jump.max((normalize(x).unwrap() - at).abs());
        }
    }
    if worst_jump > CONTINUITY_TOL {
        failures.push(format!("jump {worst_jump} at a breakpoint"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_odd = 0.0f64;
    for _ in 0..10_000 {
        let d: f64 = rng.gen_range(0.0..0.5);
        let s = normalize(50.0 + d).unwrap() + normalize(50.0 - d).unwrap();
        worst_odd = worst_odd.max(s.abs());
    }
    if worst_odd > SYMMETRY_TOL {
        failures.push(format!("odd-symmetry residual {worst_odd}"));
    }
    verdict(
        1,
        "frequency normalisation",
        &failures,
        &format!("max jump {worst_jump:.1e} <= {CONTINUITY_TOL:.0e}, max odd residual {worst_odd:.1e} <= {SYMMETRY_TOL:.0e}"),
        t.elapsed(),
        Duration::from_secs(1),
    );
}

// 2 ---------------------------------------------------------------------

const LINEARITY_TOL: f64 = 1e-12;
const DRIFT_LIMIT: f64 = 0.5;

#[test]
fn criterion_2_thermal_model() {
    let _g = serial();
    let t = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_lin = 0.0f64;
    let mut worst_drift = 0.0f64;
    for set in 0..20 {
        let (p, sp) = plausible(&mut rng);
        let ambient = FurnaceState::uniform(p.t_ambient);
        for lid in [false, true] {
            let trace = simulate(&ambient, &p, &vec![PowerInput::default(); 1440], &LidSchedule(vec![lid; 1440])).unwrap();
            if trace.states.iter().any(|s| *s != ambient) {
                failures.push(format!("set {set}: ambient equilibrium moved (lid {lid})"));
            }
        }
        for _ in 0..50 {
            let s = FurnaceState::from_array(std::array::from_fn(|_| rng.gen_range(300.0..600.0)));
            let lid = rng.gen_bool(0.5);
            let p1 = PowerInput::new(rng.gen_range(0.0..300.0), rng.gen_range(0.0..300.0));
            let p2 = PowerInput::new(rng.gen_range(0.0..300.0), rng.gen_range(0.0..300.0));
            let f = |pw: PowerInput| step(&s, &p, pw, lid).unwrap().to_array();
            let sum = f(PowerInput::new(p1.p_u + p2.p_u, p1.p_l + p2.p_l));
            let (a, b, z) = (f(p2), f(p1), f(PowerInput::default()));
            for i in 0..4 {
                let rel = ((sum[i] - a[i]) - (b[i] - z[i])).abs() / sum[i].abs().max(1.0);
                worst_lin = worst_lin.max(rel);
            }
        }
        for lid in [false, true] {
            let d = steady_drift(&p, &sp, lid, 1440);
            worst_drift = worst_drift.max(d);
            if d >= DRIFT_LIMIT {
                failures.push(format!("set {set}: steady-state drift {d:.3} °C (lid {lid})"));
            }
        }
    }
    if worst_lin > LINEARITY_TOL {
        failures.push(format!("linearity residual {worst_lin}"));
    }
    verdict(
        2,
        "thermal model",
        &failures,
        &format!("20 sets; linearity {worst_lin:.1e} <= {LINEARITY_TOL:.0e}; max drift {worst_drift:.3} < {DRIFT_LIMIT} °C"),
        t.elapsed(),
        Duration::from_secs(5),
    );
}

// 3 ---------------------------------------------------------------------

const LP_TOL: f64 = 1e-8;
const MILP_TOL: f64 = 1e-6;

#[test]
fn criterion_3_solver_oracles() {
    let _g = serial();
    let t = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut lp_feasible, mut worst_lp) = (0, 0.0f64);
    for case in 0..200 {
        let mut p = SmallLp::random(&mut rng, 6, 10);
        if case % 2 == 0 {
            p.plant(&mut rng);
        }
        let sol = solve_lp(&p.lp()).unwrap();
        match vertex_optimum(&p, &vec![None; p.obj.len()]) {
            None if sol.status != Status::Infeasible => failures.push(format!("LP {case}: {:?}, oracle infeasible", sol.status)),
            None => {}
            Some(best) => {
                lp_feasible += 1;
                let err = (sol.objective - best).abs() / best.abs().max(1.0);
                worst_lp = worst_lp.max(err);
                if sol.status != Status::Optimal || err > LP_TOL {
                    failures.push(format!("LP {case}: {:?} {} vs oracle {best}", sol.status, sol.objective));
                }
            }
        }
    }
    let (mut milp_feasible, mut worst_milp, mut max_bin) = (0, 0.0f64, 0);
    for case in 0..50 {
        let (mut p, nbin) = random_milp(&mut rng, 12, 3, 8);
        if case % 2 == 0 {
            p.plant(&mut rng);
        }
        max_bin = max_bin.max(nbin);
        let mut m = MilpProblem::new(p.lp());
        for j in 0..nbin {
            m.mark_binary(Var(j));
        }
        let opts = MilpOptions {
            gap_tol: 1e-9,
            ..MilpOptions::default()
        };
        let sol = solve_milp_with(&m, &opts).unwrap();
        match enumerate_binaries(&p, nbin) {
            None if sol.status != Status::Infeasible => failures.push(format!("MILP {case}: {:?}, oracle infeasible", sol.status)),
            None => {}
            Some(best) => {
                milp_feasible += 1;
                let err = (sol.objective - best).abs() / best.abs().max(1.0);
                worst_milp = worst_milp.max(err);
                if sol.status != Status::Optimal || err > MILP_TOL {
                    failures.push(format!("MILP {case}: {:?} {} vs oracle {best}", sol.status, sol.objective));
                }
            }
        }
    }
    verdict(
        3,
        "solver oracle equivalence",
        &failures,
        &format!(
            "200 LPs ({lp_feasible} feasible) max err {worst_lp:.1e} <= {LP_TOL:.0e}; \
             50 MILPs ({milp_feasible} feasible, up to {max_bin} binaries) max err {worst_milp:.1e} <= {MILP_TOL:.0e}"
        ),
        t.elapsed(),
        Duration::from_secs(60),
    );
}

// 4 ---------------------------------------------------------------------

const STRUCTURE_TOL: f64 = 1e-9;

#[test]
fn criterion_4_fcr_structure() {
    let _g = serial();
    let bundle = synthesize_scenario(&SynthSpec::default()).unwrap();
    let day = bundle.day(bundle.days()[0]).unwrap();
    let initial = FurnaceState::at_setpoints(&bundle.furnace.setpoints);
    let cfg = BacktestConfig::default();
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;

    assert!(day.fcr.iter().all(|p| *p > 0.0), "scenario must have positive FCR prices");
    let mut input = fcr_day_input(&bundle.furnace, &day, initial, &cfg).unwrap();
    input.penalty = Some(0.0);
    input.lp.backend = Backend::SparseSimplex;
    let t = Instant::now();
    let sol = solve_fcr(&input).unwrap();
    slowest = slowest.max(t.elapsed());
    let mut worst_r = 0.0f64;
    for h in 0..24 {
        let base = input.baseline.hourly_total(h);
        let err = (sol.p_r[h] - base).abs() / base;
        worst_r = worst_r.max(err);
        if err > STRUCTURE_TOL {
            failures.push(format!("hour {h}: reserve {} vs baseline {base}", sol.p_r[h]));
        }
    }

    let mut flat = day.clone();
    flat.hz.fill(50.0);
    let mut input = fcr_day_input(&bundle.furnace, &flat, initial, &cfg).unwrap();
    input.lp.backend = Backend::SparseSimplex;
    let t = Instant::now();
    let sol = solve_fcr(&input).unwrap();
    slowest = slowest.max(t.elapsed());
    let (mut worst_p, mut worst_s) = (0.0f64, 0.0f64);
    for k in 0..sol.p.len() {
        let base = sol.baseline_total(k);
        worst_p = worst_p.max((sol.p[k] - base).abs() / base);
        worst_s = worst_s.max(sol.zone_slack[0][k].abs()).max(sol.zone_slack[1][k].abs());
    }
    worst_s = sol.s.iter().fold(worst_s, |m, s| m.max(s.abs()));
    if worst_p > STRUCTURE_TOL || worst_s > STRUCTURE_TOL {
        failures.push(format!("flat frequency: dispatch error {worst_p}, slack {worst_s}"));
    }
    verdict(
        4,
        "FCR optimum structure",
        &failures,
        &format!(
            "reserve vs baseline {worst_r:.1e}, flat-frequency dispatch {worst_p:.1e}, slack {worst_s:.1e}, all <= {STRUCTURE_TOL:.0e}"
        ),
        slowest,
        Duration::from_secs(10),
    );
}

// 5 ---------------------------------------------------------------------

const MFRR_GAP: f64 = 1e-6;

#[test]
fn criterion_5_mfrr_oracle() {
    let _g = serial();
    let t = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for case in 0..10 {
        let mut input = mfrr_instance(&mut rng);
        input.milp.gap_tol = MFRR_GAP;
        input.milp.lp.backend = Backend::SparseSimplex;
        let oracle = mfrr_enumeration(&input).expect("zero regulation is feasible");
        let sol = solve_mfrr(&input).unwrap();
        let err = (sol.objective - oracle).abs() / oracle.abs().max(1.0);
        worst = worst.max(err);
        if sol.status != Status::Optimal || err > MFRR_GAP {
            failures.push(format!("case {case}: {:?} {} vs enumeration {oracle}", sol.status, sol.objective));
        }
        if let Err(e) = mfrr_invariants(&input, &sol) {
            failures.push(format!("case {case}: {e}"));
        }
    }
    verdict(
        5,
        "mFRR MILP oracle",
        &failures,
        &format!("10 instances, max relative gap to enumeration {worst:.1e} <= {MFRR_GAP:.0e}, invariants hold"),
        t.elapsed(),
        Duration::from_secs(120),
    );
}

// 6 ---------------------------------------------------------------------

const SWEEP_DELTAS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];
const FCR_FRACTION_AT_1: f64 = 0.95;
const SWEEP_NODE_LIMIT: usize = 300;

#[test]
fn criterion_6_sweep_shape() {
    let _g = serial();
    let t = Instant::now();
    let bundle = synthesize_scenario(&SynthSpec::default()).unwrap();
    let cfg = BacktestConfig {
        node_limit: Some(SWEEP_NODE_LIMIT),
        ..BacktestConfig::default()
    };
    let s = sweep_temperature(&bundle, &SWEEP_DELTAS, &cfg).unwrap();
    let mut failures = Vec::new();
    let (fcr, mfrr) = (s.fcr.as_ref().unwrap(), s.mfrr.as_ref().unwrap());
    for (name, series) in [("FCR", fcr), ("mFRR", mfrr)] {
        for f in &series.failures {
            failures.push(format!("{name} {} at {:?}: {}", f.date, f.delta, f.error));
        }
        let mut path = series.savings.clone();
        path.push(series.unconstrained);
        for (i, w) in path.windows(2).enumerate() {
            if w[1] < w[0] - 1e-6 * w[0].abs().max(1.0) {
                failures.push(format!("{name} savings fall from {} to {} after Δ = {}", w[0], w[1], SWEEP_DELTAS[i]));
            }
        }
    }
    let at1 = SWEEP_DELTAS.iter().position(|d| *d == 1.0).unwrap();
    let fcr_frac = fcr.fractions()[at1];
    // upper bound on the true mFRR fraction: banded bound over an
    // unconstrained incumbent
    let mfrr_frac = mfrr.fraction_bounds()[at1];
    if fcr_frac < FCR_FRACTION_AT_1 {
        failures.push(format!("FCR fraction at 1 °C is {fcr_frac:.4}"));
    }
    if mfrr_frac >= fcr_frac {
        failures.push(format!("mFRR fraction bound {mfrr_frac:.4} not below FCR fraction {fcr_frac:.4}"));
    }
    verdict(
        6,
        "sweep monotonicity",
        &failures,
        &format!(
            "FCR fraction at 1 °C {fcr_frac:.4} >= {FCR_FRACTION_AT_1}; mFRR fraction at 1 °C <= {mfrr_frac:.4} < FCR; \
             FCR {:?}; mFRR {:?}",
            fcr.fractions().iter().map(|f| (f * 1e3).round() / 1e3).collect::<Vec<_>>(),
            mfrr.fractions().iter().map(|f| (f * 1e3).round() / 1e3).collect::<Vec<_>>(),
        ),
        t.elapsed(),
        Duration::from_secs(600),
    );
}

// 7 ---------------------------------------------------------------------

const RECOVERY_TOL: f64 = 0.01;
const PROCESS_NOISE: f64 = 0.1;
const NOISE_SEED: u64 = 7;

fn estimation_data(days: usize, sigma: f64, seed: u64) -> (FurnaceParameters, zincflex::market_data::TelemetryFrame) {
    let f = FurnaceConfig::default();
    let mut lids = vec![true; 1440 * days];
    for d in 0..days {
        for (start, len) in [(480, 30), (795, 30), (1170, 15)] {
            lids[d * 1440 + start..d * 1440 + start + len].fill(false);
        }
    }
    let start = chrono::NaiveDate::from_ymd_opt(2024, 2, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let init = FurnaceState::new(449.0, 447.5, 451.0, 447.0);
    let tel = simulate_telemetry(&f.params, &f.hysteresis, &init, &LidSchedule(lids), start, sigma, seed).unwrap();
    (f.params, tel)
}

fn start_guess(p: &FurnaceParameters) -> FurnaceParameters {
    let v = p.positive_values();
    p.with_positive_values(std::array::from_fn(|i| v[i] * if i % 2 == 0 { 1.2 } else { 0.85 }))
}

#[test]
fn criterion_7_estimation() {
    let _g = serial();
    let t = Instant::now();
    let mut failures = Vec::new();

    let (truth, tel) = estimation_data(2, 0.0, 1);
    let fit = fit_parameters(&tel, &start_guess(&truth)).unwrap();
    let mut worst = 0.0f64;
    for (i, (a, b)) in truth.positive_values().iter().zip(fit.params.positive_values()).enumerate() {
        let rel = (b / a - 1.0).abs();
        worst = worst.max(rel);
        if rel > RECOVERY_TOL {
            failures.push(format!("{} recovered {b} vs {a}", FurnaceParameters::NAMES[i]));
        }
    }

    let (truth, tel) = estimation_data(4, PROCESS_NOISE, NOISE_SEED);
    let fit = fit_parameters(&tel, &start_guess(&truth)).unwrap();
    let r = one_step_residuals(&fit.params, fit.latent_init, &tel).unwrap();
    let mut diag = String::new();
    for (zone, e) in [("upper", &r.upper), ("lower", &r.lower)] {
        let d = diagnose(e, 40).unwrap();
        diag += &format!(
            "{zone}: {:.0}% of lags inside ±{:.4}, KS {:.4} <= {:.4}; ",
            100.0 * d.acf_inside,
            d.acf_band,
            d.ks_deviation,
            d.ks_bound
        );
        if !d.white() {
            failures.push(format!("{zone} residuals not white: {diag}"));
        }
    }
    verdict(
        7,
        "estimation recovery",
        &failures,
        &format!("max relative error {worst:.1e} <= {RECOVERY_TOL}; {diag}ACF needs >= 95%"),
        t.elapsed(),
        Duration::from_secs(120),
    );
}

// 8 ---------------------------------------------------------------------

const BACKTEST_DAYS: usize = 90;

fn accounting_failures(r: &BacktestResult) -> Vec<String> {
    let mut out = Vec::new();
    let mut acc = [0.0; 3];
    for (i, d) in r.days.iter().enumerate() {
        let fcr = d.fcr.as_ref().map_or(d.base_cost, |s| s.cost);
        let mfrr = d.mfrr.as_ref().map_or(d.base_cost, |s| s.cost);
        if fcr > d.base_cost || mfrr > d.base_cost {
            out.push(format!("{}: cost above base ({fcr}, {mfrr} vs {})", d.date, d.base_cost));
        }
        acc[0] += d.base_cost;
        acc[1] += fcr;
        acc[2] += mfrr;
        if [r.cumulative_base[i], r.cumulative_fcr[i], r.cumulative_mfrr[i]] != acc {
            out.push(format!("{}: cumulative columns are not running sums", d.date));
        }
    }
    out
}

#[test]
fn criterion_8_backtest_accounting() {
    let _g = serial();
    let mut failures = Vec::new();
    let spec = SynthSpec {
        days: BACKTEST_DAYS,
        ..SynthSpec::default()
    };
    let cfg = BacktestConfig::default();
    let mut slowest = Duration::ZERO;
    let mut outputs = Vec::new();
    let mut dirs = Vec::new();
    let mut summary = String::new();
    for _ in 0..2 {
        let t = Instant::now();
        let bundle = synthesize_scenario(&spec).unwrap();
        let r = run_backtest(&bundle, &cfg).unwrap();
        slowest = slowest.max(t.elapsed());
        if r.days.len() != BACKTEST_DAYS {
            failures.push(format!("{} days backtested", r.days.len()));
        }
        failures.extend(accounting_failures(&r));
        let dir = tempfile::tempdir().unwrap();
        let files = write_backtest(&r, dir.path(), DEFAULT_INVESTMENT_DKK).unwrap();
        outputs.push(files.iter().map(|p| fs::read(p).unwrap()).collect::<Vec<_>>());
        let failed = r
            .days
            .iter()
            .filter(|d| d.fcr.as_ref().is_some_and(|s| s.error.is_some()) || d.mfrr.as_ref().is_some_and(|s| s.error.is_some()))
            .count();
        summary = format!(
            "savings FCR {:.0} DKK, mFRR {:.0} DKK of base {:.0} DKK, {failed} failed days",
            r.total_fcr_savings(),
            r.total_mfrr_savings(),
            r.cumulative_base.last().unwrap()
        );
        dirs.push(dir);
    }
    if outputs[0] != outputs[1] {
        failures.push("outputs differ between identical runs".into());
    }
    verdict(
        8,
        "backtest accounting",
        &failures,
        &format!("{BACKTEST_DAYS} days, identical outputs over 2 runs; {summary}"),
        slowest,
        Duration::from_secs(300),
    );
}
