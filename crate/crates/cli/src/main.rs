//! `zincflex` command line. Every command prints a JSON summary on stdout;
//! failures print `{"error": {"kind", "message"}}` on stderr and exit 1.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use zincflex::backtest::{
    fcr_day_input, mfrr_day_input, run_backtest, sweep_temperature, worst_days, BacktestConfig, Service,
};
use zincflex::control::{simulate_hysteresis, ContactorState};
use zincflex::estimation::{diagnose, fit_parameters, one_step_residuals};
use zincflex::fcr::solve_fcr;
use zincflex::market_data::{
    format_ts, load_scenario, load_telemetry, synthesize_scenario, write_scenario, FurnaceConfig, ScenarioBundle,
    ScenarioGaps, SynthSpec, DEFAULT_DAYS, DEFAULT_SEED,
};
use zincflex::mfrr::solve_mfrr;
use zincflex::report::{write_backtest, write_fcr_day, write_mfrr_day, write_sweep, write_worst_days};
use zincflex::thermal::{steady_state_power, FurnaceState, LidSchedule};

const DEFAULT_INVESTMENT_DKK: f64 = zincflex::report::DEFAULT_INVESTMENT_DKK;
const SWEEP_DELTAS: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
const FIT_MAX_LAG: usize = 40;

#[derive(Parser)]
#[command(name = "zincflex", version, about = "Zinc furnace flexibility in FCR and mFRR reserve markets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the baseline hysteresis controller over the scenario.
    Simulate(Common),
    /// Print the steady-state zone powers with the lid on and off.
    SteadyState(Common),
    /// Solve the FCR bid for one day.
    BidFcr(Common),
    /// Solve the mFRR bid for one day.
    BidMfrr(Common),
    /// Backtest every complete day and write cost curves and worst days.
    Backtest(BacktestArgs),
    /// Total savings as a function of the allowed temperature deviation.
    Sweep(SweepArgs),
    /// Load a scenario directory and report coverage and gaps.
    Validate(Common),
    /// Fit the thermal parameters to a telemetry file.
    Fit(FitArgs),
    /// Write a seeded synthetic scenario.
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario directory; without it the default synthetic scenario is used.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    from: Option<NaiveDate>,
    #[arg(long)]
    to: Option<NaiveDate>,
    /// Half-width of the allowed wall temperature band (°C).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    steps_per_hour: Option<usize>,
    /// Relative optimality gap of the mFRR search.
    #[arg(long)]
    gap: Option<f64>,
    /// Seed of the synthetic scenario when no directory is given.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Start each day from the previous day's final state.
    #[arg(long)]
    chain_state: bool,
    /// One FCR reserve per 4-hour block.
    #[arg(long)]
    blocks_4h: bool,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Run days one after another.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ServiceArg {
    Fcr,
    Mfrr,
    Both,
}

impl From<ServiceArg> for Service {
    fn from(s: ServiceArg) -> Self {
        match s {
            ServiceArg::Fcr => Service::Fcr,
            ServiceArg::Mfrr => Service::Mfrr,
            ServiceArg::Both => Service::Both,
        }
    }
}

#[derive(Args)]
struct BacktestArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "both")]
    service: ServiceArg,
    /// One-time investment used for the payback line of the summary (DKK).
    #[arg(long, default_value_t = DEFAULT_INVESTMENT_DKK)]
    investment: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "both")]
    service: ServiceArg,
    /// Band half-widths (°C), ascending; `--delta` adds a single value.
    #[arg(long, value_delimiter = ',')]
    deltas: Vec<f64>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Telemetry CSV.
    #[arg(long)]
    telemetry: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = DEFAULT_DAYS)]
    days: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("JSON value serialises"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = e.downcast_ref::<zincflex::Error>().map_or("cli", |z| z.kind());
            let err = json!({ "error": { "kind": kind, "message": format!("{e:#}") } });
            eprintln!("{err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<Value> {
    match cmd {
        Command::Simulate(c) => simulate(&c),
        Command::SteadyState(c) => steady_state(&c),
        Command::BidFcr(c) => bid_fcr(&c),
        Command::BidMfrr(c) => bid_mfrr(&c),
        Command::Backtest(a) => backtest(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Validate(c) => validate(&c),
        Command::Fit(a) => fit(&a),
        Command::Synth(a) => synth(&a),
    }
}

fn scenario(c: &Common) -> Result<(ScenarioBundle, ScenarioGaps)> {
    let (bundle, gaps) = match &c.scenario {
        Some(dir) => load_scenario(dir)?,
        None => {
            let spec = SynthSpec {
                seed: c.seed,
                ..SynthSpec::default()
            };
            (synthesize_scenario(&spec)?, ScenarioGaps::default())
        }
    };
    let bundle = bundle.restrict(c.from, c.to);
    if bundle.days().is_empty() {
        bail!("no complete day in the selected range");
    }
    Ok((bundle, gaps))
}

fn config(c: &Common) -> Result<BacktestConfig> {
    let mut cfg = BacktestConfig {
        chain_state: c.chain_state,
        blocks_4h: c.blocks_4h,
        ..BacktestConfig::default()
    };
    if let Some(d) = c.delta {
        if !(d > 0.0 && d.is_finite()) {
            bail!("--delta must be positive");
        }
        cfg.band = Some((-d, d));
    }
    if let Some(n) = c.steps_per_hour {
        cfg.fcr_steps_per_hour = n;
        cfg.mfrr_steps_per_hour = n;
    }
    if let Some(g) = c.gap {
        cfg.gap = g;
    }
    if c.node_limit.is_some() {
        cfg.node_limit = c.node_limit;
    }
    if c.sequential {
        cfg.execution = zincflex::Execution::Sequential;
    }
    Ok(cfg)
}

fn out_dir(c: &Common) -> Result<&Path> {
    c.out.as_deref().context("--out is required for this command")
}

/// The day selected by `--from`, or the first complete day.
fn one_day(bundle: &ScenarioBundle) -> Result<NaiveDate> {
    bundle.days().first().copied().context("no complete day")
}

fn simulate(c: &Common) -> Result<Value> {
    let out = out_dir(c)?;
    let (bundle, _) = scenario(c)?;
    let f = &bundle.furnace;
    let days = bundle.days();
    let mut lids = Vec::with_capacity(days.len() * 1440);
    for d in &days {
        lids.extend(bundle.day(*d)?.lids.0);
    }
    let initial = FurnaceState::at_setpoints(&f.setpoints);
    let run = simulate_hysteresis(&initial, ContactorState::default(), &f.params, &f.hysteresis, &LidSchedule(lids.clone()))?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("simulation.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["ts", "lid", "p_u_kw", "p_l_kw", "t_zu_c", "t_zl_c", "t_wu_c", "t_wl_c"])?;
    let start = zincflex::market_data::midnight(days[0]);
    let mut energy = 0.0;
    for (k, p) in run.powers.iter().enumerate() {
        let s = &run.trace.states[k + 1];
        energy += (p.p_u + p.p_l) * f.params.dt;
        w.write_record([
            format_ts(start + chrono::Duration::minutes(k as i64)),
            u8::from(lids[k]).to_string(),
            p.p_u.to_string(),
            p.p_l.to_string(),
            s.t_zu.to_string(),
            s.t_zl.to_string(),
            s.t_wu.to_string(),
            s.t_wl.to_string(),
        ])?;
    }
    w.flush()?;
    let walls = run.trace.states.iter().flat_map(|s| [s.t_wu, s.t_wl]);
    let (lo, hi) = walls.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(t), b.max(t)));
    Ok(json!({
        "days": days.len(),
        "energy_kwh": energy,
        "wall_min_c": lo,
        "wall_max_c": hi,
        "files": [path],
    }))
}

fn steady_state(c: &Common) -> Result<Value> {
    let furnace = match &c.scenario {
        Some(dir) => load_scenario(dir)?.0.furnace,
        None => FurnaceConfig::default(),
    };
    let on = steady_state_power(&furnace.params, &furnace.setpoints, true)?;
    let off = steady_state_power(&furnace.params, &furnace.setpoints, false)?;
    Ok(json!({
        "setpoints": furnace.setpoints,
        "lid_on": { "p_u_kw": on.1, "p_l_kw": on.0, "total_kw": on.0 + on.1 },
        "lid_off": { "p_u_kw": off.1, "p_l_kw": off.0, "total_kw": off.0 + off.1 },
    }))
}

fn bid_fcr(c: &Common) -> Result<Value> {
    let out = out_dir(c)?;
    let (bundle, _) = scenario(c)?;
    let date = one_day(&bundle)?;
    let day = bundle.day(date)?;
    let cfg = config(c)?;
    let input = fcr_day_input(&bundle.furnace, &day, FurnaceState::at_setpoints(&bundle.furnace.setpoints), &cfg)?;
    let s = solve_fcr(&input)?;
    let files = write_fcr_day(date, &s, out)?;
    Ok(json!({
        "date": date,
        "objective_dkk": s.objective,
        "penalty_dkk": s.penalty,
        "reserve_kw": s.p_r,
        "iterations": s.stats.iterations,
        "files": files,
    }))
}

fn bid_mfrr(c: &Common) -> Result<Value> {
    let out = out_dir(c)?;
    let (bundle, _) = scenario(c)?;
    let date = one_day(&bundle)?;
    let day = bundle.day(date)?;
    let cfg = config(c)?;
    let input = mfrr_day_input(&bundle.furnace, &day, FurnaceState::at_setpoints(&bundle.furnace.setpoints), &cfg)?;
    let s = solve_mfrr(&input)?;
    let files = write_mfrr_day(date, &s, out)?;
    Ok(json!({
        "date": date,
        "status": s.status.to_string(),
        "objective_dkk": s.objective,
        "bound_dkk": s.bound,
        "gap": s.gap,
        "reserve_kw": s.p_r,
        "accepted": s.g,
        "nodes": s.stats.nodes,
        "files": files,
    }))
}

fn backtest(a: &BacktestArgs) -> Result<Value> {
    let out = out_dir(&a.common)?;
    let (bundle, _) = scenario(&a.common)?;
    let cfg = BacktestConfig {
        service: a.service.into(),
        ..config(&a.common)?
    };
    let r = run_backtest(&bundle, &cfg)?;
    let mut files = write_backtest(&r, out, a.investment)?;
    files.extend(write_worst_days(&worst_days(&bundle, &cfg)?, out)?);
    let failed: Vec<_> = r
        .days
        .iter()
        .flat_map(|d| {
            [("fcr", &d.fcr), ("mfrr", &d.mfrr)]
                .into_iter()
                .filter_map(move |(n, s)| s.as_ref()?.error.as_ref().map(|e| json!({"date": d.date, "service": n, "error": e})))
        })
        .collect();
    Ok(json!({
        "days": r.days.len(),
        "base_cost_dkk": r.cumulative_base.last(),
        "fcr_savings_dkk": r.total_fcr_savings(),
        "mfrr_savings_dkk": r.total_mfrr_savings(),
        "failed": failed,
        "files": files,
    }))
}

fn sweep(a: &SweepArgs) -> Result<Value> {
    let out = out_dir(&a.common)?;
    let (bundle, _) = scenario(&a.common)?;
    let mut deltas = a.deltas.clone();
    deltas.extend(a.common.delta);
    if deltas.is_empty() {
        deltas = SWEEP_DELTAS.to_vec();
    }
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let cfg = BacktestConfig {
        service: a.service.into(),
        band: None,
        ..config(&Common {
            delta: None,
            ..a.common.clone()
        })?
    };
    let s = sweep_temperature(&bundle, &deltas, &cfg)?;
    let files = write_sweep(&s, out)?;
    let series = |x: &Option<zincflex::backtest::SweepSeries>| {
        x.as_ref().map(|x| {
            json!({
                "savings_dkk": x.savings,
                "bounds_dkk": x.bounds,
                "unconstrained_dkk": x.unconstrained,
                "fractions": x.fractions(),
                "failures": x.failures.len(),
            })
        })
    };
    Ok(json!({
        "deltas": s.deltas,
        "fcr": series(&s.fcr),
        "mfrr": series(&s.mfrr),
        "files": files,
    }))
}

fn validate(c: &Common) -> Result<Value> {
    let (bundle, gaps) = scenario(c)?;
    let days = bundle.days();
    Ok(json!({
        "days": days.len(),
        "first": days.first(),
        "last": days.last(),
        "gaps": {
            "prices": gaps.prices.iter().map(|t| format_ts(*t)).collect::<Vec<_>>(),
            "frequency": gaps.frequency.len(),
            "lids": gaps.lids.len(),
        },
    }))
}

fn fit(a: &FitArgs) -> Result<Value> {
    let tel = load_telemetry(&a.telemetry)?;
    let guess = match &a.common.scenario {
        Some(dir) => load_scenario(dir)?.0.furnace.params,
        None => FurnaceConfig::default().params,
    };
    let fit = fit_parameters(&tel.series, &guess)?;
    let r = one_step_residuals(&fit.params, fit.latent_init, &tel.series)?;
    let mut diag = serde_json::Map::new();
    for (zone, e) in [("upper", &r.upper), ("lower", &r.lower)] {
        let d = diagnose(e, FIT_MAX_LAG)?;
        diag.insert(
            zone.into(),
            json!({
                "acf_inside": d.acf_inside,
                "acf_band": d.acf_band,
                "ks_deviation": d.ks_deviation,
                "ks_bound": d.ks_bound,
                "white": d.white(),
            }),
        );
    }
    let mut summary = json!({
        "params": fit.params,
        "latent_init": fit.latent_init,
        "loss": fit.loss,
        "initial_loss": fit.initial_loss,
        "converged": fit.converged,
        "frozen": fit.frozen,
        "gaps": tel.gaps.len(),
        "residuals": diag,
    });
    if let Some(out) = &a.common.out {
        fs::create_dir_all(out)?;
        let path = out.join("fit.json");
        fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
        summary["files"] = json!([path]);
    }
    Ok(summary)
}

fn synth(a: &SynthArgs) -> Result<Value> {
    let out = out_dir(&a.common)?;
    let mut spec = SynthSpec {
        days: a.days,
        seed: a.common.seed,
        ..SynthSpec::default()
    };
    if let Some(d) = a.common.from {
        spec.start = d;
    }
    let bundle = synthesize_scenario(&spec)?;
    fs::create_dir_all(out)?;
    write_scenario(out, &bundle)?;
    Ok(json!({
        "days": bundle.days().len(),
        "seed": spec.seed,
        "start": spec.start,
        "dir": out,
    }))
}
