//! Day-by-day backtests and temperature-band sweeps over a scenario.
//!
//! Cost convention: a day's base cost is the spot cost of the baseline
//! consumption; a service's cost is the base cost minus the optimiser's
//! objective. A day whose optimised objective is negative, or whose solve
//! fails, falls back to not participating, so its cost is the base cost.

use chrono::NaiveDate;
use log::{info, warn};
use serde::{Deserialize, Serialize};
use zincflex_solver::{LpOptions, MilpOptions};

use crate::control::baseline_profile;
use crate::error::{Error, Result};
use crate::fcr::{solve_fcr, FcrDayInput, FcrSolution};
use crate::frequency::{normalize_series, worst_day_fcr};
use crate::grid::Zones;
use crate::market_data::{FurnaceConfig, MarketDay, ScenarioBundle};
use crate::mfrr::{solve_mfrr, worst_day_mfrr, MfrrDayInput, MfrrSolution, DEFAULT_STEPS_PER_HOUR};
use crate::par::{self, Execution};
use crate::thermal::FurnaceState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Service {
    Fcr,
    Mfrr,
    Both,
}

impl Service {
    pub fn fcr(self) -> bool {
        matches!(self, Service::Fcr | Service::Both)
    }

    pub fn mfrr(self) -> bool {
        matches!(self, Service::Mfrr | Service::Both)
    }
}

#[derive(Debug, Clone)]
pub struct BacktestConfig {
    pub service: Service,
    /// Start each day from the previous day's final state instead of the
    /// setpoints.
    pub chain_state: bool,
    pub fcr_steps_per_hour: usize,
    pub mfrr_steps_per_hour: usize,
    pub band: Option<(f64, f64)>,
    pub blocks_4h: bool,
    pub fcr_penalty: Option<f64>,
    pub mfrr_penalty: Option<f64>,
    pub zones: Zones,
    pub lp: LpOptions,
    pub gap: f64,
    pub node_limit: Option<usize>,
    pub execution: Execution,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            service: Service::Both,
            chain_state: false,
            fcr_steps_per_hour: 60,
            mfrr_steps_per_hour: DEFAULT_STEPS_PER_HOUR,
            band: None,
            blocks_4h: false,
            fcr_penalty: None,
            mfrr_penalty: None,
            zones: Zones::default(),
            lp: LpOptions::default(),
            gap: 1e-4,
            node_limit: Some(1_000),
            execution: Execution::Parallel,
        }
    }
}

impl BacktestConfig {
    fn milp(&self) -> MilpOptions {
        MilpOptions {
            lp: self.lp,
            gap_tol: self.gap,
            node_limit: self.node_limit,
            ..MilpOptions::default()
        }
    }
}

/// Spot cost of the baseline consumption of one day (DKK).
pub fn base_cost(furnace: &FurnaceConfig, day: &MarketDay) -> Result<f64> {
    let b = baseline_profile(&furnace.params, &furnace.setpoints, &day.lids)?;
    Ok((0..b.hours()).map(|h| day.spot[h] * b.hourly_total(h)).sum())
}

pub fn fcr_day_input(
    furnace: &FurnaceConfig,
    day: &MarketDay,
    initial: FurnaceState,
    cfg: &BacktestConfig,
) -> Result<FcrDayInput> {
    let mut input = FcrDayInput::new(
        furnace.params,
        furnace.setpoints,
        day.lids.clone(),
        normalize_series(&day.hz)?,
        day.fcr.clone(),
    )?;
    input.initial = initial;
    input.penalty = cfg.fcr_penalty;
    input.band = cfg.band;
    input.blocks_4h = cfg.blocks_4h;
    input.steps_per_hour = cfg.fcr_steps_per_hour;
    input.zones = cfg.zones;
    input.lp = cfg.lp;
    Ok(input)
}

pub fn mfrr_day_input(
    furnace: &FurnaceConfig,
    day: &MarketDay,
    initial: FurnaceState,
    cfg: &BacktestConfig,
) -> Result<MfrrDayInput> {
    let mut input = MfrrDayInput::new(
        furnace.params,
        furnace.setpoints,
        day.lids.clone(),
        furnace.p_min,
        furnace.p_nom,
        day.mfrr.clone(),
        day.spot.clone(),
        day.balancing.clone(),
    )?;
    input.initial = initial;
    input.penalty = cfg.mfrr_penalty;
    input.band = cfg.band;
    input.steps_per_hour = cfg.mfrr_steps_per_hour;
    input.zones = cfg.zones;
    input.milp = cfg.milp();
    Ok(input)
}

/// Outcome of one service on one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceDay {
    /// Optimised objective (DKK); `None` when the solve failed.
    pub objective: Option<f64>,
    /// Cost after participation (DKK).
    pub cost: f64,
    pub error: Option<String>,
    /// Simplex iterations or interior-point iterations, summed over nodes.
    pub iterations: usize,
    pub nodes: usize,
    pub gap: Option<f64>,
}

impl ServiceDay {
    fn from_objective(base: f64, objective: f64, iterations: usize, nodes: usize, gap: Option<f64>) -> Self {
        Self {
            objective: Some(objective),
            cost: base - objective.max(0.0),
            error: None,
            iterations,
            nodes,
            gap,
        }
    }

    fn failed(base: f64, e: &Error) -> Self {
        Self {
            objective: None,
            cost: base,
            error: Some(e.to_string()),
            iterations: 0,
            nodes: 0,
            gap: None,
        }
    }

    pub fn savings(&self, base: f64) -> f64 {
        base - self.cost
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayResult {
    pub date: NaiveDate,
    pub base_cost: f64,
    pub fcr: Option<ServiceDay>,
    pub mfrr: Option<ServiceDay>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub days: Vec<DayResult>,
    pub cumulative_base: Vec<f64>,
    /// Running sums of the FCR cost; days without an FCR run count their
    /// base cost.
    pub cumulative_fcr: Vec<f64>,
    pub cumulative_mfrr: Vec<f64>,
}

pub fn running_sum(v: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    v.into_iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

impl BacktestResult {
    pub fn from_days(mut days: Vec<DayResult>) -> Self {
        days.sort_by_key(|d| d.date);
        let cost = |d: &DayResult, s: &Option<ServiceDay>| s.as_ref().map_or(d.base_cost, |x| x.cost);
        Self {
            cumulative_base: running_sum(days.iter().map(|d| d.base_cost)),
            cumulative_fcr: running_sum(days.iter().map(|d| cost(d, &d.fcr))),
            cumulative_mfrr: running_sum(days.iter().map(|d| cost(d, &d.mfrr))),
            days,
        }
    }

    pub fn total_fcr_savings(&self) -> f64 {
        self.cumulative_base.last().unwrap_or(&0.0) - self.cumulative_fcr.last().unwrap_or(&0.0)
    }

    pub fn total_mfrr_savings(&self) -> f64 {
        self.cumulative_base.last().unwrap_or(&0.0) - self.cumulative_mfrr.last().unwrap_or(&0.0)
    }
}

fn run_fcr_day(
    furnace: &FurnaceConfig,
    day: &MarketDay,
    base: f64,
    initial: FurnaceState,
    cfg: &BacktestConfig,
) -> (ServiceDay, Option<FurnaceState>) {
    match fcr_day_input(furnace, day, initial, cfg).and_then(|i| solve_fcr(&i)) {
        Ok(s) => (
            ServiceDay::from_objective(base, s.objective, s.stats.iterations, s.stats.nodes, None),
            s.trace.last(),
        ),
        Err(e) => {
            warn!("FCR {}: {e}", day.date);
            (ServiceDay::failed(base, &e), None)
        }
    }
}

fn run_mfrr_day(
    furnace: &FurnaceConfig,
    day: &MarketDay,
    base: f64,
    initial: FurnaceState,
    cfg: &BacktestConfig,
) -> (ServiceDay, Option<FurnaceState>) {
    match mfrr_day_input(furnace, day, initial, cfg).and_then(|i| solve_mfrr(&i)) {
        Ok(s) => (
            ServiceDay::from_objective(base, s.objective, s.stats.iterations, s.stats.nodes, s.gap),
            s.trace.last(),
        ),
        Err(e) => {
            warn!("mFRR {}: {e}", day.date);
            (ServiceDay::failed(base, &e), None)
        }
    }
}

pub fn run_backtest(bundle: &ScenarioBundle, cfg: &BacktestConfig) -> Result<BacktestResult> {
    bundle.furnace.validate()?;
    let dates = bundle.days();
    if dates.is_empty() {
        return Err(Error::domain("scenario contains no complete day"));
    }
    let furnace = &bundle.furnace;
    let setpoint_state = FurnaceState::at_setpoints(&furnace.setpoints);
    let days: Vec<MarketDay> = dates.iter().map(|&d| bundle.day(d)).collect::<Result<_>>()?;
    let bases: Vec<f64> = days.iter().map(|d| base_cost(furnace, d)).collect::<Result<_>>()?;
    info!("backtest over {} days", days.len());

    let results = if cfg.chain_state {
        let mut fcr_state = setpoint_state;
        let mut mfrr_state = setpoint_state;
        let mut out = Vec::with_capacity(days.len());
        for (day, &base) in days.iter().zip(&bases) {
            let fcr = cfg.service.fcr().then(|| {
                let (r, end) = run_fcr_day(furnace, day, base, fcr_state, cfg);
                fcr_state = end.unwrap_or(setpoint_state);
                r
            });
            let mfrr = cfg.service.mfrr().then(|| {
                let (r, end) = run_mfrr_day(furnace, day, base, mfrr_state, cfg);
                mfrr_state = end.unwrap_or(setpoint_state);
                r
            });
            out.push(DayResult {
                date: day.date,
                base_cost: base,
                fcr,
                mfrr,
            });
        }
        out
    } else {
        let items: Vec<(&MarketDay, f64)> = days.iter().zip(bases.iter().copied()).collect();
        par::map(cfg.execution, &items, |&(day, base)| DayResult {
            date: day.date,
            base_cost: base,
            fcr: cfg
                .service
                .fcr()
                .then(|| run_fcr_day(furnace, day, base, setpoint_state, cfg).0),
            mfrr: cfg
                .service
                .mfrr()
                .then(|| run_mfrr_day(furnace, day, base, setpoint_state, cfg).0),
        })
    };
    Ok(BacktestResult::from_days(results))
}

/// One failed cell of a sweep; `delta = None` is the unconstrained run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub date: NaiveDate,
    pub delta: Option<f64>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSeries {
    /// Total savings per Δ (DKK).
    pub savings: Vec<f64>,
    /// Sum of the proven per-day upper bounds on the savings per Δ (DKK).
    /// Equal to `savings` for the linear FCR problem.
    pub bounds: Vec<f64>,
    /// Total savings without a band (DKK).
    pub unconstrained: f64,
    pub unconstrained_bound: f64,
    pub failures: Vec<SweepFailure>,
}

impl SweepSeries {
    /// Savings at each Δ as a share of the unconstrained savings.
    pub fn fractions(&self) -> Vec<f64> {
        self.savings.iter().map(|s| share(*s, self.unconstrained)).collect()
    }

    /// Largest share of the unconstrained optimum each Δ can reach: the
    /// banded upper bound over the unconstrained incumbent.
    pub fn fraction_bounds(&self) -> Vec<f64> {
        self.bounds.iter().map(|b| share(*b, self.unconstrained)).collect()
    }
}

fn share(x: f64, of: f64) -> f64 {
    if of > 0.0 {
        x / of
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub deltas: Vec<f64>,
    pub fcr: Option<SweepSeries>,
    pub mfrr: Option<SweepSeries>,
}

/// Re-solves every day for each symmetric band `(−Δ, Δ)` and once without
/// a band. Each mFRR day is solved in ascending Δ and seeded with the
/// solution for the previous Δ, which stays feasible as the band widens.
pub fn sweep_temperature(
    bundle: &ScenarioBundle,
    deltas: &[f64],
    cfg: &BacktestConfig,
) -> Result<SweepResult> {
    if deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::domain("sweep deltas must be positive and finite"));
    }
    if deltas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("sweep deltas must be strictly ascending"));
    }
    bundle.furnace.validate()?;
    let dates = bundle.days();
    if dates.is_empty() {
        return Err(Error::domain("scenario contains no complete day"));
    }
    let furnace = &bundle.furnace;
    let start = FurnaceState::at_setpoints(&furnace.setpoints);
    let days: Vec<MarketDay> = dates.iter().map(|&d| bundle.day(d)).collect::<Result<_>>()?;
    let bands: Vec<Option<f64>> = deltas.iter().copied().map(Some).chain([None]).collect();
    let with_band = |delta: Option<f64>| BacktestConfig {
        band: delta.map(|d| (-d, d)),
        ..cfg.clone()
    };

    let fcr = cfg.service.fcr().then(|| {
        let cells: Vec<(usize, usize)> = (0..days.len())
            .flat_map(|d| (0..bands.len()).map(move |b| (d, b)))
            .collect();
        let outcomes = par::map(cfg.execution, &cells, |&(d, b)| {
            let c = with_band(bands[b]);
            fcr_day_input(furnace, &days[d], start, &c).and_then(|i| solve_fcr(&i))
                .map(|s| s.objective.max(0.0))
        });
        let mut totals = vec![0.0; bands.len()];
        let mut failures = Vec::new();
        for (&(d, b), o) in cells.iter().zip(outcomes) {
            match o {
                Ok(v) => totals[b] += v,
                Err(e) => failures.push(SweepFailure {
                    date: days[d].date,
                    delta: bands[b],
                    error: e.to_string(),
                }),
            }
        }
        let unconstrained = totals.pop().expect("unconstrained column");
        SweepSeries {
            bounds: totals.clone(),
            savings: totals,
            unconstrained,
            unconstrained_bound: unconstrained,
            failures,
        }
    });

    let mfrr = cfg.service.mfrr().then(|| {
        let per_day = par::map(cfg.execution, &days, |day| {
            let mut warm: Option<Vec<f64>> = None;
            bands
                .iter()
                .map(|&delta| {
                    let c = with_band(delta);
                    let r = mfrr_day_input(furnace, day, start, &c).and_then(|mut i| {
                        i.warm_start = warm.clone();
                        solve_mfrr(&i)
                    });
                    match r {
                        Ok(s) => {
                            let v = (s.objective.max(0.0), s.bound.max(0.0));
                            warm = Some(s.values);
                            Ok(v)
                        }
                        Err(e) => Err(e.to_string()),
                    }
                })
                .collect::<Vec<_>>()
        });
        let mut totals = vec![0.0; bands.len()];
        let mut bounds = vec![0.0; bands.len()];
        let mut failures = Vec::new();
        for (day, row) in days.iter().zip(per_day) {
            for (b, o) in row.into_iter().enumerate() {
                match o {
                    Ok((v, ub)) => {
                        totals[b] += v;
                        bounds[b] += ub;
                    }
                    Err(error) => failures.push(SweepFailure {
                        date: day.date,
                        delta: bands[b],
                        error,
                    }),
                }
            }
        }
        let unconstrained = totals.pop().expect("unconstrained column");
        let unconstrained_bound = bounds.pop().expect("unconstrained column");
        SweepSeries {
            savings: totals,
            bounds,
            unconstrained,
            unconstrained_bound,
            failures,
        }
    });

    Ok(SweepResult {
        deltas: deltas.to_vec(),
        fcr,
        mfrr,
    })
}

/// Full solutions of the most demanding days: the largest frequency
/// deviation for FCR and the largest up-regulation value for mFRR.
#[derive(Debug, Clone)]
pub struct WorstDays {
    pub fcr: Option<(NaiveDate, FcrSolution)>,
    pub mfrr: Option<(NaiveDate, MfrrSolution)>,
}

pub fn worst_days(bundle: &ScenarioBundle, cfg: &BacktestConfig) -> Result<WorstDays> {
    let furnace = &bundle.furnace;
    let start = FurnaceState::at_setpoints(&furnace.setpoints);
    let available = bundle.days();
    let fcr = if cfg.service.fcr() {
        let date = worst_day_fcr(&bundle.frequency)?;
        if available.contains(&date) {
            let day = bundle.day(date)?;
            Some((date, solve_fcr(&fcr_day_input(furnace, &day, start, cfg)?)?))
        } else {
            warn!("worst FCR day {date} lacks price or lid data");
            None
        }
    } else {
        None
    };
    let mfrr = if cfg.service.mfrr() {
        let date = worst_day_mfrr(&bundle.prices)?;
        if available.contains(&date) {
            let day = bundle.day(date)?;
            Some((date, solve_mfrr(&mfrr_day_input(furnace, &day, start, cfg)?)?))
        } else {
            warn!("worst mFRR day {date} lacks frequency or lid data");
            None
        }
    } else {
        None
    };
    Ok(WorstDays { fcr, mfrr })
}
