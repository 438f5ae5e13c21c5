//! Hindsight FCR bidding LP for one day.
//!
//! Variables, per hour `h`: total reserve `p_r`, penalised slack `s`, and per
//! participating zone the reserve `p_r^q ∈ [0, Base^q_h]` and slack
//! magnitude `s^q ≥ 0`. Per step `k`: total power `p`, zone power `p^q ≥ 0`,
//! free signed slack `s'^q`, and the four temperatures after the step.
//! A zone that does not participate runs at its baseline, a constant.
//!
//! With `H` hours, `S` steps per hour, `J = H·S` and `Z` participating zones:
//!
//! * variables: `H·(2 + 2Z) + J·(1 + 2Z) + 4J`
//! * rows: `J·(3Z + 5) + 2H`, plus `H − ⌈H/4⌉` rows with the 4-hour flag
//!
//! The temperature band is applied as bounds on the wall temperature
//! variables and adds no rows.

use zincflex_solver::{solve_lp_with, Comparator, LinearProgram, LpOptions, SolveStats, Var};

use crate::control::{baseline_profile, BaselineProfile, MINUTES_PER_HOUR};
use crate::error::{Error, Result};
use crate::grid::{add_state_rows, add_temperature_vars, read_trace, PowerExpr, StepGrid, Zone, Zones};
use crate::thermal::{FurnaceParameters, FurnaceState, LidSchedule, Setpoints, TemperatureTrace};

/// Hours per market block when bids are traded in 4-hour products.
pub const BLOCK_HOURS: usize = 4;

#[derive(Debug, Clone)]
pub struct FcrDayInput {
    pub params: FurnaceParameters,
    pub setpoints: Setpoints,
    pub baseline: BaselineProfile,
    pub initial: FurnaceState,
    pub lids: LidSchedule,
    /// Normalised response per minute, in [−1, 1].
    pub response: Vec<f64>,
    /// Capacity price per hour (DKK/kW).
    pub fcr_price: Vec<f64>,
    /// Penalty (DKK/kWh); `None` uses [`default_penalty`].
    pub penalty: Option<f64>,
    /// Wall temperature band `(Δmin, Δmax)` around the setpoints.
    pub band: Option<(f64, f64)>,
    pub blocks_4h: bool,
    pub steps_per_hour: usize,
    pub zones: Zones,
    pub lp: LpOptions,
}

impl FcrDayInput {
    /// Day input with the steady-state baseline, the initial state at the
    /// setpoints and one step per minute.
    pub fn new(
        params: FurnaceParameters,
        setpoints: Setpoints,
        lids: LidSchedule,
        response: Vec<f64>,
        fcr_price: Vec<f64>,
    ) -> Result<Self> {
        let baseline = baseline_profile(&params, &setpoints, &lids)?;
        Ok(Self {
            params,
            setpoints,
            baseline,
            initial: FurnaceState::at_setpoints(&setpoints),
            lids,
            response,
            fcr_price,
            penalty: None,
            band: None,
            blocks_4h: false,
            steps_per_hour: MINUTES_PER_HOUR,
            zones: Zones::default(),
            lp: LpOptions::default(),
        })
    }

    fn validate(&self) -> Result<()> {
        let hours = self.baseline.hours();
        if self.fcr_price.len() != hours {
            return Err(Error::domain(format!(
                "{} FCR prices for a {hours}-hour baseline",
                self.fcr_price.len()
            )));
        }
        if self.response.len() != hours * MINUTES_PER_HOUR {
            return Err(Error::domain(format!(
                "{} response samples for {hours} hours",
                self.response.len()
            )));
        }
        if let Some((i, f)) = self.response.iter().enumerate().find(|(_, f)| !(f.abs() <= 1.0)) {
            return Err(Error::domain(format!("response sample {i} = {f} outside [-1, 1]")));
        }
        if self.fcr_price.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::domain("FCR prices must be finite and non-negative"));
        }
        if let Some(pen) = self.penalty {
            if !(pen >= 0.0 && pen.is_finite()) {
                return Err(Error::domain(format!("penalty {pen} must be finite and non-negative")));
            }
        }
        if let Some((lo, hi)) = self.band {
            if !(lo <= 0.0 && 0.0 <= hi) {
                return Err(Error::domain(format!("band ({lo}, {hi}) must contain zero")));
            }
        }
        if !self.initial.is_finite() {
            return Err(Error::domain("non-finite initial state"));
        }
        Ok(())
    }
}

/// Ten times the day's highest capacity price, per kWh of slack.
pub fn default_penalty(fcr_price: &[f64], dt: f64) -> f64 {
    10.0 * fcr_price.iter().copied().fold(0.0, f64::max) / dt
}

/// Closed-form `(variables, rows)` of the problem built by
/// [`build_fcr_problem`].
pub fn fcr_problem_size(hours: usize, steps_per_hour: usize, zones: usize, blocks_4h: bool) -> (usize, usize) {
    let j = hours * steps_per_hour;
    let vars = hours * (2 + 2 * zones) + j * (1 + 2 * zones) + 4 * j;
    let mut rows = j * (3 * zones + 5) + 2 * hours;
    if blocks_4h {
        rows += hours - hours.div_ceil(BLOCK_HOURS);
    }
    (vars, rows)
}

/// Variable handles of an assembled FCR problem.
#[derive(Debug, Clone)]
pub struct FcrLayout {
    pub zones: Vec<Zone>,
    pub p_r: Vec<Var>,
    pub s: Vec<Var>,
    /// `zone_r[i][h]` for the `i`-th participating zone.
    pub zone_r: Vec<Vec<Var>>,
    pub zone_s: Vec<Vec<Var>>,
    pub p: Vec<Var>,
    pub zone_p: Vec<Vec<Var>>,
    pub zone_slack: Vec<Vec<Var>>,
    pub temps: Vec<[Var; 4]>,
}

#[derive(Debug, Clone)]
pub struct FcrProblem {
    pub lp: LinearProgram,
    pub layout: FcrLayout,
    pub penalty: f64,
    pub(crate) grid: StepGrid,
    /// Step-averaged response.
    pub response: Vec<f64>,
}

pub fn build_fcr_problem(input: &FcrDayInput) -> Result<FcrProblem> {
    input.validate()?;
    let grid = StepGrid::new(
        &input.params,
        &input.setpoints,
        &input.baseline,
        &input.lids,
        input.steps_per_hour,
    )?;
    let hours = grid.hours;
    let steps = grid.steps();
    let dt = grid.params.dt;
    let response = grid.step_mean(&input.response);
    let penalty = input
        .penalty
        .unwrap_or_else(|| default_penalty(&input.fcr_price, dt));
    let zones = input.zones.list();
    let inf = f64::INFINITY;

    let mut lp = LinearProgram::new();
    let p_r: Vec<Var> = (0..hours)
        .map(|h| lp.add_named_var(format!("pr_{h}"), 0.0, inf, input.fcr_price[h]))
        .collect();
    let s: Vec<Var> = (0..hours)
        .map(|h| lp.add_named_var(format!("s_{h}"), 0.0, inf, -penalty))
        .collect();
    let base_hourly = |z: Zone, h: usize| match z {
        Zone::Upper => input.baseline.hourly_u[h],
        Zone::Lower => input.baseline.hourly_l[h],
    };
    let zone_r: Vec<Vec<Var>> = zones
        .iter()
        .map(|&z| {
            (0..hours)
                .map(|h| lp.add_named_var(format!("pr{}_{h}", z.tag()), 0.0, base_hourly(z, h), 0.0))
                .collect()
        })
        .collect();
    let zone_s: Vec<Vec<Var>> = zones
        .iter()
        .map(|&z| {
            (0..hours)
                .map(|h| lp.add_named_var(format!("s{}_{h}", z.tag()), 0.0, inf, 0.0))
                .collect()
        })
        .collect();
    // total power is implied non-negative by the zone powers
    let p: Vec<Var> = (0..steps)
        .map(|k| lp.add_named_var(format!("p_{k}"), -inf, inf, 0.0))
        .collect();
    let zone_p: Vec<Vec<Var>> = zones
        .iter()
        .map(|&z| {
            (0..steps)
                .map(|k| lp.add_named_var(format!("p{}_{k}", z.tag()), 0.0, inf, 0.0))
                .collect()
        })
        .collect();
    let zone_slack: Vec<Vec<Var>> = zones
        .iter()
        .map(|&z| {
            (0..steps)
                .map(|k| lp.add_named_var(format!("sp{}_{k}", z.tag()), -inf, inf, 0.0))
                .collect()
        })
        .collect();
    let temps = add_temperature_vars(&mut lp, steps, &input.setpoints, input.band, "");

    for (i, &z) in zones.iter().enumerate() {
        for k in 0..steps {
            let h = grid.hour_of(k);
            lp.add_named_row(
                format!("resp{}_{k}", z.tag()),
                &[(zone_p[i][k], 1.0), (zone_r[i][h], -response[k]), (zone_slack[i][k], -1.0)],
                Comparator::Eq,
                grid.base[z.index()][k],
            );
            lp.add_named_row(
                format!("absp{}_{k}", z.tag()),
                &[(zone_s[i][h], 1.0), (zone_slack[i][k], -1.0)],
                Comparator::Ge,
                0.0,
            );
            lp.add_named_row(
                format!("absn{}_{k}", z.tag()),
                &[(zone_s[i][h], 1.0), (zone_slack[i][k], 1.0)],
                Comparator::Ge,
                0.0,
            );
        }
    }
    let fixed: Vec<Zone> = Zone::BOTH.into_iter().filter(|z| !input.zones.contains(*z)).collect();
    for k in 0..steps {
        let mut terms = vec![(p[k], 1.0)];
        terms.extend(zone_p.iter().map(|zp| (zp[k], -1.0)));
        let rhs: f64 = fixed.iter().map(|z| grid.base[z.index()][k]).sum();
        lp.add_named_row(format!("ptot_{k}"), &terms, Comparator::Eq, rhs);
    }
    let zone_pos = |z: Zone| zones.iter().position(|&q| q == z);
    add_state_rows(
        &mut lp,
        &grid,
        &input.initial,
        &temps,
        |k| {
            Zone::BOTH.map(|z| match zone_pos(z) {
                Some(i) => PowerExpr::var(zone_p[i][k], 1.0),
                None => PowerExpr::constant(grid.base[z.index()][k]),
            })
        },
        "",
    );
    for h in 0..hours {
        let mut terms = vec![(p_r[h], 1.0)];
        terms.extend(zone_r.iter().map(|zr| (zr[h], -1.0)));
        lp.add_named_row(format!("rsum_{h}"), &terms, Comparator::Eq, 0.0);
        let mut terms = vec![(s[h], 1.0)];
        terms.extend(zone_s.iter().map(|zs| (zs[h], -dt)));
        lp.add_named_row(format!("ssum_{h}"), &terms, Comparator::Eq, 0.0);
    }
    if input.blocks_4h {
        for h in 0..hours {
            if h % BLOCK_HOURS != 0 {
                lp.add_named_row(
                    format!("block_{h}"),
                    &[(p_r[h], 1.0), (p_r[h - 1], -1.0)],
                    Comparator::Eq,
                    0.0,
                );
            }
        }
    }

    Ok(FcrProblem {
        lp,
        layout: FcrLayout {
            zones,
            p_r,
            s,
            zone_r,
            zone_s,
            p,
            zone_p,
            zone_slack,
            temps,
        },
        penalty,
        grid,
        response,
    })
}

/// Solved day. Per-zone vectors are indexed by [`Zone::index`]; a zone that
/// does not participate reports zero reserve and slack and its baseline
/// power.
#[derive(Debug, Clone)]
pub struct FcrSolution {
    pub steps_per_hour: usize,
    pub p_r: Vec<f64>,
    pub zone_r: [Vec<f64>; 2],
    pub s: Vec<f64>,
    pub zone_s: [Vec<f64>; 2],
    /// Per step.
    pub p: Vec<f64>,
    pub zone_p: [Vec<f64>; 2],
    pub zone_slack: [Vec<f64>; 2],
    pub baseline: [Vec<f64>; 2],
    pub response: Vec<f64>,
    /// `J + 1` states, the initial state first.
    pub trace: TemperatureTrace,
    pub objective: f64,
    pub penalty: f64,
    pub stats: SolveStats,
}

impl FcrSolution {
    pub fn baseline_total(&self, k: usize) -> f64 {
        self.baseline[0][k] + self.baseline[1][k]
    }
}

pub fn solve_fcr(input: &FcrDayInput) -> Result<FcrSolution> {
    let problem = build_fcr_problem(input)?;
    let sol = solve_lp_with(&problem.lp, &input.lp)?;
    if !sol.is_optimal() {
        return Err(Error::NotSolved {
            status: sol.status,
            detail: "FCR day problem".into(),
        });
    }
    Ok(extract(&problem, input, &sol.values, sol.objective, sol.stats))
}

fn extract(problem: &FcrProblem, input: &FcrDayInput, x: &[f64], objective: f64, stats: SolveStats) -> FcrSolution {
    let l = &problem.layout;
    let grid = &problem.grid;
    let read = |vs: &[Var]| vs.iter().map(|v| x[v.index()]).collect::<Vec<_>>();
    let hours = grid.hours;
    let steps = grid.steps();
    let mut zone_r = [vec![0.0; hours], vec![0.0; hours]];
    let mut zone_s = [vec![0.0; hours], vec![0.0; hours]];
    let mut zone_p = grid.base.clone();
    let mut zone_slack = [vec![0.0; steps], vec![0.0; steps]];
    for (i, z) in l.zones.iter().enumerate() {
        let q = z.index();
        zone_r[q] = read(&l.zone_r[i]);
        zone_s[q] = read(&l.zone_s[i]);
        zone_p[q] = read(&l.zone_p[i]);
        zone_slack[q] = read(&l.zone_slack[i]);
    }
    FcrSolution {
        steps_per_hour: grid.steps_per_hour,
        p_r: read(&l.p_r),
        zone_r,
        s: read(&l.s),
        zone_s,
        p: read(&l.p),
        zone_p,
        zone_slack,
        baseline: grid.base.clone(),
        response: problem.response.clone(),
        trace: TemperatureTrace {
            states: read_trace(x, &input.initial, &l.temps),
        },
        objective,
        penalty: problem.penalty,
        stats,
    }
}
