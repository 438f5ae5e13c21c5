//! Hindsight mFRR bidding MILP for one day.
//!
//! Decisions are hourly. A zone's power in step `k` of hour `h` is its
//! hourly power scaled by the step's share of the hourly baseline,
//! `p^q_h · Base^q_k / Base^q_h`, so that zero regulation reproduces the
//! baseline trajectory exactly. Two thermal blocks are embedded, one driven
//! by the actual powers and one by the baseline.
//!
//! With `H` hours, `S` steps per hour, `J = H·S` and `Z` participating zones:
//!
//! * variables: `H·(8 + 11Z) + 8J`, of which `H·(1 + 6Z)` are binary
//! * rows: `13H + 8J + Z·(15H − 1)`
//!
//! The rebound row compares the zinc temperature of the zone with its
//! baseline over the states `S(h−1) ..= S·h` and exists for `h > 1`.

use chrono::NaiveDate;
use log::{debug, warn};
use zincflex_solver::{solve_milp_with, Comparator, LinearProgram, MilpOptions, MilpProblem, SolveStats, Status, Var};

use crate::control::{baseline_profile, BaselineProfile, MINUTES_PER_HOUR};
use crate::error::{Error, Result};
use crate::grid::{add_state_rows, add_temperature_vars, read_trace, PowerExpr, StepGrid, Zone, Zones};
use crate::market_data::PriceSeries;
use crate::thermal::{FurnaceParameters, FurnaceState, LidSchedule, Setpoints, TemperatureTrace};

pub const DEFAULT_STEPS_PER_HOUR: usize = 4;
/// Smallest down-regulation, as a share of the down-regulation headroom.
pub const MIN_DOWN_SHARE: f64 = 0.10;

/// Big-M constants. `price` bounds the bid rows, `power` the activation
/// rows and `temperature` each state's deviation in the rebound rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigM {
    pub price: f64,
    pub power: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone)]
pub struct MfrrDayInput {
    pub params: FurnaceParameters,
    pub setpoints: Setpoints,
    pub baseline: BaselineProfile,
    pub initial: FurnaceState,
    pub lids: LidSchedule,
    /// Zone limits indexed by [`Zone::index`] (kW).
    pub p_min: [f64; 2],
    pub p_nom: [f64; 2],
    /// Capacity price per hour (DKK/kW).
    pub mfrr_price: Vec<f64>,
    /// Spot price per hour (DKK/kWh).
    pub spot: Vec<f64>,
    /// Balancing price per hour (DKK/kWh).
    pub balancing: Vec<f64>,
    /// Penalty (DKK/kWh); `None` uses [`default_penalty`].
    pub penalty: Option<f64>,
    /// `None` uses [`default_big_m`], with the temperature entry tightened
    /// to the reachable zinc deviation when a band is set.
    pub big_m: Option<BigM>,
    pub steps_per_hour: usize,
    pub band: Option<(f64, f64)>,
    pub zones: Zones,
    pub milp: MilpOptions,
    /// Candidate incumbent, e.g. the solution of a tighter band. Used only
    /// when feasible and better than the zero-regulation point.
    pub warm_start: Option<Vec<f64>>,
}

impl MfrrDayInput {
    /// Day input with the steady-state baseline, the initial state at the
    /// setpoints, four steps per hour and the given zone limits.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        params: FurnaceParameters,
        setpoints: Setpoints,
        lids: LidSchedule,
        p_min: [f64; 2],
        p_nom: [f64; 2],
        mfrr_price: Vec<f64>,
        spot: Vec<f64>,
        balancing: Vec<f64>,
    ) -> Result<Self> {
        let baseline = baseline_profile(&params, &setpoints, &lids)?;
        Ok(Self {
            params,
            setpoints,
            baseline,
            initial: FurnaceState::at_setpoints(&setpoints),
            lids,
            p_min,
            p_nom,
            mfrr_price,
            spot,
            balancing,
            penalty: None,
            big_m: None,
            steps_per_hour: DEFAULT_STEPS_PER_HOUR,
            band: None,
            zones: Zones::default(),
            milp: MilpOptions::default(),
            warm_start: None,
        })
    }

    fn base_hourly(&self, z: Zone, h: usize) -> f64 {
        match z {
            Zone::Upper => self.baseline.hourly_u[h],
            Zone::Lower => self.baseline.hourly_l[h],
        }
    }

    fn validate(&self) -> Result<()> {
        let hours = self.baseline.hours();
        for (name, v) in [("mFRR", &self.mfrr_price), ("spot", &self.spot), ("balancing", &self.balancing)] {
            if v.len() != hours {
                return Err(Error::domain(format!("{} {name} prices for {hours} hours", v.len())));
            }
            if v.iter().any(|p| !p.is_finite()) {
                return Err(Error::domain(format!("non-finite {name} price")));
            }
        }
        if self.mfrr_price.iter().any(|&p| p < 0.0) {
            return Err(Error::domain("mFRR capacity prices must be non-negative"));
        }
        for z in Zone::BOTH {
            let (lo, hi) = (self.p_min[z.index()], self.p_nom[z.index()]);
            for h in 0..hours {
                let b = self.base_hourly(z, h);
                if !(lo <= b + 1e-9 && b <= hi + 1e-9) {
                    return Err(Error::domain(format!(
                        "zone {} hour {h}: baseline {b} outside [{lo}, {hi}]",
                        z.tag()
                    )));
                }
            }
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
        if let Some(m) = self.big_m {
            if !(m.price > 0.0 && m.power > 0.0 && m.temperature > 0.0) {
                return Err(Error::domain("big-M values must be positive"));
            }
        }
        Ok(())
    }
}

/// Ten times the day's highest capacity-plus-balancing price.
pub fn default_penalty(mfrr_price: &[f64], balancing: &[f64]) -> f64 {
    10.0 * mfrr_price
        .iter()
        .zip(balancing)
        .map(|(r, b)| r + b)
        .fold(0.0, f64::max)
}

/// Ten times the largest price differential (at least 1), the summed
/// nominal power, and ten times the largest setpoint-to-ambient gap.
pub fn default_big_m(input: &MfrrDayInput) -> BigM {
    let spread = input
        .balancing
        .iter()
        .zip(&input.spot)
        .map(|(b, s)| (b - s).abs())
        .fold(0.0, f64::max);
    let sp = input.setpoints.t_sp_u.max(input.setpoints.t_sp_l);
    BigM {
        price: (10.0 * spread).max(1.0),
        power: input.p_nom.iter().sum::<f64>().max(1.0),
        temperature: 10.0 * (sp - input.params.t_ambient).max(1.0),
    }
}

/// With a band, a bound on any zinc temperature's distance from its
/// baseline. Each explicit-Euler zinc update is a convex combination of the
/// zone's zinc, the other zinc and the zone's wall, so the zinc deviation
/// never exceeds the largest wall deviation, which is at most the band plus
/// the baseline wall's own distance from the setpoint.
fn banded_zinc_bound(input: &MfrrDayInput, grid: &StepGrid) -> Option<f64> {
    let (lo, hi) = input.band?;
    let sp = [input.setpoints.t_sp_u, input.setpoints.t_sp_l];
    let mut state = input.initial.to_array();
    let mut drift = (state[2] - sp[0]).abs().max((state[3] - sp[1]).abs());
    for k in 0..grid.steps() {
        state = grid.params.transition(grid.lid[k]).apply(state, grid.base[0][k], grid.base[1][k]);
        drift = drift.max((state[2] - sp[0]).abs()).max((state[3] - sp[1]).abs());
    }
    Some(lo.abs().max(hi.abs()) + drift + 1e-6)
}

/// Closed-form `(variables, binaries, rows)` of [`build_mfrr_problem`].
pub fn mfrr_problem_size(hours: usize, steps_per_hour: usize, zones: usize) -> (usize, usize, usize) {
    let j = hours * steps_per_hour;
    let vars = hours * (8 + 11 * zones) + 8 * j;
    let binaries = hours * (1 + 6 * zones);
    let rows = 13 * hours + 8 * j + zones * (15 * hours - 1);
    (vars, binaries, rows)
}

/// Hourly variables of one participating zone.
#[derive(Debug, Clone)]
pub struct MfrrZoneVars {
    pub zone: Zone,
    pub p: Vec<Var>,
    pub r: Vec<Var>,
    pub bu: Vec<Var>,
    pub bd: Vec<Var>,
    pub s: Vec<Var>,
    pub u_up: Vec<Var>,
    pub u_down: Vec<Var>,
    pub y_up: Vec<Var>,
    pub y_down: Vec<Var>,
    pub z_up: Vec<Var>,
    pub z_down: Vec<Var>,
}

#[derive(Debug, Clone)]
pub struct MfrrLayout {
    pub p: Vec<Var>,
    pub p_r: Vec<Var>,
    pub p_bu: Vec<Var>,
    pub p_bd: Vec<Var>,
    pub s: Vec<Var>,
    pub lambda_bid: Vec<Var>,
    pub phi: Vec<Var>,
    pub g: Vec<Var>,
    pub zones: Vec<MfrrZoneVars>,
    pub temps: Vec<[Var; 4]>,
    pub base_temps: Vec<[Var; 4]>,
}

#[derive(Debug, Clone)]
pub struct MfrrProblem {
    pub milp: MilpProblem,
    pub layout: MfrrLayout,
    pub penalty: f64,
    pub big_m: BigM,
    /// `1` where the balancing price exceeds spot.
    pub indicator: Vec<bool>,
    pub(crate) grid: StepGrid,
    /// Per step, the share of the hourly baseline, indexed by zone.
    pub(crate) share: [Vec<f64>; 2],
}

pub fn build_mfrr_problem(input: &MfrrDayInput) -> Result<MfrrProblem> {
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
    let sph = grid.steps_per_hour;
    let penalty = input
        .penalty
        .unwrap_or_else(|| default_penalty(&input.mfrr_price, &input.balancing));
    let m = input.big_m.unwrap_or_else(|| {
        let mut m = default_big_m(input);
        if let Some(d) = banded_zinc_bound(input, &grid) {
            m.temperature = m.temperature.min(d);
        }
        m
    });
    let indicator: Vec<bool> = input
        .balancing
        .iter()
        .zip(&input.spot)
        .map(|(b, s)| b > s)
        .collect();
    let ind = |h: usize| if indicator[h] { 1.0 } else { 0.0 };
    let inf = f64::INFINITY;
    let mut milp = MilpProblem::new(LinearProgram::new());

    let hourly = |lp: &mut LinearProgram, name: &str, lo: f64, hi: f64, obj: &dyn Fn(usize) -> f64| -> Vec<Var> {
        (0..hours)
            .map(|h| lp.add_named_var(format!("{name}_{h}"), lo, hi, obj(h)))
            .collect()
    };
    let p = hourly(&mut milp.lp, "p", 0.0, inf, &|_| 0.0);
    let p_r = hourly(&mut milp.lp, "pr", 0.0, inf, &|h| input.mfrr_price[h]);
    let p_bu = hourly(&mut milp.lp, "pbu", 0.0, inf, &|h| input.balancing[h]);
    let p_bd = hourly(&mut milp.lp, "pbd", 0.0, inf, &|h| -input.balancing[h]);
    let s = hourly(&mut milp.lp, "s", 0.0, inf, &|_| -penalty);
    let lambda_bid = hourly(&mut milp.lp, "bid", 0.0, inf, &|_| 0.0);
    let phi = hourly(&mut milp.lp, "phi", 0.0, inf, &|_| 0.0);
    let g: Vec<Var> = (0..hours).map(|h| milp.add_binary(format!("g_{h}"), 0.0)).collect();

    let participating = input.zones.list();
    let mut zones = Vec::with_capacity(participating.len());
    for &z in &participating {
        let q = z.index();
        let t = z.tag();
        let lp = &mut milp.lp;
        let zp = (0..hours)
            .map(|h| lp.add_named_var(format!("p{t}_{h}"), input.p_min[q], input.p_nom[q], 0.0))
            .collect();
        let zr = (0..hours)
            .map(|h| lp.add_named_var(format!("pr{t}_{h}"), 0.0, input.base_hourly(z, h), 0.0))
            .collect();
        let bu = (0..hours)
            .map(|h| lp.add_named_var(format!("pbu{t}_{h}"), 0.0, inf, 0.0))
            .collect();
        let bd = (0..hours)
            .map(|h| lp.add_named_var(format!("pbd{t}_{h}"), 0.0, inf, 0.0))
            .collect();
        let zs = (0..hours)
            .map(|h| lp.add_named_var(format!("s{t}_{h}"), 0.0, input.base_hourly(z, h), 0.0))
            .collect();
        let mut bins = |name: &str| -> Vec<Var> {
            (0..hours)
                .map(|h| milp.add_binary(format!("{name}{t}_{h}"), 0.0))
                .collect()
        };
        let (u_up, u_down, y_up, y_down, z_up, z_down) = (
            bins("uu"),
            bins("ud"),
            bins("yu"),
            bins("yd"),
            bins("zu"),
            bins("zd"),
        );
        zones.push(MfrrZoneVars {
            zone: z,
            p: zp,
            r: zr,
            bu,
            bd,
            s: zs,
            u_up,
            u_down,
            y_up,
            y_down,
            z_up,
            z_down,
        });
    }
    let temps = add_temperature_vars(&mut milp.lp, steps, &input.setpoints, input.band, "");
    let base_temps = add_temperature_vars(&mut milp.lp, steps, &input.setpoints, None, "b");

    let lp = &mut milp.lp;
    let fixed: Vec<Zone> = Zone::BOTH.into_iter().filter(|z| !input.zones.contains(*z)).collect();
    for h in 0..hours {
        let sum_row = |lp: &mut LinearProgram, name: &str, total: Var, parts: &dyn Fn(&MfrrZoneVars) -> Var, rhs: f64| {
            let mut terms = vec![(total, 1.0)];
            terms.extend(zones.iter().map(|zv| (parts(zv), -1.0)));
            lp.add_named_row(format!("{name}_{h}"), &terms, Comparator::Eq, rhs);
        };
        let fixed_base: f64 = fixed.iter().map(|&z| input.base_hourly(z, h)).sum();
        sum_row(lp, "psum", p[h], &|zv| zv.p[h], fixed_base);
        sum_row(lp, "rsum", p_r[h], &|zv| zv.r[h], 0.0);
        sum_row(lp, "ssum", s[h], &|zv| zv.s[h], 0.0);
        sum_row(lp, "bdsum", p_bd[h], &|zv| zv.bd[h], 0.0);
        sum_row(lp, "busum", p_bu[h], &|zv| zv.bu[h], 0.0);

        let spread = input.balancing[h] - input.spot[h];
        lp.add_named_row(
            format!("bid_hi_{h}"),
            &[(lambda_bid[h], 1.0), (g[h], m.price)],
            Comparator::Le,
            spread + m.price,
        );
        lp.add_named_row(
            format!("bid_lo_{h}"),
            &[(lambda_bid[h], 1.0), (g[h], m.price)],
            Comparator::Ge,
            spread,
        );
        lp.add_named_row(
            format!("act_cap_{h}"),
            &[(p_bu[h], 1.0), (phi[h], -ind(h))],
            Comparator::Le,
            0.0,
        );
        lp.add_named_row(
            format!("act_del_{h}"),
            &[(p_bu[h], 1.0), (s[h], 1.0), (phi[h], -ind(h))],
            Comparator::Ge,
            0.0,
        );
        lp.add_named_row(format!("phi_hi_{h}"), &[(phi[h], 1.0), (g[h], -m.power)], Comparator::Le, 0.0);
        lp.add_named_row(format!("phi_lo_{h}"), &[(phi[h], 1.0), (g[h], m.power)], Comparator::Ge, 0.0);
        lp.add_named_row(
            format!("phir_hi_{h}"),
            &[(phi[h], 1.0), (p_r[h], -1.0), (g[h], m.power)],
            Comparator::Le,
            m.power,
        );
        lp.add_named_row(
            format!("phir_lo_{h}"),
            &[(phi[h], 1.0), (p_r[h], -1.0), (g[h], -m.power)],
            Comparator::Ge,
            -m.power,
        );
    }

    for zv in &zones {
        let z = zv.zone;
        let q = z.index();
        let t = z.tag();
        for h in 0..hours {
            let base = input.base_hourly(z, h);
            let up_room = (base - input.p_min[q]).max(0.0);
            let down_room = (input.p_nom[q] - base).max(0.0);
            lp.add_named_row(
                format!("real{t}_{h}"),
                &[(zv.p[h], 1.0), (zv.bu[h], 1.0), (zv.bd[h], -1.0)],
                Comparator::Eq,
                base,
            );
            lp.add_named_row(
                format!("gate{t}_{h}"),
                &[(zv.bu[h], 1.0), (p_r[h], -ind(h))],
                Comparator::Le,
                0.0,
            );
            lp.add_named_row(
                format!("uproom{t}_{h}"),
                &[(zv.bu[h], 1.0), (zv.u_up[h], -up_room)],
                Comparator::Le,
                0.0,
            );
            lp.add_named_row(
                format!("downroom{t}_{h}"),
                &[(zv.bd[h], 1.0), (zv.u_down[h], -down_room)],
                Comparator::Le,
                0.0,
            );
            lp.add_named_row(
                format!("downmin{t}_{h}"),
                &[(zv.bd[h], 1.0), (zv.u_down[h], -MIN_DOWN_SHARE * down_room)],
                Comparator::Ge,
                0.0,
            );
            // transitions; the state before the first hour is "not regulating"
            for (u, y, zz, name) in [
                (&zv.u_up, &zv.y_up, &zv.z_up, "tup"),
                (&zv.u_down, &zv.y_down, &zv.z_down, "tdown"),
            ] {
                let mut terms = vec![(u[h], -1.0), (y[h], 1.0), (zz[h], -1.0)];
                if h > 0 {
                    terms.push((u[h - 1], 1.0));
                }
                lp.add_named_row(format!("{name}{t}_{h}"), &terms, Comparator::Eq, 0.0);
            }
            for (a, b, name) in [
                (&zv.y_up, &zv.z_up, "yzup"),
                (&zv.y_down, &zv.z_down, "yzdown"),
                (&zv.u_up, &zv.u_down, "uexcl"),
                (&zv.y_up, &zv.y_down, "yexcl"),
                (&zv.z_up, &zv.z_down, "zexcl"),
            ] {
                lp.add_named_row(format!("{name}{t}_{h}"), &[(a[h], 1.0), (b[h], 1.0)], Comparator::Le, 1.0);
            }
            lp.add_named_row(
                format!("rebound{t}_{h}"),
                &[(zv.y_down[h], 1.0), (zv.z_up[h], -1.0)],
                Comparator::Ge,
                0.0,
            );
            if h > 0 {
                let window = sph * h..=sph * (h + 1);
                let big = m.temperature * window.clone().count() as f64;
                let mut terms: Vec<(Var, f64)> = Vec::new();
                for state in window {
                    terms.push((temps[state - 1][z.zinc_index()], 1.0));
                    terms.push((base_temps[state - 1][z.zinc_index()], -1.0));
                }
                terms.push((zv.z_down[h], -big));
                lp.add_named_row(format!("recover{t}_{h}"), &terms, Comparator::Ge, -big);
            }
            let mut terms: Vec<(Var, f64)> = Vec::with_capacity(2 * (h + 1));
            for k in 0..=h {
                terms.push((zv.y_down[k], 1.0));
                terms.push((zv.y_up[k], -1.0));
            }
            lp.add_named_row(format!("upfirst{t}_{h}"), &terms, Comparator::Le, 0.0);
        }
    }

    let share: [Vec<f64>; 2] = Zone::BOTH.map(|z| {
        (0..steps)
            .map(|k| {
                let b = input.base_hourly(z, grid.hour_of(k));
                if b > 0.0 {
                    grid.base[z.index()][k] / b
                } else {
                    1.0
                }
            })
            .collect()
    });
    add_state_rows(
        lp,
        &grid,
        &input.initial,
        &temps,
        |k| {
            Zone::BOTH.map(|z| match zones.iter().find(|zv| zv.zone == z) {
                Some(zv) => PowerExpr::var(zv.p[grid.hour_of(k)], share[z.index()][k]),
                None => PowerExpr::constant(grid.base[z.index()][k]),
            })
        },
        "",
    );
    add_state_rows(
        lp,
        &grid,
        &input.initial,
        &base_temps,
        |k| Zone::BOTH.map(|z| PowerExpr::constant(grid.base[z.index()][k])),
        "b",
    );

    Ok(MfrrProblem {
        milp,
        layout: MfrrLayout {
            p,
            p_r,
            p_bu,
            p_bd,
            s,
            lambda_bid,
            phi,
            g,
            zones,
            temps,
            base_temps,
        },
        penalty,
        big_m: m,
        indicator,
        grid,
        share,
    })
}

impl MfrrProblem {
    /// The feasible point that follows the baseline, reserves the whole
    /// baseline and never activates.
    pub fn zero_regulation_point(&self, input: &MfrrDayInput) -> Vec<f64> {
        let l = &self.layout;
        let mut x = vec![0.0; self.milp.lp.num_vars()];
        let fixed_base = |h: usize| -> f64 {
            Zone::BOTH
                .into_iter()
                .filter(|z| !input.zones.contains(*z))
                .map(|z| input.base_hourly(z, h))
                .sum()
        };
        for h in 0..self.grid.hours {
            let mut total = fixed_base(h);
            let mut reserve = 0.0;
            for zv in &l.zones {
                let b = input.base_hourly(zv.zone, h);
                x[zv.p[h].index()] = b;
                x[zv.r[h].index()] = b;
                total += b;
                reserve += b;
            }
            x[l.p[h].index()] = total;
            x[l.p_r[h].index()] = reserve;
            x[l.lambda_bid[h].index()] = (input.balancing[h] - input.spot[h]).max(0.0);
        }
        let mut state = input.initial.to_array();
        for k in 0..self.grid.steps() {
            let tr = self.grid.params.transition(self.grid.lid[k]);
            state = tr.apply(state, self.grid.base[0][k], self.grid.base[1][k]);
            for i in 0..4 {
                x[l.temps[k][i].index()] = state[i];
                x[l.base_temps[k][i].index()] = state[i];
            }
        }
        x
    }

    fn candidate_ok(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.milp.lp.num_vars()
            && self.milp.lp.max_violation(x) <= tol
            && self.milp.max_integrality_violation(x) <= 1e-9
    }
}

/// Solved day. Per-zone vectors are indexed by [`Zone::index`]; a zone that
/// does not participate holds its baseline and reports no regulation.
#[derive(Debug, Clone)]
pub struct MfrrSolution {
    pub status: Status,
    pub steps_per_hour: usize,
    pub p: Vec<f64>,
    pub zone_p: [Vec<f64>; 2],
    pub p_r: Vec<f64>,
    pub zone_r: [Vec<f64>; 2],
    pub lambda_bid: Vec<f64>,
    pub p_bu: Vec<f64>,
    pub p_bd: Vec<f64>,
    pub zone_bu: [Vec<f64>; 2],
    pub zone_bd: [Vec<f64>; 2],
    pub s: Vec<f64>,
    pub zone_s: [Vec<f64>; 2],
    pub phi: Vec<f64>,
    pub g: Vec<bool>,
    pub u_up: [Vec<bool>; 2],
    pub u_down: [Vec<bool>; 2],
    pub y_up: [Vec<bool>; 2],
    pub y_down: [Vec<bool>; 2],
    pub z_up: [Vec<bool>; 2],
    pub z_down: [Vec<bool>; 2],
    pub indicator: Vec<bool>,
    /// Per-step zone powers.
    pub step_power: [Vec<f64>; 2],
    pub trace: TemperatureTrace,
    pub base_trace: TemperatureTrace,
    pub objective: f64,
    pub gap: Option<f64>,
    /// Proven upper bound on the objective; equals it up to the gap
    /// tolerance when the search finished.
    pub bound: f64,
    pub stats: SolveStats,
    /// Raw variable values, usable as a warm start for a wider band.
    pub values: Vec<f64>,
}

pub fn solve_mfrr(input: &MfrrDayInput) -> Result<MfrrSolution> {
    let problem = build_mfrr_problem(input)?;
    let tol = input.milp.lp.feasibility_tol;
    let seed = problem.zero_regulation_point(input);
    let mut best = problem.candidate_ok(&seed, tol).then_some(seed);
    if best.is_none() {
        debug!("zero-regulation point violates the band; solving without it");
    }
    if let Some(ws) = &input.warm_start {
        if problem.candidate_ok(ws, tol) {
            let obj = problem.milp.lp.objective_value(ws);
            if best
                .as_ref()
                .map_or(true, |b| obj > problem.milp.lp.objective_value(b))
            {
                best = Some(ws.clone());
            }
        } else {
            debug!("warm start rejected as infeasible");
        }
    }
    let mut opts = input.milp.clone();
    opts.initial = best;
    let sol = solve_milp_with(&problem.milp, &opts)?;
    match sol.status {
        Status::Optimal => {}
        Status::LimitReached if sol.has_point() => {
            warn!("mFRR search stopped at the node limit with gap {:?}", sol.gap);
        }
        status => {
            return Err(Error::NotSolved {
                status,
                detail: "mFRR day problem".into(),
            })
        }
    }
    Ok(extract(&problem, input, sol))
}

fn extract(problem: &MfrrProblem, input: &MfrrDayInput, sol: zincflex_solver::Solution) -> MfrrSolution {
    let x = &sol.values;
    let l = &problem.layout;
    let grid = &problem.grid;
    let hours = grid.hours;
    let read = |vs: &[Var]| vs.iter().map(|v| x[v.index()]).collect::<Vec<_>>();
    let bits = |vs: &[Var]| vs.iter().map(|v| x[v.index()] > 0.5).collect::<Vec<_>>();
    let zeros = || [vec![0.0; hours], vec![0.0; hours]];
    let falses = || [vec![false; hours], vec![false; hours]];
    let mut zone_p = [
        (0..hours).map(|h| input.base_hourly(Zone::Upper, h)).collect(),
        (0..hours).map(|h| input.base_hourly(Zone::Lower, h)).collect(),
    ];
    let (mut zone_r, mut zone_bu, mut zone_bd, mut zone_s) = (zeros(), zeros(), zeros(), zeros());
    let (mut u_up, mut u_down, mut y_up, mut y_down, mut z_up, mut z_down) =
        (falses(), falses(), falses(), falses(), falses(), falses());
    let mut step_power = grid.base.clone();
    for zv in &l.zones {
        let q = zv.zone.index();
        zone_p[q] = read(&zv.p);
        zone_r[q] = read(&zv.r);
        zone_bu[q] = read(&zv.bu);
        zone_bd[q] = read(&zv.bd);
        zone_s[q] = read(&zv.s);
        u_up[q] = bits(&zv.u_up);
        u_down[q] = bits(&zv.u_down);
        y_up[q] = bits(&zv.y_up);
        y_down[q] = bits(&zv.y_down);
        z_up[q] = bits(&zv.z_up);
        z_down[q] = bits(&zv.z_down);
        step_power[q] = (0..grid.steps())
            .map(|k| zone_p[q][grid.hour_of(k)] * problem.share[q][k])
            .collect();
    }
    MfrrSolution {
        status: sol.status,
        steps_per_hour: grid.steps_per_hour,
        p: read(&l.p),
        zone_p,
        p_r: read(&l.p_r),
        zone_r,
        lambda_bid: read(&l.lambda_bid),
        p_bu: read(&l.p_bu),
        p_bd: read(&l.p_bd),
        zone_bu,
        zone_bd,
        s: read(&l.s),
        zone_s,
        phi: read(&l.phi),
        g: bits(&l.g),
        u_up,
        u_down,
        y_up,
        y_down,
        z_up,
        z_down,
        indicator: problem.indicator.clone(),
        step_power,
        trace: TemperatureTrace {
            states: read_trace(x, &input.initial, &l.temps),
        },
        base_trace: TemperatureTrace {
            states: read_trace(x, &input.initial, &l.base_temps),
        },
        objective: sol.objective,
        gap: sol.gap,
        bound: sol.bound.unwrap_or(sol.objective).max(sol.objective),
        stats: sol.stats,
        values: sol.values.clone(),
    }
}

/// Day with the largest summed positive balancing-minus-spot differential;
/// earliest wins ties.
pub fn worst_day_mfrr(prices: &PriceSeries) -> Result<NaiveDate> {
    let mut best: Option<(NaiveDate, f64)> = None;
    for (date, i) in prices.complete_days() {
        let score: f64 = prices.records[i..i + 24]
            .iter()
            .map(|r| (r.balancing - r.spot).max(0.0))
            .sum();
        if best.map_or(true, |(_, b)| score > b) {
            best = Some((date, score));
        }
    }
    best.map(|(d, _)| d)
        .ok_or_else(|| Error::domain("no complete day of price data"))
}

/// Per-minute lid schedule length expected for `hours` of input.
pub fn minutes_for(hours: usize) -> usize {
    hours * MINUTES_PER_HOUR
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal::simulate;
    use crate::thermal::PowerInput;

    fn params() -> FurnaceParameters {
        FurnaceParameters {
            c_zu: 40.0,
            c_zl: 40.0,
            c_wu: 4.5,
            c_wl: 5.0,
            r_zuzl: 0.5,
            r_wz: 0.1,
            r_ww: 5.0,
            r_wua_off: 1.5,
            r_wua_on: 4.0,
            r_wla: 3.0,
            t_ambient: 20.0,
            dt: 1.0 / 60.0,
        }
    }

    fn input(hours: usize, bal: f64) -> MfrrDayInput {
        MfrrDayInput::new(
            params(),
            Setpoints::new(450.0, 448.0),
            LidSchedule::constant(true, minutes_for(hours)),
            [0.0, 0.0],
            [200.0, 200.0],
            vec![0.1; hours],
            vec![1.0; hours],
            vec![bal; hours],
        )
        .unwrap()
    }

    #[test]
    fn one_zone_two_hours_count() {
        let mut i = input(2, 1.0);
        i.zones = Zones::only(Zone::Upper);
        let p = build_mfrr_problem(&i).unwrap();
        // hourly: 7 global continuous + g, 5 zone continuous + 6 binaries = 19 per hour
        // temps: 2 blocks × 4 × 8 steps = 64
        assert_eq!(p.milp.lp.num_vars(), 2 * 19 + 64);
        assert_eq!(p.milp.binaries.len(), 2 * 7);
        // global 13/h, zone 15/h minus the missing first-hour rebound window,
        // 8 state rows per step
        assert_eq!(p.milp.lp.num_rows(), 2 * 13 + 2 * 15 - 1 + 8 * 8);
        assert_eq!(mfrr_problem_size(2, 4, 1), (102, 14, 119));
    }

    #[test]
    fn count_formula_matches_builder() {
        for (hours, sph, zones) in [(3, 4, Zones::default()), (4, 6, Zones::only(Zone::Lower)), (2, 12, Zones::default())] {
            let mut i = input(hours, 1.0);
            i.steps_per_hour = sph;
            i.zones = zones;
            let p = build_mfrr_problem(&i).unwrap();
            let (v, b, r) = mfrr_problem_size(hours, sph, zones.list().len());
            assert_eq!((p.milp.lp.num_vars(), p.milp.binaries.len(), p.milp.lp.num_rows()), (v, b, r));
        }
    }

    #[test]
    fn no_differential_means_no_indicator() {
        let p = build_mfrr_problem(&input(3, 1.0)).unwrap();
        assert!(p.indicator.iter().all(|&b| !b));
    }

    #[test]
    fn zero_regulation_point_is_feasible_and_matches_simulation() {
        let mut i = input(2, 3.0);
        let mut lid = vec![true; 120];
        lid[15..45].iter_mut().for_each(|l| *l = false);
        i.lids = LidSchedule(lid);
        i.baseline = baseline_profile(&i.params, &i.setpoints, &i.lids).unwrap();
        let p = build_mfrr_problem(&i).unwrap();
        let x = p.zero_regulation_point(&i);
        assert!(p.milp.lp.max_violation(&x) < 1e-9);
        let step = i.params.with_dt(0.25);
        let powers: Vec<PowerInput> = (0..8).map(|k| PowerInput::new(p.grid.base[0][k], p.grid.base[1][k])).collect();
        let sim = simulate(&i.initial, &step, &powers, &LidSchedule(p.grid.lid.clone())).unwrap();
        for k in 0..8 {
            for c in 0..4 {
                let v = x[p.layout.base_temps[k][c].index()];
                assert!((v - sim.states[k + 1].to_array()[c]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_baseline_outside_limits() {
        let mut i = input(2, 1.0);
        i.p_nom = [50.0, 200.0];
        assert!(build_mfrr_problem(&i).is_err());
        let mut i = input(2, 1.0);
        i.steps_per_hour = 7;
        assert!(build_mfrr_problem(&i).is_err());
    }

    #[test]
    fn reserve_only_when_no_activation_value() {
        let s = solve_mfrr(&input(2, 0.5)).unwrap();
        for h in 0..2 {
            assert!((s.p_r[h] - (s.zone_p[0][h] + s.zone_p[1][h])).abs() < 1e-6);
            assert!(s.p_bu[h].abs() < 1e-9);
        }
    }
}
