//! Step grid shared by the optimisers and the thermal state-space rows they
//! embed.
//!
//! A day of per-minute data is grouped into `steps_per_hour` steps per hour.
//! Each step takes the majority lid state of its minutes (ties count as lid
//! on). Its baseline power is the mean of the per-minute baseline when the
//! lid is constant within the step, otherwise the steady-state power of the
//! majority regime, so a baseline trajectory stays at the wall setpoints.

use serde::{Deserialize, Serialize};
use zincflex_solver::{Comparator, LinearProgram, Var};

use crate::control::{BaselineProfile, MINUTES_PER_HOUR};
use crate::error::{Error, Result};
use crate::thermal::{steady_state_power, FurnaceParameters, FurnaceState, LidSchedule, Setpoints};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Zone {
    Upper,
    Lower,
}

impl Zone {
    pub const BOTH: [Zone; 2] = [Zone::Upper, Zone::Lower];

    pub fn tag(self) -> &'static str {
        match self {
            Zone::Upper => "u",
            Zone::Lower => "l",
        }
    }

    /// Index of the wall temperature in the `[zu, zl, wu, wl]` state.
    pub fn wall_index(self) -> usize {
        match self {
            Zone::Upper => 2,
            Zone::Lower => 3,
        }
    }

    pub fn zinc_index(self) -> usize {
        match self {
            Zone::Upper => 0,
            Zone::Lower => 1,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Zone::Upper => 0,
            Zone::Lower => 1,
        }
    }
}

/// Which zones offer flexibility; the others run at baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Zones {
    pub upper: bool,
    pub lower: bool,
}

impl Default for Zones {
    fn default() -> Self {
        Self { upper: true, lower: true }
    }
}

impl Zones {
    pub fn only(zone: Zone) -> Self {
        Self {
            upper: zone == Zone::Upper,
            lower: zone == Zone::Lower,
        }
    }

    pub fn contains(&self, z: Zone) -> bool {
        match z {
            Zone::Upper => self.upper,
            Zone::Lower => self.lower,
        }
    }

    pub fn list(&self) -> Vec<Zone> {
        Zone::BOTH.into_iter().filter(|z| self.contains(*z)).collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct StepGrid {
    pub hours: usize,
    pub steps_per_hour: usize,
    pub minutes_per_step: usize,
    pub lid: Vec<bool>,
    /// Baseline power per step, indexed by [`Zone::index`].
    pub base: [Vec<f64>; 2],
    /// Parameters with `dt` set to the step length.
    pub params: FurnaceParameters,
}

impl StepGrid {
    pub fn new(
        params: &FurnaceParameters,
        sp: &Setpoints,
        baseline: &BaselineProfile,
        lids: &LidSchedule,
        steps_per_hour: usize,
    ) -> Result<Self> {
        params.validate()?;
        sp.validate(params)?;
        if steps_per_hour == 0 || MINUTES_PER_HOUR % steps_per_hour != 0 {
            return Err(Error::domain(format!(
                "steps per hour must divide 60, got {steps_per_hour}"
            )));
        }
        let hours = baseline.hours();
        if hours == 0 {
            return Err(Error::domain("empty baseline profile"));
        }
        if lids.len() != hours * MINUTES_PER_HOUR || baseline.minute_u.len() != lids.len() {
            return Err(Error::domain(format!(
                "lid schedule has {} minutes but the baseline covers {hours} hours",
                lids.len()
            )));
        }
        let minutes_per_step = MINUTES_PER_HOUR / steps_per_hour;
        let step_params = params.with_dt(1.0 / steps_per_hour as f64);
        if !step_params.euler_stable() {
            return Err(Error::domain(format!(
                "explicit Euler step of {minutes_per_step} min is unstable for these parameters"
            )));
        }
        let n = hours * steps_per_hour;
        let mut lid = Vec::with_capacity(n);
        let mut base_u = Vec::with_capacity(n);
        let mut base_l = Vec::with_capacity(n);
        let regime = [steady_state_power(params, sp, false)?, steady_state_power(params, sp, true)?];
        for k in 0..n {
            let window = k * minutes_per_step..(k + 1) * minutes_per_step;
            let on = lids.0[window.clone()].iter().filter(|&&l| l).count();
            let majority = 2 * on >= minutes_per_step;
            lid.push(majority);
            if on == 0 || on == minutes_per_step {
                base_u.push(crate::control::hour_mean(&baseline.minute_u[window.clone()]));
                base_l.push(crate::control::hour_mean(&baseline.minute_l[window]));
            } else {
                let (pl, pu) = regime[usize::from(majority)];
                base_u.push(pu);
                base_l.push(pl);
            }
        }
        Ok(Self {
            hours,
            steps_per_hour,
            minutes_per_step,
            lid,
            base: [base_u, base_l],
            params: step_params,
        })
    }

    pub fn steps(&self) -> usize {
        self.hours * self.steps_per_hour
    }

    pub fn hour_of(&self, k: usize) -> usize {
        k / self.steps_per_hour
    }

    /// Averages a per-minute series onto the steps.
    pub fn step_mean(&self, minutes: &[f64]) -> Vec<f64> {
        minutes
            .chunks(self.minutes_per_step)
            .map(crate::control::hour_mean)
            .collect()
    }

}

/// Affine power of one zone in one step: `Σ coef·var + constant`.
#[derive(Debug, Clone, Default)]
pub(crate) struct PowerExpr {
    pub terms: Vec<(Var, f64)>,
    pub constant: f64,
}

impl PowerExpr {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: Var, coef: f64) -> Self {
        Self { terms: vec![(v, coef)], constant: 0.0 }
    }
}

/// Temperature variables for steps `1..=J`; walls optionally bounded to
/// `setpoint + band`.
pub(crate) fn add_temperature_vars(
    lp: &mut LinearProgram,
    steps: usize,
    sp: &Setpoints,
    band: Option<(f64, f64)>,
    tag: &str,
) -> Vec<[Var; 4]> {
    let free = (f64::NEG_INFINITY, f64::INFINITY);
    let (bu, bl) = match band {
        Some((lo, hi)) => ((sp.t_sp_u + lo, sp.t_sp_u + hi), (sp.t_sp_l + lo, sp.t_sp_l + hi)),
        None => (free, free),
    };
    (1..=steps)
        .map(|k| {
            [
                lp.add_named_var(format!("{tag}zu_{k}"), free.0, free.1, 0.0),
                lp.add_named_var(format!("{tag}zl_{k}"), free.0, free.1, 0.0),
                lp.add_named_var(format!("{tag}wu_{k}"), bu.0, bu.1, 0.0),
                lp.add_named_var(format!("{tag}wl_{k}"), bl.0, bl.1, 0.0),
            ]
        })
        .collect()
}

/// Adds the four state-space equalities of every step. `temps[k]` holds the
/// state after step `k`; the initial state enters the right-hand side.
pub(crate) fn add_state_rows(
    lp: &mut LinearProgram,
    grid: &StepGrid,
    initial: &FurnaceState,
    temps: &[[Var; 4]],
    power: impl Fn(usize) -> [PowerExpr; 2],
    tag: &str,
) {
    const NAMES: [&str; 4] = ["zu", "zl", "wu", "wl"];
    let x0 = initial.to_array();
    let mut terms: Vec<(Var, f64)> = Vec::with_capacity(12);
    for k in 0..grid.steps() {
        let tr = grid.params.transition(grid.lid[k]);
        let [pu, pl] = power(k);
        for i in 0..4 {
            terms.clear();
            terms.push((temps[k][i], 1.0));
            let mut rhs = tr.c[i];
            for j in 0..4 {
                if tr.a[i][j] == 0.0 {
                    continue;
                }
                if k == 0 {
                    rhs += tr.a[i][j] * x0[j];
                } else {
                    terms.push((temps[k - 1][j], -tr.a[i][j]));
                }
            }
            for (b, p) in [(tr.b_u[i], &pu), (tr.b_l[i], &pl)] {
                if b == 0.0 {
                    continue;
                }
                rhs += b * p.constant;
                for &(v, a) in &p.terms {
                    terms.push((v, -b * a));
                }
            }
            lp.add_named_row(format!("{tag}{}_{}", NAMES[i], k + 1), &terms, Comparator::Eq, rhs);
        }
    }
}

/// Reads the temperature trajectory (initial state first) from a solution.
pub(crate) fn read_trace(values: &[f64], initial: &FurnaceState, temps: &[[Var; 4]]) -> Vec<FurnaceState> {
    let mut out = Vec::with_capacity(temps.len() + 1);
    out.push(*initial);
    for t in temps {
        out.push(FurnaceState::from_array(t.map(|v| values[v.index()])));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::baseline_profile;

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

    #[test]
    fn majority_lid_and_step_baseline() {
        let p = params();
        let sp = Setpoints::new(450.0, 448.0);
        let mut lids = vec![true; 60];
        // step 0: 10 of 15 minutes off; step 1: 7 off (on wins); step 2: all off
        lids[..10].iter_mut().for_each(|l| *l = false);
        lids[15..22].iter_mut().for_each(|l| *l = false);
        lids[30..45].iter_mut().for_each(|l| *l = false);
        let lids = LidSchedule(lids);
        let b = baseline_profile(&p, &sp, &lids).unwrap();
        let g = StepGrid::new(&p, &sp, &b, &lids, 4).unwrap();
        assert_eq!(g.lid, vec![false, true, false, true]);
        let (_, u_off) = steady_state_power(&p, &sp, false).unwrap();
        let (_, u_on) = steady_state_power(&p, &sp, true).unwrap();
        for (got, want) in g.base[0].iter().zip([u_off, u_on, u_off, u_on]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!((g.params.dt - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_steps_and_lengths() {
        let p = params();
        let sp = Setpoints::new(450.0, 448.0);
        let lids = LidSchedule::constant(true, 120);
        let b = baseline_profile(&p, &sp, &lids).unwrap();
        assert!(StepGrid::new(&p, &sp, &b, &lids, 7).is_err());
        assert!(StepGrid::new(&p, &sp, &b, &LidSchedule::constant(true, 60), 4).is_err());
        // one-hour Euler step is unstable for small wall capacities
        assert!(StepGrid::new(&p, &sp, &b, &lids, 1).is_err());
    }
}
