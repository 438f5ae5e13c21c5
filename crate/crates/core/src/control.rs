//! Legacy ON/OFF contactor logic and the steady-state operational baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::{
    simulate, steady_state_power, FurnaceParameters, FurnaceState, LidSchedule, PowerInput,
    Setpoints, TemperatureTrace,
};

pub const MINUTES_PER_HOUR: usize = 60;

/// Thresholds (°C) and contactor powers (kW) of one zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneHysteresis {
    pub lower1: f64,
    pub lower2: f64,
    pub upper1: f64,
    pub upper2: f64,
    /// Power of the first contactor (QU1 / QL3).
    pub quantum1: f64,
    /// Power of the second contactor (QU2 / QL4).
    pub quantum2: f64,
}

impl ZoneHysteresis {
    fn validate(&self, zone: &str) -> Result<()> {
        if !(self.lower2 < self.lower1 && self.lower1 < self.upper1 && self.upper1 < self.upper2) {
            return Err(Error::domain(format!(
                "{zone} thresholds must satisfy lower2 < lower1 < upper1 < upper2"
            )));
        }
        if !(self.quantum1 >= 0.0 && self.quantum2 >= 0.0) {
            return Err(Error::domain(format!("{zone} contactor powers must be non-negative")));
        }
        Ok(())
    }

    fn next(&self, t: f64, first: bool, second: bool) -> (bool, bool) {
        let first = if t < self.lower1 {
            true
        } else if t > self.upper1 {
            false
        } else {
            first
        };
        let second = if t < self.lower2 {
            true
        } else if t > self.upper2 {
            false
        } else {
            second
        };
        (first, second)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HysteresisConfig {
    pub upper: ZoneHysteresis,
    pub lower: ZoneHysteresis,
}

impl HysteresisConfig {
    pub fn validate(&self) -> Result<()> {
        self.upper.validate("upper zone")?;
        self.lower.validate("lower zone")
    }

    /// Symmetric bands around the setpoints with the given inner and outer
    /// half-widths.
    pub fn around(sp: &Setpoints, inner: f64, outer: f64, quanta_u: (f64, f64), quanta_l: (f64, f64)) -> Self {
        let zone = |c: f64, q: (f64, f64)| ZoneHysteresis {
            lower1: c - inner,
            lower2: c - outer,
            upper1: c + inner,
            upper2: c + outer,
            quantum1: q.0,
            quantum2: q.1,
        };
        Self {
            upper: zone(sp.t_sp_u, quanta_u),
            lower: zone(sp.t_sp_l, quanta_l),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContactorState {
    pub qu1: bool,
    pub qu2: bool,
    pub ql3: bool,
    pub ql4: bool,
}

impl ContactorState {
    pub fn bits(&self) -> [u8; 4] {
        [self.qu1, self.qu2, self.ql3, self.ql4].map(u8::from)
    }
}

/// Applies the threshold logic to both zones independently.
pub fn hysteresis_step(
    wall_temps: (f64, f64),
    state: ContactorState,
    config: &HysteresisConfig,
) -> (ContactorState, PowerInput) {
    let (t_wu, t_wl) = wall_temps;
    let (qu1, qu2) = config.upper.next(t_wu, state.qu1, state.qu2);
    let (ql3, ql4) = config.lower.next(t_wl, state.ql3, state.ql4);
    let on = |b: bool, q: f64| if b { q } else { 0.0 };
    let power = PowerInput::new(
        on(qu1, config.upper.quantum1) + on(qu2, config.upper.quantum2),
        on(ql3, config.lower.quantum1) + on(ql4, config.lower.quantum2),
    );
    (ContactorState { qu1, qu2, ql3, ql4 }, power)
}

/// Closed-loop run of the contactor controller.
#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisRun {
    pub trace: TemperatureTrace,
    pub powers: Vec<PowerInput>,
    pub contactors: Vec<ContactorState>,
}

pub fn simulate_hysteresis(
    initial: &FurnaceState,
    contactors: ContactorState,
    params: &FurnaceParameters,
    config: &HysteresisConfig,
    lids: &LidSchedule,
) -> Result<HysteresisRun> {
    config.validate()?;
    params.validate()?;
    let mut state = *initial;
    let mut c = contactors;
    let mut states = vec![state];
    let mut powers = Vec::with_capacity(lids.len());
    let mut history = Vec::with_capacity(lids.len());
    for &lid in &lids.0 {
        let (next_c, p) = hysteresis_step((state.t_wu, state.t_wl), c, config);
        c = next_c;
        state = crate::thermal::step(&state, params, p, lid)?;
        states.push(state);
        powers.push(p);
        history.push(c);
    }
    Ok(HysteresisRun {
        trace: TemperatureTrace { states },
        powers,
        contactors: history,
    })
}

/// Hourly and per-minute baseline powers (kW) of both zones.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BaselineProfile {
    pub hourly_u: Vec<f64>,
    pub hourly_l: Vec<f64>,
    pub minute_u: Vec<f64>,
    pub minute_l: Vec<f64>,
}

/// Mean of one hour of per-minute values, the single definition used for
/// every hourly aggregate.
pub fn hour_mean(minutes: &[f64]) -> f64 {
    minutes.iter().sum::<f64>() / minutes.len() as f64
}

impl BaselineProfile {
    pub fn hours(&self) -> usize {
        self.hourly_u.len()
    }

    pub fn hourly_total(&self, h: usize) -> f64 {
        self.hourly_u[h] + self.hourly_l[h]
    }

    pub fn minute_powers(&self) -> Vec<PowerInput> {
        self.minute_u
            .iter()
            .zip(&self.minute_l)
            .map(|(&u, &l)| PowerInput::new(u, l))
            .collect()
    }

    /// Builds a profile from per-minute values, deriving the hourly means.
    pub fn from_minutes(minute_u: Vec<f64>, minute_l: Vec<f64>) -> Result<Self> {
        if minute_u.len() != minute_l.len() || minute_u.len() % MINUTES_PER_HOUR != 0 || minute_u.is_empty() {
            return Err(Error::domain(format!(
                "baseline needs equal whole-hour minute series, got {} and {}",
                minute_u.len(),
                minute_l.len()
            )));
        }
        let hourly = |m: &[f64]| m.chunks(MINUTES_PER_HOUR).map(hour_mean).collect::<Vec<_>>();
        Ok(Self {
            hourly_u: hourly(&minute_u),
            hourly_l: hourly(&minute_l),
            minute_u,
            minute_l,
        })
    }

    pub fn slice_hours(&self, from: usize, to: usize) -> Self {
        let m = MINUTES_PER_HOUR;
        Self {
            hourly_u: self.hourly_u[from..to].to_vec(),
            hourly_l: self.hourly_l[from..to].to_vec(),
            minute_u: self.minute_u[from * m..to * m].to_vec(),
            minute_l: self.minute_l[from * m..to * m].to_vec(),
        }
    }
}

/// Steady-state power at every minute's lid regime, averaged per hour.
pub fn baseline_profile(
    params: &FurnaceParameters,
    sp: &Setpoints,
    lids: &LidSchedule,
) -> Result<BaselineProfile> {
    if lids.is_empty() || lids.len() % MINUTES_PER_HOUR != 0 {
        return Err(Error::domain(format!(
            "lid schedule must cover whole hours, got {} minutes",
            lids.len()
        )));
    }
    let (l_off, u_off) = steady_state_power(params, sp, false)?;
    let (l_on, u_on) = steady_state_power(params, sp, true)?;
    let minute_u = lids.0.iter().map(|&on| if on { u_on } else { u_off }).collect();
    let minute_l = lids.0.iter().map(|&on| if on { l_on } else { l_off }).collect();
    BaselineProfile::from_minutes(minute_u, minute_l)
}

/// Open-loop simulation of the baseline powers.
pub fn simulate_baseline(
    initial: &FurnaceState,
    params: &FurnaceParameters,
    profile: &BaselineProfile,
    lids: &LidSchedule,
) -> Result<TemperatureTrace> {
    simulate(initial, params, &profile.minute_powers(), lids)
}
