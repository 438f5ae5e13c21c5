//! Fourth-order RC model of the furnace: zinc and wall temperatures of the
//! upper and lower zones, advanced with explicit Euler.
//!
//! Regime convention: `lid = true` (lid on) uses `r_wua_on`, `lid = false`
//! uses `r_wua_off`. The steady-state power formulas follow the same
//! convention.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Heat capacities (kWh/°C), resistances (°C/kW), ambient (°C) and step (h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FurnaceParameters {
    pub c_zu: f64,
    pub c_zl: f64,
    pub c_wu: f64,
    pub c_wl: f64,
    pub r_zuzl: f64,
    pub r_wz: f64,
    pub r_ww: f64,
    pub r_wua_off: f64,
    pub r_wua_on: f64,
    pub r_wla: f64,
    pub t_ambient: f64,
    pub dt: f64,
}

impl FurnaceParameters {
    pub const NAMES: [&'static str; 10] = [
        "c_zu", "c_zl", "c_wu", "c_wl", "r_zuzl", "r_wz", "r_ww", "r_wua_off", "r_wua_on", "r_wla",
    ];

    pub fn validate(&self) -> Result<()> {
        for (name, v) in Self::NAMES.iter().zip(self.positive_values()) {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.t_ambient.is_finite() {
            return Err(Error::domain("ambient temperature must be finite"));
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(Error::domain(format!("dt must lie in (0, 1] hours, got {}", self.dt)));
        }
        Ok(())
    }

    /// The ten capacities and resistances in [`Self::NAMES`] order.
    pub fn positive_values(&self) -> [f64; 10] {
        [
            self.c_zu,
            self.c_zl,
            self.c_wu,
            self.c_wl,
            self.r_zuzl,
            self.r_wz,
            self.r_ww,
            self.r_wua_off,
            self.r_wua_on,
            self.r_wla,
        ]
    }

    pub fn with_positive_values(&self, v: [f64; 10]) -> Self {
        Self {
            c_zu: v[0],
            c_zl: v[1],
            c_wu: v[2],
            c_wl: v[3],
            r_zuzl: v[4],
            r_wz: v[5],
            r_ww: v[6],
            r_wua_off: v[7],
            r_wua_on: v[8],
            r_wla: v[9],
            ..*self
        }
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        Self { dt, ..*self }
    }

    /// Upper wall to ambient resistance for the given lid state.
    pub fn r_wua(&self, lid: bool) -> f64 {
        if lid {
            self.r_wua_on
        } else {
            self.r_wua_off
        }
    }

    /// True when every diagonal entry of the transition matrix is
    /// non-negative, which keeps the explicit scheme stable and monotone.
    pub fn euler_stable(&self) -> bool {
        [false, true]
            .iter()
            .all(|&lid| (0..4).all(|i| self.transition(lid).a[i][i] >= 0.0))
    }

    /// Affine form of one step: `x' = A x + b_u p_u + b_l p_l + c`, state
    /// ordered `[zu, zl, wu, wl]`.
    pub fn transition(&self, lid: bool) -> Transition {
        let dt = self.dt;
        let g_zz = 1.0 / self.r_zuzl;
        let g_wz = 1.0 / self.r_wz;
        let g_ww = 1.0 / self.r_ww;
        let g_ua = 1.0 / self.r_wua(lid);
        let g_la = 1.0 / self.r_wla;
        let (kzu, kzl, kwu, kwl) = (dt / self.c_zu, dt / self.c_zl, dt / self.c_wu, dt / self.c_wl);
        let a = [
            [1.0 - kzu * (g_zz + g_wz), kzu * g_zz, kzu * g_wz, 0.0],
            [kzl * g_zz, 1.0 - kzl * (g_zz + g_wz), 0.0, kzl * g_wz],
            [kwu * g_wz, 0.0, 1.0 - kwu * (g_ua + g_ww + g_wz), kwu * g_ww],
            [0.0, kwl * g_wz, kwl * g_ww, 1.0 - kwl * (g_la + g_ww + g_wz)],
        ];
        Transition {
            a,
            b_u: [0.0, 0.0, kwu, 0.0],
            b_l: [0.0, 0.0, 0.0, kwl],
            c: [0.0, 0.0, kwu * g_ua * self.t_ambient, kwl * g_la * self.t_ambient],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub a: [[f64; 4]; 4],
    pub b_u: [f64; 4],
    pub b_l: [f64; 4],
    pub c: [f64; 4],
}

impl Transition {
    pub fn apply(&self, x: [f64; 4], p_u: f64, p_l: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.a[i].iter().zip(&x).map(|(a, v)| a * v).sum::<f64>()
                + self.b_u[i] * p_u
                + self.b_l[i] * p_l
                + self.c[i];
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FurnaceState {
    pub t_zu: f64,
    pub t_zl: f64,
    pub t_wu: f64,
    pub t_wl: f64,
}

impl FurnaceState {
    pub fn new(t_zu: f64, t_zl: f64, t_wu: f64, t_wl: f64) -> Self {
        Self { t_zu, t_zl, t_wu, t_wl }
    }

    pub fn uniform(t: f64) -> Self {
        Self::new(t, t, t, t)
    }

    /// Zinc and wall of each zone at that zone's setpoint.
    pub fn at_setpoints(sp: &Setpoints) -> Self {
        Self::new(sp.t_sp_u, sp.t_sp_l, sp.t_sp_u, sp.t_sp_l)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.t_zu, self.t_zl, self.t_wu, self.t_wl]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerInput {
    pub p_u: f64,
    pub p_l: f64,
}

impl PowerInput {
    pub fn new(p_u: f64, p_l: f64) -> Self {
        Self { p_u, p_l }
    }
}

/// Per-minute lid indicator, `true` = lid on.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LidSchedule(pub Vec<bool>);

impl LidSchedule {
    pub fn constant(on: bool, minutes: usize) -> Self {
        Self(vec![on; minutes])
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::domain(format!("lid value must be 0 or 1, got {other}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, t: usize) -> bool {
        self.0[t]
    }

    pub fn slice(&self, from: usize, to: usize) -> Self {
        Self(self.0[from..to].to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setpoints {
    pub t_sp_u: f64,
    pub t_sp_l: f64,
}

impl Setpoints {
    pub fn new(t_sp_u: f64, t_sp_l: f64) -> Self {
        Self { t_sp_u, t_sp_l }
    }

    pub fn validate(&self, params: &FurnaceParameters) -> Result<()> {
        if !(self.t_sp_u.is_finite() && self.t_sp_l.is_finite()) {
            return Err(Error::domain("setpoints must be finite"));
        }
        if self.t_sp_u < params.t_ambient || self.t_sp_l < params.t_ambient {
            return Err(Error::domain(format!(
                "setpoints ({}, {}) below ambient {}",
                self.t_sp_u, self.t_sp_l, params.t_ambient
            )));
        }
        Ok(())
    }
}

/// States at every step of a horizon, `states[0]` being the initial state.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TemperatureTrace {
    pub states: Vec<FurnaceState>,
}

impl TemperatureTrace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn wall_upper(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t_wu).collect()
    }

    pub fn wall_lower(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t_wl).collect()
    }

    pub fn last(&self) -> Option<FurnaceState> {
        self.states.last().copied()
    }
}

/// One explicit-Euler step of the four coupled temperatures.
pub fn step(
    state: &FurnaceState,
    params: &FurnaceParameters,
    power: PowerInput,
    lid: bool,
) -> Result<FurnaceState> {
    if !state.is_finite() {
        return Err(Error::domain(format!("non-finite furnace state {state:?}")));
    }
    if !(power.p_u.is_finite() && power.p_l.is_finite()) {
        return Err(Error::domain(format!("non-finite power input {power:?}")));
    }
    Ok(step_unchecked(state, params, power, lid))
}

pub(crate) fn step_unchecked(
    s: &FurnaceState,
    p: &FurnaceParameters,
    power: PowerInput,
    lid: bool,
) -> FurnaceState {
    let (zu, zl, wu, wl, ta) = (s.t_zu, s.t_zl, s.t_wu, s.t_wl, p.t_ambient);
    let lid_on = if lid { 1.0 } else { 0.0 };
    let zu_next = zu + p.dt / p.c_zu * ((zl - zu) / p.r_zuzl + (wu - zu) / p.r_wz);
    let zl_next = zl + p.dt / p.c_zl * ((zu - zl) / p.r_zuzl + (wl - zl) / p.r_wz);
    let wu_next = wu
        + p.dt / p.c_wu
            * ((1.0 - lid_on) * (ta - wu) / p.r_wua_off
                + lid_on * (ta - wu) / p.r_wua_on
                + (wl - wu) / p.r_ww
                + (zu - wu) / p.r_wz
                + power.p_u);
    let wl_next = wl
        + p.dt / p.c_wl
            * ((ta - wl) / p.r_wla + (wu - wl) / p.r_ww + (zl - wl) / p.r_wz + power.p_l);
    FurnaceState::new(zu_next, zl_next, wu_next, wl_next)
}

/// Iterates [`step`] over a horizon; the trace holds `powers.len() + 1` states.
pub fn simulate(
    initial: &FurnaceState,
    params: &FurnaceParameters,
    powers: &[PowerInput],
    lids: &LidSchedule,
) -> Result<TemperatureTrace> {
    params.validate()?;
    if powers.is_empty() {
        return Err(Error::domain("simulation horizon must contain at least one step"));
    }
    if powers.len() != lids.len() {
        return Err(Error::domain(format!(
            "{} power inputs but {} lid values",
            powers.len(),
            lids.len()
        )));
    }
    let mut states = Vec::with_capacity(powers.len() + 1);
    states.push(*initial);
    let mut s = *initial;
    for (pw, &lid) in powers.iter().zip(&lids.0) {
        s = step(&s, params, *pw, lid)?;
        states.push(s);
    }
    Ok(TemperatureTrace { states })
}

/// Steady-state zone powers `(p_l, p_u)` holding both walls at their
/// setpoints, clamped at zero.
pub fn steady_state_power(
    params: &FurnaceParameters,
    sp: &Setpoints,
    lid: bool,
) -> Result<(f64, f64)> {
    params.validate()?;
    sp.validate(params)?;
    let (p_l, p_u) = steady_state_raw(params, sp, lid);
    if p_l < 0.0 || p_u < 0.0 {
        warn!("negative steady-state power ({p_l:.3}, {p_u:.3}) kW clamped to zero");
    }
    Ok((p_l.max(0.0), p_u.max(0.0)))
}

pub(crate) fn steady_state_raw(params: &FurnaceParameters, sp: &Setpoints, lid: bool) -> (f64, f64) {
    let gap = sp.t_sp_u - sp.t_sp_l;
    let p_l = (sp.t_sp_l - params.t_ambient) / params.r_wla - gap / params.r_ww;
    let p_u = (sp.t_sp_u - params.t_ambient) / params.r_wua(lid) + gap / params.r_ww;
    (p_l, p_u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params() -> FurnaceParameters {
        FurnaceParameters {
            c_zu: 1.0,
            c_zl: 1.0,
            c_wu: 1.0,
            c_wl: 1.0,
            r_zuzl: 1.0,
            r_wz: 1.0,
            r_ww: 1.0,
            r_wua_off: 1.0,
            r_wua_on: 1.0,
            r_wla: 1.0,
            t_ambient: 0.0,
            dt: 1.0,
        }
    }

    #[test]
    fn hand_evaluated_unit_step() {
        let s = FurnaceState::new(1.0, 0.0, 0.0, 0.0);
        let n = step(&s, &unit_params(), PowerInput::default(), true).unwrap();
        // zu: 1 + (0-1) + (0-1); zl: 0 + (1-0) + 0; wu: 0 + 0 + 0 + (1-0); wl: 0
        assert_eq!(n, FurnaceState::new(-1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn ambient_equilibrium_is_fixed() {
        let mut p = unit_params();
        p.t_ambient = 25.0;
        p.dt = 1.0 / 60.0;
        let s = FurnaceState::uniform(25.0);
        for lid in [false, true] {
            assert_eq!(step(&s, &p, PowerInput::default(), lid).unwrap(), s);
        }
    }

    #[test]
    fn upper_power_moves_only_upper_wall() {
        let p = FurnaceParameters { c_wu: 4.0, dt: 0.5, ..unit_params() };
        let s = FurnaceState::new(3.0, 2.0, 5.0, 1.0);
        let a = step(&s, &p, PowerInput::new(8.0, 0.0), false).unwrap();
        let b = step(&s, &p, PowerInput::default(), false).unwrap();
        assert_eq!((a.t_zu, a.t_zl, a.t_wl), (b.t_zu, b.t_zl, b.t_wl));
        assert!((a.t_wu - b.t_wu - 0.5 * 8.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn lid_selects_resistance() {
        let p = FurnaceParameters { r_wua_off: 2.0, r_wua_on: 4.0, ..unit_params() };
        let s = FurnaceState::new(0.0, 0.0, 8.0, 0.0);
        let off = step(&s, &p, PowerInput::default(), false).unwrap();
        let on = step(&s, &p, PowerInput::default(), true).unwrap();
        // wall loses (8-0)/r to ambient on top of the shared exchange terms
        assert!((on.t_wu - off.t_wu - (8.0 / 2.0 - 8.0 / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn non_finite_state_rejected() {
        let s = FurnaceState::new(f64::NAN, 0.0, 0.0, 0.0);
        assert!(step(&s, &unit_params(), PowerInput::default(), true).is_err());
    }

    #[test]
    fn simulate_shapes() {
        let p = unit_params();
        let s = FurnaceState::uniform(0.0);
        assert!(simulate(&s, &p, &[], &LidSchedule::default()).is_err());
        assert!(simulate(&s, &p, &[PowerInput::default()], &LidSchedule::constant(true, 2)).is_err());
        let tr = simulate(&s, &p, &[PowerInput::new(1.0, 0.0)], &LidSchedule::constant(true, 1)).unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!(tr.states[0], s);
        assert_eq!(tr.states[1], step(&s, &p, PowerInput::new(1.0, 0.0), true).unwrap());
    }

    #[test]
    fn steady_state_hand_values() {
        let p = FurnaceParameters {
            r_wla: 2.0,
            r_ww: 4.0,
            r_wua_on: 1.0,
            r_wua_off: 7.0,
            ..unit_params()
        };
        let (pl, pu) = steady_state_power(&p, &Setpoints::new(10.0, 8.0), true).unwrap();
        assert!((pl - 3.5).abs() < 1e-12);
        assert!((pu - 10.5).abs() < 1e-12);
        let (pl0, pu0) = steady_state_power(&p, &Setpoints::new(0.0, 0.0), false).unwrap();
        assert_eq!((pl0, pu0), (0.0, 0.0));
    }

    #[test]
    fn steady_state_clamps_negative() {
        let p = FurnaceParameters { r_ww: 0.1, ..unit_params() };
        // large inverted gap drives the lower zone negative
        let (pl, _) = steady_state_power(&p, &Setpoints::new(50.0, 1.0), true).unwrap();
        assert_eq!(pl, 0.0);
    }

    #[test]
    fn transition_matches_step() {
        let p = FurnaceParameters {
            c_zu: 30.0,
            c_zl: 35.0,
            c_wu: 4.0,
            c_wl: 5.0,
            r_zuzl: 0.7,
            r_wz: 0.2,
            r_ww: 3.0,
            r_wua_off: 1.2,
            r_wua_on: 3.3,
            r_wla: 2.5,
            t_ambient: 18.0,
            dt: 1.0 / 60.0,
        };
        let s = FurnaceState::new(440.0, 437.0, 452.0, 446.0);
        for lid in [false, true] {
            let direct = step(&s, &p, PowerInput::new(120.0, 80.0), lid).unwrap().to_array();
            let affine = p.transition(lid).apply(s.to_array(), 120.0, 80.0);
            for i in 0..4 {
                assert!((direct[i] - affine[i]).abs() < 1e-10, "{i}: {direct:?} {affine:?}");
            }
        }
        assert!(p.euler_stable());
        assert!(!p.with_dt(1.0).euler_stable());
    }
}
