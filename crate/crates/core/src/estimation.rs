//! Grey-box fit of the thermal model to wall-temperature telemetry and the
//! residual diagnostics used to judge it.
//!
//! The fit minimises the summed squared one-step prediction errors of both
//! wall temperatures. Each prediction starts from the observed walls and the
//! zinc temperatures propagated by the model from two unknown initial
//! values. Parameters are searched in log space with Nelder-Mead.

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::control::{hysteresis_step, ContactorState, HysteresisConfig};
use crate::error::{Error, Result};
use crate::market_data::{TelemetryFrame, TelemetryRecord};
use crate::thermal::{step_unchecked, FurnaceParameters, FurnaceState, LidSchedule, PowerInput};

/// One-step residuals (observed minus predicted) of the two walls.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl Residuals {
    pub fn len(&self) -> usize {
        self.upper.len() + self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.upper.iter().chain(&self.lower).map(|r| r * r).sum()
    }
}

pub fn one_step_residuals(
    params: &FurnaceParameters,
    latent_init: (f64, f64),
    data: &TelemetryFrame,
) -> Result<Residuals> {
    params.validate()?;
    if data.records.len() < 2 {
        return Err(Error::domain("residuals need at least two telemetry rows"));
    }
    Ok(residuals_unchecked(params, latent_init, &data.records))
}

fn residuals_unchecked(p: &FurnaceParameters, latent: (f64, f64), rows: &[TelemetryRecord]) -> Residuals {
    let n = rows.len() - 1;
    let mut out = Residuals {
        upper: Vec::with_capacity(n),
        lower: Vec::with_capacity(n),
    };
    let (mut zu, mut zl) = latent;
    for w in rows.windows(2) {
        let (now, next) = (&w[0], &w[1]);
        let s = FurnaceState::new(zu, zl, now.t_wu, now.t_wl);
        let pred = step_unchecked(&s, p, PowerInput::new(now.p_u, now.p_l), now.lid);
        out.upper.push(next.t_wu - pred.t_wu);
        out.lower.push(next.t_wl - pred.t_wl);
        zu = pred.t_zu;
        zl = pred.t_zl;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Function evaluations per Nelder-Mead run.
    pub max_evaluations: usize,
    /// Restarts from the best point after a run converges.
    pub max_restarts: usize,
    /// Relative spread of simplex values at which a run stops.
    pub f_tol: f64,
    /// Simplex diameter (log units) at which a run stops.
    pub x_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 40_000,
            max_restarts: 12,
            f_tol: 1e-15,
            x_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: FurnaceParameters,
    pub latent_init: (f64, f64),
    pub loss: f64,
    pub initial_loss: f64,
    pub converged: bool,
    pub evaluations: usize,
    /// Parameters held at their initial value because the data never
    /// excite them.
    pub frozen: Vec<String>,
}

/// Scale of the latent zinc offsets in the search space (°C).
const LATENT_SCALE: f64 = 10.0;

pub fn fit_parameters(data: &TelemetryFrame, initial_guess: &FurnaceParameters) -> Result<FitResult> {
    fit_parameters_with(data, initial_guess, &FitOptions::default())
}

pub fn fit_parameters_with(
    data: &TelemetryFrame,
    initial_guess: &FurnaceParameters,
    opts: &FitOptions,
) -> Result<FitResult> {
    initial_guess.validate()?;
    data.validate()?;
    let rows = &data.records;
    if rows.len() < 2 {
        return Err(Error::domain("fit needs at least two telemetry rows"));
    }
    let any_on = rows[..rows.len() - 1].iter().any(|r| r.lid);
    let any_off = rows[..rows.len() - 1].iter().any(|r| !r.lid);
    let mut frozen = Vec::new();
    if !any_off {
        frozen.push("r_wua_off".to_string());
    }
    if !any_on {
        frozen.push("r_wua_on".to_string());
    }
    let free: Vec<usize> = (0..10)
        .filter(|&i| !frozen.iter().any(|f| f == FurnaceParameters::NAMES[i]))
        .collect();
    let base_logs = initial_guess.positive_values().map(f64::ln);
    let (w0u, w0l) = (rows[0].t_wu, rows[0].t_wl);

    let decode = |x: &[f64]| -> (FurnaceParameters, (f64, f64)) {
        let mut logs = base_logs;
        for (k, &i) in free.iter().enumerate() {
            logs[i] = x[k];
        }
        let n = free.len();
        (
            initial_guess.with_positive_values(logs.map(f64::exp)),
            (w0u + LATENT_SCALE * x[n], w0l + LATENT_SCALE * x[n + 1]),
        )
    };
    let loss = |x: &[f64]| -> f64 {
        let (p, latent) = decode(x);
        let v = residuals_unchecked(&p, latent, rows).sum_of_squares();
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut x: Vec<f64> = free.iter().map(|&i| base_logs[i]).collect();
    x.extend([0.0, 0.0]);
    let initial_loss = loss(&x);
    let mut best = initial_loss;
    let mut evaluations = 0;
    let mut converged = false;
    let mut step = 0.1;
    for round in 0..=opts.max_restarts {
        let run = nelder_mead(&loss, &x, step, opts);
        evaluations += run.evaluations;
        debug!("fit round {round}: loss {:.6e} after {} evaluations", run.value, run.evaluations);
        let improved = run.value < best * (1.0 - 1e-9) || (best > 0.0 && run.value == 0.0);
        if run.value <= best {
            x = run.point;
            best = run.value;
        }
        if run.converged && !improved {
            converged = true;
            break;
        }
        step = (step * 0.5).max(1e-3);
    }
    let (params, latent_init) = decode(&x);
    Ok(FitResult {
        params,
        latent_init,
        loss: best,
        initial_loss,
        converged,
        evaluations,
        frozen,
    })
}

struct NmRun {
    point: Vec<f64>,
    value: f64,
    evaluations: usize,
    converged: bool,
}

/// Nelder-Mead with dimension-adaptive coefficients.
fn nelder_mead(f: &impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, opts: &FitOptions) -> NmRun {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evaluations = n + 1;
    let mut converged = false;
    while evaluations < opts.max_evaluations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let (lo, hi) = (values[0], values[n]);
        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (hi - lo).abs() <= opts.f_tol * lo.abs().max(1e-300) || diameter <= opts.x_tol || hi == 0.0 {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / nf)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = f(&xr);
        evaluations += 1;
        if fr < values[0] {
            let xe = along(alpha * beta);
            let fe = f(&xe);
            evaluations += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(alpha * gamma);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(-gamma);
            let fc = f(&xc);
            (xc, fc)
        };
        evaluations += 1;
        if fc < fr.min(values[n]) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(v, b)| b + delta * (v - b))
                .collect();
            values[i] = f(&shrunk);
            simplex[i] = shrunk;
        }
        evaluations += n;
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("non-empty simplex");
    NmRun {
        point: simplex[best].clone(),
        value: values[best],
        evaluations,
        converged,
    }
}

/// Biased sample autocorrelation for lags `0..=max_lag`.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if x.len() <= max_lag {
        return Err(Error::domain(format!(
            "series of length {} too short for lag {max_lag}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0: f64 = d.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return Err(Error::domain("autocorrelation of a constant series is undefined"));
    }
    Ok((0..=max_lag)
        .map(|k| d.iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

/// Normalised cumulative periodogram over the Fourier frequencies
/// `1..=⌊N/2⌋`; the last value is 1.
pub fn cumulative_periodogram(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 8 {
        return Err(Error::domain("cumulative periodogram needs at least 8 samples"));
    }
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let m = x.len() / 2;
    let power: Vec<f64> = buf[1..=m].iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    if !(total > 0.0) {
        return Err(Error::domain("series has no spectral power outside frequency zero"));
    }
    let mut acc = 0.0;
    Ok(power
        .iter()
        .map(|p| {
            acc += p;
            acc / total
        })
        .collect())
}

/// 95% Kolmogorov-Smirnov half-width for a cumulative periodogram with `m`
/// ordinates.
pub fn periodogram_ks_bound(m: usize) -> f64 {
    let q = ((m.max(2) - 1) as f64).sqrt();
    1.358 / (q + 0.12 + 0.11 / q)
}

/// Largest distance between a cumulative periodogram and the white-noise
/// diagonal `k/m`.
pub fn periodogram_max_deviation(cp: &[f64]) -> f64 {
    let m = cp.len() as f64;
    cp.iter()
        .enumerate()
        .map(|(k, v)| (v - (k + 1) as f64 / m).abs())
        .fold(0.0, f64::max)
}

/// Summary of the white-noise checks on one residual series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDiagnostics {
    pub acf: Vec<f64>,
    /// ±1.96/√N
    pub acf_band: f64,
    /// Share of lags `1..=max_lag` inside the band.
    pub acf_inside: f64,
    pub cumulative_periodogram: Vec<f64>,
    pub ks_bound: f64,
    pub ks_deviation: f64,
}

impl ResidualDiagnostics {
    pub fn white(&self) -> bool {
        self.acf_inside >= 0.95 && self.ks_deviation <= self.ks_bound
    }
}

pub fn diagnose(x: &[f64], max_lag: usize) -> Result<ResidualDiagnostics> {
    let r = acf(x, max_lag)?;
    let band = 1.96 / (x.len() as f64).sqrt();
    let inside = r[1..].iter().filter(|v| v.abs() < band).count() as f64 / max_lag.max(1) as f64;
    let cp = cumulative_periodogram(x)?;
    Ok(ResidualDiagnostics {
        acf_band: band,
        acf_inside: inside,
        ks_bound: periodogram_ks_bound(cp.len()),
        ks_deviation: periodogram_max_deviation(&cp),
        acf: r,
        cumulative_periodogram: cp,
    })
}

/// Telemetry of the furnace under contactor control. Gaussian process
/// noise of standard deviation `sigma` (°C) is added to both wall
/// temperatures every minute.
pub fn simulate_telemetry(
    params: &FurnaceParameters,
    hysteresis: &HysteresisConfig,
    initial: &FurnaceState,
    lids: &LidSchedule,
    start: chrono::NaiveDateTime,
    sigma: f64,
    seed: u64,
) -> Result<TelemetryFrame> {
    params.validate()?;
    hysteresis.validate()?;
    if !(sigma >= 0.0) {
        return Err(Error::domain("noise level must be non-negative"));
    }
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("valid normal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = *initial;
    let mut c = ContactorState::default();
    let mut records = Vec::with_capacity(lids.len() + 1);
    for t in 0..=lids.len() {
        let (next_c, power) = hysteresis_step((s.t_wu, s.t_wl), c, hysteresis);
        c = next_c;
        let lid = if t < lids.len() { lids.get(t) } else { lids.get(t - 1) };
        records.push(TelemetryRecord {
            ts: start + chrono::Duration::minutes(t as i64),
            p_u: power.p_u,
            p_l: power.p_l,
            t_wu: s.t_wu,
            t_wl: s.t_wl,
            contactors: c,
            lid,
        });
        if t == lids.len() {
            break;
        }
        s = step_unchecked(&s, params, power, lid);
        if sigma > 0.0 {
            s.t_wu += noise.sample(&mut rng);
            s.t_wl += noise.sample(&mut rng);
        }
    }
    Ok(TelemetryFrame { records })
}
