//! Grid frequency: the FCR droop map and worst-day selection.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NOMINAL_HZ: f64 = 50.0;
const FULL_LOW: f64 = 49.8;
const DEADBAND_LOW: f64 = 49.98;
const DEADBAND_HIGH: f64 = 50.02;
const FULL_HIGH: f64 = 50.2;
/// Width of each proportional segment (Hz).
const SPAN: f64 = 0.18;

/// Per-minute grid frequency starting at `start` (UTC).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySeries {
    pub start: NaiveDateTime,
    pub hz: Vec<f64>,
}

impl FrequencySeries {
    pub fn new(start: NaiveDateTime, hz: Vec<f64>) -> Result<Self> {
        if let Some((i, f)) = hz.iter().enumerate().find(|(_, f)| !(45.0..=55.0).contains(*f)) {
            return Err(Error::domain(format!("frequency sample {i} = {f} Hz outside [45, 55]")));
        }
        Ok(Self { start, hz })
    }

    pub fn timestamp(&self, i: usize) -> NaiveDateTime {
        self.start + Duration::minutes(i as i64)
    }

    /// `(date, first index)` of every complete calendar day.
    pub fn complete_days(&self) -> Vec<(NaiveDate, usize)> {
        let mut out = Vec::new();
        let mut i = 0usize;
        while i < self.hz.len() {
            let ts = self.timestamp(i);
            let midnight = ts.date().and_hms_opt(0, 0, 0).expect("midnight");
            let offset = (ts - midnight).num_minutes() as usize;
            if offset != 0 {
                i += 1440 - offset;
                continue;
            }
            if i + 1440 <= self.hz.len() {
                out.push((ts.date(), i));
            }
            i += 1440;
        }
        out
    }
}

/// Normalised FCR response for a frequency: −1 at or below 49.8 Hz, +1 at or
/// above 50.2 Hz, linear outside the ±20 mHz deadband and zero inside it.
pub fn normalize(f: f64) -> Result<f64> {
    if !f.is_finite() {
        return Err(Error::domain(format!("non-finite frequency {f}")));
    }
    Ok(normalize_unchecked(f))
}

fn normalize_unchecked(f: f64) -> f64 {
    if f <= FULL_LOW {
        -1.0
    } else if f <= DEADBAND_LOW {
        (f - DEADBAND_LOW) / SPAN
    } else if f < DEADBAND_HIGH {
        0.0
    } else if f < FULL_HIGH {
        (f - DEADBAND_HIGH) / SPAN
    } else {
        1.0
    }
}

pub fn normalize_series(hz: &[f64]) -> Result<Vec<f64>> {
    hz.iter().map(|&f| normalize(f)).collect()
}

/// Day with the largest summed absolute deviation from 50 Hz; earliest wins ties.
pub fn worst_day_fcr(freq: &FrequencySeries) -> Result<NaiveDate> {
    let mut best: Option<(NaiveDate, f64)> = None;
    for (date, i) in freq.complete_days() {
        let dev: f64 = freq.hz[i..i + 1440].iter().map(|f| (f - NOMINAL_HZ).abs()).sum();
        if best.map_or(true, |(_, b)| dev > b) {
            best = Some((date, dev));
        }
    }
    best.map(|(d, _)| d)
        .ok_or_else(|| Error::domain("no complete day of frequency data"))
}
