//! Price, frequency, lid and telemetry series: CSV input and output, gap
//! reports, scenario bundles and the synthetic scenario generator.
//!
//! CSV schemas (timestamps `YYYY-MM-DDTHH:MM:SSZ`, UTC):
//!
//! * prices: `ts,spot_dkk_kwh,fcr_dkk_kw,mfrr_dkk_kw,balancing_dkk_kwh` (hourly)
//! * frequency: `ts,hz` (per minute)
//! * lid: `ts,lid` (per minute, 0 or 1)
//! * telemetry: `ts,p_u_kw,p_l_kw,t_wu_c,t_wl_c,qu1,qu2,ql3,ql4,lid` (per minute)

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Pareto};
use serde::{Deserialize, Serialize};

use crate::control::{ContactorState, HysteresisConfig};
use crate::error::{Error, Result};
use crate::frequency::{FrequencySeries, NOMINAL_HZ};
use crate::thermal::{FurnaceParameters, LidSchedule, Setpoints};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";
pub const PRICE_HEADER: [&str; 5] = ["ts", "spot_dkk_kwh", "fcr_dkk_kw", "mfrr_dkk_kw", "balancing_dkk_kwh"];
pub const FREQUENCY_HEADER: [&str; 2] = ["ts", "hz"];
pub const LID_HEADER: [&str; 2] = ["ts", "lid"];
pub const TELEMETRY_HEADER: [&str; 10] = [
    "ts", "p_u_kw", "p_l_kw", "t_wu_c", "t_wl_c", "qu1", "qu2", "ql3", "ql4", "lid",
];
pub const MINUTES_PER_DAY: usize = 1440;

pub fn format_ts(ts: NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

pub fn parse_ts(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT).ok()
}

pub fn midnight(d: NaiveDate) -> NaiveDateTime {
    d.and_hms_opt(0, 0, 0).expect("midnight exists")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRecord {
    pub ts: NaiveDateTime,
    /// DKK/kWh
    pub spot: f64,
    /// DKK/kW
    pub fcr: f64,
    /// DKK/kW
    pub mfrr: f64,
    /// DKK/kWh
    pub balancing: f64,
}

/// Hourly prices sorted by timestamp. Missing hours are simply absent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PriceSeries {
    pub records: Vec<PriceRecord>,
}

impl PriceSeries {
    /// `(date, first index)` of every day with 24 consecutive hours from
    /// midnight.
    pub fn complete_days(&self) -> Vec<(NaiveDate, usize)> {
        let mut out = Vec::new();
        let r = &self.records;
        let mut i = 0;
        while i < r.len() {
            let start = midnight(r[i].ts.date());
            let whole = r[i].ts == start
                && i + 24 <= r.len()
                && (0..24).all(|k| r[i + k].ts == start + Duration::hours(k as i64));
            if whole {
                out.push((start.date(), i));
                i += 24;
            } else {
                i += 1;
            }
        }
        out
    }
}

/// A parsed series and the timestamps missing from its regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub series: T,
    pub gaps: Vec<NaiveDateTime>,
}

/// Per-minute telemetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub ts: NaiveDateTime,
    pub p_u: f64,
    pub p_l: f64,
    pub t_wu: f64,
    pub t_wl: f64,
    pub contactors: ContactorState,
    pub lid: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TelemetryFrame {
    pub records: Vec<TelemetryRecord>,
}

impl TelemetryFrame {
    /// Checks uniform one-minute spacing and non-negative powers.
    pub fn validate(&self) -> Result<()> {
        for w in self.records.windows(2) {
            if w[1].ts - w[0].ts != Duration::minutes(1) {
                return Err(Error::domain(format!(
                    "telemetry not at uniform 1-minute spacing after {}",
                    format_ts(w[0].ts)
                )));
            }
        }
        if let Some(r) = self.records.iter().find(|r| !(r.p_u >= 0.0 && r.p_l >= 0.0)) {
            return Err(Error::domain(format!("negative power at {}", format_ts(r.ts))));
        }
        Ok(())
    }
}

fn read_records(path: &Path, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let got = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if got.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(parse_err(
            1,
            format!("header `{}` does not match `{}`", got.iter().collect::<Vec<_>>().join(","), header.join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    Ok(out)
}

struct Fields<'a> {
    path: &'a Path,
    line: u64,
    rec: &'a csv::StringRecord,
    header: &'a [&'a str],
}

impl Fields<'_> {
    fn err(&self, message: String) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message,
        }
    }

    fn raw(&self, i: usize) -> Result<&str> {
        self.rec
            .get(i)
            .map(str::trim)
            .ok_or_else(|| self.err(format!("missing field `{}`", self.header[i])))
    }

    fn ts(&self) -> Result<NaiveDateTime> {
        let s = self.raw(0)?;
        parse_ts(s).ok_or_else(|| self.err(format!("bad timestamp `{s}`")))
    }

    fn num(&self, i: usize) -> Result<f64> {
        let s = self.raw(i)?;
        let v: f64 = s
            .parse()
            .map_err(|_| self.err(format!("field `{}`: bad number `{s}`", self.header[i])))?;
        if !v.is_finite() {
            return Err(self.err(format!("field `{}`: non-finite value", self.header[i])));
        }
        Ok(v)
    }

    fn bit(&self, i: usize) -> Result<bool> {
        match self.raw(i)? {
            "0" => Ok(false),
            "1" => Ok(true),
            s => Err(self.err(format!("field `{}`: expected 0 or 1, got `{s}`", self.header[i]))),
        }
    }
}

fn parse_rows<T>(
    path: &Path,
    header: &[&str],
    mut parse: impl FnMut(&Fields) -> Result<T>,
    ts_of: impl Fn(&T) -> NaiveDateTime,
) -> Result<Vec<T>> {
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for (line, rec) in read_records(path, header)? {
        let f = Fields { path, line, rec: &rec, header };
        rows.push(parse(&f)?);
        lines.push(line);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by_key(|&i| ts_of(&rows[i]));
    for w in order.windows(2) {
        if ts_of(&rows[w[0]]) == ts_of(&rows[w[1]]) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lines[w[1]],
                message: format!("duplicate timestamp {}", format_ts(ts_of(&rows[w[1]]))),
            });
        }
    }
    let mut slots: Vec<Option<T>> = rows.into_iter().map(Some).collect();
    Ok(order.into_iter().map(|i| slots[i].take().expect("each row once")).collect())
}

/// Timestamps missing between consecutive entries on a regular grid.
pub fn find_gaps(stamps: &[NaiveDateTime], step: Duration) -> Vec<NaiveDateTime> {
    let mut gaps = Vec::new();
    for w in stamps.windows(2) {
        let mut t = w[0] + step;
        while t < w[1] {
            gaps.push(t);
            t += step;
        }
    }
    gaps
}

fn check_grid(path: &Path, stamps: &[NaiveDateTime], step: Duration) -> Result<()> {
    let origin = match stamps.first() {
        Some(t) => *t,
        None => return Ok(()),
    };
    if let Some(t) = stamps.iter().find(|t| (**t - origin).num_seconds() % step.num_seconds() != 0) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("timestamp {} is off the {}-minute grid", format_ts(*t), step.num_minutes()),
        });
    }
    Ok(())
}

pub fn load_prices(path: impl AsRef<Path>) -> Result<Loaded<PriceSeries>> {
    let path = path.as_ref();
    let records = parse_rows(
        path,
        &PRICE_HEADER,
        |f| {
            Ok(PriceRecord {
                ts: f.ts()?,
                spot: f.num(1)?,
                fcr: f.num(2)?,
                mfrr: f.num(3)?,
                balancing: f.num(4)?,
            })
        },
        |r| r.ts,
    )?;
    let stamps: Vec<_> = records.iter().map(|r| r.ts).collect();
    check_grid(path, &stamps, Duration::hours(1))?;
    Ok(Loaded {
        gaps: find_gaps(&stamps, Duration::hours(1)),
        series: PriceSeries { records },
    })
}

fn load_minute_pairs<T: Copy>(
    path: &Path,
    header: &[&str],
    value: impl Fn(&Fields) -> Result<T>,
) -> Result<(Vec<(NaiveDateTime, T)>, Vec<NaiveDateTime>)> {
    let rows = parse_rows(path, header, |f| Ok((f.ts()?, value(f)?)), |r| r.0)?;
    let stamps: Vec<_> = rows.iter().map(|r| r.0).collect();
    check_grid(path, &stamps, Duration::minutes(1))?;
    let gaps = find_gaps(&stamps, Duration::minutes(1));
    Ok((rows, gaps))
}

/// Loads per-minute frequency. Missing minutes are reported and filled with
/// the nominal 50 Hz (zero response) so the series stays contiguous.
pub fn load_frequency(path: impl AsRef<Path>) -> Result<Loaded<FrequencySeries>> {
    let path = path.as_ref();
    let (rows, gaps) = load_minute_pairs(path, &FREQUENCY_HEADER, |f| f.num(1))?;
    let start = rows.first().map_or_else(|| midnight(NaiveDate::default()), |r| r.0);
    let mut hz = Vec::with_capacity(rows.len() + gaps.len());
    for (ts, v) in &rows {
        let idx = (*ts - start).num_minutes() as usize;
        hz.resize(idx, NOMINAL_HZ);
        hz.push(*v);
    }
    Ok(Loaded {
        series: FrequencySeries::new(start, hz)?,
        gaps,
    })
}

/// Per-minute lid indicator starting at `start`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LidSeries {
    pub start: NaiveDateTime,
    pub lid: LidSchedule,
}

/// Loads the lid indicator. Missing minutes are reported and filled with
/// lid on.
pub fn load_lids(path: impl AsRef<Path>) -> Result<Loaded<LidSeries>> {
    let path = path.as_ref();
    let (rows, gaps) = load_minute_pairs(path, &LID_HEADER, |f| f.bit(1))?;
    let start = rows.first().map_or_else(|| midnight(NaiveDate::default()), |r| r.0);
    let mut lid = Vec::with_capacity(rows.len() + gaps.len());
    for (ts, v) in &rows {
        let idx = (*ts - start).num_minutes() as usize;
        lid.resize(idx, true);
        lid.push(*v);
    }
    Ok(Loaded {
        series: LidSeries {
            start,
            lid: LidSchedule(lid),
        },
        gaps,
    })
}

pub fn load_telemetry(path: impl AsRef<Path>) -> Result<Loaded<TelemetryFrame>> {
    let path = path.as_ref();
    let records = parse_rows(
        path,
        &TELEMETRY_HEADER,
        |f| {
            let r = TelemetryRecord {
                ts: f.ts()?,
                p_u: f.num(1)?,
                p_l: f.num(2)?,
                t_wu: f.num(3)?,
                t_wl: f.num(4)?,
                contactors: ContactorState {
                    qu1: f.bit(5)?,
                    qu2: f.bit(6)?,
                    ql3: f.bit(7)?,
                    ql4: f.bit(8)?,
                },
                lid: f.bit(9)?,
            };
            if r.p_u < 0.0 || r.p_l < 0.0 {
                return Err(f.err("negative power".into()));
            }
            Ok(r)
        },
        |r| r.ts,
    )?;
    let stamps: Vec<_> = records.iter().map(|r| r.ts).collect();
    check_grid(path, &stamps, Duration::minutes(1))?;
    Ok(Loaded {
        gaps: find_gaps(&stamps, Duration::minutes(1)),
        series: TelemetryFrame { records },
    })
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes header and lines; floats use the shortest representation that
/// parses back to the same value.
fn write_lines(path: &Path, header: &[&str], lines: impl Iterator<Item = String>) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for l in lines {
        writeln!(w, "{l}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_prices(path: impl AsRef<Path>, prices: &PriceSeries) -> Result<()> {
    write_lines(
        path.as_ref(),
        &PRICE_HEADER,
        prices.records.iter().map(|r| {
            format!("{},{},{},{},{}", format_ts(r.ts), r.spot, r.fcr, r.mfrr, r.balancing)
        }),
    )
}

pub fn write_frequency(path: impl AsRef<Path>, freq: &FrequencySeries) -> Result<()> {
    write_lines(
        path.as_ref(),
        &FREQUENCY_HEADER,
        freq.hz
            .iter()
            .enumerate()
            .map(|(i, f)| format!("{},{f}", format_ts(freq.timestamp(i)))),
    )
}

pub fn write_lids(path: impl AsRef<Path>, lids: &LidSeries) -> Result<()> {
    write_lines(
        path.as_ref(),
        &LID_HEADER,
        lids.lid.0.iter().enumerate().map(|(i, &l)| {
            format!("{},{}", format_ts(lids.start + Duration::minutes(i as i64)), u8::from(l))
        }),
    )
}

pub fn write_telemetry(path: impl AsRef<Path>, frame: &TelemetryFrame) -> Result<()> {
    write_lines(
        path.as_ref(),
        &TELEMETRY_HEADER,
        frame.records.iter().map(|r| {
            let [a, b, c, d] = r.contactors.bits();
            format!(
                "{},{},{},{},{},{a},{b},{c},{d},{}",
                format_ts(r.ts),
                r.p_u,
                r.p_l,
                r.t_wu,
                r.t_wl,
                u8::from(r.lid)
            )
        }),
    )
}

/// Static furnace description stored as `furnace.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FurnaceConfig {
    pub params: FurnaceParameters,
    pub setpoints: Setpoints,
    /// Zone minimum power `[upper, lower]` (kW).
    pub p_min: [f64; 2],
    /// Zone nominal power `[upper, lower]` (kW).
    pub p_nom: [f64; 2],
    pub hysteresis: HysteresisConfig,
}

impl Default for FurnaceConfig {
    fn default() -> Self {
        let setpoints = Setpoints::new(450.0, 448.0);
        Self {
            params: FurnaceParameters {
                c_zu: 40.0,
                c_zl: 40.0,
                c_wu: 4.5,
                c_wl: 5.0,
                r_zuzl: 5.0,
                r_wz: 0.1,
                r_ww: 5.0,
                r_wua_off: 1.5,
                r_wua_on: 4.0,
                r_wla: 3.0,
                t_ambient: 20.0,
                dt: 1.0 / 60.0,
            },
            setpoints,
            p_min: [30.0, 30.0],
            p_nom: [400.0, 250.0],
            hysteresis: HysteresisConfig::around(&setpoints, 2.0, 5.0, (180.0, 180.0), (100.0, 100.0)),
        }
    }
}

impl FurnaceConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.setpoints.validate(&self.params)?;
        self.hysteresis.validate()?;
        for i in 0..2 {
            if !(0.0 <= self.p_min[i] && self.p_min[i] <= self.p_nom[i]) {
                return Err(Error::domain("zone limits must satisfy 0 <= p_min <= p_nom"));
            }
        }
        Ok(())
    }
}

/// Everything needed to backtest a date range.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioBundle {
    pub prices: PriceSeries,
    pub frequency: FrequencySeries,
    pub lids: LidSeries,
    pub furnace: FurnaceConfig,
}

/// Aligned series of one day: 24 hourly prices, 1440 minutes of frequency
/// and lid state. Minute `t` belongs to hour `t / 60`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketDay {
    pub date: NaiveDate,
    pub spot: Vec<f64>,
    pub fcr: Vec<f64>,
    pub mfrr: Vec<f64>,
    pub balancing: Vec<f64>,
    pub hz: Vec<f64>,
    pub lids: LidSchedule,
}

impl ScenarioBundle {
    /// Dates covered completely by prices, frequency and lid data, ascending.
    pub fn days(&self) -> Vec<NaiveDate> {
        let minute_days = |start: NaiveDateTime, len: usize| -> BTreeSet<NaiveDate> {
            let offset = (start - midnight(start.date())).num_minutes() as usize;
            let first = if offset == 0 { 0 } else { MINUTES_PER_DAY - offset };
            (first..len)
                .step_by(MINUTES_PER_DAY)
                .filter(|i| i + MINUTES_PER_DAY <= len)
                .map(|i| (start + Duration::minutes(i as i64)).date())
                .collect()
        };
        let freq = minute_days(self.frequency.start, self.frequency.hz.len());
        let lid = minute_days(self.lids.start, self.lids.lid.len());
        self.prices
            .complete_days()
            .into_iter()
            .map(|(d, _)| d)
            .filter(|d| freq.contains(d) && lid.contains(d))
            .collect()
    }

    pub fn day(&self, date: NaiveDate) -> Result<MarketDay> {
        let (_, pi) = self
            .prices
            .complete_days()
            .into_iter()
            .find(|(d, _)| *d == date)
            .ok_or_else(|| Error::domain(format!("no complete price day {date}")))?;
        let minute_index = |start: NaiveDateTime, len: usize| -> Result<usize> {
            let m = (midnight(date) - start).num_minutes();
            if m < 0 || m as usize + MINUTES_PER_DAY > len {
                return Err(Error::domain(format!("minute data does not cover {date}")));
            }
            Ok(m as usize)
        };
        let fi = minute_index(self.frequency.start, self.frequency.hz.len())?;
        let li = minute_index(self.lids.start, self.lids.lid.len())?;
        let recs = &self.prices.records[pi..pi + 24];
        Ok(MarketDay {
            date,
            spot: recs.iter().map(|r| r.spot).collect(),
            fcr: recs.iter().map(|r| r.fcr).collect(),
            mfrr: recs.iter().map(|r| r.mfrr).collect(),
            balancing: recs.iter().map(|r| r.balancing).collect(),
            hz: self.frequency.hz[fi..fi + MINUTES_PER_DAY].to_vec(),
            lids: self.lids.lid.slice(li, li + MINUTES_PER_DAY),
        })
    }

    /// Restricts the bundle to the inclusive date range.
    pub fn restrict(&self, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Self {
        let keep = |d: NaiveDate| from.map_or(true, |f| d >= f) && to.map_or(true, |t| d <= t);
        let mut out = self.clone();
        out.prices.records.retain(|r| keep(r.ts.date()));
        let cut_minutes = |start: NaiveDateTime, len: usize| -> (usize, usize) {
            let lo = (0..len).find(|&i| keep((start + Duration::minutes(i as i64)).date())).unwrap_or(len);
            let hi = (lo..len).find(|&i| !keep((start + Duration::minutes(i as i64)).date())).unwrap_or(len);
            (lo, hi)
        };
        let (lo, hi) = cut_minutes(self.frequency.start, self.frequency.hz.len());
        out.frequency = FrequencySeries {
            start: self.frequency.start + Duration::minutes(lo as i64),
            hz: self.frequency.hz[lo..hi].to_vec(),
        };
        let (lo, hi) = cut_minutes(self.lids.start, self.lids.lid.len());
        out.lids = LidSeries {
            start: self.lids.start + Duration::minutes(lo as i64),
            lid: self.lids.lid.slice(lo, hi),
        };
        out
    }
}

pub const PRICES_FILE: &str = "prices.csv";
pub const FREQUENCY_FILE: &str = "frequency.csv";
pub const LID_FILE: &str = "lid.csv";
pub const FURNACE_FILE: &str = "furnace.json";

pub fn write_scenario(dir: impl AsRef<Path>, bundle: &ScenarioBundle) -> Result<()> {
    let dir = dir.as_ref();
    write_prices(dir.join(PRICES_FILE), &bundle.prices)?;
    write_frequency(dir.join(FREQUENCY_FILE), &bundle.frequency)?;
    write_lids(dir.join(LID_FILE), &bundle.lids)?;
    let path = dir.join(FURNACE_FILE);
    let json = serde_json::to_string_pretty(&bundle.furnace)?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

/// Gap reports of a loaded scenario directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioGaps {
    pub prices: Vec<NaiveDateTime>,
    pub frequency: Vec<NaiveDateTime>,
    pub lids: Vec<NaiveDateTime>,
}

impl ScenarioGaps {
    pub fn is_empty(&self) -> bool {
        self.prices.is_empty() && self.frequency.is_empty() && self.lids.is_empty()
    }
}

pub fn load_scenario(dir: impl AsRef<Path>) -> Result<(ScenarioBundle, ScenarioGaps)> {
    let dir = dir.as_ref();
    let prices = load_prices(dir.join(PRICES_FILE))?;
    let frequency = load_frequency(dir.join(FREQUENCY_FILE))?;
    let lids = load_lids(dir.join(LID_FILE))?;
    let path: PathBuf = dir.join(FURNACE_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let furnace: FurnaceConfig = serde_json::from_str(&text)?;
    furnace.validate()?;
    Ok((
        ScenarioBundle {
            prices: prices.series,
            frequency: frequency.series,
            lids: lids.series,
            furnace,
        },
        ScenarioGaps {
            prices: prices.gaps,
            frequency: frequency.gaps,
            lids: lids.gaps,
        },
    ))
}

/// Knobs of the synthetic scenario generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub start: NaiveDate,
    pub days: usize,
    pub seed: u64,
    /// Long-run mean spot price (DKK/kWh).
    pub spot_mean: f64,
    /// Relative amplitude of the daily spot shape.
    pub spot_daily_amplitude: f64,
    /// Hourly mean-reversion rate of the spot deviation.
    pub spot_reversion: f64,
    /// Hourly standard deviation of the spot innovation (DKK/kWh).
    pub spot_volatility: f64,
    /// FCR price per unit of spot price.
    pub fcr_ratio: f64,
    /// Date from which FCR prices are multiplied by `fcr_discount`.
    pub fcr_regime_change: Option<NaiveDate>,
    pub fcr_discount: f64,
    /// mFRR capacity price per unit of spot price.
    pub mfrr_ratio: f64,
    /// Share of hours whose balancing price carries a spike.
    pub spike_fraction: f64,
    /// Scale of the Pareto-distributed spike (DKK/kWh).
    pub spike_scale: f64,
    pub spike_shape: f64,
    /// Stationary standard deviation of the frequency (Hz).
    pub freq_sigma: f64,
    /// Correlation time of the frequency noise (minutes).
    pub freq_tau_min: f64,
    /// Daily lid-off windows as `(start minute, length)`.
    pub lid_off_windows: Vec<(usize, usize)>,
    pub furnace: FurnaceConfig,
}

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_DAYS: usize = 30;

/// The default scenario: 30 days from 2024-01-01 with [`DEFAULT_SEED`].
impl Default for SynthSpec {
    fn default() -> Self {
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date");
        Self::new(start, DEFAULT_DAYS, DEFAULT_SEED)
    }
}

impl SynthSpec {
    pub fn new(start: NaiveDate, days: usize, seed: u64) -> Self {
        Self {
            start,
            days,
            seed,
            spot_mean: 0.8,
            spot_daily_amplitude: 0.25,
            spot_reversion: 0.15,
            spot_volatility: 0.06,
            fcr_ratio: 0.15,
            fcr_regime_change: None,
            fcr_discount: 0.35,
            mfrr_ratio: 0.01,
            spike_fraction: 0.15,
            spike_scale: 0.3,
            spike_shape: 2.0,
            freq_sigma: 0.025,
            freq_tau_min: 5.0,
            lid_off_windows: vec![(8 * 60, 30), (13 * 60 + 15, 30), (19 * 60 + 30, 15)],
            furnace: FurnaceConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::domain("scenario needs at least one day"));
        }
        if !(0.0..=1.0).contains(&self.spike_fraction) {
            return Err(Error::domain("spike fraction must lie in [0, 1]"));
        }
        if !(self.freq_sigma >= 0.0 && self.freq_tau_min > 0.0 && self.spike_scale > 0.0 && self.spike_shape > 0.0) {
            return Err(Error::domain("noise scales must be positive"));
        }
        if self
            .lid_off_windows
            .iter()
            .any(|&(s, l)| s + l > MINUTES_PER_DAY)
        {
            return Err(Error::domain("lid-off window extends past midnight"));
        }
        self.furnace.validate()
    }
}

/// Seeded synthetic scenario: mean-reverting spot with a daily shape, FCR
/// and mFRR capacity prices proportional to spot, balancing prices equal to
/// spot plus Pareto spikes on a random share of hours, Ornstein-Uhlenbeck
/// frequency clipped to [49.5, 50.5] Hz and fixed daily lid-off windows.
pub fn synthesize_scenario(spec: &SynthSpec) -> Result<ScenarioBundle> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let spike = Pareto::new(spec.spike_scale, spec.spike_shape)
        .map_err(|e| Error::domain(format!("spike distribution: {e}")))?;
    let start = midnight(spec.start);
    let hours = spec.days * 24;

    let mut records = Vec::with_capacity(hours);
    let mut dev = 0.0;
    for h in 0..hours {
        let ts = start + Duration::hours(h as i64);
        let hour_of_day = (h % 24) as f64;
        let shape = 1.0 + spec.spot_daily_amplitude * (std::f64::consts::TAU * (hour_of_day - 12.0) / 24.0).sin();
        dev = (1.0 - spec.spot_reversion) * dev + spec.spot_volatility * std_normal.sample(&mut rng);
        let spot = (spec.spot_mean * shape + dev).max(0.01);
        let discount = match spec.fcr_regime_change {
            Some(d) if ts.date() >= d => spec.fcr_discount,
            _ => 1.0,
        };
        let spiked = rng.gen::<f64>() < spec.spike_fraction;
        let jump = spike.sample(&mut rng);
        let balancing = if spiked { spot + jump } else { spot };
        records.push(PriceRecord {
            ts,
            spot,
            fcr: spec.fcr_ratio * spot * discount,
            mfrr: spec.mfrr_ratio * spot,
            balancing,
        });
    }

    let minutes = spec.days * MINUTES_PER_DAY;
    let a = (-1.0 / spec.freq_tau_min).exp();
    let innovation = spec.freq_sigma * (1.0 - a * a).sqrt();
    let mut x = spec.freq_sigma * std_normal.sample(&mut rng);
    let mut hz = Vec::with_capacity(minutes);
    for _ in 0..minutes {
        hz.push((NOMINAL_HZ + x).clamp(49.5, 50.5));
        x = a * x + innovation * std_normal.sample(&mut rng);
    }

    let mut lid = vec![true; minutes];
    for d in 0..spec.days {
        for &(s, l) in &spec.lid_off_windows {
            let base = d * MINUTES_PER_DAY + s;
            lid[base..base + l].iter_mut().for_each(|v| *v = false);
        }
    }

    Ok(ScenarioBundle {
        prices: PriceSeries { records },
        frequency: FrequencySeries::new(start, hz)?,
        lids: LidSeries {
            start,
            lid: LidSchedule(lid),
        },
        furnace: spec.furnace.clone(),
    })
}
