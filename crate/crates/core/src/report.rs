//! CSV tables and static SVG line charts for backtests, sweeps and the
//! worst-day solutions.
//!
//! Files written by [`write_backtest`]: [`BACKTEST_CSV`], [`COST_SVG`],
//! [`SUMMARY_TXT`]. By [`write_sweep`]: [`SWEEP_CSV`], [`SWEEP_SVG`]. By
//! [`write_worst_days`]: [`FCR_DAY_CSV`], [`FCR_DAY_SVG`],
//! [`MFRR_HOURLY_CSV`], [`MFRR_STEPS_CSV`], [`MFRR_DAY_SVG`] for each service
//! present. Floats are written in their shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::backtest::{BacktestResult, DayResult, ServiceDay, SweepResult, SweepSeries, WorstDays};
use crate::error::{Error, Result};
use crate::fcr::FcrSolution;
use crate::mfrr::MfrrSolution;

/// One-time cost of enabling continuous power control (DKK).
pub const DEFAULT_INVESTMENT_DKK: f64 = 500_000.0;

pub const BACKTEST_CSV: &str = "backtest_daily.csv";
pub const COST_SVG: &str = "cumulative_cost.svg";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_SVG: &str = "sweep.svg";
pub const FCR_DAY_CSV: &str = "worst_day_fcr.csv";
pub const FCR_DAY_SVG: &str = "worst_day_fcr.svg";
pub const MFRR_HOURLY_CSV: &str = "worst_day_mfrr_hourly.csv";
pub const MFRR_STEPS_CSV: &str = "worst_day_mfrr_steps.csv";
pub const MFRR_DAY_SVG: &str = "worst_day_mfrr.svg";

pub const BACKTEST_HEADER: [&str; 19] = [
    "date",
    "base_cost_dkk",
    "fcr_cost_dkk",
    "mfrr_cost_dkk",
    "cum_base_dkk",
    "cum_fcr_dkk",
    "cum_mfrr_dkk",
    "fcr_objective_dkk",
    "fcr_iterations",
    "fcr_nodes",
    "fcr_gap",
    "fcr_error",
    "mfrr_objective_dkk",
    "mfrr_iterations",
    "mfrr_nodes",
    "mfrr_gap",
    "mfrr_error",
    "fcr_run",
    "mfrr_run",
];

pub const SWEEP_HEADER: [&str; 5] = ["delta_c", "fcr_savings_dkk", "fcr_bound_dkk", "mfrr_savings_dkk", "mfrr_bound_dkk"];

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn service_fields(s: &Option<ServiceDay>) -> [String; 5] {
    match s {
        None => Default::default(),
        Some(s) => [
            opt_num(s.objective),
            s.iterations.to_string(),
            s.nodes.to_string(),
            opt_num(s.gap),
            s.error.clone().unwrap_or_default(),
        ],
    }
}

pub fn write_backtest(result: &BacktestResult, dir: &Path, investment: f64) -> Result<Vec<PathBuf>> {
    if result.days.is_empty() {
        return Err(Error::domain("backtest result has no days"));
    }
    ensure_dir(dir)?;
    let csv_path = dir.join(BACKTEST_CSV);
    let mut w = csv_writer(&csv_path)?;
    w.write_record(BACKTEST_HEADER).map_err(|e| csv_error(&csv_path, e))?;
    for (i, d) in result.days.iter().enumerate() {
        let cost = |s: &Option<ServiceDay>| s.as_ref().map(|s| num(s.cost)).unwrap_or_default();
        let mut rec = vec![
            d.date.to_string(),
            num(d.base_cost),
            cost(&d.fcr),
            cost(&d.mfrr),
            num(result.cumulative_base[i]),
            num(result.cumulative_fcr[i]),
            num(result.cumulative_mfrr[i]),
        ];
        rec.extend(service_fields(&d.fcr));
        rec.extend(service_fields(&d.mfrr));
        rec.push(d.fcr.is_some().to_string());
        rec.push(d.mfrr.is_some().to_string());
        w.write_record(&rec).map_err(|e| csv_error(&csv_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;

    let x: Vec<f64> = (1..=result.days.len()).map(|d| d as f64).collect();
    let pts = |ys: &[f64]| x.iter().copied().zip(ys.iter().copied()).collect::<Vec<_>>();
    let mut series = vec![Series::new("base", pts(&result.cumulative_base))];
    if result.days.iter().any(|d| d.fcr.is_some()) {
        series.push(Series::new("FCR", pts(&result.cumulative_fcr)));
    }
    if result.days.iter().any(|d| d.mfrr.is_some()) {
        series.push(Series::new("mFRR", pts(&result.cumulative_mfrr)));
    }
    let svg_path = dir.join(COST_SVG);
    write_text(
        &svg_path,
        &line_chart("Cumulative operational cost", "day", "DKK", &series),
    )?;

    let summary_path = dir.join(SUMMARY_TXT);
    write_text(&summary_path, &summary(result, investment))?;
    Ok(vec![csv_path, svg_path, summary_path])
}

/// Plain-text totals with the payback time of a one-time investment.
pub fn summary(result: &BacktestResult, investment: f64) -> String {
    let days = result.days.len();
    let first = result.days.first().map(|d| d.date.to_string()).unwrap_or_default();
    let last = result.days.last().map(|d| d.date.to_string()).unwrap_or_default();
    let mut out = String::new();
    let _ = writeln!(out, "period: {first} to {last} ({days} days)");
    let _ = writeln!(out, "base cost: {:.2} DKK", result.cumulative_base.last().unwrap_or(&0.0));
    for (name, ran, savings, failed) in [
        (
            "FCR",
            result.days.iter().any(|d| d.fcr.is_some()),
            result.total_fcr_savings(),
            result.days.iter().filter(|d| d.fcr.as_ref().is_some_and(|s| s.error.is_some())).count(),
        ),
        (
            "mFRR",
            result.days.iter().any(|d| d.mfrr.is_some()),
            result.total_mfrr_savings(),
            result.days.iter().filter(|d| d.mfrr.as_ref().is_some_and(|s| s.error.is_some())).count(),
        ),
    ] {
        if !ran {
            continue;
        }
        let _ = write!(out, "{name} savings: {savings:.2} DKK");
        if failed > 0 {
            let _ = write!(out, " ({failed} failed days counted at base cost)");
        }
        out.push('\n');
        if savings > 0.0 && days > 0 {
            let years = investment / (savings / days as f64 * 365.0);
            let _ = writeln!(out, "{name} payback of {investment:.0} DKK: {years:.2} years");
        } else {
            let _ = writeln!(out, "{name} payback of {investment:.0} DKK: never");
        }
    }
    let _ = writeln!(out, "one-time investment: {investment:.0} DKK");
    out
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, name: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("bad {name} value {v:?}"),
    })
}

fn parse_opt(path: &Path, line: u64, name: &str, v: &str) -> Result<Option<f64>> {
    if v.is_empty() {
        Ok(None)
    } else {
        parse_field(path, line, name, v).map(Some)
    }
}

fn read_service(path: &Path, line: u64, ran: bool, cost: &str, f: &[&str]) -> Result<Option<ServiceDay>> {
    if !ran {
        return Ok(None);
    }
    Ok(Some(ServiceDay {
        objective: parse_opt(path, line, "objective", f[0])?,
        cost: parse_field(path, line, "cost", cost)?,
        iterations: parse_field(path, line, "iterations", f[1])?,
        nodes: parse_field(path, line, "nodes", f[2])?,
        gap: parse_opt(path, line, "gap", f[3])?,
        error: (!f[4].is_empty()).then(|| f[4].to_string()),
    }))
}

/// Loads a table written by [`write_backtest`]; the cumulative columns must
/// be the running sums of the daily ones.
pub fn read_backtest(path: &Path) -> Result<BacktestResult> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(BACKTEST_HEADER) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}", BACKTEST_HEADER.join(",")),
        });
    }
    let mut days = Vec::new();
    let mut cumulative = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = i as u64 + 2;
        let f: Vec<&str> = rec.iter().collect();
        let date: NaiveDate = parse_field(path, line, "date", f[0])?;
        let fcr_run: bool = parse_field(path, line, "fcr_run", f[17])?;
        let mfrr_run: bool = parse_field(path, line, "mfrr_run", f[18])?;
        days.push(DayResult {
            date,
            base_cost: parse_field(path, line, "base cost", f[1])?,
            fcr: read_service(path, line, fcr_run, f[2], &f[7..12])?,
            mfrr: read_service(path, line, mfrr_run, f[3], &f[12..17])?,
        });
        cumulative.push([
            parse_field::<f64>(path, line, "cumulative", f[4])?,
            parse_field::<f64>(path, line, "cumulative", f[5])?,
            parse_field::<f64>(path, line, "cumulative", f[6])?,
        ]);
    }
    let result = BacktestResult::from_days(days);
    for (i, c) in cumulative.iter().enumerate() {
        let expected = [result.cumulative_base[i], result.cumulative_fcr[i], result.cumulative_mfrr[i]];
        if *c != expected {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 2,
                message: "cumulative columns are not running sums of the daily costs".into(),
            });
        }
    }
    Ok(result)
}

pub fn write_sweep(sweep: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    if sweep.deltas.is_empty() {
        return Err(Error::domain("sweep has no deltas"));
    }
    ensure_dir(dir)?;
    let csv_path = dir.join(SWEEP_CSV);
    let mut w = csv_writer(&csv_path)?;
    w.write_record(SWEEP_HEADER).map_err(|e| csv_error(&csv_path, e))?;
    let col = |s: &Option<SweepSeries>, i: Option<usize>| -> [String; 2] {
        match (s, i) {
            (None, _) => Default::default(),
            (Some(s), Some(i)) => [num(s.savings[i]), num(s.bounds[i])],
            (Some(s), None) => [num(s.unconstrained), num(s.unconstrained_bound)],
        }
    };
    let rows = (0..sweep.deltas.len()).map(Some).chain([None]);
    for i in rows {
        let mut rec = vec![i.map_or_else(|| "inf".to_string(), |i| num(sweep.deltas[i]))];
        rec.extend(col(&sweep.fcr, i));
        rec.extend(col(&sweep.mfrr, i));
        w.write_record(&rec).map_err(|e| csv_error(&csv_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;

    let mut series = Vec::new();
    for (name, s) in [("FCR", &sweep.fcr), ("mFRR", &sweep.mfrr)] {
        if let Some(s) = s {
            let pts = sweep.deltas.iter().copied().zip(s.fractions()).map(|(d, f)| (d, 100.0 * f)).collect();
            series.push(Series::new(name, pts));
        }
    }
    let svg_path = dir.join(SWEEP_SVG);
    write_text(
        &svg_path,
        &line_chart(
            "Savings against allowed temperature deviation",
            "deviation (°C)",
            "% of unconstrained savings",
            &series,
        ),
    )?;
    Ok(vec![csv_path, svg_path])
}

pub fn write_worst_days(w: &WorstDays, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut out = Vec::new();
    if let Some((date, s)) = &w.fcr {
        out.extend(write_fcr_day(*date, s, dir)?);
    }
    if let Some((date, s)) = &w.mfrr {
        out.extend(write_mfrr_day(*date, s, dir)?);
    }
    Ok(out)
}

fn trace_columns(s: &crate::thermal::TemperatureTrace, k: usize) -> [String; 4] {
    // state k + 1 is the state at the end of step k
    s.states[k + 1].to_array().map(num)
}

pub fn write_fcr_day(date: NaiveDate, s: &FcrSolution, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let path = dir.join(FCR_DAY_CSV);
    let mut w = csv_writer(&path)?;
    w.write_record([
        "date", "step", "hour", "response", "reserve_kw", "p_u_kw", "p_l_kw", "base_u_kw", "base_l_kw", "slack_u_kw",
        "slack_l_kw", "t_zu_c", "t_zl_c", "t_wu_c", "t_wl_c",
    ])
    .map_err(|e| csv_error(&path, e))?;
    let steps = s.p.len();
    for k in 0..steps {
        let h = k / s.steps_per_hour;
        let mut rec = vec![
            date.to_string(),
            k.to_string(),
            h.to_string(),
            num(s.response[k]),
            num(s.p_r[h]),
            num(s.zone_p[0][k]),
            num(s.zone_p[1][k]),
            num(s.baseline[0][k]),
            num(s.baseline[1][k]),
            num(s.zone_slack[0][k]),
            num(s.zone_slack[1][k]),
        ];
        rec.extend(trace_columns(&s.trace, k));
        w.write_record(&rec).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let hours = |k: usize| k as f64 / s.steps_per_hour as f64;
    let power = vec![
        Series::new("power", (0..steps).map(|k| (hours(k), s.p[k])).collect()),
        Series::new("baseline", (0..steps).map(|k| (hours(k), s.baseline_total(k))).collect()),
        Series::new("reserve", (0..steps).map(|k| (hours(k), s.p_r[k / s.steps_per_hour])).collect()),
    ];
    let temps = vec![
        Series::new("upper wall", (0..steps).map(|k| (hours(k + 1), s.trace.states[k + 1].t_wu)).collect()),
        Series::new("lower wall", (0..steps).map(|k| (hours(k + 1), s.trace.states[k + 1].t_wl)).collect()),
    ];
    let svg = stacked_charts(&[
        (format!("FCR worst day {date}: power"), "hour", "kW", power),
        (format!("FCR worst day {date}: wall temperature"), "hour", "°C", temps),
    ]);
    let svg_path = dir.join(FCR_DAY_SVG);
    write_text(&svg_path, &svg)?;
    Ok(vec![path, svg_path])
}

pub fn write_mfrr_day(date: NaiveDate, s: &MfrrSolution, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let hourly = dir.join(MFRR_HOURLY_CSV);
    let mut w = csv_writer(&hourly)?;
    w.write_record([
        "date", "hour", "reserve_kw", "bid_dkk_kwh", "activated", "up_kw", "down_kw", "slack_kw", "power_kw",
        "u_up_u", "u_down_u", "u_up_l", "u_down_l", "differential",
    ])
    .map_err(|e| csv_error(&hourly, e))?;
    let b = |v: bool| if v { "1" } else { "0" }.to_string();
    for h in 0..s.p.len() {
        w.write_record([
            date.to_string(),
            h.to_string(),
            num(s.p_r[h]),
            num(s.lambda_bid[h]),
            b(s.g[h]),
            num(s.p_bu[h]),
            num(s.p_bd[h]),
            num(s.s[h]),
            num(s.p[h]),
            b(s.u_up[0][h]),
            b(s.u_down[0][h]),
            b(s.u_up[1][h]),
            b(s.u_down[1][h]),
            b(s.indicator[h]),
        ])
        .map_err(|e| csv_error(&hourly, e))?;
    }
    w.flush().map_err(|e| Error::io(&hourly, e))?;

    let steps_path = dir.join(MFRR_STEPS_CSV);
    let mut w = csv_writer(&steps_path)?;
    w.write_record([
        "date", "step", "hour", "p_u_kw", "p_l_kw", "t_zu_c", "t_zl_c", "t_wu_c", "t_wl_c", "base_t_zu_c", "base_t_zl_c",
        "base_t_wu_c", "base_t_wl_c",
    ])
    .map_err(|e| csv_error(&steps_path, e))?;
    let steps = s.step_power[0].len();
    for k in 0..steps {
        let mut rec = vec![
            date.to_string(),
            k.to_string(),
            (k / s.steps_per_hour).to_string(),
            num(s.step_power[0][k]),
            num(s.step_power[1][k]),
        ];
        rec.extend(trace_columns(&s.trace, k));
        rec.extend(trace_columns(&s.base_trace, k));
        w.write_record(&rec).map_err(|e| csv_error(&steps_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&steps_path, e))?;

    let hours = |k: usize| k as f64 / s.steps_per_hour as f64;
    let hourly_series = vec![
        Series::new("reserve", (0..s.p.len()).map(|h| (h as f64, s.p_r[h])).collect()),
        Series::new("power", (0..s.p.len()).map(|h| (h as f64, s.p[h])).collect()),
        Series::new("up-regulation", (0..s.p.len()).map(|h| (h as f64, s.p_bu[h])).collect()),
    ];
    let temps = vec![
        Series::new("upper zinc", (0..steps).map(|k| (hours(k + 1), s.trace.states[k + 1].t_zu)).collect()),
        Series::new("upper zinc baseline", (0..steps).map(|k| (hours(k + 1), s.base_trace.states[k + 1].t_zu)).collect()),
        Series::new("lower zinc", (0..steps).map(|k| (hours(k + 1), s.trace.states[k + 1].t_zl)).collect()),
        Series::new("lower zinc baseline", (0..steps).map(|k| (hours(k + 1), s.base_trace.states[k + 1].t_zl)).collect()),
    ];
    let prices = vec![Series::new(
        "bid",
        (0..s.p.len()).map(|h| (h as f64, s.lambda_bid[h])).collect(),
    )];
    let svg = stacked_charts(&[
        (format!("mFRR worst day {date}: hourly power"), "hour", "kW", hourly_series),
        (format!("mFRR worst day {date}: zinc temperature"), "hour", "°C", temps),
        (format!("mFRR worst day {date}: regulating bid"), "hour", "DKK/kWh", prices),
    ]);
    let svg_path = dir.join(MFRR_DAY_SVG);
    write_text(&svg_path, &svg)?;
    Ok(vec![hourly, steps_path, svg_path])
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0); // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn chart_body(out: &mut String, y0: f64, title: &str, x_label: &str, y_label: &str, series: &[Series]) {
    let (l, r, t, b) = MARGIN;
    let (xmin, xmax) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (ymin, ymax) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pw = WIDTH - l - r;
    let ph = HEIGHT - t - b;
    let sx = |x: f64| l + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| y0 + t + ph - (y - ymin) / (ymax - ymin) * ph;
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        y0 + 22.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{l:.1}" y="{:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#444"/>"##,
        y0 + t
    );
    for i in 0..=4 {
        let fx = xmin + (xmax - xmin) * i as f64 / 4.0;
        let fy = ymin + (ymax - ymin) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
            sx(fx),
            y0 + t + ph + 14.0,
            tick(fx)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
            l - 4.0,
            sy(fy) + 3.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
        l + pw / 2.0,
        y0 + HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" font-size="11" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        y0 + t + ph / 2.0,
        y0 + t + ph / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = y0 + t + 14.0 + 14.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
            l + 8.0,
            ly - 3.0,
            l + 24.0,
            ly - 3.0,
            l + 28.0,
            ly,
            escape(&s.name)
        );
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e5).contains(&a) {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// A single line chart as a standalone SVG document.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    stacked_charts(&[(title.to_string(), x_label, y_label, series.to_vec())])
}

/// Several line charts stacked vertically in one SVG document.
pub fn stacked_charts(charts: &[(String, &str, &str, Vec<Series>)]) -> String {
    let mut out = String::new();
    let total = HEIGHT * charts.len() as f64;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{total}" viewBox="0 0 {WIDTH} {total}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, (title, xl, yl, series)) in charts.iter().enumerate() {
        chart_body(&mut out, HEIGHT * i as f64, title, xl, yl, series);
    }
    out.push_str("</svg>\n");
    out
}
