mod support;

use std::fs;

use zincflex::backtest::{run_backtest, sweep_temperature, worst_days, BacktestConfig, BacktestResult, Service};
use zincflex::fcr::{solve_fcr, FcrDayInput};
use zincflex::frequency::normalize_series;
use zincflex::mfrr::{solve_mfrr, MfrrDayInput};
use zincflex::report::{
    read_backtest, write_backtest, write_sweep, write_worst_days, BACKTEST_CSV, COST_SVG, DEFAULT_INVESTMENT_DKK,
    FCR_DAY_CSV, FCR_DAY_SVG, MFRR_DAY_SVG, MFRR_HOURLY_CSV, MFRR_STEPS_CSV, SUMMARY_TXT, SWEEP_CSV, SWEEP_SVG,
};
use zincflex::thermal::steady_state_power;
use zincflex::Execution;

use support::scenario;

fn fast() -> BacktestConfig {
    BacktestConfig {
        node_limit: Some(200),
        ..BacktestConfig::default()
    }
}

fn check_accounting(r: &BacktestResult) {
    let mut acc = [0.0; 3];
    for (i, d) in r.days.iter().enumerate() {
        let fcr = d.fcr.as_ref().map_or(d.base_cost, |s| s.cost);
        let mfrr = d.mfrr.as_ref().map_or(d.base_cost, |s| s.cost);
        assert!(fcr <= d.base_cost + 1e-9 && mfrr <= d.base_cost + 1e-9, "{}", d.date);
        acc[0] += d.base_cost;
        acc[1] += fcr;
        acc[2] += mfrr;
        assert_eq!(r.cumulative_base[i], acc[0]);
        assert_eq!(r.cumulative_fcr[i], acc[1]);
        assert_eq!(r.cumulative_mfrr[i], acc[2]);
    }
}

#[test]
fn costs_recomputed_day_by_day() {
    let bundle = scenario(3, 17);
    let cfg = fast();
    let result = run_backtest(&bundle, &cfg).unwrap();
    assert_eq!(result.days.len(), 3);
    check_accounting(&result);
    let f = &bundle.furnace;
    for d in &result.days {
        let day = bundle.day(d.date).unwrap();
        let on = steady_state_power(&f.params, &f.setpoints, true).unwrap();
        let off = steady_state_power(&f.params, &f.setpoints, false).unwrap();
        let base: f64 = (0..1440)
            .map(|t| {
                let (l, u) = if day.lids.get(t) { on } else { off };
                day.spot[t / 60] * (l + u) / 60.0
            })
            .sum();
        assert!((d.base_cost - base).abs() <= 1e-9 * base, "{} vs {base}", d.base_cost);

        let fcr_in = FcrDayInput::new(
            f.params,
            f.setpoints,
            day.lids.clone(),
            normalize_series(&day.hz).unwrap(),
            day.fcr.clone(),
        )
        .unwrap();
        let fcr = solve_fcr(&fcr_in).unwrap();
        let got = d.fcr.as_ref().unwrap();
        assert!((got.cost - (base - fcr.objective.max(0.0))).abs() <= 1e-6 * base);

        let mut mfrr_in = MfrrDayInput::new(
            f.params,
            f.setpoints,
            day.lids.clone(),
            f.p_min,
            f.p_nom,
            day.mfrr.clone(),
            day.spot.clone(),
            day.balancing.clone(),
        )
        .unwrap();
        mfrr_in.milp.node_limit = cfg.node_limit;
        let mfrr = solve_mfrr(&mfrr_in).unwrap();
        let got = d.mfrr.as_ref().unwrap();
        assert!((got.cost - (base - mfrr.objective.max(0.0))).abs() <= 1e-6 * base);
    }
}

#[test]
fn zero_prices_cost_nothing() {
    let mut bundle = scenario(1, 2);
    for r in &mut bundle.prices.records {
        r.spot = 0.0;
        r.fcr = 0.0;
        r.mfrr = 0.0;
        r.balancing = 0.0;
    }
    let r = run_backtest(&bundle, &fast()).unwrap();
    let d = &r.days[0];
    assert_eq!(d.base_cost, 0.0);
    assert_eq!(d.fcr.as_ref().unwrap().cost, 0.0);
    assert_eq!(d.mfrr.as_ref().unwrap().cost, 0.0);
}

#[test]
fn flat_frequency_saves_price_times_baseline() {
    let mut bundle = scenario(2, 4);
    bundle.frequency.hz.fill(50.0);
    let cfg = BacktestConfig {
        service: Service::Fcr,
        ..fast()
    };
    let r = run_backtest(&bundle, &cfg).unwrap();
    let f = &bundle.furnace;
    for d in &r.days {
        let day = bundle.day(d.date).unwrap();
        let b = zincflex::control::baseline_profile(&f.params, &f.setpoints, &day.lids).unwrap();
        let expect: f64 = (0..24).map(|h| day.fcr[h] * b.hourly_total(h)).sum();
        let got = d.fcr.as_ref().unwrap().savings(d.base_cost);
        // the full-day LP goes to the interior-point engine
        assert!((got - expect).abs() <= 1e-6 * expect, "{got} vs {expect}");
        assert!(d.mfrr.is_none());
    }
    assert_eq!(r.cumulative_mfrr, r.cumulative_base);
}

#[test]
fn report_files_round_trip_and_repeat_byte_for_byte() {
    let bundle = scenario(2, 9);
    let cfg = fast();
    let a = run_backtest(&bundle, &cfg).unwrap();
    let b = run_backtest(
        &bundle,
        &BacktestConfig {
            execution: Execution::Sequential,
            ..fast()
        },
    )
    .unwrap();
    assert_eq!(a, b);

    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let files = write_backtest(&a, da.path(), DEFAULT_INVESTMENT_DKK).unwrap();
    write_backtest(&b, db.path(), DEFAULT_INVESTMENT_DKK).unwrap();
    let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_owned()).collect();
    assert_eq!(names, [BACKTEST_CSV, COST_SVG, SUMMARY_TXT]);
    for n in &names {
        assert_eq!(fs::read(da.path().join(n)).unwrap(), fs::read(db.path().join(n)).unwrap(), "{n}");
    }
    let back = read_backtest(&da.path().join(BACKTEST_CSV)).unwrap();
    assert_eq!(back, a);
    let summary = fs::read_to_string(da.path().join(SUMMARY_TXT)).unwrap();
    assert!(summary.contains("payback"), "{summary}");
}

#[test]
fn chained_days_start_from_previous_state() {
    let bundle = scenario(2, 6);
    let cfg = BacktestConfig {
        chain_state: true,
        service: Service::Fcr,
        ..fast()
    };
    let r = run_backtest(&bundle, &cfg).unwrap();
    check_accounting(&r);
    assert!(r.days.iter().all(|d| d.fcr.as_ref().unwrap().error.is_none()));
}

#[test]
fn small_sweep_is_monotone_and_written() {
    let bundle = scenario(2, 12);
    let s = sweep_temperature(&bundle, &[0.5, 2.0], &fast()).unwrap();
    for series in [s.fcr.as_ref().unwrap(), s.mfrr.as_ref().unwrap()] {
        assert!(series.failures.is_empty());
        assert!(series.savings[0] <= series.savings[1] + 1e-6);
        assert!(series.savings[1] <= series.unconstrained + 1e-6 * series.unconstrained.abs().max(1.0));
        for (v, b) in series.savings.iter().zip(&series.bounds) {
            assert!(b >= v);
        }
    }
    assert!(sweep_temperature(&bundle, &[2.0, 0.5], &fast()).is_err());
    let dir = tempfile::tempdir().unwrap();
    let files = write_sweep(&s, dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    assert!(dir.path().join(SWEEP_CSV).exists() && dir.path().join(SWEEP_SVG).exists());
    let csv = fs::read_to_string(dir.path().join(SWEEP_CSV)).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 + 1);
}

#[test]
fn worst_days_are_written() {
    let bundle = scenario(2, 13);
    let w = worst_days(&bundle, &fast()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_worst_days(&w, dir.path()).unwrap();
    for n in [FCR_DAY_CSV, FCR_DAY_SVG, MFRR_HOURLY_CSV, MFRR_STEPS_CSV, MFRR_DAY_SVG] {
        assert!(dir.path().join(n).exists(), "{n}");
    }
    let steps = fs::read_to_string(dir.path().join(FCR_DAY_CSV)).unwrap();
    assert_eq!(steps.lines().count(), 1 + 1440);
}
