use chrono::NaiveDate;
use proptest::prelude::*;

use zincflex::frequency::{normalize, normalize_series, worst_day_fcr, FrequencySeries, NOMINAL_HZ};

const BREAKPOINTS: [f64; 4] = [49.8, 49.98, 50.02, 50.2];

#[test]
fn reference_points_are_exact() {
    for (f, v) in [(49.8, -1.0), (49.98, 0.0), (50.0, 0.0), (50.02, 0.0), (50.2, 1.0)] {
        assert_eq!(normalize(f).unwrap(), v, "at {f} Hz");
    }
}

#[test]
fn continuous_at_breakpoints() {
    for b in BREAKPOINTS {
        let at = normalize(b).unwrap();
        for side in [b.next_down(), b.next_up()] {
            assert!((normalize(side).unwrap() - at).abs() <= 1e-12, "jump at {b} Hz");
        }
    }
}

#[test]
fn rejects_non_finite() {
    assert!(normalize(f64::NAN).is_err());
    assert!(normalize(f64::INFINITY).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn odd_about_nominal(d in 0.0f64..1.0) {
        let up = normalize(NOMINAL_HZ + d).unwrap();
        let down = normalize(NOMINAL_HZ - d).unwrap();
        prop_assert!((up + down).abs() <= 1e-12, "{up} vs {down}");
    }

    #[test]
    fn monotone_and_bounded(a in 49.0f64..51.0, b in 49.0f64..51.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (x, y) = (normalize(lo).unwrap(), normalize(hi).unwrap());
        prop_assert!(x <= y);
        prop_assert!((-1.0..=1.0).contains(&x));
    }

    #[test]
    fn linear_between_deadband_and_saturation(f in 50.02f64..50.2) {
        let v = normalize(f).unwrap();
        prop_assert!((v - (f - 50.02) / 0.18).abs() <= 1e-12);
    }
}

#[test]
fn worst_day_has_largest_deviation() {
    let start = NaiveDate::from_ymd_opt(2024, 3, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let mut hz = vec![50.0; 3 * 1440];
    for v in &mut hz[1440..2880] {
        *v = 49.95;
    }
    hz[100] = 49.5;
    let series = FrequencySeries::new(start, hz).unwrap();
    assert_eq!(worst_day_fcr(&series).unwrap(), NaiveDate::from_ymd_opt(2024, 3, 2).unwrap());
    assert_eq!(normalize_series(&series.hz[..2]).unwrap(), vec![0.0, 0.0]);
}
