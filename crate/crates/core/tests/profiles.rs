use chrono::{Duration, Timelike};
use proptest::prelude::*;
use pvbatt::profiles::*;

fn year_csv(value: impl Fn(usize, chrono::NaiveDateTime) -> String) -> String {
    let start = year_start(SYNTHETIC_YEAR);
    let mut text = String::from("timestamp,energy_kwh\n");
    for i in 0..intervals_in_year(SYNTHETIC_YEAR) {
        let ts = start + Duration::minutes(15 * i as i64);
        text.push_str(&format!("{},{}\n", ts.format("%Y-%m-%dT%H:%M"), value(i, ts)));
    }
    text
}

fn year_of(value: impl Fn(chrono::NaiveDateTime) -> f64) -> TimeSeries {
    let start = year_start(SYNTHETIC_YEAR);
    let values = (0..intervals_in_year(SYNTHETIC_YEAR))
        .map(|i| value(start + Duration::minutes(15 * i as i64)))
        .collect();
    TimeSeries::new(start, STEP_MINUTES, values).unwrap()
}

#[test]
fn constant_half_kwh_year() {
    let series = parse_series(year_csv(|_, _| "0.5".into()).as_bytes()).unwrap();
    assert_eq!(series.len(), 35_040);
    check_full_year(&series).unwrap();
    let p = BuildingProfile::new("flat", BuildingType::School, series).unwrap();
    assert!((p.annual_consumption_mwh - 17.52).abs() < 1e-12);
    assert!((p.summer_share - 183.0 / 365.0).abs() < 1e-12);
    assert!((p.daytime_share - 0.5).abs() < 1e-12);
}

#[test]
fn negative_value_names_its_line() {
    let text = year_csv(|i, _| if i == 99 { "-1".into() } else { "0.5".into() });
    match parse_series(text.as_bytes()) {
        Err(ProfileError::Parse { line, .. }) => assert_eq!(line, 101),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn malformed_inputs() {
    assert!(matches!(parse_series("time,kwh\n".as_bytes()), Err(ProfileError::Parse { line: 1, .. })));
    let gap = "timestamp,energy_kwh\n2017-01-01T00:00,1\n2017-01-01T00:15,1\n2017-01-01T00:45,1\n";
    assert!(matches!(parse_series(gap.as_bytes()), Err(ProfileError::Parse { line: 4, .. })));
    let bad = "timestamp,energy_kwh\n2017-01-01T00:00,abc\n";
    assert!(matches!(parse_series(bad.as_bytes()), Err(ProfileError::Parse { line: 2, .. })));
    let short = parse_series("timestamp,energy_kwh\n2017-01-01T00:00,1\n2017-01-01T00:15,1\n".as_bytes()).unwrap();
    assert!(matches!(check_full_year(&short), Err(ProfileError::IntervalCount { .. })));
}

#[test]
fn seasonal_and_daytime_windows() {
    let july = year_of(|ts| if ts.format("%m").to_string() == "07" { 1.0 } else { 0.0 });
    assert_eq!(summer_share(&july).unwrap(), 1.0);
    let morning = year_of(|ts| if ts.hour() == 9 { 1.0 } else { 0.0 });
    assert_eq!(daytime_share(&morning).unwrap(), 1.0);
    let evening = year_of(|ts| if ts.hour() == 20 { 1.0 } else { 0.0 });
    assert_eq!(daytime_share(&evening).unwrap(), 0.0);
    assert!(matches!(summer_share(&year_of(|_| 0.0)), Err(ProfileError::ZeroEnergy)));
}

#[test]
fn synthetic_school() {
    let a = generate_synthetic(BuildingType::School, 100.0, 42).unwrap();
    let b = generate_synthetic(BuildingType::School, 100.0, 42).unwrap();
    assert_eq!(a.load, b.load);
    assert_eq!(a.load.total(), 100_000.0);
    assert_eq!(a.annual_consumption_mwh, 100.0);
    assert!(a.summer_share < 0.5, "{}", a.summer_share);
    check_full_year(&a.load).unwrap();
}

#[test]
fn synthetic_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    for kind in BuildingType::ALL {
        let p = generate_synthetic(kind, 73.3, 5).unwrap();
        let path = dir.path().join("p.csv");
        save_series(&p.load, &path).unwrap();
        let back = load_profile(&path, &p.id, kind).unwrap();
        assert_eq!(back.load, p.load);
        assert_eq!(back.summer_share, p.summer_share);
    }
    let pv = generate_pv_profile(1);
    let mut bytes = Vec::new();
    write_series(&pv, &mut bytes).unwrap();
    assert_eq!(parse_series(bytes.as_slice()).unwrap(), pv);
}

#[test]
fn pv_profile_shape() {
    let pv = generate_pv_profile(7);
    assert_eq!(pv.len(), 35_040);
    assert!((pv.total() - SYNTHETIC_PV_YIELD).abs() < 1e-6);
    assert!(pv.values().iter().all(|v| (0.0..=0.25).contains(v)));
    // Nothing at midnight, most energy in summer.
    assert_eq!(pv.values()[0], 0.0);
    assert!(summer_share(&pv).unwrap() > 0.6);
}

#[test]
fn fleet_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let fleet = synthetic_fleet(4, 9).unwrap();
    write_profile_dir(&fleet, dir.path()).unwrap();
    let back = read_profile_dir(dir.path()).unwrap();
    assert_eq!(back.len(), 4);
    for (a, b) in fleet.iter().zip(&back) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.building_type, b.building_type);
        assert_eq!(a.load, b.load);
    }
    let types: std::collections::BTreeSet<_> = fleet.iter().map(|p| p.building_type).collect();
    assert_eq!(types.len(), 4);
}

proptest! {
    #[test]
    fn seasons_partition_the_total(ticks in prop::collection::vec(0u32..4096, 96 * 7..96 * 30), start_day in 0i64..330) {
        // Multiples of 1/64 sum exactly in any order.
        let values: Vec<f64> = ticks.iter().map(|k| f64::from(*k) / 64.0).collect();
        let start = year_start(SYNTHETIC_YEAR) + Duration::days(start_day);
        let series = TimeSeries::new(start, STEP_MINUTES, values).unwrap();
        let (summer, winter) = season_split(&series);
        prop_assert_eq!(summer + winter, series.total());
    }

    #[test]
    fn building_types_round_trip(k in 0usize..BuildingType::ALL.len()) {
        let t = BuildingType::ALL[k];
        prop_assert_eq!(t.to_string().parse::<BuildingType>().unwrap(), t);
    }
}
