//! Fixed-step load and PV series, the profile CSV format, consumption
//! features and a deterministic synthetic generator.

use std::f64::consts::PI;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const STEP_MINUTES: u32 = 15;

/// Calendar year used for synthetic data (starts on a Sunday, not a leap year).
pub const SYNTHETIC_YEAR: i32 = 2017;

/// Annual yield of the synthetic PV trace in kWh per kW_p.
pub const SYNTHETIC_PV_YIELD: f64 = 988.0;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("expected {expected} intervals for a full year from {start}, found {found}")]
    IntervalCount {
        start: NaiveDateTime,
        expected: usize,
        found: usize,
    },
    #[error("invalid series: {0}")]
    Invalid(String),
    #[error("total energy is zero")]
    ZeroEnergy,
    #[error("unknown building type {0:?}")]
    UnknownBuildingType(String),
}

/// Energy per fixed-length interval in kWh, timestamped by interval start in
/// naive local time.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    start: NaiveDateTime,
    step_minutes: u32,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: NaiveDateTime, step_minutes: u32, values: Vec<f64>) -> Result<Self, ProfileError> {
        if step_minutes == 0 {
            return Err(ProfileError::Invalid("step must be positive".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(ProfileError::Invalid(format!(
                "value {} at interval {i} is not a nonnegative number",
                values[i]
            )));
        }
        Ok(TimeSeries {
            start,
            step_minutes,
            values,
        })
    }

    /// A 15-minute series starting at midnight on Jan 1 of the synthetic year.
    pub fn quarter_hourly(values: Vec<f64>) -> Result<Self, ProfileError> {
        Self::new(year_start(SYNTHETIC_YEAR), STEP_MINUTES, values)
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn step_minutes(&self) -> u32 {
        self.step_minutes
    }

    /// Interval length in hours.
    pub fn step_hours(&self) -> f64 {
        f64::from(self.step_minutes) / 60.0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> NaiveDateTime {
        self.start + Duration::minutes(i64::from(self.step_minutes) * i as i64)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Same calendar, every value multiplied by `factor` (must be ≥ 0).
    pub fn scaled(&self, factor: f64) -> Result<Self, ProfileError> {
        Self::new(
            self.start,
            self.step_minutes,
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    /// True when both series share start and step and have equal length.
    pub fn aligned_with(&self, other: &TimeSeries) -> bool {
        self.start == other.start && self.step_minutes == other.step_minutes && self.len() == other.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuildingType {
    School,
    SchoolWithSportsHall,
    SchoolWithDaycare,
    SchoolSportsDaycare,
    SportsHall,
    Administration,
    NursingHome,
    Museum,
    ConferenceHall,
}

impl BuildingType {
    pub const ALL: [BuildingType; 9] = [
        BuildingType::School,
        BuildingType::SchoolWithSportsHall,
        BuildingType::SchoolWithDaycare,
        BuildingType::SchoolSportsDaycare,
        BuildingType::SportsHall,
        BuildingType::Administration,
        BuildingType::NursingHome,
        BuildingType::Museum,
        BuildingType::ConferenceHall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuildingType::School => "school",
            BuildingType::SchoolWithSportsHall => "school_with_sports_hall",
            BuildingType::SchoolWithDaycare => "school_with_daycare",
            BuildingType::SchoolSportsDaycare => "school_sports_daycare",
            BuildingType::SportsHall => "sports_hall",
            BuildingType::Administration => "administration",
            BuildingType::NursingHome => "nursing_home",
            BuildingType::Museum => "museum",
            BuildingType::ConferenceHall => "conference_hall",
        }
    }
}

impl fmt::Display for BuildingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuildingType {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BuildingType::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| ProfileError::UnknownBuildingType(s.to_string()))
    }
}

/// A property's annual load together with the features used as regression
/// predictors.
#[derive(Clone, Debug)]
pub struct BuildingProfile {
    pub id: String,
    pub building_type: BuildingType,
    pub load: TimeSeries,
    pub annual_consumption_mwh: f64,
    pub summer_share: f64,
    pub daytime_share: f64,
}

impl BuildingProfile {
    pub fn new(id: impl Into<String>, building_type: BuildingType, load: TimeSeries) -> Result<Self, ProfileError> {
        let annual_consumption_mwh = load.total() / 1000.0;
        if annual_consumption_mwh <= 0.0 {
            return Err(ProfileError::ZeroEnergy);
        }
        Ok(BuildingProfile {
            id: id.into(),
            building_type,
            summer_share: summer_share(&load)?,
            daytime_share: daytime_share(&load)?,
            annual_consumption_mwh,
            load,
        })
    }
}

pub fn year_start(year: i32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(year, 1, 1)
        .expect("valid year")
        .and_hms_opt(0, 0, 0)
        .expect("midnight")
}

/// Number of 15-minute intervals in a calendar year.
pub fn intervals_in_year(year: i32) -> usize {
    let days = if NaiveDate::from_ymd_opt(year, 2, 29).is_some() { 366 } else { 365 };
    days * 96
}

/// Parses the profile CSV (`timestamp,energy_kwh`). Timestamps must be
/// consecutive at a constant step; the step is taken from the first two rows.
pub fn parse_series<R: Read>(reader: R) -> Result<TimeSeries, ProfileError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| ProfileError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.len() != 2 || &headers[0] != "timestamp" || &headers[1] != "energy_kwh" {
        return Err(ProfileError::Parse {
            line: 1,
            message: "header must be `timestamp,energy_kwh`".into(),
        });
    }
    let mut stamps: Vec<NaiveDateTime> = Vec::new();
    let mut values = Vec::new();
    for (k, record) in csv.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| ProfileError::Parse {
            line,
            message: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(ProfileError::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let stamp = NaiveDateTime::parse_from_str(record[0].trim(), TIMESTAMP_FORMAT).map_err(|e| {
            ProfileError::Parse {
                line,
                message: format!("bad timestamp {:?}: {e}", &record[0]),
            }
        })?;
        let value: f64 = record[1].trim().parse().map_err(|_| ProfileError::Parse {
            line,
            message: format!("bad energy value {:?}", &record[1]),
        })?;
        if !value.is_finite() || value < 0.0 {
            return Err(ProfileError::Parse {
                line,
                message: format!("energy must be nonnegative, found {value}"),
            });
        }
        if stamps.len() >= 2 {
            let step = stamps[1] - stamps[0];
            if stamp - stamps[stamps.len() - 1] != step {
                return Err(ProfileError::Parse {
                    line,
                    message: format!("timestamp {stamp} breaks the {}-minute step", step.num_minutes()),
                });
            }
        } else if stamps.len() == 1 && stamp <= stamps[0] {
            return Err(ProfileError::Parse {
                line,
                message: "timestamps must increase".into(),
            });
        }
        stamps.push(stamp);
        values.push(value);
    }
    let Some(&start) = stamps.first() else {
        return Err(ProfileError::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    };
    let step = if stamps.len() >= 2 {
        (stamps[1] - stamps[0]).num_minutes()
    } else {
        i64::from(STEP_MINUTES)
    };
    let step = u32::try_from(step).map_err(|_| ProfileError::Parse {
        line: 3,
        message: "invalid step".into(),
    })?;
    TimeSeries::new(start, step, values)
}

pub fn read_series(path: &Path) -> Result<TimeSeries, ProfileError> {
    let file = File::open(path).map_err(|source| ProfileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_series(BufReader::new(file))
}

/// Writes the profile CSV. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_series<W: Write>(series: &TimeSeries, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "timestamp,energy_kwh")?;
    for (i, v) in series.values.iter().enumerate() {
        writeln!(out, "{},{}", series.timestamp(i).format(TIMESTAMP_FORMAT), v)?;
    }
    out.flush()
}

pub fn save_series(series: &TimeSeries, path: &Path) -> Result<(), ProfileError> {
    let io_err = |source| ProfileError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_series(series, file).map_err(io_err)
}

/// Reads a full-year 15-minute load file and derives the profile features.
pub fn load_profile(path: &Path, id: &str, building_type: BuildingType) -> Result<BuildingProfile, ProfileError> {
    let load = read_series(path)?;
    check_full_year(&load)?;
    BuildingProfile::new(id, building_type, load)
}

/// Requires a 15-minute series covering exactly one calendar year from Jan 1.
pub fn check_full_year(series: &TimeSeries) -> Result<(), ProfileError> {
    let start = series.start();
    if start.ordinal() != 1 || start.time() != chrono::NaiveTime::MIN || series.step_minutes() != STEP_MINUTES {
        return Err(ProfileError::Invalid(format!(
            "a full-year profile must start at Jan 1 00:00 with a {STEP_MINUTES}-minute step"
        )));
    }
    let expected = intervals_in_year(start.year());
    if series.len() != expected {
        return Err(ProfileError::IntervalCount {
            start,
            expected,
            found: series.len(),
        });
    }
    Ok(())
}

/// Energy in `[Apr 1, Oct 1)` and outside it; the two parts add up to the
/// series total.
pub fn season_split(load: &TimeSeries) -> (f64, f64) {
    let mut summer = 0.0;
    let mut winter = 0.0;
    for (i, v) in load.values().iter().enumerate() {
        let month = load.timestamp(i).month();
        if (4..=9).contains(&month) {
            summer += v;
        } else {
            winter += v;
        }
    }
    (summer, winter)
}

/// Fraction of energy in intervals starting between Apr 1 and Oct 1.
pub fn summer_share(load: &TimeSeries) -> Result<f64, ProfileError> {
    let (summer, winter) = season_split(load);
    share(summer, summer + winter)
}

/// Fraction of energy in intervals starting in `[08:00, 20:00)`.
pub fn daytime_share(load: &TimeSeries) -> Result<f64, ProfileError> {
    let mut day = 0.0;
    let mut night = 0.0;
    for (i, v) in load.values().iter().enumerate() {
        let hour = load.timestamp(i).hour();
        if (8..20).contains(&hour) {
            day += v;
        } else {
            night += v;
        }
    }
    share(day, day + night)
}

fn share(part: f64, total: f64) -> Result<f64, ProfileError> {
    if total <= 0.0 {
        return Err(ProfileError::ZeroEnergy);
    }
    Ok(part / total)
}

/// Shape parameters of the synthetic load generator.
struct LoadShape {
    /// Share of the occupied-hours level drawn around the clock.
    base: f64,
    /// Occupied hours on weekdays and weekends, `[from, to)`.
    weekday_hours: (f64, f64),
    weekend_hours: Option<(f64, f64)>,
    /// Relative amplitude of the winter peak.
    winter_amp: f64,
    /// Occupancy multiplier during the summer break.
    summer_break: f64,
    /// Extra evening block (sports use).
    evening: Option<(f64, f64, f64)>,
}

fn shape_for(kind: BuildingType) -> LoadShape {
    use BuildingType::*;
    let school = LoadShape {
        base: 0.25,
        weekday_hours: (7.0, 16.0),
        weekend_hours: None,
        winter_amp: 0.30,
        summer_break: 0.35,
        evening: None,
    };
    match kind {
        School => school,
        SchoolWithSportsHall => LoadShape {
            evening: Some((17.0, 22.0, 0.5)),
            ..school
        },
        SchoolWithDaycare => LoadShape {
            weekday_hours: (6.5, 17.0),
            summer_break: 0.5,
            ..school
        },
        SchoolSportsDaycare => LoadShape {
            weekday_hours: (6.5, 17.0),
            summer_break: 0.5,
            evening: Some((17.0, 22.0, 0.5)),
            ..school
        },
        SportsHall => LoadShape {
            base: 0.2,
            weekday_hours: (15.0, 22.0),
            weekend_hours: Some((9.0, 18.0)),
            winter_amp: 0.25,
            summer_break: 0.6,
            evening: None,
        },
        Administration => LoadShape {
            base: 0.3,
            weekday_hours: (7.0, 18.0),
            weekend_hours: None,
            winter_amp: 0.2,
            summer_break: 0.85,
            evening: None,
        },
        NursingHome => LoadShape {
            base: 0.6,
            weekday_hours: (6.0, 21.0),
            weekend_hours: Some((6.0, 21.0)),
            winter_amp: 0.12,
            summer_break: 1.0,
            evening: None,
        },
        Museum => LoadShape {
            base: 0.35,
            weekday_hours: (10.0, 18.0),
            weekend_hours: Some((10.0, 18.0)),
            winter_amp: 0.15,
            summer_break: 1.0,
            evening: None,
        },
        ConferenceHall => LoadShape {
            base: 0.2,
            weekday_hours: (8.0, 22.0),
            weekend_hours: Some((10.0, 20.0)),
            winter_amp: 0.2,
            summer_break: 0.9,
            evening: None,
        },
    }
}

fn in_window(hour: f64, window: (f64, f64)) -> bool {
    hour >= window.0 && hour < window.1
}

/// Synthetic full-year load for the 2017 calendar. Deterministic per seed;
/// the annual total is exactly `annual_mwh` (summed in series order).
pub fn generate_synthetic(kind: BuildingType, annual_mwh: f64, seed: u64) -> Result<BuildingProfile, ProfileError> {
    if !(annual_mwh > 0.0 && annual_mwh.is_finite()) {
        return Err(ProfileError::Invalid(format!("annual consumption must be positive, got {annual_mwh}")));
    }
    let shape = shape_for(kind);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = year_start(SYNTHETIC_YEAR);
    let n = intervals_in_year(SYNTHETIC_YEAR);
    let days = n / 96;
    // Per-day activity level; conference halls are only busy on event days.
    let day_level: Vec<f64> = (0..days)
        .map(|_| {
            let level = rng.gen_range(0.85..1.15);
            if kind == BuildingType::ConferenceHall && rng.gen_bool(0.55) {
                0.15
            } else {
                level
            }
        })
        .collect();
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let ts = start + Duration::minutes(15 * i as i64);
        let doy = f64::from(ts.ordinal0());
        let hour = f64::from(ts.hour()) + f64::from(ts.minute()) / 60.0 + 7.5 / 60.0;
        let weekend = matches!(ts.weekday(), Weekday::Sat | Weekday::Sun);
        let museum_closed = kind == BuildingType::Museum && ts.weekday() == Weekday::Mon;
        let summer_break = ts.month() == 8 || (ts.month() == 7 && ts.day() >= 27) || (ts.month() == 9 && ts.day() <= 8);
        let seasonal = 1.0 + shape.winter_amp * (2.0 * PI * (doy - 15.0) / 365.0).cos();
        let window = if weekend { shape.weekend_hours } else { Some(shape.weekday_hours) };
        let mut occupied = match window {
            Some(w) if in_window(hour, w) && !museum_closed => 1.0,
            _ => 0.0,
        };
        if let Some((from, to, level)) = shape.evening {
            if in_window(hour, (from, to)) {
                occupied += level;
            }
        }
        if summer_break {
            occupied *= shape.summer_break;
        }
        let noise = rng.gen_range(0.9..1.1);
        let level = (shape.base + (1.0 - shape.base) * occupied * day_level[i / 96]) * seasonal * noise;
        values.push(level);
    }
    let target = annual_mwh * 1000.0;
    let raw: f64 = values.iter().sum();
    let factor = target / raw;
    for v in values.iter_mut() {
        *v *= factor;
    }
    // The rest sums to within a few ulps of `target`, so the subtraction is
    // exact and adding the last value back reproduces `target` exactly.
    let rest: f64 = values[..n - 1].iter().sum();
    values[n - 1] = target - rest;
    let load = TimeSeries::new(start, STEP_MINUTES, values)?;
    BuildingProfile::new(format!("{}_{seed}", kind.name()), kind, load)
}

/// Synthetic normalised PV generation (kWh per interval per kW_p) for the
/// 2017 calendar at a mid-European site, scaled to [`SYNTHETIC_PV_YIELD`].
pub fn generate_pv_profile(seed: u64) -> TimeSeries {
    let latitude = 48.86_f64.to_radians();
    // Solar noon in local standard time for a site at 8.2 °E.
    let solar_noon = 12.0 + (15.0 - 8.2) / 15.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = year_start(SYNTHETIC_YEAR);
    let n = intervals_in_year(SYNTHETIC_YEAR);
    let mut values = Vec::with_capacity(n);
    let mut clearness = 0.0;
    for i in 0..n {
        let ts = start + Duration::minutes(15 * i as i64);
        if i % 96 == 0 {
            clearness = if rng.gen_bool(0.45) {
                rng.gen_range(0.8..1.0)
            } else {
                rng.gen_range(0.1..0.7)
            };
        }
        let doy = f64::from(ts.ordinal());
        let decl = 23.44_f64.to_radians() * (2.0 * PI * (284.0 + doy) / 365.0).sin();
        let hour = f64::from(ts.hour()) + f64::from(ts.minute()) / 60.0 + 7.5 / 60.0;
        let hour_angle = (15.0 * (hour - solar_noon)).to_radians();
        let sin_elev = latitude.sin() * decl.sin() + latitude.cos() * decl.cos() * hour_angle.cos();
        let flicker = rng.gen_range(0.9..1.0);
        values.push(sin_elev.max(0.0).powf(1.3) * clearness * flicker);
    }
    // Scale to the target yield, keeping average power below 85 % of nominal.
    let raw: f64 = values.iter().sum();
    let mut factor = SYNTHETIC_PV_YIELD / raw;
    let cap = 0.85 * 0.25;
    for _ in 0..20 {
        let total: f64 = values.iter().map(|v| (v * factor).min(cap)).sum();
        if (total - SYNTHETIC_PV_YIELD).abs() < 1e-9 * SYNTHETIC_PV_YIELD {
            break;
        }
        factor *= SYNTHETIC_PV_YIELD / total;
    }
    let values = values.iter().map(|v| (v * factor).min(cap)).collect();
    TimeSeries::new(start, STEP_MINUTES, values).expect("generated values are nonnegative")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_load_features() {
        let load = TimeSeries::quarter_hourly(vec![0.5; 35_040]).unwrap();
        let p = BuildingProfile::new("c", BuildingType::School, load).unwrap();
        assert!((p.annual_consumption_mwh - 17.52).abs() < 1e-9);
        assert!((p.summer_share - 183.0 / 365.0).abs() < 1e-12);
        assert!((p.daytime_share - 0.5).abs() < 1e-12);
    }

    #[test]
    fn windowed_loads() {
        let start = year_start(2017);
        let july: Vec<f64> = (0..35_040)
            .map(|i| if (start + Duration::minutes(15 * i)).month() == 7 { 1.0 } else { 0.0 })
            .collect();
        let july = TimeSeries::quarter_hourly(july).unwrap();
        assert_eq!(summer_share(&july).unwrap(), 1.0);

        let hour_only = |h: usize| {
            TimeSeries::quarter_hourly((0..35_040).map(|i| if (i % 96) / 4 == h { 1.0 } else { 0.0 }).collect())
                .unwrap()
        };
        assert_eq!(daytime_share(&hour_only(9)).unwrap(), 1.0);
        assert_eq!(daytime_share(&hour_only(20)).unwrap(), 0.0);
        assert!(matches!(
            daytime_share(&TimeSeries::quarter_hourly(vec![0.0; 96]).unwrap()),
            Err(ProfileError::ZeroEnergy)
        ));
    }

    #[test]
    fn negative_value_names_the_line() {
        let text = "timestamp,energy_kwh\n2017-01-01T00:00,1\n2017-01-01T00:15,-1\n";
        match parse_series(text.as_bytes()) {
            Err(ProfileError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gap_in_timestamps_is_rejected() {
        let text = "timestamp,energy_kwh\n2017-01-01T00:00,1\n2017-01-01T00:15,1\n2017-01-01T00:45,1\n";
        assert!(matches!(parse_series(text.as_bytes()), Err(ProfileError::Parse { line: 4, .. })));
    }

    #[test]
    fn synthetic_school_is_exact_and_winter_heavy() {
        let p = generate_synthetic(BuildingType::School, 100.0, 42).unwrap();
        assert_eq!(p.load.total(), 100_000.0);
        assert_eq!(p.annual_consumption_mwh, 100.0);
        assert!(p.summer_share < 0.5, "summer share {}", p.summer_share);
        let again = generate_synthetic(BuildingType::School, 100.0, 42).unwrap();
        assert_eq!(p.load, again.load);
    }

    #[test]
    fn synthetic_pv_yield() {
        let pv = generate_pv_profile(7);
        assert!((pv.total() - SYNTHETIC_PV_YIELD).abs() < 1e-6);
        assert!(pv.values().iter().all(|v| *v <= 0.25));
        // Nothing at midnight, something at noon in June.
        assert_eq!(pv.values()[0], 0.0);
        assert!(pv.values()[170 * 96 + 48] > 0.0);
    }
}

/// Name of the property list inside a profile directory.
pub const MANIFEST_FILE: &str = "properties.csv";

/// `n` synthetic properties cycling through the building types, with annual
/// consumption drawn from 20 to 500 MWh. Property `k` uses seed `seed + k`.
pub fn synthetic_fleet(n: usize, seed: u64) -> Result<Vec<BuildingProfile>, ProfileError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let kind = BuildingType::ALL[k % BuildingType::ALL.len()];
            let annual = (rng.gen_range(20.0..500.0_f64) * 10.0).round() / 10.0;
            generate_synthetic(kind, annual, seed.wrapping_add(k as u64))
        })
        .collect()
}

/// Writes each load series as `<id>.csv` plus the property list.
pub fn write_profile_dir(profiles: &[BuildingProfile], dir: &Path) -> Result<(), ProfileError> {
    let io_err = |source| ProfileError::Io {
        path: dir.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut manifest = String::from("id,building_type,file\n");
    for p in profiles {
        let file = format!("{}.csv", p.id);
        save_series(&p.load, &dir.join(&file))?;
        manifest.push_str(&format!("{},{},{}\n", p.id, p.building_type, file));
    }
    std::fs::write(dir.join(MANIFEST_FILE), manifest).map_err(io_err)
}

/// Loads every property listed in `<dir>/properties.csv` (columns `id`,
/// `building_type`, `file`; file paths relative to `dir`).
pub fn read_profile_dir(dir: &Path) -> Result<Vec<BuildingProfile>, ProfileError> {
    let path = dir.join(MANIFEST_FILE);
    let file = File::open(&path).map_err(|source| ProfileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| ProfileError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| ProfileError::Parse {
            line: 1,
            message: format!("{}: missing column {name}", path.display()),
        })
    };
    let (id_col, type_col, file_col) = (col("id")?, col("building_type")?, col("file")?);
    let mut profiles = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| ProfileError::Parse {
            line,
            message: e.to_string(),
        })?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let kind: BuildingType = field(type_col).parse().map_err(|e: ProfileError| ProfileError::Parse {
            line,
            message: format!("{}: {e}", path.display()),
        })?;
        let profile_path = dir.join(field(file_col));
        let profile = load_profile(&profile_path, field(id_col), kind).map_err(|e| match e {
            ProfileError::Io { .. } => e,
            other => ProfileError::Invalid(format!("{}: {other}", profile_path.display())),
        })?;
        profiles.push(profile);
    }
    if profiles.is_empty() {
        return Err(ProfileError::Invalid(format!("{} lists no properties", path.display())));
    }
    Ok(profiles)
}
