#![allow(dead_code)]

use pvbatt::dispatch::{DispatchParams, SystemConfig};
use pvbatt::profiles::TimeSeries;
use rand::Rng;

/// Random whole-day load and PV traces (kWh per 15 minutes) with a midday PV
/// hump, and case-study parameters around a random battery size.
pub fn random_days<R: Rng>(rng: &mut R, days: usize) -> (TimeSeries, TimeSeries, DispatchParams) {
    let n = 96 * days;
    let pv_kw = rng.gen_range(5.0..60.0);
    let base = rng.gen_range(0.3..2.0);
    let mut load = Vec::with_capacity(n);
    let mut pv = Vec::with_capacity(n);
    let mut clear = 1.0;
    for t in 0..n {
        if t % 96 == 0 {
            clear = rng.gen_range(0.2..1.0);
        }
        let hour = (t % 96) as f64 / 4.0 + 0.125;
        let busy = if (7.0..17.0).contains(&hour) { 3.0 } else { 1.0 };
        load.push(base * busy * rng.gen_range(0.6..1.4));
        let sun = ((hour - 6.0) / 14.0 * std::f64::consts::PI).sin().max(0.0);
        pv.push(0.25 * pv_kw * sun * clear * rng.gen_range(0.85..1.0));
    }
    let cfg = SystemConfig::default();
    let mut params = cfg.resolve(1.0);
    params.pv_peak_kw = pv_kw;
    params.feed_in_tariff = cfg.tariffs.rate_for(pv_kw);
    params.capacity_kwh = rng.gen_range(0.0..80.0);
    (series(load), series(pv), params)
}

pub fn series(values: Vec<f64>) -> TimeSeries {
    TimeSeries::quarter_hourly(values).unwrap()
}

/// Parameters for small hand-checkable fixtures: capacity `c`, equal
/// efficiencies `eta`, and power limits loose enough to move the whole
/// capacity within one 15-minute interval.
pub fn fixture_params(c: f64, eta: f64) -> DispatchParams {
    let mut p = SystemConfig::default().resolve(1.0);
    p.capacity_kwh = c;
    p.pv_peak_kw = 10.0;
    p.eta_ch = eta;
    p.eta_dch = eta;
    p.r_ch_max = 4.0;
    p.r_dch_max = 4.0;
    p
}
