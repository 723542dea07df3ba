mod common;

use common::{fixture_params, random_days, series};
use proptest::prelude::*;
use pvbatt::dispatch::*;
use pvbatt::metrics::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn everything_self_consumed_without_surplus() {
    let p = fixture_params(0.0, 0.94);
    let load = vec![2.0, 3.0, 1.0];
    let pv = vec![1.0, 3.0, 0.0];
    let d = dispatch_cost_min(&series(load.clone()), &series(pv.clone()), &p).unwrap();
    let m = compute_metrics(&d, &load, &pv, &p, 0.7).unwrap();
    assert_eq!(m.scr, 1.0);
    assert!((m.ssr - 4.0 / 6.0).abs() < 1e-15);
    assert_eq!(m.peak_feed_in_pct_of_pv, 0.0);
    assert_eq!(m.curtailment_loss_frac, 0.0);
}

#[test]
fn two_step_numerator_both_ways() {
    let p = fixture_params(1.0, 0.94);
    let (load, pv) = (vec![1.0, 1.0], vec![2.0, 0.0]);
    let d = dispatch_cost_min(&series(load.clone()), &series(pv.clone()), &p).unwrap();
    let direct = self_consumed(&d, &load);
    let expanded = self_consumed_from_losses(&d, &pv, &p);
    assert!((direct - 1.8836).abs() < 1e-14);
    assert!((expanded - 1.8836).abs() < 1e-14);
    let m = compute_metrics(&d, &load, &pv, &p, 0.7).unwrap();
    assert!((m.scr - 0.9418).abs() < 1e-14);
}

#[test]
fn curtailment_of_a_single_full_power_interval() {
    let mut p = fixture_params(0.0, 0.94);
    p.pv_peak_kw = 4.0;
    // 1 kWh in 15 minutes is 4 kW, the full plant rating.
    let (load, pv) = (vec![0.0, 0.5, 0.5], vec![1.0, 0.2, 0.0]);
    let d = dispatch_cost_min(&series(load.clone()), &series(pv.clone()), &p).unwrap();
    let loss = curtailment_losses(&d, &pv, p.pv_peak_kw, 0.7).unwrap();
    assert!((loss - 0.3 * 4.0 * 0.25 / 1.2).abs() < 1e-15);
    assert_eq!(curtailment_losses(&d, &pv, p.pv_peak_kw, 1.0).unwrap(), 0.0);
    assert!(curtailment_losses(&d, &pv, p.pv_peak_kw, 0.0).is_err());
    assert!((peak_feed_in_pct(&d, p.pv_peak_kw) - 1.0).abs() < 1e-15);
}

#[test]
fn undefined_rates() {
    let p = fixture_params(1.0, 0.94);
    let d = dispatch_cost_min(&series(vec![1.0, 1.0]), &series(vec![0.0, 0.0]), &p).unwrap();
    assert_eq!(compute_metrics(&d, &[1.0, 1.0], &[0.0, 0.0], &p, 0.7), Err(MetricsError::NoGeneration));
    let d = dispatch_cost_min(&series(vec![0.0, 0.0]), &series(vec![1.0, 0.0]), &p).unwrap();
    assert_eq!(compute_metrics(&d, &[0.0, 0.0], &[1.0, 0.0], &p, 0.7), Err(MetricsError::NoDemand));
}

#[test]
fn identity_holds_with_stored_energy_left_over() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (load, pv, mut p) = random_days(&mut rng, 2);
    p.capacity_kwh = 40.0;
    p.soc_initial_kwh = 25.0;
    let d = dispatch_cost_min(&load, &pv, &p).unwrap();
    let direct = self_consumed(&d, load.values());
    let expanded = self_consumed_from_losses(&d, pv.values(), &p);
    assert!((direct - expanded).abs() <= 1e-9 * direct.abs().max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scr_ssr_identity(seed in any::<u64>(), days in 1usize..4, grid in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (load, pv, p) = random_days(&mut rng, days);
        let d = if grid {
            dispatch_grid_friendly(&load, &pv, &p).unwrap()
        } else {
            dispatch_cost_min(&load, &pv, &p).unwrap()
        };
        let m = compute_metrics(&d, load.values(), pv.values(), &p, 0.7).unwrap();
        let lhs = m.scr * pv.total();
        let rhs = m.ssr * load.total();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()));
        let expanded = self_consumed_from_losses(&d, pv.values(), &p);
        prop_assert!((expanded - m.self_consumed_kwh).abs() <= 1e-9 * m.self_consumed_kwh.abs().max(1.0));
        prop_assert!(m.scr >= 0.0 && m.scr <= 1.0 + 1e-12);
        prop_assert!(m.ssr >= 0.0 && m.ssr <= 1.0 + 1e-12);
    }
}
