mod common;

use common::{fixture_params, random_days, series};
use lpcore::SolverOptions;
use proptest::prelude::*;
use pvbatt::dispatch::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn lossless_two_step_shift() {
    let p = fixture_params(1.0, 1.0);
    let d = dispatch_cost_min(&series(vec![1.0, 1.0]), &series(vec![2.0, 0.0]), &p).unwrap();
    assert_eq!(d.charge, vec![1.0, 0.0]);
    assert_eq!(d.discharge, vec![0.0, 1.0]);
    assert_eq!(d.supply, vec![0.0, 0.0]);
    assert_eq!(d.feed_in, vec![0.0, 0.0]);
    assert_eq!(d.cost_eur, 0.0);
}

#[test]
fn lossy_two_step_shift() {
    let p = fixture_params(1.0, 0.94);
    let d = dispatch_cost_min(&series(vec![1.0, 1.0]), &series(vec![2.0, 0.0]), &p).unwrap();
    assert!(close(d.charge[0], 1.0, 1e-15) && d.charge[1] == 0.0);
    assert!(close(d.soc[0], 0.94, 1e-15));
    assert!(close(d.discharge[1], 0.8836, 1e-15));
    assert!(close(d.supply[1], 0.1164, 1e-14));
    assert_eq!(d.supply[0], 0.0);
}

/// Cheapest schedule among all charge/discharge pairs on a uniform grid,
/// with supply and feed-in taken from the net demand.
fn grid_search_cost(load: &[f64], pv: &[f64], p: &DispatchParams, steps: usize) -> f64 {
    let dt = 0.25;
    let ch_max = (p.r_ch_max * p.capacity_kwh * dt).min(p.capacity_kwh / p.eta_ch);
    let dch_max = p.r_dch_max * p.capacity_kwh * dt;
    let level = |k: usize, max: f64| max * k as f64 / steps as f64;
    let mut best = f64::INFINITY;
    for a in 0..=steps {
        for b in 0..=steps {
            let (ch0, dch0) = (level(a, ch_max), level(b, dch_max));
            let soc0 = p.eta_ch * ch0 - dch0 / p.eta_dch;
            if soc0 < -1e-12 || soc0 > p.capacity_kwh + 1e-12 {
                continue;
            }
            for c in 0..=steps {
                for e in 0..=steps {
                    let (ch1, dch1) = (level(c, ch_max), level(e, dch_max));
                    let soc1 = soc0 + p.eta_ch * ch1 - dch1 / p.eta_dch;
                    if soc1 < -1e-12 || soc1 > p.capacity_kwh + 1e-12 {
                        continue;
                    }
                    let mut cost = 0.0;
                    for (t, (ch, dch)) in [(ch0, dch0), (ch1, dch1)].into_iter().enumerate() {
                        let net = load[t] - pv[t] + ch - dch;
                        cost += p.p_supply * net.max(0.0) - p.feed_in_tariff * (-net).max(0.0);
                    }
                    best = best.min(cost / 1000.0);
                }
            }
        }
    }
    best
}

#[test]
fn greedy_beats_every_grid_schedule_on_two_steps() {
    let mut cases = vec![(vec![1.0, 1.0], vec![2.0, 0.0])];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..6 {
        use rand::Rng;
        cases.push((
            vec![rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)],
            vec![rng.gen_range(0.0..3.0), rng.gen_range(0.0..1.0)],
        ));
    }
    let p = fixture_params(1.0, 0.94);
    for (load, pv) in cases {
        let d = dispatch_cost_min(&series(load.clone()), &series(pv.clone()), &p).unwrap();
        d.check(&load, &pv, &p, 1e-12).unwrap();
        let best = grid_search_cost(&load, &pv, &p, 40);
        // The greedy schedule is at least as cheap as any grid point and the
        // grid gets within its resolution of it.
        assert!(d.cost_eur <= best + 1e-12, "{} > {best}", d.cost_eur);
        assert!(best - d.cost_eur <= 2.0 * p.p_supply / 1000.0 / 40.0);
    }
}

#[test]
fn no_storage_is_netting() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (load, pv, mut p) = random_days(&mut rng, 1);
    p.capacity_kwh = 0.0;
    for d in [
        dispatch_cost_min(&load, &pv, &p).unwrap(),
        dispatch_grid_friendly(&load, &pv, &p).unwrap(),
    ] {
        for t in 0..load.len() {
            let (l, g) = (load.values()[t], pv.values()[t]);
            assert_eq!(d.charge[t], 0.0);
            assert_eq!(d.discharge[t], 0.0);
            assert!(close(d.supply[t], (l - g).max(0.0), 1e-15));
            assert!(close(d.feed_in[t], (g - l).max(0.0), 1e-15));
        }
    }
}

#[test]
fn grid_friendly_fixtures() {
    let p = fixture_params(1.0, 1.0);
    let flat = series(vec![0.7; 8]);
    let d = dispatch_grid_friendly(&flat, &flat, &p).unwrap();
    assert!(d.feed_in.iter().all(|f| *f == 0.0));
    assert_eq!(d.peak_feed_in_kw, 0.0);

    let load = series(vec![1.0, 1.0]);
    let pv = series(vec![2.0, 0.0]);
    let g = dispatch_grid_friendly(&load, &pv, &p).unwrap();
    let c = dispatch_cost_min(&load, &pv, &p).unwrap();
    assert_eq!(g.peak_feed_in_kw, 0.0);
    for t in 0..2 {
        assert!(close(g.charge[t], c.charge[t], 1e-12));
        assert!(close(g.discharge[t], c.discharge[t], 1e-12));
        assert!(close(g.supply[t], c.supply[t], 1e-12));
    }
}

#[test]
fn grid_friendly_on_a_sunny_day_with_half_size_battery() {
    let n = 96;
    let load: Vec<f64> = (0..n).map(|t| if (28..68).contains(&t) { 1.5 } else { 0.6 }).collect();
    let pv: Vec<f64> = (0..n)
        .map(|t| {
            let h = t as f64 / 4.0 + 0.125;
            4.0 * ((h - 6.0) / 14.0 * std::f64::consts::PI).sin().max(0.0)
        })
        .collect();
    let surplus: f64 = load.iter().zip(&pv).map(|(l, g)| (g - l).max(0.0)).sum();
    let mut p = SystemConfig::default().resolve(1.0);
    p.pv_peak_kw = 16.0;
    p.feed_in_tariff = 101.8;
    p.capacity_kwh = 0.5 * surplus;
    let (load, pv) = (series(load), series(pv));
    let c = dispatch_cost_min(&load, &pv, &p).unwrap();
    let g = dispatch_grid_friendly(&load, &pv, &p).unwrap();
    let w = solve_dispatch_lp(&load, &pv, &p, Objective::Weighted, &SolverOptions::default()).unwrap();
    assert!(g.peak_feed_in_kw < c.peak_feed_in_kw - 1e-6);
    assert!(close(g.cost_eur, c.cost_eur, 1e-6 * c.cost_eur.abs()));
    // The plain weighted optimum trades at most its own objective gain.
    let omega = p.cost_normalizer(load.total());
    let weighted = |d: &DispatchResult| p.lambda * d.cost_eur / omega + (1.0 - p.lambda) * d.peak_feed_in_kw / p.pv_peak_kw;
    assert!(weighted(&w) <= weighted(&g) + 1e-9);
    assert!(w.cost_eur >= c.cost_eur - 1e-9);
}

#[test]
fn lp_layout_counts() {
    let p = fixture_params(1.0, 0.94);
    let (load, pv) = (series(vec![1.0, 1.0]), series(vec![2.0, 0.0]));
    let cost = build_dispatch_lp(&load, &pv, &p, Objective::Cost).unwrap();
    assert_eq!(cost.lp.num_vars(), 10);
    assert_eq!(cost.lp.num_rows(), 4);
    let weighted = build_dispatch_lp(&load, &pv, &p, Objective::Weighted).unwrap();
    assert_eq!(weighted.lp.num_vars(), 11);
    assert_eq!(weighted.lp.num_rows(), 6);
    assert_eq!(weighted.peak(), Some(10));
}

#[test]
fn greedy_matches_cost_lp_on_random_days() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let (load, pv, p) = random_days(&mut rng, 1);
        let greedy = dispatch_cost_min(&load, &pv, &p).unwrap();
        let lp = solve_dispatch_lp(&load, &pv, &p, Objective::Cost, &SolverOptions::default()).unwrap();
        assert!(
            (greedy.cost_eur - lp.cost_eur).abs() <= 1e-6 * (1.0 + lp.cost_eur.abs()),
            "case {case}: greedy {} vs LP {}",
            greedy.cost_eur,
            lp.cost_eur
        );
        greedy.check(load.values(), pv.values(), &p, 1e-9).unwrap();
        lp.check(load.values(), pv.values(), &p, 1e-9).unwrap();
    }
}

#[test]
fn initial_charge_and_cyclic_runs_use_the_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (load, pv, mut p) = random_days(&mut rng, 2);
    p.capacity_kwh = 30.0;
    p.soc_initial_kwh = 12.0;
    let d = dispatch_cost_min(&load, &pv, &p).unwrap();
    d.check(load.values(), pv.values(), &p, 1e-9).unwrap();
    assert_eq!(d.soc_start, 12.0);
    p.cyclic_soc = true;
    let d = dispatch_cost_min(&load, &pv, &p).unwrap();
    d.check(load.values(), pv.values(), &p, 1e-9).unwrap();
    assert!(close(*d.soc.last().unwrap(), d.soc_start, 1e-7));
}

#[test]
fn input_errors() {
    let p = fixture_params(1.0, 0.94);
    let err = dispatch_cost_min(&series(vec![1.0, 1.0]), &series(vec![1.0]), &p).unwrap_err();
    assert!(matches!(err, DispatchError::Misaligned { .. }), "{err}");
    let (load, pv) = (series(vec![1.0, 1.0]), series(vec![2.0, 0.0]));
    // Storing is a loss at this price, which the greedy rule cannot see.
    let mut lossy = p.clone();
    lossy.p_supply = 110.0;
    let err = dispatch_cost_min(&load, &pv, &lossy).unwrap_err();
    assert!(matches!(err, DispatchError::PriceCondition { .. }), "{err}");
    let lp = solve_dispatch_lp(&load, &pv, &lossy, Objective::Cost, &SolverOptions::default()).unwrap();
    assert_eq!(lp.charge, vec![0.0, 0.0]);
    // Buying below the feed-in tariff has no netted LP form.
    let mut cheap = p.clone();
    cheap.p_supply = 90.0;
    let err = solve_dispatch_lp(&load, &pv, &cheap, Objective::Cost, &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, DispatchError::InvalidParams(_)), "{err}");
}

#[test]
fn fast_path_agrees_with_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..15 {
        let (load, pv, p) = random_days(&mut rng, 1 + case % 4);
        let solve = |solver| {
            dispatch_grid_friendly_with(
                &load,
                &pv,
                &p,
                &GridOptions {
                    solver,
                    ..GridOptions::default()
                },
            )
            .unwrap()
        };
        let fast = solve(GridSolver::FastPath);
        let lp = solve(GridSolver::Lp);
        fast.check(load.values(), pv.values(), &p, 1e-9).unwrap();
        let scale = lp.peak_feed_in_kw.max(1e-3 * p.pv_peak_kw);
        assert!(
            (fast.peak_feed_in_kw - lp.peak_feed_in_kw).abs() <= 1e-5 * scale,
            "case {case}: fast {} {} lp {} {} cost-min {} C {}",
            fast.peak_feed_in_kw,
            fast.cost_eur,
            lp.peak_feed_in_kw,
            lp.cost_eur,
            dispatch_cost_min(&load, &pv, &p).unwrap().peak_feed_in_kw,
            p.capacity_kwh
        );
        let omega = p.cost_normalizer(load.total());
        assert!((fast.cost_eur - lp.cost_eur).abs() <= 1e-8 * omega, "case {case}");
    }
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64, f64)> {
    (8usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0..3.0f64, n),
            prop::collection::vec(0.0..4.0f64, n),
            0.0..10.0f64,
            0.0..10.0f64,
        )
    })
}

fn params_for(c: f64) -> DispatchParams {
    let mut p = SystemConfig::default().resolve(1.0);
    p.capacity_kwh = c;
    p.pv_peak_kw = 16.0;
    p.feed_in_tariff = 101.8;
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_schedules_balance((load, pv, c, _) in instance()) {
        let p = params_for(c);
        let d = dispatch_cost_min(&series(load.clone()), &series(pv.clone()), &p).unwrap();
        prop_assert!(d.check(&load, &pv, &p, 1e-9).is_ok());
        prop_assert!(d.supply.iter().zip(&d.feed_in).all(|(s, f)| *s == 0.0 || *f == 0.0));
    }

    #[test]
    fn more_storage_never_costs_more_or_self_consumes_less((load, pv, c1, c2) in instance()) {
        let (lo, hi) = (c1.min(c2), c1.max(c2));
        let (l, g) = (series(load.clone()), series(pv));
        let small = dispatch_cost_min(&l, &g, &params_for(lo)).unwrap();
        let big = dispatch_cost_min(&l, &g, &params_for(hi)).unwrap();
        prop_assert!(big.cost_eur <= small.cost_eur + 1e-12);
        let sc = |d: &DispatchResult| pvbatt::metrics::self_consumed(d, &load);
        prop_assert!(sc(&big) >= sc(&small) - 1e-12);
    }

    #[test]
    fn grid_friendly_keeps_cost_and_lowers_peak((load, pv, c, _) in instance()) {
        let p = params_for(c);
        let (l, g) = (series(load.clone()), series(pv.clone()));
        let cost = dispatch_cost_min(&l, &g, &p).unwrap();
        let grid = dispatch_grid_friendly(&l, &g, &p).unwrap();
        prop_assert!(grid.check(&load, &pv, &p, 1e-9).is_ok());
        prop_assert!(grid.peak_feed_in_kw <= cost.peak_feed_in_kw + 1e-9);
        let omega = p.cost_normalizer(l.total());
        prop_assert!((grid.cost_eur - cost.cost_eur).abs() <= 1e-6 * omega);
    }
}
