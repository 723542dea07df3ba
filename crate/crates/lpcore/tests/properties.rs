//! Property checks on random feasible boxed problems.

use lpcore::{solve, LinearProgram, RowSense, SolverOptions};
use proptest::prelude::*;

#[derive(Clone, Debug)]
struct Case {
    n: usize,
    c: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rows: Vec<(Vec<f64>, u8, f64)>,
    x0: Vec<f64>,
}

fn case() -> impl Strategy<Value = Case> {
    (2usize..12, 1usize..10).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec((-3.0..0.0f64, 0.5..6.0f64, 0.0..1.0f64), n),
            prop::collection::vec(
                (
                    prop::collection::vec(prop_oneof![Just(0.0), -5.0..5.0f64], n),
                    0u8..3,
                    0.0..2.0f64,
                ),
                m,
            ),
        )
            .prop_map(move |(c, boxes, raw_rows)| {
                let lo: Vec<f64> = boxes.iter().map(|b| b.0).collect();
                let hi: Vec<f64> = boxes.iter().map(|b| b.0 + b.1).collect();
                let x0: Vec<f64> = boxes.iter().map(|b| b.0 + b.1 * b.2).collect();
                let rows = raw_rows
                    .into_iter()
                    .map(|(a, sense, slack)| {
                        let act: f64 = a.iter().zip(&x0).map(|(a, v)| a * v).sum();
                        let b = match sense {
                            0 => act,
                            1 => act + slack,
                            _ => act - slack,
                        };
                        (a, sense, b)
                    })
                    .collect();
                Case {
                    n,
                    c,
                    lo,
                    hi,
                    rows,
                    x0,
                }
            })
    })
}

fn build(case: &Case, obj_factor: f64) -> LinearProgram {
    let mut lp = LinearProgram::new(case.n);
    for j in 0..case.n {
        lp.set_objective(j, case.c[j] * obj_factor).unwrap();
        lp.set_bounds(j, case.lo[j], case.hi[j]).unwrap();
    }
    for (a, sense, b) in &case.rows {
        let coeffs: Vec<(usize, f64)> = a
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect();
        let sense = match sense {
            0 => RowSense::Eq,
            1 => RowSense::Le,
            _ => RowSense::Ge,
        };
        lp.add_row(&coeffs, sense, *b).unwrap();
    }
    lp
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn optimum_is_feasible_and_no_worse_than_seed_point(case in case()) {
        let lp = build(&case, 1.0);
        let sol = solve(&lp, &SolverOptions::default()).unwrap();
        prop_assert!(sol.is_optimal());
        prop_assert!(lp.max_violation(&sol.x) <= 1e-7);
        let seed = lp.objective_value(&case.x0);
        prop_assert!(sol.objective_value <= seed + 1e-8 * (1.0 + seed.abs()));
    }

    #[test]
    fn dual_bound_brackets_the_optimum(case in case()) {
        let lp = build(&case, 1.0);
        let sol = solve(&lp, &SolverOptions::default()).unwrap();
        prop_assert!(sol.is_optimal());
        let bound = lp.dual_bound(&sol.row_duals, 1e-9);
        let tol = 1e-7 * (1.0 + sol.objective_value.abs());
        prop_assert!(bound <= sol.objective_value + tol, "bound {} obj {}", bound, sol.objective_value);
        prop_assert!(bound >= sol.objective_value - tol, "bound {} obj {}", bound, sol.objective_value);
    }

    #[test]
    fn objective_scales_linearly(case in case(), factor in 1e-3..1e3f64) {
        let base = solve(&build(&case, 1.0), &SolverOptions::default()).unwrap();
        let scaled = solve(&build(&case, factor), &SolverOptions::default()).unwrap();
        prop_assert!(base.is_optimal() && scaled.is_optimal());
        let expect = base.objective_value * factor;
        prop_assert!((scaled.objective_value - expect).abs() <= 1e-7 * (1.0 + expect.abs()));
    }

    #[test]
    fn scaling_does_not_change_the_optimum(case in case()) {
        let lp = build(&case, 1.0);
        let with = solve(&lp, &SolverOptions::default()).unwrap();
        let without = solve(&lp, &SolverOptions { scaling: false, ..SolverOptions::default() }).unwrap();
        prop_assert!(with.is_optimal() && without.is_optimal());
        prop_assert!((with.objective_value - without.objective_value).abs() <= 1e-7 * (1.0 + with.objective_value.abs()));
    }
}
