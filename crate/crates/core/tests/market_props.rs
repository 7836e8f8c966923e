use fairdiv::instance::{fractional_value, OfflineInstance};
use fairdiv::market::{check_kkt, solve_eg, DEFAULT_MAX_ITERS};
use fairdiv::Rational;
use proptest::prelude::*;

/// Values either continuous or on a coarse grid (degenerate ties).
fn value_matrix(max_n: usize, max_m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_n, 1..=max_m, any::<bool>()).prop_flat_map(|(n, m, grid)| {
        let cell = if grid {
            (0u8..=10).prop_map(|k| k as f64 / 10.0).boxed()
        } else {
            (0.0f64..1.0).boxed()
        };
        prop::collection::vec(prop::collection::vec(cell, m), n)
    })
}

fn instance(mut values: Vec<Vec<f64>>) -> OfflineInstance<f64> {
    for row in values.iter_mut() {
        if row.iter().all(|v| *v == 0.0) {
            row[0] = 0.5;
        }
    }
    OfflineInstance::with_unit_budgets(values).unwrap()
}

fn log_welfare(inst: &OfflineInstance<f64>, x: &[Vec<f64>]) -> f64 {
    (0..inst.n())
        .map(|i| fractional_value(i, &x[i], inst).ln())
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn certificate_and_envy_freeness(values in value_matrix(5, 10)) {
        let inst = instance(values);
        let sol = solve_eg(&inst, 1e-8, DEFAULT_MAX_ITERS).unwrap();
        let report = check_kkt(&sol, &inst, 1e-6).unwrap();
        prop_assert!(report.pass, "{report}");
        let money: f64 = sol.prices.iter().sum();
        prop_assert!((money - inst.n() as f64).abs() < 1e-8);
        for i in 0..inst.n() {
            prop_assert!((sol.spend(i) - 1.0).abs() < 1e-6);
            let own = sol.value_of(&inst, i, i);
            for j in 0..inst.n() {
                prop_assert!(own >= sol.value_of(&inst, i, j) - 1e-6);
            }
        }
    }

    #[test]
    fn scaling_one_agent_keeps_her_mbb_items(values in value_matrix(4, 6), agent in 0usize..4, lambda in 0.1f64..10.0) {
        let inst = instance(values.clone());
        let agent = agent % inst.n();
        let sol = solve_eg(&inst, 1e-8, DEFAULT_MAX_ITERS).unwrap();
        let mut scaled = inst.values().to_vec();
        for v in scaled[agent].iter_mut() { *v *= lambda; }
        let inst2 = OfflineInstance::with_unit_budgets(scaled).unwrap();
        let sol2 = solve_eg(&inst2, 1e-8, DEFAULT_MAX_ITERS).unwrap();
        let mbb_set = |inst: &OfflineInstance<f64>, p: &[f64]| -> Vec<bool> {
            let best = (0..inst.m()).map(|j| inst.value(agent, j) / p[j]).fold(0.0, f64::max);
            (0..inst.m()).map(|j| inst.value(agent, j) / p[j] >= best * (1.0 - 1e-7)).collect()
        };
        prop_assert_eq!(mbb_set(&inst, &sol.prices), mbb_set(&inst2, &sol2.prices));
    }

    #[test]
    fn exact_mode_matches_float(values in prop::collection::vec(prop::collection::vec(0u16..=1000, 4), 1..=4)) {
        let fl: Vec<Vec<f64>> = values.iter().map(|r| r.iter().map(|v| *v as f64 / 1000.0).collect()).collect();
        let inst = instance(fl);
        let exact_inst = OfflineInstance::with_unit_budgets(
            inst.values().iter().map(|r| r.iter().map(|v| fairdiv::scalar::rational_from_f64(*v, 1000).unwrap()).collect()).collect(),
        ).unwrap();
        let a = solve_eg(&inst, 1e-8, DEFAULT_MAX_ITERS).unwrap();
        let b = solve_eg::<Rational>(&exact_inst, 1e-8, DEFAULT_MAX_ITERS).unwrap();
        prop_assert_eq!(check_kkt(&b, &exact_inst, 1e-12).unwrap().max_residual(), 0.0);
        for j in 0..inst.m() {
            prop_assert!((a.prices[j] - fairdiv::Scalar::to_f64(&b.prices[j])).abs() < 1e-6);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn beats_grid_search_two_agents(values in prop::collection::vec(prop::collection::vec(0.05f64..1.0, 1..=3), 2..=2)) {
        let m = values[0].len().min(values[1].len());
        let values: Vec<Vec<f64>> = values.into_iter().map(|r| r[..m].to_vec()).collect();
        let inst = instance(values);
        let sol = solve_eg(&inst, 1e-8, DEFAULT_MAX_ITERS).unwrap();
        let ours = log_welfare(&inst, &sol.allocation.shares);
        let steps = 100usize;
        let mut best = f64::NEG_INFINITY;
        let total = (steps + 1).pow(m as u32);
        for code in 0..total {
            let mut c = code;
            let mut x = vec![vec![0.0; m]; 2];
            for j in 0..m {
                let s = (c % (steps + 1)) as f64 / steps as f64;
                c /= steps + 1;
                x[0][j] = s;
                x[1][j] = 1.0 - s;
            }
            best = best.max(log_welfare(&inst, &x));
        }
        prop_assert!(ours >= best - 1e-6, "ours {ours} grid {best}");
    }

    #[test]
    fn beats_grid_search_three_agents(values in prop::collection::vec(prop::collection::vec(0.05f64..1.0, 2), 3)) {
        let inst = instance(values);
        let sol = solve_eg(&inst, 1e-8, DEFAULT_MAX_ITERS).unwrap();
        let ours = log_welfare(&inst, &sol.allocation.shares);
        let steps = 20usize;
        let splits: Vec<(f64, f64, f64)> = (0..=steps)
            .flat_map(|a| (0..=steps - a).map(move |b| (a, b, steps - a - b)))
            .map(|(a, b, c)| (a as f64 / steps as f64, b as f64 / steps as f64, c as f64 / steps as f64))
            .collect();
        let mut best = f64::NEG_INFINITY;
        for s0 in &splits {
            for s1 in &splits {
                let x = vec![vec![s0.0, s1.0], vec![s0.1, s1.1], vec![s0.2, s1.2]];
                best = best.max(log_welfare(&inst, &x));
            }
        }
        prop_assert!(ours >= best - 1e-6);
    }
}
