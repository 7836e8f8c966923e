//! Acceptance suite: one numbered check per criterion, each printing a
//! single PASS/FAIL line. Exits non-zero when any check fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use fairdiv::adversary::{
    independent_expansion, lower_bound_instance, AdversaryConfig, ValueDistribution,
    DEFAULT_TYPE_CAP,
};
use fairdiv::cisef::{
    build_indifference_graph, compute_cisef, strongify_independent, value_table, CisefOptions,
};
use fairdiv::instance::{scale_values, OfflineInstance, TypeDistribution};
use fairdiv::market::{check_kkt, solve_eg, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use fairdiv::metrics::{
    envy_scale, is_cisef, is_pareto_efficient_integral, ParetoMode, ParetoVerdict, BRUTE_FORCE_CAP,
};
use fairdiv::online::{run_online, run_sequence, Policy, Precomputed};
use fairdiv::{Rational, Scalar};
use fairdiv_cli::{run_experiment, ExperimentConfig, OutputPaths, PoCheck, RunOptions};
use fairdiv_validation::{
    clique_prone_correlated, random_correlated, random_independent, random_values, rng, Correlated,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within(elapsed: Duration, limit_secs: u64) -> (bool, String) {
    (
        elapsed.as_secs_f64() < limit_secs as f64,
        format!("{:.2}s of {limit_secs}s", elapsed.as_secs_f64()),
    )
}

fn unequal_budgets_instance<S: Scalar>() -> OfflineInstance<S> {
    let h = S::from_ratio(1, 2);
    OfflineInstance::with_unit_budgets(vec![
        vec![S::one(), S::one()],
        vec![h.clone(), S::one()],
        vec![S::one(), h],
    ])
    .unwrap()
}

fn two_clique_instance() -> OfflineInstance<f64> {
    OfflineInstance::with_unit_budgets(vec![
        vec![1.0, 1.0, 1.0],
        vec![0.5, 1.0, 1.0],
        vec![0.25, 1.0, 1.0],
    ])
    .unwrap()
}

/// The 200 instances shared by criteria 2 and 3.
fn kkt_suite() -> Vec<OfflineInstance<f64>> {
    let mut r = rng(20_240_001);
    (0..200)
        .map(|_| OfflineInstance::with_unit_budgets(random_values(&mut r, 5, 10)).unwrap())
        .collect()
}

fn c1_eg_fixture() -> Verdict {
    let inst = unequal_budgets_instance::<f64>();
    let start = Instant::now();
    let sol = solve_eg(&inst, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
    let (fast, time) = within(start.elapsed(), 1);
    let want = [[1.0 / 3.0, 1.0 / 3.0], [0.0, 2.0 / 3.0], [2.0 / 3.0, 0.0]];
    let mut err_x = 0.0f64;
    for (i, row) in want.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            err_x = err_x.max((sol.allocation.get(i, j) - w).abs());
        }
    }
    let err_p = sol
        .prices
        .iter()
        .map(|p| (p - 1.5).abs())
        .fold(0.0, f64::max);
    verdict(
        err_x <= 1e-4 && err_p <= 1e-4 && fast,
        format!("max |x - x*| = {err_x:.1e}, max |p - 1.5| = {err_p:.1e}, {time}"),
    )
}

fn c2_kkt_suite() -> Verdict {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut worst_envy = f64::NEG_INFINITY;
    for (k, inst) in kkt_suite().iter().enumerate() {
        let sol = solve_eg(inst, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        let kkt = check_kkt(&sol, inst, 1e-6).unwrap();
        let t = value_table(&sol, inst);
        let envy = (0..inst.n())
            .flat_map(|i| (0..inst.n()).map(move |j| (i, j)))
            .map(|(i, j)| t[i][j] - t[i][i]);
        let envy = envy.fold(f64::NEG_INFINITY, f64::max);
        worst_envy = worst_envy.max(envy);
        if !kkt.pass || envy > 1e-6 {
            bad.push(k);
        }
    }
    let (fast, time) = within(start.elapsed(), 30);
    verdict(
        bad.is_empty() && fast,
        format!(
            "{} of 200 failed {bad:?}, worst envy {worst_envy:.1e}, {time}",
            bad.len()
        ),
    )
}

fn c3_cisef_suite() -> Verdict {
    let start = Instant::now();
    let mut bad = Vec::new();
    let (mut nontrivial, mut max_elim) = (0, 0);
    for (k, inst) in kkt_suite().iter().enumerate() {
        let n = inst.n();
        let out = compute_cisef(inst, &CisefOptions::default()).unwrap();
        let audit = is_cisef(&out.solution, inst, &out.partition, 1e-6);
        let kkt = check_kkt(&out.solution, inst, 1e-6).unwrap();
        if !out.trace.is_empty() {
            nontrivial += 1;
        }
        max_elim = max_elim.max(out.eliminations);
        if !audit.pass || !kkt.pass || out.eliminations > n * n - n {
            bad.push(k);
        }
    }
    let (fast, time) = within(start.elapsed(), 120);
    verdict(
        bad.is_empty() && fast,
        format!(
            "{} of 200 failed {bad:?}, {nontrivial} needed surgery, most eliminations {max_elim}, {time}",
            bad.len()
        ),
    )
}

fn c4_two_cliques() -> Verdict {
    let inst = two_clique_instance();
    let out = compute_cisef(&inst, &CisefOptions::default()).unwrap();
    let x00 = *out.solution.allocation.get(0, 0);
    let has_clique = out.partition.cliques.contains(&vec![1, 2]);
    let row_gap = (0..inst.m())
        .map(|j| (out.solution.allocation.get(1, j) - out.solution.allocation.get(2, j)).abs())
        .fold(0.0, f64::max);
    let edges = out.graph.edges();
    let mutual = edges.contains(&(1, 2)) && edges.contains(&(2, 1));
    verdict(
        (x00 - 1.0).abs() <= 1e-6 && has_clique && row_gap <= 1e-6 && mutual,
        format!(
            "x00 = {x00}, cliques {:?}, row gap {row_gap:.1e}, edges {edges:?}",
            out.partition.cliques
        ),
    )
}

fn c5_unequal_budgets() -> Verdict {
    let inst = unequal_budgets_instance::<f64>();
    let out = compute_cisef(&inst, &CisefOptions::default()).unwrap();
    let e = &out.solution.budgets;
    let spread = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - e.iter().cloned().fold(f64::INFINITY, f64::min);
    let edges = build_indifference_graph(&out.solution, &inst, 1e-7).edges();
    verdict(
        spread > 1e-6 && edges.is_empty(),
        format!("budgets {e:?}, final edges {edges:?}"),
    )
}

fn c6_ex_post_pareto() -> Verdict {
    let start = Instant::now();
    let mut r = rng(20_240_006);
    let mut dominated = Vec::new();
    for d in 0..50 {
        let Correlated { probs, values } = random_correlated(&mut r, 3, 4);
        let dist = TypeDistribution::new(probs, values).unwrap();
        let (pre, _) = Precomputed::cisef::<f64>(&dist, &CisefOptions::default()).unwrap();
        for seed in 0..20 {
            let (alloc, _) = run_online(&dist, Policy::Pocr, Some(&pre), 8, seed, 0, &[8]).unwrap();
            let v = is_pareto_efficient_integral(
                &alloc,
                ParetoMode::Brute {
                    cap: BRUTE_FORCE_CAP,
                },
            )
            .unwrap();
            if matches!(v, ParetoVerdict::Dominated { .. }) {
                dominated.push((d, seed));
            }
        }
    }
    let (fast, time) = within(start.elapsed(), 300);
    verdict(
        dominated.is_empty() && fast,
        format!("1000 runs, dominated (distribution, seed): {dominated:?}, {time}"),
    )
}

/// The twenty experiments of criteria 7 and 11.
fn fairness_configs() -> Vec<ExperimentConfig> {
    let mut r = rng(2024);
    (0..20)
        .map(|d| {
            let c = clique_prone_correlated(&mut r, d % 2 == 0);
            ExperimentConfig {
                adversary: AdversaryConfig::CorrelatedIid {
                    types: c.type_specs(),
                },
                allocator: Policy::Pocr,
                horizon: 10_000,
                trials: 100,
                seed: 2024,
                checkpoints: Some(vec![10_000]),
                outputs: OutputPaths::default(),
                precomputed: None,
                strong_ef: false,
                po_check: PoCheck::Off,
            }
        })
        .collect()
}

fn c7_fairness() -> Verdict {
    let mut within_fail = Vec::new();
    let mut cross = Vec::new();
    let mut used = 0;
    let mut with_pairs = 0;
    for (d, config) in fairness_configs().iter().enumerate() {
        let result = run_experiment(config, &RunOptions::default()).unwrap();
        let cliques = &result.solution.as_ref().unwrap().cliques;
        if cliques.len() < 2 {
            continue;
        }
        used += 1;
        if cliques.iter().any(|c| c.len() > 1) {
            with_pairs += 1;
        }
        let n = config.n();
        let same = |i: usize, j: usize| cliques.iter().any(|c| c.contains(&i) && c.contains(&j));
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let rows = result.trials.iter().map(|tr| &tr.rows[0]);
                if same(i, j) {
                    let fails = rows.filter(|row| !row.pair_ef1[i][j]).count();
                    if fails > 0 {
                        within_fail.push((d, i, j, fails));
                    }
                } else {
                    let ef = rows.filter(|row| row.pair_ef[i][j]).count();
                    cross.push((d, i, j, ef));
                }
            }
        }
    }
    let low: Vec<_> = cross.iter().filter(|c| c.3 < 95).collect();
    let worst = cross.iter().map(|c| c.3).min().unwrap_or(100);
    verdict(
        used == 20 && within_fail.is_empty() && low.is_empty(),
        format!(
            "{used} distributions with >= 2 cliques ({with_pairs} with a shared clique); \
             within-clique EF1 failures {within_fail:?}; cross-clique pairs {} with worst EF rate {worst}/100; \
             below 95 (distribution, i, j, EF seeds): {low:?}",
            cross.len()
        ),
    )
}

fn c8_uniform_vanishing_envy() -> Verdict {
    let start = Instant::now();
    let config = ExperimentConfig {
        adversary: AdversaryConfig::IdenticalIid {
            n: 2,
            marginal: ValueDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap(),
        },
        allocator: Policy::Uniform,
        horizon: 100_000,
        trials: 200,
        seed: 8,
        checkpoints: Some(vec![1_000, 10_000, 100_000]),
        outputs: OutputPaths::default(),
        precomputed: None,
        strong_ef: false,
        po_check: PoCheck::Off,
    };
    let result = run_experiment(&config, &RunOptions::default()).unwrap();
    let means: Vec<(usize, f64)> = (0..3)
        .map(|c| {
            let t = result.trials[0].rows[c].t;
            (
                t,
                result
                    .trials
                    .iter()
                    .map(|tr| tr.rows[c].max_envy)
                    .sum::<f64>()
                    / 200.0,
            )
        })
        .collect();
    let ratios: Vec<f64> = means.iter().map(|&(t, m)| m / envy_scale(t)).collect();
    let per_t: Vec<f64> = means.iter().map(|&(t, m)| m / t as f64).collect();
    let in_band = ratios.iter().all(|r| (0.05..=5.0).contains(r));
    let decreasing = per_t.windows(2).all(|w| w[1] < w[0]);
    let (fast, time) = within(start.elapsed(), 180);
    verdict(
        in_band && decreasing && fast,
        format!("envy / sqrt(T ln T) = {ratios:.3?}, envy / T = {per_t:?}, {time}"),
    )
}

fn c9_tradeoff() -> Verdict {
    let (t, eps) = (10_000usize, 0.1);
    let lb = lower_bound_instance(2, t, eps).unwrap();
    let mut util_ok = true;
    let mut min_peak = f64::INFINITY;
    let mut worst_total = 0.0f64;
    for seed in 0..20 {
        let (alloc, run) = run_sequence(&lb.values, 2, Policy::Utilitarian, seed, 0, &[t]).unwrap();
        let total: f64 = alloc.utilities().iter().sum();
        worst_total = worst_total.max((total - t as f64).abs());
        util_ok &= (total - t as f64).abs() <= 1e-9 && run.peak_envy >= 0.04 * t as f64;
        min_peak = min_peak.min(run.peak_envy);
    }
    let seeds = 200;
    let mut envy_sum = 0.0;
    let mut util_sum = [0.0f64; 2];
    for seed in 0..seeds {
        let (alloc, run) = run_sequence(&lb.values, 2, Policy::Uniform, seed, 0, &[t]).unwrap();
        let snap = &run.envy_trace[0];
        envy_sum += fairdiv::metrics::EnvyReport::from_snapshot(snap).max_envy;
        for (acc, u) in util_sum.iter_mut().zip(alloc.utilities()) {
            *acc += u;
        }
    }
    let mean_envy = envy_sum / seeds as f64;
    let mean_util = util_sum.map(|u| u / seeds as f64);
    let envy_cap = 5.0 * envy_scale(t);
    let util_cap = (0.5 + eps) * (t as f64 / 2.0) * 1.05;
    let uniform_ok = mean_envy <= envy_cap && mean_util.iter().all(|&u| u <= util_cap);
    verdict(
        util_ok && uniform_ok,
        format!(
            "utilitarian: |total - T| <= {worst_total:.1e}, smallest peak envy {min_peak} (need {}); \
             uniform: mean max envy {mean_envy:.1} (cap {envy_cap:.1}), mean utilities {mean_util:.1?} (cap {util_cap:.1})",
            0.04 * t as f64
        ),
    )
}

fn strong_pipeline(marginals: &[ValueDistribution]) -> Result<(), String> {
    let exp = independent_expansion(marginals, DEFAULT_TYPE_CAP).map_err(|e| e.to_string())?;
    let opts = CisefOptions::default();
    let inst = scale_values::<f64>(exp.distribution(), &vec![1.0; marginals.len()])
        .map_err(|e| e.to_string())?;
    let out = compute_cisef(&inst, &opts).map_err(|e| e.to_string())?;
    let (strong, graph) =
        strongify_independent(&inst, &exp, &out.solution, &opts).map_err(|e| e.to_string())?;
    let kkt = check_kkt(&strong, &inst, 1e-6).map_err(|e| e.to_string())?;
    if !graph.is_empty() || !build_indifference_graph(&strong, &inst, opts.eps_ind).is_empty() {
        return Err(format!("edges remain: {:?}", graph.edges()));
    }
    if !kkt.pass {
        return Err(format!("kkt: {kkt}"));
    }
    Ok(())
}

fn c10_strong_ef() -> Verdict {
    let start = Instant::now();
    let pair = ValueDistribution::new(vec![0.0, 1.0], vec![0.1, 0.9]).unwrap();
    let third = ValueDistribution::new(vec![1.0, 2.0], vec![16.0 / 17.0, 1.0 / 17.0]).unwrap();
    let table = vec![pair.clone(), pair, third];
    let fixture = strong_pipeline(&table);
    let exact = {
        let exp = independent_expansion(&table, DEFAULT_TYPE_CAP).unwrap();
        let one = Rational::one();
        let inst =
            scale_values::<Rational>(exp.distribution(), &[one.clone(), one.clone(), one]).unwrap();
        let opts = CisefOptions::default();
        let out = compute_cisef(&inst, &opts).unwrap();
        let (strong, graph) = strongify_independent(&inst, &exp, &out.solution, &opts).unwrap();
        graph.is_empty() && check_kkt(&strong, &inst, 1e-12).unwrap().max_residual() == 0.0
    };
    let mut r = rng(20_240_010);
    let failures: Vec<(usize, String)> = (0..50)
        .filter_map(|k| {
            strong_pipeline(&random_independent(&mut r, 3))
                .err()
                .map(|e| (k, e))
        })
        .collect();
    let (fast, time) = within(start.elapsed(), 120);
    verdict(
        fixture.is_ok() && exact && failures.is_empty() && fast,
        format!(
            "fixture float {fixture:?}, exact ok {exact}, random failures {failures:?}, {time}"
        ),
    )
}

fn c11_determinism() -> Verdict {
    let configs = fairness_configs();
    let mut differing = Vec::new();
    for (d, config) in configs.iter().enumerate() {
        let a = run_experiment(
            config,
            &RunOptions {
                jobs: Some(1),
                ..RunOptions::default()
            },
        )
        .unwrap();
        let b = run_experiment(
            config,
            &RunOptions {
                jobs: Some(4),
                ..RunOptions::default()
            },
        )
        .unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        a.write(dir_a.path()).unwrap();
        b.write(dir_b.path()).unwrap();
        let bytes_a = std::fs::read(dir_a.path().join("summary.csv")).unwrap();
        let bytes_b = std::fs::read(dir_b.path().join("summary.csv")).unwrap();
        if bytes_a != bytes_b || bytes_a.is_empty() {
            differing.push(d);
        }
    }
    verdict(
        differing.is_empty(),
        format!("20 experiments run twice (1 and 4 workers), differing summaries: {differing:?}"),
    )
}

fn main() {
    let checks: [(u32, &str, fn() -> Verdict); 11] = [
        (
            1,
            "equilibrium of the three-agent two-item fixture",
            c1_eg_fixture,
        ),
        (2, "KKT certificates on 200 random instances", c2_kkt_suite),
        (3, "CISEF audit on 200 random instances", c3_cisef_suite),
        (4, "two-clique fixture", c4_two_cliques),
        (5, "unequal budgets are necessary", c5_unequal_budgets),
        (6, "ex-post Pareto efficiency of pocr", c6_ex_post_pareto),
        (7, "pocr fairness at T = 10^4", c7_fairness),
        (
            8,
            "vanishing envy of uniform allocation",
            c8_uniform_vanishing_envy,
        ),
        (
            9,
            "efficiency and fairness trade-off on the lower-bound instance",
            c9_tradeoff,
        ),
        (
            10,
            "strong envy-freeness for independent agents",
            c10_strong_ef,
        ),
        (11, "byte-identical summaries", c11_determinism),
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = Vec::new();
    for (k, name, check) in checks {
        if !filter.is_empty() && !filter.contains(&k) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {k:>2} {status} {name} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            v.detail
        );
        if !v.pass {
            failed.push(k);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
