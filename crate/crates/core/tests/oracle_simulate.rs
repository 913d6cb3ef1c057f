use std::f64::consts::E;

use impulse_lp::benchmarks::{build_expgrowth, preset, toy_chain, ExpGrowthParams};
use impulse_lp::discretize::{build_grid, discretize, DiscreteModel};
use impulse_lp::error::OracleError;
use impulse_lp::lp_aggregated::{aggregate, aggregated_cost, build_aggregated_lp, AggregatedVector};
use impulse_lp::lp_occupation::{build_occupation_lp, extract_stationary_strategy, occupation_cost};
use impulse_lp::oracle::{
    bellman_residual, default_lambda_grid, dp_value, enumerate_policies, evaluate_policy, lagrangian_sweep,
    to_strategy, Control,
};
use impulse_lp::simulate::{
    empirical_occupation, estimate, estimate_to_csv, run_stream, simulate_many, summarize, trajectories_to_jsonl,
    DEFAULT_MAX_EVENTS,
};
use impulse_lp::strategy::{
    induce_markov_strategy, random_markov_strategy, strategy_occupation, MarkovStrategy, DEFAULT_MAX_STEPS,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model(p: &ExpGrowthParams, dt: f64, n_actions: usize) -> DiscreteModel {
    let spec = build_expgrowth(p).unwrap();
    discretize(&spec, &build_grid(&spec, dt, n_actions).unwrap()).unwrap()
}

fn named(name: &str, dt: f64, n_actions: usize) -> DiscreteModel {
    model(&preset(name).unwrap(), dt, n_actions)
}

fn lp_value(dm: &DiscreteModel) -> f64 {
    simplex::solve(&build_aggregated_lp(dm).lp).unwrap().objective
}

/// Best cost of "flow for t, then one jump onto K" by golden-section search over t.
fn flow_then_jump(c: f64, x0: f64, k: f64) -> f64 {
    let f = |t: f64| c * t + (k - x0 * t.exp());
    let (mut lo, mut hi) = (0.0, (k / x0).ln());
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(lo).min(f(0.0)).min(c * (k / x0).ln())
}

#[test]
fn dp_matches_lp_on_presets() {
    for name in ["expgrowth-c5", "expgrowth-c1"] {
        let dm = named(name, 0.1, 76);
        let table = dp_value(&dm).unwrap();
        assert!((table.initial_value(&dm) - lp_value(&dm)).abs() < 1e-9, "{name}");
        assert!(bellman_residual(&dm, &[1.0], &table.v) <= 1e-12);
    }
}

#[test]
fn c1_never_jumps() {
    let dm = named("expgrowth-c1", 0.1, 11);
    let table = dp_value(&dm).unwrap();
    assert!((table.initial_value(&dm) - 1.0).abs() < 1e-12);
    let x0 = dm.grid.x0_cell().unwrap();
    assert_eq!(table.best[x0], Control::Continue);
}

#[test]
fn c5_jumps_at_once() {
    let dm = named("expgrowth-c5", 0.1, 76);
    let table = dp_value(&dm).unwrap();
    assert!(matches!(table.best[dm.grid.x0_cell().unwrap()], Control::Jump(_)));
    let costs = evaluate_policy(&dm, &table.best).unwrap();
    assert!((costs[0] - table.initial_value(&dm)).abs() < 1e-12);
}

#[test]
fn grid_values_approach_the_continuous_optimum() {
    let p = preset("expgrowth-c5").unwrap();
    let target = flow_then_jump(p.c, p.x0, p.k);
    assert!((target - (E - 1.0)).abs() < 1e-12);
    let coarse = target - lp_value(&named("expgrowth-c5", 0.1, 76));
    let fine = target - lp_value(&named("expgrowth-c5", 0.05, 76));
    assert!(coarse > fine && fine > 0.0 && fine < 0.07, "{coarse} {fine}");
}

#[test]
fn enumeration_agrees_with_dp() {
    let dm = named("expgrowth-c5", 0.5, 3);
    assert!(dm.n_cells() <= 12);
    let exact = enumerate_policies(&dm).unwrap();
    assert!((exact - dp_value(&dm).unwrap().initial_value(&dm)).abs() < 1e-12);
    assert!((exact - lp_value(&dm)).abs() < 1e-9);
    let chain = toy_chain(5, 2).unwrap();
    assert!((enumerate_policies(&chain).unwrap() - 0.1).abs() < 1e-15);
}

#[test]
fn enumeration_refuses_large_instances() {
    let dm = named("expgrowth-c5", 0.1, 3);
    assert!(matches!(enumerate_policies(&dm), Err(OracleError::TooLarge(_))));
}

#[test]
fn zero_cost_value_is_zero() {
    let dm = named("zero-cost", 0.1, 5);
    let table = dp_value(&dm).unwrap();
    assert_eq!(table.initial_value(&dm), 0.0);
    assert!(table.v.is_empty());
}

#[test]
fn forward_jump_policies_evaluate() {
    let dm = named("expgrowth-c5", 0.5, 3);
    let x0 = dm.grid.x0_cell().unwrap();
    let mut policy = vec![Control::Continue; dm.n_cells()];
    // The smallest jump from the first cell of the x₀ orbit lands in a later orbit.
    policy[x0] = Control::Jump(0);
    assert!(evaluate_policy(&dm, &policy).is_some());
}

#[test]
fn value_table_csv() {
    let dm = toy_chain(2, 1).unwrap();
    let csv = dp_value(&dm).unwrap().to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("cell,v,best"));
    assert!(lines.next().unwrap().ends_with(",jump:0"));
}

#[test]
fn lagrangian_sweep_brackets_the_constrained_value() {
    let mut p = preset("expgrowth-c5").unwrap();
    p.constraint_bound = 1.0;
    let dm = model(&p, 0.1, 76);
    let rep = lagrangian_sweep(&dm, &default_lambda_grid()).unwrap();
    let v = lp_value(&dm);
    assert!(rep.lower_bound <= v + 1e-9 && v <= rep.upper_bound + 1e-9);
    let unconstrained = dp_value(&dm).unwrap().initial_value(&dm);
    assert!((rep.points[0].lower_bound - unconstrained).abs() < 1e-12);
}

#[test]
fn slack_constraint_is_maximized_at_zero() {
    let mut p = preset("expgrowth-c5").unwrap();
    p.constraint_bound = 10.0;
    let dm = model(&p, 0.1, 20);
    let rep = lagrangian_sweep(&dm, &default_lambda_grid()).unwrap();
    assert_eq!(rep.best_lambda, 0.0);
    assert!((rep.lower_bound - rep.upper_bound).abs() < 1e-12);
}

#[test]
fn dp_strategy_simulates_to_its_value() {
    let dm = named("expgrowth-c5", 0.1, 76);
    let table = dp_value(&dm).unwrap();
    let pi = to_strategy(&dm, &table.best);
    let est = estimate(&dm, &pi, 20, 7);
    assert!((est.mean[0] - table.initial_value(&dm)).abs() < 1e-12);
    assert_eq!(est.stderr[0], 0.0);
    assert_eq!(est.non_absorbed, 0);
}

#[test]
fn c1_simulates_to_one() {
    let dm = named("expgrowth-c1", 0.1, 11);
    let est = estimate(&dm, &MarkovStrategy::default(), 5, 1);
    assert!((est.mean[0] - 1.0).abs() < 1e-12);
    let lp = build_occupation_lp(&dm);
    let sol = simplex::solve(&lp.lp).unwrap();
    let mu = lp.vector(&sol.primal);
    let pi = extract_stationary_strategy(&mu, &dm);
    assert!((estimate(&dm, &pi, 5, 1).mean[0] - sol.objective).abs() < 1e-9);
}

#[test]
fn zero_cost_trajectories_are_empty() {
    let dm = named("zero-cost", 0.1, 5);
    let trajs = simulate_many(&dm, &MarkovStrategy::default(), 3, 0);
    assert!(trajs.iter().all(|t| t.events.is_empty() && t.absorbed));
    assert_eq!(summarize(&trajs, 1).mean, vec![0.0]);
}

#[test]
fn simulation_is_reproducible_by_seed() {
    let dm = named("expgrowth-c5", 0.1, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pi = random_markov_strategy(&dm, 4, 0.5, &mut rng);
    let a = simulate_many(&dm, &pi, 50, 99);
    let b = simulate_many(&dm, &pi, 50, 99);
    assert_eq!(trajectories_to_jsonl(&a, "h"), trajectories_to_jsonl(&b, "h"));
    assert_eq!(a[3], run_stream(&dm, &pi, 99, 3, DEFAULT_MAX_EVENTS));
    assert_ne!(a, simulate_many(&dm, &pi, 50, 100));
}

#[test]
fn summaries_of_edge_cases() {
    assert_eq!(summarize(&[], 2).mean, vec![0.0, 0.0]);
    let dm = named("expgrowth-c5", 0.1, 9);
    let pi = MarkovStrategy::default();
    let one = simulate_many(&dm, &pi, 1, 0);
    let est = summarize(&one, 1);
    assert_eq!(est.mean[0], one[0].costs[0]);
    assert_eq!(est.stderr[0], 0.0);
}

#[test]
fn output_formats_carry_the_hash() {
    let dm = named("expgrowth-c1", 0.1, 5);
    let trajs = simulate_many(&dm, &MarkovStrategy::default(), 2, 0);
    let jsonl = trajectories_to_jsonl(&trajs, "abc");
    assert_eq!(jsonl.lines().count(), 2);
    for line in jsonl.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["config_hash"], "abc");
    }
    let csv = estimate_to_csv(&summarize(&trajs, 1), "abc");
    assert!(csv.starts_with("objective_index,mean,stderr,n,config_hash\n0,"));
    assert!(csv.trim_end().ends_with(",2,abc"));
}

fn randomized(dm: &DiscreteModel, seed: u64) -> MarkovStrategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_markov_strategy(dm, 3, 0.5, &mut rng)
}

#[test]
fn empirical_cost_converges_to_exact() {
    let dm = named("expgrowth-c5", 0.1, 9);
    let pi = randomized(&dm, 5);
    let exact = occupation_cost(&strategy_occupation(&pi, &dm, DEFAULT_MAX_STEPS).occupation, &dm, 0);
    for n in [100, 10_000] {
        let est = estimate(&dm, &pi, n, 17);
        assert!(est.stderr[0] > 0.0);
        assert!(
            (est.mean[0] - exact).abs() <= 5.0 * est.stderr[0],
            "n {n}: {} vs {exact} ± {}",
            est.mean[0],
            est.stderr[0]
        );
    }
}

#[test]
fn empirical_occupation_tracks_exact_occupation() {
    let dm = named("expgrowth-c5", 0.1, 9);
    let pi = randomized(&dm, 8);
    let exact = aggregate(&strategy_occupation(&pi, &dm, DEFAULT_MAX_STEPS).occupation, &dm);
    let trajs = simulate_many(&dm, &pi, 20_000, 3);
    let emp = aggregate(&empirical_occupation(&trajs, &dm), &dm);
    let gap = emp
        .eta_box
        .iter()
        .zip(&exact.eta_box)
        .chain(emp.eta_jump.iter().zip(&exact.eta_jump))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 0.05, "{gap}");
    assert!((aggregated_cost(&emp, &dm, 0) - summarize(&trajs, 1).mean[0]).abs() < 1e-9);
}

#[test]
fn induced_strategy_simulates_to_lp_value() {
    let dm = named("expgrowth-c5", 0.1, 76);
    let sol = simplex::solve(&build_aggregated_lp(&dm).lp).unwrap();
    let eta = AggregatedVector::from_columns(&sol.primal, &dm);
    let (pi, _) = induce_markov_strategy(&eta, &dm, DEFAULT_MAX_STEPS).unwrap();
    let est = estimate(&dm, &pi, 100, 0);
    assert!((est.mean[0] - sol.objective).abs() <= 1e-6 + 5.0 * est.stderr[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn recorded_costs_match_events(seed in any::<u64>(), stream in 0u64..1000) {
        let dm = named("expgrowth-c5", 0.25, 7);
        let pi = randomized(&dm, seed);
        let t = run_stream(&dm, &pi, seed, stream, DEFAULT_MAX_EVENTS);
        let again = t.recompute_costs(&dm);
        for (a, b) in t.costs.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert!(t.absorbed);
    }

    #[test]
    fn bellman_residual_is_small(c in 0.5f64..8.0, n_actions in 2usize..12) {
        let mut p = preset("expgrowth-c5").unwrap();
        p.c = c;
        let dm = model(&p, 0.1, n_actions);
        let table = dp_value(&dm).unwrap();
        prop_assert!(bellman_residual(&dm, &[1.0], &table.v) <= 1e-12);
        prop_assert!((table.initial_value(&dm) - lp_value(&dm)).abs() <= 1e-9);
    }
}
