//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::E;
use std::time::Instant;

use impulse_lp::benchmarks::{build_expgrowth, preset, to_upsilon1, toy_chain, verify_objective_equality};
use impulse_lp::discretize::{build_grid, discretize, DiscreteModel};
use impulse_lp::lp_aggregated::{
    aggregate, aggregated_cost, build_aggregated_lp, dimension_report, test_function_residual,
    verify_aggregation_feasibility, AggregatedVector,
};
use impulse_lp::lp_occupation::{build_occupation_lp, extract_stationary_strategy, occupation_cost, Dwell};
use impulse_lp::model::make_ramp_test_function;
use impulse_lp::oracle::{default_lambda_grid, dp_value, lagrangian_sweep};
use impulse_lp::simulate::{estimate, run_stream, simulate_many, summarize, trajectories_to_jsonl};
use impulse_lp::strategy::{
    check_domination, induce_markov_strategy, random_markov_strategy, strategy_occupation, MarkovStrategy,
    DEFAULT_MAX_STEPS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRIDS: [f64; 3] = [0.1, 0.05, 0.02];

fn model(name: &str, dt: f64, bound: Option<f64>) -> DiscreteModel {
    let mut p = preset(name).unwrap();
    if let Some(b) = bound {
        p.constraint_bound = b;
    }
    let spec = build_expgrowth(&p).unwrap();
    let grid = build_grid(&spec, dt, 76).unwrap();
    discretize(&spec, &grid).unwrap()
}

fn solve_aggregated(dm: &DiscreteModel) -> AggregatedVector {
    let sol = simplex::solve(&build_aggregated_lp(dm).lp).unwrap();
    assert!(sol.is_optimal());
    AggregatedVector::from_columns(&sol.primal, dm)
}

/// Aggregated image of a random strategy, which is feasible by construction.
fn random_feasible(dm: &DiscreteModel, rng: &mut ChaCha8Rng) -> AggregatedVector {
    let steps = rng.random_range(1..=4);
    let pi = random_markov_strategy(dm, steps, 0.5, rng);
    aggregate(&strategy_occupation(&pi, dm, DEFAULT_MAX_STEPS).occupation, dm)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Shared {
    c5: Vec<(f64, DiscreteModel, f64, f64)>,
}

fn criterion_1(shared: &mut Shared) -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for dt in GRIDS {
        let dm = model("expgrowth-c5", dt, None);
        let occ = simplex::solve(&build_occupation_lp(&dm).lp).unwrap();
        let agg = simplex::solve(&build_aggregated_lp(&dm).lp).unwrap();
        let ok = occ.is_optimal() && agg.is_optimal();
        worst = worst.max(if ok { (occ.objective - agg.objective).abs() } else { f64::INFINITY });
        shared.c5.push((dt, dm, occ.objective, agg.objective));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && secs <= 30.0,
        format!("max |occ - agg| = {worst:.2e} over dt in {GRIDS:?}, {secs:.1} s"),
    )
}

fn criterion_2(shared: &Shared) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut fine = (f64::NAN, f64::NAN);
    for (dt, dm, occ, _) in &shared.c5 {
        let dp = dp_value(dm).unwrap().initial_value(dm);
        worst = worst.max((dp - occ).abs());
        if *dt == 0.02 {
            fine = (*occ, dp);
        }
    }
    let target = E - 1.0;
    let close = (fine.0 - target).abs() <= 0.02 && (fine.1 - target).abs() <= 0.02;
    outcome(
        worst <= 1e-6 && close,
        format!(
            "max |occ - dp| = {worst:.2e}; at dt = 0.02 occ {:.6}, dp {:.6}, e - 1 = {target:.6}",
            fine.0, fine.1
        ),
    )
}

fn criterion_3() -> Outcome {
    let dm = model("expgrowth-c1", 0.02, None);
    let lp = build_occupation_lp(&dm);
    let sol = simplex::solve(&lp.lp).unwrap();
    let mu = lp.vector(&sol.primal);
    let pi = extract_stationary_strategy(&mu, &dm);
    let x0 = dm.grid.x0_origin.unwrap();
    let p_inf = pi.kernels.get(&x0).map_or(1.0, |k| k.p_infinite());
    outcome(
        sol.is_optimal() && (sol.objective - 1.0).abs() <= 0.02 && p_inf == 1.0,
        format!("value {:.6}, P(theta = inf at x0) = {p_inf}", sol.objective),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_balance: f64 = 0.0;
    let mut worst_cost: f64 = 0.0;
    for i in 0..50 {
        let dm = model(if i % 2 == 0 { "expgrowth-c5" } else { "expgrowth-c1" }, 0.1, None);
        let steps = rng.random_range(1..=5);
        let pi = random_markov_strategy(&dm, steps, 0.4, &mut rng);
        let mu = strategy_occupation(&pi, &dm, DEFAULT_MAX_STEPS).occupation;
        let eta = aggregate(&mu, &dm);
        worst_balance = worst_balance.max(verify_aggregation_feasibility(&eta, &dm).max_residual);
        for j in 0..dm.n_objectives {
            worst_cost = worst_cost.max((aggregated_cost(&eta, &dm, j) - occupation_cost(&mu, &dm, j)).abs());
        }
    }
    outcome(
        worst_balance <= 1e-9 && worst_cost <= 1e-9,
        format!("50 vectors: balance residual {worst_balance:.2e}, cost gap {worst_cost:.2e}"),
    )
}

fn criterion_5(shared: &Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (_, dm, _, _) = &shared.c5[1];
    let optimal = solve_aggregated(dm);
    let mut candidates = vec![optimal.clone()];
    for _ in 0..10 {
        let s: f64 = rng.random_range(0.05..0.95);
        let mut eta = optimal.scaled(1.0 - s);
        eta.add_scaled(&random_feasible(dm, &mut rng), s);
        candidates.push(eta);
    }
    let mut worst_entry: f64 = 0.0;
    let mut worst_cost = f64::NEG_INFINITY;
    let mut errors = 0;
    for eta in &candidates {
        match induce_markov_strategy(eta, dm, DEFAULT_MAX_STEPS) {
            Ok((pi, _)) => {
                let tilde = aggregate(&strategy_occupation(&pi, dm, DEFAULT_MAX_STEPS).occupation, dm);
                worst_entry = worst_entry.max(check_domination(&tilde, eta).max_violation);
                worst_cost = worst_cost.max(aggregated_cost(&tilde, dm, 0) - aggregated_cost(eta, dm, 0));
            }
            Err(_) => errors += 1,
        }
    }
    outcome(
        errors == 0 && worst_entry <= 1e-8 && worst_cost <= 1e-8,
        format!(
            "11 vectors: max excess {worst_entry:.2e}, max cost increase {worst_cost:.2e}, {errors} induction errors"
        ),
    )
}

fn criterion_6() -> Outcome {
    let dm = model("expgrowth-c5", 0.02, Some(1.0));
    let eta = solve_aggregated(&dm);
    let value = aggregated_cost(&eta, &dm, 0);
    let sweep = lagrangian_sweep(&dm, &default_lambda_grid()).unwrap();
    let bracket = sweep.lower_bound <= value + 1e-9 && value <= sweep.upper_bound + 1e-9;
    let width = sweep.upper_bound - sweep.lower_bound;
    let (pi, _) = induce_markov_strategy(&eta, &dm, DEFAULT_MAX_STEPS).unwrap();
    let est = estimate(&dm, &pi, 10_000, 6);
    let constraint_ok = est.mean[1] <= 1.0 + 3.0 * est.stderr[1];
    outcome(
        bracket && width <= 0.05 && pi.is_randomized() && constraint_ok,
        format!(
            "[{:.6}, {:.6}] around {value:.6}, width {width:.2e}, randomized {}, simulated cost_1 {:.4} +- {:.4}",
            sweep.lower_bound,
            sweep.upper_bound,
            pi.is_randomized(),
            est.mean[1],
            est.stderr[1]
        ),
    )
}

fn criterion_7(shared: &Shared) -> Outcome {
    let mut all_smaller = true;
    for (_, dm, _, _) in &shared.c5 {
        let d = dimension_report(dm);
        all_smaller &= d.aggregated_columns < d.occupation_columns;
    }
    for dt in GRIDS {
        let d = dimension_report(&model("expgrowth-c1", dt, None));
        all_smaller &= d.aggregated_columns < d.occupation_columns;
    }
    let toy = dimension_report(&toy_chain(10, 3).unwrap());
    outcome(
        all_smaller && toy.aggregated_product_dimension == 40 && toy.occupation_product_dimension == 330,
        format!(
            "aggregated < occupation on all grids: {all_smaller}; 10 cells x 3 actions: {} vs {} (columns {} vs {})",
            toy.aggregated_product_dimension,
            toy.occupation_product_dimension,
            toy.aggregated_columns,
            toy.occupation_columns
        ),
    )
}

fn criterion_8(shared: &Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (_, dm, _, _) = &shared.c5[2];
    let mut worst = verify_objective_equality(&solve_aggregated(dm), dm).max_gap;
    for _ in 0..10 {
        worst = worst.max(verify_objective_equality(&random_feasible(dm, &mut rng), dm).max_gap);
    }
    let u = to_upsilon1(&solve_aggregated(dm), dm);
    outcome(
        worst <= 1e-9,
        format!("max pairwise gap {worst:.2e} over 11 vectors; optimal jump density mass {:.6}", u.u1_2.iter().sum::<f64>()),
    )
}

fn criterion_9(shared: &Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (_, dm, _, _) = &shared.c5[1];
    let grid = &dm.grid;
    let eta = solve_aggregated(dm);
    let mut exact = 0;
    let mut worst_residual: f64 = 0.0;
    for _ in 0..100 {
        let gamma: Vec<usize> = (0..grid.n_origins()).filter(|_| rng.random_bool(0.5)).collect();
        let k1 = rng.random_range(0..20);
        let t2 = if rng.random_bool(0.2) {
            f64::INFINITY
        } else {
            (k1 + rng.random_range(1..20)) as f64 * grid.dt
        };
        let w = make_ramp_test_function(grid, &gamma, k1 as f64 * grid.dt, t2).unwrap();
        exact += usize::from(w.barrow_holds(grid));
        worst_residual = worst_residual.max(test_function_residual(&eta, dm, &w).abs());
    }
    outcome(
        exact == 100 && worst_residual <= 1e-9,
        format!("{exact}/100 exact along every orbit prefix; constraint residual on optimal eta {worst_residual:.2e}"),
    )
}

fn criterion_10(shared: &Shared) -> Outcome {
    let mut worst_det: f64 = 0.0;
    for (_, dm, occ, _) in &shared.c5[..2] {
        let lp = build_occupation_lp(dm);
        let sol = simplex::solve(&lp.lp).unwrap();
        let pi = extract_stationary_strategy(&lp.vector(&sol.primal), dm);
        let est = estimate(dm, &pi, 10, 10);
        worst_det = worst_det.max((est.mean[0] - occ).abs()).max(est.stderr[0]);
    }
    let c1 = model("expgrowth-c1", 0.05, None);
    let sol = simplex::solve(&build_occupation_lp(&c1).lp).unwrap();
    let t = run_stream(&c1, &MarkovStrategy::default(), 10, 0, 10);
    worst_det = worst_det.max((t.costs[0] - sol.objective).abs());
    if t.events.len() != 1 || t.events[0].dwell != Dwell::Infinite {
        worst_det = f64::INFINITY;
    }

    let dm = model("expgrowth-c5", 0.02, Some(1.0));
    let eta = solve_aggregated(&dm);
    let (pi, _) = induce_markov_strategy(&eta, &dm, DEFAULT_MAX_STEPS).unwrap();
    let runs = simulate_many(&dm, &pi, 10_000, 10);
    let est = summarize(&runs, dm.n_objectives);
    let mut worst_z: f64 = 0.0;
    for j in 0..dm.n_objectives {
        let lp_value = aggregated_cost(&eta, &dm, j);
        worst_z = worst_z.max((est.mean[j] - lp_value).abs() / est.stderr[j]);
    }
    let again = simulate_many(&dm, &pi, 10_000, 10);
    let identical = trajectories_to_jsonl(&runs, "h") == trajectories_to_jsonl(&again, "h");
    outcome(
        worst_det <= 1e-6 && worst_z <= 3.0 && identical,
        format!("deterministic gap {worst_det:.2e}; randomized max |z| = {worst_z:.2}; byte-identical reruns {identical}"),
    )
}

fn main() {
    let start = Instant::now();
    let mut shared = Shared { c5: Vec::new() };
    let mut results = vec![criterion_1(&mut shared)];
    results.push(criterion_2(&shared));
    results.push(criterion_3());
    results.push(criterion_4());
    results.push(criterion_5(&shared));
    results.push(criterion_6());
    results.push(criterion_7(&shared));
    results.push(criterion_8(&shared));
    results.push(criterion_9(&shared));
    results.push(criterion_10(&shared));
    let names = [
        "LP equivalence",
        "DP oracle agreement",
        "never-jump regime",
        "aggregation feasibility",
        "induced strategy domination",
        "constrained bracket",
        "dimensionality",
        "measure-change identities",
        "Barrow identity",
        "simulation consistency",
    ];
    let mut failed = 0;
    for (i, (r, name)) in results.iter().zip(names).enumerate() {
        println!(
            "criterion {:>2} {:<28} {}  {}",
            i + 1,
            name,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
        failed += usize::from(!r.pass);
    }
    println!(
        "acceptance: {}/10 passed in {:.1} s",
        10 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
