//! Runs the optimal strategy through the Monte Carlo simulator.

use impulse_lp::benchmarks::{build_expgrowth, preset};
use impulse_lp::discretize::{build_grid, discretize};
use impulse_lp::lp_aggregated::{build_aggregated_lp, AggregatedVector};
use impulse_lp::simulate::{estimate_to_csv, run, simulate_many, summarize, DEFAULT_MAX_EVENTS};
use impulse_lp::strategy::{induce_markov_strategy, DEFAULT_MAX_STEPS};

fn main() {
    let mut p = preset("expgrowth-c5").unwrap();
    p.constraint_bound = 1.0;
    let spec = build_expgrowth(&p).unwrap();
    let dm = discretize(&spec, &build_grid(&spec, 0.1, 76).unwrap()).unwrap();
    let sol = simplex::solve(&build_aggregated_lp(&dm).lp).unwrap();
    let eta = AggregatedVector::from_columns(&sol.primal, &dm);
    let (pi, _) = induce_markov_strategy(&eta, &dm, DEFAULT_MAX_STEPS).unwrap();

    let one = run(&dm, &pi, 42, DEFAULT_MAX_EVENTS);
    for e in &one.events {
        println!("origin {:>3} x = {:.3} dwell {:?} action {:?}", e.origin, e.state, e.dwell, e.action);
    }
    println!("costs {:?}", one.costs);

    let trajs = simulate_many(&dm, &pi, 10_000, 42);
    let est = summarize(&trajs, dm.n_objectives);
    println!("LP value {:.6}", sol.objective);
    print!("{}", estimate_to_csv(&est, "example"));
}
