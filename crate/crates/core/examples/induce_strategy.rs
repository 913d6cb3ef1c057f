//! Turns an aggregated LP solution into a Markov strategy and checks domination.

use impulse_lp::benchmarks::{build_expgrowth, preset};
use impulse_lp::discretize::{build_grid, discretize};
use impulse_lp::lp_aggregated::{aggregate, aggregated_cost, build_aggregated_lp, AggregatedVector};
use impulse_lp::strategy::{check_domination, induce_markov_strategy, strategy_occupation, DEFAULT_MAX_STEPS};

fn main() {
    let mut p = preset("expgrowth-c5").unwrap();
    p.constraint_bound = 1.0;
    let spec = build_expgrowth(&p).unwrap();
    let dm = discretize(&spec, &build_grid(&spec, 0.1, 76).unwrap()).unwrap();
    let sol = simplex::solve(&build_aggregated_lp(&dm).lp).unwrap();
    let eta = AggregatedVector::from_columns(&sol.primal, &dm);

    let (pi, work) = induce_markov_strategy(&eta, &dm, DEFAULT_MAX_STEPS).unwrap();
    println!("{} steps, randomized: {}", pi.steps.len(), pi.is_randomized());
    for (step, kernels) in pi.steps.iter().enumerate() {
        for (origin, k) in kernels {
            let dwells: Vec<_> = k.p_dwell.iter().enumerate().filter(|(_, &q)| q > 0.0).collect();
            println!("step {step} origin {origin}: dwell {dwells:?}, {} atoms", k.atoms());
        }
    }
    println!("step 0 mass {:.6}", work.steps[0].iter().map(|o| o.ratio).sum::<f64>());

    let tilde = aggregate(&strategy_occupation(&pi, &dm, DEFAULT_MAX_STEPS).occupation, &dm);
    let rep = check_domination(&tilde, &eta);
    println!("dominated: {} (max violation {:.2e})", rep.dominated, rep.max_violation);
    for j in 0..dm.n_objectives {
        println!("objective {j}: LP {:.9}, strategy {:.9}", aggregated_cost(&eta, &dm, j), aggregated_cost(&tilde, &dm, j));
    }
}
