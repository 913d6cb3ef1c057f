//! Value iteration on the grid, and the Lagrangian bracket for one constraint.

use impulse_lp::benchmarks::{build_expgrowth, preset};
use impulse_lp::discretize::{build_grid, discretize};
use impulse_lp::oracle::{default_lambda_grid, dp_value, enumerate_policies, lagrangian_sweep};

fn main() {
    let mut p = preset("expgrowth-c5").unwrap();
    let spec = build_expgrowth(&p).unwrap();
    let dm = discretize(&spec, &build_grid(&spec, 0.1, 76).unwrap()).unwrap();
    let table = dp_value(&dm).unwrap();
    println!("value {:.9} after {} sweeps", table.initial_value(&dm), table.sweeps);
    println!("best control at x0: {:?}", table.best[dm.grid.x0_cell().unwrap()]);

    let tiny = discretize(&spec, &build_grid(&spec, 0.5, 3).unwrap()).unwrap();
    println!(
        "coarse grid: enumeration {:.9}, value iteration {:.9}",
        enumerate_policies(&tiny).unwrap(),
        dp_value(&tiny).unwrap().initial_value(&tiny)
    );

    p.constraint_bound = 1.0;
    let spec = build_expgrowth(&p).unwrap();
    let dm = discretize(&spec, &build_grid(&spec, 0.1, 76).unwrap()).unwrap();
    let rep = lagrangian_sweep(&dm, &default_lambda_grid()).unwrap();
    for pt in rep.points.iter().step_by(4) {
        println!("λ = {:>4}: bound {:.6}, costs {:?}", pt.lambda, pt.lower_bound, pt.costs);
    }
    println!("bracket [{:.6}, {:.6}] at λ = {}", rep.lower_bound, rep.upper_bound, rep.best_lambda);
}
