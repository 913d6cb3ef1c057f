//! Solves the occupation-measure LP and reads back a stationary strategy.

use impulse_lp::benchmarks::{build_expgrowth, preset};
use impulse_lp::discretize::{build_grid, discretize};
use impulse_lp::lp_occupation::{build_occupation_lp, characteristic_residual, extract_stationary_strategy};

fn main() {
    let spec = build_expgrowth(&preset("expgrowth-c5").unwrap()).unwrap();
    let dm = discretize(&spec, &build_grid(&spec, 0.1, 76).unwrap()).unwrap();
    let lp = build_occupation_lp(&dm);
    println!("{} columns, {} balance rows", lp.lp.n_vars(), lp.lp.n_eq());

    let sol = simplex::solve(&lp.lp).unwrap();
    println!("{:?} value {:.9} after {} pivots", sol.status, sol.objective, sol.diagnostics.iterations);

    let mu = lp.vector(&sol.primal);
    println!("balance residual {:.2e}", characteristic_residual(&mu, &dm));
    for (col, mass) in mu.support() {
        println!("  cell {:>3} dwell {:?} action {} mass {mass:.6}", col.cell, col.dwell, col.action);
    }
    let pi = extract_stationary_strategy(&mu, &dm);
    println!("deterministic: {}", pi.is_deterministic());
}
