//! Solves the aggregated LP and compares it with the occupation LP.

use impulse_lp::benchmarks::{build_expgrowth, preset};
use impulse_lp::discretize::{build_grid, discretize};
use impulse_lp::lp_aggregated::{build_aggregated_lp, dimension_report, verify_aggregation_feasibility, AggregatedVector};
use impulse_lp::lp_occupation::build_occupation_lp;

fn main() {
    let mut p = preset("expgrowth-c5").unwrap();
    p.constraint_bound = 1.0;
    let spec = build_expgrowth(&p).unwrap();
    let dm = discretize(&spec, &build_grid(&spec, 0.1, 76).unwrap()).unwrap();

    let d = dimension_report(&dm);
    println!("occupation columns {} (product {})", d.occupation_columns, d.occupation_product_dimension);
    println!("aggregated columns {} (product {})", d.aggregated_columns, d.aggregated_product_dimension);

    let agg = simplex::solve(&build_aggregated_lp(&dm).lp).unwrap();
    let occ = simplex::solve(&build_occupation_lp(&dm).lp).unwrap();
    println!("with total impulse ≤ 1: aggregated {:.9}, occupation {:.9}", agg.objective, occ.objective);

    let eta = AggregatedVector::from_columns(&agg.primal, &dm);
    let rep = verify_aggregation_feasibility(&eta, &dm);
    println!("max balance residual {:.2e}", rep.max_residual);
    for c in 0..dm.n_cells() {
        for a in 0..dm.n_actions() {
            let m = eta.jump(c, a);
            if m > 1e-12 {
                println!("  jump mass {m:.4} at x = {:.3} with a = {:.2}", dm.entry_state[c], dm.grid.actions[a]);
            }
        }
    }
}
