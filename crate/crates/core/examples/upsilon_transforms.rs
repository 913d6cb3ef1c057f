//! Maps an aggregated solution to the measures on base states and checks the objective forms.

use impulse_lp::benchmarks::{
    build_expgrowth, preset, ramp_constraint_aggregated, ramp_constraint_upsilon1, upsilon, verify_objective_equality,
    BaseRamp,
};
use impulse_lp::discretize::{build_grid, discretize};
use impulse_lp::lp_aggregated::{build_aggregated_lp, AggregatedVector};

fn main() {
    let spec = build_expgrowth(&preset("expgrowth-c5").unwrap()).unwrap();
    let dm = discretize(&spec, &build_grid(&spec, 0.1, 76).unwrap()).unwrap();
    let sol = simplex::solve(&build_aggregated_lp(&dm).lp).unwrap();
    let eta = AggregatedVector::from_columns(&sol.primal, &dm);

    let u = upsilon(&eta, &dm);
    println!("{} bins of width {}", u.upsilon1.bins.len, u.upsilon1.bins.pitch);
    for (b, m) in u.upsilon1.u1_2.iter().enumerate().filter(|(_, &m)| m > 0.0) {
        let (lo, hi) = u.upsilon1.bins.bounds(b);
        println!("  [{lo:.2}, {hi:.2}) jump-smeared mass {m:.4}");
    }

    let rep = verify_objective_equality(&eta, &dm);
    println!(
        "objective: aggregated {:.9}, first form {:.9}, second form {:.9}",
        rep.aggregated_form, rep.upsilon1_form, rep.upsilon2_form
    );

    let g = &dm.grid;
    let w = BaseRamp { lo: g.lattice_state(2), hi: g.lattice_state(10) };
    println!(
        "ramp constraint: aggregated {:.9}, on measures {:.9}",
        ramp_constraint_aggregated(&eta, &dm, &w),
        ramp_constraint_upsilon1(&u.upsilon1, &dm, &w)
    );
}
