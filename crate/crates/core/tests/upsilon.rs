use impulse_lp::benchmarks::{
    build_expgrowth, preset, ramp_constraint_aggregated, ramp_constraint_upsilon1, to_upsilon1, to_upsilon2, upsilon,
    verify_objective_equality, BaseBins, BaseRamp, UpsilonMeasures,
};
use impulse_lp::discretize::{build_grid, discretize, DiscreteModel};
use impulse_lp::lp_aggregated::{aggregate, build_aggregated_lp, AggregatedVector};
use impulse_lp::model::{ExtendedState, Region};
use impulse_lp::strategy::{random_markov_strategy, strategy_occupation, DEFAULT_MAX_STEPS};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c5(dt: f64, n_actions: usize) -> DiscreteModel {
    let spec = build_expgrowth(&preset("expgrowth-c5").unwrap()).unwrap();
    discretize(&spec, &build_grid(&spec, dt, n_actions).unwrap()).unwrap()
}

fn feasible_eta(dm: &DiscreteModel, seed: u64) -> AggregatedVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = random_markov_strategy(dm, 4, 0.5, &mut rng);
    aggregate(&strategy_occupation(&pi, dm, DEFAULT_MAX_STEPS).occupation, dm)
}

#[test]
fn single_jump_masses() {
    let dm = c5(0.1, 76);
    let x0 = dm.grid.x0_cell().unwrap();
    let a = 60;
    let size = dm.grid.actions[a];
    assert!((size - 1.7).abs() < 1e-12);
    let mut eta = AggregatedVector::zeros(&dm);
    *eta.jump_mut(x0, a) = 1.0;
    let u1 = to_upsilon1(&eta, &dm);
    assert!((u1.u1_2.iter().sum::<f64>() - size).abs() < 1e-12);
    let u2 = to_upsilon2(&eta, &dm);
    assert!((u2.u2_2.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((u2.action_marginal()[a] - 1.0).abs() < 1e-12);
    // Every bin inside [1, 2.7] carries a full pitch of mass.
    let (b0, b1) = u1.bins.bounds(3);
    assert!(b0 >= 1.0 && b1 <= 2.7);
    assert!((u1.u1_2[3] - dm.grid.pitch).abs() < 1e-12);
}

#[test]
fn bins_cover_every_jump() {
    let dm = c5(0.1, 9);
    let bins = BaseBins::for_model(&dm);
    let a_max = dm.grid.actions.last().copied().unwrap();
    for c in 0..dm.n_cells() {
        let x = dm.entry_state[c];
        let covered: f64 = bins.overlaps(x, x + a_max).iter().map(|(_, l)| l).sum();
        assert!((covered - a_max).abs() < 1e-12);
    }
    assert!(bins.overlaps(1.0, 1.0).is_empty());
}

#[test]
fn lp_optimum_agrees_in_all_three_forms() {
    let dm = c5(0.1, 76);
    let sol = simplex::solve(&build_aggregated_lp(&dm).lp).unwrap();
    let eta = AggregatedVector::from_columns(&sol.primal, &dm);
    let rep = verify_objective_equality(&eta, &dm);
    assert!(rep.agree, "{rep:?}");
    assert!((rep.aggregated_form - sol.objective).abs() < 1e-9);
}

#[test]
fn zero_cost_model_has_no_measures() {
    let spec = build_expgrowth(&preset("zero-cost").unwrap()).unwrap();
    assert_eq!(spec.classify(ExtendedState::new(1.0, 0.0)), Region::InVc);
    let dm = discretize(&spec, &build_grid(&spec, 0.1, 5).unwrap()).unwrap();
    let u = upsilon(&AggregatedVector::zeros(&dm), &dm);
    assert!(u.upsilon1.u1_1.is_empty());
    assert_eq!(u.upsilon1.bins.len, 0);
    assert!(verify_objective_equality(&AggregatedVector::zeros(&dm), &dm).agree);
}

fn combine(a: &UpsilonMeasures, b: &UpsilonMeasures, s: f64, t: f64) -> Vec<f64> {
    let mut out: Vec<f64> = a
        .upsilon1
        .u1_2
        .iter()
        .zip(&b.upsilon1.u1_2)
        .map(|(x, y)| s * x + t * y)
        .collect();
    out.extend(a.upsilon2.u2_2.iter().zip(&b.upsilon2.u2_2).map(|(x, y)| s * x + t * y));
    out.extend(
        a.upsilon1
            .u1_1
            .iter()
            .zip(&b.upsilon1.u1_1)
            .map(|(x, y)| s * x.mass + t * y.mass),
    );
    out
}

fn flatten(u: &UpsilonMeasures) -> Vec<f64> {
    let mut out = u.upsilon1.u1_2.clone();
    out.extend(&u.upsilon2.u2_2);
    out.extend(u.upsilon1.u1_1.iter().map(|s| s.mass));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transforms_are_linear(s1 in any::<u64>(), s2 in any::<u64>(), s in 0.0f64..3.0, t in 0.0f64..3.0) {
        let dm = c5(0.1, 9);
        let e1 = feasible_eta(&dm, s1);
        let e2 = feasible_eta(&dm, s2);
        let mut mix = e1.scaled(s);
        mix.add_scaled(&e2, t);
        let lhs = flatten(&upsilon(&mix, &dm));
        let rhs = combine(&upsilon(&e1, &dm), &upsilon(&e2, &dm), s, t);
        for (x, y) in lhs.iter().zip(&rhs) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn objective_forms_agree(seed in any::<u64>()) {
        let dm = c5(0.1, 9);
        let eta = feasible_eta(&dm, seed);
        prop_assert!(verify_objective_equality(&eta, &dm).agree);
        let u2 = to_upsilon2(&eta, &dm);
        let marginal = u2.action_marginal();
        for a in 0..dm.n_actions() {
            let direct: f64 = (0..dm.n_cells()).map(|c| eta.jump(c, a)).sum();
            prop_assert!((marginal[a] - direct).abs() <= 1e-12);
        }
    }

    #[test]
    fn ramp_constraints_correspond_on_bin_edges(seed in any::<u64>(), m in 0i64..12, len in 1i64..12) {
        let dm = c5(0.1, 9);
        let eta = feasible_eta(&dm, seed);
        let g = &dm.grid;
        let w = BaseRamp { lo: g.lattice_state(m), hi: g.lattice_state(m + len) };
        let direct = ramp_constraint_aggregated(&eta, &dm, &w);
        let via = ramp_constraint_upsilon1(&to_upsilon1(&eta, &dm), &dm, &w);
        prop_assert!((direct - via).abs() <= 1e-9, "{} vs {}", direct, via);
    }
}
