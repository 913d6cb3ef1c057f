use std::f64::consts::E;
use std::sync::Arc;

use impulse_lp::benchmarks::{build_expgrowth, preset, toy_chain, ExpGrowthParams};
use impulse_lp::discretize::{
    build_grid, build_grid_with_cap, discretize, DiscreteModel, DiscreteParts, JumpTarget, OrbitParts,
};
use impulse_lp::error::{DiscretizeError, ModelError};
use impulse_lp::model::{
    chi_finite_difference, make_ramp_test_function, ExtendedState, Flow, OrbitCoord, Region,
};
use proptest::prelude::*;

fn c5() -> ExpGrowthParams {
    preset("expgrowth-c5").unwrap()
}

#[test]
fn exponential_flow_matches_closed_form() {
    let m = build_expgrowth(&c5()).unwrap();
    let x = m.flow_extended(ExtendedState::new(1.0, 0.0), 0.5).unwrap();
    assert!((x.xt - 0.5f64.exp()).abs() < 1e-15);
    assert_eq!(x.t, 0.5);
}

#[test]
fn ode_flow_agrees_with_analytic() {
    let ode = Flow::Ode {
        velocity: Arc::new(|x| x),
        step: 0.01,
    };
    assert!((ode.eval(1.0, 1.0) - E).abs() < 1e-9);
    assert_eq!(ode.eval(2.0, 0.0), 2.0);
}

#[test]
fn delta_is_absorbing() {
    let m = build_expgrowth(&c5()).unwrap();
    assert_eq!(m.flow_extended(ExtendedState::DELTA, 1.0), Err(ModelError::Absorbed));
    assert_eq!(m.apply_jump(ExtendedState::DELTA, 1.0), Err(ModelError::Absorbed));
    assert_eq!(m.future_gradual_cost(ExtendedState::DELTA), 0.0);
}

#[test]
fn negative_duration_and_bad_action_are_rejected() {
    let m = build_expgrowth(&c5()).unwrap();
    let x = ExtendedState::new(1.0, 0.0);
    assert!(matches!(m.flow_extended(x, -0.1), Err(ModelError::NegativeDuration(_))));
    assert!(matches!(m.apply_jump(x, 3.0), Err(ModelError::ActionOutOfBounds { .. })));
    let y = m.apply_jump(ExtendedState::new(1.0, 0.7), 1.0).unwrap();
    assert_eq!((y.xt, y.t), (2.0, 0.0));
}

#[test]
fn classification_and_hitting_time() {
    let m = build_expgrowth(&c5()).unwrap();
    assert_eq!(m.classify(ExtendedState::new(1.0, 0.0)), Region::InV);
    assert_eq!(m.classify(ExtendedState::new(3.0, 0.0)), Region::InVc);
    assert!((m.theta_star(1.0) - 1.0).abs() < 1e-15);
    assert_eq!(m.theta_star(E + 0.1), 0.0);
}

#[test]
fn scanned_hitting_time_matches_closed_form() {
    let mut m = build_expgrowth(&c5()).unwrap();
    m.hitting_time = None;
    m.horizon_hint = Some(4.0);
    assert!((m.theta_star(1.0) - 1.0).abs() < 1e-9);
    assert!((m.theta_star(2.0) - (E / 2.0).ln()).abs() < 1e-9);
    assert_eq!(m.theta_star(3.0), 0.0);
}

#[test]
fn zero_cost_model_has_empty_v() {
    let m = build_expgrowth(&preset("zero-cost").unwrap()).unwrap();
    assert_eq!(m.classify(ExtendedState::new(1.0, 0.0)), Region::InVc);
    let grid = build_grid(&m, 0.1, 5).unwrap();
    assert_eq!(grid.n_cells(), 0);
    assert_eq!(grid.x0_origin, None);
}

#[test]
fn orbit_coordinates_round_trip() {
    let m = build_expgrowth(&c5()).unwrap();
    let c = OrbitCoord { origin: 1.2, u: 0.3 };
    let x = m.from_orbit(c);
    let back = m.to_orbit(x).unwrap();
    assert!((back.origin - 1.2).abs() < 1e-14 && back.u == 0.3);
    assert!(m.in_domain(c));
    assert!(!m.in_domain(OrbitCoord { origin: 1.0, u: 1.0 }));
}

#[test]
fn invalid_params_are_rejected() {
    let mut p = c5();
    p.x0 = 3.0;
    assert!(build_expgrowth(&p).is_err());
    let mut p = c5();
    p.a_min = 0.0;
    assert!(build_expgrowth(&p).is_err());
}

#[test]
fn grid_cell_counts() {
    let m = build_expgrowth(&c5()).unwrap();
    let grid = build_grid(&m, 0.1, 76).unwrap();
    let x0 = grid.x0_origin.unwrap();
    assert_eq!(grid.origins[x0], 1.0);
    assert_eq!(grid.orbit_len[x0], 10);
    for (o, &x) in grid.origins.iter().enumerate() {
        let expected = ((E / x).ln() / 0.1 - 1e-9).ceil() as usize;
        assert_eq!(grid.orbit_len[o], expected);
    }
    assert!(grid.origins.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(grid.actions.len(), 76);
    assert_eq!(grid.actions[0], 0.5);
    assert_eq!(grid.actions[75], 2.0);
}

#[test]
fn snapping_prefers_the_smaller_state_on_ties() {
    let m = build_expgrowth(&c5()).unwrap();
    let grid = build_grid(&m, 0.5, 4).unwrap();
    assert_eq!(grid.pitch, 0.5);
    assert_eq!(grid.snap(1.0), 0);
    assert_eq!(grid.snap(1.25), 0);
    assert_eq!(grid.snap(1.2500001), 1);
    assert_eq!(grid.snap(1.75), 1);
    assert_eq!(grid.snap(1.74), 1);
}

#[test]
fn jumps_past_k_are_absorbed() {
    let m = build_expgrowth(&c5()).unwrap();
    let grid = build_grid(&m, 0.1, 76).unwrap();
    let dm = discretize(&m, &grid).unwrap();
    let x0 = grid.x0_cell().unwrap();
    assert_eq!(dm.jump_to(x0, 75), JumpTarget::Absorbed);
    assert!(matches!(dm.jump_to(x0, 0), JumpTarget::Origin(_)));
    for c in 0..dm.n_cells() {
        for a in 0..dm.n_actions() {
            if let JumpTarget::Origin(o) = dm.jump_to(c, a) {
                let y = dm.entry_state[c] + grid.actions[a];
                assert!((grid.origins[o] - y).abs() <= grid.pitch / 2.0 + 1e-12);
            }
        }
    }
    assert!(dm.diagnostics.max_snap_distance <= grid.pitch / 2.0 + 1e-12);
}

#[test]
fn discrete_costs_use_midpoints_and_entry_states() {
    let m = build_expgrowth(&c5()).unwrap();
    let grid = build_grid(&m, 0.1, 4).unwrap();
    let dm = discretize(&m, &grid).unwrap();
    let x0 = grid.x0_cell().unwrap();
    assert_eq!(dm.dwell_rate(x0, 0), 5.0);
    assert!((dm.dwell_cost(x0, 0) - 0.5).abs() < 1e-15);
    assert_eq!(dm.dwell_rate(x0, 1), 0.0);
    assert_eq!(dm.jump_cost(x0, 1, 0), 1.0);
    assert_eq!(dm.jump_cost(x0, 1, 1), 1.0);
    assert!((dm.entry_state[x0 + 3] - 0.3f64.exp()).abs() < 1e-15);
    let last = x0 + grid.orbit_len[grid.x0_origin.unwrap()] - 1;
    assert!((dm.exit_state_of(last) - 1.0f64.exp()).abs() < 1e-12);
}

#[test]
fn origin_cap_is_enforced() {
    let m = build_expgrowth(&c5()).unwrap();
    assert_eq!(
        build_grid_with_cap(&m, 0.02, 76, 5),
        Err(DiscretizeError::TooManyOrigins(5))
    );
    assert_eq!(build_grid(&m, 0.0, 5), Err(DiscretizeError::BadStep(0.0)));
    assert_eq!(build_grid(&m, 0.1, 0), Err(DiscretizeError::NoActions));
}

#[test]
fn from_parts_validates_tables() {
    let good = DiscreteParts {
        dt: 1.0,
        actions: vec![1.0],
        orbits: vec![OrbitParts {
            origin: 0.0,
            entry_states: vec![0.0],
            exit_state: 1.0,
        }],
        x0_origin: Some(0),
        n_objectives: 1,
        dwell_rate: vec![0.5],
        jump_cost: vec![0.3],
        jump_to: vec![JumpTarget::Absorbed],
        constraint_bounds: vec![],
        impulse_floor: 0.1,
    };
    assert!(DiscreteModel::from_parts(good.clone()).is_ok());
    let mut bad = good.clone();
    bad.jump_cost = vec![0.01];
    assert!(DiscreteModel::from_parts(bad).is_err());
    let mut bad = good.clone();
    bad.jump_to = vec![JumpTarget::Origin(3)];
    assert!(DiscreteModel::from_parts(bad).is_err());
    let mut bad = good;
    bad.dwell_rate = vec![-1.0];
    assert!(DiscreteModel::from_parts(bad).is_err());
}

#[test]
fn finite_difference_of_a_ramp_is_its_chi() {
    let dm = toy_chain(6, 2).unwrap();
    let w = make_ramp_test_function(&dm.grid, &[0], 1.0, 4.0).unwrap();
    let values: Vec<f64> = (0..6).map(|c| w.value(c)).collect();
    let chi = chi_finite_difference(&dm, &values);
    for c in 0..6 {
        assert_eq!(chi[c], w.chi(c), "cell {c}");
    }
    assert!(w.is_monotone(&dm.grid));
}

#[test]
fn ramp_times_must_be_grid_aligned() {
    let dm = toy_chain(4, 1).unwrap();
    assert!(matches!(
        make_ramp_test_function(&dm.grid, &[0], 0.5, 2.0),
        Err(ModelError::NotGridAligned { .. })
    ));
    assert!(make_ramp_test_function(&dm.grid, &[0], 2.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn flow_semigroup(x in 0.5f64..3.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let m = build_expgrowth(&c5()).unwrap();
        let a = m.flow_base(m.flow_base(x, s), t);
        let b = m.flow_base(x, s + t);
        prop_assert!((a - b).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn ramps_satisfy_barrow(k1 in 0usize..12, len in 1usize..12, infinite in any::<bool>(), mask in any::<u64>()) {
        let m = build_expgrowth(&c5()).unwrap();
        let grid = build_grid(&m, 0.1, 20).unwrap();
        let gamma: Vec<usize> = (0..grid.n_origins()).filter(|o| mask >> (o % 64) & 1 == 1).collect();
        let t2 = if infinite { f64::INFINITY } else { (k1 + len) as f64 * 0.1 };
        let w = make_ramp_test_function(&grid, &gamma, k1 as f64 * 0.1, t2).unwrap();
        prop_assert!(w.barrow_holds(&grid));
        prop_assert!(w.is_monotone(&grid));
    }

    #[test]
    fn jump_targets_stay_in_grid(dt in prop::sample::select(vec![0.25, 0.1, 0.05]), c in 0.5f64..6.0) {
        let mut p = c5();
        p.c = c;
        let m = build_expgrowth(&p).unwrap();
        let grid = build_grid(&m, dt, 9).unwrap();
        let dm = discretize(&m, &grid).unwrap();
        for t in &dm.jump_to {
            if let JumpTarget::Origin(o) = t {
                prop_assert!(*o < grid.n_origins());
            }
        }
        prop_assert_eq!(dm.entry_state.len(), grid.n_cells());
    }
}
