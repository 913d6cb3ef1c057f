//! Builds the exponential-growth model and walks one trajectory by hand.

use impulse_lp::benchmarks::{build_expgrowth, preset};
use impulse_lp::model::{ExtendedState, OrbitCoord};

fn main() {
    let p = preset("expgrowth-c5").expect("known preset");
    let m = build_expgrowth(&p).expect("valid parameters");
    println!("x0 = {}, K = {}, c = {}, actions in [{}, {}]", p.x0, p.k, p.c, p.a_min, p.a_max);
    println!("never jumping costs {:.6}", p.no_impulse_cost());

    let mut x = ExtendedState::new(p.x0, 0.0);
    println!("start {:?} in {:?}, θ* = {:.4}", x, m.classify(x), m.theta_star(x.xt));
    x = m.flow_extended(x, 0.3).unwrap();
    println!("after flowing 0.3: {:?}", x);
    x = m.apply_jump(x, 1.0).unwrap();
    println!("after a = 1: {:?} in {:?}", x, m.classify(x));
    println!("remaining gradual cost {:.6}", m.future_gradual_cost(x));

    let c = m.to_orbit(ExtendedState::new(2.0, 0.5)).unwrap();
    println!("(2, 0.5) lies on the orbit of {:.6} at u = {}", c.origin, c.u);
    assert!(m.in_domain(OrbitCoord { origin: c.origin, u: 0.1 }));
}
