//! Continuous problem description: extended states, the flow, jumps, costs,
//! the active region `V` and test functions along the flow.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretize::{DiscreteModel, Grid};
use crate::error::ModelError;

/// Threshold on the truncated future gradual cost separating `V` from `V^c`.
pub const EPS_V: f64 = 1e-12;

const SCAN_POINTS: usize = 4096;

/// A state `(x̃, t)` of the controlled process, or the cemetery `Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub xt: f64,
    pub t: f64,
    pub is_delta: bool,
}

impl ExtendedState {
    pub const DELTA: ExtendedState = ExtendedState {
        xt: 0.0,
        t: 0.0,
        is_delta: true,
    };

    pub fn new(xt: f64, t: f64) -> Self {
        Self {
            xt,
            t,
            is_delta: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    InV,
    InVc,
}

pub type FlowFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type VelocityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type JumpFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// `C^g_j(x̃, t)`.
pub type GradualCostFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// `C^I_j(x̃, t, a)`.
pub type ImpulseCostFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type HittingTimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The base flow `φ̃`, either in closed form or as an ODE `dx̃/du = G(x̃)`.
#[derive(Clone)]
pub enum Flow {
    Analytic(FlowFn),
    Ode { velocity: VelocityFn, step: f64 },
}

impl Flow {
    pub fn eval(&self, x: f64, u: f64) -> f64 {
        match self {
            Flow::Analytic(f) => f(x, u),
            Flow::Ode { velocity, step } => rk4(velocity.as_ref(), x, u, *step),
        }
    }
}

fn rk4(g: &dyn Fn(f64) -> f64, x: f64, u: f64, step: f64) -> f64 {
    if u == 0.0 {
        return x;
    }
    let n = (u.abs() / step).ceil().max(1.0) as usize;
    let h = u / n as f64;
    let mut y = x;
    for _ in 0..n {
        let k1 = g(y);
        let k2 = g(y + 0.5 * h * k1);
        let k3 = g(y + 0.5 * h * k2);
        let k4 = g(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

/// The continuous impulse-control problem.
#[derive(Clone)]
pub struct ModelSpec {
    pub flow: Flow,
    pub jump: JumpFn,
    /// `J + 1` gradual cost rates; index 0 is the objective.
    pub gradual_costs: Vec<GradualCostFn>,
    /// `J + 1` impulse costs.
    pub impulse_costs: Vec<ImpulseCostFn>,
    pub action_min: f64,
    pub action_max: f64,
    /// `δ > 0` with `Σ_j C^I_j ≥ δ`.
    pub impulse_floor: f64,
    pub x0: f64,
    /// `d_1..d_J`; `f64::INFINITY` leaves a constraint inactive.
    pub constraint_bounds: Vec<f64>,
    pub horizon_hint: Option<f64>,
    /// Lower bound on `|dx̃/du|` over reachable states; sets the origin lattice pitch.
    pub speed_floor: f64,
    /// Closed-form `θ̃*`, when known.
    pub hitting_time: Option<HittingTimeFn>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("n_objectives", &self.gradual_costs.len())
            .field("actions", &(self.action_min, self.action_max))
            .field("impulse_floor", &self.impulse_floor)
            .field("x0", &self.x0)
            .field("constraint_bounds", &self.constraint_bounds)
            .field("horizon_hint", &self.horizon_hint)
            .field("speed_floor", &self.speed_floor)
            .finish_non_exhaustive()
    }
}

/// A point `(x̃⁰, u)` on the orbit starting at the post-jump state `(x̃⁰, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitCoord {
    pub origin: f64,
    pub u: f64,
}

impl ModelSpec {
    pub fn n_objectives(&self) -> usize {
        self.gradual_costs.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let j1 = self.gradual_costs.len();
        if j1 == 0 || self.impulse_costs.len() != j1 {
            return Err(ModelError::Invalid(format!(
                "need matching gradual/impulse cost lists, got {} and {}",
                j1,
                self.impulse_costs.len()
            )));
        }
        if self.constraint_bounds.len() != j1 - 1 {
            return Err(ModelError::Invalid(format!(
                "expected {} constraint bounds, got {}",
                j1 - 1,
                self.constraint_bounds.len()
            )));
        }
        if self.constraint_bounds.iter().any(|d| d.is_nan() || *d < 0.0) {
            return Err(ModelError::Invalid("constraint bounds must be ≥ 0".into()));
        }
        if !(self.impulse_floor > 0.0) {
            return Err(ModelError::Invalid("impulse floor δ must be positive".into()));
        }
        if !(self.action_min <= self.action_max) || !self.action_min.is_finite() || !self.action_max.is_finite() {
            return Err(ModelError::Invalid("action bounds must satisfy a_min ≤ a_max".into()));
        }
        if !(self.speed_floor > 0.0) {
            return Err(ModelError::Invalid("speed floor must be positive".into()));
        }
        if let Flow::Ode { step, .. } = &self.flow {
            if !(*step > 0.0) {
                return Err(ModelError::Invalid("ODE step must be positive".into()));
            }
        }
        Ok(())
    }

    /// Truncation horizon for numerical integrals along the flow.
    pub fn horizon(&self) -> f64 {
        if let Some(h) = self.horizon_hint {
            return h;
        }
        match &self.hitting_time {
            Some(f) => {
                let t = f(self.x0).max(0.0);
                if t.is_finite() && t > 0.0 {
                    4.0 * t
                } else {
                    100.0
                }
            }
            None => 100.0,
        }
    }

    pub fn flow_base(&self, x: f64, u: f64) -> f64 {
        self.flow.eval(x, u)
    }

    pub fn flow_extended(&self, x: ExtendedState, u: f64) -> Result<ExtendedState, ModelError> {
        if x.is_delta {
            return Err(ModelError::Absorbed);
        }
        if !(u >= 0.0) {
            return Err(ModelError::NegativeDuration(u));
        }
        Ok(ExtendedState::new(self.flow.eval(x.xt, u), x.t + u))
    }

    pub fn apply_jump(&self, x: ExtendedState, a: f64) -> Result<ExtendedState, ModelError> {
        if x.is_delta {
            return Err(ModelError::Absorbed);
        }
        if !(a >= self.action_min && a <= self.action_max) {
            return Err(ModelError::ActionOutOfBounds {
                a,
                min: self.action_min,
                max: self.action_max,
            });
        }
        Ok(ExtendedState::new((self.jump)(x.xt, a), 0.0))
    }

    pub fn total_gradual_rate(&self, x: f64, t: f64) -> f64 {
        self.gradual_costs.iter().map(|c| c(x, t)).sum()
    }

    pub fn gradual_rate(&self, j: usize, x: f64, t: f64) -> f64 {
        (self.gradual_costs[j])(x, t)
    }

    pub fn impulse_cost(&self, j: usize, x: f64, t: f64, a: f64) -> f64 {
        (self.impulse_costs[j])(x, t, a)
    }

    /// Midpoint-rule estimate of `∫_0^{T_max} Σ_j C^g_j(φ(x, u)) du`.
    pub fn future_gradual_cost(&self, x: ExtendedState) -> f64 {
        if x.is_delta {
            return 0.0;
        }
        let h = self.horizon() / SCAN_POINTS as f64;
        (0..SCAN_POINTS)
            .map(|i| {
                let u = (i as f64 + 0.5) * h;
                self.total_gradual_rate(self.flow.eval(x.xt, u), x.t + u) * h
            })
            .sum()
    }

    pub fn classify(&self, x: ExtendedState) -> Region {
        if self.future_gradual_cost(x) > EPS_V {
            Region::InV
        } else {
            Region::InVc
        }
    }

    /// First time the orbit from `(x̃, 0)` reaches `V^c`; `+∞` if not before the horizon.
    pub fn theta_star(&self, x: f64) -> f64 {
        if let Some(f) = &self.hitting_time {
            return f(x).max(0.0);
        }
        let horizon = self.horizon();
        let h = horizon / SCAN_POINTS as f64;
        let positive = |u: f64| self.total_gradual_rate(self.flow.eval(x, u), u) > 0.0;
        let last = (0..SCAN_POINTS).rev().find(|&i| positive((i as f64 + 0.5) * h));
        let Some(i) = last else { return 0.0 };
        if i + 1 == SCAN_POINTS {
            return f64::INFINITY;
        }
        let (mut lo, mut hi) = ((i as f64 + 0.5) * h, (i as f64 + 1.5) * h);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if positive(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// `F(x̃⁰, u) = (φ̃(x̃⁰, u), u)`.
    pub fn from_orbit(&self, c: OrbitCoord) -> ExtendedState {
        ExtendedState::new(self.flow.eval(c.origin, c.u), c.u)
    }

    /// `F⁻¹(x̃, t) = (φ̃(x̃, −t), t)`; needs a flow that can run backwards.
    pub fn to_orbit(&self, x: ExtendedState) -> Result<OrbitCoord, ModelError> {
        if x.is_delta {
            return Err(ModelError::Absorbed);
        }
        Ok(OrbitCoord {
            origin: self.flow.eval(x.xt, -x.t),
            u: x.t,
        })
    }

    /// Membership in `D`: `0 ≤ u < θ̃*(x̃⁰)`.
    pub fn in_domain(&self, c: OrbitCoord) -> bool {
        c.u >= 0.0 && c.u < self.theta_star(c.origin)
    }
}

/// A ramp-type test function on grid cells, stored on an integer lattice so
/// the discrete Barrow identity holds without rounding.
///
/// `value(c) = value_ticks[c] · dt` and `chi(c) = chi_ticks[c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub dt: f64,
    pub value_ticks: Vec<i64>,
    pub chi_ticks: Vec<i64>,
}

impl TestFunction {
    pub fn value(&self, cell: usize) -> f64 {
        self.value_ticks[cell] as f64 * self.dt
    }

    pub fn chi(&self, cell: usize) -> f64 {
        self.chi_ticks[cell] as f64
    }

    /// Value at the `t = 0` cell of an origin, `0` for absorption.
    pub fn value_at_origin(&self, grid: &Grid, origin: Option<usize>) -> f64 {
        origin.map_or(0.0, |o| self.value(grid.orbit_start[o]))
    }

    /// Checks `w(k₂) − w(k₁) = Σ_{k₁ ≤ k < k₂} χw(k)·Δt` in ticks for every
    /// prefix of every orbit, with `w = 0` past the last cell.
    pub fn barrow_holds(&self, grid: &Grid) -> bool {
        for o in 0..grid.n_origins() {
            let start = grid.orbit_start[o];
            let len = grid.orbit_len[o];
            let mut acc = 0i64;
            for k in 0..=len {
                let end = if k == len { 0 } else { self.value_ticks[start + k] };
                if end - self.value_ticks[start] != acc {
                    return false;
                }
                if k < len {
                    acc += self.chi_ticks[start + k];
                }
            }
        }
        true
    }

    /// Nonnegative and nonincreasing along every orbit, or nonpositive and nondecreasing.
    pub fn is_monotone(&self, grid: &Grid) -> bool {
        if grid.n_cells() != self.chi_ticks.len() {
            return false;
        }
        let decreasing = self.value_ticks.iter().all(|&v| v >= 0) && self.chi_ticks.iter().all(|&c| c <= 0);
        let increasing = self.value_ticks.iter().all(|&v| v <= 0) && self.chi_ticks.iter().all(|&c| c >= 0);
        decreasing || increasing
    }
}

/// The positive decreasing ramp `w_{T1,T2,Γ̃}` on the grid.
///
/// `chi = −1` on cells of orbits in `gamma` whose time lies in `[T1, T2 ∧ θ*)`,
/// where `θ*` is the grid exit time of the orbit.
pub fn make_ramp_test_function(
    grid: &Grid,
    gamma: &[usize],
    t1: f64,
    t2: f64,
) -> Result<TestFunction, ModelError> {
    let k1 = grid_index(t1, grid.dt)?;
    let k2 = if t2.is_infinite() {
        usize::MAX
    } else {
        grid_index(t2, grid.dt)?
    };
    if !(t1 >= 0.0 && t1 < t2) {
        return Err(ModelError::Invalid(format!("need 0 ≤ T1 < T2, got {t1} and {t2}")));
    }
    let mut value_ticks = vec![0i64; grid.n_cells()];
    let mut chi_ticks = vec![0i64; grid.n_cells()];
    for &o in gamma {
        if o >= grid.n_origins() {
            return Err(ModelError::Invalid(format!("origin {o} out of range")));
        }
        let start = grid.orbit_start[o];
        let len = grid.orbit_len[o];
        let hi = k2.min(len);
        for k in 0..len {
            value_ticks[start + k] = hi.saturating_sub(k.max(k1)) as i64;
            if k >= k1 && k < hi {
                chi_ticks[start + k] = -1;
            }
        }
    }
    Ok(TestFunction {
        dt: grid.dt,
        value_ticks,
        chi_ticks,
    })
}

fn grid_index(t: f64, dt: f64) -> Result<usize, ModelError> {
    let r = t / dt;
    let k = r.round();
    if !(t >= 0.0) || (r - k).abs() > 1e-9 {
        return Err(ModelError::NotGridAligned { t, dt });
    }
    Ok(k as usize)
}

/// Finite-difference derivative along the flow, `(w(next(y)) − w(y)) / Δt`,
/// with `w = 0` past the last cell of an orbit.
pub fn chi_finite_difference(dm: &DiscreteModel, values: &[f64]) -> Vec<f64> {
    let grid = &dm.grid;
    let mut chi = vec![0.0; grid.n_cells()];
    for o in 0..grid.n_origins() {
        let start = grid.orbit_start[o];
        let len = grid.orbit_len[o];
        for k in 0..len {
            let next = if k + 1 < len { values[start + k + 1] } else { 0.0 };
            chi[start + k] = (next - values[start + k]) / grid.dt;
        }
    }
    chi
}
