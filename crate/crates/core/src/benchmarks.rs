//! Built-in models: the exponential-growth family, small hand-built chains,
//! and the change-of-measure transforms used to cross-check objective forms.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretize::{DiscreteModel, DiscreteParts, JumpTarget, OrbitParts};
use crate::error::{DiscretizeError, ModelError};
use crate::lp_aggregated::{aggregated_cost, AggregatedVector};
use crate::model::{Flow, ModelSpec};

/// `dx̃/du = x̃`, jumps `x̃ + a`, `C^g_0 = c·1{x̃ < K}`, `C^I_0 = a`.
///
/// Objective 1 always exists with `C^I_1 = a` and `C^g_1 = budget_rate·1{x̃ < K}`;
/// its bound is `constraint_bound`, infinite by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpGrowthParams {
    pub x0: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub c: f64,
    pub a_min: f64,
    pub a_max: f64,
    #[serde(default = "infinity")]
    pub constraint_bound: f64,
    #[serde(default)]
    pub budget_rate: f64,
}

fn infinity() -> f64 {
    f64::INFINITY
}

impl ExpGrowthParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.x0 > 0.0 && self.x0 < self.k) {
            return Err(ModelError::Invalid(format!("need 0 < x0 < K, got x0 = {}, K = {}", self.x0, self.k)));
        }
        if !(self.a_min > 0.0 && self.a_min <= self.a_max && self.a_max.is_finite()) {
            return Err(ModelError::Invalid(format!(
                "need 0 < a_min ≤ a_max, got [{}, {}]",
                self.a_min, self.a_max
            )));
        }
        if !(self.c >= 0.0 && self.budget_rate >= 0.0) {
            return Err(ModelError::Invalid("cost levels must be nonnegative".into()));
        }
        if self.constraint_bound.is_nan() || self.constraint_bound < 0.0 {
            return Err(ModelError::Invalid("constraint bound must be ≥ 0".into()));
        }
        Ok(())
    }

    /// `H = c·ln(K/x₀)`, the total cost of never jumping.
    pub fn no_impulse_cost(&self) -> f64 {
        self.c * (self.k / self.x0).ln()
    }
}

pub fn build_expgrowth(p: &ExpGrowthParams) -> Result<ModelSpec, ModelError> {
    p.validate()?;
    let (k, c, b) = (p.k, p.c, p.budget_rate);
    let active = c > 0.0 || b > 0.0;
    Ok(ModelSpec {
        flow: Flow::Analytic(Arc::new(|x, u| x * u.exp())),
        jump: Arc::new(|x, a| x + a),
        gradual_costs: vec![
            Arc::new(move |x, _| if x < k { c } else { 0.0 }),
            Arc::new(move |x, _| if x < k { b } else { 0.0 }),
        ],
        impulse_costs: vec![Arc::new(|_, _, a| a), Arc::new(|_, _, a| a)],
        action_min: p.a_min,
        action_max: p.a_max,
        impulse_floor: p.a_min,
        x0: p.x0,
        constraint_bounds: vec![p.constraint_bound],
        horizon_hint: None,
        speed_floor: p.x0,
        hitting_time: Some(Arc::new(move |x| if active && x < k { (k / x).ln() } else { 0.0 })),
    })
}

pub const PRESET_NAMES: [&str; 4] = ["expgrowth-c5", "expgrowth-c1", "zero-cost", "mandatory-jump"];

/// Named parameter sets addressable from the command line.
///
/// * `expgrowth-c5`: `x₀ = 1, K = e, c = 5, A = [0.5, 2]`
/// * `expgrowth-c1`: `c = 1, A = [0.5, 1]`
/// * `zero-cost`: `c = 0`
/// * `mandatory-jump`: `expgrowth-c5` where dwelling also charges objective 1, bound 0
pub fn preset(name: &str) -> Option<ExpGrowthParams> {
    let base = ExpGrowthParams {
        x0: 1.0,
        k: std::f64::consts::E,
        c: 5.0,
        a_min: 0.5,
        a_max: 2.0,
        constraint_bound: f64::INFINITY,
        budget_rate: 0.0,
    };
    match name {
        "expgrowth-c5" => Some(base),
        "expgrowth-c1" => Some(ExpGrowthParams {
            c: 1.0,
            a_max: 1.0,
            ..base
        }),
        "zero-cost" => Some(ExpGrowthParams { c: 0.0, ..base }),
        "mandatory-jump" => Some(ExpGrowthParams {
            budget_rate: 1.0,
            constraint_bound: 0.0,
            ..base
        }),
        _ => None,
    }
}

/// One orbit of `n_cells` unit cells with unit dwell rate; action `a` costs
/// `0.1·(a + 1)` and is absorbed.
pub fn toy_chain(n_cells: usize, n_actions: usize) -> Result<DiscreteModel, DiscretizeError> {
    DiscreteModel::from_parts(DiscreteParts {
        dt: 1.0,
        actions: (0..n_actions).map(|a| a as f64 + 1.0).collect(),
        orbits: vec![OrbitParts {
            origin: 0.0,
            entry_states: (0..n_cells).map(|k| k as f64).collect(),
            exit_state: n_cells as f64,
        }],
        x0_origin: Some(0),
        n_objectives: 1,
        dwell_rate: vec![1.0; n_cells],
        jump_cost: (0..n_cells * n_actions).map(|i| 0.1 * ((i % n_actions) as f64 + 1.0)).collect(),
        jump_to: vec![JumpTarget::Absorbed; n_cells * n_actions],
        constraint_bounds: Vec::new(),
        impulse_floor: 0.1,
    })
}

/// A stretch of flow through one cell carrying `η_box` mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSegment {
    pub x_start: f64,
    pub x_end: f64,
    pub mass: f64,
    /// Objective-0 gradual rate on the segment.
    pub rate: f64,
}

/// Bins `[anchor + m·pitch, anchor + (m+1)·pitch)` for `m ≥ first`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseBins {
    pub anchor: f64,
    pub pitch: f64,
    pub first: i64,
    pub len: usize,
}

impl BaseBins {
    /// Covers every jump interval `[x, x + a]` of the model.
    pub fn for_model(dm: &DiscreteModel) -> Self {
        let g = &dm.grid;
        let a_max = g.actions.iter().copied().fold(0.0, f64::max);
        let lo = dm.entry_state.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = dm.entry_state.iter().copied().fold(f64::NEG_INFINITY, f64::max) + a_max;
        if !lo.is_finite() {
            return Self {
                anchor: g.anchor,
                pitch: g.pitch,
                first: 0,
                len: 0,
            };
        }
        let first = ((lo - g.anchor) / g.pitch).floor() as i64;
        let last = ((hi - g.anchor) / g.pitch).floor() as i64;
        Self {
            anchor: g.anchor,
            pitch: g.pitch,
            first,
            len: (last - first + 1) as usize,
        }
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        let m = self.first + i as i64;
        (self.anchor + m as f64 * self.pitch, self.anchor + (m + 1) as f64 * self.pitch)
    }

    /// `(bin, |[lo, hi] ∩ bin|)` for every bin the interval touches.
    pub fn overlaps(&self, lo: f64, hi: f64) -> Vec<(usize, f64)> {
        if !(hi > lo) || self.len == 0 {
            return Vec::new();
        }
        let i0 = (((lo - self.anchor) / self.pitch).floor() as i64 - self.first).max(0) as usize;
        let i1 = ((((hi - self.anchor) / self.pitch).floor() as i64 - self.first).max(0) as usize).min(self.len - 1);
        (i0..=i1)
            .filter_map(|i| {
                let (b0, b1) = self.bounds(i);
                let len = hi.min(b1) - lo.max(b0);
                (len > 0.0).then_some((i, len))
            })
            .collect()
    }
}

/// `Υ¹₁` as flow segments and `Υ¹₂` as bin masses of the smeared jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Upsilon1 {
    pub u1_1: Vec<FlowSegment>,
    pub bins: BaseBins,
    pub u1_2: Vec<f64>,
}

/// `Υ̂²₁ = Υ¹₁` and `Υ̂²₂` per `(bin, action)`, scaled by `1/a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Upsilon2 {
    pub u2_1: Vec<FlowSegment>,
    pub bins: BaseBins,
    pub actions: Vec<f64>,
    /// `bins × actions`.
    pub u2_2: Vec<f64>,
}

impl Upsilon2 {
    pub fn get(&self, bin: usize, a: usize) -> f64 {
        self.u2_2[bin * self.actions.len() + a]
    }

    /// Mass per action.
    pub fn action_marginal(&self) -> Vec<f64> {
        let na = self.actions.len();
        (0..na).map(|a| (0..self.bins.len).map(|b| self.u2_2[b * na + a]).sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpsilonMeasures {
    pub upsilon1: Upsilon1,
    pub upsilon2: Upsilon2,
}

fn segments(eta: &AggregatedVector, dm: &DiscreteModel) -> Vec<FlowSegment> {
    (0..dm.n_cells())
        .map(|c| FlowSegment {
            x_start: dm.entry_state[c],
            x_end: dm.exit_state_of(c),
            mass: eta.eta_box[c],
            rate: dm.dwell_rate(c, 0),
        })
        .collect()
}

pub fn to_upsilon1(eta: &AggregatedVector, dm: &DiscreteModel) -> Upsilon1 {
    let bins = BaseBins::for_model(dm);
    let mut u1_2 = vec![0.0; bins.len];
    for c in 0..dm.n_cells() {
        let x = dm.entry_state[c];
        for (a, &size) in dm.grid.actions.iter().enumerate() {
            let m = eta.jump(c, a);
            if m == 0.0 {
                continue;
            }
            for (b, len) in bins.overlaps(x, x + size) {
                u1_2[b] += m * len;
            }
        }
    }
    Upsilon1 {
        u1_1: segments(eta, dm),
        bins,
        u1_2,
    }
}

pub fn to_upsilon2(eta: &AggregatedVector, dm: &DiscreteModel) -> Upsilon2 {
    let bins = BaseBins::for_model(dm);
    let actions = dm.grid.actions.clone();
    let na = actions.len();
    let mut u2_2 = vec![0.0; bins.len * na];
    for c in 0..dm.n_cells() {
        let x = dm.entry_state[c];
        for (a, &size) in actions.iter().enumerate() {
            let m = eta.jump(c, a);
            if m == 0.0 {
                continue;
            }
            for (b, len) in bins.overlaps(x, x + size) {
                u2_2[b * na + a] += m * len / size;
            }
        }
    }
    Upsilon2 {
        u2_1: segments(eta, dm),
        bins,
        actions,
        u2_2,
    }
}

pub fn upsilon(eta: &AggregatedVector, dm: &DiscreteModel) -> UpsilonMeasures {
    UpsilonMeasures {
        upsilon1: to_upsilon1(eta, dm),
        upsilon2: to_upsilon2(eta, dm),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    /// `Σ C^g·η_box + Σ a·η_jump`.
    pub aggregated_form: f64,
    /// `Σ C^g·Υ¹₁ + Υ¹₂(total)`.
    pub upsilon1_form: f64,
    /// `Σ C^g·Υ̂²₁ + ∫ a Υ̂²₂(dy × da)`.
    pub upsilon2_form: f64,
    pub max_gap: f64,
    pub agree: bool,
}

fn gradual_part(segments: &[FlowSegment]) -> f64 {
    segments.iter().map(|s| s.rate * s.mass).sum()
}

/// Objective 0 in all three forms; valid for models with `C^I_0 = a`.
pub fn verify_objective_equality(eta: &AggregatedVector, dm: &DiscreteModel) -> ObjectiveReport {
    let u = upsilon(eta, dm);
    let f33 = aggregated_cost(eta, dm, 0);
    let f34 = gradual_part(&u.upsilon1.u1_1) + u.upsilon1.u1_2.iter().sum::<f64>();
    let na = u.upsilon2.actions.len();
    let f35 = gradual_part(&u.upsilon2.u2_1)
        + u.upsilon2
            .u2_2
            .iter()
            .enumerate()
            .map(|(i, m)| u.upsilon2.actions[i % na] * m)
            .sum::<f64>();
    let max_gap = (f33 - f34).abs().max((f33 - f35).abs()).max((f34 - f35).abs());
    ObjectiveReport {
        aggregated_form: f33,
        upsilon1_form: f34,
        upsilon2_form: f35,
        max_gap,
        agree: max_gap <= 1e-9,
    }
}

/// `w(x) = (hi − max(x, lo))⁺` on base states, with derivative `−1{lo < x < hi}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseRamp {
    pub lo: f64,
    pub hi: f64,
}

impl BaseRamp {
    pub fn value(&self, x: f64) -> f64 {
        (self.hi - x.max(self.lo)).max(0.0)
    }
}

/// Test-function constraint in the aggregated form, `χw` taken as the
/// cell-wise difference quotient of `w` along the flow.
pub fn ramp_constraint_aggregated(eta: &AggregatedVector, dm: &DiscreteModel, w: &BaseRamp) -> f64 {
    let x0 = dm.grid.x0_cell().map_or(0.0, |c| w.value(dm.entry_state[c]));
    let mut total = x0;
    for c in 0..dm.n_cells() {
        let x = dm.entry_state[c];
        total += (w.value(dm.exit_state_of(c)) - w.value(x)) / dm.dt() * eta.eta_box[c];
        for (a, &size) in dm.grid.actions.iter().enumerate() {
            total += (w.value(x + size) - w.value(x)) * eta.jump(c, a);
        }
    }
    total
}

/// The same constraint evaluated on `Υ¹`: flow segments carry `χw`, and the
/// jump term becomes `∫ w′ dΥ¹₂`. Exact when `lo` and `hi` are bin edges.
pub fn ramp_constraint_upsilon1(u: &Upsilon1, dm: &DiscreteModel, w: &BaseRamp) -> f64 {
    let x0 = dm.grid.x0_cell().map_or(0.0, |c| w.value(dm.entry_state[c]));
    let flow: f64 = u
        .u1_1
        .iter()
        .map(|s| (w.value(s.x_end) - w.value(s.x_start)) / dm.dt() * s.mass)
        .sum();
    let jumps: f64 = (0..u.bins.len)
        .map(|b| {
            let (b0, b1) = u.bins.bounds(b);
            let slope_len = b1.min(w.hi) - b0.max(w.lo);
            if slope_len > 0.0 {
                -u.u1_2[b] * slope_len / (b1 - b0)
            } else {
                0.0
            }
        })
        .sum();
    x0 + flow + jumps
}
