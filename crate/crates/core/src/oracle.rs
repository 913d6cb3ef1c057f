//! Dynamic-programming ground truth on the discrete model: value iteration,
//! a Lagrangian sweep for one constraint and brute-force enumeration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::discretize::{DiscreteModel, JumpTarget};
use crate::error::OracleError;
use crate::strategy::{OriginKernel, StationaryStrategy};

pub const MAX_SWEEPS: usize = 100_000;
pub const ENUMERATION_MAX_CELLS: usize = 12;
pub const ENUMERATION_MAX_ACTIONS: usize = 3;

/// Control applied on entry to a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    /// Keep flowing; at the last cell of an orbit this means leaving `V`.
    Continue,
    Jump(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub v: Vec<f64>,
    pub best: Vec<Control>,
    pub sweeps: usize,
}

impl ValueTable {
    /// Value at the initial cell, `0` if `x₀ ∉ V`.
    pub fn initial_value(&self, dm: &DiscreteModel) -> f64 {
        dm.grid.x0_cell().map_or(0.0, |c| self.v[c])
    }

    /// CSV with columns `cell,v,best`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["cell", "v", "best"]).expect("in-memory write");
        for (c, (v, b)) in self.v.iter().zip(&self.best).enumerate() {
            let best = match b {
                Control::Continue => "continue".to_string(),
                Control::Jump(a) => format!("jump:{a}"),
            };
            w.write_record([c.to_string(), format!("{v:.17e}"), best])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

fn weighted(weights: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    weights.iter().enumerate().filter(|(_, &w)| w != 0.0).map(|(j, &w)| w * f(j)).sum()
}

fn target_value(dm: &DiscreteModel, v: &[f64], cell: usize, a: usize) -> f64 {
    match dm.jump_to(cell, a) {
        JumpTarget::Absorbed => 0.0,
        JumpTarget::Origin(o) => v[dm.grid.origin_cell(o)],
    }
}

/// Bellman update at one cell; ties go to `Continue`, then the smallest action.
fn bellman(dm: &DiscreteModel, weights: &[f64], v: &[f64], cell: usize) -> (f64, Control) {
    let stay = weighted(weights, |j| dm.dwell_cost(cell, j))
        + dm.grid.next(cell).map_or(0.0, |n| v[n]);
    let mut best = (stay, Control::Continue);
    for a in 0..dm.n_actions() {
        let q = weighted(weights, |j| dm.jump_cost(cell, a, j)) + target_value(dm, v, cell, a);
        if q < best.0 {
            best = (q, Control::Jump(a));
        }
    }
    best
}

/// Unconstrained optimal cost-to-go for objective 0.
pub fn dp_value(dm: &DiscreteModel) -> Result<ValueTable, OracleError> {
    let mut w = vec![0.0; dm.n_objectives];
    w[0] = 1.0;
    dp_value_weighted(dm, &w)
}

/// Value iteration for the cost `Σ_j weights[j] · C̄_j`, started from zero.
///
/// Orbits are swept backwards in time, so continue-edges are exact after one
/// sweep and only jump-edges need repetition.
pub fn dp_value_weighted(dm: &DiscreteModel, weights: &[f64]) -> Result<ValueTable, OracleError> {
    let grid = &dm.grid;
    let mut v = vec![0.0; grid.n_cells()];
    let mut best = vec![Control::Continue; grid.n_cells()];
    for sweep in 1..=MAX_SWEEPS {
        let mut changed = false;
        for o in (0..grid.n_origins()).rev() {
            let start = grid.orbit_start[o];
            for cell in (start..start + grid.orbit_len[o]).rev() {
                let (q, b) = bellman(dm, weights, &v, cell);
                if q != v[cell] {
                    if (q - v[cell]).abs() > 1e-15 * (1.0 + q.abs()) {
                        changed = true;
                    }
                    v[cell] = q;
                }
                best[cell] = b;
            }
        }
        if !changed {
            return Ok(ValueTable { v, best, sweeps: sweep });
        }
    }
    Err(OracleError::NoConvergence(MAX_SWEEPS))
}

/// `max |v − T v|` over all cells.
pub fn bellman_residual(dm: &DiscreteModel, weights: &[f64], v: &[f64]) -> f64 {
    (0..dm.n_cells())
        .map(|c| (bellman(dm, weights, v, c).0 - v[c]).abs())
        .fold(0.0, f64::max)
}

/// Costs of every objective under a deterministic per-cell policy, or `None`
/// if the policy revisits a cell forever.
pub fn evaluate_policy(dm: &DiscreteModel, policy: &[Control]) -> Option<Vec<f64>> {
    let mut costs = vec![0.0; dm.n_objectives];
    let Some(mut cell) = dm.grid.x0_cell() else {
        return Some(costs);
    };
    let mut visited = vec![false; dm.n_cells()];
    loop {
        if std::mem::replace(&mut visited[cell], true) {
            return None;
        }
        match policy[cell] {
            Control::Continue => {
                for (j, c) in costs.iter_mut().enumerate() {
                    *c += dm.dwell_cost(cell, j);
                }
                match dm.grid.next(cell) {
                    Some(n) => cell = n,
                    None => return Some(costs),
                }
            }
            Control::Jump(a) => {
                for (j, c) in costs.iter_mut().enumerate() {
                    *c += dm.jump_cost(cell, a, j);
                }
                match dm.jump_to(cell, a) {
                    JumpTarget::Absorbed => return Some(costs),
                    JumpTarget::Origin(o) => cell = dm.grid.origin_cell(o),
                }
            }
        }
    }
}

/// The stationary strategy that follows a per-cell policy: from each origin,
/// dwell until the first cell with a jump.
pub fn to_strategy(dm: &DiscreteModel, policy: &[Control]) -> StationaryStrategy {
    let grid = &dm.grid;
    let mut kernels = BTreeMap::new();
    for o in 0..grid.n_origins() {
        let start = grid.orbit_start[o];
        let n = grid.orbit_len[o];
        let Some((d, a)) = (0..n).find_map(|k| match policy[start + k] {
            Control::Jump(a) => Some((k, a)),
            Control::Continue => None,
        }) else {
            continue;
        };
        let mut p_dwell = vec![0.0; n + 1];
        p_dwell[d] = 1.0;
        let mut p_action = vec![Vec::new(); n];
        p_action[d] = (0..dm.n_actions()).map(|b| if b == a { 1.0 } else { 0.0 }).collect();
        kernels.insert(o, OriginKernel { p_dwell, p_action });
    }
    StationaryStrategy { kernels }
}

/// A policy found by the sweep together with its `(cost₀, cost₁)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    /// `v_λ(x₀) − λ·d₁`.
    pub lower_bound: f64,
    pub costs: Vec<f64>,
    pub policy: Vec<Control>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianReport {
    pub bound: f64,
    pub points: Vec<SweepPoint>,
    /// Maximum of the pointwise lower bounds.
    pub lower_bound: f64,
    pub best_lambda: f64,
    /// Best objective over feasible points and mixtures of two points.
    pub upper_bound: f64,
}

/// `λ ∈ {0, 0.25, …, 8}`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=32).map(|i| i as f64 * 0.25).collect()
}

/// Brackets the value of the problem with a single constraint `cost₁ ≤ d₁`.
///
/// Panics unless the model has exactly one constraint.
pub fn lagrangian_sweep(dm: &DiscreteModel, lambdas: &[f64]) -> Result<LagrangianReport, OracleError> {
    assert_eq!(dm.n_objectives, 2, "the sweep needs exactly one constraint");
    let d1 = dm.constraint_bounds[0];
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let table = dp_value_weighted(dm, &[1.0, lambda])?;
        let costs = evaluate_policy(dm, &table.best).ok_or(OracleError::NoConvergence(table.sweeps))?;
        let lower_bound = if d1.is_finite() {
            table.initial_value(dm) - lambda * d1
        } else if lambda == 0.0 {
            table.initial_value(dm)
        } else {
            f64::NEG_INFINITY
        };
        points.push(SweepPoint {
            lambda,
            lower_bound,
            costs,
            policy: table.best,
        });
    }
    let (best_lambda, lower_bound) = points
        .iter()
        .map(|p| (p.lambda, p.lower_bound))
        .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(LagrangianReport {
        bound: d1,
        lower_bound,
        best_lambda,
        upper_bound: feasible_envelope(&points, d1),
        points,
    })
}

/// Smallest objective among feasible points and among mixtures of one feasible
/// and one infeasible point that meet the bound with equality.
pub fn feasible_envelope(points: &[SweepPoint], d1: f64) -> f64 {
    let mut best = f64::INFINITY;
    for p in points.iter().filter(|p| p.costs[1] <= d1) {
        best = best.min(p.costs[0]);
        for q in points.iter().filter(|q| q.costs[1] > d1) {
            let w = (d1 - p.costs[1]) / (q.costs[1] - p.costs[1]);
            best = best.min(p.costs[0] + w * (q.costs[0] - p.costs[0]));
        }
    }
    best
}

/// Exact optimum of objective 0 over deterministic stationary per-cell policies.
pub fn enumerate_policies(dm: &DiscreteModel) -> Result<f64, OracleError> {
    let nc = dm.n_cells();
    let na = dm.n_actions();
    if nc > ENUMERATION_MAX_CELLS || na > ENUMERATION_MAX_ACTIONS {
        return Err(OracleError::TooLarge(format!(
            "{nc} cells and {na} actions; the limit is {ENUMERATION_MAX_CELLS} and {ENUMERATION_MAX_ACTIONS}"
        )));
    }
    let choices = na + 1;
    let mut policy = vec![Control::Continue; nc];
    let mut digits = vec![0usize; nc];
    let mut best = f64::INFINITY;
    loop {
        if let Some(c) = evaluate_policy(dm, &policy) {
            best = best.min(c[0]);
        }
        // Odometer increment over per-cell choices.
        let mut i = 0;
        loop {
            if i == nc {
                return Ok(best);
            }
            digits[i] += 1;
            if digits[i] < choices {
                policy[i] = Control::Jump(digits[i] - 1);
                break;
            }
            digits[i] = 0;
            policy[i] = Control::Continue;
            i += 1;
        }
    }
}
