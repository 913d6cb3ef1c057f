//! Markov strategies: induction from an aggregated vector, exact forward
//! propagation to occupation vectors, and domination checks.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::discretize::{DiscreteModel, JumpTarget};
use crate::error::StrategyError;
use crate::lp_aggregated::{aggregate, AggregatedVector};
use crate::lp_occupation::{Dwell, OccupationVector};

pub const DEFAULT_MAX_STEPS: usize = 64;
const CLAMP_TOL: f64 = 1e-8;
const NU_TOL: f64 = 1e-10;
const PROPAGATION_TOL: f64 = 1e-12;

/// Kernel at the `t = 0` cell of one origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginKernel {
    /// One entry per finite dwell index of the orbit, then `θ = ∞`.
    pub p_dwell: Vec<f64>,
    /// Action distribution per finite dwell index; empty where `p_dwell` is zero.
    pub p_action: Vec<Vec<f64>>,
}

impl OriginKernel {
    pub fn never_jump(n_cells: usize) -> Self {
        let mut p_dwell = vec![0.0; n_cells + 1];
        p_dwell[n_cells] = 1.0;
        Self {
            p_dwell,
            p_action: vec![Vec::new(); n_cells],
        }
    }

    pub fn p_infinite(&self) -> f64 {
        *self.p_dwell.last().unwrap_or(&1.0)
    }

    /// Number of `(dwell, action)` pairs with positive probability.
    pub fn atoms(&self) -> usize {
        let finite: usize = self
            .p_dwell
            .iter()
            .zip(&self.p_action)
            .filter(|(p, _)| **p > 0.0)
            .map(|(_, pa)| pa.iter().filter(|&&q| q > 0.0).count())
            .sum();
        finite + usize::from(self.p_infinite() > 0.0)
    }

    /// Checks both distributions against the orbit length and action count.
    pub fn validate(&self, n_cells: usize, n_actions: usize) -> Result<(), String> {
        if self.p_dwell.len() != n_cells + 1 || self.p_action.len() != n_cells {
            return Err(format!(
                "kernel has {} dwell entries for an orbit of {n_cells} cells",
                self.p_dwell.len()
            ));
        }
        let check = |v: &[f64], what: &str| -> Result<(), String> {
            if v.iter().any(|p| !(*p >= 0.0)) {
                return Err(format!("{what} has a negative entry"));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(format!("{what} sums to {s}"));
            }
            Ok(())
        };
        check(&self.p_dwell, "p_dwell")?;
        for (d, pa) in self.p_action.iter().enumerate() {
            if self.p_dwell[d] > 0.0 {
                if pa.len() != n_actions {
                    return Err(format!("p_action[{d}] has {} entries", pa.len()));
                }
                check(pa, "p_action")?;
            }
        }
        Ok(())
    }
}

/// Anything that supplies a kernel per step and origin; `None` means `f* = (∞, â)`.
pub trait Policy {
    fn kernel(&self, step: usize, origin: usize) -> Option<&OriginKernel>;

    /// Steps after which every kernel is `f*`; `None` for stationary policies.
    fn horizon(&self) -> Option<usize>;
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StationaryStrategy {
    pub kernels: BTreeMap<usize, OriginKernel>,
}

impl Policy for StationaryStrategy {
    fn kernel(&self, _step: usize, origin: usize) -> Option<&OriginKernel> {
        self.kernels.get(&origin)
    }

    fn horizon(&self) -> Option<usize> {
        None
    }
}

impl StationaryStrategy {
    /// Whether every kernel puts all mass on one `(dwell, action)` pair.
    pub fn is_deterministic(&self) -> bool {
        self.kernels.values().all(|k| k.atoms() <= 1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MarkovStrategy {
    /// Kernels per step, keyed by origin.
    pub steps: Vec<BTreeMap<usize, OriginKernel>>,
}

impl Policy for MarkovStrategy {
    fn kernel(&self, step: usize, origin: usize) -> Option<&OriginKernel> {
        self.steps.get(step).and_then(|m| m.get(&origin))
    }

    fn horizon(&self) -> Option<usize> {
        Some(self.steps.len())
    }
}

impl MarkovStrategy {
    pub fn validate(&self, dm: &DiscreteModel) -> Result<(), String> {
        for (i, step) in self.steps.iter().enumerate() {
            for (&o, k) in step {
                if o >= dm.grid.n_origins() {
                    return Err(format!("step {i}: origin {o} out of range"));
                }
                k.validate(dm.grid.orbit_len[o], dm.n_actions())
                    .map_err(|e| format!("step {i}, origin {o}: {e}"))?;
            }
        }
        Ok(())
    }

    pub fn is_randomized(&self) -> bool {
        self.steps.iter().flat_map(|s| s.values()).any(|k| k.atoms() >= 2)
    }
}

/// Per-origin intermediate quantities of one induction step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitWork {
    pub origin: usize,
    pub nu: f64,
    /// Residual jump mass on the orbit divided by `ν`.
    pub ratio: f64,
    /// Cumulative residual jump mass up to each cell, divided by `ν`.
    pub g: Vec<f64>,
    /// First cell with `G ≥ 1`.
    pub u_star: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InducedKernelWork {
    pub steps: Vec<Vec<OrbitWork>>,
    /// Entering mass per origin before each step.
    pub nu: Vec<Vec<f64>>,
}

fn subtract(slot: &mut f64, amount: f64, location: impl FnOnce() -> String) -> Result<(), StrategyError> {
    let v = *slot - amount;
    if v < -CLAMP_TOL {
        return Err(StrategyError::NegativeResidual {
            location: location(),
            value: v,
        });
    }
    *slot = v.max(0.0);
    Ok(())
}

/// Builds the induced Markov strategy step by step from a feasible `η`.
pub fn induce_markov_strategy(
    eta: &AggregatedVector,
    dm: &DiscreteModel,
    max_steps: usize,
) -> Result<(MarkovStrategy, InducedKernelWork), StrategyError> {
    let grid = &dm.grid;
    let na = dm.n_actions();
    if eta.eta_box.len() != grid.n_cells() || eta.eta_jump.len() != grid.n_cells() * na {
        return Err(StrategyError::Layout(format!(
            "expected {} cells and {na} actions",
            grid.n_cells()
        )));
    }
    let mut strategy = MarkovStrategy::default();
    let mut work = InducedKernelWork::default();
    let Some(x0) = grid.x0_origin else {
        return Ok((strategy, work));
    };
    let mut residual = eta.clone();
    let mut nu = vec![0.0; grid.n_origins()];
    nu[x0] = 1.0;
    for step in 0..max_steps {
        if nu.iter().sum::<f64>() < NU_TOL {
            break;
        }
        work.nu.push(nu.clone());
        let mut kernels = BTreeMap::new();
        let mut step_work = Vec::new();
        let mut nu_next = vec![0.0; grid.n_origins()];
        for o in 0..grid.n_origins() {
            let v = nu[o];
            if !(v > 0.0) {
                continue;
            }
            let start = grid.orbit_start[o];
            let n = grid.orbit_len[o];
            let jumps: Vec<f64> = (0..n).map(|k| residual.jump_mass(start + k)).collect();
            let mut g = Vec::with_capacity(n);
            let mut acc = 0.0;
            for &j in &jumps {
                acc += j;
                g.push(acc / v);
            }
            let u_star = g.iter().position(|&x| x >= 1.0 - 1e-12);
            let mut p_dwell = vec![0.0; n + 1];
            let last = u_star.unwrap_or(n);
            for k in 0..last.min(n) {
                p_dwell[k] = jumps[k] / v;
            }
            if let Some(u) = u_star {
                p_dwell[u] = (1.0 - if u == 0 { 0.0 } else { g[u - 1] }).max(0.0);
            } else {
                p_dwell[n] = (1.0 - g.last().copied().unwrap_or(0.0)).max(0.0);
            }
            let mut p_action = vec![Vec::new(); n];
            for k in 0..n {
                if p_dwell[k] > 0.0 {
                    let cell = start + k;
                    let total = eta.jump_mass(cell);
                    p_action[k] = (0..na).map(|a| eta.jump(cell, a) / total).collect();
                }
            }
            // Remove this step's partial measure from the residual.
            let mut surviving = p_dwell[n];
            for k in (0..n).rev() {
                let cell = start + k;
                subtract(&mut residual.eta_box[cell], grid.dt * v * surviving, || {
                    format!("step {step}, box of cell {cell}")
                })?;
                surviving += p_dwell[k];
                if p_dwell[k] > 0.0 {
                    for a in 0..na {
                        let m = v * p_dwell[k] * p_action[k][a];
                        if m == 0.0 {
                            continue;
                        }
                        subtract(residual.jump_mut(cell, a), m, || {
                            format!("step {step}, jump at cell {cell}, action {a}")
                        })?;
                        if let JumpTarget::Origin(o2) = dm.jump_to(cell, a) {
                            nu_next[o2] += m;
                        }
                    }
                }
            }
            step_work.push(OrbitWork {
                origin: o,
                nu: v,
                ratio: g.last().copied().unwrap_or(0.0),
                g,
                u_star,
            });
            kernels.insert(o, OriginKernel { p_dwell, p_action });
        }
        strategy.steps.push(kernels);
        work.steps.push(step_work);
        nu = nu_next;
    }
    Ok((strategy, work))
}

/// Result of exact forward propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub occupation: OccupationVector,
    /// Aggregated image of the occupation accumulated after each step.
    pub partials: Vec<AggregatedVector>,
    /// Mass handed to `f*` because the step cap was reached.
    pub truncated_mass: f64,
}

/// Propagates the state distribution through the strategy's kernels without sampling.
pub fn strategy_occupation(pi: &dyn Policy, dm: &DiscreteModel, max_steps: usize) -> Propagation {
    let grid = &dm.grid;
    let na = dm.n_actions();
    let mut mu = OccupationVector::zeros(dm);
    let mut partials = Vec::new();
    let Some(x0) = grid.x0_origin else {
        return Propagation {
            occupation: mu,
            partials,
            truncated_mass: 0.0,
        };
    };
    let mut nu = vec![0.0; grid.n_origins()];
    nu[x0] = 1.0;
    let mut truncated_mass = 0.0;
    let mut step = 0;
    loop {
        let total: f64 = nu.iter().sum();
        if total < PROPAGATION_TOL {
            break;
        }
        let cap_reached = step >= max_steps;
        let mut nu_next = vec![0.0; grid.n_origins()];
        for o in 0..grid.n_origins() {
            let v = nu[o];
            if v == 0.0 {
                continue;
            }
            let cell = grid.origin_cell(o);
            let kernel = if cap_reached { None } else { pi.kernel(step, o) };
            let Some(kernel) = kernel else {
                mu.add(cell, Dwell::Infinite, 0, v);
                if cap_reached {
                    truncated_mass += v;
                }
                continue;
            };
            let n = grid.orbit_len[o];
            for d in 0..n {
                let pd = kernel.p_dwell[d];
                if pd == 0.0 {
                    continue;
                }
                for a in 0..na {
                    let m = v * pd * kernel.p_action[d][a];
                    if m == 0.0 {
                        continue;
                    }
                    mu.add(cell, Dwell::Finite(d), a, m);
                    if let JumpTarget::Origin(o2) = dm.jump_to(cell + d, a) {
                        nu_next[o2] += m;
                    }
                }
            }
            let pinf = kernel.p_dwell[n];
            if pinf > 0.0 {
                mu.add(cell, Dwell::Infinite, 0, v * pinf);
            }
        }
        partials.push(aggregate(&mu, dm));
        nu = nu_next;
        step += 1;
        if cap_reached {
            break;
        }
    }
    Propagation {
        occupation: mu,
        partials,
        truncated_mass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    /// `max(η̃ − η)` over all entries; `≤ 1e-8` means dominated.
    pub max_violation: f64,
    pub dominated: bool,
}

pub fn check_domination(eta_tilde: &AggregatedVector, eta: &AggregatedVector) -> DominationReport {
    let v = eta_tilde.max_excess_over(eta).max(0.0);
    DominationReport {
        max_violation: v,
        dominated: v <= 1e-8,
    }
}

/// A random reasonable Markov strategy, used to generate feasible test vectors.
///
/// Each kernel stops with probability at most `p_stop` and otherwise jumps at
/// up to three random dwell indices, each with one or two random actions.
pub fn random_markov_strategy<R: Rng>(
    dm: &DiscreteModel,
    steps: usize,
    p_stop: f64,
    rng: &mut R,
) -> MarkovStrategy {
    let grid = &dm.grid;
    let na = dm.n_actions();
    let mut out = MarkovStrategy::default();
    for _ in 0..steps {
        let mut kernels = BTreeMap::new();
        for o in 0..grid.n_origins() {
            let n = grid.orbit_len[o];
            let mut p_dwell = vec![0.0; n + 1];
            let mut p_action = vec![Vec::new(); n];
            p_dwell[n] = p_stop * rng.random::<f64>();
            let n_atoms = rng.random_range(1..=3.min(n));
            let mut weights: Vec<f64> = (0..n_atoms).map(|_| rng.random::<f64>() + 0.05).collect();
            let s: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w *= (1.0 - p_dwell[n]) / s);
            for w in weights {
                let d = rng.random_range(0..n);
                p_dwell[d] += w;
            }
            let total: f64 = p_dwell.iter().sum();
            p_dwell.iter_mut().for_each(|p| *p /= total);
            for d in 0..n {
                if p_dwell[d] > 0.0 {
                    let mut pa = vec![0.0; na];
                    for _ in 0..rng.random_range(1..=2) {
                        pa[rng.random_range(0..na)] += rng.random::<f64>() + 0.05;
                    }
                    let s: f64 = pa.iter().sum();
                    pa.iter_mut().for_each(|p| *p /= s);
                    p_action[d] = pa;
                }
            }
            kernels.insert(o, OriginKernel { p_dwell, p_action });
        }
        out.steps.push(kernels);
    }
    out
}
