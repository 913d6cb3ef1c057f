//! Finite grid over the orbit domain and the discrete model built on it.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::DiscretizeError;
use crate::model::{Flow, ModelSpec};

pub const DEFAULT_ORIGIN_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub origin: usize,
    pub k: usize,
}

/// Cells of orbit `o` occupy `orbit_start[o] .. orbit_start[o] + orbit_len[o]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dt: f64,
    pub anchor: f64,
    pub pitch: f64,
    /// Origin base states in increasing order.
    pub origins: Vec<f64>,
    pub origin_lattice: Vec<i64>,
    pub theta_star: Vec<f64>,
    pub orbit_start: Vec<usize>,
    pub orbit_len: Vec<usize>,
    pub cells: Vec<Cell>,
    pub actions: Vec<f64>,
    pub x0_origin: Option<usize>,
}

impl Grid {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_origins(&self) -> usize {
        self.origins.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn cell_index(&self, origin: usize, k: usize) -> usize {
        debug_assert!(k < self.orbit_len[origin]);
        self.orbit_start[origin] + k
    }

    /// Flow successor, absent on the last cell of an orbit.
    pub fn next(&self, cell: usize) -> Option<usize> {
        let c = self.cells[cell];
        (c.k + 1 < self.orbit_len[c.origin]).then_some(cell + 1)
    }

    /// Cells from `cell` to the end of its orbit, `cell` included.
    pub fn remaining(&self, cell: usize) -> usize {
        let c = self.cells[cell];
        self.orbit_len[c.origin] - c.k
    }

    pub fn origin_cell(&self, origin: usize) -> usize {
        self.orbit_start[origin]
    }

    pub fn x0_cell(&self) -> Option<usize> {
        self.x0_origin.map(|o| self.orbit_start[o])
    }

    pub fn lattice_state(&self, m: i64) -> f64 {
        self.anchor + m as f64 * self.pitch
    }

    /// Nearest lattice index; ties go to the smaller state.
    pub fn snap(&self, x: f64) -> i64 {
        ((x - self.anchor) / self.pitch - 0.5).ceil() as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpTarget {
    /// The `t = 0` cell of this origin.
    Origin(usize),
    Absorbed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_snap_distance: f64,
    pub warnings: Vec<String>,
}

/// The desk-scale instance shared by both LPs, the oracle and the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteModel {
    pub grid: Grid,
    pub n_objectives: usize,
    /// `C^g_j` at the cell midpoint, `cells × (J+1)`.
    pub dwell_rate: Vec<f64>,
    /// `C^I_j` at the cell entry state, `cells × actions × (J+1)`.
    pub jump_cost: Vec<f64>,
    /// `cells × actions`.
    pub jump_to: Vec<JumpTarget>,
    /// Base state at the start of each cell.
    pub entry_state: Vec<f64>,
    /// Base state at the end of each orbit's last cell.
    pub exit_state: Vec<f64>,
    pub constraint_bounds: Vec<f64>,
    pub impulse_floor: f64,
    pub diagnostics: Diagnostics,
}

fn n_cells_for(theta: f64, dt: f64) -> usize {
    if theta <= 0.0 {
        0
    } else {
        (theta / dt - 1e-9).ceil().max(0.0) as usize
    }
}

fn action_grid(a_min: f64, a_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a_min];
    }
    (0..n)
        .map(|i| {
            if i + 1 == n {
                a_max
            } else {
                a_min + (a_max - a_min) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Uses an RK4 step of `dt / 8` for ODE flows.
fn model_for_step(model: &ModelSpec, dt: f64) -> ModelSpec {
    let mut m = model.clone();
    if let Flow::Ode { velocity, .. } = &model.flow {
        m.flow = Flow::Ode {
            velocity: velocity.clone(),
            step: dt / 8.0,
        };
    }
    m
}

pub fn build_grid(model: &ModelSpec, dt: f64, n_actions: usize) -> Result<Grid, DiscretizeError> {
    build_grid_with_cap(model, dt, n_actions, DEFAULT_ORIGIN_CAP)
}

pub fn build_grid_with_cap(
    model: &ModelSpec,
    dt: f64,
    n_actions: usize,
    cap: usize,
) -> Result<Grid, DiscretizeError> {
    model.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DiscretizeError::BadStep(dt));
    }
    if n_actions == 0 {
        return Err(DiscretizeError::NoActions);
    }
    let model = model_for_step(model, dt);
    let actions = action_grid(model.action_min, model.action_max, n_actions);
    let mut grid = Grid {
        dt,
        anchor: model.x0,
        pitch: dt * model.speed_floor,
        origins: Vec::new(),
        origin_lattice: Vec::new(),
        theta_star: Vec::new(),
        orbit_start: Vec::new(),
        orbit_len: Vec::new(),
        cells: Vec::new(),
        actions,
        x0_origin: None,
    };
    let mut found: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    let theta0 = model.theta_star(model.x0);
    let n0 = n_cells_for(theta0, dt);
    if n0 == 0 {
        return Ok(grid);
    }
    if !theta0.is_finite() {
        return Err(DiscretizeError::UnboundedOrbit { origin: model.x0 });
    }
    found.insert(0, (theta0, n0));
    let mut queue = VecDeque::from([0i64]);
    while let Some(m) = queue.pop_front() {
        let x = grid.lattice_state(m);
        let n = found[&m].1;
        for k in 0..n {
            let entry = model.flow_base(x, k as f64 * dt);
            for &a in &grid.actions {
                let y = (model.jump)(entry, a);
                if model.theta_star(y) <= 0.0 {
                    continue;
                }
                let m2 = grid.snap(y);
                if found.contains_key(&m2) {
                    continue;
                }
                let x2 = grid.lattice_state(m2);
                let theta = model.theta_star(x2);
                let n2 = n_cells_for(theta, dt);
                if n2 == 0 {
                    continue;
                }
                if !theta.is_finite() {
                    return Err(DiscretizeError::UnboundedOrbit { origin: x2 });
                }
                found.insert(m2, (theta, n2));
                if found.len() > cap {
                    return Err(DiscretizeError::TooManyOrigins(cap));
                }
                queue.push_back(m2);
            }
        }
    }
    for (o, (&m, &(theta, n))) in found.iter().enumerate() {
        if m == 0 {
            grid.x0_origin = Some(o);
        }
        grid.origins.push(grid.lattice_state(m));
        grid.origin_lattice.push(m);
        grid.theta_star.push(theta);
        grid.orbit_start.push(grid.cells.len());
        grid.orbit_len.push(n);
        grid.cells.extend((0..n).map(|k| Cell { origin: o, k }));
    }
    Ok(grid)
}

pub fn discretize(model: &ModelSpec, grid: &Grid) -> Result<DiscreteModel, DiscretizeError> {
    model.validate()?;
    let model = model_for_step(model, grid.dt);
    let j1 = model.n_objectives();
    let n_a = grid.n_actions();
    let dt = grid.dt;
    let lattice: BTreeMap<i64, usize> = grid
        .origin_lattice
        .iter()
        .enumerate()
        .map(|(o, &m)| (m, o))
        .collect();
    let mut dm = DiscreteModel {
        grid: grid.clone(),
        n_objectives: j1,
        dwell_rate: Vec::with_capacity(grid.n_cells() * j1),
        jump_cost: Vec::with_capacity(grid.n_cells() * n_a * j1),
        jump_to: Vec::with_capacity(grid.n_cells() * n_a),
        entry_state: Vec::with_capacity(grid.n_cells()),
        exit_state: Vec::with_capacity(grid.n_origins()),
        constraint_bounds: model.constraint_bounds.clone(),
        impulse_floor: model.impulse_floor,
        diagnostics: Diagnostics::default(),
    };
    for o in 0..grid.n_origins() {
        let x = grid.origins[o];
        let n = grid.orbit_len[o];
        dm.exit_state.push(model.flow_base(x, n as f64 * dt));
        for k in 0..n {
            let t = k as f64 * dt;
            let tm = (k as f64 + 0.5) * dt;
            let entry = model.flow_base(x, t);
            let mid = model.flow_base(x, tm);
            dm.entry_state.push(entry);
            for j in 0..j1 {
                dm.dwell_rate.push(model.gradual_rate(j, mid, tm));
            }
            for &a in &grid.actions {
                let mut total = 0.0;
                for j in 0..j1 {
                    let c = model.impulse_cost(j, entry, t, a);
                    total += c;
                    dm.jump_cost.push(c);
                }
                if total < model.impulse_floor * (1.0 - 1e-12) {
                    return Err(DiscretizeError::Inconsistent(format!(
                        "impulse cost {total} below the floor {} at state {entry}, action {a}",
                        model.impulse_floor
                    )));
                }
                let y = (model.jump)(entry, a);
                let target = if model.theta_star(y) <= 0.0 {
                    JumpTarget::Absorbed
                } else {
                    let m2 = grid.snap(y);
                    let dist = (grid.lattice_state(m2) - y).abs();
                    dm.diagnostics.max_snap_distance = dm.diagnostics.max_snap_distance.max(dist);
                    if dist > grid.pitch {
                        dm.diagnostics
                            .warnings
                            .push(format!("snap distance {dist} exceeds pitch at state {y}"));
                    }
                    match lattice.get(&m2) {
                        Some(&o2) => JumpTarget::Origin(o2),
                        None if n_cells_for(model.theta_star(grid.lattice_state(m2)), dt) == 0 => {
                            JumpTarget::Absorbed
                        }
                        None => {
                            return Err(DiscretizeError::Inconsistent(format!(
                                "jump target {y} snaps outside the grid"
                            )))
                        }
                    }
                };
                dm.jump_to.push(target);
            }
        }
    }
    for r in &dm.dwell_rate {
        if !(*r >= 0.0) {
            return Err(DiscretizeError::Inconsistent(format!("negative gradual cost {r}")));
        }
    }
    for c in &dm.jump_cost {
        if !(*c >= 0.0) {
            return Err(DiscretizeError::Inconsistent(format!("negative impulse cost {c}")));
        }
    }
    Ok(dm)
}

/// Hand-specified orbit for [`DiscreteModel::from_parts`].
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitParts {
    pub origin: f64,
    /// One base state per cell.
    pub entry_states: Vec<f64>,
    pub exit_state: f64,
}

/// Raw ingredients of a discrete model, for instances not derived from a [`ModelSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteParts {
    pub dt: f64,
    pub actions: Vec<f64>,
    pub orbits: Vec<OrbitParts>,
    pub x0_origin: Option<usize>,
    pub n_objectives: usize,
    pub dwell_rate: Vec<f64>,
    pub jump_cost: Vec<f64>,
    pub jump_to: Vec<JumpTarget>,
    pub constraint_bounds: Vec<f64>,
    pub impulse_floor: f64,
}

impl DiscreteModel {
    pub fn from_parts(p: DiscreteParts) -> Result<Self, DiscretizeError> {
        let bad = |m: String| Err(DiscretizeError::Inconsistent(m));
        if !(p.dt > 0.0) {
            return Err(DiscretizeError::BadStep(p.dt));
        }
        if p.actions.is_empty() {
            return Err(DiscretizeError::NoActions);
        }
        let mut grid = Grid {
            dt: p.dt,
            anchor: p.orbits.first().map_or(0.0, |o| o.origin),
            pitch: p.dt,
            origins: Vec::new(),
            origin_lattice: Vec::new(),
            theta_star: Vec::new(),
            orbit_start: Vec::new(),
            orbit_len: Vec::new(),
            cells: Vec::new(),
            actions: p.actions.clone(),
            x0_origin: p.x0_origin,
        };
        let mut entry_state = Vec::new();
        let mut exit_state = Vec::new();
        for (o, orbit) in p.orbits.iter().enumerate() {
            let n = orbit.entry_states.len();
            if n == 0 {
                return bad(format!("orbit {o} has no cells"));
            }
            grid.origins.push(orbit.origin);
            grid.origin_lattice.push(o as i64);
            grid.theta_star.push(n as f64 * p.dt);
            grid.orbit_start.push(grid.cells.len());
            grid.orbit_len.push(n);
            grid.cells.extend((0..n).map(|k| Cell { origin: o, k }));
            entry_state.extend_from_slice(&orbit.entry_states);
            exit_state.push(orbit.exit_state);
        }
        let nc = grid.n_cells();
        let na = grid.n_actions();
        let j1 = p.n_objectives;
        if j1 == 0 || p.constraint_bounds.len() + 1 != j1 {
            return bad("objective count and constraint bounds disagree".into());
        }
        if p.dwell_rate.len() != nc * j1 || p.jump_cost.len() != nc * na * j1 || p.jump_to.len() != nc * na {
            return bad("cost or transition table has the wrong length".into());
        }
        if p.x0_origin.is_some_and(|o| o >= grid.n_origins()) {
            return bad("x0 origin out of range".into());
        }
        if p.dwell_rate.iter().chain(&p.jump_cost).any(|c| !(*c >= 0.0)) {
            return bad("costs must be nonnegative".into());
        }
        for (i, t) in p.jump_to.iter().enumerate() {
            if let JumpTarget::Origin(o) = t {
                if *o >= grid.n_origins() {
                    return bad(format!("jump {i} targets missing origin {o}"));
                }
            }
            let total: f64 = p.jump_cost[i * j1..(i + 1) * j1].iter().sum();
            if total < p.impulse_floor * (1.0 - 1e-12) || !(p.impulse_floor > 0.0) {
                return bad(format!("jump {i} violates the impulse floor"));
            }
        }
        Ok(Self {
            grid,
            n_objectives: j1,
            dwell_rate: p.dwell_rate,
            jump_cost: p.jump_cost,
            jump_to: p.jump_to,
            entry_state,
            exit_state,
            constraint_bounds: p.constraint_bounds,
            impulse_floor: p.impulse_floor,
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    pub fn n_actions(&self) -> usize {
        self.grid.n_actions()
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt
    }

    pub fn dwell_rate(&self, cell: usize, j: usize) -> f64 {
        self.dwell_rate[cell * self.n_objectives + j]
    }

    /// `C^g_j(midpoint) · Δt`.
    pub fn dwell_cost(&self, cell: usize, j: usize) -> f64 {
        self.dwell_rate(cell, j) * self.grid.dt
    }

    pub fn jump_cost(&self, cell: usize, a: usize, j: usize) -> f64 {
        self.jump_cost[(cell * self.n_actions() + a) * self.n_objectives + j]
    }

    pub fn jump_to(&self, cell: usize, a: usize) -> JumpTarget {
        self.jump_to[cell * self.n_actions() + a]
    }

    /// Base state at the end of `cell`.
    pub fn exit_state_of(&self, cell: usize) -> f64 {
        match self.grid.next(cell) {
            Some(n) => self.entry_state[n],
            None => self.exit_state[self.grid.cells[cell].origin],
        }
    }

    /// Constraint indices `j ≥ 1` with a finite bound.
    pub fn active_constraints(&self) -> Vec<usize> {
        (1..self.n_objectives)
            .filter(|&j| self.constraint_bounds[j - 1].is_finite())
            .collect()
    }

    /// Sum of `dwell_cost_j` over cells `from .. from + len` of one orbit.
    pub fn dwell_sum(&self, from: usize, len: usize, j: usize) -> f64 {
        (from..from + len).map(|c| self.dwell_cost(c, j)).sum()
    }
}
