//! The occupation-measure LP over (pre-impulse cell, dwell, action) triples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use simplex::{Row, RowBuilder, SparseLp};

use crate::discretize::{DiscreteModel, Grid, JumpTarget};
use crate::strategy::{OriginKernel, StationaryStrategy};

/// Dwell index: the impulse happens on entry to the `k`-th cell after the
/// pre-impulse cell, or never.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dwell {
    Finite(usize),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccColumn {
    pub cell: usize,
    pub dwell: Dwell,
    /// For `Dwell::Infinite` this is the index of `â = a_min`, i.e. 0.
    pub action: usize,
}

/// Column layout: cell `c` with `K` remaining cells owns `K · |A|` finite
/// columns followed by one `θ = ∞` column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationLayout {
    pub offsets: Vec<usize>,
    pub n_actions: usize,
}

impl OccupationLayout {
    pub fn new(grid: &Grid) -> Self {
        let na = grid.n_actions();
        let mut offsets = Vec::with_capacity(grid.n_cells() + 1);
        let mut acc = 0;
        offsets.push(0);
        for c in 0..grid.n_cells() {
            acc += grid.remaining(c) * na + 1;
            offsets.push(acc);
        }
        Self {
            offsets,
            n_actions: na,
        }
    }

    pub fn n_columns(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn n_cells(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    /// Number of finite dwell indices available at `cell`.
    pub fn max_dwell(&self, cell: usize) -> usize {
        (self.offsets[cell + 1] - self.offsets[cell] - 1) / self.n_actions
    }

    pub fn column(&self, cell: usize, dwell: Dwell, action: usize) -> usize {
        match dwell {
            Dwell::Finite(d) => {
                debug_assert!(d < self.max_dwell(cell) && action < self.n_actions);
                self.offsets[cell] + d * self.n_actions + action
            }
            Dwell::Infinite => self.offsets[cell + 1] - 1,
        }
    }

    pub fn infinite_column(&self, cell: usize) -> usize {
        self.offsets[cell + 1] - 1
    }

    pub fn decode(&self, col: usize) -> OccColumn {
        let cell = self.offsets.partition_point(|&o| o <= col) - 1;
        let local = col - self.offsets[cell];
        if col + 1 == self.offsets[cell + 1] {
            OccColumn {
                cell,
                dwell: Dwell::Infinite,
                action: 0,
            }
        } else {
            OccColumn {
                cell,
                dwell: Dwell::Finite(local / self.n_actions),
                action: local % self.n_actions,
            }
        }
    }

    pub fn cell_columns(&self, cell: usize) -> std::ops::Range<usize> {
        self.offsets[cell]..self.offsets[cell + 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationVector {
    pub layout: OccupationLayout,
    pub mu: Vec<f64>,
}

impl OccupationVector {
    pub fn zeros(dm: &DiscreteModel) -> Self {
        let layout = OccupationLayout::new(&dm.grid);
        let n = layout.n_columns();
        Self {
            layout,
            mu: vec![0.0; n],
        }
    }

    pub fn get(&self, cell: usize, dwell: Dwell, action: usize) -> f64 {
        self.mu[self.layout.column(cell, dwell, action)]
    }

    pub fn add(&mut self, cell: usize, dwell: Dwell, action: usize, mass: f64) {
        let col = self.layout.column(cell, dwell, action);
        self.mu[col] += mass;
    }

    pub fn total_mass(&self) -> f64 {
        self.mu.iter().sum()
    }

    /// `max |μ₁ − μ₂|` over columns.
    pub fn max_abs_diff(&self, other: &OccupationVector) -> f64 {
        self.mu
            .iter()
            .zip(&other.mu)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Nonzero entries keyed by column description.
    pub fn support(&self) -> Vec<(OccColumn, f64)> {
        self.mu
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(c, &v)| (self.layout.decode(c), v))
            .collect()
    }
}

/// Cell where the impulse of column `(cell, Finite(d), ·)` happens.
pub fn impulse_cell(cell: usize, d: usize) -> usize {
    cell + d
}

/// Cost coefficients `C̄_j` of every column.
pub fn cost_coefficients(dm: &DiscreteModel, layout: &OccupationLayout, j: usize) -> Vec<f64> {
    let mut out = vec![0.0; layout.n_columns()];
    let na = dm.n_actions();
    for cell in 0..dm.n_cells() {
        let kmax = layout.max_dwell(cell);
        let mut dwell = 0.0;
        for d in 0..kmax {
            let at = impulse_cell(cell, d);
            for a in 0..na {
                out[layout.column(cell, Dwell::Finite(d), a)] = dwell + dm.jump_cost(at, a, j);
            }
            dwell += dm.dwell_cost(at, j);
        }
        out[layout.infinite_column(cell)] = dwell;
    }
    out
}

pub fn occupation_cost(mu: &OccupationVector, dm: &DiscreteModel, j: usize) -> f64 {
    cost_coefficients(dm, &mu.layout, j)
        .iter()
        .zip(&mu.mu)
        .fold(0.0, |acc, (c, m)| acc + c * m)
}

/// The LP together with the maps needed to read its solution.
#[derive(Debug, Clone)]
pub struct OccupationLp {
    pub lp: SparseLp,
    pub layout: OccupationLayout,
    /// Objective index `j` of each `≤` row.
    pub constraint_objectives: Vec<usize>,
}

impl OccupationLp {
    pub fn vector(&self, values: &[f64]) -> OccupationVector {
        OccupationVector {
            layout: self.layout.clone(),
            mu: values.to_vec(),
        }
    }
}

/// Balance rows of the characteristic equation: one per cell, where the
/// out-marginal equals `δ_{x₀}` plus jump inflow (inflow only reaches `t = 0` cells).
fn balance_rows(dm: &DiscreteModel, layout: &OccupationLayout) -> Vec<Row> {
    let grid = &dm.grid;
    let na = dm.n_actions();
    let mut rows: Vec<RowBuilder> = (0..grid.n_cells()).map(|_| RowBuilder::new()).collect();
    for (cell, row) in rows.iter_mut().enumerate() {
        for col in layout.cell_columns(cell) {
            row.add(col, 1.0);
        }
    }
    for cell in 0..grid.n_cells() {
        for d in 0..layout.max_dwell(cell) {
            let at = impulse_cell(cell, d);
            for a in 0..na {
                if let JumpTarget::Origin(o) = dm.jump_to(at, a) {
                    rows[grid.origin_cell(o)].add(layout.column(cell, Dwell::Finite(d), a), -1.0);
                }
            }
        }
    }
    let x0 = grid.x0_cell();
    rows.into_iter()
        .enumerate()
        .map(|(c, r)| r.build(if Some(c) == x0 { 1.0 } else { 0.0 }))
        .collect()
}

pub fn build_occupation_lp(dm: &DiscreteModel) -> OccupationLp {
    let layout = OccupationLayout::new(&dm.grid);
    let mut lp = SparseLp::new(layout.n_columns());
    for (col, c) in cost_coefficients(dm, &layout, 0).into_iter().enumerate() {
        lp.set_cost(col, c).expect("column in range");
    }
    for row in balance_rows(dm, &layout) {
        lp.add_eq(row).expect("well-formed balance row");
    }
    let mut constraint_objectives = Vec::new();
    for j in dm.active_constraints() {
        let coeffs = cost_coefficients(dm, &layout, j);
        let entries = coeffs
            .into_iter()
            .enumerate()
            .filter(|&(_, v)| v != 0.0)
            .collect();
        lp.add_le(Row {
            entries,
            rhs: dm.constraint_bounds[j - 1],
        })
        .expect("well-formed constraint row");
        constraint_objectives.push(j);
    }
    OccupationLp {
        lp,
        layout,
        constraint_objectives,
    }
}

/// `∞`-norm residual of the characteristic equation.
pub fn characteristic_residual(mu: &OccupationVector, dm: &DiscreteModel) -> f64 {
    balance_rows(dm, &mu.layout)
        .iter()
        .map(|r| {
            let lhs: f64 = r.entries.iter().map(|&(c, v)| v * mu.mu[c]).sum();
            (lhs - r.rhs).abs()
        })
        .fold(0.0, f64::max)
}

/// Normalizes `μ` at every `t = 0` cell with positive mass; other origins get `(∞, â)`.
pub fn extract_stationary_strategy(mu: &OccupationVector, dm: &DiscreteModel) -> StationaryStrategy {
    let grid = &dm.grid;
    let na = dm.n_actions();
    let mut kernels = BTreeMap::new();
    for o in 0..grid.n_origins() {
        let cell = grid.origin_cell(o);
        let cols = mu.layout.cell_columns(cell);
        let marginal: f64 = mu.mu[cols].iter().sum();
        if !(marginal > 0.0) {
            continue;
        }
        let n = grid.orbit_len[o];
        let mut p_dwell = vec![0.0; n + 1];
        let mut p_action = vec![Vec::new(); n];
        for d in 0..n {
            let masses: Vec<f64> = (0..na).map(|a| mu.get(cell, Dwell::Finite(d), a)).collect();
            let total: f64 = masses.iter().sum();
            if total > 0.0 {
                p_dwell[d] = total / marginal;
                p_action[d] = masses.iter().map(|m| m / total).collect();
            }
        }
        p_dwell[n] = mu.get(cell, Dwell::Infinite, 0) / marginal;
        kernels.insert(o, OriginKernel { p_dwell, p_action });
    }
    StationaryStrategy { kernels }
}
