//! The aggregated LP over `η = (η_box, η_jump)` and the aggregation map from
//! occupation vectors.

use serde::{Deserialize, Serialize};
use simplex::{Row, RowBuilder, SparseLp};

use crate::discretize::{DiscreteModel, JumpTarget};
use crate::lp_occupation::{impulse_cell, Dwell, OccupationLayout, OccupationVector};
use crate::model::TestFunction;

/// `η_box` per cell and `η_jump` per `(cell, action)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedVector {
    pub eta_box: Vec<f64>,
    pub eta_jump: Vec<f64>,
    pub n_actions: usize,
}

impl AggregatedVector {
    pub fn zeros(dm: &DiscreteModel) -> Self {
        Self {
            eta_box: vec![0.0; dm.n_cells()],
            eta_jump: vec![0.0; dm.n_cells() * dm.n_actions()],
            n_actions: dm.n_actions(),
        }
    }

    /// Reads an LP solution laid out as boxes then jumps.
    pub fn from_columns(values: &[f64], dm: &DiscreteModel) -> Self {
        let nc = dm.n_cells();
        Self {
            eta_box: values[..nc].to_vec(),
            eta_jump: values[nc..].to_vec(),
            n_actions: dm.n_actions(),
        }
    }

    pub fn to_columns(&self) -> Vec<f64> {
        self.eta_box.iter().chain(&self.eta_jump).copied().collect()
    }

    pub fn jump(&self, cell: usize, a: usize) -> f64 {
        self.eta_jump[cell * self.n_actions + a]
    }

    pub fn jump_mut(&mut self, cell: usize, a: usize) -> &mut f64 {
        &mut self.eta_jump[cell * self.n_actions + a]
    }

    /// Total jump mass at a cell.
    pub fn jump_mass(&self, cell: usize) -> f64 {
        self.eta_jump[cell * self.n_actions..(cell + 1) * self.n_actions].iter().sum()
    }

    pub fn add_scaled(&mut self, other: &AggregatedVector, s: f64) {
        for (a, b) in self.eta_box.iter_mut().zip(&other.eta_box) {
            *a += s * b;
        }
        for (a, b) in self.eta_jump.iter_mut().zip(&other.eta_jump) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.eta_box.iter_mut().for_each(|v| *v *= s);
        out.eta_jump.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Largest entry of `self − other`.
    pub fn max_excess_over(&self, other: &AggregatedVector) -> f64 {
        self.to_columns()
            .iter()
            .zip(other.to_columns())
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.eta_box
            .iter()
            .chain(&self.eta_jump)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `η_box(c) = Δt · Σ μ` over dwell rows still flowing through `c`;
/// `η_jump(c, a) = Σ μ` over rows whose impulse happens at `c` with action `a`.
pub fn aggregate(mu: &OccupationVector, dm: &DiscreteModel) -> AggregatedVector {
    let mut eta = AggregatedVector::zeros(dm);
    let dt = dm.dt();
    let layout = &mu.layout;
    for cell in 0..dm.n_cells() {
        let kmax = layout.max_dwell(cell);
        // Mass still dwelling when the flow reaches cell + i.
        let mut passing = mu.get(cell, Dwell::Infinite, 0);
        let mut through = vec![0.0; kmax];
        for d in (0..kmax).rev() {
            through[d] = passing;
            for a in 0..dm.n_actions() {
                let m = mu.get(cell, Dwell::Finite(d), a);
                if m != 0.0 {
                    *eta.jump_mut(impulse_cell(cell, d), a) += m;
                    passing += m;
                }
            }
        }
        for (i, &m) in through.iter().enumerate() {
            eta.eta_box[cell + i] += dt * m;
        }
    }
    eta
}

pub fn aggregated_cost(eta: &AggregatedVector, dm: &DiscreteModel, j: usize) -> f64 {
    let boxes = (0..dm.n_cells()).fold(0.0, |acc, c| acc + dm.dwell_rate(c, j) * eta.eta_box[c]);
    (0..dm.n_cells())
        .flat_map(|c| (0..dm.n_actions()).map(move |a| (c, a)))
        .fold(boxes, |acc, (c, a)| acc + dm.jump_cost(c, a, j) * eta.jump(c, a))
}

/// Boxes occupy columns `0..cells`, jumps follow as `cells + cell·|A| + a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatedLayout {
    pub n_cells: usize,
    pub n_actions: usize,
}

impl AggregatedLayout {
    pub fn n_columns(&self) -> usize {
        self.n_cells * (self.n_actions + 1)
    }

    pub fn box_column(&self, cell: usize) -> usize {
        cell
    }

    pub fn jump_column(&self, cell: usize, a: usize) -> usize {
        self.n_cells + cell * self.n_actions + a
    }
}

#[derive(Debug, Clone)]
pub struct AggregatedLp {
    pub lp: SparseLp,
    pub layout: AggregatedLayout,
    pub constraint_objectives: Vec<usize>,
}

/// One row per cell, obtained from the single-cell ramp test functions:
///
/// * `k = 0`: `η_box/Δt + Σ_a η_jump − arrivals = δ_{x₀}`
/// * `k ≥ 1`: `η_box(k)/Δt − η_box(k−1)/Δt + Σ_a η_jump(k) = 0`
pub fn balance_rows(dm: &DiscreteModel) -> Vec<Row> {
    let grid = &dm.grid;
    let layout = AggregatedLayout {
        n_cells: dm.n_cells(),
        n_actions: dm.n_actions(),
    };
    let inv_dt = 1.0 / grid.dt;
    let mut rows: Vec<RowBuilder> = (0..grid.n_cells()).map(|_| RowBuilder::new()).collect();
    for cell in 0..grid.n_cells() {
        rows[cell].add(layout.box_column(cell), inv_dt);
        if grid.cells[cell].k > 0 {
            rows[cell].add(layout.box_column(cell - 1), -inv_dt);
        }
        for a in 0..dm.n_actions() {
            rows[cell].add(layout.jump_column(cell, a), 1.0);
            if let JumpTarget::Origin(o) = dm.jump_to(cell, a) {
                rows[grid.origin_cell(o)].add(layout.jump_column(cell, a), -1.0);
            }
        }
    }
    let x0 = grid.x0_cell();
    rows.into_iter()
        .enumerate()
        .map(|(c, r)| r.build(if Some(c) == x0 { 1.0 } else { 0.0 }))
        .collect()
}

pub fn build_aggregated_lp(dm: &DiscreteModel) -> AggregatedLp {
    let layout = AggregatedLayout {
        n_cells: dm.n_cells(),
        n_actions: dm.n_actions(),
    };
    let mut lp = SparseLp::new(layout.n_columns());
    let cost_row = |j: usize| -> Vec<(usize, f64)> {
        let mut v = Vec::with_capacity(layout.n_columns());
        for c in 0..layout.n_cells {
            v.push((layout.box_column(c), dm.dwell_rate(c, j)));
        }
        for c in 0..layout.n_cells {
            for a in 0..layout.n_actions {
                v.push((layout.jump_column(c, a), dm.jump_cost(c, a, j)));
            }
        }
        v
    };
    for (col, c) in cost_row(0) {
        lp.set_cost(col, c).expect("column in range");
    }
    for row in balance_rows(dm) {
        lp.add_eq(row).expect("well-formed balance row");
    }
    let mut constraint_objectives = Vec::new();
    for j in dm.active_constraints() {
        let entries = cost_row(j).into_iter().filter(|&(_, v)| v != 0.0).collect();
        lp.add_le(Row {
            entries,
            rhs: dm.constraint_bounds[j - 1],
        })
        .expect("well-formed constraint row");
        constraint_objectives.push(j);
    }
    AggregatedLp {
        lp,
        layout,
        constraint_objectives,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// Signed residual of each balance row, indexed by cell.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

pub fn verify_aggregation_feasibility(eta: &AggregatedVector, dm: &DiscreteModel) -> BalanceReport {
    let z = eta.to_columns();
    let residuals: Vec<f64> = balance_rows(dm)
        .iter()
        .map(|r| r.entries.iter().map(|&(c, v)| v * z[c]).sum::<f64>() - r.rhs)
        .collect();
    let max_residual = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
    BalanceReport {
        residuals,
        max_residual,
    }
}

/// Left-hand side of the test-function constraint
/// `w(x₀) + Σ χw·η_box − Σ w·η_jump + Σ w(l(·,a))·η_jump`, which vanishes on feasible `η`.
pub fn test_function_residual(eta: &AggregatedVector, dm: &DiscreteModel, w: &TestFunction) -> f64 {
    let grid = &dm.grid;
    let mut total = w.value_at_origin(grid, grid.x0_origin);
    for c in 0..grid.n_cells() {
        total += w.chi(c) * eta.eta_box[c];
        for a in 0..dm.n_actions() {
            let m = eta.jump(c, a);
            if m == 0.0 {
                continue;
            }
            let target = match dm.jump_to(c, a) {
                JumpTarget::Origin(o) => Some(o),
                JumpTarget::Absorbed => None,
            };
            total += (w.value_at_origin(grid, target) - w.value(c)) * m;
        }
    }
    total
}

/// Largest excess of the box density `η_box/Δt` over the mass entering its orbit.
pub fn normality_violation(eta: &AggregatedVector, dm: &DiscreteModel) -> f64 {
    let grid = &dm.grid;
    let mut entering = vec![0.0; grid.n_origins()];
    if let Some(o) = grid.x0_origin {
        entering[o] += 1.0;
    }
    for c in 0..grid.n_cells() {
        for a in 0..dm.n_actions() {
            if let JumpTarget::Origin(o) = dm.jump_to(c, a) {
                entering[o] += eta.jump(c, a);
            }
        }
    }
    (0..grid.n_cells())
        .map(|c| eta.eta_box[c] / grid.dt - entering[grid.cells[c].origin])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Variable counts of both LPs on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub cells: usize,
    pub actions: usize,
    /// Longest orbit, i.e. the largest number of finite dwell rows.
    pub max_dwell_rows: usize,
    pub occupation_columns: usize,
    pub aggregated_columns: usize,
    /// `cells × (max_dwell_rows + 1) × actions`, the full product index set.
    pub occupation_product_dimension: usize,
    /// `cells × (actions + 1)`.
    pub aggregated_product_dimension: usize,
}

pub fn dimension_report(dm: &DiscreteModel) -> DimensionReport {
    let grid = &dm.grid;
    let max_dwell_rows = grid.orbit_len.iter().copied().max().unwrap_or(0);
    let cells = grid.n_cells();
    let actions = grid.n_actions();
    DimensionReport {
        cells,
        actions,
        max_dwell_rows,
        occupation_columns: OccupationLayout::new(grid).n_columns(),
        aggregated_columns: cells * (actions + 1),
        occupation_product_dimension: cells * (max_dwell_rows + 1) * actions,
        aggregated_product_dimension: cells * (actions + 1),
    }
}
