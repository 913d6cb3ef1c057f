use std::collections::BTreeMap;

use crate::LpError;

/// One constraint row stored as sorted `(column, coefficient)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub entries: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Accumulates coefficients for a single row, summing repeated columns.
#[derive(Debug, Clone, Default)]
pub struct RowBuilder {
    coeffs: BTreeMap<usize, f64>,
}

impl RowBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, col: usize, coeff: f64) -> &mut Self {
        *self.coeffs.entry(col).or_insert(0.0) += coeff;
        self
    }

    /// Finishes the row, dropping coefficients that cancelled to exactly zero.
    pub fn build(self, rhs: f64) -> Row {
        Row {
            entries: self.coeffs.into_iter().filter(|&(_, v)| v != 0.0).collect(),
            rhs,
        }
    }
}

/// `min cᵀz` subject to `A z = b`, `G z ≤ h`, `z ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLp {
    objective: Vec<f64>,
    eq_rows: Vec<Row>,
    le_rows: Vec<Row>,
}

impl SparseLp {
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            eq_rows: Vec::new(),
            le_rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_eq(&self) -> usize {
        self.eq_rows.len()
    }

    pub fn n_le(&self) -> usize {
        self.le_rows.len()
    }

    pub fn n_rows(&self) -> usize {
        self.eq_rows.len() + self.le_rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn eq_rows(&self) -> &[Row] {
        &self.eq_rows
    }

    pub fn le_rows(&self) -> &[Row] {
        &self.le_rows
    }

    pub fn set_cost(&mut self, col: usize, cost: f64) -> Result<(), LpError> {
        let n = self.n_vars();
        let slot = self
            .objective
            .get_mut(col)
            .ok_or(LpError::ColumnOutOfRange { col, n_vars: n })?;
        *slot = cost;
        Ok(())
    }

    pub fn add_eq(&mut self, row: Row) -> Result<usize, LpError> {
        self.check_row(&row)?;
        self.eq_rows.push(row);
        Ok(self.eq_rows.len() - 1)
    }

    pub fn add_le(&mut self, row: Row) -> Result<usize, LpError> {
        self.check_row(&row)?;
        self.le_rows.push(row);
        Ok(self.le_rows.len() - 1)
    }

    fn check_row(&self, row: &Row) -> Result<(), LpError> {
        if !row.rhs.is_finite() {
            return Err(LpError::NonFinite("row right-hand side"));
        }
        let mut seen = std::collections::HashSet::with_capacity(row.entries.len());
        for &(col, v) in &row.entries {
            if col >= self.n_vars() {
                return Err(LpError::ColumnOutOfRange {
                    col,
                    n_vars: self.n_vars(),
                });
            }
            if !v.is_finite() {
                return Err(LpError::NonFinite("row coefficient"));
            }
            if !seen.insert(col) {
                return Err(LpError::DuplicateEntry { col });
            }
        }
        Ok(())
    }

    /// Checks every stored invariant; useful after deserialization.
    pub fn validate(&self) -> Result<(), LpError> {
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective coefficient"));
        }
        for row in self.eq_rows.iter().chain(&self.le_rows) {
            self.check_row(row)?;
        }
        Ok(())
    }

    pub fn objective_value(&self, z: &[f64]) -> f64 {
        self.objective.iter().zip(z).map(|(c, x)| c * x).sum()
    }

    /// Returns `(max |Az − b|, max (Gz − h)⁺, max (−z)⁺)`.
    pub fn residuals(&self, z: &[f64]) -> (f64, f64, f64) {
        let dot = |row: &Row| row.entries.iter().map(|&(j, a)| a * z[j]).sum::<f64>();
        let eq = self
            .eq_rows
            .iter()
            .map(|r| (dot(r) - r.rhs).abs())
            .fold(0.0, f64::max);
        let le = self
            .le_rows
            .iter()
            .map(|r| (dot(r) - r.rhs).max(0.0))
            .fold(0.0, f64::max);
        let neg = z.iter().map(|&x| (-x).max(0.0)).fold(0.0, f64::max);
        (eq, le, neg)
    }
}
