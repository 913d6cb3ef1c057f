use crate::lu::BasisLu;
use crate::{LpError, SparseLp};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Smallest admissible pivot element in the ratio test.
    pub pivot_tol: f64,
    /// Primal feasibility tolerance.
    pub feas_tol: f64,
    /// Reduced-cost tolerance for optimality.
    pub opt_tol: f64,
    /// Number of eta updates between refactorizations.
    pub refactor_interval: usize,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    /// `None` means `10 · (rows + columns)`.
    pub bland_threshold: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-10,
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            refactor_interval: 64,
            max_iterations: 1_000_000,
            bland_threshold: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub refactorizations: usize,
    pub bland_activations: usize,
    /// Maximum violation of `Az = b`, `Gz ≤ h`, `z ≥ 0`.
    pub primal_residual: f64,
    /// Most negative reduced cost (or dual sign violation) at termination.
    pub dual_infeasibility: f64,
    /// Largest complementary-slackness product.
    pub complementarity: f64,
    /// `bᵀy_eq + hᵀy_le`.
    pub dual_objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values; empty unless `status` is `Optimal`.
    pub primal: Vec<f64>,
    pub objective: f64,
    /// Duals of equality rows (free sign).
    pub duals_eq: Vec<f64>,
    /// Duals of `≤` rows (nonpositive at optimality for a minimization).
    pub duals_le: Vec<f64>,
    pub diagnostics: SolveDiagnostics,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

struct Eta {
    row: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

struct Simplex<'a> {
    lp: &'a SparseLp,
    opts: &'a SolverOptions,
    m: usize,
    /// Structural plus slack columns.
    nn: usize,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
    rhs: Vec<f64>,
    sign: Vec<f64>,
    basis: Vec<usize>,
    position: Vec<usize>,
    x_b: Vec<f64>,
    lu: Option<BasisLu>,
    etas: Vec<Eta>,
    diag: SolveDiagnostics,
}

const NONBASIC: usize = usize::MAX;

enum PhaseResult {
    Optimal,
    Unbounded,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a SparseLp, opts: &'a SolverOptions) -> Self {
        let n = lp.n_vars();
        let n_eq = lp.n_eq();
        let m = lp.n_rows();
        let nn = n + lp.n_le();
        let rows = lp.eq_rows().iter().chain(lp.le_rows());
        let mut rhs = Vec::with_capacity(m);
        let mut sign = Vec::with_capacity(m);
        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in rows.enumerate() {
            let s = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            sign.push(s);
            rhs.push(s * row.rhs);
            for &(j, v) in &row.entries {
                per_col[j].push((i, s * v));
            }
        }
        let mut col_ptr = Vec::with_capacity(nn + 1);
        let mut col_idx = Vec::new();
        let mut col_val = Vec::new();
        col_ptr.push(0);
        for col in per_col {
            for (i, v) in col {
                col_idx.push(i);
                col_val.push(v);
            }
            col_ptr.push(col_idx.len());
        }
        for r in 0..lp.n_le() {
            let i = n_eq + r;
            col_idx.push(i);
            col_val.push(sign[i]);
            col_ptr.push(col_idx.len());
        }
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            if i >= n_eq && sign[i] > 0.0 {
                basis.push(n + (i - n_eq));
            } else {
                basis.push(nn + i);
            }
        }
        let mut position = vec![NONBASIC; nn + m];
        for (i, &b) in basis.iter().enumerate() {
            position[b] = i;
        }
        Self {
            lp,
            opts,
            m,
            nn,
            col_ptr,
            col_idx,
            col_val,
            x_b: rhs.clone(),
            rhs,
            sign,
            basis,
            position,
            lu: None,
            etas: Vec::new(),
            diag: SolveDiagnostics::default(),
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.nn
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if self.is_artificial(j) {
            vec![(j - self.nn, 1.0)]
        } else {
            let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
            self.col_idx[a..b]
                .iter()
                .copied()
                .zip(self.col_val[a..b].iter().copied())
                .collect()
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let cols: Vec<_> = self.basis.iter().map(|&j| self.column(j)).collect();
        self.lu = Some(BasisLu::factor(self.m, &cols, 1e-13)?);
        self.etas.clear();
        self.diag.refactorizations += 1;
        let mut x = self.rhs.clone();
        self.ftran(&mut x);
        let bound = 1e3 * self.opts.feas_tol * (1.0 + self.rhs_scale());
        for v in &mut x {
            if *v < 0.0 {
                if *v < -bound {
                    return Err(LpError::Numerical(format!(
                        "basic solution lost feasibility after refactorization ({v:e})"
                    )));
                }
                *v = 0.0;
            }
        }
        self.x_b = x;
        Ok(())
    }

    fn rhs_scale(&self) -> f64 {
        self.rhs.iter().fold(0.0, |a: f64, b| a.max(b.abs()))
    }

    fn ftran(&self, v: &mut [f64]) {
        if let Some(lu) = &self.lu {
            lu.ftran(v);
        }
        for eta in &self.etas {
            let xr = v[eta.row] / eta.pivot;
            if xr != 0.0 {
                for &(i, d) in &eta.entries {
                    v[i] -= d * xr;
                }
            }
            v[eta.row] = xr;
        }
    }

    fn btran(&self, v: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = v[eta.row];
            for &(i, d) in &eta.entries {
                s -= v[i] * d;
            }
            v[eta.row] = s / eta.pivot;
        }
        if let Some(lu) = &self.lu {
            lu.btran(v);
        }
    }

    fn duals(&self, cost: &dyn Fn(usize) -> f64) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| cost(j)).collect();
        self.btran(&mut y);
        y
    }

    fn reduced_cost(&self, j: usize, cj: f64, y: &[f64]) -> f64 {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        let mut d = cj;
        for k in a..b {
            d -= y[self.col_idx[k]] * self.col_val[k];
        }
        d
    }

    fn pivot(&mut self, q: usize, r: usize, d: Vec<f64>) -> Result<(), LpError> {
        let dr = d[r];
        let theta = (self.x_b[r] / dr).max(0.0);
        for (i, &di) in d.iter().enumerate() {
            if i != r && di != 0.0 {
                let v = self.x_b[i] - theta * di;
                self.x_b[i] = if v < 0.0 && v > -self.opts.feas_tol { 0.0 } else { v };
            }
        }
        self.x_b[r] = theta;
        let leaving = self.basis[r];
        self.position[leaving] = NONBASIC;
        self.basis[r] = q;
        self.position[q] = r;
        let entries = d
            .into_iter()
            .enumerate()
            .filter(|&(i, v)| i != r && v != 0.0)
            .collect();
        self.etas.push(Eta {
            row: r,
            pivot: dr,
            entries,
        });
        self.diag.iterations += 1;
        if self.etas.len() >= self.opts.refactor_interval {
            self.refactor()?;
        }
        if self.diag.iterations > self.opts.max_iterations {
            return Err(LpError::IterationLimit(self.diag.iterations));
        }
        Ok(())
    }

    fn run_phase(&mut self, phase_one: bool) -> Result<PhaseResult, LpError> {
        let n = self.lp.n_vars();
        let nn = self.nn;
        let cost_p1 = move |j: usize| if j >= nn { 1.0 } else { 0.0 };
        let c: &'a [f64] = self.lp.objective();
        let threshold = self
            .opts
            .bland_threshold
            .unwrap_or(10 * (self.m + self.nn));
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            let y = if phase_one {
                self.duals(&cost_p1)
            } else {
                self.duals(&|j| if j < n { c[j] } else { 0.0 })
            };
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.nn {
                if self.position[j] != NONBASIC {
                    continue;
                }
                let cj = if phase_one || j >= n { 0.0 } else { c[j] };
                let dj = self.reduced_cost(j, cj, &y);
                if dj < -self.opts.opt_tol {
                    if bland {
                        entering = Some((j, dj));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| dj < best) {
                        entering = Some((j, dj));
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Ok(PhaseResult::Optimal);
            };
            let mut d = vec![0.0; self.m];
            for (i, v) in self.column(q) {
                d[i] = v;
            }
            self.ftran(&mut d);
            let Some(r) = self.ratio_test(&d, phase_one, bland) else {
                return Ok(PhaseResult::Unbounded);
            };
            let step = self.x_b[r] / d[r];
            if step.abs() <= 1e-12 {
                degenerate_run += 1;
                if !bland && degenerate_run > threshold {
                    bland = true;
                    self.diag.bland_activations += 1;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            self.pivot(q, r, d)?;
        }
    }

    fn ratio_test(&self, d: &[f64], phase_one: bool, bland: bool) -> Option<usize> {
        let tol = self.opts.pivot_tol;
        // A zero-level artificial left in the basis must leave before it can turn positive.
        if !phase_one {
            let mut best: Option<(usize, f64)> = None;
            for (i, &di) in d.iter().enumerate() {
                if self.is_artificial(self.basis[i]) && di.abs() > tol
                    && best.is_none_or(|(_, b)| di.abs() > b) {
                    best = Some((i, di.abs()));
                }
            }
            if let Some((i, _)) = best {
                return Some(i);
            }
        }
        if bland {
            let mut best: Option<(usize, f64)> = None;
            for (i, &di) in d.iter().enumerate() {
                if di > tol {
                    let ratio = self.x_b[i].max(0.0) / di;
                    match best {
                        None => best = Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12
                                || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi])
                            {
                                best = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            return best.map(|(i, _)| i);
        }
        let mut bound = f64::INFINITY;
        for (i, &di) in d.iter().enumerate() {
            if di > tol {
                bound = bound.min((self.x_b[i].max(0.0) + self.opts.feas_tol) / di);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, &di) in d.iter().enumerate() {
            if di > tol && self.x_b[i].max(0.0) / di <= bound
                && best.is_none_or(|(_, b)| di > b) {
                best = Some((i, di));
            }
        }
        best.map(|(i, _)| i)
    }

    fn drive_out_artificials(&mut self) -> Result<(), LpError> {
        for r in 0..self.m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let mut rho = vec![0.0; self.m];
            rho[r] = 1.0;
            self.btran(&mut rho);
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.nn {
                if self.position[j] != NONBASIC {
                    continue;
                }
                let alpha = -self.reduced_cost(j, 0.0, &rho);
                if alpha.abs() > 1e-7 && best.is_none_or(|(_, b)| alpha.abs() > b) {
                    best = Some((j, alpha.abs()));
                }
            }
            if let Some((q, _)) = best {
                let mut d = vec![0.0; self.m];
                for (i, v) in self.column(q) {
                    d[i] = v;
                }
                self.ftran(&mut d);
                self.pivot(q, r, d)?;
            }
        }
        Ok(())
    }

    fn solve(mut self) -> Result<LpSolution, LpError> {
        let n = self.lp.n_vars();
        let m = self.m;
        self.refactor()?;
        let needs_phase_one = self.basis.iter().any(|&j| self.is_artificial(j));
        if needs_phase_one {
            match self.run_phase(true)? {
                PhaseResult::Optimal => {}
                PhaseResult::Unbounded => {
                    return Err(LpError::Numerical("phase one reported unbounded".into()))
                }
            }
            self.diag.phase1_iterations = self.diag.iterations;
            self.refactor()?;
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.x_b)
                .filter(|(&j, _)| self.is_artificial(j))
                .map(|(_, &x)| x)
                .sum();
            if infeas > self.opts.feas_tol * (1.0 + self.rhs_scale()) {
                return Ok(self.terminal(LpStatus::Infeasible));
            }
            self.drive_out_artificials()?;
            self.refactor()?;
        }
        if let PhaseResult::Unbounded = self.run_phase(false)? {
            return Ok(self.terminal(LpStatus::Unbounded));
        }
        self.refactor()?;
        let c = self.lp.objective();
        let y = self.duals(&|j| if j < n { c[j] } else { 0.0 });
        let mut z = vec![0.0; n];
        let mut slack = vec![0.0; self.lp.n_le()];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < n {
                z[j] = self.x_b[i];
            } else if j < self.nn {
                slack[j - n] = self.x_b[i];
            }
        }
        let y_orig: Vec<f64> = (0..m).map(|i| y[i] * self.sign[i]).collect();
        let n_eq = self.lp.n_eq();
        let duals_eq = y_orig[..n_eq].to_vec();
        let duals_le = y_orig[n_eq..].to_vec();

        let (re, rl, rn) = self.lp.residuals(&z);
        let mut dual_inf: f64 = 0.0;
        let mut comp: f64 = 0.0;
        for (j, &zj) in z.iter().enumerate() {
            let dj = self.reduced_cost(j, c[j], &y);
            dual_inf = dual_inf.max(-dj);
            comp = comp.max((dj * zj).abs());
        }
        for (r, &s) in slack.iter().enumerate() {
            dual_inf = dual_inf.max(duals_le[r]);
            comp = comp.max((duals_le[r] * s).abs());
        }
        let dual_objective = self
            .lp
            .eq_rows()
            .iter()
            .zip(&duals_eq)
            .chain(self.lp.le_rows().iter().zip(&duals_le))
            .map(|(row, y)| row.rhs * y)
            .sum();
        self.diag.primal_residual = re.max(rl).max(rn);
        self.diag.dual_infeasibility = dual_inf;
        self.diag.complementarity = comp;
        self.diag.dual_objective = dual_objective;
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective: self.lp.objective_value(&z),
            primal: z,
            duals_eq,
            duals_le,
            diagnostics: self.diag,
        })
    }

    fn terminal(self, status: LpStatus) -> LpSolution {
        LpSolution {
            status,
            primal: Vec::new(),
            objective: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            },
            duals_eq: Vec::new(),
            duals_le: Vec::new(),
            diagnostics: self.diag,
        }
    }
}

/// Solves the LP with default options.
pub fn solve(lp: &SparseLp) -> Result<LpSolution, LpError> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &SparseLp, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    if lp.n_rows() == 0 {
        if lp.objective().iter().any(|&c| c < 0.0) {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                primal: Vec::new(),
                objective: f64::NEG_INFINITY,
                duals_eq: Vec::new(),
                duals_le: Vec::new(),
                diagnostics: SolveDiagnostics::default(),
            });
        }
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            primal: vec![0.0; lp.n_vars()],
            objective: 0.0,
            duals_eq: Vec::new(),
            duals_le: Vec::new(),
            diagnostics: SolveDiagnostics::default(),
        });
    }
    Simplex::new(lp, opts).solve()
}
