//! A revised simplex kernel for sparse linear programs.
//!
//! Problems have the form `min cᵀz` subject to `A z = b`, `G z ≤ h` and `z ≥ 0`.
//! The solver keeps a dense LU factorization of the basis, applies
//! product-form eta updates between refactorizations and prices with
//! Dantzig's rule, falling back to Bland's rule after a long run of
//! degenerate pivots.
//!
//! ```
//! use simplex::{solve, RowBuilder, SparseLp, LpStatus};
//!
//! // min -x - y  s.t.  x + 2y <= 4,  x <= 2
//! let mut lp = SparseLp::new(2);
//! lp.set_cost(0, -1.0).unwrap();
//! lp.set_cost(1, -1.0).unwrap();
//! let mut r = RowBuilder::new();
//! r.add(0, 1.0).add(1, 2.0);
//! lp.add_le(r.build(4.0)).unwrap();
//! let mut r = RowBuilder::new();
//! r.add(0, 1.0);
//! lp.add_le(r.build(2.0)).unwrap();
//! let sol = solve(&lp).unwrap();
//! assert_eq!(sol.status, LpStatus::Optimal);
//! assert!((sol.objective + 3.0).abs() < 1e-12);
//! ```

mod lp;
mod lu;
mod solver;
pub mod text;

pub use lp::{Row, RowBuilder, SparseLp};
pub use solver::{solve, solve_with, LpSolution, LpStatus, SolveDiagnostics, SolverOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("column {col} out of range for {n_vars} variables")]
    ColumnOutOfRange { col: usize, n_vars: usize },
    #[error("column {col} appears twice in one row")]
    DuplicateEntry { col: usize },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("iteration limit reached after {0} pivots")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
