//! Impulse control of deterministic flows through linear programs on a grid.
//!
//! A continuous model ([`model::ModelSpec`]) is laid out on a grid of orbit
//! cells ([`discretize`]). Two LPs compute the optimal total cost: one over
//! occupation measures indexed by dwell and action ([`lp_occupation`]), and a
//! smaller one over aggregated flow and jump masses ([`lp_aggregated`]).
//! A solution of the aggregated LP becomes a Markov strategy ([`strategy`]),
//! which can be executed by the Monte Carlo simulator ([`simulate`]) and
//! checked against value iteration ([`oracle`]).
//!
//! ```
//! use impulse_lp::benchmarks::{build_expgrowth, preset};
//! use impulse_lp::discretize::{build_grid, discretize};
//! use impulse_lp::lp_aggregated::build_aggregated_lp;
//! use impulse_lp::oracle::dp_value;
//!
//! let spec = build_expgrowth(&preset("expgrowth-c5").unwrap()).unwrap();
//! let dm = discretize(&spec, &build_grid(&spec, 0.25, 7).unwrap()).unwrap();
//! let lp = simplex::solve(&build_aggregated_lp(&dm).lp).unwrap();
//! let dp = dp_value(&dm).unwrap();
//! assert!((lp.objective - dp.initial_value(&dm)).abs() < 1e-9);
//! ```

pub mod benchmarks;
pub mod cli;
pub mod discretize;
pub mod error;
pub mod export;
pub mod lp_aggregated;
pub mod lp_occupation;
pub mod model;
pub mod oracle;
pub mod simulate;
pub mod strategy;
