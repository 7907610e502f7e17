//! Splitting solvers for monotone inclusions with four operators,
//! `0 in A1 x + A2 x + B x + C x`, and their product-space extensions to a
//! finite sum of maximally monotone operators.
//!
//! The crate provides:
//!
//! - [`operators`]: resolvent / forward / cocoercive oracles and a concrete
//!   library (projections onto boxes, balls, segments; normal cones; Moreau
//!   inverses; the benchmark's rotation and translation operators);
//! - [`splitting`]: the three splitting algorithms (`bsfrb`, `bsrfb`,
//!   `sfrdr`) with step-size admissibility rules, an iteration driver, and
//!   the energy diagnostics from their analyses;
//! - [`lifting`]: the weighted product space and the m-operator variants of
//!   the algorithms, bitwise-equivalent to the lifted two-backward forms;
//! - [`problems`]: the Minkowski-sum projection benchmark and synthetic
//!   instances with an independent reference oracle;
//! - [`cli`]: a JSON-configured front end producing per-iteration CSV traces
//!   and sweep summary tables.

pub mod cli;
pub mod error;
pub mod lifting;
pub mod operators;
pub mod problems;
pub mod space;
pub mod splitting;

pub use error::{Error, Result};
pub use space::{PairPoint, Vector, Weights};
