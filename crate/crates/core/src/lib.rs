//! Planning distributed generation for resilient and equitable distribution
//! networks: fault-scenario generation and reduction, a two-stage stochastic
//! MILP with an energy-equity constraint, solver plumbing and evaluation.

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the model algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod evaluate;
pub mod milp;
pub mod netmodel;
pub mod reduce;
pub mod scengen;
pub mod solver;
pub mod study;

pub use error::{Error, Result};
