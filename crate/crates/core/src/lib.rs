//! Traveling waves of a diffusive one-predator, two-prey system.
//!
//! The crate computes the closed-form equilibria and invasion speeds,
//! certifies the explicit upper/lower solution pairs, simulates the PDE and
//! solves the wave profile equations as a boundary-value problem.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod config;
pub mod equilibria;
pub mod error;
pub mod model;
pub mod pde;
pub mod presets;
pub mod waves_analytic;

pub use config::Config;
pub use equilibria::{KineticState, TWState};
pub use error::{Error, Result};
pub use model::{check_conditions, derive, validate, ConditionReport, DerivedQuantities, Params};
