//! Symbolic-numeric checks for first-order Hamiltonian operators of
//! hydrodynamic type, their compatibility, and reciprocal transformations of
//! hydrodynamic systems, with the drift-flux example as ready-made presets.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod driftflux;
pub mod error;
pub mod exprkit;
pub mod geomtensor;
pub mod hamcheck;
pub mod hydrosys;
pub mod report;

pub use error::CheckError;
pub use report::{CheckReport, ConditionRecord, PlanEcho};
