//! Simulation of the dissipative preparation of a two-mode squeezed vacuum
//! state in the 2D motion of a trapped three-level ion.
//!
//! Units: `ħ = 1`; times and rates are measured in units of the main sideband
//! coupling `λ`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod runner;
pub mod sparse;
pub mod states;
pub mod superop;

pub use error::{Error, Result};
