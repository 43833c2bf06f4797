//! Viscous boundary-layer expansion for two-dimensional micropolar flow in a
//! periodic half-plane, together with the numerical machinery to verify it
//! against direct simulation.

pub mod assemble;
pub mod banded;
pub mod check;
pub mod config;
pub mod error;
pub mod field;
pub mod full;
pub mod grid;
pub mod io;
pub mod layer;
pub mod ops;
pub mod outer;
pub mod pipeline;
pub mod verify;
pub mod cutoff;

pub use error::{Error, Result};
