//! Solver suite for the two-dimensional simplified Ericksen-Leslie system
//! with time-dependent director boundary data, together with its discrete
//! tangent and adjoint models and a projected-gradient boundary-control loop.

pub mod error;
pub mod grid;
pub mod state;
pub mod control;
pub mod adjoint;
pub mod linearized;

pub use error::{Error, Result};
pub mod forward;
pub mod presets;
pub mod verify;
pub mod io;
