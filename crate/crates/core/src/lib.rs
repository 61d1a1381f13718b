//! Radial ground states of the dual (transformed) quasilinear Schrödinger
//! equation, their mass map λ ↦ ‖Φ⁻¹(v_λ)‖₂², prescribed-mass solves and
//! the small/large-λ asymptotic laws.

pub mod error;
pub mod models;
pub mod numerics;
pub mod radial;
pub mod asymptotics;
pub mod branch;
pub mod verify;
pub mod cli;

pub use error::{Error, Result};
pub use models::{DualModel, NonlinearityModel, PhiModel};
