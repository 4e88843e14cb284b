//! Discrete configuration-space model of a robot built from its hardware
//! resolutions, plus exact and closed-form counting of the trajectories
//! that live in it.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod model;
pub mod trajectory;
pub mod transitions;

pub use error::{Error, Result};
