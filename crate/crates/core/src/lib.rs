//! Numerical toolkit for quantized type II blowup of the energy supercritical
//! corotational wave map into the sphere in dimensions `d >= 7`.
//!
//! The modules build on each other: [`numerics`] supplies grids and solvers,
//! [`ground_state`] computes the harmonic map profile, [`linop`] the
//! linearized operators around it, [`profiles`] the approximate blowup
//! profiles, [`bsystem`] the finite dimensional modulation dynamics and
//! [`wave`] a direct simulation of the radial wave map.

pub mod bsystem;
pub mod error;
pub mod ground_state;
pub mod linop;
pub mod numerics;
pub mod profiles;
pub mod verify;
pub mod wave;

pub use error::{Error, Result};
