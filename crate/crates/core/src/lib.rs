//! Linear and nonlinear models of a single-lane ring road where one
//! controlled vehicle drives among human drivers following the optimal
//! velocity model.
//!
//! The crate covers:
//!
//! - [`ovm`]: the car-following law, equilibria and linearization,
//! - [`ring`]: assembly of the `2n x 2n` state-space model,
//! - [`spectral`]: block-DFT diagonalization and the first (spacing-sum) mode,
//! - [`controllability`]: Kalman and PBH tests, stabilizability,
//! - [`sim`]: RK4 and Euler-Maruyama integration with reproducible noise.
//!
//! Everything is `no_std` with `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod controllability;
pub mod error;
pub mod linalg;
pub mod ovm;
pub mod ring;
pub mod sim;
pub mod spectral;

pub use error::{Error, ErrorKind, Result};
pub use ovm::{Equilibrium, LinearCoeffs, OvmParams};
pub use ring::{assemble, DisturbanceVector, LinearRingModel, RingSpec, StateVector};

pub use nalgebra;
pub use num_complex;
