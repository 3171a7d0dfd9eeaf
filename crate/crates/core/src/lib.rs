//! Monte Carlo solver for the two-species SKT cross-diffusion system built
//! on time-reversed diffusions, multiplicative functionals and the flow
//! Jacobian, with an explicit finite-difference oracle and a verification
//! harness.
//!
//! The crate is `no_std` (it needs `alloc`); IO, configuration and the
//! command line live in the `skt` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod coeffs;
pub mod error;
pub mod estimator;
pub mod fd;
pub mod field;
pub mod grid;
pub mod mc;
pub mod noise;
pub mod params;
pub mod sde;
pub mod test_fn;
pub mod verify;

pub use coeffs::{CorrectionSign, Lower2, PointCoeffs};
pub use error::{Error, Result};
pub use estimator::EstimatorResult;
pub use field::{DensityField, FieldSample, InitialProfile};
pub use grid::GridSpec;
pub use mc::{Executor, FieldTrajectory, LayerReport, Sequential, SolverConfig};
pub use params::{SktParameters, Species};
pub use sde::{Direction, Functional, PathSpec, PathState};
pub use test_fn::TestFunction;
pub use verify::{CheckConfig, CheckReport};
