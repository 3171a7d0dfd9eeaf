use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::mc::FieldTrajectory;
use crate::params::Species;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("base diffusion rate of species {species} must be positive, got {value}")]
    NonPositiveDiffusion { species: Species, value: f64 },

    #[error("rate {name} must be nonnegative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),

    #[error("initial density of species {species} is negative ({value}) at node {node}")]
    NegativeInitialData { species: Species, node: usize, value: f64 },

    #[error("field value at node {node} is not finite")]
    NonFiniteField { node: usize },

    #[error("test function width must be positive, got {0}")]
    NonPositiveWidth(f64),

    #[error("diffusion radicand d_q + d_q1*u1 + d_q2*u2 = {0} is not positive")]
    NonPositiveRadicand(f64),

    #[error("path state left the finite range after {step} steps")]
    NonFiniteState { step: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),

    #[error("cannot parse initial profile `{0}`")]
    BadProfile(String),

    #[error("time step {dt} exceeds the explicit stability bound {admissible}")]
    CflViolation { dt: f64, admissible: f64 },

    #[error("trajectories are defined on different grids or snapshot times")]
    GridMismatch,

    #[error("fixed-point iteration stopped after {iterations} iterations with residual {residual}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        residual_history: Vec<f64>,
        last: Box<FieldTrajectory>,
    },
}
