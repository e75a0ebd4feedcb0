//! Solver kernels for a Keller-Segel-Stokes system with saturated chemotactic
//! sensitivity on a uniform MAC grid.
//!
//! The crate is `no_std` (with `alloc`) and contains no IO: field containers
//! and stencils ([`fields`]), model configuration ([`model`]), the Stokes
//! projection integrator ([`stokes`]), positivity-preserving transport
//! steppers ([`transport`]), monitored functionals ([`diagnostics`]) and the
//! ODE comparison bound with its verification harness ([`odelemma`]).
//! File formats, configuration parsing and the CLI live in the companion
//! `kss-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod fields;
pub(crate) mod math;
pub mod model;
pub mod odelemma;
pub mod stokes;
pub mod transport;

pub use error::{Error, Result};
pub use fields::{BcTag, Grid, ScalarField, VecBc, VectorField};
pub use model::{InitialData, ModelParams};
pub use stokes::{PoissonSolveParams, StokesStepReport};
pub use transport::{SimState, StepControl, StepReport};
