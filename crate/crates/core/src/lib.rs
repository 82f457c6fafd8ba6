//! Finite-volume simulator for incompressible, inhomogeneous, heat-conducting
//! flow in a closed box. Velocity, density and temperature are coupled through
//! a temperature-dependent viscosity and conductivity; each implicit time step
//! is solved by Picard sweeps over transport, momentum and heat. The scheme is
//! built so that the discrete mass, divergence, energy and minimum-principle
//! statements hold to round-off or solver tolerance, not just asymptotically.

// Validation guards are written !(x > 0.0) on purpose: the negation rejects
// NaN, which the flipped comparison would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod grid;
pub mod heat;
pub mod linsolve;
pub mod momentum;
pub mod picard;
pub mod runner;
pub mod scenario;
pub mod snapshot;
pub mod state;
pub mod transport;

pub use error::{Error, Result};
