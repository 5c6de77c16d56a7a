//! Radial oscillations of a gas bubble in a compressible inviscid liquid.
//!
//! The liquid is described in Lagrangian mass coordinates, which pins the free bubble
//! surface at `x = 0`. [`solver`] integrates the resulting hyperbolic system, [`waves`]
//! splits the solution into incoming and outgoing pressure waves and builds the linear
//! bubble response, and [`diagnostics`] measures energies and decay.

// `!(x > 0.0)` is how range checks here reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod model;
pub mod solver;
pub mod waves;

pub use diagnostics::{PowerFit, RunSeries};
pub use error::{Error, Result};
pub use grid::{Grid, InitSpec, SimState};
pub use model::{Eigenpair, FluidParams, Mode};
pub use solver::{run, OuterBc, SolverConfig, Trajectory};
pub use waves::{WaveField, Xi0Mode};
