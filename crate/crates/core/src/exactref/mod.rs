//! Reference solutions: closed forms for the free particle, the hard wall
//! and the matched oscillator; split-operator propagation on a grid; and
//! bound-state energies.

mod analytic;
mod grid;
mod spectrum;

use thiserror::Error;

pub use analytic::{exact_free, exact_harmonic, exact_wall};
pub use grid::{propagate_grid, propagate_grid_snapshots, Grid, GridWavefunction, SplitOperator};
pub use spectrum::eigenvalues;

/// Largest `|psi|` tolerated at the grid edges.
pub const DEFAULT_LEAK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("x_f = {x_f} is outside the domain x_f > 0")]
    Domain { x_f: f64 },
    #[error("|psi| = {amplitude:e} at the grid boundary at t = {t}")]
    BoundaryLeak { t: f64, amplitude: f64 },
    #[error("level {level} changed by {change:e} under grid refinement")]
    NotConverged { level: usize, change: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("invalid time step {0}")]
    InvalidStep(f64),
    #[error("{0}")]
    Unsupported(&'static str),
}
