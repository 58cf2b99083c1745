//! Semiclassical propagation of Gaussian wavepackets with complex and real
//! classical trajectories, plus exact reference solutions to check them.

pub mod dynamics;
pub mod exactref;
pub mod model;
pub mod potentials;
pub mod rootsearch;
pub mod semiclassics;

pub use model::{CoherentState, ComplexPhasePoint, TangentMatrix};
pub use num_complex::Complex64;
pub use potentials::PotentialModel;
