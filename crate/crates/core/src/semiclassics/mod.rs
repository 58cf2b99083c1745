//! Semiclassical wavefunctions: pointwise formulas, family filtering and
//! sweeps over final positions.

mod assemble;
pub mod branch;
mod filter;
mod formulas;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::rootsearch::RootSearchError;

pub use assemble::{
    assemble, Assembly, BranchPolicy, Contribution, ContributionSource, Formula, SampleFlags, SearchSettings, System,
    WavefunctionSample,
};
pub use filter::{filter_families, StokesCut};
pub use formulas::{
    exponent_f, gaussian_integral_invalid, psi_ct, psi_tga, psi_xfp, psi_xfq, xfp_damping, xfq_damping, FormulaError,
    CAUSTIC_DIVERGENCE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemiclassicalError {
    #[error("no family contains the central trajectory")]
    MissingMain,
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    RootSearch(#[from] RootSearchError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}
