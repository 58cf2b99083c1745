//! Trajectory searches: real shooting for the mixed-boundary formulas and
//! complex roots of the map `w -> X_T(w)` for the complex-trajectory one.

mod klauder;
mod shooting;

use thiserror::Error;

use crate::dynamics::DynamicsError;

pub use klauder::{
    detect_caustics, klauder_initial, refine_w, seed_beyond_caustic, trace_family, wmap_scan, CausticPoint,
    CausticSearch, FamilyLabel, FamilyMember, MemberStatus, ScanLattice, ScanNode, TrajectoryFamily,
    Truncation, WPoint, WScan, NEAR_CAUSTIC_NEWTON,
};
pub use shooting::{
    shoot_p_to_xf, shoot_q_to_xf, ShootingBranch, ShootingGrid, ShootingMode, ShootingSolution, ShootingTable,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootSearchError {
    #[error("Newton iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("|dX_T/dw| = {derivative:e} is too small for Newton (phase-space caustic)")]
    NearCaustic { derivative: f64 },
    #[error("shooting trajectory from initial value {initial} failed")]
    ShootingFailed { initial: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}
