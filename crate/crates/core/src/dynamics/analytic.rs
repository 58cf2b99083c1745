//! Closed-form trajectories: the free particle and the hard wall at `x = 0`.

use num_complex::Complex64;

use crate::model::TangentMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallPath {
    Direct,
    Reflected,
}

/// A classical path between two points on the positive half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallTrajectory {
    pub action: f64,
    pub p_i: f64,
    pub p_f: f64,
    pub kind: WallPath,
}

/// The two classical paths from `x_i` to `x_f` in time `duration` in front
/// of a hard wall: the direct one and the one bouncing off the wall.
pub fn wall_trajectories(x_i: f64, x_f: f64, duration: f64, mu: f64) -> [WallTrajectory; 2] {
    let direct_p = mu * (x_f - x_i) / duration;
    let reflected_p = mu * (x_f + x_i) / duration;
    [
        WallTrajectory {
            action: 0.5 * mu * (x_f - x_i).powi(2) / duration,
            p_i: direct_p,
            p_f: direct_p,
            kind: WallPath::Direct,
        },
        WallTrajectory {
            action: 0.5 * mu * (x_f + x_i).powi(2) / duration,
            p_i: -reflected_p,
            p_f: reflected_p,
            kind: WallPath::Reflected,
        },
    ]
}

/// Free-particle action `mu (x_f - x_i)^2 / 2T`; valid for complex endpoints.
pub fn free_action(x_i: Complex64, x_f: Complex64, duration: f64, mu: f64) -> Complex64 {
    0.5 * mu * (x_f - x_i) * (x_f - x_i) / duration
}

/// Free-particle tangent matrix for coherent-state frequency `omega`.
pub fn free_tangent(omega: f64, duration: f64) -> TangentMatrix {
    TangentMatrix::from_real(1.0, omega * duration, 0.0, 1.0)
}
