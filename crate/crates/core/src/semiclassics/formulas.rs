//! Pointwise semiclassical wavefunctions.

use num_complex::Complex64;
use thiserror::Error;

use super::branch::inverse_sqrt_on_branch;
use crate::dynamics::{CentralEndpoint, TrajectoryRecord};
use crate::model::CoherentState;

/// Below this `|m_qq + i m_qp|` the prefactor is treated as divergent.
pub const CAUSTIC_DIVERGENCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum FormulaError {
    #[error("prefactor diverges: |m_qq + i m_qp| = {0:e}")]
    CausticDivergence(f64),
}

fn prefactor(state: &CoherentState, m_plus: Complex64, phase: f64) -> Result<Complex64, FormulaError> {
    let modulus = m_plus.norm();
    if !(modulus > CAUSTIC_DIVERGENCE) {
        return Err(FormulaError::CausticDivergence(modulus));
    }
    Ok(state.norm_prefactor() * inverse_sqrt_on_branch(m_plus, phase))
}

fn i_over_hbar(state: &CoherentState) -> Complex64 {
    Complex64::new(0.0, 1.0 / state.hbar())
}

/// `F = S + p (x0 - q/2) + i hbar (x0 - q)^2 / 2b^2` for a trajectory with
/// `u(0) = z`; the complex-trajectory wavefunction is `A exp(iF/hbar)`.
pub fn exponent_f(trajectory: &TrajectoryRecord, state: &CoherentState) -> Complex64 {
    let x0 = trajectory.start.x;
    let d = x0 - state.q();
    trajectory.action
        + state.p() * (x0 - 0.5 * state.q())
        + Complex64::new(0.0, state.hbar()) * d * d / (2.0 * state.b() * state.b())
}

/// Complex-trajectory wavefunction of one trajectory satisfying `u(0) = z`.
pub fn psi_ct(trajectory: &TrajectoryRecord, state: &CoherentState) -> Result<Complex64, FormulaError> {
    let a = prefactor(state, trajectory.tangent.m_plus(), trajectory.m_plus_phase)?;
    Ok(a * (i_over_hbar(state) * exponent_f(trajectory, state)).exp())
}

/// Thawed Gaussian evaluated from the central real trajectory.
pub fn psi_tga(state: &CoherentState, central: &CentralEndpoint, x_f: f64) -> Result<Complex64, FormulaError> {
    let m = &central.tangent;
    let m_plus = m.m_plus();
    let a = prefactor(state, m_plus, central.m_plus_phase)?;
    let dx = (x_f - central.q_t) / state.b();
    let exponent = i_over_hbar(state) * (central.action + 0.5 * state.p() * state.q() + central.p_t * (x_f - central.q_t))
        - 0.5 * m.m_minus_conj() / m_plus * dx * dx;
    Ok(a * exponent.exp())
}

/// The Gaussian damping exponent of the `(x_f, q)` formula; large values
/// mean a negligible contribution.
pub fn xfq_damping(state: &CoherentState, p_i: f64, trajectory: &TrajectoryRecord) -> Complex64 {
    let m = &trajectory.tangent;
    let dp = (state.p() - p_i) / state.c();
    0.5 * Complex64::i() * m.qp / m.m_plus() * dp * dp
}

/// Real trajectory from `q` to `x_f` with initial momentum `p_i`.
pub fn psi_xfq(state: &CoherentState, p_i: f64, trajectory: &TrajectoryRecord) -> Result<Complex64, FormulaError> {
    let a = prefactor(state, trajectory.tangent.m_plus(), trajectory.m_plus_phase)?;
    let exponent = i_over_hbar(state) * (trajectory.action + 0.5 * state.p() * state.q())
        - xfq_damping(state, p_i, trajectory);
    Ok(a * exponent.exp())
}

pub fn xfp_damping(state: &CoherentState, q_i: f64, trajectory: &TrajectoryRecord) -> Complex64 {
    let m = &trajectory.tangent;
    let dq = (state.q() - q_i) / state.b();
    0.5 * m.qq / m.m_plus() * dq * dq
}

/// Real trajectory from `q_i` to `x_f` with initial momentum `p`.
pub fn psi_xfp(state: &CoherentState, q_i: f64, trajectory: &TrajectoryRecord) -> Result<Complex64, FormulaError> {
    let a = prefactor(state, trajectory.tangent.m_plus(), trajectory.m_plus_phase)?;
    let exponent = i_over_hbar(state)
        * (trajectory.action + 0.5 * state.p() * state.q() + state.p() * (q_i - state.q()))
        - xfp_damping(state, q_i, trajectory);
    Ok(a * exponent.exp())
}

/// True when the Gaussian integral behind the complex-trajectory formula is
/// not convergent at the saddle: `Im(dp_i/dx_i) >= hbar/b^2`.
pub fn gaussian_integral_invalid(trajectory: &TrajectoryRecord, state: &CoherentState) -> bool {
    let m = &trajectory.tangent;
    if m.qp.norm() == 0.0 {
        return false;
    }
    // dp_i/dx_i = -S_ii = -(c/b) m_qq / m_qp
    let dpdx = -(state.c() / state.b()) * m.qq / m.qp;
    dpdx.im >= state.hbar() / (state.b() * state.b())
}
