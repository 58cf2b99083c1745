//! Coherent-state parameters, complex phase-space points and tangent matrices.
//!
//! Every tangent matrix in this crate is dimensionless: it maps initial
//! displacements `(δx/b, δp/c)` to final displacements in the same scaled
//! basis, where `b` and `c` are the length and momentum scales of the
//! coherent state being propagated.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use thiserror::Error;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Below this modulus of `m_qp` the Van Vleck form diverges.
pub const FOCAL_POINT_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid coherent-state parameter {name} = {value} (must be finite and > 0)")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("trajectory is at a focal point (|m_qp| = {m_qp_abs:e})")]
    FocalPoint { m_qp_abs: f64 },
}

/// A Gaussian packet centred at `(q, p)`, i.e. the coherent state `|z>` of a
/// harmonic oscillator with mass `mu` and frequency `omega`.
///
/// The scales `b` and `c` are derived from `(hbar, mu, omega)`; `c` is
/// computed as `hbar / b` so that `b * c == hbar` up to a single rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentState {
    q: f64,
    p: f64,
    b: f64,
    c: f64,
    hbar: f64,
    mu: f64,
    omega: f64,
}

impl CoherentState {
    pub fn new(q: f64, p: f64, hbar: f64, mu: f64, omega: f64) -> Result<Self, ModelError> {
        for (name, value) in [("hbar", hbar), ("mu", mu), ("omega", omega)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        for (name, value) in [("q", q), ("p", p)] {
            if !value.is_finite() {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        let b = (hbar / (mu * omega)).sqrt();
        let c = hbar / b;
        Ok(Self { q, p, b, c, hbar, mu, omega })
    }

    /// Builds the state from its width `b`; the oscillator frequency becomes
    /// `hbar / (mu b^2)`.
    pub fn with_width(q: f64, p: f64, b: f64, hbar: f64, mu: f64) -> Result<Self, ModelError> {
        if !(b.is_finite() && b > 0.0) {
            return Err(ModelError::InvalidParameter { name: "b", value: b });
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(ModelError::InvalidParameter { name: "mu", value: mu });
        }
        Self::new(q, p, hbar, mu, hbar / (mu * b * b))
    }

    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Complex label `z = (q/b + i p/c) / sqrt(2)`.
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.q / self.b, self.p / self.c) * FRAC_1_SQRT_2
    }

    /// Same packet, moved to a new centre.
    pub fn recentred(&self, q: f64, p: f64) -> Self {
        Self { q, p, ..*self }
    }

    /// Normalisation prefactor `pi^(-1/4) b^(-1/2)` shared by every formula.
    pub fn norm_prefactor(&self) -> f64 {
        PI.powf(-0.25) / self.b.sqrt()
    }
}

/// A point of the (complexified) phase space at real time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPhasePoint {
    pub x: Complex64,
    pub p: Complex64,
    pub t: f64,
}

impl ComplexPhasePoint {
    pub fn new(x: Complex64, p: Complex64, t: f64) -> Self {
        Self { x, p, t }
    }

    pub fn real(x: f64, p: f64, t: f64) -> Self {
        Self::new(Complex64::new(x, 0.0), Complex64::new(p, 0.0), t)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite() && self.t.is_finite()
    }
}

/// 2x2 complex tangent (monodromy) matrix in the `(δx/b, δp/c)` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentMatrix {
    pub qq: Complex64,
    pub qp: Complex64,
    pub pq: Complex64,
    pub pp: Complex64,
}

impl TangentMatrix {
    pub const IDENTITY: Self = Self {
        qq: Complex64 { re: 1.0, im: 0.0 },
        qp: Complex64 { re: 0.0, im: 0.0 },
        pq: Complex64 { re: 0.0, im: 0.0 },
        pp: Complex64 { re: 1.0, im: 0.0 },
    };

    pub fn new(qq: Complex64, qp: Complex64, pq: Complex64, pp: Complex64) -> Self {
        Self { qq, qp, pq, pp }
    }

    pub fn from_real(qq: f64, qp: f64, pq: f64, pp: f64) -> Self {
        Self::new(qq.into(), qp.into(), pq.into(), pp.into())
    }

    pub fn determinant(&self) -> Complex64 {
        self.qq * self.pp - self.qp * self.pq
    }

    /// `m_qq + i m_qp`, the quantity whose square root sets every prefactor.
    pub fn m_plus(&self) -> Complex64 {
        self.qq + I * self.qp
    }

    /// `m_pp - i m_pq`, numerator of the thawed-Gaussian width.
    pub fn m_minus_conj(&self) -> Complex64 {
        self.pp - I * self.pq
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            qq: self.qq * other.qq + self.qp * other.pq,
            qp: self.qq * other.qp + self.qp * other.pp,
            pq: self.pq * other.qq + self.pp * other.pq,
            pp: self.pq * other.qp + self.pp * other.pp,
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::new(self.qq * factor, self.qp * factor, self.pq * factor, self.pp * factor)
    }

    pub fn is_finite(&self) -> bool {
        self.qq.is_finite() && self.qp.is_finite() && self.pq.is_finite() && self.pp.is_finite()
    }

    /// Rebuilds the tangent matrix from the second derivatives of the action.
    pub fn from_action_derivatives(d: &ActionDerivatives, state: &CoherentState) -> Self {
        let ratio = state.c() / state.b();
        Self {
            qq: -d.s_ii / d.s_if,
            qp: -ratio / d.s_if,
            pq: (d.s_if - d.s_ff * d.s_ii / d.s_if) / ratio,
            pp: -d.s_ff / d.s_if,
        }
    }
}

/// Second derivatives of `S(x_f, x_i; T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDerivatives {
    pub s_ii: Complex64,
    pub s_if: Complex64,
    pub s_ff: Complex64,
}

/// `<x|z>` for the coherent state, including the `exp(-i p q / 2 hbar)`
/// phase convention.
pub fn coherent_overlap(state: &CoherentState, x: f64) -> Complex64 {
    let dx = x - state.q;
    let gauss = (-dx * dx / (2.0 * state.b * state.b)).exp();
    let phase = state.p * (x - 0.5 * state.q) / state.hbar;
    Complex64::from_polar(state.norm_prefactor() * gauss, phase)
}

/// `(u, v)` coordinates of a phase point; `u = v*` only for real points.
pub fn to_uv(point: &ComplexPhasePoint, state: &CoherentState) -> (Complex64, Complex64) {
    let xs = point.x / state.b;
    let ps = point.p / state.c;
    ((xs + I * ps) * FRAC_1_SQRT_2, (xs - I * ps) * FRAC_1_SQRT_2)
}

/// Inverse of [`to_uv`].
pub fn from_uv(u: Complex64, v: Complex64, t: f64, state: &CoherentState) -> ComplexPhasePoint {
    let x = (u + v) * FRAC_1_SQRT_2 * state.b;
    let p = (u - v) * FRAC_1_SQRT_2 * state.c / I;
    ComplexPhasePoint::new(x, p, t)
}

/// `(x0 - q)/b + i (p0 - p)/c`; vanishes exactly when `u(0) = z`.
pub fn stationarity_residual(x0: Complex64, p0: Complex64, state: &CoherentState) -> Complex64 {
    (x0 - state.q) / state.b + I * (p0 - state.p) / state.c
}

pub fn action_second_derivatives(
    m: &TangentMatrix,
    state: &CoherentState,
) -> Result<ActionDerivatives, ModelError> {
    if m.qp.norm() < FOCAL_POINT_EPS {
        return Err(ModelError::FocalPoint { m_qp_abs: m.qp.norm() });
    }
    let ratio = Complex64::from(state.c / state.b);
    Ok(ActionDerivatives {
        s_ii: ratio * m.qq / m.qp,
        s_if: -ratio / m.qp,
        s_ff: ratio * m.pp / m.qp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit_state() -> CoherentState {
        CoherentState::new(0.0, 0.0, 1.0, 1.0, 1.0).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn scales_follow_hbar_mu_omega() {
        let s = CoherentState::new(1.0, 2.0, 0.7, 1.3, 2.9).unwrap();
        assert!((s.b() * s.c() - s.hbar()).abs() <= f64::EPSILON * s.hbar());
        assert!((s.b() / (0.7f64 / (1.3 * 2.9)).sqrt() - 1.0).abs() < 1e-12);
        assert!((s.c() / (0.7f64 * 1.3 * 2.9).sqrt() - 1.0).abs() < 1e-12);
        let z = s.z();
        assert!((z.re * 2f64.sqrt() * s.b() - 1.0).abs() < 1e-12);
        assert!((z.im * 2f64.sqrt() * s.c() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn width_constructor_round_trips() {
        let s = CoherentState::with_width(-5.0, 0.5, 0.5, 1.0, 1.0).unwrap();
        assert!((s.b() - 0.5).abs() < 1e-14);
        assert!((s.omega() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CoherentState::new(0.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(CoherentState::new(0.0, 0.0, 1.0, -1.0, 1.0).is_err());
        assert!(CoherentState::new(f64::NAN, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(CoherentState::with_width(0.0, 0.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn overlap_at_centre() {
        let v = coherent_overlap(&unit_state(), 0.0);
        assert!((v.re - PI.powf(-0.25)).abs() < 1e-15);
        assert!((PI.powf(-0.25) - 0.751_125_544_464_942_5).abs() < 1e-15);
        assert_eq!(v.im, 0.0);

        let s = CoherentState::with_width(-5.0, 0.5, 1.0, 1.0, 1.0).unwrap();
        let v = coherent_overlap(&s, -5.0);
        assert!((v.norm() - PI.powf(-0.25)).abs() < 1e-15);
        assert!((v.arg() - (-1.25)).abs() < 1e-14);
    }

    #[test]
    fn overlap_is_normalised() {
        for &(q, p, b) in &[(0.0, 0.0, 1.0), (-5.0, 0.5, 0.5), (3.0, -2.0, 2.0)] {
            let s = CoherentState::with_width(q, p, b, 1.0, 1.0).unwrap();
            let n = 20_000;
            let h = 16.0 * b / n as f64;
            let total: f64 = (0..n)
                .map(|k| coherent_overlap(&s, q - 8.0 * b + (k as f64 + 0.5) * h).norm_sqr() * h)
                .sum();
            assert!((total - 1.0).abs() < 1e-6, "norm {total}");
        }
    }

    #[test]
    fn uv_examples() {
        let s = CoherentState::new(1.5, -0.5, 1.0, 2.0, 0.5).unwrap();
        let (u, v) = to_uv(&ComplexPhasePoint::real(1.5, -0.5, 0.0), &s);
        assert!(close(u, s.z(), 1e-15));
        assert!(close(v, u.conj(), 1e-15));

        let unit = unit_state();
        let (u, v) = to_uv(&ComplexPhasePoint::new(I, 0.0.into(), 0.0), &unit);
        assert!(close(u, I * FRAC_1_SQRT_2, 1e-15));
        assert!(close(v, I * FRAC_1_SQRT_2, 1e-15));
        assert!(!close(u, v.conj(), 1e-3));
    }

    #[test]
    fn residual_examples() {
        let s = CoherentState::new(0.3, 1.1, 1.0, 1.0, 2.0).unwrap();
        let centre = stationarity_residual(0.3.into(), 1.1.into(), &s);
        assert_eq!(centre, Complex64::new(0.0, 0.0));
        let shifted = stationarity_residual((0.3 + s.b()).into(), 1.1.into(), &s);
        assert!(close(shifted, 1.0.into(), 1e-15));
    }

    #[test]
    fn free_particle_stationary_point_satisfies_both_conditions() {
        // x0, p0 of the free particle's complex trajectory, written in closed form.
        let s = CoherentState::with_width(1.0, 0.8, 0.7, 1.0, 1.3).unwrap();
        for &(x_f, t) in &[(2.0, 0.5), (-1.0, 3.0), (4.5, 7.0)] {
            let wt = Complex64::new(1.0, s.omega() * t);
            let x0 = (x_f + I * s.omega() * t * (s.q() + I * s.b() / s.c() * s.p())) / wt;
            let p0 = (s.p() + I * s.c() / s.b() * (x_f - s.q())) / wt;
            assert!(stationarity_residual(x0, p0, &s).norm() < 1e-12);
            assert!((x0 + p0 / s.mu() * t - x_f).norm() < 1e-12);
        }
    }

    #[test]
    fn free_particle_action_derivatives() {
        let s = CoherentState::new(0.0, 0.0, 1.0, 2.0, 1.5).unwrap();
        let t = 1.7;
        let m = TangentMatrix::from_real(1.0, s.omega() * t, 0.0, 1.0);
        let d = action_second_derivatives(&m, &s).unwrap();
        let mu_over_t = s.mu() / t;
        assert!(close(d.s_ii, mu_over_t.into(), 1e-12));
        assert!(close(d.s_ff, mu_over_t.into(), 1e-12));
        assert!(close(d.s_if, (-mu_over_t).into(), 1e-12));
    }

    #[test]
    fn identity_is_a_focal_point() {
        let err = action_second_derivatives(&TangentMatrix::IDENTITY, &unit_state()).unwrap_err();
        assert!(matches!(err, ModelError::FocalPoint { .. }));
    }

    #[test]
    fn quarter_period_oscillator_action_derivatives() {
        // S = (mu w / 2 sin wT) ((xi^2 + xf^2) cos wT - 2 xi xf); at wT = pi/2
        // only the cross term survives: S_if = -mu w = -c/b, S_ii = S_ff = 0.
        let s = CoherentState::new(0.0, 0.0, 1.0, 1.7, 0.9).unwrap();
        let (sn, cs) = FRAC_PI_2.sin_cos();
        let m = TangentMatrix::from_real(cs, sn, -sn, cs);
        let d = action_second_derivatives(&m, &s).unwrap();
        let mu_w = s.mu() * s.omega();
        assert!(d.s_ii.norm() < 1e-15 * mu_w);
        assert!(d.s_ff.norm() < 1e-15 * mu_w);
        assert!(close(d.s_if, (-mu_w).into(), 1e-12));
        assert!(close(d.s_if, (-s.c() / s.b()).into(), 1e-12));
    }

    fn arb_complex() -> impl Strategy<Value = Complex64> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| Complex64::new(re, im))
    }

    proptest! {
        #[test]
        fn uv_round_trip(x in arb_complex(), p in arb_complex(), hbar in 0.2..3.0f64,
                         mu in 0.2..3.0f64, omega in 0.2..3.0f64) {
            let s = CoherentState::new(0.0, 0.0, hbar, mu, omega).unwrap();
            let pt = ComplexPhasePoint::new(x, p, 0.0);
            let (u, v) = to_uv(&pt, &s);
            let back = from_uv(u, v, 0.0, &s);
            prop_assert!(close(back.x, x, 1e-14 * (1.0 + x.norm())));
            prop_assert!(close(back.p, p, 1e-14 * (1.0 + p.norm())));
        }

        #[test]
        fn action_derivatives_round_trip(qq in arb_complex(), qp in arb_complex(), pq in arb_complex(),
                                         omega in 0.3..3.0f64) {
            prop_assume!(qp.norm() > 0.1 && qq.norm() > 0.1);
            // Choose m_pp so the matrix is unimodular.
            let pp = (Complex64::from(1.0) + qp * pq) / qq;
            let m = TangentMatrix::new(qq, qp, pq, pp);
            let s = CoherentState::new(0.0, 0.0, 1.0, 1.3, omega).unwrap();
            let d = action_second_derivatives(&m, &s).unwrap();
            let back = TangentMatrix::from_action_derivatives(&d, &s);
            let scale = 1.0 + qq.norm() + qp.norm() + pq.norm() + pp.norm();
            prop_assert!(close(back.qq, m.qq, 1e-10 * scale));
            prop_assert!(close(back.qp, m.qp, 1e-10 * scale));
            prop_assert!(close(back.pq, m.pq, 1e-10 * scale));
            prop_assert!(close(back.pp, m.pp, 1e-10 * scale));
        }

        #[test]
        fn residual_is_affine(a in 0.0..1.0f64, x1 in arb_complex(), p1 in arb_complex(),
                              x2 in arb_complex(), p2 in arb_complex()) {
            let s = CoherentState::new(0.4, -0.2, 1.0, 1.0, 2.0).unwrap();
            let lhs = stationarity_residual(x1 * a + x2 * (1.0 - a), p1 * a + p2 * (1.0 - a), &s);
            let rhs = stationarity_residual(x1, p1, &s) * a + stationarity_residual(x2, p2, &s) * (1.0 - a);
            prop_assert!(close(lhs, rhs, 1e-12));
        }
    }
}
