use num_complex::Complex64;

use super::ExactError;
use crate::model::{coherent_overlap, CoherentState};
use crate::potentials::PotentialModel;

/// Freely spreading coherent state; `omega = hbar / (mu b^2)`.
pub fn exact_free(state: &CoherentState, x_f: f64, duration: f64) -> Complex64 {
    let (q, p, b) = (state.q(), state.p(), state.b());
    let v = p / state.mu();
    let wt = state.hbar() / (state.mu() * b * b) * duration;
    let spread = Complex64::new(1.0, wt);
    let d = x_f - q - v * duration;
    let gauss = -d * d * Complex64::new(1.0, -wt) / (2.0 * b * b * (1.0 + wt * wt));
    let phase = Complex64::new(0.0, p * (x_f - 0.5 * q - 0.5 * v * duration) / state.hbar());
    state.norm_prefactor() / spread.sqrt() * (gauss + phase).exp()
}

/// Free motion on `x > 0` with an infinite wall at the origin.
pub fn exact_wall(state: &CoherentState, x_f: f64, duration: f64) -> Result<Complex64, ExactError> {
    if !(x_f > 0.0) {
        return Err(ExactError::Domain { x_f });
    }
    Ok(exact_free(state, x_f, duration) - exact_free(state, -x_f, duration))
}

/// Coherent state in the oscillator whose frequency and mass match its own
/// width: it stays coherent, centred on the classical orbit.
pub fn exact_harmonic(
    state: &CoherentState,
    model: &PotentialModel,
    x_f: f64,
    duration: f64,
) -> Result<Complex64, ExactError> {
    let PotentialModel::Harmonic { mass, omega } = *model else {
        return Err(ExactError::Unsupported("exact_harmonic needs a harmonic potential"));
    };
    let scale = 1e-12 * (1.0 + omega.abs());
    if (omega - state.omega()).abs() > scale || (mass - state.mu()).abs() > 1e-12 * (1.0 + mass.abs()) {
        return Err(ExactError::Unsupported("packet width must match the oscillator frequency and mass"));
    }
    let (s, c) = (omega * duration).sin_cos();
    let mw = mass * omega;
    let q_t = state.q() * c + state.p() / mw * s;
    let p_t = state.p() * c - mw * state.q() * s;
    Ok(Complex64::from_polar(1.0, -0.5 * omega * duration) * coherent_overlap(&state.recentred(q_t, p_t), x_f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time_is_overlap() {
        let s = CoherentState::with_width(-1.0, 0.7, 0.6, 1.3, 0.9).unwrap();
        for &x in &[-3.0, -1.0, 0.4] {
            assert!((exact_free(&s, x, 0.0) - coherent_overlap(&s, x)).norm() < 1e-15);
        }
    }

    #[test]
    fn free_peak_and_width() {
        let s = CoherentState::with_width(0.5, 2.0, 1.0, 1.0, 1.0).unwrap();
        let t = 3.0;
        let centre = 0.5 + 2.0 * t;
        let width = (1.0f64 + t * t).sqrt();
        let d = |x: f64| exact_free(&s, x, t).norm_sqr();
        assert!(d(centre) > d(centre + 0.01) && d(centre) > d(centre - 0.01));
        // Density is a Gaussian of rms width b sqrt(1 + w^2 T^2) / sqrt 2.
        let ratio = d(centre + width) / d(centre);
        assert!((ratio - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn free_norm_is_one() {
        let s = CoherentState::with_width(-2.0, -1.5, 0.7, 1.0, 1.0).unwrap();
        for &t in &[0.0, 1.0, 5.0] {
            let dx = 1e-3;
            let norm: f64 = (-60_000..60_000).map(|k| exact_free(&s, k as f64 * dx, t).norm_sqr() * dx).sum();
            assert!((norm - 1.0).abs() < 1e-8, "t = {t}: {norm}");
        }
    }

    #[test]
    fn wall_vanishes_at_origin_and_matches_free_early() {
        let s = CoherentState::with_width(10.0, -2.0, 1.0, 1.0, 1.0).unwrap();
        assert!(exact_free(&s, 0.0, 0.0).norm() < 1e-10);
        for &t in &[0.5, 5.0, 9.0] {
            assert!(exact_wall(&s, 1e-12, t).unwrap().norm() < 1e-10);
        }
        for &x in &[6.0, 8.0, 11.0] {
            assert!((exact_wall(&s, x, 1.0).unwrap() - exact_free(&s, x, 1.0)).norm() < 1e-10);
        }
        assert!(matches!(exact_wall(&s, 0.0, 1.0), Err(ExactError::Domain { .. })));
    }

    #[test]
    fn wall_fringes_near_reflection() {
        // Fringe spacing of the two-term superposition is pi hbar / |p|.
        let p = -4.0;
        let s = CoherentState::with_width(10.0, p, 1.0, 1.0, 1.0).unwrap();
        let t_r = 10.0 / 4.0;
        let dx = 1e-3;
        let xs: Vec<f64> = (1..3000).map(|k| k as f64 * dx).collect();
        let d: Vec<f64> = xs.iter().map(|&x| exact_wall(&s, x, t_r).unwrap().norm_sqr()).collect();
        let minima: Vec<f64> = (1..d.len() - 1).filter(|&k| d[k] < d[k - 1] && d[k] < d[k + 1]).map(|k| xs[k]).collect();
        assert!(minima.len() >= 3);
        let spacing = (minima[2] - minima[0]) / 2.0;
        assert!((spacing - std::f64::consts::PI / 4.0).abs() < 0.05, "{spacing}");
    }

    #[test]
    fn harmonic_rotation() {
        let h = PotentialModel::Harmonic { mass: 1.0, omega: 1.0 };
        let s = CoherentState::new(1.0, 0.5, 1.0, 1.0, 1.0).unwrap();
        let period = 2.0 * std::f64::consts::PI;
        for &x in &[-1.0, 0.3, 2.0] {
            // A full period returns the state up to the phase exp(-i pi).
            let back = exact_harmonic(&s, &h, x, period).unwrap();
            assert!((back + coherent_overlap(&s, x)).norm() < 1e-12);
        }
        let wrong = PotentialModel::Harmonic { mass: 1.0, omega: 2.0 };
        assert!(exact_harmonic(&s, &wrong, 0.0, 1.0).is_err());
    }
}
