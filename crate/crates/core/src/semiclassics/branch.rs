use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

/// Follows the phase of `m_qq + i m_qp` continuously so that the prefactor
/// `(m_qq + i m_qp)^(-1/2)` never jumps sign.
///
/// Starts at `1 + 0i` (the identity at `T = 0`, positive root). Successive
/// values fed to [`BranchTracker::advance`] must differ in phase by less
/// than `pi/2`; larger increments are counted as violations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchTracker {
    previous: Complex64,
    phase: f64,
    violations: usize,
}

impl Default for BranchTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl BranchTracker {
    pub fn new() -> Self {
        Self { previous: Complex64::new(1.0, 0.0), phase: 0.0, violations: 0 }
    }

    /// Starts from an already-known continuous phase.
    pub fn resume(value: Complex64, phase: f64) -> Self {
        Self { previous: value, phase, violations: 0 }
    }

    /// Feeds the next value; returns the phase increment applied.
    pub fn advance(&mut self, value: Complex64) -> f64 {
        if value.norm() == 0.0 || !value.is_finite() {
            self.violations += 1;
            return 0.0;
        }
        let increment = (value / self.previous).arg();
        if increment.abs() >= FRAC_PI_2 {
            self.violations += 1;
        }
        self.phase += increment;
        self.previous = value;
        increment
    }

    /// Phase increment `value` would cause, without applying it.
    pub fn peek(&self, value: Complex64) -> f64 {
        (value / self.previous).arg()
    }

    pub fn value(&self) -> Complex64 {
        self.previous
    }

    /// Continuous phase of the tracked quantity.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Number of whole half-turns accumulated.
    pub fn half_turns(&self) -> i64 {
        (self.phase / PI).trunc() as i64
    }

    pub fn violations(&self) -> usize {
        self.violations
    }

    pub fn sqrt(&self) -> Complex64 {
        Complex64::from_polar(self.previous.norm().sqrt(), 0.5 * self.phase)
    }

    pub fn inverse_sqrt(&self) -> Complex64 {
        Complex64::from_polar(1.0 / self.previous.norm().sqrt(), -0.5 * self.phase)
    }
}

/// `value^(-1/2)` on the branch selected by a continuous phase.
pub fn inverse_sqrt_on_branch(value: Complex64, phase: f64) -> Complex64 {
    Complex64::from_polar(1.0 / value.norm().sqrt(), -0.5 * phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_on_positive_root() {
        let t = BranchTracker::new();
        assert_eq!(t.sqrt(), Complex64::new(1.0, 0.0));
        assert_eq!(t.half_turns(), 0);
    }

    #[test]
    fn follows_a_full_turn_without_sign_jumps() {
        let mut t = BranchTracker::new();
        let mut prev = t.sqrt();
        for k in 1..=400 {
            let theta = 2.0 * PI * k as f64 / 200.0;
            t.advance(Complex64::from_polar(1.0, theta));
            let s = t.sqrt();
            assert!((s - prev).norm() < 0.05, "jump at step {k}");
            prev = s;
        }
        // Two full turns of m_+ bring the square root back to +1.
        assert!((t.sqrt() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(t.half_turns(), 4);
        assert_eq!(t.violations(), 0);
        // After one full turn the principal root would be wrong by a sign.
        let mut one = BranchTracker::new();
        for k in 1..=200 {
            one.advance(Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 200.0));
        }
        assert!((one.sqrt() + Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn large_increment_is_counted() {
        let mut t = BranchTracker::new();
        t.advance(Complex64::new(-1.0, 0.1));
        assert_eq!(t.violations(), 1);
    }
}
