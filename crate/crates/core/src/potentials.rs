//! One-dimensional potentials, continued analytically to complex positions.

use num_complex::Complex64;

use crate::model::ComplexPhasePoint;

/// Potential energy models. All of them are entire functions of `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialModel {
    Free,
    /// `V = mu omega^2 X^2 / 2`.
    Harmonic { mass: f64, omega: f64 },
    /// `V = -exp(-X^2)`.
    InvertedGaussian,
    /// `V = a X^2 + b X^4`.
    Quartic { a: f64, b: f64 },
}

/// `V`, `V'` and `V''` at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValue {
    pub v: Complex64,
    pub dv: Complex64,
    pub d2v: Complex64,
}

impl PotentialModel {
    pub fn evaluate(&self, x: Complex64) -> PotentialValue {
        if x.im == 0.0 {
            let (v, dv, d2v) = self.evaluate_real(x.re);
            return PotentialValue { v: v.into(), dv: dv.into(), d2v: d2v.into() };
        }
        match *self {
            PotentialModel::Free => PotentialValue {
                v: Complex64::default(),
                dv: Complex64::default(),
                d2v: Complex64::default(),
            },
            PotentialModel::Harmonic { mass, omega } => {
                let k = mass * omega * omega;
                PotentialValue { v: 0.5 * k * x * x, dv: k * x, d2v: k.into() }
            }
            PotentialModel::InvertedGaussian => {
                let g = (-x * x).exp();
                PotentialValue { v: -g, dv: 2.0 * x * g, d2v: (2.0 - 4.0 * x * x) * g }
            }
            PotentialModel::Quartic { a, b } => {
                let x2 = x * x;
                PotentialValue {
                    v: x2 * (a + b * x2),
                    dv: x * (2.0 * a + 4.0 * b * x2),
                    d2v: 2.0 * a + 12.0 * b * x2,
                }
            }
        }
    }

    /// Real-argument path: returns `(V, V', V'')`.
    pub fn evaluate_real(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            PotentialModel::Free => (0.0, 0.0, 0.0),
            PotentialModel::Harmonic { mass, omega } => {
                let k = mass * omega * omega;
                (0.5 * k * x * x, k * x, k)
            }
            PotentialModel::InvertedGaussian => {
                let g = (-x * x).exp();
                (-g, 2.0 * x * g, (2.0 - 4.0 * x * x) * g)
            }
            PotentialModel::Quartic { a, b } => {
                let x2 = x * x;
                (x2 * (a + b * x2), x * (2.0 * a + 4.0 * b * x2), 2.0 * a + 12.0 * b * x2)
            }
        }
    }

    /// True when Hamilton's equations are linear, so the map `X_T(w)` has
    /// no critical points.
    pub fn has_linear_flow(&self) -> bool {
        matches!(self, PotentialModel::Free | PotentialModel::Harmonic { .. })
    }

    pub fn potential(&self, x: Complex64) -> Complex64 {
        self.evaluate(x).v
    }

    /// `H = P^2 / 2 mu + V(X)`.
    pub fn hamiltonian(&self, point: &ComplexPhasePoint, mu: f64) -> Complex64 {
        point.p * point.p / (2.0 * mu) + self.potential(point.x)
    }

    pub fn name(&self) -> &'static str {
        match self {
            PotentialModel::Free => "free",
            PotentialModel::Harmonic { .. } => "harmonic",
            PotentialModel::InvertedGaussian => "inverted_gaussian",
            PotentialModel::Quartic { .. } => "quartic",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    const MODELS: [PotentialModel; 4] = [
        PotentialModel::Free,
        PotentialModel::Harmonic { mass: 1.3, omega: 0.7 },
        PotentialModel::InvertedGaussian,
        PotentialModel::Quartic { a: 0.5, b: 0.1 },
    ];

    #[test]
    fn quartic_turning_point_energy() {
        let v = PotentialModel::Quartic { a: 0.5, b: 0.1 }.evaluate(1.6197.into());
        assert!((v.v.re - 2.0).abs() < 1e-3, "{}", v.v);
        let h = PotentialModel::Quartic { a: 0.5, b: 0.1 }
            .hamiltonian(&ComplexPhasePoint::real(0.0, -2.0, 0.0), 1.0);
        assert_eq!(h, Complex64::new(2.0, 0.0));
    }

    #[test]
    fn inverted_gaussian_values() {
        let v = PotentialModel::InvertedGaussian.evaluate(0.0.into());
        assert_eq!((v.v.re, v.dv.re, v.d2v.re), (-1.0, 0.0, 2.0));
        let v = PotentialModel::InvertedGaussian.evaluate(Complex64::new(0.0, 1.0));
        assert!((v.v - Complex64::from(-E)).norm() < 1e-14);
        // V'(i) = 2 i e, V''(i) = 6 e
        assert!((v.dv - Complex64::new(0.0, 2.0 * E)).norm() < 1e-13);
        assert!((v.d2v - Complex64::from(6.0 * E)).norm() < 1e-13);
        let h = PotentialModel::InvertedGaussian.hamiltonian(&ComplexPhasePoint::real(-5.0, 0.5, 0.0), 1.0);
        assert!((h.re - (0.125 - (-25f64).exp())).abs() < 1e-16);
    }

    #[test]
    fn free_hamiltonian_is_kinetic() {
        let h = PotentialModel::Free.hamiltonian(&ComplexPhasePoint::real(12.0, 1.5, 0.0), 2.0);
        assert!((h.re - 1.5 * 1.5 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn real_arguments_give_exactly_real_outputs() {
        for m in MODELS {
            for &x in &[-2.3, 0.0, 0.4, 1.9] {
                let v = m.evaluate(x.into());
                assert_eq!((v.v.im, v.dv.im, v.d2v.im), (0.0, 0.0, 0.0));
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for m in MODELS {
            for &x in &[-1.7, -0.3, 0.0, 0.8, 2.1] {
                let (v0, dv, d2v) = m.evaluate_real(x);
                let (vp, dvp, _) = m.evaluate_real(x + h);
                let (vm, dvm, _) = m.evaluate_real(x - h);
                let fd1 = (vp - vm) / (2.0 * h);
                let fd2 = (dvp - dvm) / (2.0 * h);
                let fd2v = (vp - 2.0 * v0 + vm) / (h * h);
                assert!((fd1 - dv).abs() <= 1e-6 * dv.abs().max(1.0), "{m:?} V' at {x}");
                assert!((fd2 - d2v).abs() <= 1e-6 * d2v.abs().max(1.0), "{m:?} V'' at {x}");
                assert!((fd2v - d2v).abs() <= 1e-4 * d2v.abs().max(1.0), "{m:?} V'' from V at {x}");
            }
        }
    }

    #[test]
    fn cauchy_riemann_on_complex_grid() {
        let h = 1e-5;
        let i = Complex64::new(0.0, 1.0);
        for m in MODELS {
            for re in [-1.5, -0.5, 0.3, 1.2] {
                for im in [-0.9, -0.2, 0.4, 1.1] {
                    let x = Complex64::new(re, im);
                    let along_re = (m.potential(x + h) - m.potential(x - h)) / (2.0 * h);
                    let along_im = (m.potential(x + i * h) - m.potential(x - i * h)) / (2.0 * i * h);
                    let dv = m.evaluate(x).dv;
                    assert!((along_re - along_im).norm() <= 1e-6 * dv.norm().max(1.0));
                    assert!((along_re - dv).norm() <= 1e-6 * dv.norm().max(1.0));
                }
            }
        }
    }
}
