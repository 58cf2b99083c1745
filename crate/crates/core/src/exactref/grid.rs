use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::ExactError;
use crate::model::{coherent_overlap, CoherentState};
use crate::potentials::PotentialModel;

/// Uniform periodic grid `x_k = x_min + k dx`, `k = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self, ExactError> {
        if !(x_min < x_max && x_min.is_finite() && x_max.is_finite()) {
            return Err(ExactError::InvalidGrid("x_min must be below x_max"));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(ExactError::InvalidGrid("point count must be a power of two (at least 8)"));
        }
        Ok(Self { x_min, x_max, n })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }
    pub fn dk(&self) -> f64 {
        2.0 * PI / (self.x_max - self.x_min)
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        (0..n).map(|k| if k < n / 2 { k } else { k - n } as f64 * self.dk()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub t: f64,
}

/// Points at each end of the grid watched for leakage.
const EDGE_POINTS: usize = 8;

impl GridWavefunction {
    pub fn coherent(state: &CoherentState, grid: Grid) -> Self {
        let values = grid.points().iter().map(|&x| coherent_overlap(state, x)).collect();
        Self { grid, values, t: 0.0 }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Largest `|psi|` among the outermost grid points.
    pub fn boundary_amplitude(&self) -> f64 {
        let n = self.values.len();
        self.values[..EDGE_POINTS]
            .iter()
            .chain(&self.values[n - EDGE_POINTS..])
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Cubic Lagrange interpolation between grid points.
    pub fn value_at(&self, x: f64) -> Complex64 {
        let dx = self.grid.dx();
        let s = (x - self.grid.x_min) / dx;
        let n = self.values.len();
        if !(s >= 0.0 && s <= (n - 1) as f64) {
            return Complex64::default();
        }
        let k = (s.floor() as usize).clamp(1, n.saturating_sub(3));
        let t = s - k as f64;
        let (a, b, c, d) = (self.values[k - 1], self.values[k], self.values[k + 1], self.values[k + 2]);
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        a * w0 + b * w1 + c * w2 + d * w3
    }

    /// `<psi|H|psi> / <psi|psi>` with the kinetic term evaluated spectrally.
    pub fn energy(&self, model: &PotentialModel, mu: f64, hbar: f64) -> f64 {
        let mut spectrum = self.values.clone();
        FftPlanner::new().plan_fft_forward(spectrum.len()).process(&mut spectrum);
        let ks = self.grid.wavenumbers();
        let kinetic: f64 = spectrum
            .iter()
            .zip(&ks)
            .map(|(v, k)| v.norm_sqr() * hbar * hbar * k * k / (2.0 * mu))
            .sum::<f64>()
            / self.values.len() as f64;
        let potential: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v.norm_sqr() * model.evaluate_real(self.grid.x(k)).0)
            .sum();
        let norm: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (kinetic + potential) / norm
    }

    /// Columns `x, re_psi, im_psi, density`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# t = {}", self.t)?;
        writeln!(out, "x,re_psi,im_psi,density")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.11e},{:.11e},{:.11e},{:.11e}", self.grid.x(k), v.re, v.im, v.norm_sqr())?;
        }
        Ok(())
    }
}

/// Strang-split propagator: half potential step, spectral kinetic step,
/// half potential step.
pub struct SplitOperator {
    grid: Grid,
    potential: Vec<f64>,
    kinetic: Vec<f64>,
    hbar: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl SplitOperator {
    pub fn new(model: &PotentialModel, grid: Grid, mu: f64, hbar: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n());
        let inverse = planner.plan_fft_inverse(grid.n());
        let scratch = vec![Complex64::default(); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
        Self {
            grid,
            potential: grid.points().iter().map(|&x| model.evaluate_real(x).0).collect(),
            kinetic: grid.wavenumbers().iter().map(|k| hbar * hbar * k * k / (2.0 * mu)).collect(),
            hbar,
            forward,
            inverse,
            scratch,
        }
    }

    /// Advances `psi` by `steps` steps of size `dt`.
    pub fn advance(&mut self, psi: &mut GridWavefunction, dt: f64, steps: usize) {
        if steps == 0 {
            return;
        }
        let half_v: Vec<Complex64> =
            self.potential.iter().map(|v| Complex64::from_polar(1.0, -0.5 * v * dt / self.hbar)).collect();
        let full_v: Vec<Complex64> = half_v.iter().map(|h| h * h).collect();
        let n = self.grid.n() as f64;
        let kin: Vec<Complex64> =
            self.kinetic.iter().map(|t| Complex64::from_polar(1.0 / n, -t * dt / self.hbar)).collect();
        let values = &mut psi.values;
        apply(values, &half_v);
        for step in 0..steps {
            self.forward.process_with_scratch(values, &mut self.scratch);
            apply(values, &kin);
            self.inverse.process_with_scratch(values, &mut self.scratch);
            apply(values, if step + 1 == steps { &half_v } else { &full_v });
        }
        psi.t += dt * steps as f64;
    }
}

fn apply(values: &mut [Complex64], factors: &[Complex64]) {
    for (v, f) in values.iter_mut().zip(factors) {
        *v *= f;
    }
}

/// Wavefunctions at each requested time (ascending) starting from the
/// coherent state; `dt` is the largest allowed step.
pub fn propagate_grid_snapshots(
    model: &PotentialModel,
    state: &CoherentState,
    times: &[f64],
    grid: Grid,
    dt: f64,
    leak_tolerance: f64,
) -> Result<Vec<GridWavefunction>, ExactError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ExactError::InvalidStep(dt));
    }
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(ExactError::Unsupported("snapshot times must be finite, non-negative and ascending"));
    }
    let mut psi = GridWavefunction::coherent(state, grid);
    check_leak(&psi, leak_tolerance)?;
    let mut op = SplitOperator::new(model, grid, state.mu(), state.hbar());
    let mut out = Vec::with_capacity(times.len());
    const CHUNK: usize = 200;
    for &target in times {
        let span = target - psi.t;
        let steps = (span / dt).ceil().max(0.0) as usize;
        if steps > 0 {
            let h = span / steps as f64;
            let mut done = 0;
            while done < steps {
                let chunk = CHUNK.min(steps - done);
                op.advance(&mut psi, h, chunk);
                check_leak(&psi, leak_tolerance)?;
                done += chunk;
            }
        }
        psi.t = target;
        out.push(psi.clone());
    }
    Ok(out)
}

/// Final wavefunction after `duration`, with the default leak tolerance.
pub fn propagate_grid(
    model: &PotentialModel,
    state: &CoherentState,
    duration: f64,
    grid: Grid,
    dt: f64,
) -> Result<GridWavefunction, ExactError> {
    Ok(propagate_grid_snapshots(model, state, &[duration], grid, dt, super::DEFAULT_LEAK_TOLERANCE)?.remove(0))
}

fn check_leak(psi: &GridWavefunction, tolerance: f64) -> Result<(), ExactError> {
    let amplitude = psi.boundary_amplitude();
    if amplitude > tolerance {
        return Err(ExactError::BoundaryLeak { t: psi.t, amplitude });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::exact_free;
    use super::*;

    fn l2(psi: &GridWavefunction, f: impl Fn(f64) -> Complex64) -> f64 {
        let dx = psi.grid.dx();
        psi.values.iter().enumerate().map(|(k, v)| (v - f(psi.grid.x(k))).norm_sqr() * dx).sum::<f64>().sqrt()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(-1.0, 1.0, 100).is_err());
        assert!(Grid::new(1.0, -1.0, 128).is_err());
        let g = Grid::new(-4.0, 4.0, 16).unwrap();
        assert_eq!(g.dx(), 0.5);
        assert_eq!(g.wavenumbers()[15], -g.dk());
    }

    #[test]
    fn free_matches_closed_form() {
        let s = CoherentState::with_width(-3.0, 1.5, 1.0, 1.0, 1.0).unwrap();
        let grid = Grid::new(-30.0, 30.0, 1024).unwrap();
        let psi = propagate_grid(&PotentialModel::Free, &s, 2.0, grid, 0.01).unwrap();
        assert!(l2(&psi, |x| exact_free(&s, x, 2.0)) < 1e-7);
        assert!((psi.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn harmonic_period_fidelity() {
        let h = PotentialModel::Harmonic { mass: 1.0, omega: 1.0 };
        let s = CoherentState::new(1.0, 0.5, 1.0, 1.0, 1.0).unwrap();
        let grid = Grid::new(-12.0, 12.0, 512).unwrap();
        let psi0 = GridWavefunction::coherent(&s, grid);
        let psi = propagate_grid(&h, &s, 2.0 * PI, grid, 1e-3).unwrap();
        let overlap: Complex64 = psi0.values.iter().zip(&psi.values).map(|(a, b)| a.conj() * b).sum::<Complex64>() * grid.dx();
        assert!(overlap.norm() > 1.0 - 1e-6, "{}", overlap.norm());
    }

    #[test]
    fn leak_is_reported() {
        let s = CoherentState::with_width(0.0, 3.0, 1.0, 1.0, 1.0).unwrap();
        let grid = Grid::new(-10.0, 10.0, 256).unwrap();
        let err = propagate_grid(&PotentialModel::Free, &s, 5.0, grid, 0.01).unwrap_err();
        assert!(matches!(err, ExactError::BoundaryLeak { .. }));
    }

    #[test]
    fn quartic_norm_energy_and_order() {
        let model = PotentialModel::Quartic { a: 0.5, b: 0.1 };
        let s = CoherentState::new(0.0, -2.0, 1.0, 1.0, 1.0).unwrap();
        let grid = Grid::new(-12.0, 12.0, 1024).unwrap();
        let e0 = GridWavefunction::coherent(&s, grid).energy(&model, 1.0, 1.0);
        let run = |dt: f64| propagate_grid(&model, &s, 2.5, grid, dt).unwrap();
        let coarse = run(4e-3);
        let mid = run(2e-3);
        let fine = run(1e-3);
        assert!((fine.norm() - 1.0).abs() < 1e-8);
        assert!(((fine.energy(&model, 1.0, 1.0) - e0) / e0).abs() < 1e-6);
        let diff = |a: &GridWavefunction, b: &GridWavefunction| l2(a, |x| b.value_at(x));
        let order = (diff(&coarse, &mid) / diff(&mid, &fine)).log2();
        assert!(order > 1.9, "observed order {order}");
    }

    #[test]
    fn interpolation_is_accurate_for_smooth_data() {
        let s = CoherentState::with_width(0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let psi = GridWavefunction::coherent(&s, Grid::new(-10.0, 10.0, 1024).unwrap());
        for &x in &[-1.2345, 0.0101, 2.5] {
            assert!((psi.value_at(x) - coherent_overlap(&s, x)).norm() < 1e-7);
        }
    }
}
