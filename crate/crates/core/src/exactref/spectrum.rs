use super::{ExactError, Grid};
use crate::potentials::PotentialModel;

/// Lowest `count` eigenvalues of `-hbar^2/2mu d^2/dx^2 + V` with Dirichlet
/// ends on the interior points of `grid`, using second-order differences.
///
/// The problem is solved on `grid` and on a grid with half the spacing; the
/// two must agree within `tolerance`, and the Richardson combination
/// `(4 E_fine - E_coarse) / 3` is returned.
pub fn eigenvalues(
    model: &PotentialModel,
    grid: &Grid,
    count: usize,
    mu: f64,
    hbar: f64,
    tolerance: f64,
) -> Result<Vec<f64>, ExactError> {
    let coarse = finite_difference_levels(model, grid.x_min(), grid.x_max(), grid.n(), count, mu, hbar);
    let fine = finite_difference_levels(model, grid.x_min(), grid.x_max(), 2 * grid.n(), count, mu, hbar);
    let mut out = Vec::with_capacity(count);
    for (level, (c, f)) in coarse.iter().zip(&fine).enumerate() {
        let change = (f - c).abs();
        if change > tolerance {
            return Err(ExactError::NotConverged { level, change });
        }
        out.push((4.0 * f - c) / 3.0);
    }
    Ok(out)
}

fn finite_difference_levels(
    model: &PotentialModel,
    x_min: f64,
    x_max: f64,
    intervals: usize,
    count: usize,
    mu: f64,
    hbar: f64,
) -> Vec<f64> {
    let dx = (x_max - x_min) / intervals as f64;
    let off = -hbar * hbar / (2.0 * mu * dx * dx);
    let diag: Vec<f64> =
        (1..intervals).map(|k| -2.0 * off + model.evaluate_real(x_min + k as f64 * dx).0).collect();
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0 * off.abs();
    let hi = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0 * off.abs();
    (0..count.min(diag.len())).map(|j| bisect(&diag, off, j, lo, hi)).collect()
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// constant off-diagonal `off` (Sturm sequence count).
fn count_below(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (k, &a) in diag.iter().enumerate() {
        let coupling = if k == 0 { 0.0 } else { off * off / d };
        d = a - x - coupling;
        if d == 0.0 {
            d = -f64::EPSILON * (a.abs() + x.abs() + off.abs());
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn bisect(diag: &[f64], off: f64, index: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(diag, off, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_levels() {
        let h = PotentialModel::Harmonic { mass: 1.0, omega: 1.0 };
        let grid = Grid::new(-12.0, 12.0, 4096).unwrap();
        let e = eigenvalues(&h, &grid, 5, 1.0, 1.0, 1e-4).unwrap();
        for (n, en) in e.iter().enumerate() {
            assert!((en - (n as f64 + 0.5)).abs() < 1e-6, "E{n} = {en}");
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let h = PotentialModel::Harmonic { mass: 1.0, omega: 1.0 };
        let grid = Grid::new(-12.0, 12.0, 16).unwrap();
        assert!(matches!(eigenvalues(&h, &grid, 3, 1.0, 1.0, 1e-4), Err(ExactError::NotConverged { .. })));
    }

    #[test]
    fn sturm_count_on_diagonal_matrix() {
        assert_eq!(count_below(&[1.0, 2.0, 3.0], 0.0, 2.5), 2);
    }
}
