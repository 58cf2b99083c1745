use std::f64::consts::PI;
use std::io::{self, BufRead, Write};
use std::path::Path;

use semiprop::Complex64;
use thiserror::Error;

/// Default density floor for phase comparison, relative to each curve's peak.
pub const PHASE_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("x_f grids differ: {0}")]
    GridMismatch(String),
    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: usize, reason: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
}

/// A sampled wavefunction: `psi[k]` at `x[k]`, plus per-point labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaveTable {
    pub x: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub formula: Vec<String>,
    pub flags: Vec<String>,
}

pub const WAVE_HEADER: &str = "x_f,re_psi,im_psi,density,phase_over_pi,formula,flags";

impl WaveTable {
    pub fn push(&mut self, x: f64, psi: Complex64, formula: &str, flags: &str) {
        self.x.push(x);
        self.psi.push(psi);
        self.formula.push(formula.to_string());
        self.flags.push(flags.to_string());
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{WAVE_HEADER}")?;
        for k in 0..self.len() {
            let v = self.psi[k];
            writeln!(
                out,
                "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{},{}",
                self.x[k],
                v.re,
                v.im,
                v.norm_sqr(),
                v.arg() / PI,
                self.formula[k],
                self.flags[k]
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, path: &str) -> Result<Self, CompareError> {
        let mut table = WaveTable::default();
        for (k, line) in input.lines().enumerate() {
            let line = line.map_err(|source| CompareError::Io { path: path.to_string(), source })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("x_f") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let err = |reason: &str| CompareError::Parse { path: path.to_string(), line: k + 1, reason: reason.into() };
            if fields.len() < 3 {
                return Err(err("expected at least x_f, re_psi, im_psi"));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err("not a number"));
            let (x, re, im) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
            let formula = fields.get(5).copied().unwrap_or("");
            let flags = fields.get(6).copied().unwrap_or("-");
            table.push(x, Complex64::new(re, im), formula, flags);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, CompareError> {
        let file = std::fs::File::open(path)
            .map_err(|source| CompareError::Io { path: path.display().to_string(), source })?;
        Self::read_csv(io::BufReader::new(file), &path.display().to_string())
    }
}

/// Differences between two wavefunctions on the same grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// `sqrt(sum |a - b|^2 dx)`.
    pub l2: f64,
    pub max_density_deviation: f64,
    /// Root mean square of `arg(a / b)` in radians, over points where
    /// both densities exceed the floor.
    pub phase_rms: f64,
    pub phase_points: usize,
}

/// Cell widths of a grid: half the distance between neighbours, so a uniform
/// grid gets its spacing everywhere.
pub fn cell_widths(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    match n {
        0 => vec![],
        1 => vec![1.0],
        _ => (0..n)
            .map(|k| {
                if k == 0 {
                    x[1] - x[0]
                } else if k == n - 1 {
                    x[n - 1] - x[n - 2]
                } else {
                    0.5 * (x[k + 1] - x[k - 1])
                }
            })
            .collect(),
    }
}

/// Compares `a` against `b` on identical grids; phases are compared where
/// both `|psi|^2` exceed `floor` times their own peak.
pub fn compare(x_a: &[f64], a: &[Complex64], x_b: &[f64], b: &[Complex64], floor: f64) -> Result<Comparison, CompareError> {
    if x_a.len() != x_b.len() {
        return Err(CompareError::GridMismatch(format!("{} points vs {}", x_a.len(), x_b.len())));
    }
    if let Some(k) = (0..x_a.len()).find(|&k| (x_a[k] - x_b[k]).abs() > 1e-9 * (1.0 + x_a[k].abs())) {
        return Err(CompareError::GridMismatch(format!("point {k}: {} vs {}", x_a[k], x_b[k])));
    }
    let widths = cell_widths(x_a);
    let peak = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let (floor_a, floor_b) = (floor * peak(a), floor * peak(b));
    let mut sum = 0.0;
    let mut max_dev: f64 = 0.0;
    let mut phase_sq = 0.0;
    let mut phase_points = 0;
    for k in 0..a.len() {
        sum += (a[k] - b[k]).norm_sqr() * widths[k];
        max_dev = max_dev.max((a[k].norm_sqr() - b[k].norm_sqr()).abs());
        if a[k].norm_sqr() > floor_a && b[k].norm_sqr() > floor_b {
            let d = (a[k] / b[k]).arg();
            phase_sq += d * d;
            phase_points += 1;
        }
    }
    let phase_rms = if phase_points > 0 { (phase_sq / phase_points as f64).sqrt() } else { 0.0 };
    Ok(Comparison { l2: sum.sqrt(), max_density_deviation: max_dev, phase_rms, phase_points })
}

pub fn compare_tables(a: &WaveTable, b: &WaveTable) -> Result<Comparison, CompareError> {
    compare(&a.x, &a.psi, &b.x, &b.psi, PHASE_FLOOR)
}

/// One line of a comparison report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub formula: String,
    pub b: f64,
    pub t: f64,
    pub comparison: Comparison,
    /// Samples carrying any computation flag.
    pub flagged: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComparisonReport {
    pub entries: Vec<ReportEntry>,
}

impl ComparisonReport {
    pub fn find(&self, formula: &str, b: f64, t: f64) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.formula == formula && e.b == b && e.t == t)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# reference: EXACT; phase compared where |psi|^2 > {PHASE_FLOOR:e} of each curve's peak")?;
        writeln!(out, "formula,b,t,l2,max_density_deviation,phase_rms_over_pi,phase_points,flagged")?;
        for e in &self.entries {
            let c = &e.comparison;
            writeln!(
                out,
                "{},{},{},{:.11e},{:.11e},{:.11e},{},{}",
                e.formula,
                e.b,
                e.t,
                c.l2,
                c.max_density_deviation,
                c.phase_rms / PI,
                c.phase_points,
                e.flagged
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_zero() {
        let x = [0.0, 0.5, 1.0];
        let v = [Complex64::new(1.0, 0.5), Complex64::new(0.2, -0.1), Complex64::new(0.0, 0.0)];
        let c = compare(&x, &v, &x, &v, PHASE_FLOOR).unwrap();
        assert_eq!((c.l2, c.max_density_deviation, c.phase_rms), (0.0, 0.0, 0.0));
        assert_eq!(c.phase_points, 2);
    }

    #[test]
    fn mismatched_grids() {
        let v = [Complex64::new(1.0, 0.0); 2];
        assert!(matches!(compare(&[0.0, 1.0], &v, &[0.0, 1.1], &v, 0.0), Err(CompareError::GridMismatch(_))));
        assert!(matches!(compare(&[0.0, 1.0], &v, &[0.0], &v[..1], 0.0), Err(CompareError::GridMismatch(_))));
    }

    #[test]
    fn constant_phase_offset() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let a = [Complex64::new(1.0, 0.0); 4];
        let b: Vec<Complex64> = a.iter().map(|z| z * Complex64::from_polar(1.0, 0.3)).collect();
        let c = compare(&x, &a, &x, &b, PHASE_FLOOR).unwrap();
        assert!((c.phase_rms - 0.3).abs() < 1e-12);
        assert!(c.max_density_deviation < 1e-15);
        let chord = 2.0 * (0.15f64).sin();
        assert!((c.l2 - chord * 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let mut t = WaveTable::default();
        t.push(-1.0, Complex64::new(0.25, -1e-7), "CT", "-");
        t.push(0.5, Complex64::new(1.0 / 3.0, 2.0), "CT", "near_caustic");
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = WaveTable::read_csv(&buf[..], "mem").unwrap();
        assert_eq!(back.formula, t.formula);
        assert_eq!(back.flags, t.flags);
        for k in 0..2 {
            assert!((back.psi[k] - t.psi[k]).norm() < 1e-11 * (1.0 + t.psi[k].norm()));
        }
    }
}
