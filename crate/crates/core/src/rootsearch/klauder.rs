//! Complex trajectories launched from `X(0) = q + w`, `P(0) = p + i(c/b) w`.
//!
//! Every such trajectory satisfies `u(0) = z`; its final position defines
//! the analytic map `w -> X_T(w)` whose derivative is `m_qq + i m_qp`.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use super::RootSearchError;
use crate::dynamics::{propagate, IntegratorSettings, TrajectoryRecord};
use crate::model::CoherentState;
use crate::potentials::PotentialModel;
use crate::semiclassics::exponent_f;

/// Newton on `X_T(w) = x_f` is abandoned below this `|dX_T/dw|`.
pub const NEAR_CAUSTIC_NEWTON: f64 = 1e-8;
const NEWTON_ITERATIONS: usize = 50;

/// Initial condition of the trajectory with search parameter `w`.
pub fn klauder_initial(state: &CoherentState, w: Complex64) -> (Complex64, Complex64) {
    let x0 = state.q() + w;
    let p0 = state.p() + Complex64::new(0.0, state.c() / state.b()) * w;
    (x0, p0)
}

fn launch(
    model: &PotentialModel,
    state: &CoherentState,
    duration: f64,
    w: Complex64,
    settings: &IntegratorSettings,
) -> Result<TrajectoryRecord, RootSearchError> {
    let (x0, p0) = klauder_initial(state, w);
    let bound = settings.escape_factor * state.b();
    Ok(propagate(model, x0, p0, duration, state, settings)?.completed(bound)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WPoint {
    pub w: Complex64,
    pub trajectory: TrajectoryRecord,
    pub x_t: Complex64,
    /// Newton updates needed to converge.
    pub iterations: usize,
}

impl WPoint {
    /// `dX_T/dw`.
    pub fn derivative(&self) -> Complex64 {
        self.trajectory.tangent.m_plus()
    }
}

/// Solves `X_T(w) = x_f` by Newton's method from `w_guess`.
pub fn refine_w(
    model: &PotentialModel,
    state: &CoherentState,
    duration: f64,
    x_f: f64,
    w_guess: Complex64,
    settings: &IntegratorSettings,
) -> Result<WPoint, RootSearchError> {
    let tol = 1e-10 * state.b();
    let mut w = w_guess;
    for iterations in 0..=NEWTON_ITERATIONS {
        let trajectory = launch(model, state, duration, w, settings)?;
        let x_t = trajectory.end.x;
        let g = x_t - x_f;
        if g.norm() < tol {
            return Ok(WPoint { w, trajectory, x_t, iterations });
        }
        let d = trajectory.tangent.m_plus();
        if d.norm() < NEAR_CAUSTIC_NEWTON {
            return Err(RootSearchError::NearCaustic { derivative: d.norm() });
        }
        w -= g / d;
    }
    Err(RootSearchError::NoConvergence { iterations: NEWTON_ITERATIONS })
}

/// Rectangular lattice in the `w = alpha + i beta` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanLattice {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub step: f64,
}

impl ScanLattice {
    /// `+-half_width` in both directions.
    pub fn square(half_width: f64, step: f64) -> Self {
        Self { alpha_min: -half_width, alpha_max: half_width, beta_min: -half_width, beta_max: half_width, step }
    }

    /// `+-4b` at step `b/20`.
    pub fn default_for(state: &CoherentState) -> Self {
        Self::square(4.0 * state.b(), state.b() / 20.0)
    }

    fn axis(min: f64, max: f64, step: f64) -> Vec<f64> {
        let n = ((max - min) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| min + step * k as f64).collect()
    }

    pub fn alphas(&self) -> Vec<f64> {
        Self::axis(self.alpha_min, self.alpha_max, self.step)
    }

    pub fn betas(&self) -> Vec<f64> {
        Self::axis(self.beta_min, self.beta_max, self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanNode {
    pub w: Complex64,
    pub x_t: Complex64,
    /// `dX_T/dw` at the node.
    pub derivative: Complex64,
    pub f: Complex64,
    pub escaped: bool,
}

#[derive(Debug, Clone)]
pub struct WScan {
    pub lattice: ScanLattice,
    pub duration: f64,
    pub n_alpha: usize,
    pub n_beta: usize,
    /// Row-major with `alpha` varying fastest.
    pub nodes: Vec<ScanNode>,
}

impl WScan {
    pub fn node(&self, i: usize, j: usize) -> &ScanNode {
        &self.nodes[j * self.n_alpha + i]
    }

    pub fn escaped_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.escaped).count()
    }

    /// CSV with a comment header echoing the lattice.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let l = &self.lattice;
        writeln!(
            out,
            "# T = {}, alpha in [{}, {}], beta in [{}, {}], step = {}",
            self.duration, l.alpha_min, l.alpha_max, l.beta_min, l.beta_max, l.step
        )?;
        writeln!(out, "alpha,beta,re_x_t,im_x_t,im_f,escaped")?;
        for n in &self.nodes {
            writeln!(
                out,
                "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{}",
                n.w.re,
                n.w.im,
                n.x_t.re,
                n.x_t.im,
                n.f.im,
                u8::from(n.escaped)
            )?;
        }
        Ok(())
    }
}

/// Evaluates `X_T(w)` on every lattice node; escaped or failed nodes are
/// marked and carry NaN values.
pub fn wmap_scan(
    model: &PotentialModel,
    state: &CoherentState,
    duration: f64,
    lattice: &ScanLattice,
    settings: &IntegratorSettings,
) -> WScan {
    let alphas = lattice.alphas();
    let betas = lattice.betas();
    let ws: Vec<Complex64> = betas.iter().flat_map(|&b| alphas.iter().map(move |&a| Complex64::new(a, b))).collect();
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let nodes = ws
        .par_iter()
        .map(|&w| match launch(model, state, duration, w, settings) {
            Ok(r) => ScanNode {
                w,
                x_t: r.end.x,
                derivative: r.tangent.m_plus(),
                f: exponent_f(&r, state),
                escaped: false,
            },
            Err(_) => ScanNode { w, x_t: nan, derivative: nan, f: nan, escaped: true },
        })
        .collect();
    WScan { lattice: *lattice, duration, n_alpha: alphas.len(), n_beta: betas.len(), nodes }
}

/// A critical point of the map: `dX_T/dw = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausticPoint {
    pub w_c: Complex64,
    pub x_t: Complex64,
    pub residual: f64,
    /// `d^2 X_T / dw^2` at `w_c`.
    pub curvature: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausticSearch {
    /// Lattice minima of `|dX_T/dw|` above this are ignored.
    pub threshold: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CausticSearch {
    fn default() -> Self {
        Self { threshold: 0.5, tolerance: 1e-6, max_iterations: 50 }
    }
}

fn derivative_at(
    model: &PotentialModel,
    state: &CoherentState,
    duration: f64,
    w: Complex64,
    settings: &IntegratorSettings,
) -> Option<(Complex64, Complex64)> {
    let r = launch(model, state, duration, w, settings).ok()?;
    Some((r.tangent.m_plus(), r.end.x))
}

/// Lattice minima of `|dX_T/dw|` refined by Newton on the derivative.
pub fn detect_caustics(
    model: &PotentialModel,
    state: &CoherentState,
    scan: &WScan,
    search: &CausticSearch,
    settings: &IntegratorSettings,
) -> Vec<CausticPoint> {
    let mut candidates = Vec::new();
    for j in 1..scan.n_beta.saturating_sub(1) {
        for i in 1..scan.n_alpha.saturating_sub(1) {
            let centre = scan.node(i, j);
            if centre.escaped {
                continue;
            }
            let d = centre.derivative.norm();
            if d >= search.threshold {
                continue;
            }
            let is_min = (-1i64..=1).all(|dj| {
                (-1i64..=1).all(|di| {
                    let n = scan.node((i as i64 + di) as usize, (j as i64 + dj) as usize);
                    !n.escaped && n.derivative.norm() >= d
                })
            });
            if is_min {
                candidates.push(centre.w);
            }
        }
    }
    let h = 1e-4 * state.b();
    let duration = scan.duration;
    let refined: Vec<CausticPoint> = candidates
        .par_iter()
        .filter_map(|&start| {
            let mut w = start;
            for _ in 0..search.max_iterations {
                let (m, x_t) = derivative_at(model, state, duration, w, settings)?;
                let (mp, _) = derivative_at(model, state, duration, w + h, settings)?;
                let (mm, _) = derivative_at(model, state, duration, w - h, settings)?;
                let curvature = (mp - mm) / (2.0 * h);
                if m.norm() < 1e-3 * search.tolerance {
                    return Some(CausticPoint { w_c: w, x_t, residual: m.norm(), curvature });
                }
                if curvature.norm() == 0.0 {
                    return None;
                }
                let step = m / curvature;
                if step.norm() > 4.0 * scan.lattice.step {
                    return None;
                }
                w -= step;
            }
            let (m, x_t) = derivative_at(model, state, duration, w, settings)?;
            let (mp, _) = derivative_at(model, state, duration, w + h, settings)?;
            let (mm, _) = derivative_at(model, state, duration, w - h, settings)?;
            (m.norm() < search.tolerance).then(|| CausticPoint {
                w_c: w,
                x_t,
                residual: m.norm(),
                curvature: (mp - mm) / (2.0 * h),
            })
        })
        .collect();
    let mut out: Vec<CausticPoint> = Vec::new();
    for c in refined {
        if out.iter().all(|o| (o.w_c - c.w_c).norm() > 1e-3 * state.b()) {
            out.push(c);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyLabel {
    Main,
    Secondary(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberStatus {
    Contributing,
    Cut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub x_f: f64,
    pub grid_index: usize,
    pub w: Complex64,
    pub trajectory: TrajectoryRecord,
    pub f: Complex64,
    pub status: MemberStatus,
}

impl FamilyMember {
    pub fn derivative(&self) -> Complex64 {
        self.trajectory.tangent.m_plus()
    }
}

/// Why continuation stopped before the end of the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Truncation {
    Failed { x_f: f64, error: RootSearchError },
    Jump { x_f: f64, jump: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFamily {
    pub label: FamilyLabel,
    /// Ordered by `x_f`.
    pub members: Vec<FamilyMember>,
    pub truncated_low: Option<Truncation>,
    pub truncated_high: Option<Truncation>,
}

impl TrajectoryFamily {
    pub fn member_at(&self, grid_index: usize) -> Option<&FamilyMember> {
        self.members
            .binary_search_by_key(&grid_index, |m| m.grid_index)
            .ok()
            .map(|k| &self.members[k])
    }

    pub fn member_at_mut(&mut self, grid_index: usize) -> Option<&mut FamilyMember> {
        let k = self.members.binary_search_by_key(&grid_index, |m| m.grid_index).ok()?;
        Some(&mut self.members[k])
    }

    pub fn x_range(&self) -> Option<(f64, f64)> {
        Some((self.members.first()?.x_f, self.members.last()?.x_f))
    }
}

/// Most Newton sub-steps taken between neighbouring grid points.
const MAX_SUBSTEPS: usize = 64;

struct Anchor {
    x_f: f64,
    w: Complex64,
    derivative: Complex64,
}

#[allow(clippy::too_many_arguments)]
fn continue_along(
    model: &PotentialModel,
    state: &CoherentState,
    duration: f64,
    grid: &[f64],
    indices: impl Iterator<Item = usize>,
    seed: &WPoint,
    max_jump: f64,
    settings: &IntegratorSettings,
) -> (Vec<FamilyMember>, Option<Truncation>) {
    let mut anchor = Anchor { x_f: seed.x_t.re, w: seed.w, derivative: seed.derivative() };
    let mut members = Vec::new();
    for k in indices {
        let x_f = grid[k];
        // Coarse grids are crossed in sub-steps of at most half the jump bound.
        let predicted = ((x_f - anchor.x_f) / anchor.derivative).norm();
        let substeps = (2.0 * predicted / max_jump).ceil().max(1.0);
        if !(substeps <= MAX_SUBSTEPS as f64) {
            return (members, Some(Truncation::Jump { x_f, jump: predicted }));
        }
        let substeps = substeps as usize;
        let start = anchor.x_f;
        let mut point = None;
        for j in 1..=substeps {
            let x = if j == substeps { x_f } else { start + (x_f - start) * j as f64 / substeps as f64 };
            let guess = anchor.w + (x - anchor.x_f) / anchor.derivative;
            let p = match refine_w(model, state, duration, x, guess, settings) {
                Ok(p) => p,
                Err(error) => return (members, Some(Truncation::Failed { x_f, error })),
            };
            let jump = (p.w - anchor.w).norm();
            if jump > max_jump {
                return (members, Some(Truncation::Jump { x_f, jump }));
            }
            anchor = Anchor { x_f: x, w: p.w, derivative: p.derivative() };
            point = Some(p);
        }
        let point = point.expect("at least one sub-step");
        let f = exponent_f(&point.trajectory, state);
        members.push(FamilyMember {
            x_f,
            grid_index: k,
            w: point.w,
            trajectory: point.trajectory,
            f,
            status: MemberStatus::Contributing,
        });
    }
    (members, None)
}

/// Follows the root `w(x_f)` through the ordered grid outward from `seed`,
/// predicting each step with `dw/dx_f = 1 / (dX_T/dw)` and sub-stepping
/// between grid points so each Newton start lies within `max_jump / 2` of
/// the previous root. Continuation in a direction stops at the first
/// failure or at a jump larger than `max_jump`.
#[allow(clippy::too_many_arguments)]
pub fn trace_family(
    model: &PotentialModel,
    state: &CoherentState,
    duration: f64,
    grid: &[f64],
    seed: &WPoint,
    label: FamilyLabel,
    max_jump: f64,
    settings: &IntegratorSettings,
) -> TrajectoryFamily {
    let x_s = seed.x_t.re;
    let split = grid.partition_point(|&x| x < x_s - 1e-12 * (1.0 + x_s.abs()));
    let ((up, high), (mut down, low)) = rayon::join(
        || continue_along(model, state, duration, grid, split..grid.len(), seed, max_jump, settings),
        || continue_along(model, state, duration, grid, (0..split).rev(), seed, max_jump, settings),
    );
    down.reverse();
    down.extend(up);
    TrajectoryFamily { label, members: down, truncated_low: low, truncated_high: high }
}

/// Looks for a root on the other sheet of the two-to-one map near a caustic,
/// using `w = w_c +- sqrt(2 (x_f - X_c) / X'')` as Newton guesses for grid
/// points near `Re X_c`, and skipping roots already in `main`.
pub fn seed_beyond_caustic(
    model: &PotentialModel,
    state: &CoherentState,
    duration: f64,
    grid: &[f64],
    caustic: &CausticPoint,
    main: &TrajectoryFamily,
    settings: &IntegratorSettings,
) -> Option<WPoint> {
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| (grid[a] - caustic.x_t.re).abs().total_cmp(&(grid[b] - caustic.x_t.re).abs()));
    let same_as_main = |k: usize, w: Complex64| main.member_at(k).is_some_and(|m| (m.w - w).norm() < 1e-6 * state.b());
    for &k in order.iter().take(16) {
        let x_f = grid[k];
        let delta = (2.0 * (x_f - caustic.x_t) / caustic.curvature).sqrt();
        let mut found: Vec<WPoint> = [caustic.w_c + delta, caustic.w_c - delta]
            .into_iter()
            .filter_map(|guess| refine_w(model, state, duration, x_f, guess, settings).ok())
            .filter(|p| !same_as_main(k, p.w))
            .collect();
        if found.len() == 2 && (found[0].w - found[1].w).norm() < 1e-6 * state.b() {
            found.pop();
        }
        // With two new roots prefer the more weakly damped one.
        found.sort_by(|a, b| exponent_f(&a.trajectory, state).im.total_cmp(&exponent_f(&b.trajectory, state).im));
        if let Some(p) = found.into_iter().next() {
            return Some(p);
        }
    }
    None
}
