//! Sweeps of a semiclassical formula over a grid of final positions.

use num_complex::Complex64;
use rayon::prelude::*;

use super::filter::{filter_families, StokesCut};
use super::formulas::{
    gaussian_integral_invalid, psi_ct, psi_tga, psi_xfp, psi_xfq, xfp_damping, xfq_damping,
};
use super::SemiclassicalError;
use crate::dynamics::{central_endpoint, propagate, IntegratorSettings, TrajectoryRecord};
use crate::model::CoherentState;
use crate::potentials::PotentialModel;
use crate::rootsearch::{
    detect_caustics, refine_w, seed_beyond_caustic, trace_family, wmap_scan, CausticPoint, CausticSearch,
    FamilyLabel, MemberStatus, ScanLattice, ShootingGrid, ShootingMode, ShootingTable, TrajectoryFamily, WScan,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formula {
    /// Complex trajectories.
    Ct,
    /// Thawed Gaussian from the central trajectory.
    Qp,
    /// Real trajectories from `q` to `x_f`.
    Xfq,
    /// Real trajectories with initial momentum `p` ending at `x_f`.
    Xfp,
}

impl Formula {
    pub const ALL: [Formula; 4] = [Formula::Ct, Formula::Qp, Formula::Xfq, Formula::Xfp];

    pub fn label(&self) -> &'static str {
        match self {
            Formula::Ct => "CT",
            Formula::Qp => "QP",
            Formula::Xfq => "XFQ",
            Formula::Xfp => "XFP",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.label().eq_ignore_ascii_case(s.trim()))
    }
}

/// What the packet moves in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum System {
    Smooth(PotentialModel),
    /// Free motion on `x > 0` with an infinite wall at `x = 0`.
    HardWall,
}

/// Which real shooting branches the mixed-boundary formulas sum over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchPolicy {
    /// Only the branch containing the central trajectory.
    Main,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    pub integrator: IntegratorSettings,
    /// `None` means `+-4b` at step `b/20`.
    pub lattice: Option<ScanLattice>,
    pub caustics: CausticSearch,
    /// Caustics further than this many widths `b` from `w = 0` seed no family.
    pub caustic_radius: f64,
    /// Largest `|dw|` between neighbouring family members, in units of `b`.
    pub continuation_bound: f64,
    /// `None` means `p +- 10c` with 801 points.
    pub p_grid: Option<ShootingGrid>,
    /// `None` means `q +- 10b` with 801 points.
    pub q_grid: Option<ShootingGrid>,
    pub branches: BranchPolicy,
    /// Fraction of a branch's `x_f` range dropped next to a turning point.
    pub cut_margin: f64,
    /// `|m_qq + i m_qp|` below which a sample is flagged.
    pub near_caustic: f64,
    /// Flag samples whose two saddles near a caustic are closer than this
    /// many widths `b`.
    pub coalescence: f64,
    /// Branches with a Gaussian damping exponent above this are skipped.
    pub damping_cutoff: f64,
    /// Relative tolerance for the lattice scan; caustics are refined with
    /// `integrator`.
    pub scan_rel_tol: f64,
    /// Scan nodes needing more steps than this are marked escaped.
    pub scan_max_steps: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            integrator: IntegratorSettings::default(),
            lattice: None,
            caustics: CausticSearch::default(),
            caustic_radius: 1.0,
            continuation_bound: 0.5,
            p_grid: None,
            q_grid: None,
            branches: BranchPolicy::Main,
            cut_margin: 0.02,
            near_caustic: 1e-3,
            coalescence: 1.0,
            damping_cutoff: 40.0,
            scan_rel_tol: 1e-7,
            scan_max_steps: 20_000,
        }
    }
}

impl SearchSettings {
    pub fn lattice_for(&self, state: &CoherentState) -> ScanLattice {
        self.lattice.unwrap_or_else(|| ScanLattice::default_for(state))
    }

    pub fn scan_integrator(&self) -> IntegratorSettings {
        IntegratorSettings {
            rel_tol: self.scan_rel_tol.max(self.integrator.rel_tol),
            abs_tol: self.scan_rel_tol.max(self.integrator.rel_tol) * 1e-2,
            max_steps: self.scan_max_steps,
            dense_output_stride: None,
            ..self.integrator
        }
    }

    pub fn p_grid_for(&self, state: &CoherentState) -> ShootingGrid {
        self.p_grid.unwrap_or(ShootingGrid::new(state.p() - 10.0 * state.c(), state.p() + 10.0 * state.c(), 801))
    }

    pub fn q_grid_for(&self, state: &CoherentState) -> ShootingGrid {
        self.q_grid.unwrap_or(ShootingGrid::new(state.q() - 10.0 * state.b(), state.q() + 10.0 * state.b(), 801))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleFlags {
    pub near_caustic: bool,
    pub gaussian_invalid: bool,
    pub no_trajectory: bool,
    pub divergent: bool,
    /// A shooting root was dropped next to a branch turning point.
    pub branch_end: bool,
    pub failed: bool,
}

impl SampleFlags {
    pub fn any(&self) -> bool {
        self.describe() != "-"
    }

    /// `|`-separated names, or `-` when no flag is set.
    pub fn describe(&self) -> String {
        let names = [
            (self.near_caustic, "near_caustic"),
            (self.gaussian_invalid, "gaussian_invalid"),
            (self.no_trajectory, "no_trajectory"),
            (self.divergent, "divergent"),
            (self.branch_end, "branch_end"),
            (self.failed, "failed"),
        ];
        let set: Vec<&str> = names.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect();
        if set.is_empty() {
            "-".to_string()
        } else {
            set.join("|")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContributionSource {
    Family(FamilyLabel),
    Branch(usize),
    Central,
    /// Direct path in front of the wall.
    Direct,
    /// Path reflected by the wall (its value includes the factor `-1`).
    Reflected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub source: ContributionSource,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionSample {
    pub x_f: f64,
    pub psi: Complex64,
    pub contributions: Vec<Contribution>,
    pub formula: Formula,
    pub flags: SampleFlags,
}

impl WavefunctionSample {
    fn from_parts(x_f: f64, formula: Formula, contributions: Vec<Contribution>, mut flags: SampleFlags) -> Self {
        let psi = contributions.iter().map(|c| c.value).sum();
        if contributions.is_empty() {
            flags.no_trajectory = true;
        }
        Self { x_f, psi, contributions, formula, flags }
    }
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub formula: Formula,
    pub duration: f64,
    pub samples: Vec<WavefunctionSample>,
    pub families: Vec<TrajectoryFamily>,
    pub caustics: Vec<CausticPoint>,
    pub cuts: Vec<StokesCut>,
    pub scan: Option<WScan>,
}

impl Assembly {
    fn simple(formula: Formula, duration: f64, samples: Vec<WavefunctionSample>) -> Self {
        Self { formula, duration, samples, families: Vec::new(), caustics: Vec::new(), cuts: Vec::new(), scan: None }
    }
}

/// Evaluates `formula` at every point of `grid` after propagating for `duration`.
pub fn assemble(
    system: &System,
    state: &CoherentState,
    formula: Formula,
    grid: &[f64],
    duration: f64,
    settings: &SearchSettings,
) -> Result<Assembly, SemiclassicalError> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(SemiclassicalError::InvalidInput("propagation time must be finite and non-negative"));
    }
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SemiclassicalError::InvalidInput("x_f grid must be non-empty and increasing"));
    }
    match (system, formula) {
        (System::Smooth(model), Formula::Ct) => complex_trajectories(model, state, grid, duration, settings),
        (System::Smooth(model), Formula::Qp) => {
            let central = central_endpoint(model, state, duration, &settings.integrator)?;
            let samples = grid
                .iter()
                .map(|&x| {
                    let mut flags = SampleFlags {
                        near_caustic: central.tangent.m_plus().norm() < settings.near_caustic,
                        ..Default::default()
                    };
                    let contributions = match psi_tga(state, &central, x) {
                        Ok(value) => vec![Contribution { source: ContributionSource::Central, value }],
                        Err(_) => {
                            flags.divergent = true;
                            Vec::new()
                        }
                    };
                    WavefunctionSample::from_parts(x, formula, contributions, flags)
                })
                .collect();
            Ok(Assembly::simple(formula, duration, samples))
        }
        (System::Smooth(model), Formula::Xfq | Formula::Xfp) => {
            real_trajectories(model, state, formula, grid, duration, settings)
        }
        (System::HardWall, _) => hard_wall(state, formula, grid, duration, settings),
    }
}

fn complex_trajectories(
    model: &PotentialModel,
    state: &CoherentState,
    grid: &[f64],
    duration: f64,
    settings: &SearchSettings,
) -> Result<Assembly, SemiclassicalError> {
    let integ = &settings.integrator;
    let central = central_endpoint(model, state, duration, integ)?;
    let seed = refine_w(model, state, duration, central.q_t, Complex64::default(), integ)?;
    let bound = settings.continuation_bound * state.b();

    let (scan, caustics) = if model.has_linear_flow() {
        (None, Vec::new())
    } else {
        let scan = wmap_scan(model, state, duration, &settings.lattice_for(state), &settings.scan_integrator());
        let caustics = detect_caustics(model, state, &scan, &settings.caustics, integ);
        (Some(scan), caustics)
    };
    let relevant: Vec<CausticPoint> =
        caustics.iter().copied().filter(|c| c.w_c.norm() < settings.caustic_radius * state.b()).collect();

    let mut families = vec![trace_family(model, state, duration, grid, &seed, FamilyLabel::Main, bound, integ)];
    for (k, c) in relevant.iter().enumerate() {
        let Some(sd) = seed_beyond_caustic(model, state, duration, grid, c, &families[0], integ) else { continue };
        let family = trace_family(model, state, duration, grid, &sd, FamilyLabel::Secondary(k), bound, integ);
        let duplicate = families[1..].iter().any(|other| {
            family.members.iter().any(|m| other.member_at(m.grid_index).is_some_and(|o| (o.w - m.w).norm() < 1e-6 * state.b()))
        });
        if !duplicate && !family.members.is_empty() {
            families.push(family);
        }
    }
    let cuts = filter_families(&mut families, state)?;

    let samples = grid
        .par_iter()
        .enumerate()
        .map(|(k, &x)| {
            let mut flags = SampleFlags::default();
            let mut contributions = Vec::new();
            for family in &families {
                let Some(member) = family.member_at(k) else { continue };
                if member.status != MemberStatus::Contributing {
                    continue;
                }
                if member.derivative().norm() < settings.near_caustic {
                    flags.near_caustic = true;
                }
                flags.gaussian_invalid |= gaussian_integral_invalid(&member.trajectory, state);
                match psi_ct(&member.trajectory, state) {
                    Ok(value) => contributions.push(Contribution { source: ContributionSource::Family(family.label), value }),
                    Err(_) => flags.divergent = true,
                }
            }
            flags.near_caustic |= relevant.iter().any(|c| saddles_coalesce(c, x, state, settings.coalescence));
            WavefunctionSample::from_parts(x, Formula::Ct, contributions, flags)
        })
        .collect();
    Ok(Assembly { formula: Formula::Ct, duration, samples, families, caustics, cuts, scan })
}

/// Near a caustic the two roots are `w_c +- sqrt(2 (x_f - X_c) / X'')`.
fn saddles_coalesce(c: &CausticPoint, x_f: f64, state: &CoherentState, widths: f64) -> bool {
    let delta = (2.0 * (x_f - c.x_t) / c.curvature).sqrt();
    2.0 * delta.norm() < widths * state.b()
}

fn real_trajectories(
    model: &PotentialModel,
    state: &CoherentState,
    formula: Formula,
    grid: &[f64],
    duration: f64,
    settings: &SearchSettings,
) -> Result<Assembly, SemiclassicalError> {
    let integ = &settings.integrator;
    let (mode, shooting_grid) = match formula {
        Formula::Xfq => (ShootingMode::FromPosition, settings.p_grid_for(state)),
        _ => (ShootingMode::FromMomentum, settings.q_grid_for(state)),
    };
    let table = ShootingTable::build(model, state, duration, mode, &shooting_grid, integ);
    let central = table.central_branch(state);
    let samples = grid
        .par_iter()
        .map(|&x| {
            let mut flags = SampleFlags::default();
            let mut contributions = Vec::new();
            let solutions = match table.solve(model, state, x, integ) {
                Ok(s) => s,
                Err(_) => {
                    flags.failed = true;
                    Vec::new()
                }
            };
            for sol in solutions {
                if settings.branches == BranchPolicy::Main && Some(sol.branch) != central {
                    continue;
                }
                if table.branches()[sol.branch].near_turning_end(x, settings.cut_margin) {
                    flags.branch_end = true;
                    continue;
                }
                let tr = &sol.trajectory;
                let damping = match formula {
                    Formula::Xfq => xfq_damping(state, sol.initial, tr),
                    _ => xfp_damping(state, sol.initial, tr),
                };
                if damping.re > settings.damping_cutoff {
                    continue;
                }
                if tr.tangent.m_plus().norm() < settings.near_caustic {
                    flags.near_caustic = true;
                }
                let value = match formula {
                    Formula::Xfq => psi_xfq(state, sol.initial, tr),
                    _ => psi_xfp(state, sol.initial, tr),
                };
                match value {
                    Ok(value) => contributions.push(Contribution { source: ContributionSource::Branch(sol.branch), value }),
                    Err(_) => flags.divergent = true,
                }
            }
            WavefunctionSample::from_parts(x, formula, contributions, flags)
        })
        .collect();
    Ok(Assembly::simple(formula, duration, samples))
}

fn free_trajectory(
    state: &CoherentState,
    x0: Complex64,
    p0: Complex64,
    duration: f64,
    integ: &IntegratorSettings,
) -> Result<TrajectoryRecord, SemiclassicalError> {
    let bound = integ.escape_factor * state.b();
    Ok(propagate(&PotentialModel::Free, x0, p0, duration, state, integ)?.completed(bound)?)
}

/// Method of images: the free-motion value at `x_f` minus the one at `-x_f`.
/// Each reflected path keeps the free formula and gains the factor `-1`.
fn hard_wall(
    state: &CoherentState,
    formula: Formula,
    grid: &[f64],
    duration: f64,
    settings: &SearchSettings,
) -> Result<Assembly, SemiclassicalError> {
    if grid.iter().any(|&x| x <= 0.0) {
        return Err(SemiclassicalError::InvalidInput("hard-wall grid must lie in x_f > 0"));
    }
    if state.q() <= 0.0 {
        return Err(SemiclassicalError::InvalidInput("hard-wall packet must start at q > 0"));
    }
    let integ = &settings.integrator;
    let free = PotentialModel::Free;
    let central = central_endpoint(&free, state, duration, integ)?;
    let reflected_centre = central.q_t < 0.0;
    let mu = state.mu();

    let one_side = |x: f64| -> Result<Complex64, SemiclassicalError> {
        Ok(match formula {
            Formula::Ct => {
                let root = refine_w(&free, state, duration, x, Complex64::default(), integ)?;
                psi_ct(&root.trajectory, state)?
            }
            Formula::Xfq => {
                let p_i = mu * (x - state.q()) / duration;
                let tr = free_trajectory(state, state.q().into(), p_i.into(), duration, integ)?;
                psi_xfq(state, p_i, &tr)?
            }
            Formula::Xfp => {
                let q_i = x - state.p() * duration / mu;
                let tr = free_trajectory(state, q_i.into(), state.p().into(), duration, integ)?;
                psi_xfp(state, q_i, &tr)?
            }
            Formula::Qp => psi_tga(state, &central, x)?,
        })
    };

    let samples = grid
        .par_iter()
        .map(|&x| {
            let mut flags = SampleFlags::default();
            let mut contributions = Vec::new();
            let sides: &[(f64, ContributionSource)] = match formula {
                Formula::Qp if reflected_centre => &[(-1.0, ContributionSource::Reflected)],
                Formula::Qp => &[(1.0, ContributionSource::Central)],
                _ => &[(1.0, ContributionSource::Direct), (-1.0, ContributionSource::Reflected)],
            };
            for &(sign, source) in sides {
                match one_side(sign * x) {
                    Ok(v) => contributions.push(Contribution { source, value: sign * v }),
                    Err(SemiclassicalError::Formula(_)) => flags.divergent = true,
                    Err(_) => flags.failed = true,
                }
            }
            WavefunctionSample::from_parts(x, formula, contributions, flags)
        })
        .collect();
    Ok(Assembly::simple(formula, duration, samples))
}
