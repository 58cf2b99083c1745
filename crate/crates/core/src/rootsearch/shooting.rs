//! Real trajectories with mixed boundary data: `q -> x_f` (unknown initial
//! momentum) and `p -> x_f` (unknown initial position).
//!
//! A [`ShootingTable`] integrates the trajectories for every value of the
//! free initial coordinate on a grid once; roots for any `x_f` are then
//! bracketed by sign changes of `X_T - x_f` and polished with a safeguarded
//! Newton iteration whose derivative comes from the tangent matrix.

use num_complex::Complex64;

use super::RootSearchError;
use crate::dynamics::{propagate, IntegratorSettings, TrajectoryRecord};
use crate::model::CoherentState;
use crate::potentials::PotentialModel;

/// Which initial coordinate is held at the packet centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShootingMode {
    /// `X(0) = q`, the initial momentum varies.
    FromPosition,
    /// `P(0) = p`, the initial position varies.
    FromMomentum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl ShootingGrid {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|k| self.min + step * k as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootingSolution {
    /// `p_i` for [`ShootingMode::FromPosition`], `q_i` otherwise.
    pub initial: f64,
    pub trajectory: TrajectoryRecord,
    /// Index of the monotone branch of `X_T(initial)` holding this root.
    pub branch: usize,
}

/// A maximal interval of the grid on which `X_T` is monotone.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingBranch {
    pub first_node: usize,
    pub last_node: usize,
    pub x_min: f64,
    pub x_max: f64,
    /// Final positions where the branch ends at a turning point of `X_T`
    /// rather than at the edge of the grid.
    pub turning_ends: Vec<f64>,
}

impl ShootingBranch {
    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// True if `x_f` is closer than `margin * length` to a turning end.
    pub fn near_turning_end(&self, x_f: f64, margin: f64) -> bool {
        let band = margin * self.length();
        self.turning_ends.iter().any(|&e| (x_f - e).abs() < band)
    }
}

#[derive(Debug, Clone)]
struct Node {
    x_t: f64,
    slope: f64,
}

#[derive(Debug, Clone)]
pub struct ShootingTable {
    mode: ShootingMode,
    duration: f64,
    values: Vec<f64>,
    nodes: Vec<Option<Node>>,
    branch_of_node: Vec<Option<usize>>,
    branches: Vec<ShootingBranch>,
}

fn initial_conditions(mode: ShootingMode, state: &CoherentState, value: f64) -> (Complex64, Complex64) {
    match mode {
        ShootingMode::FromPosition => (state.q().into(), value.into()),
        ShootingMode::FromMomentum => (value.into(), state.p().into()),
    }
}

/// `dX_T / d(initial)` from the tangent matrix.
fn slope(mode: ShootingMode, state: &CoherentState, record: &TrajectoryRecord) -> f64 {
    match mode {
        ShootingMode::FromPosition => record.tangent.qp.re * state.b() / state.c(),
        ShootingMode::FromMomentum => record.tangent.qq.re,
    }
}

fn shoot(
    model: &PotentialModel,
    state: &CoherentState,
    duration: f64,
    mode: ShootingMode,
    value: f64,
    settings: &IntegratorSettings,
) -> Option<TrajectoryRecord> {
    let (x0, p0) = initial_conditions(mode, state, value);
    let res = propagate(model, x0, p0, duration, state, settings).ok()?;
    res.is_completed().then_some(res.trajectory)
}

impl ShootingTable {
    pub fn build(
        model: &PotentialModel,
        state: &CoherentState,
        duration: f64,
        mode: ShootingMode,
        grid: &ShootingGrid,
        settings: &IntegratorSettings,
    ) -> Self {
        use rayon::prelude::*;
        let values = grid.values();
        let nodes: Vec<Option<Node>> = values
            .par_iter()
            .map(|&v| {
                shoot(model, state, duration, mode, v, settings)
                    .map(|r| Node { x_t: r.end.x.re, slope: slope(mode, state, &r) })
            })
            .collect();
        let mut table = Self { mode, duration, values, nodes, branch_of_node: Vec::new(), branches: Vec::new() };
        table.segment();
        table
    }

    fn segment(&mut self) {
        let n = self.nodes.len();
        self.branch_of_node = vec![None; n];
        let mut k = 0;
        while k < n {
            let Some(start) = &self.nodes[k] else {
                k += 1;
                continue;
            };
            let sign = start.slope.signum();
            let first = k;
            let mut last = k;
            while last + 1 < n {
                match &self.nodes[last + 1] {
                    Some(node) if node.slope.signum() == sign => last += 1,
                    _ => break,
                }
            }
            let xs: Vec<f64> = (first..=last).map(|j| self.nodes[j].as_ref().unwrap().x_t).collect();
            let mut turning_ends = Vec::new();
            let turns_at = |j: Option<usize>| j.and_then(|j| self.nodes.get(j)).is_some_and(|n| n.is_some());
            if first > 0 && turns_at(Some(first - 1)) {
                turning_ends.push(xs[0]);
            }
            if turns_at(Some(last + 1)) {
                turning_ends.push(xs[xs.len() - 1]);
            }
            let id = self.branches.len();
            self.branches.push(ShootingBranch {
                first_node: first,
                last_node: last,
                x_min: xs.iter().cloned().fold(f64::INFINITY, f64::min),
                x_max: xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                turning_ends,
            });
            for j in first..=last {
                self.branch_of_node[j] = Some(id);
            }
            k = last + 1;
        }
    }

    pub fn mode(&self) -> ShootingMode {
        self.mode
    }

    pub fn branches(&self) -> &[ShootingBranch] {
        &self.branches
    }

    /// Branch containing the packet centre (`p` or `q`), if the grid covers it.
    pub fn central_branch(&self, state: &CoherentState) -> Option<usize> {
        let centre = match self.mode {
            ShootingMode::FromPosition => state.p(),
            ShootingMode::FromMomentum => state.q(),
        };
        let k = self
            .values
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - centre).abs().total_cmp(&(b.1 - centre).abs()))?
            .0;
        self.branch_of_node[k]
    }

    /// Final positions `X_T` at every grid node (`None` where integration failed).
    pub fn final_positions(&self) -> Vec<(f64, Option<f64>)> {
        self.values.iter().zip(&self.nodes).map(|(&v, n)| (v, n.as_ref().map(|n| n.x_t))).collect()
    }

    /// Every real root of `X_T(initial) = x_f` bracketed on the grid.
    pub fn solve(
        &self,
        model: &PotentialModel,
        state: &CoherentState,
        x_f: f64,
        settings: &IntegratorSettings,
    ) -> Result<Vec<ShootingSolution>, RootSearchError> {
        let tol = 1e-9 * state.b();
        let mut out = Vec::new();
        for k in 0..self.nodes.len() {
            let Some(a) = &self.nodes[k] else { continue };
            let fa = a.x_t - x_f;
            if fa == 0.0 {
                let traj = shoot(model, state, self.duration, self.mode, self.values[k], settings)
                    .ok_or(RootSearchError::ShootingFailed { initial: self.values[k] })?;
                out.push(ShootingSolution {
                    initial: self.values[k],
                    trajectory: traj,
                    branch: self.branch_of_node[k].unwrap_or(0),
                });
                continue;
            }
            let Some(Some(b)) = self.nodes.get(k + 1) else { continue };
            let fb = b.x_t - x_f;
            if fa * fb >= 0.0 {
                continue;
            }
            let (value, traj) = self.polish(model, state, x_f, (self.values[k], fa), (self.values[k + 1], fb), tol, settings)?;
            let branch = self.assign_branch(k, slope(self.mode, state, &traj));
            out.push(ShootingSolution { initial: value, trajectory: traj, branch });
        }
        Ok(out)
    }

    fn assign_branch(&self, k: usize, root_slope: f64) -> usize {
        let left = self.branch_of_node[k];
        let right = self.branch_of_node.get(k + 1).copied().flatten();
        match (left, right) {
            (Some(l), Some(r)) if l != r => {
                let left_sign = self.nodes[k].as_ref().map(|n| n.slope.signum()).unwrap_or(0.0);
                if left_sign == root_slope.signum() {
                    l
                } else {
                    r
                }
            }
            (Some(l), _) => l,
            (None, Some(r)) => r,
            (None, None) => 0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn polish(
        &self,
        model: &PotentialModel,
        state: &CoherentState,
        x_f: f64,
        (mut lo, mut f_lo): (f64, f64),
        (mut hi, f_hi): (f64, f64),
        tol: f64,
        settings: &IntegratorSettings,
    ) -> Result<(f64, TrajectoryRecord), RootSearchError> {
        // Secant start inside the bracket.
        let mut x = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        for _ in 0..100 {
            let traj = shoot(model, state, self.duration, self.mode, x, settings)
                .ok_or(RootSearchError::ShootingFailed { initial: x })?;
            let g = traj.end.x.re - x_f;
            if g.abs() < tol {
                return Ok((x, traj));
            }
            if g.signum() == f_lo.signum() {
                lo = x;
                f_lo = g;
            } else {
                hi = x;
            }
            let d = slope(self.mode, state, &traj);
            let newton = x - g / d;
            let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
            x = if d != 0.0 && newton > a && newton < b { newton } else { 0.5 * (lo + hi) };
            if (hi - lo).abs() < 1e-15 * (1.0 + x.abs()) {
                return Ok((x, traj));
            }
        }
        Err(RootSearchError::NoConvergence { iterations: 100 })
    }
}

/// Real trajectories from `X(0) = q` reaching `x_f` at time `duration`.
pub fn shoot_q_to_xf(
    model: &PotentialModel,
    state: &CoherentState,
    x_f: f64,
    duration: f64,
    p_grid: &ShootingGrid,
    settings: &IntegratorSettings,
) -> Result<Vec<ShootingSolution>, RootSearchError> {
    ShootingTable::build(model, state, duration, ShootingMode::FromPosition, p_grid, settings).solve(model, state, x_f, settings)
}

/// Real trajectories with `P(0) = p` reaching `x_f` at time `duration`.
pub fn shoot_p_to_xf(
    model: &PotentialModel,
    state: &CoherentState,
    x_f: f64,
    duration: f64,
    q_grid: &ShootingGrid,
    settings: &IntegratorSettings,
) -> Result<Vec<ShootingSolution>, RootSearchError> {
    ShootingTable::build(model, state, duration, ShootingMode::FromMomentum, q_grid, settings).solve(model, state, x_f, settings)
}
