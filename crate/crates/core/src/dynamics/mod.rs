//! Hamilton's equations, the tangent matrix and the action, integrated
//! together for real or complex initial data.

pub mod analytic;
pub mod integrator;

use std::f64::consts::FRAC_PI_4;
use std::io::{self, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{CoherentState, ComplexPhasePoint, TangentMatrix};
use crate::potentials::PotentialModel;
use crate::semiclassics::branch::BranchTracker;
use integrator::{Control, IntegratorError, Step, Tolerances};

pub use analytic::{wall_trajectories, WallPath, WallTrajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Spacing of recorded samples; `None` keeps only the endpoints.
    pub dense_output_stride: Option<f64>,
    /// Escape radius in units of the packet width `b`.
    pub escape_factor: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            dense_output_stride: None,
            escape_factor: 1e3,
            max_steps: 2_000_000,
        }
    }
}

impl IntegratorSettings {
    pub fn with_stride(mut self, stride: f64) -> Self {
        self.dense_output_stride = Some(stride);
        self
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances { rel: self.rel_tol, abs: self.abs_tol, max_step: self.max_step, max_steps: self.max_steps }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_step > 0.0
            && self.escape_factor > 0.0
            && self.dense_output_stride.is_none_or(|s| s > 0.0 && s.is_finite());
        if ok {
            Ok(())
        } else {
            Err(DynamicsError::InvalidSettings(*self))
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid integrator settings {0:?}")]
    InvalidSettings(IntegratorSettings),
    #[error("invalid propagation request: {0}")]
    InvalidInput(&'static str),
    #[error("trajectory escaped (|X| > {bound}) at t = {t}")]
    Escaped { t: f64, bound: f64 },
    #[error("integration failed: {0}")]
    StepFailure(#[from] IntegratorError),
}

/// One recorded point along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub point: ComplexPhasePoint,
    pub action: Complex64,
    pub tangent: TangentMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// Recorded samples, strictly increasing in `t`.
    pub samples: Vec<TrajectorySample>,
    pub start: ComplexPhasePoint,
    pub end: ComplexPhasePoint,
    /// Accumulated action `S = ∫ (P Xdot - H) dt`.
    pub action: Complex64,
    pub tangent: TangentMatrix,
    pub energy0: Complex64,
    /// Continuous phase of `m_qq + i m_qp`, followed from `1` at `t = 0`.
    pub m_plus_phase: f64,
    /// Number of places where the phase could not be followed unambiguously.
    pub branch_violations: usize,
}

impl TrajectoryRecord {
    pub fn duration(&self) -> f64 {
        self.end.t - self.start.t
    }

    /// Writes the per-sample CSV dump (t, X, P, S and the four tangent entries).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "t,re_x,im_x,re_p,im_p,re_s,im_s,re_m_qq,im_m_qq,re_m_qp,im_m_qp,re_m_pq,im_m_pq,re_m_pp,im_m_pp"
        )?;
        for s in &self.samples {
            let m = &s.tangent;
            let values = [
                s.point.t,
                s.point.x.re,
                s.point.x.im,
                s.point.p.re,
                s.point.p.im,
                s.action.re,
                s.action.im,
                m.qq.re,
                m.qq.im,
                m.qp.re,
                m.qp.im,
                m.pq.re,
                m.pq.im,
                m.pp.re,
                m.pp.im,
            ];
            let line: Vec<String> = values.iter().map(|v| format!("{v:.11e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropagationStatus {
    Completed,
    Escaped { t: f64 },
    StepFailure(IntegratorError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub trajectory: TrajectoryRecord,
    pub status: PropagationStatus,
}

impl PropagationResult {
    pub fn is_completed(&self) -> bool {
        self.status == PropagationStatus::Completed
    }

    /// The trajectory if it reached the final time, an error otherwise.
    pub fn completed(self, bound: f64) -> Result<TrajectoryRecord, DynamicsError> {
        match self.status {
            PropagationStatus::Completed => Ok(self.trajectory),
            PropagationStatus::Escaped { t } => Err(DynamicsError::Escaped { t, bound }),
            PropagationStatus::StepFailure(e) => Err(DynamicsError::StepFailure(e)),
        }
    }
}

const DIM: usize = 14;

fn pack(point: &ComplexPhasePoint, action: Complex64, m: &TangentMatrix) -> [f64; DIM] {
    [
        point.x.re, point.x.im, point.p.re, point.p.im, action.re, action.im, m.qq.re, m.qq.im, m.qp.re,
        m.qp.im, m.pq.re, m.pq.im, m.pp.re, m.pp.im,
    ]
}

fn unpack(y: &[f64; DIM], t: f64) -> TrajectorySample {
    let c = |k: usize| Complex64::new(y[k], y[k + 1]);
    TrajectorySample {
        point: ComplexPhasePoint::new(c(0), c(2), t),
        action: c(4),
        tangent: TangentMatrix::new(c(6), c(8), c(10), c(12)),
    }
}

fn m_plus_of(y: &[f64; DIM]) -> Complex64 {
    // m_qq + i m_qp
    Complex64::new(y[6] - y[9], y[7] + y[8])
}

struct Rhs<'a> {
    model: &'a PotentialModel,
    mu: f64,
    omega: f64,
}

impl Rhs<'_> {
    fn eval(&self, y: &[f64; DIM]) -> [f64; DIM] {
        let x = Complex64::new(y[0], y[1]);
        let p = Complex64::new(y[2], y[3]);
        let pot = self.model.evaluate(x);
        let xdot = p / self.mu;
        let pdot = -pot.dv;
        let sdot = p * p / (2.0 * self.mu) - pot.v;
        let k = pot.d2v / (self.mu * self.omega);
        let w = self.omega;
        let c = |k: usize| Complex64::new(y[k], y[k + 1]);
        let (qq, qp, pq, pp) = (c(6), c(8), c(10), c(12));
        let dqq = pq * w;
        let dqp = pp * w;
        let dpq = -k * qq;
        let dpp = -k * qp;
        [
            xdot.re, xdot.im, pdot.re, pdot.im, sdot.re, sdot.im, dqq.re, dqq.im, dqp.re, dqp.im, dpq.re,
            dpq.im, dpp.re, dpp.im,
        ]
    }
}

/// Advances the branch tracker across one step, subdividing through the
/// dense output whenever the phase of `m_+` turns by more than `pi/4`.
fn track_step(tracker: &mut BranchTracker, step: &Step<'_, DIM>) {
    let target = m_plus_of(step.y_new);
    if tracker.peek(target).abs() <= FRAC_PI_4 {
        tracker.advance(target);
        return;
    }
    let mut pieces = 4usize;
    while pieces <= 4096 {
        let mut trial = *tracker;
        let mut smooth = true;
        for k in 1..=pieces {
            let t = step.t_old + (step.t_new - step.t_old) * k as f64 / pieces as f64;
            let v = if k == pieces { target } else { m_plus_of(&step.dense(t)) };
            if trial.peek(v).abs() > FRAC_PI_4 {
                smooth = false;
                break;
            }
            trial.advance(v);
        }
        if smooth {
            *tracker = trial;
            return;
        }
        pieces *= 4;
    }
    tracker.advance(target);
}

/// Integrates the trajectory starting at `(x0, p0)` for a time `duration`,
/// together with its tangent matrix (identity at `t = 0`) and action.
pub fn propagate(
    model: &PotentialModel,
    x0: Complex64,
    p0: Complex64,
    duration: f64,
    state: &CoherentState,
    settings: &IntegratorSettings,
) -> Result<PropagationResult, DynamicsError> {
    settings.validate()?;
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(DynamicsError::InvalidInput("propagation time must be finite and non-negative"));
    }
    if !(x0.is_finite() && p0.is_finite()) {
        return Err(DynamicsError::InvalidInput("initial conditions must be finite"));
    }
    let start = ComplexPhasePoint::new(x0, p0, 0.0);
    let energy0 = model.hamiltonian(&start, state.mu());
    let first = TrajectorySample { point: start, action: Complex64::default(), tangent: TangentMatrix::IDENTITY };
    let bound = settings.escape_factor * state.b();
    let rhs = Rhs { model, mu: state.mu(), omega: state.omega() };

    let mut samples = vec![first];
    let mut tracker = BranchTracker::new();
    let mut last = first;
    let mut escaped_at = None;
    let mut next_sample = settings.dense_output_stride;
    let stride = settings.dense_output_stride;

    let outcome = integrator::integrate(
        |_, y: &[f64; DIM]| rhs.eval(y),
        pack(&start, Complex64::default(), &TangentMatrix::IDENTITY),
        0.0,
        duration,
        &settings.tolerances(),
        |step| {
            track_step(&mut tracker, step);
            if let (Some(stride), Some(next)) = (stride, next_sample.as_mut()) {
                while *next < step.t_new && *next < duration {
                    samples.push(unpack(&step.dense(*next), *next));
                    *next += stride;
                }
            }
            last = unpack(step.y_new, step.t_new);
            if last.point.x.norm() > bound {
                escaped_at = Some(step.t_new);
                return Control::Stop;
            }
            Control::Continue
        },
    );

    if last.point.t > samples.last().map_or(0.0, |s| s.point.t) {
        samples.push(last);
    }
    let status = match (outcome, escaped_at) {
        (_, Some(t)) => PropagationStatus::Escaped { t },
        (Err(e), None) => PropagationStatus::StepFailure(e),
        (Ok(_), None) => PropagationStatus::Completed,
    };
    Ok(PropagationResult {
        trajectory: TrajectoryRecord {
            samples,
            start,
            end: last.point,
            action: last.action,
            tangent: last.tangent,
            energy0,
            m_plus_phase: tracker.phase(),
            branch_violations: tracker.violations(),
        },
        status,
    })
}

/// Endpoint of the real trajectory launched from the packet centre `(q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralEndpoint {
    pub q_t: f64,
    pub p_t: f64,
    pub action: f64,
    pub tangent: TangentMatrix,
    pub m_plus_phase: f64,
}

pub fn central_endpoint(
    model: &PotentialModel,
    state: &CoherentState,
    duration: f64,
    settings: &IntegratorSettings,
) -> Result<CentralEndpoint, DynamicsError> {
    let bound = settings.escape_factor * state.b();
    let record = propagate(model, state.q().into(), state.p().into(), duration, state, settings)?.completed(bound)?;
    Ok(CentralEndpoint {
        q_t: record.end.x.re,
        p_t: record.end.p.re,
        action: record.action.re,
        tangent: record.tangent,
        m_plus_phase: record.m_plus_phase,
    })
}
