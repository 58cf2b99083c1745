//! Adaptive Dormand-Prince 5(4) integrator with continuous (dense) output.
//!
//! Works on fixed-size real state vectors; complex systems are packed as
//! `(re, im)` pairs by the caller.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

/// What the observer wants after seeing an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Accepted step handed to the observer, with its interpolant.
pub struct Step<'a, const N: usize> {
    pub t_old: f64,
    pub t_new: f64,
    pub y_old: &'a [f64; N],
    pub y_new: &'a [f64; N],
    coeffs: &'a [[f64; N]; 5],
}

impl<const N: usize> Step<'_, N> {
    /// Fourth-order continuous extension inside `[t_old, t_new]`.
    pub fn dense(&self, t: f64) -> [f64; N] {
        let h = self.t_new - self.t_old;
        if h == 0.0 {
            return *self.y_new;
        }
        let theta = (t - self.t_old) / h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = self.coeffs;
        std::array::from_fn(|i| {
            r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub t_end: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub stopped_early: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

fn error_norm<const N: usize>(
    err: &[f64; N],
    y: &[f64; N],
    y_new: &[f64; N],
    tol: &Tolerances,
) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sk = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
            (err[i] / sk).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(rhs: &mut F, t0: f64, y0: &[f64; N], f0: &[f64; N], span: f64, tol: &Tolerances) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let zero = [0.0; N];
    let d0 = error_norm(y0, &zero, &zero, tol);
    let d1 = error_norm(f0, &zero, &zero, tol);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span).min(tol.max_step);
    let y1 = combine(y0, h0, &[(1.0, f0)]);
    let f1 = rhs(t0 + h0, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = error_norm(&diff, &zero, &zero, tol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span).min(tol.max_step)
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1 > t0`.
///
/// `observer` sees every accepted step and may stop the integration early.
pub fn integrate<const N: usize, F, O>(
    mut rhs: F,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    tol: &Tolerances,
    mut observer: O,
) -> Result<Summary, IntegratorError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(&Step<'_, N>) -> Control,
{
    let span = t1 - t0;
    let mut summary = Summary { t_end: t0, accepted: 0, rejected: 0, stopped_early: false };
    if span <= 0.0 {
        return Ok(summary);
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = initial_step(&mut rhs, t, &y, &k1, span, tol);
    let mut last_rejected = false;

    loop {
        if summary.accepted + summary.rejected >= tol.max_steps {
            return Err(IntegratorError::TooManySteps(tol.max_steps));
        }
        let remaining = t1 - t;
        let final_step = h >= remaining * (1.0 - 1e-12);
        if final_step {
            h = remaining;
        }
        if h < 1e-14 * span.max(t.abs()) {
            return Err(IntegratorError::StepUnderflow { t, h });
        }

        let y2 = combine(&y, h, &[(A21, &k1)]);
        let k2 = rhs(t + C2 * h, &y2);
        let y3 = combine(&y, h, &[(A31, &k1), (A32, &k2)]);
        let k3 = rhs(t + C3 * h, &y3);
        let y4 = combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = rhs(t + C4 * h, &y4);
        let y5 = combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = rhs(t + C5 * h, &y5);
        let y6 = combine(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let t_new = if final_step { t1 } else { t + h };
        let k6 = rhs(t + h, &y6);
        let y_new = combine(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = rhs(t_new, &y_new);

        let err: [f64; N] = std::array::from_fn(|i| {
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let en = error_norm(&err, &y, &y_new, tol);
        if !en.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            // Treat blow-up inside the step as a rejection; shrink hard.
            summary.rejected += 1;
            last_rejected = true;
            h *= FAC_MIN;
            if !y.iter().all(|v| v.is_finite()) {
                return Err(IntegratorError::NonFinite(t));
            }
            continue;
        }

        if en <= 1.0 {
            let diff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - diff[i]);
            let coeffs = [
                y,
                diff,
                bspl,
                std::array::from_fn(|i| diff[i] - h * k7[i] - bspl[i]),
                std::array::from_fn(|i| {
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                }),
            ];
            let step = Step { t_old: t, t_new, y_old: &y, y_new: &y_new, coeffs: &coeffs };
            let control = observer(&step);
            summary.accepted += 1;
            t = t_new;
            y = y_new;
            k1 = k7;
            summary.t_end = t;
            if control == Control::Stop {
                summary.stopped_early = t < t1;
                return Ok(summary);
            }
            if final_step {
                return Ok(summary);
            }
            let mut fac = (SAFETY * en.max(1e-16).powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h = (h * fac).min(tol.max_step);
        } else {
            summary.rejected += 1;
            last_rejected = true;
            h *= (SAFETY * en.powf(-0.2)).clamp(FAC_MIN, 1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> Tolerances {
        Tolerances { rel: 1e-11, abs: 1e-13, max_step: f64::INFINITY, max_steps: 1_000_000 }
    }

    #[test]
    fn exponential_decay_and_dense_output() {
        let mut worst = 0.0f64;
        let summary = integrate(
            |_, y: &[f64; 1]| [-y[0]],
            [1.0],
            0.0,
            3.0,
            &tight(),
            |step| {
                for k in 0..=4 {
                    let t = step.t_old + (step.t_new - step.t_old) * k as f64 / 4.0;
                    worst = worst.max((step.dense(t)[0] - (-t).exp()).abs());
                }
                Control::Continue
            },
        )
        .unwrap();
        assert_eq!(summary.t_end, 3.0);
        assert!(worst < 1e-9, "dense error {worst:e}");
    }

    #[test]
    fn oscillator_endpoint_accuracy() {
        let mut last = [0.0; 2];
        integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            [1.0, 0.0],
            0.0,
            10.0,
            &tight(),
            |step| {
                last = *step.y_new;
                Control::Continue
            },
        )
        .unwrap();
        assert!((last[0] - 10f64.cos()).abs() < 1e-9);
        assert!((last[1] + 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn observer_can_stop() {
        let s = integrate(|_, _: &[f64; 1]| [1.0], [0.0], 0.0, 5.0, &tight(), |step| {
            if step.y_new[0] > 1.0 {
                Control::Stop
            } else {
                Control::Continue
            }
        })
        .unwrap();
        assert!(s.stopped_early && s.t_end < 5.0);
    }

    #[test]
    fn finite_time_blow_up_underflows() {
        // y' = y^2, y(0) = 1 blows up at t = 1.
        let r = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], [1.0], 0.0, 2.0, &tight(), |_| Control::Continue);
        assert!(r.is_err());
    }
}
