//! Mean cost for a uniform query as the solution of
//! `f'(t) = 1 - f(t) + 2 * integral over m of 2(1-m) f(mt)`, `f(0) = 0`.
//!
//! With `A = integral_0^t f` and `B = integral_0^t s f(s) ds` the memory term
//! is `(4/t) A - (4/t^2) B`, which vanishes as `t -> 0`. Near the origin the
//! stage values of `A` and `B` are divided by small `t`, so the solution on
//! `[0, 1]` comes from its Taylor series and Runge-Kutta takes over after.

use serde::Serialize;

use super::constants::beta_star;
use crate::error::{check_positive, Error, Result};

/// Relative error budget for the step-doubling estimate.
pub const ODE_ERROR_BUDGET: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeSolution {
    pub step: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Step-doubling estimate of the largest relative error.
    pub error_estimate: f64,
}

impl OdeSolution {
    /// Linear interpolation between steps.
    pub fn value_at(&self, t: f64) -> f64 {
        let last = self.times.len() - 1;
        let pos = (t / self.step).clamp(0.0, last as f64);
        let i = (pos.floor() as usize).min(last.saturating_sub(1));
        let frac = pos - i as f64;
        if last == 0 {
            return self.values[0];
        }
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// `t^-beta f(t)`.
    pub fn scaled_at(&self, t: f64) -> f64 {
        self.value_at(t) * t.powf(-beta_star())
    }
}

fn rhs(t: f64, s: [f64; 3]) -> [f64; 3] {
    let [f, a, b] = s;
    let memory = if t > 0.0 {
        4.0 * a / t - 4.0 * b / (t * t)
    } else {
        0.0
    };
    [1.0 - f + memory, f, t * f]
}

const SERIES_TERMS: usize = 40;
const SERIES_RADIUS: f64 = 1.0;

/// `(f, A, B)` at `t <= SERIES_RADIUS` from the power series of `f`.
/// Coefficients satisfy `(k+1) c_{k+1} = [k = 0] - c_k + 4 c_k / ((k+1)(k+2))`.
fn series_state(t: f64) -> [f64; 3] {
    let mut c = 0.0;
    let mut s = [0.0; 3];
    let mut tk = 1.0;
    for k in 0..SERIES_TERMS {
        let kf = k as f64;
        s[0] += c * tk;
        s[1] += c * tk * t / (kf + 1.0);
        s[2] += c * tk * t * t / (kf + 2.0);
        let forcing = if k == 0 { 1.0 } else { 0.0 };
        c = (forcing - c + 4.0 * c / ((kf + 1.0) * (kf + 2.0))) / (kf + 1.0);
        tk *= t;
    }
    s
}

fn rk4(t_max: f64, steps: usize) -> Vec<f64> {
    let h = t_max / steps as f64;
    let mut s = [0.0; 3];
    let mut values = Vec::with_capacity(steps + 1);
    values.push(0.0);
    let add =
        |s: [f64; 3], k: [f64; 3], c: f64| [s[0] + c * k[0], s[1] + c * k[1], s[2] + c * k[2]];
    for i in 0..steps {
        let t = h * i as f64;
        if t + h <= SERIES_RADIUS {
            s = series_state(t + h);
            values.push(s[0]);
            continue;
        }
        let k1 = rhs(t, s);
        let k2 = rhs(t + 0.5 * h, add(s, k1, 0.5 * h));
        let k3 = rhs(t + 0.5 * h, add(s, k2, 0.5 * h));
        let k4 = rhs(t + h, add(s, k3, h));
        for d in 0..3 {
            s[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
        values.push(s[0]);
    }
    values
}

/// Fourth-order Runge-Kutta on `(f, A, B)` with step at most `step`.
/// Fails if halving the step count moves the solution by more than the
/// error budget.
pub fn solve_mean_ode(t_max: f64, step: f64) -> Result<OdeSolution> {
    check_positive("t_max", t_max)?;
    check_positive("step", step)?;
    let steps = ((t_max / step).ceil() as usize).max(2).next_multiple_of(2);
    let fine = rk4(t_max, steps);
    let coarse = rk4(t_max, steps / 2);
    let mut estimate = 0.0f64;
    let mut worst_t = 0.0;
    for (i, c) in coarse.iter().enumerate() {
        let f = fine[2 * i];
        let e = (f - c).abs() / 15.0 / f.abs().max(1.0);
        if e > estimate {
            estimate = e;
            worst_t = t_max * i as f64 / (steps / 2) as f64;
        }
    }
    let h = t_max / steps as f64;
    if estimate > ODE_ERROR_BUDGET {
        return Err(Error::StepTooLarge {
            step: h,
            t: worst_t,
            estimate,
            budget: ODE_ERROR_BUDGET,
        });
    }
    Ok(OdeSolution {
        step: h,
        times: (0..=steps).map(|i| h * i as f64).collect(),
        values: fine,
        error_estimate: estimate,
    })
}
