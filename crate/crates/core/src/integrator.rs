//! Adaptive Dormand–Prince 5(4) integration of the four-compartment system.
//!
//! Steps are truncated so that every multiple of `sample_dt` is hit exactly, which keeps
//! sampled output free of interpolation error. After each accepted step the state is
//! projected back onto the simplex by [`guard_simplex`]; a violation larger than the guard
//! tolerance aborts the run, since the exact flow never leaves the simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{field_full, max_abs};
use crate::params::ModelParams;
use crate::state::StateFull;

/// Clamp-and-renormalize tolerance applied after every accepted step.
pub const GUARD_TOL: f64 = 1e-9;
/// Smallest step size accepted before the run is declared stiff.
pub const MIN_STEP: f64 = 1e-12;
/// Fraction of the trajectory (by time) used for tail minima.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Horizon, days.
    pub t_max: f64,
    /// Output spacing, days.
    pub sample_dt: f64,
    /// Threshold on the max-norm of the vector field, 1/day.
    pub steady_tol: f64,
    /// How long the field must stay below `steady_tol` to count as converged, days.
    pub steady_window: f64,
    /// Stop at the first sample after convergence instead of running to `t_max`.
    pub stop_when_steady: bool,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            t_max: 5000.0,
            sample_dt: 1.0,
            steady_tol: 1e-10,
            steady_window: 100.0,
            stop_when_steady: true,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("t_max", self.t_max),
            ("sample_dt", self.sample_dt),
            ("steady_tol", self.steady_tol),
            ("steady_window", self.steady_window),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.sample_dt > self.t_max {
            return Err(Error::InvalidInput(format!(
                "sample_dt ({}) exceeds t_max ({})",
                self.sample_dt, self.t_max
            )));
        }
        Ok(())
    }

    pub fn with_horizon(self, t_max: f64, sample_dt: f64) -> Self {
        Self {
            t_max,
            sample_dt,
            ..self
        }
    }
}

/// Default initial condition for simulations: a small outbreak in a fully susceptible population.
pub fn default_initial_state() -> StateFull {
    StateFull {
        s: 0.98,
        a: 0.01,
        i: 0.01,
        r: 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateFull>,
    pub converged: bool,
    /// Final state, when converged.
    pub limit: Option<StateFull>,
    /// Componentwise minima over the trailing half of the run.
    pub min_tail: [f64; 4],
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> StateFull {
        *self
            .states
            .last()
            .expect("a trajectory holds at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("a trajectory holds at least the initial time")
    }

    /// Componentwise minima of `(S, A, I, R)` over samples with `t >= (1 - fraction) t_end`.
    pub fn tail_minima(&self, fraction: f64) -> Result<[f64; 4]> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "tail fraction must lie in (0, 1), got {fraction}"
            )));
        }
        let cutoff = (1.0 - fraction) * self.final_time();
        let mut mins = [f64::INFINITY; 4];
        let mut seen = 0usize;
        for (t, x) in self.times.iter().zip(&self.states) {
            if *t >= cutoff {
                seen += 1;
                for (m, v) in mins.iter_mut().zip(x.to_array()) {
                    *m = m.min(v);
                }
            }
        }
        if seen == 0 {
            return Err(Error::InvalidInput("trajectory tail is empty".into()));
        }
        Ok(mins)
    }
}

/// Projects a slightly infeasible state back onto the simplex.
///
/// Components in `[-tol, 0)` are clamped to zero and the sum is renormalized to one.
/// Feasible input is returned unchanged; anything further off is an error.
pub fn guard_simplex(x: &StateFull, tol: f64) -> Result<StateFull> {
    if !x.is_finite() {
        return Err(Error::InvarianceViolation {
            tol,
            detail: format!("non-finite state {x:?}"),
        });
    }
    let v = x.to_array();
    let sum: f64 = v.iter().sum();
    if v.iter().any(|&c| c < -tol) || (sum - 1.0).abs() > tol {
        return Err(Error::InvarianceViolation {
            tol,
            detail: format!("{x:?} (sum {sum})"),
        });
    }
    if v.iter().all(|&c| c >= 0.0) && (sum - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok(*x);
    }
    let clamped = v.map(|c| c.max(0.0));
    let total: f64 = clamped.iter().sum();
    Ok(StateFull::from_array(clamped.map(|c| c / total)))
}

// Dormand–Prince 5(4) tableau. The system is autonomous, so the abscissae are unused.
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order weights minus the embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type Vec4 = [f64; 4];

#[inline]
fn axpy(y: &Vec4, h: f64, terms: &[(f64, &Vec4)]) -> Vec4 {
    let mut out = *y;
    for (c, k) in terms {
        for n in 0..4 {
            out[n] += h * c * k[n];
        }
    }
    out
}

/// One Dormand–Prince step from `y` with slope `k1 = f(y)`.
/// Returns the fifth-order solution, its slope, and the local error estimate.
fn dopri_step(p: &ModelParams, y: &Vec4, k1: &Vec4, h: f64) -> (Vec4, Vec4, Vec4) {
    let k2 = field_full(p, &axpy(y, h, &[(A21, k1)]));
    let k3 = field_full(p, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = field_full(p, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = field_full(
        p,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = field_full(
        p,
        &axpy(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    );
    let y_new = axpy(
        y,
        h,
        &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    let k7 = field_full(p, &y_new);
    let mut err = [0.0; 4];
    for n in 0..4 {
        err[n] = h * (E1 * k1[n] + E3 * k3[n] + E4 * k4[n] + E5 * k5[n] + E6 * k6[n] + E7 * k7[n]);
    }
    (y_new, k7, err)
}

/// Fixed-step Dormand–Prince integration (fifth-order solution, no control or guard).
/// Used for convergence-order checks.
pub fn integrate_fixed(p: &ModelParams, x0: &StateFull, h: f64, t_end: f64) -> Result<StateFull> {
    p.validate()?;
    if !(h > 0.0 && t_end >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "bad step {h} or end time {t_end}"
        )));
    }
    let n = (t_end / h).round() as usize;
    let mut y = x0.to_array();
    for _ in 0..n {
        let k1 = field_full(p, &y);
        y = dopri_step(p, &y, &k1, h).0;
    }
    Ok(StateFull::from_array(y))
}

fn error_ratio(err: &Vec4, y: &Vec4, y_new: &Vec4, cfg: &IntegrationConfig) -> f64 {
    (0..4)
        .map(|n| {
            let scale = cfg.abs_tol + cfg.rel_tol * y[n].abs().max(y_new[n].abs());
            err[n].abs() / scale
        })
        .fold(0.0, f64::max)
}

/// Integrates from `x0` up to `cfg.t_max` (or earlier convergence) with samples every
/// `cfg.sample_dt` days.
pub fn integrate(p: &ModelParams, x0: &StateFull, cfg: &IntegrationConfig) -> Result<Trajectory> {
    p.validate()?;
    cfg.validate()?;
    x0.check_simplex(GUARD_TOL)?;
    let mut y = guard_simplex(x0, GUARD_TOL)?.to_array();
    let mut f = field_full(p, &y);
    let mut t = 0.0_f64;

    let mut times = vec![0.0];
    let mut states = vec![StateFull::from_array(y)];
    let mut steady_since = (max_abs(&f) < cfg.steady_tol).then_some(0.0);

    let rate = max_abs(&f) / max_abs(&y).max(1e-300);
    let mut h = if rate > 0.0 {
        0.01 / rate
    } else {
        cfg.sample_dt
    };
    h = h.clamp(1e-6, cfg.sample_dt);

    let n_samples = (cfg.t_max / cfg.sample_dt).ceil() as usize;
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut converged = false;

    'samples: for k in 1..=n_samples {
        let target = (k as f64 * cfg.sample_dt).min(cfg.t_max);
        while t < target {
            let truncated = h >= target - t;
            let step = if truncated { target - t } else { h };
            let (y_new, _k7, err) = dopri_step(p, &y, &f, step);
            let ratio = error_ratio(&err, &y, &y_new, cfg);
            if ratio <= 1.0 {
                accepted += 1;
                t = if truncated { target } else { t + step };
                y = guard_simplex(&StateFull::from_array(y_new), GUARD_TOL)?.to_array();
                f = field_full(p, &y);
                if max_abs(&f) < cfg.steady_tol {
                    steady_since.get_or_insert(t);
                } else {
                    steady_since = None;
                }
                let grow = if ratio == 0.0 {
                    5.0
                } else {
                    (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
                };
                // A step cut short to land on a sample keeps the larger proposal.
                h = if truncated {
                    h.max(step * grow)
                } else {
                    step * grow
                };
            } else {
                rejected += 1;
                h = step * (0.9 * ratio.powf(-0.2)).clamp(0.2, 1.0);
                if h < MIN_STEP {
                    return Err(Error::Stiffness { t, h });
                }
            }
        }
        times.push(t);
        states.push(StateFull::from_array(y));
        converged = steady_since.is_some_and(|t0| t - t0 >= cfg.steady_window);
        if converged && cfg.stop_when_steady {
            break 'samples;
        }
    }

    let mut tr = Trajectory {
        times,
        states,
        converged,
        limit: None,
        min_tail: [0.0; 4],
        accepted_steps: accepted,
        rejected_steps: rejected,
    };
    tr.min_tail = tr.tail_minima(DEFAULT_TAIL_FRACTION)?;
    if converged {
        tr.limit = Some(tr.final_state());
    }
    Ok(tr)
}
