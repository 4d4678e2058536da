//! Seeded property suite over the model invariants, used by the `verify` command.
//!
//! Every check draws its own reproducible random stream from the seed, so the report is
//! identical across runs and independent of thread scheduling.

use std::fmt;

use nalgebra::{DMatrix, Matrix4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::sampling;
use crate::integrator::{integrate, IntegrationConfig};
use crate::linalg;
use crate::model::{self, max_abs};
use crate::params::{ModelParams, MU_70_YEARS};
use crate::stability;
use crate::state::{StateReduced, SIMPLEX_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed violation measure for the check (error or derivative).
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}/{} cases, worst {:.3e} (tol {:.1e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases - self.failures,
            self.cases,
            self.worst,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let passed = self.checks.iter().filter(|c| c.passed()).count();
        write!(
            f,
            "{passed}/{} checks passed (seed {}, {} samples)",
            self.checks.len(),
            self.seed,
            self.samples
        )
    }
}

struct Tally {
    outcome: CheckOutcome,
}

impl Tally {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            outcome: CheckOutcome {
                name: name.to_string(),
                cases: 0,
                failures: 0,
                worst: 0.0,
                tolerance,
            },
        }
    }

    /// Records a measured violation; NaN counts as a failure.
    fn record(&mut self, measure: f64) {
        self.outcome.cases += 1;
        if measure.is_nan() || measure > self.outcome.tolerance {
            self.outcome.failures += 1;
        }
        if measure.is_nan() || measure > self.outcome.worst {
            self.outcome.worst = if measure.is_nan() {
                f64::INFINITY
            } else {
                measure
            };
        }
    }

    fn record_bool(&mut self, ok: bool) {
        self.record(if ok { 0.0 } else { f64::INFINITY });
    }

    fn finish(self) -> CheckOutcome {
        self.outcome
    }
}

/// Range of the log-uniform rate draws used throughout the suite.
const RATE_MIN: f64 = 0.01;
const RATE_MAX: f64 = 1.0;

fn draw(rng: &mut ChaCha8Rng) -> ModelParams {
    sampling::random_params(rng, RATE_MIN, RATE_MAX, MU_70_YEARS)
}

fn draw_endemic(rng: &mut ChaCha8Rng) -> ModelParams {
    loop {
        let p = draw(rng);
        if model::r0_closed_form(&p) > 1.0 {
            return p;
        }
    }
}

fn random_interior(rng: &mut ChaCha8Rng) -> StateReduced {
    sampling::random_simplex_point(rng).reduce()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn check_r0_equivalence(rng: &mut ChaCha8Rng, n: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("r0_next_generation_radius", 1e-12);
    for _ in 0..n {
        let p = draw(rng);
        let k = model::next_gen_pair(&p).next_generation_matrix();
        let ev = linalg::eigenvalues(&DMatrix::from_column_slice(2, 2, k.as_slice()))?;
        let rho = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
        t.record(rel_err(model::r0_closed_form(&p), rho));
    }
    Ok(t.finish())
}

fn check_equilibrium_residuals(
    rng: &mut ChaCha8Rng,
    n: usize,
) -> Result<(CheckOutcome, CheckOutcome)> {
    let mut ee_t = Tally::new("endemic_residual", 1e-10);
    let mut dfe_t = Tally::new("dfe_residual", 1e-14);
    for _ in 0..n {
        let p = draw_endemic(rng);
        let ee = model::endemic_equilibrium(&p)?.expect("R0 > 1");
        ee_t.record(max_abs(&model::rhs_reduced(&p, &ee)?));
        dfe_t.record(max_abs(&model::rhs_reduced(&p, &model::dfe(&p))?));
    }
    Ok((ee_t.finish(), dfe_t.finish()))
}

fn check_threshold_law(rng: &mut ChaCha8Rng, n: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("dfe_threshold_law", 0.0);
    let mut done = 0;
    while done < n {
        let p = draw(rng);
        let r0 = model::r0_closed_form(&p);
        if (r0 - 1.0).abs() <= 1e-3 {
            continue;
        }
        let spec = stability::dfe_spectrum(&p)?;
        t.record_bool((spec.max_real_part > 0.0) == (r0 > 1.0));
        done += 1;
    }
    Ok(t.finish())
}

fn check_ratio_and_s_star(rng: &mut ChaCha8Rng, n: usize) -> Result<(CheckOutcome, CheckOutcome)> {
    let mut ratio = Tally::new("endemic_a_over_i", 1e-6);
    let mut s_inv = Tally::new("s_star_independent_of_gamma_nu", 1e-12);
    for _ in 0..n {
        let p = draw_endemic(rng);
        let ee = model::endemic_equilibrium(&p)?.expect("R0 > 1");
        ratio.record(rel_err(ee.a / ee.i, (p.delta_i + p.mu) / p.alpha));
        // With ν = 0 the factor (γ+μ)/(ν+γ+μ) is one, so R0 cannot drop below the original.
        let q = ModelParams {
            gamma: p.gamma * rng.random::<f64>(),
            nu: 0.0,
            ..p
        };
        let Some(other) = model::endemic_equilibrium(&q)? else {
            s_inv.record(f64::INFINITY);
            continue;
        };
        s_inv.record((other.s - ee.s).abs());
    }
    Ok((ratio.finish(), s_inv.finish()))
}

fn check_f_minus_v(rng: &mut ChaCha8Rng, n: usize) -> CheckOutcome {
    let mut t = Tally::new("f_minus_v_real_spectrum", 0.0);
    for _ in 0..n {
        let p = draw(rng);
        let ev = stability::f_minus_v_eigenvalues(&p);
        t.record(ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max));
    }
    t.finish()
}

fn check_jacobian(rng: &mut ChaCha8Rng, n: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("jacobian_finite_difference", 1e-6);
    let h = 1e-6;
    for _ in 0..n {
        let p = draw(rng);
        let x = random_interior(rng);
        let j = model::jacobian_reduced(&p, &x)?;
        for col in 0..3 {
            let mut plus = x.to_array();
            let mut minus = x.to_array();
            plus[col] += h;
            minus[col] -= h;
            let fp = model::field_reduced(&p, &plus);
            let fm = model::field_reduced(&p, &minus);
            for row in 0..3 {
                t.record(((fp[row] - fm[row]) / (2.0 * h) - j[(row, col)]).abs());
            }
        }
    }
    Ok(t.finish())
}

fn check_compound(rng: &mut ChaCha8Rng, n: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("third_compound_spectrum", 1e-9);
    for _ in 0..n {
        let m = Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let ev = linalg::eigenvalues(&DMatrix::from_column_slice(4, 4, m.as_slice()))?;
        let c = stability::third_additive_compound(&m);
        let cev = linalg::eigenvalues(&DMatrix::from_column_slice(4, 4, c.as_slice()))?;
        // Each triple-sum is the trace minus the omitted eigenvalue.
        let trace: num_complex::Complex64 = ev.iter().sum();
        let mut unmatched: Vec<_> = ev.iter().map(|&l| trace - l).collect();
        let mut worst = 0.0_f64;
        for z in cev {
            let (k, d) = unmatched
                .iter()
                .enumerate()
                .map(|(k, w)| (k, (w - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("four candidates");
            unmatched.swap_remove(k);
            worst = worst.max(d);
        }
        t.record(worst);
    }
    Ok(t.finish())
}

fn check_lyapunov(rng: &mut ChaCha8Rng, n: usize) -> Result<Vec<CheckOutcome>> {
    const POINTS: usize = 100;
    let mut sair = Tally::new("lyapunov_sair_derivative", 1e-12);
    let mut equal = Tally::new("lyapunov_equal_rates_derivative", 1e-12);
    let mut novax = Tally::new("lyapunov_dfe_novax_derivative", 1e-12);
    for _ in 0..n {
        // Without waning immunity the susceptible fraction at the DFE is μ/(μ+ν), so ν has
        // to be of the order of μ for an endemic state to exist.
        let p = ModelParams {
            gamma: 0.0,
            nu: MU_70_YEARS * rng.random::<f64>(),
            ..draw_endemic(rng)
        };
        if model::r0_closed_form(&p) > 1.0 {
            for _ in 0..POINTS {
                sair.record(stability::lyapunov_sair(&p, &random_interior(rng))?.derivative);
            }
        }

        let base = draw_endemic(rng);
        let q = ModelParams {
            beta_i: base.beta_a,
            delta_i: base.delta_a,
            ..base
        };
        if model::r0_closed_form(&q) > 1.0 {
            for _ in 0..POINTS {
                equal
                    .record(stability::lyapunov_sairs_equal(&q, &random_interior(rng))?.derivative);
            }
        }

        let r = ModelParams {
            nu: 0.0,
            ..draw(rng)
        };
        if model::r0_closed_form(&r) < 1.0 {
            for _ in 0..POINTS {
                novax.record(stability::lyapunov_dfe_novax(&r, &random_interior(rng))?.derivative);
            }
        }
    }
    Ok(vec![sair.finish(), equal.finish(), novax.finish()])
}

fn check_invariance(rng: &mut ChaCha8Rng, n: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("simplex_invariance", SIMPLEX_TOL);
    let cfg = IntegrationConfig {
        t_max: 200.0,
        sample_dt: 1.0,
        stop_when_steady: false,
        ..Default::default()
    };
    for _ in 0..n {
        let p = draw(rng);
        let x0 = sampling::random_simplex_point(rng);
        match integrate(&p, &x0, &cfg) {
            Ok(tr) => {
                let worst = tr
                    .states
                    .iter()
                    .map(|x| {
                        let a = x.to_array();
                        let below = a.iter().map(|&c| -c).fold(0.0, f64::max);
                        below.max((x.sum() - 1.0).abs())
                    })
                    .fold(0.0, f64::max);
                t.record(worst);
            }
            Err(Error::InvarianceViolation { .. }) => t.record(f64::INFINITY),
            Err(e) => return Err(e),
        }
    }
    Ok(t.finish())
}

/// Runs every check with `n` random cases each (fewer for the integration check).
pub fn run_suite(seed: u64, n: usize) -> Result<VerifyReport> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "verify needs at least one sample".into(),
        ));
    }
    let mut stream = 0u64;
    let mut next_rng = || {
        stream += 1;
        sampling::stream_rng(seed, stream)
    };
    let mut checks = vec![check_r0_equivalence(&mut next_rng(), n)?];
    let (ee, dfe) = check_equilibrium_residuals(&mut next_rng(), n)?;
    checks.extend([ee, dfe]);
    checks.push(check_threshold_law(&mut next_rng(), n)?);
    let (ratio, s_inv) = check_ratio_and_s_star(&mut next_rng(), n)?;
    checks.extend([ratio, s_inv]);
    checks.push(check_f_minus_v(&mut next_rng(), n));
    checks.push(check_jacobian(&mut next_rng(), n)?);
    checks.push(check_compound(&mut next_rng(), n)?);
    checks.extend(check_lyapunov(&mut next_rng(), n.div_ceil(10))?);
    checks.push(check_invariance(&mut next_rng(), n.div_ceil(10))?);
    Ok(VerifyReport {
        seed,
        samples: n,
        checks,
    })
}
