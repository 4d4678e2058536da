//! Parameter sweeps, time-series families, persistence measurement and the numerical
//! probe of global stability outside the certified parameter region.
//!
//! Work items (sweep cells, family members, probe samples) are independent and evaluated
//! in parallel; results are always returned in grid/input order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{default_initial_state, integrate, IntegrationConfig, Trajectory};
use crate::model::{self, EquilibriumReport, Regime};
use crate::params::{ModelParams, Rate, MU_70_YEARS};
use crate::stability::{self, GeometricCertificate};
use crate::state::StateFull;

/// Parameter sets for the asymptotic-state surfaces (fig2) and the time-series families (fig3 to fig7).
pub mod presets {
    use super::*;

    fn p(
        beta_a: f64,
        beta_i: f64,
        alpha: f64,
        delta_a: f64,
        delta_i: f64,
        gamma: f64,
        nu: f64,
    ) -> ModelParams {
        ModelParams {
            beta_a,
            beta_i,
            alpha,
            delta_a,
            delta_i,
            gamma,
            nu,
            mu: MU_70_YEARS,
        }
    }

    /// Asymptotic-state surfaces over (β_A, β_I); the transmission rates here are placeholders.
    pub fn fig2_base() -> ModelParams {
        p(0.8, 0.95, 0.15, 0.1, 0.15, 0.01, 0.01)
    }

    /// 80×95 grid, one cell per 0.01 in each transmission rate.
    pub fn fig2_sweep() -> SweepSpec {
        SweepSpec {
            base: fig2_base(),
            axis1: Axis::new(Rate::BetaA, 0.01, 0.8, 80),
            axis2: Axis::new(Rate::BetaI, 0.01, 0.95, 95),
            quantity: SweepQuantity::AsymptoticState,
            boundary_tol: model::DEFAULT_BOUNDARY_TOL,
            crosscheck_per_axis: 5,
        }
    }

    /// Varying immunity-loss rate γ.
    pub fn fig3_base() -> ModelParams {
        p(0.8, 0.95, 0.15, 0.125, 0.15, 0.01, 0.01)
    }

    pub const FIG3_GAMMAS: [f64; 4] = [0.001, 0.01, 0.02, 0.05];

    /// Varying α with β_A = β_I.
    pub fn fig4_base() -> ModelParams {
        p(0.9, 0.9, 0.15, 0.125, 0.15, 0.01, 0.01)
    }

    /// Varying α with β_A > β_I.
    pub fn fig5_base() -> ModelParams {
        p(0.9, 0.5, 0.15, 0.125, 0.15, 0.01, 0.01)
    }

    /// Varying α with β_A < β_I.
    pub fn fig6_base() -> ModelParams {
        p(0.5, 0.9, 0.15, 0.125, 0.15, 0.01, 0.01)
    }

    pub const ALPHA_FAMILY: [f64; 5] = [0.01, 0.1, 0.3, 0.6, 0.9];

    /// Varying vaccination rate ν, inside the certified region β_A < δ_I.
    pub fn fig7_base() -> ModelParams {
        p(0.5, 0.9, 0.9, 0.1, 0.51, 1.0 / 50.0, 0.01)
    }

    /// All endemic (R0 > 1) for the fig7 base rates.
    pub const FIG7_NUS: [f64; 4] = [0.0, 0.005, 0.01, 0.015];
}

/// Random draws shared by the probe, the verification suite and the tests.
pub mod sampling {
    use super::*;

    pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
        let u: f64 = rng.random();
        (lo.ln() + u * (hi.ln() - lo.ln())).exp()
    }

    /// Seven rates log-uniform in `[lo, hi]`, μ fixed.
    pub fn random_params<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64, mu: f64) -> ModelParams {
        ModelParams {
            beta_a: log_uniform(rng, lo, hi),
            beta_i: log_uniform(rng, lo, hi),
            alpha: log_uniform(rng, lo, hi),
            delta_a: log_uniform(rng, lo, hi),
            delta_i: log_uniform(rng, lo, hi),
            gamma: log_uniform(rng, lo, hi),
            nu: log_uniform(rng, lo, hi),
            mu,
        }
    }

    /// Uniform point in the interior of the 4-simplex (flat Dirichlet).
    pub fn random_simplex_point<R: Rng + ?Sized>(rng: &mut R) -> StateFull {
        let e: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
        let total: f64 = e.iter().sum();
        StateFull::from_array(e.map(|v| v / total))
    }

    /// Independent, reproducible stream for work item `index` of a seeded job.
    pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub rate: Rate,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(rate: Rate, min: f64, max: f64, n: usize) -> Self {
        Self { rate, min, max, n }
    }

    /// Evenly spaced grid values; a single point sits at `min`.
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.n - 1) as f64;
        (0..self.n)
            .map(|k| {
                if k == self.n - 1 {
                    self.max
                } else {
                    self.min + k as f64 * step
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput(format!(
                "axis {} has no points",
                self.rate
            )));
        }
        if !(self.min.is_finite()
            && self.max.is_finite()
            && self.min >= 0.0
            && self.max >= self.min)
        {
            return Err(Error::InvalidInput(format!(
                "axis {} range [{}, {}] is invalid",
                self.rate, self.min, self.max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepQuantity {
    /// Closed-form asymptotic states, cross-checked by integration on a subsample.
    AsymptoticState,
    R0,
    Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ModelParams,
    pub axis1: Axis,
    pub axis2: Axis,
    pub quantity: SweepQuantity,
    pub boundary_tol: f64,
    /// Cells per axis integrated to cross-check the closed forms (0 disables).
    pub crosscheck_per_axis: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.axis1.validate()?;
        self.axis2.validate()?;
        if self.axis1.rate == self.axis2.rate {
            return Err(Error::InvalidInput(format!(
                "both sweep axes vary {}",
                self.axis1.rate
            )));
        }
        if self.boundary_tol.is_nan() || self.boundary_tol <= 0.0 {
            return Err(Error::InvalidInput("boundary_tol must be positive".into()));
        }
        Ok(())
    }

    fn params_at(&self, v1: f64, v2: f64) -> Result<ModelParams> {
        self.base
            .with(self.axis1.rate, v1)?
            .with(self.axis2.rate, v2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub index: (usize, usize),
    pub value1: f64,
    pub value2: f64,
    pub r0: f64,
    pub regime: Regime,
    /// Asymptotic `(S, A, I, R)`.
    pub state: StateFull,
    pub converged: bool,
}

/// Integration of one subsampled cell compared against its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub index: (usize, usize),
    pub simulated: StateFull,
    pub closed_form: StateFull,
    /// Max-norm distance between the two.
    pub discrepancy: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis1: Axis,
    pub axis2: Axis,
    pub values1: Vec<f64>,
    pub values2: Vec<f64>,
    /// Row-major: `cells[i * n2 + j]` holds `(values1[i], values2[j])`.
    pub cells: Vec<SweepCell>,
    pub crosschecks: Vec<CrossCheck>,
}

impl SweepResult {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell {
        &self.cells[i * self.values2.len() + j]
    }
}

fn subsample(n: usize, m: usize) -> Vec<usize> {
    if m == 0 || n == 0 {
        return Vec::new();
    }
    if m >= n {
        return (0..n).collect();
    }
    if m == 1 {
        return vec![0];
    }
    let mut idx: Vec<usize> = (0..m)
        .map(|k| ((k * (n - 1)) as f64 / (m - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

fn integrate_to_limit(
    p: &ModelParams,
    x0: &StateFull,
    cfg: &IntegrationConfig,
) -> Result<(StateFull, bool)> {
    let tr = integrate(p, x0, cfg)?;
    Ok((tr.final_state(), tr.converged))
}

/// Evaluates the sweep grid. Cells away from the threshold use closed forms; threshold
/// cells and the cross-check subsample are integrated from `x0`.
pub fn run_sweep(spec: &SweepSpec, cfg: &IntegrationConfig, x0: &StateFull) -> Result<SweepResult> {
    spec.validate()?;
    cfg.validate()?;
    let values1 = spec.axis1.values();
    let values2 = spec.axis2.values();
    let n2 = values2.len();
    let indices: Vec<(usize, usize)> = (0..values1.len())
        .flat_map(|i| (0..n2).map(move |j| (i, j)))
        .collect();

    let cells = indices
        .par_iter()
        .map(|&(i, j)| -> Result<SweepCell> {
            let p = spec.params_at(values1[i], values2[j])?;
            let report = model::equilibrium_report(&p, spec.boundary_tol)?;
            let (state, converged) = if report.regime == Regime::Threshold {
                // Non-convergence near the threshold is flagged, not fatal.
                integrate_to_limit(&p, x0, cfg).unwrap_or((report.asymptotic_state(), false))
            } else {
                (report.asymptotic_state(), true)
            };
            Ok(SweepCell {
                index: (i, j),
                value1: values1[i],
                value2: values2[j],
                r0: report.r0,
                regime: report.regime,
                state,
                converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let crosschecks = if spec.quantity == SweepQuantity::AsymptoticState {
        let rows = subsample(values1.len(), spec.crosscheck_per_axis);
        let cols = subsample(n2, spec.crosscheck_per_axis);
        let picks: Vec<(usize, usize)> = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
            .collect();
        picks
            .par_iter()
            .map(|&(i, j)| -> Result<CrossCheck> {
                let cell = &cells[i * n2 + j];
                let p = spec.params_at(cell.value1, cell.value2)?;
                let (simulated, converged) = match integrate(&p, x0, cfg) {
                    Ok(tr) => (tr.final_state(), tr.converged),
                    Err(Error::Stiffness { .. }) | Err(Error::InvarianceViolation { .. }) => {
                        (StateFull::from_array([f64::NAN; 4]), false)
                    }
                    Err(e) => return Err(e),
                };
                let discrepancy = simulated.distance(&cell.state);
                Ok(CrossCheck {
                    index: (i, j),
                    simulated,
                    closed_form: cell.state,
                    discrepancy: if discrepancy.is_nan() {
                        f64::INFINITY
                    } else {
                        discrepancy
                    },
                    converged,
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    Ok(SweepResult {
        axis1: spec.axis1,
        axis2: spec.axis2,
        values1,
        values2,
        cells,
        crosschecks,
    })
}

/// One simulated member of a one-parameter family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub value: f64,
    pub params: ModelParams,
    pub report: EquilibriumReport,
    pub trajectory: Trajectory,
}

/// Integrates one trajectory per value of `vary`, all from `x0`, attaching the closed-form
/// equilibria of each member.
pub fn run_family(
    base: &ModelParams,
    vary: Rate,
    values: &[f64],
    x0: &StateFull,
    cfg: &IntegrationConfig,
) -> Result<Vec<FamilyMember>> {
    values
        .par_iter()
        .map(|&value| {
            let params = base.with(vary, value)?;
            let report = model::equilibrium_report(&params, model::DEFAULT_BOUNDARY_TOL)?;
            let trajectory = integrate(&params, x0, cfg)?;
            Ok(FamilyMember {
                value,
                params,
                report,
                trajectory,
            })
        })
        .collect()
}

/// Componentwise minima of `(S, A, I)` over the trailing `tail_fraction` of the run.
pub fn measure_persistence(tr: &Trajectory, tail_fraction: f64) -> Result<[f64; 3]> {
    let m = tr.tail_minima(tail_fraction)?;
    Ok([m[0], m[1], m[2]])
}

/// Shrink factor applied to the measured persistence floor before use in the certificate.
pub const EPSILON_SHRINK: f64 = 0.9;

/// Persistence floor for the certificate: `0.9 × min(S, A, I)` over the second half of a
/// reference run from the default initial state.
pub fn measured_epsilon(p: &ModelParams, cfg: &IntegrationConfig) -> Result<(f64, Trajectory)> {
    let tr = integrate(p, &default_initial_state(), cfg)?;
    let floors = measure_persistence(&tr, 0.5)?;
    let eps = floors.iter().copied().fold(f64::INFINITY, f64::min) * EPSILON_SHRINK;
    Ok((eps, tr))
}

/// Certificate evaluated with a measured persistence floor and the default `c`.
pub fn certificate_with_measured_epsilon(
    p: &ModelParams,
    cfg: &IntegrationConfig,
) -> Result<(GeometricCertificate, Trajectory)> {
    let (eps, tr) = measured_epsilon(p, cfg)?;
    Ok((stability::geometric_certificate(p, eps, None)?, tr))
}

/// Which side of `β_A < δ_I` the probe samples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeRegion {
    /// `β_A ≥ δ_I`: not covered by the compound-matrix certificate.
    Uncertified,
    /// `β_A < δ_I`.
    Certified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub region: ProbeRegion,
    /// Rates other than μ are log-uniform on `[rate_min, rate_max]`.
    pub rate_min: f64,
    pub rate_max: f64,
    pub mu: f64,
    /// Max-norm distance to the endemic equilibrium counted as convergence.
    pub tolerance: f64,
    /// Integration horizon as a multiple of the slowest local relaxation time `1/|Re λ|`.
    pub relaxation_multiple: f64,
    /// Cap on the per-sample horizon (days).
    pub max_horizon: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            region: ProbeRegion::Uncertified,
            rate_min: 1e-4,
            rate_max: 1.0,
            mu: MU_70_YEARS,
            tolerance: 1e-5,
            relaxation_multiple: 40.0,
            max_horizon: 1.0e9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub params: ModelParams,
    pub r0: f64,
    pub x0: StateFull,
    pub endemic: StateFull,
    pub final_state: StateFull,
    pub final_time: f64,
    pub distance: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub seed: u64,
    pub settings: ProbeSettings,
    pub samples: Vec<ProbeSample>,
    pub converged: usize,
    pub fraction: f64,
}

const MAX_PROBE_DRAWS: usize = 1_000_000;

fn draw_probe_params(rng: &mut ChaCha8Rng, s: &ProbeSettings) -> Result<ModelParams> {
    for _ in 0..MAX_PROBE_DRAWS {
        let p = sampling::random_params(rng, s.rate_min, s.rate_max, s.mu);
        let in_region = match s.region {
            ProbeRegion::Uncertified => p.beta_a >= p.delta_i,
            ProbeRegion::Certified => p.beta_a < p.delta_i,
        };
        if in_region && model::r0_closed_form(&p) > 1.0 {
            return Ok(p);
        }
    }
    Err(Error::InvalidInput(format!(
        "no endemic parameter set in the requested region after {MAX_PROBE_DRAWS} draws"
    )))
}

/// Upper bound on stored samples per probe trajectory; the output interval grows with the horizon.
const PROBE_SAMPLES_PER_RUN: f64 = 2000.0;

/// Draws `n_samples` endemic instances from the chosen region, integrates each from a
/// random interior state and reports how many end within `tolerance` of the closed-form
/// endemic equilibrium.
///
/// Each sample integrates for `relaxation_multiple / |max Re λ|` days, where `λ` ranges
/// over the Jacobian spectrum at the endemic equilibrium, capped at `max_horizon`. Only the
/// tolerances of `cfg` are used.
pub fn probe_conjecture(
    n_samples: usize,
    seed: u64,
    settings: &ProbeSettings,
    cfg: &IntegrationConfig,
) -> Result<ProbeReport> {
    if n_samples == 0 {
        return Err(Error::InvalidInput(
            "probe needs at least one sample".into(),
        ));
    }
    cfg.validate()?;
    if !(settings.tolerance > 0.0
        && settings.relaxation_multiple > 0.0
        && settings.max_horizon > 0.0)
        || !(settings.rate_min > 0.0 && settings.rate_max >= settings.rate_min)
    {
        return Err(Error::InvalidInput("invalid probe settings".into()));
    }
    let samples = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| -> Result<ProbeSample> {
            let mut rng = sampling::stream_rng(seed, k);
            let params = draw_probe_params(&mut rng, settings)?;
            let x0 = sampling::random_simplex_point(&mut rng);
            let endemic = model::endemic_equilibrium(&params)?
                .expect("drawn with R0 > 1")
                .extend();
            let decay = -stability::ee_spectrum(&params)?.max_real_part;
            let horizon = if decay > 0.0 {
                (settings.relaxation_multiple / decay).clamp(cfg.sample_dt, settings.max_horizon)
            } else {
                settings.max_horizon
            };
            let run_cfg = IntegrationConfig {
                t_max: horizon,
                sample_dt: cfg
                    .sample_dt
                    .max(horizon / PROBE_SAMPLES_PER_RUN)
                    .min(horizon),
                // Near the threshold the residual drops below any steady tolerance long
                // before the state is within `tolerance` of the equilibrium.
                stop_when_steady: false,
                ..*cfg
            };
            let (final_state, final_time) = match integrate(&params, &x0, &run_cfg) {
                Ok(tr) => (tr.final_state(), tr.final_time()),
                Err(Error::Stiffness { t, .. }) => (StateFull::from_array([f64::NAN; 4]), t),
                Err(e) => return Err(e),
            };
            let distance = final_state.distance(&endemic);
            Ok(ProbeSample {
                params,
                r0: model::r0_closed_form(&params),
                x0,
                endemic,
                final_state,
                final_time,
                distance,
                converged: distance <= settings.tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let converged = samples.iter().filter(|s| s.converged).count();
    Ok(ProbeReport {
        seed,
        settings: *settings,
        fraction: converged as f64 / n_samples as f64,
        converged,
        samples,
    })
}
