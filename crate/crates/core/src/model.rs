//! Vector fields, Jacobians, the next-generation construction and closed-form equilibria.

use std::fmt;

use nalgebra::{Matrix2, Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::state::{StateFull, StateReduced};

/// Default half-width of the band around R0 = 1 classified as [`Regime::Threshold`].
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-9;

/// Right-hand side of the four-compartment system, without input checks.
#[inline]
pub fn field_full(p: &ModelParams, x: &[f64; 4]) -> [f64; 4] {
    let [s, a, i, r] = *x;
    let force = p.beta_a * a + p.beta_i * i;
    [
        p.mu - force * s - (p.mu + p.nu) * s + p.gamma * r,
        force * s - (p.alpha + p.delta_a + p.mu) * a,
        p.alpha * a - (p.delta_i + p.mu) * i,
        p.delta_a * a + p.delta_i * i + p.nu * s - (p.gamma + p.mu) * r,
    ]
}

/// Right-hand side of the reduced system obtained by eliminating `r = 1 - s - a - i`.
#[inline]
pub fn field_reduced(p: &ModelParams, x: &[f64; 3]) -> [f64; 3] {
    let [s, a, i] = *x;
    let force = p.beta_a * a + p.beta_i * i;
    [
        p.mu - force * s - (p.mu + p.nu + p.gamma) * s + p.gamma * (1.0 - a - i),
        force * s - (p.alpha + p.delta_a + p.mu) * a,
        p.alpha * a - (p.delta_i + p.mu) * i,
    ]
}

fn check_finite(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("non-finite {what}")))
    }
}

/// `(dS/dt, dA/dt, dI/dt, dR/dt)` in 1/day.
pub fn rhs_full(p: &ModelParams, x: &StateFull) -> Result<[f64; 4]> {
    p.validate()?;
    check_finite(x.is_finite(), "state")?;
    Ok(field_full(p, &x.to_array()))
}

/// `(dS/dt, dA/dt, dI/dt)` of the reduced system in 1/day.
pub fn rhs_reduced(p: &ModelParams, x: &StateReduced) -> Result<[f64; 3]> {
    p.validate()?;
    check_finite(x.is_finite(), "state")?;
    Ok(field_reduced(p, &x.to_array()))
}

pub fn jacobian_reduced(p: &ModelParams, x: &StateReduced) -> Result<Matrix3<f64>> {
    p.validate()?;
    check_finite(x.is_finite(), "state")?;
    let StateReduced { s, a, i } = *x;
    let force = p.beta_a * a + p.beta_i * i;
    let h0 = p.mu + p.nu + p.gamma;
    let h1 = p.alpha + p.delta_a + p.mu;
    let h2 = p.delta_i + p.mu;
    Ok(Matrix3::new(
        -force - h0,
        -p.beta_a * s - p.gamma,
        -p.beta_i * s - p.gamma,
        force,
        p.beta_a * s - h1,
        p.beta_i * s,
        0.0,
        p.alpha,
        -h2,
    ))
}

/// The matrix `Φ` with `J = -μ I + Φ` for the four-compartment Jacobian.
pub fn phi_matrix(p: &ModelParams, x: &StateFull) -> Matrix4<f64> {
    let StateFull { s, a, i, .. } = *x;
    let force = p.beta_a * a + p.beta_i * i;
    Matrix4::new(
        -(force + p.nu),
        -p.beta_a * s,
        -p.beta_i * s,
        p.gamma,
        force,
        p.beta_a * s - (p.delta_a + p.alpha),
        p.beta_i * s,
        0.0,
        0.0,
        p.alpha,
        -p.delta_i,
        0.0,
        p.nu,
        p.delta_a,
        p.delta_i,
        -p.gamma,
    )
}

pub fn jacobian_full(p: &ModelParams, x: &StateFull) -> Result<Matrix4<f64>> {
    p.validate()?;
    check_finite(x.is_finite(), "state")?;
    Ok(phi_matrix(p, x) - Matrix4::identity() * p.mu)
}

/// Linearizations at the disease-free equilibrium, restricted to the (A, I) compartments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NextGenPair {
    /// New-infection inflow.
    pub f_mat: Matrix2<f64>,
    /// Transitions out of and between the infected compartments.
    pub v_mat: Matrix2<f64>,
}

impl NextGenPair {
    /// `F V⁻¹`, using the explicit inverse of the lower-triangular `V`.
    pub fn next_generation_matrix(&self) -> Matrix2<f64> {
        let v = &self.v_mat;
        let v_inv = Matrix2::new(
            1.0 / v[(0, 0)],
            0.0,
            -v[(1, 0)] / (v[(0, 0)] * v[(1, 1)]),
            1.0 / v[(1, 1)],
        );
        self.f_mat * v_inv
    }

    pub fn f_minus_v(&self) -> Matrix2<f64> {
        self.f_mat - self.v_mat
    }
}

/// Susceptible fraction at the disease-free equilibrium.
#[inline]
pub fn susceptible_at_dfe(p: &ModelParams) -> f64 {
    (p.gamma + p.mu) / (p.gamma + p.mu + p.nu)
}

pub fn next_gen_pair(p: &ModelParams) -> NextGenPair {
    let s0 = susceptible_at_dfe(p);
    NextGenPair {
        f_mat: Matrix2::new(p.beta_a * s0, p.beta_i * s0, 0.0, 0.0),
        v_mat: Matrix2::new(p.alpha + p.delta_a + p.mu, 0.0, -p.alpha, p.delta_i + p.mu),
    }
}

pub fn r0_closed_form(p: &ModelParams) -> f64 {
    (p.beta_a + p.alpha * p.beta_i / (p.delta_i + p.mu)) * (p.gamma + p.mu)
        / ((p.alpha + p.delta_a + p.mu) * (p.nu + p.gamma + p.mu))
}

/// Reparameterization used by the endemic closed forms and the Jacobian at the endemic point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HConstants {
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
}

pub fn h_constants(p: &ModelParams) -> HConstants {
    let h0 = p.mu + p.nu + p.gamma;
    let h1 = p.alpha + p.delta_a + p.mu;
    let h2 = p.delta_i + p.mu;
    HConstants {
        h0,
        h1,
        h2,
        h3: p.gamma * p.alpha + (h1 + p.gamma) * h2,
        h4: (p.gamma + p.mu) / h0,
    }
}

pub fn dfe(p: &ModelParams) -> StateReduced {
    StateReduced::new(susceptible_at_dfe(p), 0.0, 0.0)
}

/// The unique interior equilibrium, present exactly when R0 > 1.
///
/// `S*` is evaluated from rates that contain neither γ nor ν, so it is bitwise
/// identical across γ and ν families. `I*` carries the factor `R0 - 1` explicitly.
pub fn endemic_equilibrium(p: &ModelParams) -> Result<Option<StateReduced>> {
    p.validate()?;
    let r0 = r0_closed_form(p);
    if r0 <= 1.0 {
        return Ok(None);
    }
    if p.alpha == 0.0 {
        return Err(Error::DegenerateParameter(
            "alpha = 0: the A*/I* relation divides by the symptom-onset rate".into(),
        ));
    }
    let h = h_constants(p);
    let weighted_beta = p.beta_a * h.h2 + p.beta_i * p.alpha;
    let s = h.h1 * h.h2 / weighted_beta;
    let i = p.alpha * h.h0 * h.h1 * h.h2 * (r0 - 1.0) / (h.h3 * weighted_beta);
    let a = h.h2 / p.alpha * i;
    Ok(Some(StateReduced::new(s, a, i)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    DiseaseFree,
    Threshold,
    Endemic,
}

impl Regime {
    pub fn from_r0(r0: f64, boundary_tol: f64) -> Self {
        if r0 < 1.0 - boundary_tol {
            Regime::DiseaseFree
        } else if r0 > 1.0 + boundary_tol {
            Regime::Endemic
        } else {
            Regime::Threshold
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::DiseaseFree => "DiseaseFree",
            Regime::Threshold => "Threshold",
            Regime::Endemic => "Endemic",
        })
    }
}

pub fn classify_regime(p: &ModelParams, boundary_tol: f64) -> Result<Regime> {
    if boundary_tol.is_nan() || boundary_tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "boundary_tol must be positive, got {boundary_tol}"
        )));
    }
    Ok(Regime::from_r0(r0_closed_form(p), boundary_tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub r0: f64,
    pub dfe: StateReduced,
    pub endemic: Option<StateReduced>,
    pub regime: Regime,
    pub h_constants: HConstants,
}

pub fn equilibrium_report(p: &ModelParams, boundary_tol: f64) -> Result<EquilibriumReport> {
    p.validate()?;
    Ok(EquilibriumReport {
        r0: r0_closed_form(p),
        dfe: dfe(p),
        endemic: endemic_equilibrium(p)?,
        regime: classify_regime(p, boundary_tol)?,
        h_constants: h_constants(p),
    })
}

impl EquilibriumReport {
    /// The state the dynamics settle on according to the closed forms.
    pub fn asymptotic_state(&self) -> StateFull {
        self.endemic.unwrap_or(self.dfe).extend()
    }
}

pub(crate) fn max_abs<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Rate, MU_70_YEARS};
    use approx::assert_relative_eq;

    fn fig7() -> ModelParams {
        ModelParams::new(0.5, 0.9, 0.9, 0.1, 0.51, 1.0 / 50.0, 0.01, MU_70_YEARS).unwrap()
    }

    fn fig2_corner() -> ModelParams {
        ModelParams::new(0.8, 0.95, 0.15, 0.1, 0.15, 0.01, 0.01, MU_70_YEARS).unwrap()
    }

    #[test]
    fn full_rhs_vanishes_at_extended_dfe() {
        let p = fig7();
        let x = dfe(&p).extend();
        let f = rhs_full(&p, &x).unwrap();
        assert!(max_abs(&f) < 1e-15, "{f:?}");
    }

    #[test]
    fn closed_population_without_disease_is_fixed() {
        let p = ModelParams::new(0.3, 0.2, 0.1, 0.1, 0.1, 0.0, 0.0, 0.01).unwrap();
        let f = rhs_full(&p, &StateFull::new(1.0, 0.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(f, [0.0; 4]);
    }

    #[test]
    fn rhs_rejects_non_finite_state() {
        let p = fig7();
        let x = StateFull::from_array([f64::NAN, 0.0, 0.0, 1.0]);
        assert!(matches!(rhs_full(&p, &x), Err(Error::InvalidInput(_))));
        let y = StateReduced::new(0.5, f64::INFINITY, 0.0);
        assert!(rhs_reduced(&p, &y).is_err());
        assert!(jacobian_reduced(&p, &y).is_err());
    }

    #[test]
    fn reduced_rhs_vanishes_at_dfe_and_ee() {
        let p = fig7();
        assert!(max_abs(&rhs_reduced(&p, &dfe(&p)).unwrap()) <= 1e-14);
        let ee = endemic_equilibrium(&p).unwrap().unwrap();
        assert!(max_abs(&rhs_reduced(&p, &ee).unwrap()) <= 1e-10);
        for c in ee.to_array() {
            assert!(c > 0.0 && c < 1.0);
        }
    }

    #[test]
    fn jacobian_reduced_at_dfe_last_row() {
        let p = fig7();
        let j = jacobian_reduced(&p, &dfe(&p)).unwrap();
        assert_eq!(j[(2, 1)], p.alpha);
        assert_eq!(j[(2, 2)], -(p.delta_i + p.mu));
        assert_eq!(j[(2, 0)], 0.0);
    }

    #[test]
    fn jacobian_reduced_at_ee_matches_h_form() {
        let p = fig7();
        let h = h_constants(&p);
        let r0 = r0_closed_form(&p);
        let ee = endemic_equilibrium(&p).unwrap().unwrap();
        let j = jacobian_reduced(&p, &ee).unwrap();
        let force = h.h0 * h.h1 * h.h2 * (r0 - 1.0) / h.h3;
        assert_relative_eq!(j[(0, 0)], -force - h.h0, max_relative = 1e-12);
        assert_relative_eq!(j[(1, 0)], force, max_relative = 1e-12);
        assert_relative_eq!(
            j[(0, 1)],
            -p.beta_a * h.h4 / r0 - p.gamma,
            max_relative = 1e-12
        );
        assert_relative_eq!(j[(1, 1)], p.beta_a * h.h4 / r0 - h.h1, max_relative = 1e-12);
        assert_relative_eq!(j[(1, 2)], p.beta_i * h.h4 / r0, max_relative = 1e-12);
    }

    #[test]
    fn phi_entries_and_zero_infection_column() {
        let p = fig7();
        let x = StateFull::new(0.4, 0.0, 0.0, 0.6).unwrap();
        let phi = phi_matrix(&p, &x);
        assert_eq!(phi[(2, 1)], p.alpha);
        assert_eq!(phi[(3, 3)], -p.gamma);
        assert_eq!(phi[(1, 1)], p.beta_a * x.s - (p.delta_a + p.alpha));
        let j = jacobian_full(&p, &x).unwrap();
        assert_eq!(j[(0, 3)], p.gamma);
        assert_eq!(j[(3, 3)], -p.gamma - p.mu);
        // Columns of Φ sum to zero: each flow leaves one compartment and enters another.
        for c in 0..4 {
            assert!(phi.column(c).sum().abs() < 1e-15);
        }
    }

    #[test]
    fn next_gen_pair_structure() {
        let p = fig7();
        let ng = next_gen_pair(&p);
        assert_eq!(ng.f_mat[(1, 0)], 0.0);
        assert_eq!(ng.f_mat[(1, 1)], 0.0);
        assert_eq!(ng.v_mat[(0, 1)], 0.0);
        let det = ng.v_mat.determinant();
        assert_relative_eq!(
            det,
            (p.alpha + p.delta_a + p.mu) * (p.delta_i + p.mu),
            max_relative = 1e-14
        );
        let zero = next_gen_pair(&p.scale_transmission(0.0));
        assert_eq!(zero.f_mat, Matrix2::zeros());
        let k = ng.next_generation_matrix();
        let direct = ng.f_mat * ng.v_mat.try_inverse().unwrap();
        assert!((k - direct).abs().max() < 1e-14);
    }

    #[test]
    fn r0_special_cases() {
        let mut p = fig7();
        p.beta_i = p.beta_a;
        p.delta_a = 0.3;
        p.delta_i = 0.3;
        let expected = p.beta_a * (p.gamma + p.mu) / ((p.delta_i + p.mu) * (p.nu + p.gamma + p.mu));
        assert_relative_eq!(r0_closed_form(&p), expected, max_relative = 1e-14);

        assert_eq!(r0_closed_form(&p.scale_transmission(0.0)), 0.0);

        let q = fig7().with(Rate::Nu, 0.0).unwrap();
        let novax =
            (q.beta_a + q.alpha * q.beta_i / (q.delta_i + q.mu)) / (q.alpha + q.delta_a + q.mu);
        assert_relative_eq!(r0_closed_form(&q), novax, max_relative = 1e-14);
    }

    #[test]
    fn dfe_values() {
        let q = fig7().with(Rate::Nu, 0.0).unwrap();
        assert_eq!(dfe(&q), StateReduced::new(1.0, 0.0, 0.0));
        let mut p = fig7();
        p.nu = p.gamma + p.mu;
        assert_eq!(dfe(&p).s, 0.5);
    }

    #[test]
    fn no_endemic_equilibrium_below_threshold() {
        let p = fig7().scale_transmission(0.1);
        assert!(r0_closed_form(&p) < 1.0);
        assert_eq!(endemic_equilibrium(&p).unwrap(), None);
    }

    #[test]
    fn ratio_of_infected_compartments() {
        let p = fig7();
        let ee = endemic_equilibrium(&p).unwrap().unwrap();
        assert_relative_eq!(
            ee.a / ee.i,
            (p.delta_i + p.mu) / p.alpha,
            max_relative = 1e-14
        );
    }

    #[test]
    fn alpha_zero_above_threshold_is_degenerate() {
        let p = ModelParams::new(0.9, 0.5, 0.0, 0.1, 0.2, 0.02, 0.01, MU_70_YEARS).unwrap();
        assert!(r0_closed_form(&p) > 1.0);
        assert!(matches!(
            endemic_equilibrium(&p),
            Err(Error::DegenerateParameter(_))
        ));
    }

    #[test]
    fn regime_classification() {
        assert_eq!(Regime::from_r0(0.0, 1e-9), Regime::DiseaseFree);
        assert_eq!(Regime::from_r0(1.0, 1e-9), Regime::Threshold);
        assert_eq!(
            classify_regime(&fig2_corner(), 1e-9).unwrap(),
            Regime::Endemic
        );
        assert!(classify_regime(&fig2_corner(), 0.0).is_err());
    }

    #[test]
    fn h4_at_most_one() {
        let h = h_constants(&fig7());
        assert!(h.h4 <= 1.0);
        assert_eq!(h.h0, fig7().mu + fig7().nu + fig7().gamma);
    }

    #[test]
    fn report_consistency() {
        let rep = equilibrium_report(&fig7(), DEFAULT_BOUNDARY_TOL).unwrap();
        assert_eq!(rep.regime, Regime::Endemic);
        assert!(rep.endemic.is_some());
        assert!((rep.asymptotic_state().sum() - 1.0).abs() < 1e-15);
    }
}
