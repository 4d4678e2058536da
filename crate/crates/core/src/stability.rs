//! Spectral stability of the equilibria, Lyapunov functions for the endemic and
//! disease-free equilibria, and the compound-matrix certificate for the endemic one.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{self, field_reduced};
use crate::params::ModelParams;
use crate::state::StateReduced;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<(f64, f64)>,
    pub max_real_part: f64,
    /// `max_real_part < 0`.
    pub stable: bool,
}

impl SpectrumReport {
    pub fn from_eigenvalues(ev: &[Complex64]) -> Self {
        let max_real_part = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        Self {
            eigenvalues: ev.iter().map(|z| (z.re, z.im)).collect(),
            max_real_part,
            stable: max_real_part < 0.0,
        }
    }

    pub fn complex(&self) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .map(|&(re, im)| Complex64::new(re, im))
            .collect()
    }
}

fn spectrum_of(m: DMatrix<f64>) -> Result<SpectrumReport> {
    Ok(SpectrumReport::from_eigenvalues(&linalg::eigenvalues(&m)?))
}

/// Spectrum of the reduced Jacobian at the disease-free equilibrium.
pub fn dfe_spectrum(p: &ModelParams) -> Result<SpectrumReport> {
    let j = model::jacobian_reduced(p, &model::dfe(p))?;
    spectrum_of(DMatrix::from_column_slice(3, 3, j.as_slice()))
}

/// Spectrum of the reduced Jacobian at the endemic equilibrium.
pub fn ee_spectrum(p: &ModelParams) -> Result<SpectrumReport> {
    let ee = model::endemic_equilibrium(p)?.ok_or(Error::NoEndemicEquilibrium {
        r0: model::r0_closed_form(p),
    })?;
    let j = model::jacobian_reduced(p, &ee)?;
    spectrum_of(DMatrix::from_column_slice(3, 3, j.as_slice()))
}

/// Closed-form eigenvalues of `F - V`, the infected block of the Jacobian at the DFE.
pub fn f_minus_v_eigenvalues(p: &ModelParams) -> [Complex64; 2] {
    linalg::eig2(&model::next_gen_pair(p).f_minus_v())
}

/// Value of a Lyapunov function at a point together with its derivative along the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSample {
    pub value: f64,
    /// `∇V · f(x)`.
    pub derivative: f64,
    pub location: StateReduced,
}

/// `g(x) = x - 1 - ln x`, nonnegative with its only zero at `x = 1`.
#[inline]
fn g(x: f64) -> f64 {
    x - 1.0 - x.ln()
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn require_endemic(p: &ModelParams) -> Result<StateReduced> {
    model::endemic_equilibrium(p)?.ok_or(Error::NoEndemicEquilibrium {
        r0: model::r0_closed_form(p),
    })
}

/// Weight shared by the S and A terms of the Volterra-type function for γ = 0.
pub fn sair_weight(p: &ModelParams, ee: &StateReduced) -> f64 {
    p.alpha * ee.a / (p.beta_i * ee.i * ee.s)
}

/// Volterra-type Lyapunov function for permanent immunity (γ = 0):
/// `c S* g(S/S*) + c A* g(A/A*) + I* g(I/I*)` with `c = α A* / (β_I I* S*)`.
pub fn lyapunov_sair(p: &ModelParams, x: &StateReduced) -> Result<LyapunovSample> {
    p.validate()?;
    if p.gamma != 0.0 {
        return Err(Error::WrongModel(format!(
            "requires gamma = 0 (permanent immunity), got {}",
            p.gamma
        )));
    }
    if p.beta_i == 0.0 {
        return Err(Error::DegenerateParameter(
            "beta_i = 0 makes the weight alpha A*/(beta_i I* S*) unbounded".into(),
        ));
    }
    if !x.is_finite() || x.s <= 0.0 || x.a <= 0.0 || x.i <= 0.0 {
        return Err(Error::Domain(format!(
            "S, A and I must be strictly positive, got {x:?}"
        )));
    }
    let ee = require_endemic(p)?;
    let c = sair_weight(p, &ee);
    let value = c * ee.s * g(x.s / ee.s) + c * ee.a * g(x.a / ee.a) + ee.i * g(x.i / ee.i);
    let grad = [
        c * (1.0 - ee.s / x.s),
        c * (1.0 - ee.a / x.a),
        1.0 - ee.i / x.i,
    ];
    Ok(LyapunovSample {
        value,
        derivative: dot3(grad, field_reduced(p, &x.to_array())),
        location: *x,
    })
}

/// Weight `w = (β S* + γ) / β` of the logarithmic term for equal rates.
pub fn equal_rates_weight(p: &ModelParams, s_star: f64) -> f64 {
    (p.beta_a * s_star + p.gamma) / p.beta_a
}

/// Quadratic-plus-logarithmic function in `(S, M = A + I)` for `β_A = β_I`, `δ_A = δ_I`:
/// `½ (S - S*)² + w (M - M* - M* ln(M/M*))`.
pub fn lyapunov_sairs_equal(p: &ModelParams, x: &StateReduced) -> Result<LyapunovSample> {
    p.validate()?;
    if p.beta_a != p.beta_i || p.delta_a != p.delta_i {
        return Err(Error::WrongModel(format!(
            "requires beta_a = beta_i and delta_a = delta_i, got ({}, {}) and ({}, {})",
            p.beta_a, p.beta_i, p.delta_a, p.delta_i
        )));
    }
    let m = x.a + x.i;
    if !x.is_finite() || m <= 0.0 {
        return Err(Error::Domain(format!("A + I must be positive, got {x:?}")));
    }
    let ee = require_endemic(p)?;
    let m_star = ee.a + ee.i;
    let w = equal_rates_weight(p, ee.s);
    let ds = x.s - ee.s;
    let value = 0.5 * ds * ds + w * (m - m_star - m_star * (m / m_star).ln());
    let f = field_reduced(p, &x.to_array());
    let derivative = ds * f[0] + w * (1.0 - m_star / m) * (f[1] + f[2]);
    Ok(LyapunovSample {
        value,
        derivative,
        location: *x,
    })
}

/// Ingredients of the linear Lyapunov function `V(A, I) = w C⁻¹ (A, I)ᵀ` used without vaccination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NovaxLyapunov {
    /// Left Perron eigenvector of `M(S0)`, normalized to unit sum.
    pub w: [f64; 2],
    pub c_mat: Matrix2<f64>,
    pub c_inv: Matrix2<f64>,
    /// `M(S0)` with `S0 = 1`.
    pub m_s0: Matrix2<f64>,
    pub spectral_radius: f64,
}

/// `M(S)` such that `d(A, I)/dt = C (M(S) - I) (A, I)ᵀ`.
pub fn novax_m_matrix(p: &ModelParams, s: f64) -> Matrix2<f64> {
    let h1 = p.alpha + p.delta_a + p.mu;
    let h2 = p.delta_i + p.mu;
    Matrix2::new(
        p.beta_a * s / h1,
        p.beta_i * s / h1,
        p.alpha * p.beta_a * s / (h2 * h1),
        p.alpha * p.beta_i * s / (h2 * h1),
    )
}

/// Left eigenvector for the largest real eigenvalue of a nonnegative 2×2 matrix.
fn left_perron(m: &Matrix2<f64>) -> ([f64; 2], f64) {
    let [l1, l2] = linalg::eig2(m);
    let rho = l1.re.max(l2.re);
    // Rows of (Mᵀ - ρ I) are orthogonal to w; either one yields it.
    let c1 = [m[(1, 0)], rho - m[(0, 0)]];
    let c2 = [rho - m[(1, 1)], m[(0, 1)]];
    let n1 = c1[0].abs() + c1[1].abs();
    let n2 = c2[0].abs() + c2[1].abs();
    let (v, n) = if n1 >= n2 { (c1, n1) } else { (c2, n2) };
    if n == 0.0 {
        return ([0.5, 0.5], rho);
    }
    let sum = v[0] + v[1];
    ([v[0] / sum, v[1] / sum], rho)
}

pub fn novax_lyapunov(p: &ModelParams) -> Result<NovaxLyapunov> {
    p.validate()?;
    if p.nu != 0.0 {
        return Err(Error::WrongModel(format!(
            "requires nu = 0 (no vaccination), got {}",
            p.nu
        )));
    }
    let h1 = p.alpha + p.delta_a + p.mu;
    let h2 = p.delta_i + p.mu;
    let c_mat = Matrix2::new(h1, 0.0, -p.alpha, h2);
    let c_inv = Matrix2::new(1.0 / h1, 0.0, p.alpha / (h1 * h2), 1.0 / h2);
    let m_s0 = novax_m_matrix(p, 1.0);
    let (w, spectral_radius) = left_perron(&m_s0);
    Ok(NovaxLyapunov {
        w,
        c_mat,
        c_inv,
        m_s0,
        spectral_radius,
    })
}

/// `V(A, I) = w C⁻¹ (A, I)ᵀ` for ν = 0; the derivative uses the current `S` of `x`.
pub fn lyapunov_dfe_novax(p: &ModelParams, x: &StateReduced) -> Result<LyapunovSample> {
    let lf = novax_lyapunov(p)?;
    if !x.is_finite() || x.a < 0.0 || x.i < 0.0 {
        return Err(Error::Domain(format!(
            "A and I must be nonnegative, got {x:?}"
        )));
    }
    let row = [
        lf.w[0] * lf.c_inv[(0, 0)] + lf.w[1] * lf.c_inv[(1, 0)],
        lf.w[0] * lf.c_inv[(0, 1)] + lf.w[1] * lf.c_inv[(1, 1)],
    ];
    let f = field_reduced(p, &x.to_array());
    Ok(LyapunovSample {
        value: row[0] * x.a + row[1] * x.i,
        derivative: row[0] * f[1] + row[1] * f[2],
        location: *x,
    })
}

/// Third additive compound of a 4×4 matrix; its spectrum is every triple-sum of the input's.
pub fn third_additive_compound(m: &Matrix4<f64>) -> Matrix4<f64> {
    let d = DMatrix::from_column_slice(4, 4, m.as_slice());
    let c = linalg::additive_compound(&d, 3).expect("order 3 is valid for 4x4");
    Matrix4::from_column_slice(c.as_slice())
}

/// Outcome of the compound-matrix (Bendixson-type) certificate for the endemic equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricCertificate {
    /// `β_A < δ_I` (R0 > 1 is a precondition).
    pub applicable: bool,
    /// Scaling constant of `P = diag(R, cI, A, S)`; `None` when the admissible interval is empty.
    pub c: Option<f64>,
    /// Open interval of admissible `c`.
    pub c_interval: (f64, f64),
    pub epsilon: f64,
    /// Long-run averages bounding the four row measures; `None` when no `c` is admissible.
    pub h_bars: Option<[f64; 4]>,
    /// All four averages negative.
    pub certified: bool,
}

pub fn admissible_c_interval(p: &ModelParams, epsilon: f64) -> (f64, f64) {
    let h2 = p.delta_i + p.mu;
    (h2 / (p.beta_i * epsilon + p.nu + h2), 1.0)
}

pub fn h_bars(p: &ModelParams, epsilon: f64, c: f64) -> [f64; 4] {
    [
        p.beta_a - p.delta_a - p.alpha - p.delta_i,
        -epsilon * p.beta_a - p.nu - p.gamma - p.mu + c * (p.gamma + p.mu),
        -epsilon * p.beta_i - p.nu - p.delta_i - p.mu + (p.delta_i + p.mu) / c,
        -p.delta_i + p.beta_a,
    ]
}

/// Evaluates the certificate with persistence floor `epsilon`; `c` defaults to the
/// midpoint of the admissible interval.
pub fn geometric_certificate(
    p: &ModelParams,
    epsilon: f64,
    c: Option<f64>,
) -> Result<GeometricCertificate> {
    p.validate()?;
    let r0 = model::r0_closed_form(p);
    if r0 <= 1.0 {
        return Err(Error::NoEndemicEquilibrium { r0 });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!(
            "persistence floor must lie in (0, 1), got {epsilon}"
        )));
    }
    let applicable = p.beta_a < p.delta_i;
    let (lower, upper) = admissible_c_interval(p, epsilon);
    if lower >= upper {
        return Ok(GeometricCertificate {
            applicable,
            c: None,
            c_interval: (lower, upper),
            epsilon,
            h_bars: None,
            certified: false,
        });
    }
    let c = match c {
        Some(c) if !(c > lower && c < upper) => {
            return Err(Error::InvalidCertificateParameter { c, lower, upper })
        }
        Some(c) => c,
        None => 0.5 * (lower + upper),
    };
    let hb = h_bars(p, epsilon, c);
    Ok(GeometricCertificate {
        applicable,
        c: Some(c),
        c_interval: (lower, upper),
        epsilon,
        h_bars: Some(hb),
        certified: applicable && hb.iter().all(|&h| h < 0.0),
    })
}
