//! Oracles written independently of the library: the epidemic system is restated from
//! its compartment flows and the threshold quantities are rebuilt from raw matrices.

#![allow(dead_code)]

use rand::Rng;
use sairs_core::experiments::sampling;
use sairs_core::{ModelParams, StateFull, MU_70_YEARS};

pub type Rng8 = rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    sampling::stream_rng(seed, 0)
}

pub fn draw(rng: &mut Rng8) -> ModelParams {
    sampling::random_params(rng, 0.01, 1.0, MU_70_YEARS)
}

pub fn draw_where(rng: &mut Rng8, pred: impl Fn(&ModelParams) -> bool) -> ModelParams {
    loop {
        let p = draw(rng);
        if pred(&p) {
            return p;
        }
    }
}

pub fn simplex_point(rng: &mut Rng8) -> StateFull {
    sampling::random_simplex_point(rng)
}

pub fn uniform(rng: &mut Rng8) -> f64 {
    rng.random()
}

/// Flow-by-flow right-hand side: infection, progression, recovery, vaccination, waning,
/// birth and death.
pub fn flows_rhs(p: &ModelParams, x: [f64; 4]) -> [f64; 4] {
    let [s, a, i, r] = x;
    let infection = (p.beta_a * a + p.beta_i * i) * s;
    let progression = p.alpha * a;
    let rec_a = p.delta_a * a;
    let rec_i = p.delta_i * i;
    let vaccination = p.nu * s;
    let waning = p.gamma * r;
    [
        p.mu * 1.0 - infection - vaccination + waning - p.mu * s,
        infection - progression - rec_a - p.mu * a,
        progression - rec_i - p.mu * i,
        rec_a + rec_i + vaccination - waning - p.mu * r,
    ]
}

/// Spectral radius of `F V⁻¹` with `V⁻¹` from the adjugate and the eigenvalues of the 2×2
/// product from its characteristic polynomial.
pub fn r0_from_matrices(p: &ModelParams) -> f64 {
    let s0 = (p.gamma + p.mu) / (p.gamma + p.mu + p.nu);
    let f = [[p.beta_a * s0, p.beta_i * s0], [0.0, 0.0]];
    let v = [
        [p.alpha + p.delta_a + p.mu, 0.0],
        [-p.alpha, p.delta_i + p.mu],
    ];
    let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
    let vinv = [
        [v[1][1] / det, -v[0][1] / det],
        [-v[1][0] / det, v[0][0] / det],
    ];
    let mut k = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            k[r][c] = f[r][0] * vinv[0][c] + f[r][1] * vinv[1][c];
        }
    }
    let tr = k[0][0] + k[1][1];
    let dt = k[0][0] * k[1][1] - k[0][1] * k[1][0];
    let disc = tr * tr / 4.0 - dt;
    if disc >= 0.0 {
        (tr / 2.0 + disc.sqrt())
            .abs()
            .max((tr / 2.0 - disc.sqrt()).abs())
    } else {
        dt.abs().sqrt()
    }
}

/// The third additive compound of the linear part `Φ`, written out entry by entry in terms
/// of the rates and state (rows φ₁ … φ₄).
pub fn phi3_closed_form(p: &ModelParams, x: &StateFull) -> [[f64; 4]; 4] {
    let (s, a, i) = (x.s, x.a, x.i);
    let force = p.beta_a * a + p.beta_i * i;
    [
        [
            -(force + p.nu) + p.beta_a * s - (p.delta_a + p.alpha) - p.delta_i,
            0.0,
            0.0,
            p.gamma,
        ],
        [
            p.delta_i,
            -(force + p.nu) + p.beta_a * s - (p.delta_a + p.alpha) - p.gamma,
            p.beta_i * s,
            p.beta_i * s,
        ],
        [
            -p.delta_a,
            p.alpha,
            -(force + p.nu) - p.delta_i - p.gamma,
            -p.beta_a * s,
        ],
        [
            p.nu,
            0.0,
            force,
            p.beta_a * s - (p.delta_a + p.alpha + p.delta_i + p.gamma),
        ],
    ]
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
