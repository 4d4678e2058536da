//! Numerical laboratory for SAIRS epidemic models with vaccination.
//!
//! The crate computes the basic reproduction number and both equilibria in closed form,
//! classifies their local stability, evaluates Lyapunov functions and the compound-matrix
//! certificate for the endemic equilibrium, integrates the dynamics with an adaptive
//! Dormand–Prince pair, and runs the parameter studies used to check all of the above.
//!
//! ```
//! use sairs_core::{ModelParams, model};
//!
//! let p = ModelParams::new(0.5, 0.9, 0.9, 0.1, 0.51, 0.02, 0.01, 1.0 / 25550.0).unwrap();
//! assert!(model::r0_closed_form(&p) > 1.0);
//! let ee = model::endemic_equilibrium(&p).unwrap().unwrap();
//! assert!((ee.a / ee.i - (p.delta_i + p.mu) / p.alpha).abs() < 1e-12);
//! ```

pub mod error;
pub mod experiments;
pub mod integrator;
pub mod linalg;
pub mod model;
pub mod params;
pub mod stability;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
pub use integrator::{integrate, IntegrationConfig, Trajectory};
pub use model::{EquilibriumReport, HConstants, NextGenPair, Regime};
pub use params::{ModelParams, Rate, MU_70_YEARS};
pub use stability::{GeometricCertificate, LyapunovSample, SpectrumReport};
pub use state::{StateFull, StateReduced};
