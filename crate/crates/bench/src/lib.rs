//! Fixtures shared by the benchmarks in `benches/`.

use sairs_core::experiments::{presets, Axis, SweepQuantity, SweepSpec};
use sairs_core::{IntegrationConfig, ModelParams, Rate};

/// fig3 member with γ = 0.05, integrated until steady.
pub fn fig3_endemic() -> (ModelParams, IntegrationConfig) {
    let p = presets::fig3_base()
        .with(Rate::Gamma, 0.05)
        .expect("valid rate");
    let cfg = IntegrationConfig {
        t_max: 20_000.0,
        ..Default::default()
    };
    (p, cfg)
}

/// The fig2 grid evaluated from closed forms only.
pub fn fig2_closed_form_sweep() -> SweepSpec {
    SweepSpec {
        quantity: SweepQuantity::R0,
        crosscheck_per_axis: 0,
        ..presets::fig2_sweep()
    }
}

/// A smaller grid with integration cross-checks on every cell.
pub fn small_crosschecked_sweep() -> SweepSpec {
    SweepSpec {
        axis1: Axis::new(Rate::BetaA, 0.2, 0.8, 4),
        axis2: Axis::new(Rate::BetaI, 0.2, 0.95, 4),
        crosscheck_per_axis: 4,
        ..presets::fig2_sweep()
    }
}
