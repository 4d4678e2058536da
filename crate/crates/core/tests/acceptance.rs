//! Acceptance gate: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p sairs-core --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use common::*;
use sairs_core::experiments::{self, presets, ProbeSettings};
use sairs_core::integrator::default_initial_state;
use sairs_core::{
    integrate, linalg, model, stability, IntegrationConfig, ModelParams, Rate, Regime, StateFull,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn r0_equivalence() -> Outcome {
    let mut rng = rng(101);
    let worst = (0..1000)
        .map(|_| {
            let p = draw(&mut rng);
            let (a, b) = (model::r0_closed_form(&p), r0_from_matrices(&p));
            (a - b).abs() / b
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-12, format!("max relative error {worst:.2e}"))
}

fn equilibrium_residuals() -> Outcome {
    let mut rng = rng(102);
    let (mut ee_worst, mut dfe_worst) = (0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let p = draw_where(&mut rng, |p| model::r0_closed_form(p) > 1.0);
        let ee = model::endemic_equilibrium(&p)
            .unwrap()
            .expect("endemic draw")
            .extend();
        ee_worst = ee_worst.max(max_abs(&flows_rhs(&p, ee.to_array())));
        let dfe = model::dfe(&p).extend();
        dfe_worst = dfe_worst.max(max_abs(&flows_rhs(&p, dfe.to_array())));
    }
    outcome(
        ee_worst <= 1e-10 && dfe_worst <= 1e-14,
        format!("endemic {ee_worst:.2e}, disease-free {dfe_worst:.2e}"),
    )
}

fn threshold_law() -> Outcome {
    let mut rng = rng(103);
    let mut mismatches = 0;
    let (mut below, mut above) = (0, 0);
    for _ in 0..1000 {
        let p = draw_where(&mut rng, |p| (r0_from_matrices(p) - 1.0).abs() > 1e-3);
        let r0 = r0_from_matrices(&p);
        let lead = stability::dfe_spectrum(&p).unwrap().max_real_part;
        if (lead > 0.0) != (r0 > 1.0) {
            mismatches += 1;
        }
        if r0 > 1.0 {
            above += 1
        } else {
            below += 1
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} sign mismatches ({below} below, {above} above threshold)"),
    )
}

/// Horizon long enough for `multiple` e-foldings of the slowest linear mode.
fn relaxation_horizon(lead: f64, multiple: f64) -> f64 {
    (multiple / -lead).clamp(100.0, 1e9)
}

fn global_dfe() -> Outcome {
    let mut rng = rng(104);
    let cases: Vec<(ModelParams, StateFull)> = (0..200)
        .map(|_| {
            let p = draw_where(&mut rng, |p| model::r0_closed_form(p) < 1.0);
            (p, simplex_point(&mut rng))
        })
        .collect();
    let distances: Vec<f64> = cases
        .par_iter()
        .map(|(p, x0)| {
            let lead = stability::dfe_spectrum(p).unwrap().max_real_part;
            let t_max = relaxation_horizon(lead, 40.0);
            let cfg = IntegrationConfig {
                t_max,
                sample_dt: t_max / 1000.0,
                stop_when_steady: false,
                ..Default::default()
            };
            let tr = integrate(p, x0, &cfg).unwrap();
            tr.final_state().distance(&model::dfe(p).extend())
        })
        .collect();
    let worst = distances.iter().copied().fold(0.0, f64::max);
    let ok = distances.iter().filter(|d| **d <= 1e-6).count();
    outcome(
        ok == 200,
        format!("{ok}/200 within 1e-6, max distance {worst:.2e}"),
    )
}

/// Samples `dV/dt` at random interior points and along integrated trajectories.
fn lyapunov_protocol(
    seed: u64,
    draw_params: impl Fn(&mut Rng8) -> ModelParams,
    v: impl Fn(&ModelParams, &StateFull) -> (f64, f64) + Sync,
) -> Outcome {
    let mut rng = rng(seed);
    let instances: Vec<(ModelParams, Vec<StateFull>)> = (0..50)
        .map(|_| {
            let p = draw_params(&mut rng);
            let pts = (0..10_000).map(|_| simplex_point(&mut rng)).collect();
            (p, pts)
        })
        .collect();
    let worst_derivative = instances
        .par_iter()
        .map(|(p, pts)| {
            pts.iter()
                .map(|x| v(p, x).1)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    let cfg = IntegrationConfig {
        t_max: 2000.0,
        sample_dt: 1.0,
        stop_when_steady: false,
        ..Default::default()
    };
    let worst_increase = instances[..20]
        .par_iter()
        .enumerate()
        .map(|(k, (p, pts))| {
            let tr = integrate(p, &pts[k], &cfg).unwrap();
            tr.states
                .windows(2)
                .map(|w| v(p, &w[1]).0 - v(p, &w[0]).0)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    outcome(
        worst_derivative <= 1e-12 && worst_increase <= 1e-10,
        format!("max dV/dt {worst_derivative:.2e} over 5e5 points, max step increase {worst_increase:.2e} over 20 runs"),
    )
}

fn sair_lyapunov() -> Outcome {
    lyapunov_protocol(
        105,
        |rng| loop {
            let p = ModelParams {
                gamma: 0.0,
                nu: sairs_core::MU_70_YEARS * uniform(rng),
                ..draw(rng)
            };
            if model::r0_closed_form(&p) > 1.0 {
                return p;
            }
        },
        |p, x| {
            let l = stability::lyapunov_sair(p, &x.reduce()).unwrap();
            (l.value, l.derivative)
        },
    )
}

fn equal_rates_lyapunov() -> Outcome {
    lyapunov_protocol(
        106,
        |rng| loop {
            let b = draw(rng);
            let p = ModelParams {
                beta_i: b.beta_a,
                delta_i: b.delta_a,
                ..b
            };
            if model::r0_closed_form(&p) > 1.0 {
                return p;
            }
        },
        |p, x| {
            let l = stability::lyapunov_sairs_equal(p, &x.reduce()).unwrap();
            (l.value, l.derivative)
        },
    )
}

fn compound_law() -> Outcome {
    let mut rng = rng(107);
    let mut spectrum_worst = 0.0_f64;
    for _ in 0..100 {
        let m = Matrix4::from_fn(|_, _| rng.random_range(-2.0..2.0));
        let ev = linalg::eigenvalues(&DMatrix::from_column_slice(4, 4, m.as_slice())).unwrap();
        let mut sums: Vec<Complex64> = Vec::new();
        for a in 0..4 {
            for b in a + 1..4 {
                for c in b + 1..4 {
                    sums.push(ev[a] + ev[b] + ev[c]);
                }
            }
        }
        let c = stability::third_additive_compound(&m);
        let cev = linalg::eigenvalues(&DMatrix::from_column_slice(4, 4, c.as_slice())).unwrap();
        for z in cev {
            let (k, d) = sums
                .iter()
                .enumerate()
                .map(|(k, s)| (k, (s - z).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            sums.swap_remove(k);
            spectrum_worst = spectrum_worst.max(d);
        }
    }
    let mut row_worst = 0.0_f64;
    for _ in 0..100 {
        let p = draw(&mut rng);
        let x = simplex_point(&mut rng);
        let c = stability::third_additive_compound(&model::phi_matrix(&p, &x));
        let d = phi3_closed_form(&p, &x);
        for (r, row) in d.iter().enumerate() {
            for (col, v) in row.iter().enumerate() {
                row_worst = row_worst.max((c[(r, col)] - v).abs());
            }
        }
    }
    outcome(
        spectrum_worst <= 1e-9 && row_worst <= 1e-12,
        format!("spectrum {spectrum_worst:.2e}, closed-form rows {row_worst:.2e}"),
    )
}

fn geometric_certificate() -> Outcome {
    let p = presets::fig7_base();
    let cfg = IntegrationConfig {
        t_max: 20_000.0,
        ..Default::default()
    };
    let (cert, tr) = experiments::certificate_with_measured_epsilon(&p, &cfg).unwrap();
    let ee = model::endemic_equilibrium(&p).unwrap().unwrap().extend();
    let dist = tr.final_state().distance(&ee);
    let h = cert.h_bars.unwrap_or([f64::NAN; 4]);
    outcome(
        cert.applicable && cert.certified && h.iter().all(|v| *v < 0.0) && dist <= 1e-6,
        format!(
            "eps {:.4e}, c {:.6}, h = [{:.4e}, {:.4e}, {:.4e}, {:.4e}], distance to EE {dist:.2e}",
            cert.epsilon,
            cert.c.unwrap_or(f64::NAN),
            h[0],
            h[1],
            h[2],
            h[3]
        ),
    )
}

fn figure_semantics() -> Outcome {
    let cfg = IntegrationConfig {
        t_max: 100_000.0,
        ..Default::default()
    };
    let x0 = default_initial_state();
    let mut notes = Vec::new();
    let mut ok = true;

    let fam = experiments::run_family(
        &presets::fig3_base(),
        Rate::Gamma,
        &presets::FIG3_GAMMAS,
        &x0,
        &cfg,
    )
    .unwrap();
    let endemic_s: Vec<f64> = fam
        .iter()
        .filter(|m| m.report.regime == Regime::Endemic)
        .map(|m| m.trajectory.final_state().s)
        .collect();
    let spread = endemic_s.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - endemic_s.iter().copied().fold(f64::INFINITY, f64::min);
    let low = &fam[0];
    let to_dfe = low
        .trajectory
        .final_state()
        .distance(&low.report.dfe.extend());
    ok &= endemic_s.len() == 3
        && spread <= 1e-4
        && low.report.regime == Regime::DiseaseFree
        && to_dfe <= 1e-6;
    notes.push(format!(
        "(a) S spread {spread:.1e}, gamma=0.001 to DFE {to_dfe:.1e}"
    ));

    let mut ratio_ok = true;
    for base in [
        presets::fig4_base(),
        presets::fig5_base(),
        presets::fig6_base(),
    ] {
        let fam =
            experiments::run_family(&base, Rate::Alpha, &presets::ALPHA_FAMILY, &x0, &cfg).unwrap();
        for m in &fam {
            let x = m.trajectory.final_state();
            let predicted = (m.params.delta_i + m.params.mu) / m.params.alpha > 1.0;
            ratio_ok &= m.trajectory.converged && (x.a > x.i) == predicted;
            let ee = m.report.endemic.expect("endemic family");
            ratio_ok &= (ee.a > ee.i) == predicted;
        }
    }
    ok &= ratio_ok;
    notes.push(format!(
        "(b) A>I rule {}",
        if ratio_ok { "holds" } else { "violated" }
    ));

    let fam = experiments::run_family(
        &presets::fig7_base(),
        Rate::Nu,
        &presets::FIG7_NUS,
        &x0,
        &cfg,
    )
    .unwrap();
    let finals: Vec<StateFull> = fam.iter().map(|m| m.trajectory.final_state()).collect();
    let closed: Vec<StateFull> = fam
        .iter()
        .map(|m| m.report.endemic.unwrap().extend())
        .collect();
    let decreasing = |xs: &[StateFull]| xs.windows(2).all(|w| w[1].a < w[0].a && w[1].i < w[0].i);
    let s_spread = finals.iter().map(|x| x.s).fold(f64::NEG_INFINITY, f64::max)
        - finals.iter().map(|x| x.s).fold(f64::INFINITY, f64::min);
    let s_closed = closed.iter().all(|x| (x.s - closed[0].s).abs() <= 1e-12);
    let fig7_ok = decreasing(&finals) && decreasing(&closed) && s_spread <= 1e-4 && s_closed;
    ok &= fig7_ok;
    notes.push(format!(
        "(c) monotone {}, S spread {s_spread:.1e}",
        decreasing(&finals)
    ));
    outcome(ok, notes.join("; "))
}

fn conjecture_probe() -> Outcome {
    let cfg = IntegrationConfig::default();
    let report = experiments::probe_conjecture(100, 2024, &ProbeSettings::default(), &cfg).unwrap();
    let worst = report
        .samples
        .iter()
        .map(|s| s.distance)
        .fold(0.0, f64::max);
    outcome(
        report.fraction == 1.0,
        format!(
            "fraction {} ({}/100), max distance {worst:.2e}",
            report.fraction, report.converged
        ),
    )
}

fn positive_invariance() -> Outcome {
    let mut rng = rng(111);
    let cases: Vec<(ModelParams, StateFull)> = (0..10_000)
        .map(|_| (draw(&mut rng), simplex_point(&mut rng)))
        .collect();
    let cfg = IntegrationConfig {
        t_max: 365.0,
        sample_dt: 1.0,
        stop_when_steady: false,
        ..Default::default()
    };
    let worst = cases
        .par_iter()
        .map(|(p, x0)| match integrate(p, x0, &cfg) {
            Ok(tr) => tr
                .states
                .iter()
                .map(|x| {
                    let below = x.to_array().iter().map(|c| -c).fold(0.0, f64::max);
                    below.max((x.sum() - 1.0).abs())
                })
                .fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        })
        .reduce(|| 0.0, f64::max);
    outcome(
        worst <= 1e-9,
        format!("max excursion {worst:.2e} over 10^4 runs"),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("r0 equivalence", Duration::from_secs(1), r0_equivalence),
        (
            "equilibrium residuals",
            Duration::from_secs(1),
            equilibrium_residuals,
        ),
        ("threshold law", Duration::from_secs(5), threshold_law),
        ("global DFE stability", Duration::from_secs(120), global_dfe),
        ("SAIR Lyapunov", Duration::from_secs(60), sair_lyapunov),
        (
            "equal-rates Lyapunov",
            Duration::from_secs(60),
            equal_rates_lyapunov,
        ),
        ("compound-matrix law", Duration::from_secs(60), compound_law),
        (
            "geometric certificate",
            Duration::from_secs(60),
            geometric_certificate,
        ),
        (
            "figure semantics",
            Duration::from_secs(300),
            figure_semantics,
        ),
        (
            "conjecture probe",
            Duration::from_secs(300),
            conjecture_probe,
        ),
        (
            "positive invariance",
            Duration::from_secs(300),
            positive_invariance,
        ),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let passed = out.passed && elapsed <= budget;
        if !passed {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{:.2}s, budget {}s]",
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{}/{} acceptance criteria passed", 11 - failed, 11);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
