//! Subcommand implementations. Each returns the text printed on standard output; CSV
//! artifacts go to `--out` (or standard output when no path is given).

use std::fmt::Write as _;
use std::path::PathBuf;

use sairs_core::experiments::{self, SweepQuantity};
use sairs_core::model::{self, Regime};
use sairs_core::stability::{self, SpectrumReport};
use sairs_core::{integrate, verify, ModelParams, StateFull, StateReduced};

use crate::config::RunConfig;
use crate::csv::{self, num};
use crate::CliError;

pub struct Context {
    pub cfg: RunConfig,
    pub out_path: Option<PathBuf>,
    pub seed: u64,
    pub samples: Option<usize>,
}

impl Context {
    fn samples_or(&self, default: usize) -> Result<usize, CliError> {
        match self.samples {
            Some(0) => Err(CliError::Usage("--samples must be at least 1".into())),
            Some(n) => Ok(n),
            None => Ok(default),
        }
    }

    /// Writes a CSV artifact to `--out`, or returns it for standard output.
    fn emit(&self, contents: String, summary: impl FnOnce() -> String) -> Result<String, CliError> {
        match &self.out_path {
            Some(path) => {
                csv::write(path, &contents)?;
                Ok(format!("{}wrote {}\n", summary(), path.display()))
            }
            None => Ok(contents),
        }
    }
}

fn state_fields(x: &StateFull) -> String {
    format!(
        "S={} A={} I={} R={}",
        num(x.s),
        num(x.a),
        num(x.i),
        num(x.r)
    )
}

fn residual(p: &ModelParams, x: &StateReduced) -> Result<f64, CliError> {
    let f = model::rhs_reduced(p, x)?;
    Ok(f.iter().fold(0.0, |m, v| m.max(v.abs())))
}

pub fn r0(ctx: &Context) -> Result<String, CliError> {
    let p = ctx.cfg.params()?;
    let report = model::equilibrium_report(&p, ctx.cfg.boundary_tol)?;
    let h = report.h_constants;
    Ok(format!(
        "r0={} regime={} h0={} h1={} h2={} h3={} h4={}\n",
        num(report.r0),
        report.regime,
        num(h.h0),
        num(h.h1),
        num(h.h2),
        num(h.h3),
        num(h.h4)
    ))
}

pub fn equilibria(ctx: &Context) -> Result<String, CliError> {
    let p = ctx.cfg.params()?;
    let report = model::equilibrium_report(&p, ctx.cfg.boundary_tol)?;
    let mut s = format!("r0={} regime={}\n", num(report.r0), report.regime);
    let _ = writeln!(
        s,
        "dfe {} residual={}",
        state_fields(&report.dfe.extend()),
        num(residual(&p, &report.dfe)?)
    );
    match report.endemic {
        Some(ee) => {
            let _ = writeln!(
                s,
                "endemic {} residual={}",
                state_fields(&ee.extend()),
                num(residual(&p, &ee)?)
            );
        }
        None => s.push_str("endemic: none\n"),
    }
    Ok(s)
}

fn spectrum_line(label: &str, rep: &SpectrumReport) -> String {
    let ev: Vec<String> = rep
        .eigenvalues
        .iter()
        .map(|(re, im)| {
            let sign = if *im < 0.0 { '-' } else { '+' };
            format!("{}{sign}{}i", num(*re), num(im.abs()))
        })
        .collect();
    format!(
        "{label} max_re={} stable={} eigenvalues={}\n",
        num(rep.max_real_part),
        rep.stable,
        ev.join(";")
    )
}

pub fn stability(ctx: &Context) -> Result<String, CliError> {
    let p = ctx.cfg.params()?;
    let r0 = model::r0_closed_form(&p);
    let mut s = format!("r0={}\n", num(r0));
    s.push_str(&spectrum_line("dfe", &stability::dfe_spectrum(&p)?));
    if r0 > 1.0 {
        s.push_str(&spectrum_line("endemic", &stability::ee_spectrum(&p)?));
    } else {
        s.push_str("endemic: none\n");
    }
    let mut lyap = Vec::new();
    if r0 > 1.0 && p.gamma == 0.0 && p.beta_i > 0.0 {
        lyap.push("sair");
    }
    if r0 > 1.0 && p.beta_a == p.beta_i && p.delta_a == p.delta_i {
        lyap.push("equal_rates");
    }
    if r0 < 1.0 && p.nu == 0.0 {
        lyap.push("dfe_novax");
    }
    let _ = writeln!(
        s,
        "lyapunov={}",
        if lyap.is_empty() {
            "none".to_string()
        } else {
            lyap.join(",")
        }
    );
    Ok(s)
}

pub fn simulate(ctx: &Context) -> Result<String, CliError> {
    let p = ctx.cfg.params()?;
    let tr = integrate(&p, &ctx.cfg.init, &ctx.cfg.integration)?;
    ctx.emit(csv::trajectory(&tr), || {
        format!(
            "rows={} t_end={} converged={} final {}\n",
            tr.times.len(),
            num(tr.final_time()),
            tr.converged,
            state_fields(&tr.final_state())
        )
    })
}

pub fn sweep(ctx: &Context) -> Result<String, CliError> {
    let spec = ctx
        .cfg
        .sweep
        .ok_or_else(|| CliError::Config("sweep needs model parameters".into()))?;
    let res = experiments::run_sweep(&spec, &ctx.cfg.integration, &ctx.cfg.init)?;
    ctx.emit(csv::sweep(&res), || {
        let endemic = res
            .cells
            .iter()
            .filter(|c| c.regime == Regime::Endemic)
            .count();
        let mut s = format!("cells={} endemic={}\n", res.cells.len(), endemic);
        if spec.quantity == SweepQuantity::AsymptoticState {
            let worst = res
                .crosschecks
                .iter()
                .map(|c| c.discrepancy)
                .fold(0.0, f64::max);
            let _ = writeln!(
                s,
                "crosschecks={} max_discrepancy={}",
                res.crosschecks.len(),
                num(worst)
            );
        }
        s
    })
}

pub fn family(ctx: &Context) -> Result<String, CliError> {
    let p = ctx.cfg.params()?;
    let fam = ctx
        .cfg
        .family
        .as_ref()
        .ok_or_else(|| CliError::Config("family needs family.vary and family.values".into()))?;
    let dir = ctx.out_path.as_ref().ok_or_else(|| {
        CliError::Usage("family writes one CSV per value; pass --out <dir>".into())
    })?;
    let members = experiments::run_family(
        &p,
        fam.vary,
        &fam.values,
        &ctx.cfg.init,
        &ctx.cfg.integration,
    )?;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut s = String::new();
    for m in &members {
        let path = dir.join(format!("{}_{}.csv", fam.vary, m.value));
        csv::write(&path, &csv::trajectory(&m.trajectory))?;
        let _ = writeln!(
            s,
            "{}={} r0={} regime={} converged={} wrote {}",
            fam.vary,
            m.value,
            num(m.report.r0),
            m.report.regime,
            m.trajectory.converged,
            path.display()
        );
    }
    let summary = dir.join("summary.csv");
    csv::write(&summary, &csv::family_summary(fam.vary, &members))?;
    let _ = writeln!(s, "wrote {}", summary.display());
    Ok(s)
}

pub fn certificate(ctx: &Context) -> Result<String, CliError> {
    let p = ctx.cfg.params()?;
    let spec = ctx.cfg.certificate;
    let mut s = String::new();
    let epsilon = match spec.epsilon {
        Some(e) => e,
        None => {
            let (eps, tr) = experiments::measured_epsilon(&p, &ctx.cfg.integration)?;
            let _ = writeln!(
                s,
                "reference_run t_end={} converged={} final {}",
                num(tr.final_time()),
                tr.converged,
                state_fields(&tr.final_state())
            );
            eps
        }
    };
    let cert = stability::geometric_certificate(&p, epsilon, spec.c)?;
    let _ = writeln!(
        s,
        "applicable={} epsilon={} c_interval=({},{}) c={}",
        cert.applicable,
        num(cert.epsilon),
        num(cert.c_interval.0),
        num(cert.c_interval.1),
        cert.c.map_or("none".to_string(), num)
    );
    match cert.h_bars {
        Some(h) => {
            let _ = writeln!(
                s,
                "h_bar1={} h_bar2={} h_bar3={} h_bar4={}",
                num(h[0]),
                num(h[1]),
                num(h[2]),
                num(h[3])
            );
        }
        None => s.push_str("h_bar: none (empty admissible interval)\n"),
    }
    let _ = writeln!(s, "certified={}", cert.certified);
    Ok(s)
}

pub fn probe(ctx: &Context) -> Result<String, CliError> {
    let n = ctx.samples_or(100)?;
    let report = experiments::probe_conjecture(n, ctx.seed, &ctx.cfg.probe, &ctx.cfg.integration)?;
    let worst = report
        .samples
        .iter()
        .map(|x| x.distance)
        .fold(0.0, f64::max);
    let line = format!(
        "samples={} seed={} converged={} fraction={} max_distance={}\n",
        n,
        ctx.seed,
        report.converged,
        report.fraction,
        num(worst)
    );
    match &ctx.out_path {
        Some(path) => {
            csv::write(path, &csv::probe(&report))?;
            Ok(format!("{line}wrote {}\n", path.display()))
        }
        None => Ok(line),
    }
}

pub fn verify(ctx: &Context) -> Result<String, CliError> {
    let n = ctx.samples_or(1000)?;
    let report = verify::run_suite(ctx.seed, n)?;
    let text = format!("{report}\n");
    if report.all_passed() {
        Ok(text)
    } else {
        Err(CliError::VerifyFailed {
            failed: report.checks.iter().filter(|c| !c.passed()).count(),
            total: report.checks.len(),
            report: text,
        })
    }
}
