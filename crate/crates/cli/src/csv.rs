//! CSV artifacts: comma-delimited, LF line endings, 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use sairs_core::experiments::{FamilyMember, ProbeReport, SweepResult};
use sairs_core::{Rate, Trajectory};

use crate::CliError;

/// Shortest fixed-width form that round-trips every `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory(tr: &Trajectory) -> String {
    let mut s = String::from("t,S,A,I,R\n");
    for (t, x) in tr.times.iter().zip(&tr.states) {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            num(*t),
            num(x.s),
            num(x.a),
            num(x.i),
            num(x.r)
        );
    }
    s
}

pub fn sweep(res: &SweepResult) -> String {
    let mut s = format!(
        "{},{},r0,regime,S_inf,A_inf,I_inf,R_inf\n",
        res.axis1.rate, res.axis2.rate
    );
    for c in &res.cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            num(c.value1),
            num(c.value2),
            num(c.r0),
            c.regime,
            num(c.state.s),
            num(c.state.a),
            num(c.state.i),
            num(c.state.r)
        );
    }
    s
}

/// One row per family member with its closed-form and simulated limits.
pub fn family_summary(vary: Rate, members: &[FamilyMember]) -> String {
    let mut s = format!(
        "{vary},r0,regime,S_star,A_star,I_star,R_star,S_final,A_final,I_final,R_final,converged\n"
    );
    for m in members {
        let eq = m.report.asymptotic_state();
        let fin = m.trajectory.final_state();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            num(m.value),
            num(m.report.r0),
            m.report.regime,
            num(eq.s),
            num(eq.a),
            num(eq.i),
            num(eq.r),
            num(fin.s),
            num(fin.a),
            num(fin.i),
            num(fin.r),
            m.trajectory.converged
        );
    }
    s
}

pub fn probe(report: &ProbeReport) -> String {
    let mut s = String::from(
        "sample,beta_a,beta_i,alpha,delta_a,delta_i,gamma,nu,mu,r0,final_time,distance,converged\n",
    );
    for (k, x) in report.samples.iter().enumerate() {
        let p = &x.params;
        let _ = write!(s, "{k}");
        for v in [
            p.beta_a,
            p.beta_i,
            p.alpha,
            p.delta_a,
            p.delta_i,
            p.gamma,
            p.nu,
            p.mu,
            x.r0,
            x.final_time,
            x.distance,
        ] {
            let _ = write!(s, ",{}", num(v));
        }
        let _ = writeln!(s, ",{}", x.converged);
    }
    s
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Splits CSV text into a header and rows of fields.
pub fn parse(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let split = |l: &str| l.split(',').map(str::to_string).collect::<Vec<_>>();
    let header = lines.next().map(split).unwrap_or_default();
    (header, lines.map(split).collect())
}
