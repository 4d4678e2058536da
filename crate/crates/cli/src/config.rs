//! Flat `key = value` run configuration.
//!
//! ```text
//! # fig7 preset with overrides
//! preset = fig7
//! params.nu = 0.005
//! params.gamma = 1/50
//! integration.t_max = 20000
//! ```
//!
//! Numbers may be written as fractions `a/b`. Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use sairs_core::experiments::{
    presets, Axis, ProbeRegion, ProbeSettings, SweepQuantity, SweepSpec,
};
use sairs_core::integrator::default_initial_state;
use sairs_core::model::DEFAULT_BOUNDARY_TOL;
use sairs_core::{IntegrationConfig, ModelParams, Rate, StateFull, MU_70_YEARS};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl Preset {
    fn base(self) -> ModelParams {
        match self {
            Preset::Fig2 => presets::fig2_base(),
            Preset::Fig3 => presets::fig3_base(),
            Preset::Fig4 => presets::fig4_base(),
            Preset::Fig5 => presets::fig5_base(),
            Preset::Fig6 => presets::fig6_base(),
            Preset::Fig7 => presets::fig7_base(),
        }
    }

    fn family(self) -> Option<FamilySpec> {
        let (vary, values): (Rate, &[f64]) = match self {
            Preset::Fig2 => return None,
            Preset::Fig3 => (Rate::Gamma, &presets::FIG3_GAMMAS),
            Preset::Fig4 | Preset::Fig5 | Preset::Fig6 => (Rate::Alpha, &presets::ALPHA_FAMILY),
            Preset::Fig7 => (Rate::Nu, &presets::FIG7_NUS),
        };
        Some(FamilySpec {
            vary,
            values: values.to_vec(),
        })
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "fig2" => Preset::Fig2,
            "fig3" => Preset::Fig3,
            "fig4" => Preset::Fig4,
            "fig5" => Preset::Fig5,
            "fig6" => Preset::Fig6,
            "fig7" => Preset::Fig7,
            _ => return Err(format!("unknown preset `{s}` (expected fig2 ... fig7)")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub vary: Rate,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CertificateSpec {
    /// Persistence floor; measured from a reference run when absent.
    pub epsilon: Option<f64>,
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `None` when the file sets no parameters at all.
    pub params: Option<ModelParams>,
    pub init: StateFull,
    pub integration: IntegrationConfig,
    pub boundary_tol: f64,
    pub sweep: Option<SweepSpec>,
    pub family: Option<FamilySpec>,
    pub certificate: CertificateSpec,
    pub probe: ProbeSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: None,
            init: default_initial_state(),
            integration: IntegrationConfig::default(),
            boundary_tol: DEFAULT_BOUNDARY_TOL,
            sweep: None,
            family: None,
            certificate: CertificateSpec::default(),
            probe: ProbeSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        self.params
            .ok_or_else(|| CliError::Config("no model parameters configured (use --config)".into()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = Raw::read(text)?;
        let mut cfg = RunConfig::default();

        let preset = raw.take_parsed::<Preset>("preset")?;
        let mut params = preset.map(Preset::base);
        for rate in Rate::ALL {
            if let Some(v) = raw.take_number(&format!("params.{}", rate.name()))? {
                let p = params.get_or_insert(ModelParams {
                    beta_a: f64::NAN,
                    beta_i: f64::NAN,
                    alpha: f64::NAN,
                    delta_a: f64::NAN,
                    delta_i: f64::NAN,
                    gamma: f64::NAN,
                    nu: f64::NAN,
                    mu: MU_70_YEARS,
                });
                p.set(rate, v);
            }
        }
        if let Some(p) = &params {
            let missing: Vec<&str> = Rate::ALL
                .iter()
                .filter(|r| p.get(**r).is_nan())
                .map(|r| r.name())
                .collect();
            if !missing.is_empty() {
                return Err(CliError::Config(format!(
                    "missing parameters: {}",
                    missing.join(", ")
                )));
            }
            p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        cfg.params = params;

        let mut init = cfg.init.to_array();
        for (k, name) in ["S", "A", "I", "R"].iter().enumerate() {
            if let Some(v) = raw.take_number(&format!("init.{name}"))? {
                init[k] = v;
            }
        }
        cfg.init = StateFull::new(init[0], init[1], init[2], init[3])
            .map_err(|e| CliError::Config(format!("initial state: {e}")))?;

        let ic = &mut cfg.integration;
        for (key, slot) in [
            ("integration.rel_tol", &mut ic.rel_tol),
            ("integration.abs_tol", &mut ic.abs_tol),
            ("integration.t_max", &mut ic.t_max),
            ("integration.sample_dt", &mut ic.sample_dt),
            ("integration.steady_tol", &mut ic.steady_tol),
            ("integration.steady_window", &mut ic.steady_window),
        ] {
            if let Some(v) = raw.take_number(key)? {
                *slot = v;
            }
        }
        if let Some(v) = raw.take_parsed::<bool>("integration.stop_when_steady")? {
            ic.stop_when_steady = v;
        }
        ic.validate().map_err(|e| CliError::Config(e.to_string()))?;

        if let Some(v) = raw.take_number("classify.boundary_tol")? {
            if v.is_nan() || v <= 0.0 {
                return Err(CliError::Config(
                    "classify.boundary_tol must be positive".into(),
                ));
            }
            cfg.boundary_tol = v;
        }

        if let Some(base) = params {
            cfg.sweep = Some(sweep_spec(&mut raw, base, cfg.boundary_tol)?);
        }

        let vary = raw.take_parsed::<Rate>("family.vary")?;
        let values = raw
            .take("family.values")
            .map(|s| parse_list(&s))
            .transpose()?;
        cfg.family = match (vary, values) {
            (Some(vary), Some(values)) => Some(FamilySpec { vary, values }),
            (None, None) => preset.and_then(Preset::family),
            _ => {
                return Err(CliError::Config(
                    "family.vary and family.values must be given together".into(),
                ))
            }
        };

        cfg.certificate = CertificateSpec {
            epsilon: raw.take_number("certificate.epsilon")?,
            c: raw.take_number("certificate.c")?,
        };

        let pr = &mut cfg.probe;
        if let Some(region) = raw.take("probe.region") {
            pr.region = match region.as_str() {
                "uncertified" => ProbeRegion::Uncertified,
                "certified" => ProbeRegion::Certified,
                other => {
                    return Err(CliError::Config(format!(
                        "probe.region must be `uncertified` or `certified`, got `{other}`"
                    )))
                }
            };
        }
        for (key, slot) in [
            ("probe.rate_min", &mut pr.rate_min),
            ("probe.rate_max", &mut pr.rate_max),
            ("probe.mu", &mut pr.mu),
            ("probe.tolerance", &mut pr.tolerance),
            ("probe.relaxation_multiple", &mut pr.relaxation_multiple),
            ("probe.max_horizon", &mut pr.max_horizon),
        ] {
            if let Some(v) = raw.take_number(key)? {
                *slot = v;
            }
        }

        raw.finish()?;
        Ok(cfg)
    }
}

fn sweep_spec(raw: &mut Raw, base: ModelParams, boundary_tol: f64) -> Result<SweepSpec, CliError> {
    let default = presets::fig2_sweep();
    let mut axis = |name: &str, fallback: Axis| -> Result<Axis, CliError> {
        let rate = raw
            .take_parsed::<Rate>(&format!("sweep.{name}"))?
            .unwrap_or(fallback.rate);
        let min = raw
            .take_number(&format!("sweep.{name}.min"))?
            .unwrap_or(fallback.min);
        let max = raw
            .take_number(&format!("sweep.{name}.max"))?
            .unwrap_or(fallback.max);
        let n = match raw.take_number(&format!("sweep.{name}.n"))? {
            Some(v) if v >= 1.0 && v.fract() == 0.0 => v as usize,
            Some(v) => {
                return Err(CliError::Config(format!(
                    "sweep.{name}.n must be a positive integer, got {v}"
                )))
            }
            None => fallback.n,
        };
        Ok(Axis::new(rate, min, max, n))
    };
    let axis1 = axis("axis1", default.axis1)?;
    let axis2 = axis("axis2", default.axis2)?;
    let quantity = match raw.take("sweep.quantity").as_deref() {
        None | Some("asymptotic_state") => SweepQuantity::AsymptoticState,
        Some("r0") => SweepQuantity::R0,
        Some("regime") => SweepQuantity::Regime,
        Some(other) => {
            return Err(CliError::Config(format!(
                "sweep.quantity must be asymptotic_state, r0 or regime, got `{other}`"
            )))
        }
    };
    let crosscheck_per_axis = match raw.take_number("sweep.crosscheck")? {
        Some(v) if v >= 0.0 && v.fract() == 0.0 => v as usize,
        Some(v) => {
            return Err(CliError::Config(format!(
                "sweep.crosscheck must be a nonnegative integer, got {v}"
            )))
        }
        None => default.crosscheck_per_axis,
    };
    let spec = SweepSpec {
        base,
        axis1,
        axis2,
        quantity,
        boundary_tol,
        crosscheck_per_axis,
    };
    spec.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

/// Parses a decimal number or a fraction `a/b`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("bad number `{s}`"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not a finite number"))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    let values = s
        .split(',')
        .map(parse_number)
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::Config)?;
    if values.is_empty() {
        return Err(CliError::Config("family.values is empty".into()));
    }
    Ok(values)
}

/// Key/value pairs not yet consumed, with their line numbers.
struct Raw {
    entries: BTreeMap<String, (usize, String)>,
}

impl Raw {
    fn read(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), (n + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(CliError::Config(format!(
                    "line {}: duplicate key `{key}`",
                    n + 1
                )));
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(_, v)| v)
    }

    fn take_number(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => parse_number(&v)
                .map(Some)
                .map_err(|e| CliError::Config(format!("line {line}: {key}: {e}"))),
        }
    }

    fn take_parsed<T>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("line {line}: {key}: {e}"))),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        match self.entries.iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(CliError::Config(format!(
                "line {line}: unknown key `{key}`"
            ))),
        }
    }
}
