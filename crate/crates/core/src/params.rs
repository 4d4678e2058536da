//! Model parameters and the names used to address individual rates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mortality/birth rate used throughout the numerical study: a 70 year lifespan, in 1/day.
pub const MU_70_YEARS: f64 = 1.0 / (70.0 * 365.0);

/// The eight rates (all in 1/day) of one SAIRS instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Transmission rate from asymptomatic infectives.
    pub beta_a: f64,
    /// Transmission rate from symptomatic infectives.
    pub beta_i: f64,
    /// Symptom-onset rate.
    pub alpha: f64,
    /// Recovery rate of asymptomatic infectives.
    pub delta_a: f64,
    /// Recovery rate of symptomatic infectives.
    pub delta_i: f64,
    /// Immunity-loss rate.
    pub gamma: f64,
    /// Vaccination rate.
    pub nu: f64,
    /// Birth and death rate.
    pub mu: f64,
}

impl ModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        beta_a: f64,
        beta_i: f64,
        alpha: f64,
        delta_a: f64,
        delta_i: f64,
        gamma: f64,
        nu: f64,
        mu: f64,
    ) -> Result<Self> {
        let p = Self {
            beta_a,
            beta_i,
            alpha,
            delta_a,
            delta_i,
            gamma,
            nu,
            mu,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks nonnegativity and that the closed-form denominators are nonzero.
    pub fn validate(&self) -> Result<()> {
        for rate in Rate::ALL {
            let v = self.get(rate);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{rate} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.alpha + self.delta_a + self.mu <= 0.0 {
            return Err(Error::InvalidParams(
                "alpha + delta_a + mu must be positive".into(),
            ));
        }
        if self.delta_i + self.mu <= 0.0 {
            return Err(Error::InvalidParams("delta_i + mu must be positive".into()));
        }
        if self.gamma + self.mu + self.nu <= 0.0 {
            return Err(Error::InvalidParams(
                "gamma + mu + nu must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn get(&self, rate: Rate) -> f64 {
        match rate {
            Rate::BetaA => self.beta_a,
            Rate::BetaI => self.beta_i,
            Rate::Alpha => self.alpha,
            Rate::DeltaA => self.delta_a,
            Rate::DeltaI => self.delta_i,
            Rate::Gamma => self.gamma,
            Rate::Nu => self.nu,
            Rate::Mu => self.mu,
        }
    }

    pub fn set(&mut self, rate: Rate, value: f64) {
        match rate {
            Rate::BetaA => self.beta_a = value,
            Rate::BetaI => self.beta_i = value,
            Rate::Alpha => self.alpha = value,
            Rate::DeltaA => self.delta_a = value,
            Rate::DeltaI => self.delta_i = value,
            Rate::Gamma => self.gamma = value,
            Rate::Nu => self.nu = value,
            Rate::Mu => self.mu = value,
        }
    }

    /// Copy with one rate replaced, validated.
    pub fn with(&self, rate: Rate, value: f64) -> Result<Self> {
        let mut p = *self;
        p.set(rate, value);
        p.validate()?;
        Ok(p)
    }

    /// Scales both transmission rates by `factor`.
    pub fn scale_transmission(&self, factor: f64) -> Self {
        Self {
            beta_a: self.beta_a * factor,
            beta_i: self.beta_i * factor,
            ..*self
        }
    }
}

/// Name of one of the eight rates, as used in configs, sweeps and CSV headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rate {
    BetaA,
    BetaI,
    Alpha,
    DeltaA,
    DeltaI,
    Gamma,
    Nu,
    Mu,
}

impl Rate {
    pub const ALL: [Rate; 8] = [
        Rate::BetaA,
        Rate::BetaI,
        Rate::Alpha,
        Rate::DeltaA,
        Rate::DeltaI,
        Rate::Gamma,
        Rate::Nu,
        Rate::Mu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rate::BetaA => "beta_a",
            Rate::BetaI => "beta_i",
            Rate::Alpha => "alpha",
            Rate::DeltaA => "delta_a",
            Rate::DeltaI => "delta_i",
            Rate::Gamma => "gamma",
            Rate::Nu => "nu",
            Rate::Mu => "mu",
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rate::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown parameter name `{s}`")))
    }
}
