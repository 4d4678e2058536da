//! Points of the full simplex (S, A, I, R) and of its three-dimensional projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `s + a + i + r = 1` accepted when constructing a [`StateFull`].
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateFull {
    pub s: f64,
    pub a: f64,
    pub i: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateReduced {
    pub s: f64,
    pub a: f64,
    pub i: f64,
}

impl StateFull {
    /// Builds a state and checks that it lies on the simplex within [`SIMPLEX_TOL`].
    pub fn new(s: f64, a: f64, i: f64, r: f64) -> Result<Self> {
        let x = Self { s, a, i, r };
        x.check_simplex(SIMPLEX_TOL)?;
        Ok(x)
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self {
            s: v[0],
            a: v[1],
            i: v[2],
            r: v[3],
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.s, self.a, self.i, self.r]
    }

    pub fn sum(&self) -> f64 {
        self.s + self.a + self.i + self.r
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn reduce(self) -> StateReduced {
        StateReduced {
            s: self.s,
            a: self.a,
            i: self.i,
        }
    }

    /// Errors unless every component is in `[-tol, 1 + tol]` and the sum is within `tol` of 1.
    pub fn check_simplex(&self, tol: f64) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite state {self:?}")));
        }
        let v = self.to_array();
        if v.iter().any(|&c| c < -tol || c > 1.0 + tol) {
            return Err(Error::InvalidInput(format!(
                "state component outside [0, 1]: {self:?}"
            )));
        }
        if (self.sum() - 1.0).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "state does not sum to 1 (sum = {}): {self:?}",
                self.sum()
            )));
        }
        Ok(())
    }

    /// Max-norm distance.
    pub fn distance(&self, other: &StateFull) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl StateReduced {
    pub fn new(s: f64, a: f64, i: f64) -> Self {
        Self { s, a, i }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.s, self.a, self.i]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self {
            s: v[0],
            a: v[1],
            i: v[2],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Whether the point lies in the closed set `{s, a, i >= 0, s + a + i <= 1}`.
    pub fn in_gamma(&self, tol: f64) -> bool {
        self.to_array().iter().all(|&c| c >= -tol) && self.s + self.a + self.i <= 1.0 + tol
    }

    /// Completes the state with `r = 1 - s - a - i`.
    pub fn extend(self) -> StateFull {
        StateFull {
            s: self.s,
            a: self.a,
            i: self.i,
            r: 1.0 - self.s - self.a - self.i,
        }
    }
}
