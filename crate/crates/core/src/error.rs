// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid spectral measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "quadrature did not reach tolerance {tolerance:.3e} (estimated error {abs_error:.3e}) after {evals} integrand calls"
    )]
    QuadratureFailure {
        evals: usize,
        abs_error: f64,
        tolerance: f64,
    },

    #[error("infrared classification inconclusive: {0}")]
    Inconclusive(String),

    #[error("operation requires an infrared-divergent coupling, got a regular measure")]
    RegularMeasure,

    #[error("Fock truncation gate failed: {value:.4} exceeds limit {limit:.4}")]
    TruncationWarning { value: f64, limit: f64 },

    #[error("total Hilbert space dimension {dim} exceeds cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("sector bound violated at t = {t}: measured {measured:.6e} > bound {bound:.6e}")]
    BoundViolation { t: f64, measured: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Field access for flat `{"kind": ..., ...}` wire structs.
pub(crate) struct Fields<'a> {
    pub kind: &'a str,
}

impl Fields<'_> {
    pub fn need<T>(&self, v: Option<T>, field: &str) -> Result<T> {
        v.ok_or_else(|| {
            Error::InvalidInput(format!(
                "field `{field}` is required for kind `{}`",
                self.kind
            ))
        })
    }

    pub fn forbid<T>(&self, v: &Option<T>, field: &str) -> Result<()> {
        match v {
            Some(_) => Err(Error::InvalidInput(format!(
                "field `{field}` does not apply to kind `{}`",
                self.kind
            ))),
            None => Ok(()),
        }
    }
}
