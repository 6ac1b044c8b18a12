// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

//! Decoherence in the Van Hove (weak-coupling, bosonic-field) regime: spectral
//! measures, the closed-form decoherence factor, commuting-environment Fourier
//! models, a truncated Fock-space oracle and sector-bound verification.

// `!(x > y)` is used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
mod csv;
pub mod decoherence;
pub mod envmodels;
pub mod error;
pub mod oracle;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
