// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact reference solution on truncated Fock spaces: Weyl operators, the
//! full Hamiltonian, reduced dynamics by dense diagonalization, and
//! numerical checks of the field-operator identities and inequalities.

mod checks;
mod fock;
mod model;

pub use checks::*;
pub use fock::{block_norm, displacement, FockSpace, DEFAULT_DIM_CAP, MAX_MODES};
pub use model::{
    build_hamiltonian, evolve_reduced, infrared_norm_sqr, propagator, uniform_superposition,
    EvaluatedModel, Evolution, ModelSpec, OracleMode, OracleReport, StepDiagnostics, SystemPreset,
    TruncatedModel,
};
