// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fock::{displacement, FockSpace, DEFAULT_DIM_CAP};
use crate::decoherence::{ReferenceState, VanHoveTerms};
use crate::error::{Error, Result};
use crate::quadrature::QuadConfig;
use crate::spectral::{Mode, SpectralMeasure, COUPLING_SLACK};

/// One field mode with frequency `ω_k > 0` and real coupling `g_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleMode {
    pub frequency: f64,
    pub coupling: f64,
}

impl OracleMode {
    pub fn new(frequency: f64, coupling: f64) -> Self {
        Self {
            frequency,
            coupling,
        }
    }
}

/// `‖M^{-1/2}h‖² = Σ g_k²/ω_k`.
pub fn infrared_norm_sqr(modes: &[OracleMode]) -> f64 {
    modes
        .iter()
        .map(|m| m.coupling * m.coupling / m.frequency)
        .sum()
}

pub(crate) fn validate_modes(modes: &[OracleMode]) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::InvalidInput("at least one mode is required".into()));
    }
    for (k, m) in modes.iter().enumerate() {
        if !(m.frequency.is_finite() && m.frequency > 0.0) {
            return Err(Error::InvalidInput(format!(
                "mode {k}: frequency must be positive, got {}",
                m.frequency
            )));
        }
        if !m.coupling.is_finite() {
            return Err(Error::InvalidInput(format!(
                "mode {k}: coupling must be finite"
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_semibounded(modes: &[OracleMode]) -> Result<()> {
    let v = 2.0 * infrared_norm_sqr(modes).sqrt();
    if v > 1.0 + COUPLING_SLACK {
        return Err(Error::InvalidInput(format!(
            "coupling violates 2‖M^{{-1/2}}h‖ ≤ 1 (value {v})"
        )));
    }
    Ok(())
}

/// System Hamiltonian presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemPreset {
    /// `H_S = ½P²`, `F = P`: `E_i = λ_i²/2`.
    Velocity,
}

/// Wire form of [`TruncatedModel`]. Exactly one of `hs_eigenvalues` and
/// `preset` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub f_eigenvalues: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hs_eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<SystemPreset>,
    pub modes: Vec<OracleMode>,
    pub fock_cutoff: usize,
    #[serde(default = "default_cap")]
    pub dim_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_DIM_CAP
}

/// System in the joint eigenbasis of `H_S` and `F`, coupled through
/// `F ⊗ Φ(h)` to a truncated field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct TruncatedModel {
    spec: ModelSpec,
    energies: Vec<f64>,
}

impl TryFrom<ModelSpec> for TruncatedModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        let d = spec.f_eigenvalues.len();
        if d == 0 {
            return Err(Error::InvalidInput(
                "system needs at least one level".into(),
            ));
        }
        if spec.f_eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("F eigenvalues must be finite".into()));
        }
        let energies = match (&spec.hs_eigenvalues, spec.preset) {
            (Some(e), None) => {
                if e.len() != d || e.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput(
                        "need one finite H_S eigenvalue per F eigenvalue".into(),
                    ));
                }
                e.clone()
            }
            (None, Some(SystemPreset::Velocity)) => {
                spec.f_eigenvalues.iter().map(|l| 0.5 * l * l).collect()
            }
            _ => {
                return Err(Error::InvalidInput(
                    "give exactly one of hs_eigenvalues and preset".into(),
                ))
            }
        };
        validate_modes(&spec.modes)?;
        check_semibounded(&spec.modes)?;
        FockSpace::with_cap(spec.fock_cutoff, spec.modes.len(), spec.dim_cap)?;
        Ok(Self { spec, energies })
    }
}

impl From<TruncatedModel> for ModelSpec {
    fn from(m: TruncatedModel) -> Self {
        m.spec
    }
}

impl TruncatedModel {
    pub fn new(
        f_eigenvalues: Vec<f64>,
        hs_eigenvalues: Vec<f64>,
        modes: Vec<OracleMode>,
        fock_cutoff: usize,
    ) -> Result<Self> {
        Self::try_from(ModelSpec {
            f_eigenvalues,
            hs_eigenvalues: Some(hs_eigenvalues),
            preset: None,
            modes,
            fock_cutoff,
            dim_cap: DEFAULT_DIM_CAP,
        })
    }

    /// Velocity coupling: `E_i = λ_i²/2`, so `H_S − ½F² = 0`.
    pub fn velocity(
        f_eigenvalues: Vec<f64>,
        modes: Vec<OracleMode>,
        fock_cutoff: usize,
    ) -> Result<Self> {
        Self::try_from(ModelSpec {
            f_eigenvalues,
            hs_eigenvalues: None,
            preset: Some(SystemPreset::Velocity),
            modes,
            fock_cutoff,
            dim_cap: DEFAULT_DIM_CAP,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn system_dim(&self) -> usize {
        self.energies.len()
    }

    pub fn f_eigenvalues(&self) -> &[f64] {
        &self.spec.f_eigenvalues
    }

    pub fn hs_eigenvalues(&self) -> &[f64] {
        &self.energies
    }

    pub fn modes(&self) -> &[OracleMode] {
        &self.spec.modes
    }

    pub fn fock(&self) -> FockSpace {
        FockSpace::with_cap(
            self.spec.fock_cutoff,
            self.spec.modes.len(),
            self.spec.dim_cap,
        )
        .expect("validated on construction")
    }

    /// Coupling measure `Σ g_k² δ(λ − ω_k)`; `None` when every coupling
    /// vanishes.
    pub fn measure(&self) -> Option<SpectralMeasure> {
        let mut modes: Vec<Mode> = Vec::new();
        for m in &self.spec.modes {
            let w = m.coupling * m.coupling;
            if w == 0.0 {
                continue;
            }
            match modes.iter_mut().find(|x| x.frequency == m.frequency) {
                Some(x) => x.weight += w,
                None => modes.push(Mode {
                    frequency: m.frequency,
                    weight: w,
                }),
            }
        }
        if modes.is_empty() {
            None
        } else {
            SpectralMeasure::discrete(modes).ok()
        }
    }

    fn sector_block(&self, fock: &FockSpace, i: usize) -> DMatrix<f64> {
        let freqs: Vec<f64> = self.modes().iter().map(|m| m.frequency).collect();
        let couplings: Vec<f64> = self.modes().iter().map(|m| m.coupling).collect();
        let mut block = fock.field(&couplings) * self.f_eigenvalues()[i];
        let diag = fock.free_hamiltonian(&freqs);
        for j in 0..fock.dim() {
            block[(j, j)] += diag[j] + self.energies[i];
        }
        block
    }

    /// Amplitude gate for reference states: the sector dynamics moves a
    /// coherent state `ζh` on a circle about `−λ_i M^{-1}h`, so the largest
    /// occupation reached is bounded by `Σ_k (2|λ_i g_k/ω_k| + |ζ g_k|)²`.
    pub fn reference_gate(&self, reference: &ReferenceState) -> Result<f64> {
        let limit = self.spec.fock_cutoff as f64 / 4.0;
        let mut value: f64 = 0.0;
        for lambda in self.f_eigenvalues() {
            for (_, z) in reference.components() {
                let v: f64 = self
                    .modes()
                    .iter()
                    .map(|m| {
                        let r = 2.0 * (lambda * m.coupling / m.frequency).abs()
                            + z.norm() * m.coupling.abs();
                        r * r
                    })
                    .sum();
                value = value.max(v);
            }
        }
        if value > limit {
            return Err(Error::TruncationWarning { value, limit });
        }
        Ok(value)
    }
}

/// `H = H_S⊗I + I⊗H_E + F⊗Φ(h)` as a dense real symmetric matrix, system
/// index most significant.
pub fn build_hamiltonian(model: &TruncatedModel) -> Result<DMatrix<f64>> {
    let fock = model.fock();
    let n = fock.dim();
    let d = model.system_dim();
    let dim = d * n;
    if dim > model.spec.dim_cap {
        return Err(Error::DimensionOverflow {
            dim,
            cap: model.spec.dim_cap,
        });
    }
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..d {
        h.view_mut((i * n, i * n), (n, n))
            .copy_from(&model.sector_block(&fock, i));
    }
    Ok(h)
}

/// Per-time diagnostics of an oracle evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    /// Largest weight any sector state puts on the highest kept Fock level.
    pub top_level_mass: f64,
}

/// Reduced system states on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<Complex64>>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub gate_value: f64,
    pub gate_limit: f64,
}

/// A model with every sector block diagonalized. Immutable; safe to share
/// across threads.
#[derive(Debug, Clone)]
pub struct EvaluatedModel {
    model: TruncatedModel,
    fock: FockSpace,
    sectors: Vec<SymmetricEigen<f64, nalgebra::Dyn>>,
}

fn check_density_matrix(rho: &DMatrix<Complex64>, d: usize) -> Result<()> {
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::InvalidInput(format!(
            "density matrix must be {d}×{d}, got {}×{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if (rho - rho.adjoint()).norm() > 1e-12 {
        return Err(Error::InvalidInput(
            "density matrix must be Hermitian".into(),
        ));
    }
    if (rho.trace() - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::InvalidInput(
            "density matrix must have unit trace".into(),
        ));
    }
    if min_eigenvalue(rho) < -1e-10 {
        return Err(Error::InvalidInput(
            "density matrix must be positive semidefinite".into(),
        ));
    }
    Ok(())
}

fn min_eigenvalue(rho: &DMatrix<Complex64>) -> f64 {
    let herm = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    herm.symmetric_eigen().eigenvalues.min()
}

impl EvaluatedModel {
    pub fn new(model: TruncatedModel) -> Result<Self> {
        let fock = model.fock();
        let sectors = (0..model.system_dim())
            .map(|i| SymmetricEigen::new(model.sector_block(&fock, i)))
            .collect();
        Ok(Self {
            model,
            fock,
            sectors,
        })
    }

    pub fn model(&self) -> &TruncatedModel {
        &self.model
    }

    /// Lowest eigenvalue of `H`.
    pub fn ground_energy(&self) -> f64 {
        self.sectors
            .iter()
            .map(|s| s.eigenvalues.min())
            .fold(f64::INFINITY, f64::min)
    }

    /// Sector eigenvalues, one vector per F eigenvalue.
    pub fn sector_spectra(&self) -> Vec<DVector<f64>> {
        self.sectors.iter().map(|s| s.eigenvalues.clone()).collect()
    }

    fn sector_propagator(&self, i: usize, t: f64) -> DMatrix<Complex64> {
        let s = &self.sectors[i];
        let v = s.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let phases =
            DMatrix::from_diagonal(&s.eigenvalues.map(|e| Complex64::from_polar(1.0, -e * t)));
        &v * phases * v.transpose()
    }

    /// `e^{−iHt}` on the full space.
    pub fn propagator(&self, t: f64) -> Result<DMatrix<Complex64>> {
        let n = self.fock.dim();
        let d = self.model.system_dim();
        if d * n > self.model.spec.dim_cap {
            return Err(Error::DimensionOverflow {
                dim: d * n,
                cap: self.model.spec.dim_cap,
            });
        }
        let mut u = DMatrix::<Complex64>::zeros(d * n, d * n);
        for i in 0..d {
            u.view_mut((i * n, i * n), (n, n))
                .copy_from(&self.sector_propagator(i, t));
        }
        Ok(u)
    }

    /// Exact `ρ(t) = tr_E U(t)(ρ0 ⊗ ω)U⁺(t)`.
    pub fn evolve_reduced(
        &self,
        rho0: &DMatrix<Complex64>,
        reference: &ReferenceState,
        times: &[f64],
    ) -> Result<Evolution> {
        let d = self.model.system_dim();
        check_density_matrix(rho0, d)?;
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("times must be finite".into()));
        }
        let gate_value = self.model.reference_gate(reference)?;
        let gate_limit = self.model.spec.fock_cutoff as f64 / 4.0;
        let couplings: Vec<f64> = self.model.modes().iter().map(|m| m.coupling).collect();
        let top: Vec<usize> = (0..self.fock.dim())
            .filter(|&j| self.fock.touches_top(j))
            .collect();

        // Initial environment vectors in each sector eigenbasis.
        let components: Vec<(f64, Vec<DVector<Complex64>>)> = reference
            .components()
            .into_iter()
            .map(|(p, z)| {
                let amps: Vec<Complex64> = couplings.iter().map(|g| z * g).collect();
                let phi0 = displacement(&amps, &self.fock)? * self.fock.vacuum();
                let coeffs = self
                    .sectors
                    .iter()
                    .map(|s| s.eigenvectors.map(|x| Complex64::new(x, 0.0)).transpose() * &phi0)
                    .collect();
                Ok((p, coeffs))
            })
            .collect::<Result<_>>()?;

        let mut states = Vec::with_capacity(times.len());
        let mut diagnostics = Vec::with_capacity(times.len());
        for &t in times {
            let mut overlaps = DMatrix::<Complex64>::zeros(d, d);
            let mut top_mass: f64 = 0.0;
            for (p, coeffs) in &components {
                let evolved: Vec<DVector<Complex64>> = (0..d)
                    .map(|i| {
                        let s = &self.sectors[i];
                        let c = coeffs[i].zip_map(&s.eigenvalues, |c, e| {
                            c * Complex64::from_polar(1.0, -e * t)
                        });
                        s.eigenvectors.map(|x| Complex64::new(x, 0.0)) * c
                    })
                    .collect();
                for v in &evolved {
                    top_mass = top_mass.max(top.iter().map(|&j| v[j].norm_sqr()).sum());
                }
                for i in 0..d {
                    for j in 0..d {
                        overlaps[(i, j)] += evolved[j].dotc(&evolved[i]) * *p;
                    }
                }
            }
            let rho = rho0.component_mul(&overlaps);
            diagnostics.push(StepDiagnostics {
                t,
                trace_error: (rho.trace() - Complex64::new(1.0, 0.0)).norm(),
                min_eigenvalue: min_eigenvalue(&rho),
                top_level_mass: top_mass,
            });
            states.push(rho);
        }
        Ok(Evolution {
            times: times.to_vec(),
            states,
            diagnostics,
            gate_value,
            gate_limit,
        })
    }

    /// Compare the oracle against `ρ_ij(t) = e^{−i(E_i−E_j)t} χ(λ_j,λ_i;t) ρ_ij(0)`.
    pub fn compare_with_analytic(
        &self,
        rho0: &DMatrix<Complex64>,
        reference: &ReferenceState,
        times: &[f64],
    ) -> Result<OracleReport> {
        let evo = self.evolve_reduced(rho0, reference, times)?;
        let measure = self.model.measure();
        let lambdas = self.model.f_eigenvalues();
        let energies = self.model.hs_eigenvalues();
        let d = self.model.system_dim();
        let cfg = QuadConfig::default();
        let mut max_deviation = Vec::with_capacity(times.len());
        let mut max_modulus_deviation = Vec::with_capacity(times.len());
        for (k, &t) in times.iter().enumerate() {
            let terms = match &measure {
                Some(m) => Some(VanHoveTerms::compute(m, t, &cfg)?),
                None => None,
            };
            let mut dev: f64 = 0.0;
            let mut dev_mod: f64 = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let r0 = rho0[(i, j)];
                    if r0.norm() == 0.0 {
                        continue;
                    }
                    let chi = match &terms {
                        Some(tm) => tm.chi(lambdas[j], lambdas[i], reference),
                        None => Complex64::new(1.0, 0.0),
                    };
                    let predicted =
                        Complex64::from_polar(1.0, -(energies[i] - energies[j]) * t) * chi;
                    let ratio = evo.states[k][(i, j)] / r0;
                    dev = dev.max((ratio - predicted).norm());
                    dev_mod = dev_mod.max((ratio.norm() - predicted.norm()).abs());
                }
            }
            max_deviation.push(dev);
            max_modulus_deviation.push(dev_mod);
        }
        Ok(OracleReport {
            max_error: max_deviation.iter().copied().fold(0.0, f64::max),
            times: evo.times.clone(),
            max_deviation,
            max_modulus_deviation,
            top_level_mass: evo.diagnostics.iter().map(|s| s.top_level_mass).collect(),
            max_trace_error: evo
                .diagnostics
                .iter()
                .map(|s| s.trace_error)
                .fold(0.0, f64::max),
            min_eigenvalue: evo
                .diagnostics
                .iter()
                .map(|s| s.min_eigenvalue)
                .fold(f64::INFINITY, f64::min),
            gate_value: evo.gate_value,
            gate_limit: evo.gate_limit,
        })
    }
}

/// Oracle-versus-closed-form comparison; serializes to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub times: Vec<f64>,
    /// `max_ij |ρ_ij(t)/ρ_ij(0) − predicted|`.
    pub max_deviation: Vec<f64>,
    /// Same with moduli only.
    pub max_modulus_deviation: Vec<f64>,
    pub top_level_mass: Vec<f64>,
    pub max_error: f64,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
    pub gate_value: f64,
    pub gate_limit: f64,
}

/// Convenience wrapper: build, diagonalize, evolve.
pub fn evolve_reduced(
    model: &TruncatedModel,
    rho0: &DMatrix<Complex64>,
    reference: &ReferenceState,
    times: &[f64],
) -> Result<Evolution> {
    EvaluatedModel::new(model.clone())?.evolve_reduced(rho0, reference, times)
}

/// `e^{−iHt}` for a model.
pub fn propagator(model: &TruncatedModel, t: f64) -> Result<DMatrix<Complex64>> {
    EvaluatedModel::new(model.clone())?.propagator(t)
}

/// The pure state `|+⟩⟨+|` with all entries `1/d`.
pub fn uniform_superposition(d: usize) -> DMatrix<Complex64> {
    DMatrix::from_element(d, d, Complex64::new(1.0 / d as f64, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_mode(g: f64, n: usize) -> TruncatedModel {
        TruncatedModel::velocity(vec![0.0, 1.0], vec![OracleMode::new(1.0, g)], n).unwrap()
    }

    #[test]
    fn zero_coupling_hamiltonian() {
        let m = TruncatedModel::new(
            vec![0.0, 1.0],
            vec![0.3, -0.2],
            vec![OracleMode::new(1.5, 0.0)],
            6,
        )
        .unwrap();
        let h = build_hamiltonian(&m).unwrap();
        let fock = m.fock();
        let he = DMatrix::from_diagonal(&fock.free_hamiltonian(&[1.5]));
        let hs = DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, -0.2]));
        let expected =
            hs.kronecker(&DMatrix::identity(6, 6)) + DMatrix::<f64>::identity(2, 2).kronecker(&he);
        assert_eq!(h, expected);
    }

    #[test]
    fn hamiltonian_is_symmetric_and_commutes_with_f() {
        let m = TruncatedModel::new(
            vec![-0.5, 0.0, 1.0],
            vec![0.1, 0.0, 0.7],
            vec![OracleMode::new(1.0, 0.2), OracleMode::new(2.3, -0.3)],
            6,
        )
        .unwrap();
        let h = build_hamiltonian(&m).unwrap();
        assert!((&h - h.transpose()).norm() < 1e-12);
        let f = DMatrix::from_diagonal(&DVector::from_vec(m.f_eigenvalues().to_vec()))
            .kronecker(&DMatrix::<f64>::identity(36, 36));
        assert_eq!(&h * &f - &f * &h, DMatrix::zeros(108, 108));
    }

    #[test]
    fn single_level_system() {
        let m = TruncatedModel::velocity(vec![0.7], vec![OracleMode::new(1.0, 0.3)], 10).unwrap();
        assert_eq!(build_hamiltonian(&m).unwrap().nrows(), 10);
    }

    #[test]
    fn velocity_ground_state_bound() {
        let m = TruncatedModel::velocity(vec![-1.0, 0.0, 1.0], vec![OracleMode::new(1.0, 0.5)], 40)
            .unwrap();
        let e = EvaluatedModel::new(m).unwrap();
        assert!(e.ground_energy() >= -0.25 - 1e-9);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(
            TruncatedModel::velocity(vec![0.0, 1.0], vec![OracleMode::new(1.0, 0.6)], 10).is_err()
        );
        assert!(TruncatedModel::velocity(vec![], vec![OracleMode::new(1.0, 0.1)], 10).is_err());
        assert!(TruncatedModel::velocity(vec![0.0], vec![OracleMode::new(0.0, 0.1)], 10).is_err());
        assert!(TruncatedModel::new(
            vec![0.0, 1.0],
            vec![0.0],
            vec![OracleMode::new(1.0, 0.1)],
            10
        )
        .is_err());
        let mut spec = one_mode(0.2, 10).spec().clone();
        spec.dim_cap = 5;
        assert!(matches!(
            TruncatedModel::try_from(spec),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn propagator_is_unitary() {
        let e = EvaluatedModel::new(one_mode(0.2, 20)).unwrap();
        let u = e.propagator(3.7).unwrap();
        let err = (u.adjoint() * &u - DMatrix::<Complex64>::identity(40, 40)).norm();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn free_precession_without_coupling() {
        let m = TruncatedModel::new(
            vec![0.0, 1.0],
            vec![0.0, 2.0],
            vec![OracleMode::new(1.0, 0.0)],
            8,
        )
        .unwrap();
        let rho0 = uniform_superposition(2);
        let times = [0.0, 0.5, 3.0];
        let evo = EvaluatedModel::new(m)
            .unwrap()
            .evolve_reduced(&rho0, &ReferenceState::vacuum(), &times)
            .unwrap();
        for (k, t) in times.iter().enumerate() {
            let expected = Complex64::from_polar(0.5, 2.0 * t);
            assert!((evo.states[k][(0, 1)] - expected).norm() < 1e-12);
        }
        assert_eq!(evo.states[0], rho0);
    }

    #[test]
    fn single_mode_modulus_law() {
        let g: f64 = 0.2;
        let e = EvaluatedModel::new(one_mode(g, 30)).unwrap();
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.5).collect();
        let evo = e
            .evolve_reduced(&uniform_superposition(2), &ReferenceState::vacuum(), &times)
            .unwrap();
        for (k, t) in times.iter().enumerate() {
            let expected = 0.5 * (-2.0 * g * g * (0.5 * t).sin().powi(2)).exp();
            assert!((evo.states[k][(0, 1)].norm() - expected).abs() < 1e-6);
            let diag = &evo.diagnostics[k];
            assert!(diag.trace_error < 1e-10 && diag.min_eigenvalue > -1e-10);
            assert!((evo.states[k][(0, 0)].re - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_invalid_density_matrix() {
        let e = EvaluatedModel::new(one_mode(0.2, 10)).unwrap();
        let bad = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(e
            .evolve_reduced(&bad, &ReferenceState::vacuum(), &[1.0])
            .is_err());
    }

    #[test]
    fn reference_gate() {
        let e = EvaluatedModel::new(one_mode(0.2, 8)).unwrap();
        let far = ReferenceState::coherent(Complex64::new(10.0, 0.0)).unwrap();
        assert!(matches!(
            e.evolve_reduced(&uniform_superposition(2), &far, &[1.0]),
            Err(Error::TruncationWarning { .. })
        ));
    }

    #[test]
    fn model_json_round_trip() {
        let m = one_mode(0.2, 12);
        let s = serde_json::to_string(&m).unwrap();
        let back: TruncatedModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
