// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest dense dimension the oracle will allocate by default.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Maximum number of field modes.
pub const MAX_MODES: usize = 2;

/// Tensor product of `modes` truncated oscillators, each keeping the Fock
/// levels `0..cutoff`. Basis index `Σ n_k · N^{modes−1−k}`, mode 0 most
/// significant, matching `kron(A_0, A_1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    cutoff: usize,
    modes: usize,
}

impl FockSpace {
    pub fn new(cutoff: usize, modes: usize) -> Result<Self> {
        Self::with_cap(cutoff, modes, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(cutoff: usize, modes: usize, cap: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::InvalidInput(format!(
                "Fock cutoff must be at least 2, got {cutoff}"
            )));
        }
        if modes == 0 || modes > MAX_MODES {
            return Err(Error::InvalidInput(format!(
                "oracle supports 1 to {MAX_MODES} modes, got {modes}"
            )));
        }
        let dim = cutoff
            .checked_pow(modes as u32)
            .ok_or(Error::DimensionOverflow {
                dim: usize::MAX,
                cap,
            })?;
        if dim > cap {
            return Err(Error::DimensionOverflow { dim, cap });
        }
        Ok(Self { cutoff, modes })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.modes as u32)
    }

    /// Occupation numbers of basis state `index`.
    pub fn levels(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.modes];
        let mut r = index;
        for k in (0..self.modes).rev() {
            out[k] = r % self.cutoff;
            r /= self.cutoff;
        }
        out
    }

    pub fn index(&self, levels: &[usize]) -> usize {
        levels.iter().fold(0, |acc, n| acc * self.cutoff + n)
    }

    /// Basis states with every occupation at most `max_level`.
    pub fn low_occupation(&self, max_level: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&j| self.levels(j).iter().all(|&n| n <= max_level))
            .collect()
    }

    /// Basis states with some mode on the highest kept level.
    pub fn touches_top(&self, index: usize) -> bool {
        self.levels(index).iter().any(|&n| n + 1 == self.cutoff)
    }

    fn embed(&self, single: &DMatrix<f64>, mode: usize) -> DMatrix<f64> {
        let id = DMatrix::<f64>::identity(self.cutoff, self.cutoff);
        let mut out = DMatrix::<f64>::identity(1, 1);
        for k in 0..self.modes {
            out = out.kronecker(if k == mode { single } else { &id });
        }
        out
    }

    fn single_annihilation(&self) -> DMatrix<f64> {
        let n = self.cutoff;
        DMatrix::from_fn(
            n,
            n,
            |r, c| if c == r + 1 { (c as f64).sqrt() } else { 0.0 },
        )
    }

    /// Truncated `a_k`.
    pub fn annihilation(&self, mode: usize) -> DMatrix<f64> {
        self.embed(&self.single_annihilation(), mode)
    }

    /// Truncated `a_k⁺`.
    pub fn creation(&self, mode: usize) -> DMatrix<f64> {
        self.annihilation(mode).transpose()
    }

    /// Diagonal of `a_k⁺ a_k`.
    pub fn number(&self, mode: usize) -> DVector<f64> {
        DVector::from_fn(self.dim(), |j, _| self.levels(j)[mode] as f64)
    }

    /// Diagonal of `H_E = Σ ω_k a_k⁺ a_k`.
    pub fn free_hamiltonian(&self, frequencies: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.dim(), |j, _| {
            self.levels(j)
                .iter()
                .zip(frequencies)
                .map(|(&n, w)| n as f64 * w)
                .sum()
        })
    }

    /// `Φ(h) = a(h) + a⁺(h)` for real couplings `h_k`.
    pub fn field(&self, couplings: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::<f64>::zeros(self.dim(), self.dim());
        for (k, &g) in couplings.iter().enumerate() {
            if g != 0.0 {
                let a = self.annihilation(k);
                out += (&a + a.transpose()) * g;
            }
        }
        out
    }

    pub fn vacuum(&self) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.dim());
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    fn single_displacement(&self, g: Complex64) -> DMatrix<Complex64> {
        let n = self.cutoff;
        if g == Complex64::new(0.0, 0.0) {
            return DMatrix::identity(n, n);
        }
        let a = self.single_annihilation().map(|x| Complex64::new(x, 0.0));
        let generator = a.adjoint() * g - &a * g.conj();
        let hermitian = generator * Complex64::new(0.0, 1.0);
        let eig = hermitian.symmetric_eigen();
        let phases =
            DMatrix::from_diagonal(&eig.eigenvalues.map(|d| Complex64::from_polar(1.0, -d)));
        &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
    }

    /// Mean occupation `Σ|g_k|²` checked against the truncation gate
    /// `N/4`.
    pub fn gate(&self, amplitudes: &[Complex64]) -> Result<f64> {
        let value: f64 = amplitudes.iter().map(|g| g.norm_sqr()).sum();
        let limit = self.cutoff as f64 / 4.0;
        if value > limit {
            return Err(Error::TruncationWarning { value, limit });
        }
        Ok(value)
    }
}

/// Weyl operator `T(g) = exp(a⁺(g) − a(g))` on the truncated space, with
/// `a⁺(g) = Σ g_k a_k⁺`.
pub fn displacement(amplitudes: &[Complex64], fock: &FockSpace) -> Result<DMatrix<Complex64>> {
    if amplitudes.len() != fock.modes() {
        return Err(Error::InvalidInput(format!(
            "{} amplitudes for {} modes",
            amplitudes.len(),
            fock.modes()
        )));
    }
    if amplitudes
        .iter()
        .any(|g| !(g.re.is_finite() && g.im.is_finite()))
    {
        return Err(Error::InvalidInput("amplitudes must be finite".into()));
    }
    fock.gate(amplitudes)?;
    let mut out = DMatrix::<Complex64>::identity(1, 1);
    for &g in amplitudes {
        out = out.kronecker(&fock.single_displacement(g));
    }
    Ok(out)
}

/// Spectral norm of the principal sub-matrix on `indices`.
pub fn block_norm(m: &DMatrix<Complex64>, indices: &[usize]) -> f64 {
    let sub = m.select_rows(indices).select_columns(indices);
    sub.singular_values().max()
}
