// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::fock::{block_norm, displacement, FockSpace};
use super::model::{check_semibounded, infrared_norm_sqr, validate_modes, OracleMode};
use crate::error::{Error, Result};

fn check_modes(modes: &[OracleMode], fock: &FockSpace) -> Result<()> {
    validate_modes(modes)?;
    if modes.len() != fock.modes() {
        return Err(Error::InvalidInput(format!(
            "{} modes for a {}-mode Fock space",
            modes.len(),
            fock.modes()
        )));
    }
    Ok(())
}

fn frequencies(modes: &[OracleMode]) -> Vec<f64> {
    modes.iter().map(|m| m.frequency).collect()
}

fn couplings(modes: &[OracleMode]) -> Vec<f64> {
    modes.iter().map(|m| m.coupling).collect()
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Outcome of the relative-bound sweep
/// `‖Φ(h)ψ‖ ≤ 2‖M^{-1/2}h‖ ‖H_E^{1/2}ψ‖ + ‖h‖ ‖ψ‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldBoundReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` seen (1 means equality).
    pub max_ratio: f64,
}

/// Both sides of the field bound for one vector.
pub fn field_bound_sides(
    modes: &[OracleMode],
    fock: &FockSpace,
    psi: &DVector<Complex64>,
) -> Result<(f64, f64)> {
    check_modes(modes, fock)?;
    let phi = to_complex(&fock.field(&couplings(modes)));
    let he = fock.free_hamiltonian(&frequencies(modes));
    let lhs = (phi * psi).norm();
    let energy: f64 = psi
        .iter()
        .zip(he.iter())
        .map(|(c, e)| c.norm_sqr() * e)
        .sum();
    let h_norm = couplings(modes).iter().map(|g| g * g).sum::<f64>().sqrt();
    let rhs = 2.0 * infrared_norm_sqr(modes).sqrt() * energy.sqrt() + h_norm * psi.norm();
    Ok((lhs, rhs))
}

/// Sample `trials` random vectors supported on Fock levels `≤ N−2`, where
/// the truncated field acts exactly, and test the bound on each.
pub fn check_field_bound(
    modes: &[OracleMode],
    fock: &FockSpace,
    trials: usize,
    seed: u64,
) -> Result<FieldBoundReport> {
    check_modes(modes, fock)?;
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let support = fock.low_occupation(fock.cutoff() - 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for _ in 0..trials {
        // Geometric envelope so that near-vacuum vectors, where the bound
        // is tight, are sampled as often as spread-out ones.
        let r: f64 = rng.random_range(0.05..1.0);
        let mut psi = DVector::<Complex64>::zeros(fock.dim());
        for &j in &support {
            let n: usize = fock.levels(j).iter().sum();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            psi[j] = Complex64::new(re, im) * r.powi(n as i32);
        }
        let norm = psi.norm();
        psi /= Complex64::new(norm, 0.0);
        let (lhs, rhs) = field_bound_sides(modes, fock, &psi)?;
        if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
            violations += 1;
        }
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
    }
    Ok(FieldBoundReport {
        trials,
        violations,
        max_ratio,
    })
}

/// Lowest eigenvalue of the truncated `H_E − ½Φ(h)²`.
pub fn lower_bound_min_eig(modes: &[OracleMode], fock: &FockSpace) -> Result<f64> {
    check_modes(modes, fock)?;
    let phi = fock.field(&couplings(modes));
    let mut op = &phi * &phi * -0.5;
    let he = fock.free_hamiltonian(&frequencies(modes));
    for j in 0..fock.dim() {
        op[(j, j)] += he[j];
    }
    Ok(SymmetricEigen::new(op).eigenvalues.min())
}

/// Semiboundedness check `H_E − ½Φ(h)² ≥ −‖h‖²` at cutoff `N`, with the
/// truncation error estimated by comparing against cutoff `2N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub cutoff: usize,
    pub min_eig: f64,
    pub min_eig_doubled: f64,
    /// `|min_eig(N) − min_eig(2N)|`.
    pub eps_trunc: f64,
    /// `−Σ g_k²`.
    pub bound: f64,
    pub holds: bool,
}

pub fn check_lower_bound(modes: &[OracleMode], fock: &FockSpace) -> Result<LowerBoundReport> {
    check_modes(modes, fock)?;
    check_semibounded(modes)?;
    let doubled = FockSpace::new(2 * fock.cutoff(), fock.modes())?;
    let min_eig = lower_bound_min_eig(modes, fock)?;
    let min_eig_doubled = lower_bound_min_eig(modes, &doubled)?;
    let eps_trunc = (min_eig - min_eig_doubled).abs();
    let bound = -couplings(modes).iter().map(|g| g * g).sum::<f64>();
    Ok(LowerBoundReport {
        cutoff: fock.cutoff(),
        min_eig,
        min_eig_doubled,
        eps_trunc,
        bound,
        holds: min_eig >= bound - eps_trunc - 1e-12,
    })
}

/// Residual of `T⁺(M^{-1}h) H_E T(M^{-1}h) − ‖M^{-1/2}h‖² = H_E + Φ(h)` on
/// the sub-block of Fock levels `≤ N/2`.
pub fn check_cook_identity(modes: &[OracleMode], fock: &FockSpace) -> Result<f64> {
    check_modes(modes, fock)?;
    let shift: Vec<Complex64> = modes
        .iter()
        .map(|m| Complex64::new(m.coupling / m.frequency, 0.0))
        .collect();
    let t = displacement(&shift, fock)?;
    let he = to_complex(&DMatrix::from_diagonal(
        &fock.free_hamiltonian(&frequencies(modes)),
    ));
    let mut lhs = t.adjoint() * &he * &t;
    let c = infrared_norm_sqr(modes);
    for j in 0..fock.dim() {
        lhs[(j, j)] -= Complex64::new(c, 0.0);
    }
    let rhs = he + to_complex(&fock.field(&couplings(modes)));
    Ok(block_norm(
        &(lhs - rhs),
        &fock.low_occupation(fock.cutoff() / 2),
    ))
}

/// Residual of `U⁺(t) T(g) U(t) = T(e^{iMt} g)`, `U(t) = e^{−iH_E t}`, on
/// the low-occupation sub-block.
pub fn check_weyl_dynamics(
    modes: &[OracleMode],
    fock: &FockSpace,
    g: &[Complex64],
    t: f64,
) -> Result<f64> {
    check_modes(modes, fock)?;
    if !t.is_finite() {
        return Err(Error::InvalidInput("t must be finite".into()));
    }
    let tg = displacement(g, fock)?;
    let u = DVector::from_iterator(
        fock.dim(),
        fock.free_hamiltonian(&frequencies(modes))
            .iter()
            .map(|e| Complex64::from_polar(1.0, -e * t)),
    );
    // U diagonal: (U⁺ T U)_{rs} = conj(u_r) T_rs u_s.
    let lhs = DMatrix::from_fn(fock.dim(), fock.dim(), |r, s| {
        u[r].conj() * tg[(r, s)] * u[s]
    });
    let rotated: Vec<Complex64> = g
        .iter()
        .zip(modes)
        .map(|(gk, m)| gk * Complex64::from_polar(1.0, m.frequency * t))
        .collect();
    let rhs = displacement(&rotated, fock)?;
    Ok(block_norm(
        &(lhs - rhs),
        &fock.low_occupation(fock.cutoff() / 2),
    ))
}

/// `Im (f|g)` with `(f|g) = Σ conj(f_k) g_k`.
fn im_inner(f: &[Complex64], g: &[Complex64]) -> f64 {
    f.iter()
        .zip(g)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        .im
}

/// Residual of `T(g1) T(g2) = e^{−i Im(g1|g2)} T(g1+g2)` on the
/// low-occupation sub-block.
pub fn weyl_composition_residual(
    g1: &[Complex64],
    g2: &[Complex64],
    fock: &FockSpace,
) -> Result<f64> {
    if g1.len() != g2.len() {
        return Err(Error::InvalidInput(
            "amplitude vectors differ in length".into(),
        ));
    }
    let lhs = displacement(g1, fock)? * displacement(g2, fock)?;
    let sum: Vec<Complex64> = g1.iter().zip(g2).map(|(a, b)| a + b).collect();
    let rhs = displacement(&sum, fock)? * Complex64::from_polar(1.0, -im_inner(g1, g2));
    Ok(block_norm(
        &(lhs - rhs),
        &fock.low_occupation(fock.cutoff() / 2),
    ))
}

/// `⟨vac|T(g)|vac⟩`, which should equal `exp(−‖g‖²/2)`.
pub fn vacuum_expectation(g: &[Complex64], fock: &FockSpace) -> Result<Complex64> {
    Ok(displacement(g, fock)?[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn field_bound_vacuum_equality() {
        let modes = [OracleMode::new(1.3, 0.4)];
        let fock = FockSpace::new(10, 1).unwrap();
        let (lhs, rhs) = field_bound_sides(&modes, &fock, &fock.vacuum()).unwrap();
        assert!((lhs - 0.4).abs() < 1e-15 && (rhs - 0.4).abs() < 1e-15);
    }

    #[test]
    fn field_bound_zero_coupling() {
        let modes = [OracleMode::new(1.0, 0.0)];
        let fock = FockSpace::new(10, 1).unwrap();
        let r = check_field_bound(&modes, &fock, 5, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.max_ratio, 0.0);
    }

    #[test]
    fn field_bound_sweep() {
        let modes = [OracleMode::new(1.0, 0.3)];
        let fock = FockSpace::new(24, 1).unwrap();
        let r = check_field_bound(&modes, &fock, 200, 7).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.max_ratio <= 1.0 && r.max_ratio > 0.5);
        assert!(check_field_bound(&modes, &fock, 0, 7).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        let fock = FockSpace::new(20, 1).unwrap();
        let zero = check_lower_bound(&[OracleMode::new(1.0, 0.0)], &fock).unwrap();
        assert_eq!(zero.min_eig, 0.0);
        let r1 = check_lower_bound(&[OracleMode::new(1.0, 0.5)], &fock).unwrap();
        let exact = 0.5 * (1.0f64 * (1.0 - 0.5)).sqrt() - 0.5;
        assert!((r1.min_eig - exact).abs() < 1e-10);
        assert!(r1.holds && r1.min_eig >= -0.25);
        let r2 = check_lower_bound(&[OracleMode::new(2.0, 0.5)], &fock).unwrap();
        assert!(r2.holds && r2.min_eig > r1.min_eig);
    }

    #[test]
    fn cook_identity_converges() {
        let modes = [OracleMode::new(0.16, 0.2)];
        let res: Vec<f64> = [10, 20, 40, 80]
            .iter()
            .map(|&n| check_cook_identity(&modes, &FockSpace::new(n, 1).unwrap()).unwrap())
            .collect();
        assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
        assert!(res[3] < 1e-10);
        let zero = check_cook_identity(
            &[OracleMode::new(1.0, 0.0)],
            &FockSpace::new(10, 1).unwrap(),
        )
        .unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn weyl_dynamics_examples() {
        let modes = [OracleMode::new(1.0, 0.2)];
        let fock = FockSpace::new(40, 1).unwrap();
        let g = [c(0.5, 0.0)];
        assert!(check_weyl_dynamics(&modes, &fock, &g, 0.0).unwrap() < 1e-14);
        assert!(check_weyl_dynamics(&modes, &fock, &g, 2.0 * std::f64::consts::PI).unwrap() < 1e-8);
        assert!(check_weyl_dynamics(&modes, &fock, &[c(0.3, -0.2)], 1.234).unwrap() < 1e-8);
    }

    #[test]
    fn weyl_composition_and_vacuum() {
        let fock = FockSpace::new(40, 1).unwrap();
        let g1 = [c(0.3, 0.2)];
        let g2 = [c(-0.1, 0.35)];
        assert!(weyl_composition_residual(&g1, &g2, &fock).unwrap() < 1e-8);
        let v = vacuum_expectation(&g1, &fock).unwrap();
        assert!((v - c((-0.5 * 0.13f64).exp(), 0.0)).norm() < 1e-8);
    }

    #[test]
    fn two_mode_checks() {
        let modes = [OracleMode::new(1.0, 0.2), OracleMode::new(2.5, 0.3)];
        let fock = FockSpace::new(16, 2).unwrap();
        let g1 = [c(0.2, 0.1), c(-0.1, 0.2)];
        let g2 = [c(0.1, -0.3), c(0.2, 0.0)];
        assert!(weyl_composition_residual(&g1, &g2, &fock).unwrap() < 1e-8);
        assert!(check_weyl_dynamics(&modes, &fock, &g1, 0.7).unwrap() < 1e-8);
        assert!(check_cook_identity(&modes, &fock).unwrap() < 1e-6);
        assert_eq!(
            check_field_bound(&modes, &fock, 50, 3).unwrap().violations,
            0
        );
        assert!(
            check_lower_bound(&modes, &FockSpace::new(12, 2).unwrap())
                .unwrap()
                .holds
        );
    }
}
