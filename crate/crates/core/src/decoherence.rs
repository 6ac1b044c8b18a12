// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

//! Decoherence factor of the van Hove model.
//!
//! For a coherent reference state `f = ζ·h` the environment trace is
//!
//! ```text
//! χ(α,β;t) = exp(−(α−β)² ψ(t)/2 − i φ(t))
//! ψ(t)     = 4 ∫ λ^{-2} sin²(λt/2) dσ_h
//! φ(t)     = 2(α−β) ∫ λ^{-1} Im(ζ̄ (1 − e^{iλt})) dσ_h
//!          + (α²−β²) ∫ λ^{-2} (λt − sin λt) dσ_h
//! ```
//!
//! The last integrand is `m1·t − ∫λ^{-2} sin(λt) dσ_h` written as a single
//! non-negative integral. The sign in front of the sine term is fixed by
//! the truncated Fock-space oracle (see `tests/oracle_convention.rs`).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Fields, Result};
use crate::quadrature::QuadConfig;
use crate::spectral::{classify_ir, linear_fit, validate_coupling, IrClass, SpectralMeasure};

/// One component of a mixed reference state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub probability: f64,
    pub zeta: Complex64,
}

/// Wire form of [`ReferenceState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    Vacuum,
    #[serde(rename = "coherent")]
    CoherentAlongCoupling {
        zeta: Complex64,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
}

/// Initial state of the field: vacuum, a coherent state `f = ζ·h`, or a
/// finite mixture of such coherent states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReferenceWire", into = "ReferenceSpec")]
pub struct ReferenceState {
    spec: ReferenceSpec,
}

impl TryFrom<ReferenceSpec> for ReferenceState {
    type Error = Error;

    fn try_from(spec: ReferenceSpec) -> Result<Self> {
        match &spec {
            ReferenceSpec::Vacuum => {}
            ReferenceSpec::CoherentAlongCoupling { zeta } => {
                if !(zeta.re.is_finite() && zeta.im.is_finite()) {
                    return Err(Error::InvalidInput(
                        "coherent amplitude must be finite".into(),
                    ));
                }
            }
            ReferenceSpec::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidInput(
                        "mixture needs at least one component".into(),
                    ));
                }
                if components
                    .iter()
                    .any(|c| !(c.probability > 0.0 && c.probability.is_finite()))
                {
                    return Err(Error::InvalidInput(
                        "mixture probabilities must be positive".into(),
                    ));
                }
                let total: f64 = components.iter().map(|c| c.probability).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "mixture probabilities sum to {total}, not 1"
                    )));
                }
            }
        }
        Ok(Self { spec })
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum ReferenceKind {
    Vacuum,
    Coherent,
    Mixture,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceWire {
    kind: ReferenceKind,
    zeta: Option<Complex64>,
    components: Option<Vec<MixtureComponent>>,
}

impl TryFrom<ReferenceWire> for ReferenceState {
    type Error = Error;

    fn try_from(w: ReferenceWire) -> Result<Self> {
        let spec = match w.kind {
            ReferenceKind::Vacuum => {
                let f = Fields { kind: "vacuum" };
                f.forbid(&w.zeta, "zeta")?;
                f.forbid(&w.components, "components")?;
                ReferenceSpec::Vacuum
            }
            ReferenceKind::Coherent => {
                let f = Fields { kind: "coherent" };
                f.forbid(&w.components, "components")?;
                ReferenceSpec::CoherentAlongCoupling {
                    zeta: f.need(w.zeta, "zeta")?,
                }
            }
            ReferenceKind::Mixture => {
                let f = Fields { kind: "mixture" };
                f.forbid(&w.zeta, "zeta")?;
                ReferenceSpec::Mixture {
                    components: f.need(w.components, "components")?,
                }
            }
        };
        Self::try_from(spec)
    }
}

impl From<ReferenceState> for ReferenceSpec {
    fn from(r: ReferenceState) -> Self {
        r.spec
    }
}

impl Default for ReferenceState {
    fn default() -> Self {
        Self::vacuum()
    }
}

impl ReferenceState {
    pub fn vacuum() -> Self {
        Self {
            spec: ReferenceSpec::Vacuum,
        }
    }

    pub fn coherent(zeta: Complex64) -> Result<Self> {
        Self::try_from(ReferenceSpec::CoherentAlongCoupling { zeta })
    }

    pub fn mixture(components: Vec<(f64, Complex64)>) -> Result<Self> {
        Self::try_from(ReferenceSpec::Mixture {
            components: components
                .into_iter()
                .map(|(probability, zeta)| MixtureComponent { probability, zeta })
                .collect(),
        })
    }

    pub fn spec(&self) -> &ReferenceSpec {
        &self.spec
    }

    /// `(probability, ζ)` pairs; the vacuum is `ζ = 0` with probability one.
    pub fn components(&self) -> Vec<(f64, Complex64)> {
        match &self.spec {
            ReferenceSpec::Vacuum => vec![(1.0, Complex64::new(0.0, 0.0))],
            ReferenceSpec::CoherentAlongCoupling { zeta } => vec![(1.0, *zeta)],
            ReferenceSpec::Mixture { components } => {
                components.iter().map(|c| (c.probability, c.zeta)).collect()
            }
        }
    }

    pub fn is_pure(&self) -> bool {
        !matches!(self.spec, ReferenceSpec::Mixture { .. })
    }

    /// Largest `|ζ|` over the components.
    pub fn max_amplitude(&self) -> f64 {
        self.components()
            .iter()
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `(x − sin x)/x²`, accurate near zero.
fn lamb_kernel(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        x * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 / 362_880.0)))
    } else {
        (x - x.sin()) / (x * x)
    }
}

/// Breakpoints for integrands oscillating with period `2π/t` in `λ`,
/// preceded by the low-frequency split point `min(Λ, 1/t)`.
fn oscillation_breaks(measure: &SpectralMeasure, t: f64) -> Vec<f64> {
    if measure.is_discrete() || t == 0.0 {
        return Vec::new();
    }
    let top = measure.support_max();
    let split = top.min(1.0 / t);
    let period = 2.0 * PI / t;
    let n = (top / period).floor() as usize;
    let mut bp = Vec::with_capacity(n + 1);
    bp.push(split);
    bp.extend(
        (1..=n)
            .map(|k| k as f64 * period)
            .filter(|x| *x > split && *x < top),
    );
    bp
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }
    Ok(())
}

/// `ψ(t) = 4 ∫ λ^{-2} sin²(λt/2) dσ_h(λ)` with default quadrature settings.
pub fn psi(measure: &SpectralMeasure, t: f64) -> Result<f64> {
    psi_with(measure, t, &QuadConfig::default())
}

pub fn psi_with(measure: &SpectralMeasure, t: f64, cfg: &QuadConfig) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let bp = oscillation_breaks(measure, t);
    let t2 = t * t;
    measure.integrate_kernel(
        |x: f64| {
            let s = sinc(0.5 * x * t);
            t2 * s * s
        },
        &bp,
        cfg,
    )
}

/// The chain lower bound `ψ(t) ≥ (4/π²)·t²·σ_h(π/t)`.
pub fn psi_lower_bound(measure: &SpectralMeasure, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    4.0 / (PI * PI) * t * t * measure.cumulative(PI / t)
}

/// Time-dependent spectral integrals entering `χ(α,β;t)`; independent of
/// `α`, `β` and the reference state, so one evaluation serves a whole
/// `(α, β)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VanHoveTerms {
    pub t: f64,
    /// `ψ(t)`
    pub psi: f64,
    /// `∫ λ^{-1} sin(λt) dσ_h`
    pub sine: f64,
    /// `∫ λ^{-1} (1 − cos λt) dσ_h`
    pub cosine: f64,
    /// `∫ λ^{-2} (λt − sin λt) dσ_h`
    pub lamb: f64,
}

impl VanHoveTerms {
    /// Evaluate the four integrals. Requires `m1 < ∞`.
    pub fn compute(measure: &SpectralMeasure, t: f64, cfg: &QuadConfig) -> Result<Self> {
        check_time(t)?;
        if !measure.moment(1).is_finite() {
            return Err(Error::InvalidInput(
                "phase requires a finite ‖M^{-1/2}h‖ (m1 diverges)".into(),
            ));
        }
        if t == 0.0 {
            return Ok(Self {
                t,
                psi: 0.0,
                sine: 0.0,
                cosine: 0.0,
                lamb: 0.0,
            });
        }
        let bp = oscillation_breaks(measure, t);
        let t2 = t * t;
        let psi = measure.integrate_kernel(
            |x: f64| {
                let s = sinc(0.5 * x * t);
                t2 * s * s
            },
            &bp,
            cfg,
        )?;
        let sine = measure.integrate_kernel(|x: f64| t * sinc(x * t), &bp, cfg)?;
        let cosine = measure.integrate_kernel(
            |x: f64| {
                let s = sinc(0.5 * x * t);
                0.5 * x * t2 * s * s
            },
            &bp,
            cfg,
        )?;
        let lamb = measure.integrate_kernel(|x: f64| t2 * lamb_kernel(x * t), &bp, cfg)?;
        Ok(Self {
            t,
            psi,
            sine,
            cosine,
            lamb,
        })
    }

    /// `∫ λ^{-1} Im(ζ̄ (1 − e^{iλt})) dσ_h`.
    fn overlap(&self, zeta: Complex64) -> f64 {
        -zeta.re * self.sine - zeta.im * self.cosine
    }

    /// Phase `φ(t)` for a coherent state with amplitude `ζ`.
    pub fn phase(&self, alpha: f64, beta: f64, zeta: Complex64) -> f64 {
        2.0 * (alpha - beta) * self.overlap(zeta) + (alpha * alpha - beta * beta) * self.lamb
    }

    pub fn dphase_dalpha(&self, alpha: f64, zeta: Complex64) -> f64 {
        2.0 * self.overlap(zeta) + 2.0 * alpha * self.lamb
    }

    pub fn dphase_dbeta(&self, beta: f64, zeta: Complex64) -> f64 {
        -2.0 * self.overlap(zeta) - 2.0 * beta * self.lamb
    }

    /// Modulus factor `exp(−(α−β)²ψ/2)`.
    pub fn modulus(&self, alpha: f64, beta: f64) -> f64 {
        let d = alpha - beta;
        (-0.5 * d * d * self.psi).exp()
    }

    pub fn chi(&self, alpha: f64, beta: f64, reference: &ReferenceState) -> Complex64 {
        if alpha == beta {
            return Complex64::new(1.0, 0.0);
        }
        let m = self.modulus(alpha, beta);
        reference
            .components()
            .iter()
            .map(|&(p, z)| p * Complex64::from_polar(m, -self.phase(alpha, beta, z)))
            .sum()
    }

    /// `(∂χ/∂α, ∂χ/∂β)`.
    pub fn chi_gradient(
        &self,
        alpha: f64,
        beta: f64,
        reference: &ReferenceState,
    ) -> (Complex64, Complex64) {
        let d = alpha - beta;
        let m = self.modulus(alpha, beta);
        let mut ga = Complex64::new(0.0, 0.0);
        let mut gb = Complex64::new(0.0, 0.0);
        for (p, z) in reference.components() {
            let c = p * Complex64::from_polar(m, -self.phase(alpha, beta, z));
            ga += c * Complex64::new(-d * self.psi, -self.dphase_dalpha(alpha, z));
            gb += c * Complex64::new(d * self.psi, -self.dphase_dbeta(beta, z));
        }
        (ga, gb)
    }
}

/// Phase `φ(t)` for a pure reference state.
pub fn phase_phi(
    measure: &SpectralMeasure,
    alpha: f64,
    beta: f64,
    reference: &ReferenceState,
    t: f64,
) -> Result<f64> {
    let zeta = match reference.spec() {
        ReferenceSpec::Vacuum => Complex64::new(0.0, 0.0),
        ReferenceSpec::CoherentAlongCoupling { zeta } => *zeta,
        ReferenceSpec::Mixture { .. } => {
            return Err(Error::InvalidInput(
                "phase is defined per coherent component; use chi for mixtures".into(),
            ))
        }
    };
    let terms = VanHoveTerms::compute(measure, t, &QuadConfig::default())?;
    Ok(terms.phase(alpha, beta, zeta))
}

/// Environment trace `χ(α,β;t) = tr_E(e^{iH_α t} e^{−iH_β t} ω)`.
pub fn chi(
    measure: &SpectralMeasure,
    alpha: f64,
    beta: f64,
    reference: &ReferenceState,
    t: f64,
) -> Result<Complex64> {
    chi_with(measure, alpha, beta, reference, t, &QuadConfig::default())
}

pub fn chi_with(
    measure: &SpectralMeasure,
    alpha: f64,
    beta: f64,
    reference: &ReferenceState,
    t: f64,
    cfg: &QuadConfig,
) -> Result<Complex64> {
    if !validate_coupling(measure) {
        return Err(Error::InvalidInput(
            "coupling violates 2‖M^{-1/2}h‖ ≤ 1".into(),
        ));
    }
    check_time(t)?;
    if alpha == beta || t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok(VanHoveTerms::compute(measure, t, cfg)?.chi(alpha, beta, reference))
}

/// Factor multiplying the reduced density matrix element `ρ_ij` in the
/// joint eigenbasis of `H_S` and `F` (besides the free phase
/// `e^{−i(E_i−E_j)t}`): `χ(λ_j, λ_i; t)`, the complex conjugate of
/// `χ(λ_i, λ_j; t)`.
pub fn coherence_factor(
    measure: &SpectralMeasure,
    lambda_i: f64,
    lambda_j: f64,
    reference: &ReferenceState,
    t: f64,
) -> Result<Complex64> {
    chi(measure, lambda_j, lambda_i, reference, t)
}

/// Parameters recorded alongside a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    pub alpha: f64,
    pub beta: f64,
    pub measure: SpectralMeasure,
    pub reference: ReferenceState,
}

/// Sampled `ψ`, `φ` and `χ` on a time grid. For mixtures `phi` holds the
/// effective phase `−arg(Σ pᵢ e^{−iφᵢ})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceCurve {
    pub times: Vec<f64>,
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    pub chi: Vec<Complex64>,
    pub params: CurveParams,
}

pub const CURVE_CSV_HEADER: &str = "t,psi,phi,re_chi,im_chi,abs_chi";

impl DecoherenceCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.times.len() + 40);
        out.push_str(CURVE_CSV_HEADER);
        out.push('\n');
        for j in 0..self.times.len() {
            let c = self.chi[j];
            out.push_str(&crate::csv::row(&[
                Some(self.times[j]),
                Some(self.psi[j]),
                Some(self.phi[j]),
                Some(c.re),
                Some(c.im),
                Some(c.norm()),
            ]));
        }
        out
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("time grid is empty".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidInput(
            "time grid must be finite and non-negative".into(),
        ));
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidInput("time grid must be ascending".into()));
    }
    Ok(())
}

/// Evaluate a decoherence curve; grid points are computed in parallel.
pub fn curve(
    measure: &SpectralMeasure,
    alpha: f64,
    beta: f64,
    reference: &ReferenceState,
    times: &[f64],
) -> Result<DecoherenceCurve> {
    curve_with(
        measure,
        alpha,
        beta,
        reference,
        times,
        &QuadConfig::default(),
    )
}

pub fn curve_with(
    measure: &SpectralMeasure,
    alpha: f64,
    beta: f64,
    reference: &ReferenceState,
    times: &[f64],
    cfg: &QuadConfig,
) -> Result<DecoherenceCurve> {
    check_grid(times)?;
    if !validate_coupling(measure) {
        return Err(Error::InvalidInput(
            "coupling violates 2‖M^{-1/2}h‖ ≤ 1".into(),
        ));
    }
    let samples: Vec<(f64, f64, Complex64)> = times
        .par_iter()
        .map(|&t| {
            let terms = VanHoveTerms::compute(measure, t, cfg)?;
            let c = terms.chi(alpha, beta, reference);
            let phi = match reference.spec() {
                ReferenceSpec::Vacuum => terms.phase(alpha, beta, Complex64::new(0.0, 0.0)),
                ReferenceSpec::CoherentAlongCoupling { zeta } => terms.phase(alpha, beta, *zeta),
                ReferenceSpec::Mixture { .. } => {
                    let s: Complex64 = reference
                        .components()
                        .iter()
                        .map(|&(p, z)| p * Complex64::from_polar(1.0, -terms.phase(alpha, beta, z)))
                        .sum();
                    -s.arg()
                }
            };
            Ok((terms.psi, phi, c))
        })
        .collect::<Result<_>>()?;
    Ok(DecoherenceCurve {
        times: times.to_vec(),
        psi: samples.iter().map(|s| s.0).collect(),
        phi: samples.iter().map(|s| s.1).collect(),
        chi: samples.iter().map(|s| s.2).collect(),
        params: CurveParams {
            alpha,
            beta,
            measure: measure.clone(),
            reference: reference.clone(),
        },
    })
}

/// Least-squares slope of `log ψ` against `log t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

pub fn asymptotic_exponent(
    measure: &SpectralMeasure,
    t_lo: f64,
    t_hi: f64,
    n_samples: usize,
) -> Result<ExponentFit> {
    if !(t_lo > 0.0 && t_hi > t_lo && t_hi.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]"
        )));
    }
    if n_samples < 8 {
        return Err(Error::InvalidInput(format!(
            "need at least 8 samples, got {n_samples}"
        )));
    }
    if classify_ir(measure)? == IrClass::Regular {
        return Err(Error::RegularMeasure);
    }
    let ratio = (t_hi / t_lo).ln();
    let pts: Vec<(f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|j| {
            let t = t_lo * (ratio * j as f64 / (n_samples - 1) as f64).exp();
            psi(measure, t).map(|p| (t.ln(), p.ln()))
        })
        .collect::<Result<_>>()?;
    let fit = linear_fit(&pts);
    Ok(ExponentFit {
        slope: fit.slope,
        stderr: fit.slope_stderr,
        intercept: fit.intercept,
    })
}

fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Local minima `t* ∈ (0, horizon]` of `ψ` with `ψ(t*) < threshold`, for a
/// discrete bath. `ψ` is sampled at 64 points per shortest mode period and
/// each bracketed minimum is refined by golden-section search.
pub fn recurrence_scan(
    measure: &SpectralMeasure,
    horizon: f64,
    threshold: f64,
) -> Result<Vec<f64>> {
    let modes = measure
        .modes()
        .ok_or_else(|| Error::InvalidInput("recurrence scan needs a discrete measure".into()))?;
    if !(threshold > 0.0) {
        return Err(Error::InvalidInput("threshold must be positive".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidInput(
            "horizon must be positive and finite".into(),
        ));
    }
    let amps: Vec<(f64, f64)> = modes
        .iter()
        .filter(|m| m.weight > 0.0)
        .map(|m| (m.frequency, 4.0 * m.weight / (m.frequency * m.frequency)))
        .collect();
    let closed = |t: f64| -> f64 {
        amps.iter()
            .map(|&(w, a)| {
                let s = (0.5 * w * t).sin();
                a * s * s
            })
            .sum()
    };
    let w_max = amps.iter().map(|a| a.0).fold(0.0, f64::max);
    let dt = 2.0 * PI / w_max / 64.0;
    let n = (horizon / dt).ceil().max(2.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|j| horizon * j as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| closed(t)).collect();

    let mut found: Vec<f64> = Vec::new();
    for j in 1..=n {
        let left_ok = vals[j] <= vals[j - 1];
        let right_ok = j == n || vals[j] <= vals[j + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let hi = if j == n { grid[n] } else { grid[j + 1] };
        let t_star = golden_section_min(closed, grid[j - 1], hi);
        if t_star > 0.0
            && t_star <= horizon
            && closed(t_star) < threshold
            && found.last().is_none_or(|&prev| t_star - prev > 0.5 * dt)
        {
            found.push(t_star);
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(omega: f64, w: f64) -> SpectralMeasure {
        SpectralMeasure::from_modes(&[(omega, w)]).unwrap()
    }

    #[test]
    fn psi_closed_form_single_mode() {
        assert!((psi(&single(1.0, 1.0), PI).unwrap() - 4.0).abs() < 1e-14);
        assert_eq!(psi(&single(1.0, 1.0), 0.0).unwrap(), 0.0);
        let flat = SpectralMeasure::power_law(1.0, 0.0, 10.0).unwrap();
        assert_eq!(psi(&flat, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn psi_rejects_negative_time() {
        assert!(psi(&single(1.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn flat_measure_grows_like_pi_t() {
        let flat = SpectralMeasure::power_law(1.0, 0.0, 10.0).unwrap();
        let v = psi(&flat, 100.0).unwrap();
        assert!((v / (100.0 * PI) - 1.0).abs() < 0.01, "{v}");
    }

    #[test]
    fn phase_examples() {
        let m = single(1.0, 1.0);
        let vac = ReferenceState::vacuum();
        assert_eq!(phase_phi(&m, 0.7, 0.7, &vac, 3.0).unwrap(), 0.0);
        assert!((phase_phi(&m, 1.0, 0.0, &vac, PI).unwrap() - PI).abs() < 1e-12);
        let coh = ReferenceState::coherent(Complex64::new(0.0, 1.0)).unwrap();
        assert!((phase_phi(&m, 1.0, 0.0, &coh, 2.0 * PI).unwrap() - 2.0 * PI).abs() < 1e-12);
        let mix = ReferenceState::mixture(vec![(1.0, Complex64::new(0.0, 0.0))]).unwrap();
        assert!(phase_phi(&m, 1.0, 0.0, &mix, 1.0).is_err());
    }

    #[test]
    fn chi_examples() {
        let m = single(1.0, 0.1);
        let vac = ReferenceState::vacuum();
        let c = chi(&m, 1.0, 0.0, &vac, PI).unwrap();
        let want = Complex64::from_polar((-0.2f64).exp(), -0.1 * PI);
        assert!((c - want).norm() < 1e-14, "{c} vs {want}");
        assert_eq!(
            chi(&m, 0.3, 0.3, &vac, 5.0).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        assert_eq!(
            chi(&m, 1.0, -2.0, &vac, 0.0).unwrap(),
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn chi_requires_valid_coupling() {
        let strong = single(1.0, 1.0);
        assert!(chi(&strong, 1.0, 0.0, &ReferenceState::vacuum(), 1.0).is_err());
    }

    #[test]
    fn mixture_averages_components() {
        let m = single(1.3, 0.05);
        let z1 = Complex64::new(0.3, -0.2);
        let z2 = Complex64::new(-1.0, 0.5);
        let mix = ReferenceState::mixture(vec![(0.25, z1), (0.75, z2)]).unwrap();
        let t = 2.1;
        let c = chi(&m, 0.4, -0.9, &mix, t).unwrap();
        let c1 = chi(&m, 0.4, -0.9, &ReferenceState::coherent(z1).unwrap(), t).unwrap();
        let c2 = chi(&m, 0.4, -0.9, &ReferenceState::coherent(z2).unwrap(), t).unwrap();
        assert!((c - (0.25 * c1 + 0.75 * c2)).norm() < 1e-14);
        assert!(ReferenceState::mixture(vec![(0.5, z1), (0.4, z2)]).is_err());
    }

    #[test]
    fn curve_edge_cases() {
        let m = single(2.0, 0.1);
        let vac = ReferenceState::vacuum();
        let c = curve(&m, 1.0, 0.0, &vac, &[0.0]).unwrap();
        assert_eq!(c.chi, vec![Complex64::new(1.0, 0.0)]);
        let c = curve(&m, 1.0, 0.0, &vac, &[0.0, PI]).unwrap();
        assert_eq!(c.psi[0], 0.0);
        assert!(c.psi[1].abs() < 1e-30);
        assert!(curve(&m, 1.0, 0.0, &vac, &[]).is_err());
        assert!(curve(&m, 1.0, 0.0, &vac, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn curve_csv_layout() {
        let m = single(1.0, 0.1);
        let c = curve(&m, 1.0, 1.0, &ReferenceState::vacuum(), &[0.0, 1.0]).unwrap();
        let csv = c.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CURVE_CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[2].ends_with(",1,0,1"), "{}", lines[2]);
    }

    #[test]
    fn exponent_rejects_regular() {
        let err = asymptotic_exponent(&single(1.0, 0.1), 100.0, 1e4, 16).unwrap_err();
        assert_eq!(err, Error::RegularMeasure);
        let flat = SpectralMeasure::power_law(1.0, 0.0, 10.0).unwrap();
        assert!(asymptotic_exponent(&flat, 100.0, 1e4, 4).is_err());
    }

    #[test]
    fn recurrence_examples() {
        let r = recurrence_scan(&single(1.0, 1.0), 10.0, 1e-12).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 2.0 * PI).abs() < 1e-6);
        let two = SpectralMeasure::from_modes(&[(1.0, 1.0), (3.0, 0.5)]).unwrap();
        let r = recurrence_scan(&two, 10.0, 1e-12).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 2.0 * PI).abs() < 1e-6);
        let incomm = SpectralMeasure::from_modes(&[(1.0, 1.0), (2f64.sqrt(), 1.0)]).unwrap();
        assert!(recurrence_scan(&incomm, 10.0, 1e-12).unwrap().is_empty());
        let flat = SpectralMeasure::power_law(1.0, 0.0, 10.0).unwrap();
        assert!(recurrence_scan(&flat, 10.0, 1e-12).is_err());
    }

    #[test]
    fn lamb_kernel_is_continuous_at_switch() {
        let below = lamb_kernel(0.1 - 1e-12);
        let above = lamb_kernel(0.1 + 1e-12);
        assert!((below - above).abs() < 1e-12);
    }
}
