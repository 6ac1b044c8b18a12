// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

//! Heisenberg observables assembled from spectral data and the uniform
//! bound on their off-diagonal sector blocks:
//!
//! ```text
//! A(t) = e^{iH_S t} (Σ_{a,b} χ(λ_a, λ_b; t) P_a A P_b) e^{−iH_S t}
//! ‖P(Δ1) A(t) P(Δ2)‖ ≤ (2 c1 + |Δ2| c2) ‖A‖
//! ```
//!
//! with `c1 = sup |χ|` and `c2 = sup |∂χ|` over `Δ1 × Δ2`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoherence::{ReferenceState, VanHoveTerms};
use crate::envmodels::{chi_fourier, FourierEnvironment};
use crate::error::{Error, Fields, Result};
use crate::quadrature::QuadConfig;
use crate::spectral::{linear_fit, validate_coupling, SpectralMeasure};

/// Slack allowed on the bound before a violation is reported.
pub const BOUND_SLACK: f64 = 1e-9;

/// Closed real interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from([lo, hi]: [f64; 2]) -> Result<Self> {
        Self::new(lo, hi)
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidInput(format!(
                "[{lo}, {hi}] is not a closed interval"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Result<Self> {
        Self::new(x, x)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Distance between two intervals; zero when they meet.
    pub fn distance(&self, other: &Interval) -> f64 {
        (other.lo - self.hi).max(self.lo - other.hi).max(0.0)
    }

    /// `n` equally spaced nodes including both ends.
    fn nodes(&self, n: usize) -> Vec<f64> {
        if self.length() == 0.0 || n < 2 {
            return vec![self.lo];
        }
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.hi
                } else {
                    self.lo + self.length() * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// Wire form of [`SectorSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorSpecWire {
    pub f_eigenvalues: Vec<f64>,
    /// Eigenvalues of `H_S` in the same basis; zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hs_eigenvalues: Option<Vec<f64>>,
    pub delta1: Interval,
    pub delta2: Interval,
}

/// Pointer observable `F = Σ λ_a P_a` with rank-one projections on the
/// basis vectors, a commuting `H_S`, and two separated spectral windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SectorSpecWire", into = "SectorSpecWire")]
pub struct SectorSpec {
    lambdas: Vec<f64>,
    energies: Vec<f64>,
    delta1: Interval,
    delta2: Interval,
    energies_given: bool,
}

impl TryFrom<SectorSpecWire> for SectorSpec {
    type Error = Error;

    fn try_from(w: SectorSpecWire) -> Result<Self> {
        let given = w.hs_eigenvalues.is_some();
        let energies = w
            .hs_eigenvalues
            .unwrap_or_else(|| vec![0.0; w.f_eigenvalues.len()]);
        Self::build(w.f_eigenvalues, energies, w.delta1, w.delta2, given)
    }
}

impl From<SectorSpec> for SectorSpecWire {
    fn from(s: SectorSpec) -> Self {
        Self {
            hs_eigenvalues: s.energies_given.then(|| s.energies.clone()),
            f_eigenvalues: s.lambdas,
            delta1: s.delta1,
            delta2: s.delta2,
        }
    }
}

impl SectorSpec {
    pub fn new(
        lambdas: Vec<f64>,
        energies: Vec<f64>,
        delta1: Interval,
        delta2: Interval,
    ) -> Result<Self> {
        Self::build(lambdas, energies, delta1, delta2, true)
    }

    fn build(
        lambdas: Vec<f64>,
        energies: Vec<f64>,
        delta1: Interval,
        delta2: Interval,
        given: bool,
    ) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidInput("need at least one F eigenvalue".into()));
        }
        if lambdas.len() != energies.len() {
            return Err(Error::InvalidInput(
                "need one H_S eigenvalue per F eigenvalue".into(),
            ));
        }
        if lambdas.iter().chain(&energies).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("eigenvalues must be finite".into()));
        }
        if !(delta1.distance(&delta2) > 0.0) {
            return Err(Error::InvalidInput(
                "Δ1 and Δ2 must be a positive distance apart".into(),
            ));
        }
        Ok(Self {
            lambdas,
            energies,
            delta1,
            delta2,
            energies_given: given,
        })
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn f_eigenvalues(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn hs_eigenvalues(&self) -> &[f64] {
        &self.energies
    }

    pub fn delta1(&self) -> Interval {
        self.delta1
    }

    pub fn delta2(&self) -> Interval {
        self.delta2
    }

    /// `δ = dist(Δ1, Δ2)`.
    pub fn gap(&self) -> f64 {
        self.delta1.distance(&self.delta2)
    }

    /// Basis indices spanning the range of `P(Δ)`.
    pub fn indices_in(&self, delta: &Interval) -> Vec<usize> {
        (0..self.dim())
            .filter(|&a| delta.contains(self.lambdas[a]))
            .collect()
    }

    /// Diagonal of `P(Δ)`.
    pub fn projection(&self, delta: &Interval) -> Vec<f64> {
        self.lambdas
            .iter()
            .map(|&l| if delta.contains(l) { 1.0 } else { 0.0 })
            .collect()
    }
}

/// `χ(·,·;t)` at a fixed time.
pub trait KernelSlice: Send + Sync {
    fn value(&self, alpha: f64, beta: f64) -> Result<Complex64>;

    /// `(∂χ/∂α, ∂χ/∂β)` when available in closed form.
    fn gradient(&self, _alpha: f64, _beta: f64) -> Option<Result<(Complex64, Complex64)>> {
        None
    }

    /// `ψ(t)` such that `|χ| = exp(−(α−β)²ψ/2)`, when the kernel has that
    /// form.
    fn spread(&self) -> Option<f64> {
        None
    }
}

/// A dephasing kernel `(α, β, t) ↦ χ(α,β;t)` with `χ(α,α;t) = 1`.
pub trait DephasingKernel: Send + Sync {
    fn at(&self, t: f64) -> Result<Box<dyn KernelSlice + '_>>;
}

/// Closed-form van Hove factor for a spectral measure and reference state.
#[derive(Debug, Clone, PartialEq)]
pub struct VanHoveKernel {
    measure: SpectralMeasure,
    reference: ReferenceState,
    cfg: QuadConfig,
}

impl VanHoveKernel {
    pub fn new(measure: SpectralMeasure, reference: ReferenceState) -> Result<Self> {
        if !validate_coupling(&measure) {
            return Err(Error::InvalidInput(
                "coupling violates 2‖M^{-1/2}h‖ ≤ 1".into(),
            ));
        }
        Ok(Self {
            measure,
            reference,
            cfg: QuadConfig::default(),
        })
    }
}

struct VanHoveSlice<'a> {
    terms: VanHoveTerms,
    reference: &'a ReferenceState,
}

impl KernelSlice for VanHoveSlice<'_> {
    fn value(&self, alpha: f64, beta: f64) -> Result<Complex64> {
        Ok(self.terms.chi(alpha, beta, self.reference))
    }

    fn gradient(&self, alpha: f64, beta: f64) -> Option<Result<(Complex64, Complex64)>> {
        Some(Ok(self.terms.chi_gradient(alpha, beta, self.reference)))
    }

    fn spread(&self) -> Option<f64> {
        Some(self.terms.psi)
    }
}

impl DephasingKernel for VanHoveKernel {
    fn at(&self, t: f64) -> Result<Box<dyn KernelSlice + '_>> {
        Ok(Box::new(VanHoveSlice {
            terms: VanHoveTerms::compute(&self.measure, t, &self.cfg)?,
            reference: &self.reference,
        }))
    }
}

/// `χ = exp(i m s − σ² s²/2)`, `s = (α−β)t`: the commuting-environment
/// factor of a normal density, in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    pub mean: f64,
    pub sigma: f64,
}

struct GaussianSlice {
    kernel: GaussianKernel,
    t: f64,
}

impl KernelSlice for GaussianSlice {
    fn value(&self, alpha: f64, beta: f64) -> Result<Complex64> {
        let s = (alpha - beta) * self.t;
        let sg = self.kernel.sigma * s;
        Ok(Complex64::from_polar(
            (-0.5 * sg * sg).exp(),
            self.kernel.mean * s,
        ))
    }

    fn gradient(&self, alpha: f64, beta: f64) -> Option<Result<(Complex64, Complex64)>> {
        let s = (alpha - beta) * self.t;
        let v = self.value(alpha, beta).ok()?;
        let ds = v * Complex64::new(-self.kernel.sigma * self.kernel.sigma * s, self.kernel.mean);
        Some(Ok((ds * self.t, -ds * self.t)))
    }

    fn spread(&self) -> Option<f64> {
        Some(self.kernel.sigma * self.kernel.sigma * self.t * self.t)
    }
}

impl DephasingKernel for GaussianKernel {
    fn at(&self, t: f64) -> Result<Box<dyn KernelSlice + '_>> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite() && self.mean.is_finite() && t.is_finite())
        {
            return Err(Error::InvalidInput(
                "gaussian kernel needs finite mean, sigma ≥ 0 and t".into(),
            ));
        }
        Ok(Box::new(GaussianSlice { kernel: *self, t }))
    }
}

/// `χ(s)` of a [`FourierEnvironment`] evaluated by quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierKernel {
    pub env: FourierEnvironment,
}

struct FourierSlice<'a> {
    env: &'a FourierEnvironment,
    t: f64,
}

impl KernelSlice for FourierSlice<'_> {
    fn value(&self, alpha: f64, beta: f64) -> Result<Complex64> {
        if alpha == beta {
            return Ok(Complex64::new(1.0, 0.0));
        }
        chi_fourier(self.env, (alpha - beta) * self.t, 0)
    }

    fn gradient(&self, alpha: f64, beta: f64) -> Option<Result<(Complex64, Complex64)>> {
        Some(chi_fourier(self.env, (alpha - beta) * self.t, 1).map(|d| (d * self.t, -d * self.t)))
    }
}

impl DephasingKernel for FourierKernel {
    fn at(&self, t: f64) -> Result<Box<dyn KernelSlice + '_>> {
        Ok(Box::new(FourierSlice { env: &self.env, t }))
    }
}

type KernelFn = dyn Fn(f64, f64, f64) -> Complex64 + Send + Sync;

/// Arbitrary kernel from a closure `(α, β, t) ↦ χ`; derivatives only by
/// finite differences.
pub struct FnKernel {
    f: Box<KernelFn>,
}

impl FnKernel {
    pub fn new(f: impl Fn(f64, f64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { f: Box::new(f) }
    }
}

struct FnSlice<'a> {
    f: &'a KernelFn,
    t: f64,
}

impl KernelSlice for FnSlice<'_> {
    fn value(&self, alpha: f64, beta: f64) -> Result<Complex64> {
        Ok((self.f)(alpha, beta, self.t))
    }
}

impl DephasingKernel for FnKernel {
    fn at(&self, t: f64) -> Result<Box<dyn KernelSlice + '_>> {
        Ok(Box::new(FnSlice { f: &*self.f, t }))
    }
}

fn check_operator(a: &DMatrix<Complex64>, spec: &SectorSpec) -> Result<()> {
    if a.nrows() != spec.dim() || a.ncols() != spec.dim() {
        return Err(Error::InvalidInput(format!(
            "operator must be {0}×{0}, got {1}×{2}",
            spec.dim(),
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

fn assemble_slice(
    a: &DMatrix<Complex64>,
    spec: &SectorSpec,
    slice: &dyn KernelSlice,
    t: f64,
) -> Result<DMatrix<Complex64>> {
    check_operator(a, spec)?;
    let l = spec.f_eigenvalues();
    for &x in l {
        let c = slice.value(x, x)?;
        if (c - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "kernel has χ(α,α) = {c} ≠ 1 at α = {x}"
            )));
        }
    }
    let free: Vec<Complex64> = spec
        .hs_eigenvalues()
        .iter()
        .map(|e| Complex64::from_polar(1.0, e * t))
        .collect();
    let d = spec.dim();
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    for b in 0..d {
        for r in 0..d {
            let x = a[(r, b)];
            if x != Complex64::new(0.0, 0.0) {
                out[(r, b)] = free[r] * slice.value(l[r], l[b])? * x * free[b].conj();
            }
        }
    }
    Ok(out)
}

/// Heisenberg-picture `A(t)`.
pub fn assemble_heisenberg(
    a: &DMatrix<Complex64>,
    spec: &SectorSpec,
    kernel: &dyn DephasingKernel,
    t: f64,
) -> Result<DMatrix<Complex64>> {
    assemble_slice(a, spec, kernel.at(t)?.as_ref(), t)
}

/// Largest singular value of `P(Δ1) A P(Δ2)`.
pub fn offdiag_norm(a_t: &DMatrix<Complex64>, spec: &SectorSpec) -> Result<f64> {
    check_operator(a_t, spec)?;
    let rows = spec.indices_in(&spec.delta1);
    let cols = spec.indices_in(&spec.delta2);
    if rows.is_empty() || cols.is_empty() {
        return Ok(0.0);
    }
    Ok(a_t
        .select_rows(&rows)
        .select_columns(&cols)
        .singular_values()
        .max())
}

/// Operator norm.
pub fn operator_norm(a: &DMatrix<Complex64>) -> f64 {
    a.singular_values().max()
}

/// How `c2` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupMode {
    /// Closed-form gradient of the kernel.
    #[default]
    #[serde(alias = "analytic-vanhove")]
    Analytic,
    /// Central differences with step `1e−5·|Δ2|`.
    FiniteDifference,
}

/// Uniform kernel bounds on a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBounds {
    /// `sup |χ|`.
    pub c1: f64,
    /// `max(c2_alpha, c2_beta)`.
    pub c2: f64,
    pub c2_alpha: f64,
    pub c2_beta: f64,
    /// Refining the 16×16 grid to 31×31 changed a supremum by more than 1%.
    pub grid_too_coarse: bool,
}

const COARSE_NODES: usize = 16;
const FINE_NODES: usize = 2 * COARSE_NODES - 1;

fn grid_sups(
    slice: &dyn KernelSlice,
    d1: &Interval,
    d2: &Interval,
    n: usize,
    mode: SupMode,
) -> Result<(f64, f64, f64)> {
    let scale = if d2.length() > 0.0 {
        d2.length()
    } else {
        d1.length().max(1.0)
    };
    let h = 1e-5 * scale;
    let mut c1: f64 = 0.0;
    let mut ca: f64 = 0.0;
    let mut cb: f64 = 0.0;
    for &x in &d1.nodes(n) {
        for &y in &d2.nodes(n) {
            c1 = c1.max(slice.value(x, y)?.norm());
            let (ga, gb) = match mode {
                SupMode::Analytic => slice.gradient(x, y).ok_or_else(|| {
                    Error::InvalidInput(
                        "kernel has no closed-form gradient; use finite-difference mode".into(),
                    )
                })??,
                SupMode::FiniteDifference => {
                    let ga = (slice.value(x + h, y)? - slice.value(x - h, y)?) / (2.0 * h);
                    let gb = (slice.value(x, y + h)? - slice.value(x, y - h)?) / (2.0 * h);
                    (ga, gb)
                }
            };
            ca = ca.max(ga.norm());
            cb = cb.max(gb.norm());
        }
    }
    Ok((c1, ca, cb))
}

fn changed(coarse: f64, fine: f64) -> bool {
    (fine - coarse).abs() > 0.01 * fine.abs().max(f64::MIN_POSITIVE)
}

fn sup_on_slice(
    slice: &dyn KernelSlice,
    d1: &Interval,
    d2: &Interval,
    mode: SupMode,
) -> Result<KernelBounds> {
    let coarse = grid_sups(slice, d1, d2, COARSE_NODES, mode)?;
    let (c1, c2_alpha, c2_beta) = grid_sups(slice, d1, d2, FINE_NODES, mode)?;
    Ok(KernelBounds {
        c1,
        c2: c2_alpha.max(c2_beta),
        c2_alpha,
        c2_beta,
        grid_too_coarse: changed(coarse.0, c1)
            || changed(coarse.1, c2_alpha)
            || changed(coarse.2, c2_beta),
    })
}

/// `c1 = sup|χ|` and `c2 = sup|∂χ|` over `Δ1 × Δ2`, on a tensor grid
/// refined once.
pub fn sup_kernel_bounds(
    kernel: &dyn DephasingKernel,
    delta1: &Interval,
    delta2: &Interval,
    t: f64,
    mode: SupMode,
) -> Result<KernelBounds> {
    sup_on_slice(kernel.at(t)?.as_ref(), delta1, delta2, mode)
}

/// Envelope `C (1 + δ²ψ(t))^{−γ}`: fitted or supplied.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "EnvelopeWire")]
pub enum EnvelopeSpec {
    /// Least squares on log scale over points with positive measured norm.
    #[default]
    Fit,
    Fixed {
        constant: f64,
        gamma: f64,
    },
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum EnvelopeKind {
    Fit,
    Fixed,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvelopeWire {
    kind: EnvelopeKind,
    constant: Option<f64>,
    gamma: Option<f64>,
}

impl TryFrom<EnvelopeWire> for EnvelopeSpec {
    type Error = Error;

    fn try_from(w: EnvelopeWire) -> Result<Self> {
        match w.kind {
            EnvelopeKind::Fit => {
                let f = Fields { kind: "fit" };
                f.forbid(&w.constant, "constant")?;
                f.forbid(&w.gamma, "gamma")?;
                Ok(EnvelopeSpec::Fit)
            }
            EnvelopeKind::Fixed => {
                let f = Fields { kind: "fixed" };
                let constant = f.need(w.constant, "constant")?;
                let gamma = f.need(w.gamma, "gamma")?;
                if !(constant.is_finite() && gamma.is_finite()) {
                    return Err(Error::InvalidInput(
                        "envelope constant and gamma must be finite".into(),
                    ));
                }
                Ok(EnvelopeSpec::Fixed { constant, gamma })
            }
        }
    }
}

/// Measured off-diagonal norms against the uniform bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorBoundReport {
    pub times: Vec<f64>,
    pub measured_norm: Vec<f64>,
    pub bound_e3: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    /// `bound_e3 − measured_norm`.
    pub margins: Vec<f64>,
    /// `C (1 + δ²ψ(t))^{−γ}`; absent for kernels without a spread `ψ`.
    pub envelope: Option<Vec<f64>>,
    pub envelope_constant: Option<f64>,
    pub envelope_gamma: Option<f64>,
    pub operator_norm: f64,
    pub gap: f64,
    pub grid_too_coarse: bool,
}

pub const BOUND_CSV_HEADER: &str = "t,measured,bound_e3,envelope";

impl SectorBoundReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(BOUND_CSV_HEADER);
        out.push('\n');
        for k in 0..self.times.len() {
            out.push_str(&crate::csv::row(&[
                Some(self.times[k]),
                Some(self.measured_norm[k]),
                Some(self.bound_e3[k]),
                self.envelope.as_ref().map(|e| e[k]),
            ]));
        }
        out
    }

    /// First sample where the measured norm exceeds the bound by more than
    /// [`BOUND_SLACK`].
    pub fn first_violation(&self) -> Option<Error> {
        (0..self.times.len()).find_map(|k| {
            (self.measured_norm[k] > self.bound_e3[k] + BOUND_SLACK).then(|| {
                Error::BoundViolation {
                    t: self.times[k],
                    measured: self.measured_norm[k],
                    bound: self.bound_e3[k],
                }
            })
        })
    }
}

fn fit_envelope(x: &[f64], measured: &[f64], norm: f64) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(measured)
        .filter(|(_, m)| **m > 1e-300)
        .map(|(x, m)| (*x, m.ln()))
        .collect();
    let spread = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
        - pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    if pts.len() < 2 || !(spread > 0.0) {
        let c = measured.iter().copied().fold(0.0, f64::max);
        return (if c > 0.0 { c } else { norm }, 0.0);
    }
    let fit = linear_fit(&pts);
    (fit.intercept.exp(), -fit.slope)
}

/// Evaluate norms, kernel bounds and envelope on a time grid without
/// asserting the inequality.
pub fn measure_bound(
    a: &DMatrix<Complex64>,
    spec: &SectorSpec,
    kernel: &dyn DephasingKernel,
    times: &[f64],
    mode: SupMode,
    envelope: EnvelopeSpec,
) -> Result<SectorBoundReport> {
    check_operator(a, spec)?;
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("times must be finite".into()));
    }
    let norm = operator_norm(a);
    let d2_len = spec.delta2.length();
    let rows: Vec<(f64, KernelBounds, Option<f64>)> = times
        .par_iter()
        .map(|&t| {
            let slice = kernel.at(t)?;
            let at = assemble_slice(a, spec, slice.as_ref(), t)?;
            let measured = offdiag_norm(&at, spec)?;
            let kb = sup_on_slice(slice.as_ref(), &spec.delta1, &spec.delta2, mode)?;
            Ok((measured, kb, slice.spread()))
        })
        .collect::<Result<_>>()?;
    let measured_norm: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let c1: Vec<f64> = rows.iter().map(|r| r.1.c1).collect();
    let c2: Vec<f64> = rows.iter().map(|r| r.1.c2).collect();
    let bound_e3: Vec<f64> = rows
        .iter()
        .map(|r| (2.0 * r.1.c1 + d2_len * r.1.c2) * norm)
        .collect();
    let margins = bound_e3
        .iter()
        .zip(&measured_norm)
        .map(|(b, m)| b - m)
        .collect();
    let gap = spec.gap();
    let spreads: Option<Vec<f64>> = rows.iter().map(|r| r.2).collect();
    let (envelope, envelope_constant, envelope_gamma) = match spreads {
        Some(psi) => {
            let x: Vec<f64> = psi.iter().map(|p| (gap * gap * p).ln_1p()).collect();
            let (c, g) = match envelope {
                EnvelopeSpec::Fit => fit_envelope(&x, &measured_norm, norm),
                EnvelopeSpec::Fixed { constant, gamma } => (constant, gamma),
            };
            (
                Some(x.iter().map(|x| c * (-g * x).exp()).collect()),
                Some(c),
                Some(g),
            )
        }
        None => (None, None, None),
    };
    Ok(SectorBoundReport {
        times: times.to_vec(),
        measured_norm,
        bound_e3,
        c1,
        c2,
        margins,
        envelope,
        envelope_constant,
        envelope_gamma,
        operator_norm: norm,
        gap,
        grid_too_coarse: rows.iter().any(|r| r.1.grid_too_coarse),
    })
}

/// [`measure_bound`] followed by the check `measured ≤ bound_e3`.
pub fn verify_bound(
    a: &DMatrix<Complex64>,
    spec: &SectorSpec,
    kernel: &dyn DephasingKernel,
    times: &[f64],
    mode: SupMode,
    envelope: EnvelopeSpec,
) -> Result<SectorBoundReport> {
    let report = measure_bound(a, spec, kernel, times, mode, envelope)?;
    match report.first_violation() {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// Complex Gaussian matrix scaled to unit operator norm.
pub fn random_operator(d: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let n = operator_norm(&a);
    a / Complex64::new(n, 0.0)
}

/// `d` eigenvalues drawn uniformly from `[0, 1]`, random energies in
/// `[−1, 1]`, and windows `Δ1 = [0, x]`, `Δ2 = [x + δ, 1]`.
pub fn random_sector_spec(d: usize, rng: &mut impl Rng) -> Result<SectorSpec> {
    let mut lambdas: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    lambdas.sort_by(f64::total_cmp);
    let energies = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = rng.random_range(0.2..0.6);
    let gap = rng.random_range(0.05..0.3);
    SectorSpec::new(
        lambdas,
        energies,
        Interval::new(0.0, x)?,
        Interval::new(x + gap, 1.0)?,
    )
}

/// Deterministic generator for randomized checks.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
