// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

//! Energy distribution `dσ_h(λ) = (h | P_M(dλ) h)` of the coupling vector,
//! its inverse-power moments and the infrared classification.
//!
//! Three representations are supported: a finite set of oscillator modes,
//! a power law `c·λ^p` with a hard cutoff, and a piecewise-linear tabulated
//! density. All have compact support, so every moment with `s = 0` is
//! finite.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Fields, Result};
use crate::quadrature::{integrate, CompensatedSum, QuadConfig, QuadValue};

/// One oscillator mode: frequency `ω_k` and spectral weight `w_k = g_k²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub frequency: f64,
    pub weight: f64,
}

/// Wire form of [`SpectralMeasure`]; validated on conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Discrete {
        modes: Vec<Mode>,
    },
    #[serde(rename = "powerlaw")]
    PowerLawCutoff {
        amplitude: f64,
        exponent: f64,
        cutoff: f64,
    },
    #[serde(rename = "tabulated")]
    TabulatedDensity {
        grid: Vec<f64>,
        density: Vec<f64>,
    },
}

/// A validated spectral measure. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureWire", into = "MeasureSpec")]
pub struct SpectralMeasure {
    spec: MeasureSpec,
}

impl TryFrom<MeasureSpec> for SpectralMeasure {
    type Error = Error;

    fn try_from(spec: MeasureSpec) -> Result<Self> {
        match spec {
            MeasureSpec::Discrete { modes } => Self::discrete(modes),
            MeasureSpec::PowerLawCutoff {
                amplitude,
                exponent,
                cutoff,
            } => Self::power_law(amplitude, exponent, cutoff),
            MeasureSpec::TabulatedDensity { grid, density } => Self::tabulated(grid, density),
        }
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum MeasureKind {
    Discrete,
    Powerlaw,
    Tabulated,
}

/// Flat form of [`MeasureSpec`] so that deserialization errors keep the
/// path of the offending field.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureWire {
    kind: MeasureKind,
    modes: Option<Vec<Mode>>,
    amplitude: Option<f64>,
    exponent: Option<f64>,
    cutoff: Option<f64>,
    grid: Option<Vec<f64>>,
    density: Option<Vec<f64>>,
}

impl TryFrom<MeasureWire> for SpectralMeasure {
    type Error = Error;

    fn try_from(w: MeasureWire) -> Result<Self> {
        let spec = match w.kind {
            MeasureKind::Discrete => {
                let f = Fields { kind: "discrete" };
                for (v, n) in [
                    (&w.amplitude, "amplitude"),
                    (&w.exponent, "exponent"),
                    (&w.cutoff, "cutoff"),
                ] {
                    f.forbid(v, n)?;
                }
                f.forbid(&w.grid, "grid")?;
                f.forbid(&w.density, "density")?;
                MeasureSpec::Discrete {
                    modes: f.need(w.modes, "modes")?,
                }
            }
            MeasureKind::Powerlaw => {
                let f = Fields { kind: "powerlaw" };
                f.forbid(&w.modes, "modes")?;
                f.forbid(&w.grid, "grid")?;
                f.forbid(&w.density, "density")?;
                MeasureSpec::PowerLawCutoff {
                    amplitude: f.need(w.amplitude, "amplitude")?,
                    exponent: f.need(w.exponent, "exponent")?,
                    cutoff: f.need(w.cutoff, "cutoff")?,
                }
            }
            MeasureKind::Tabulated => {
                let f = Fields { kind: "tabulated" };
                f.forbid(&w.modes, "modes")?;
                for (v, n) in [
                    (&w.amplitude, "amplitude"),
                    (&w.exponent, "exponent"),
                    (&w.cutoff, "cutoff"),
                ] {
                    f.forbid(v, n)?;
                }
                MeasureSpec::TabulatedDensity {
                    grid: f.need(w.grid, "grid")?,
                    density: f.need(w.density, "density")?,
                }
            }
        };
        Self::try_from(spec)
    }
}

impl From<SpectralMeasure> for MeasureSpec {
    fn from(m: SpectralMeasure) -> Self {
        m.spec
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidMeasure(msg.into())
}

impl SpectralMeasure {
    pub fn discrete(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(invalid("discrete measure needs at least one mode"));
        }
        for (k, m) in modes.iter().enumerate() {
            if !(m.frequency.is_finite() && m.frequency > 0.0) {
                return Err(invalid(format!(
                    "mode {k}: frequency must be finite and strictly positive, got {}",
                    m.frequency
                )));
            }
            if !(m.weight.is_finite() && m.weight >= 0.0) {
                return Err(invalid(format!(
                    "mode {k}: weight must be finite and non-negative, got {}",
                    m.weight
                )));
            }
        }
        let mut freqs: Vec<f64> = modes.iter().map(|m| m.frequency).collect();
        freqs.sort_by(f64::total_cmp);
        if freqs.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("mode frequencies must be pairwise distinct"));
        }
        if modes.iter().map(|m| m.weight).sum::<f64>() <= 0.0 {
            return Err(invalid("total mass must be positive"));
        }
        Ok(Self {
            spec: MeasureSpec::Discrete { modes },
        })
    }

    /// Convenience constructor from `(frequency, weight)` pairs.
    pub fn from_modes(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::discrete(
            pairs
                .iter()
                .map(|&(frequency, weight)| Mode { frequency, weight })
                .collect(),
        )
    }

    pub fn power_law(amplitude: f64, exponent: f64, cutoff: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(invalid(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        if !(exponent.is_finite() && exponent >= 0.0) {
            return Err(invalid(format!("exponent must be >= 0, got {exponent}")));
        }
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(invalid(format!("cutoff must be positive, got {cutoff}")));
        }
        Ok(Self {
            spec: MeasureSpec::PowerLawCutoff {
                amplitude,
                exponent,
                cutoff,
            },
        })
    }

    pub fn tabulated(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(invalid("tabulated density needs at least two grid points"));
        }
        if grid.len() != density.len() {
            return Err(invalid(format!(
                "grid has {} points but density has {}",
                grid.len(),
                density.len()
            )));
        }
        if grid[0] != 0.0 {
            return Err(invalid("tabulated grid must start at lambda = 0"));
        }
        if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid(
                "tabulated grid must be finite and strictly increasing",
            ));
        }
        if density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(invalid("density samples must be finite and non-negative"));
        }
        let spec = MeasureSpec::TabulatedDensity { grid, density };
        let m = Self { spec };
        if m.total_mass() <= 0.0 {
            return Err(invalid("total mass must be positive"));
        }
        Ok(m)
    }

    pub fn spec(&self) -> &MeasureSpec {
        &self.spec
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.spec, MeasureSpec::Discrete { .. })
    }

    /// Modes of a discrete measure, `None` for densities.
    pub fn modes(&self) -> Option<&[Mode]> {
        match &self.spec {
            MeasureSpec::Discrete { modes } => Some(modes),
            _ => None,
        }
    }

    /// Largest point of the support.
    pub fn support_max(&self) -> f64 {
        match &self.spec {
            MeasureSpec::Discrete { modes } => modes
                .iter()
                .filter(|m| m.weight > 0.0)
                .map(|m| m.frequency)
                .fold(0.0, f64::max),
            MeasureSpec::PowerLawCutoff { cutoff, .. } => *cutoff,
            MeasureSpec::TabulatedDensity { grid, density } => {
                let last = density.iter().rposition(|d| *d > 0.0).unwrap_or(0);
                grid[(last + 1).min(grid.len() - 1)]
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self.moment(0) {
            Moment::Finite(m) => m,
            Moment::Divergent => unreachable!("compactly supported measures have finite mass"),
        }
    }

    /// Multiply every weight (or the density) by `kappa > 0`.
    pub fn scaled(&self, kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidInput(format!(
                "scale must be positive, got {kappa}"
            )));
        }
        let spec = match &self.spec {
            MeasureSpec::Discrete { modes } => MeasureSpec::Discrete {
                modes: modes
                    .iter()
                    .map(|m| Mode {
                        frequency: m.frequency,
                        weight: m.weight * kappa,
                    })
                    .collect(),
            },
            MeasureSpec::PowerLawCutoff {
                amplitude,
                exponent,
                cutoff,
            } => MeasureSpec::PowerLawCutoff {
                amplitude: amplitude * kappa,
                exponent: *exponent,
                cutoff: *cutoff,
            },
            MeasureSpec::TabulatedDensity { grid, density } => MeasureSpec::TabulatedDensity {
                grid: grid.clone(),
                density: density.iter().map(|d| d * kappa).collect(),
            },
        };
        Self::try_from(spec)
    }

    /// Distribution function `σ_h(λ) = ∫₀^λ dσ_h`.
    pub fn cumulative(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            return 0.0;
        }
        match &self.spec {
            MeasureSpec::Discrete { modes } => modes
                .iter()
                .filter(|m| m.frequency <= lambda)
                .map(|m| m.weight)
                .collect::<CompensatedSum<f64>>()
                .total(),
            MeasureSpec::PowerLawCutoff {
                amplitude,
                exponent,
                cutoff,
            } => amplitude * lambda.min(*cutoff).powf(exponent + 1.0) / (exponent + 1.0),
            MeasureSpec::TabulatedDensity { grid, density } => {
                let mut acc = CompensatedSum::<f64>::default();
                for j in 0..grid.len() - 1 {
                    let (x0, x1) = (grid[j], grid[j + 1]);
                    if x0 >= lambda {
                        break;
                    }
                    let hi = x1.min(lambda);
                    let d_hi = lerp(x0, x1, density[j], density[j + 1], hi);
                    acc.add(0.5 * (density[j] + d_hi) * (hi - x0));
                }
                acc.total()
            }
        }
    }

    /// Density value at `λ` for the absolutely continuous kinds.
    pub fn density_at(&self, lambda: f64) -> Option<f64> {
        match &self.spec {
            MeasureSpec::Discrete { .. } => None,
            MeasureSpec::PowerLawCutoff {
                amplitude,
                exponent,
                cutoff,
            } => Some(if lambda < 0.0 || lambda > *cutoff {
                0.0
            } else {
                amplitude * lambda.powf(*exponent)
            }),
            MeasureSpec::TabulatedDensity { grid, density } => {
                if lambda < 0.0 || lambda > *grid.last().unwrap() {
                    return Some(0.0);
                }
                let j = grid.partition_point(|x| *x <= lambda).saturating_sub(1);
                let j = j.min(grid.len() - 2);
                Some(lerp(
                    grid[j],
                    grid[j + 1],
                    density[j],
                    density[j + 1],
                    lambda,
                ))
            }
        }
    }

    /// Inverse-power moment `∫ λ^{-s} dσ_h(λ)` for `s ∈ {0, 1, 2}`.
    pub fn moment(&self, s: u8) -> Moment {
        assert!(s <= 2, "moment order must be 0, 1 or 2");
        match &self.spec {
            MeasureSpec::Discrete { modes } => Moment::Finite(
                modes
                    .iter()
                    .map(|m| m.weight * m.frequency.powi(-(s as i32)))
                    .collect::<CompensatedSum<f64>>()
                    .total(),
            ),
            MeasureSpec::PowerLawCutoff {
                amplitude,
                exponent,
                cutoff,
            } => {
                let q = exponent - s as f64 + 1.0;
                if q <= 0.0 {
                    Moment::Divergent
                } else {
                    Moment::Finite(amplitude * cutoff.powf(q) / q)
                }
            }
            MeasureSpec::TabulatedDensity { grid, density } => {
                let mut acc = CompensatedSum::<f64>::default();
                for j in 0..grid.len() - 1 {
                    let (x0, x1, d0, d1) = (grid[j], grid[j + 1], density[j], density[j + 1]);
                    if d0 == 0.0 && d1 == 0.0 {
                        continue;
                    }
                    // density a + b·λ on [x0, x1]
                    let b = (d1 - d0) / (x1 - x0);
                    let a = d0 - b * x0;
                    let piece = match s {
                        0 => a * (x1 - x0) + 0.5 * b * (x1 * x1 - x0 * x0),
                        1 if x0 == 0.0 => {
                            if a > 0.0 {
                                return Moment::Divergent;
                            }
                            b * (x1 - x0)
                        }
                        1 => a * (x1 / x0).ln() + b * (x1 - x0),
                        _ if x0 == 0.0 => return Moment::Divergent,
                        _ => a * (1.0 / x0 - 1.0 / x1) + b * (x1 / x0).ln(),
                    };
                    acc.add(piece);
                }
                Moment::Finite(acc.total())
            }
        }
    }

    pub fn moments(&self) -> MomentReport {
        MomentReport {
            m0: self.total_mass(),
            m1: self.moment(1),
            m2: self.moment(2),
        }
    }

    /// Integrate `kernel(λ)` against the measure. For densities the
    /// caller supplies extra breakpoints (oscillation nodes) inside the
    /// support; tabulated grid nodes are added automatically.
    pub(crate) fn integrate_kernel<V, F>(
        &self,
        kernel: F,
        breaks: &[f64],
        cfg: &QuadConfig,
    ) -> Result<V>
    where
        V: QuadValue,
        F: Fn(f64) -> V,
    {
        match &self.spec {
            MeasureSpec::Discrete { modes } => {
                let mut acc = CompensatedSum::<V>::default();
                for m in modes {
                    acc.add(kernel(m.frequency) * m.weight);
                }
                Ok(acc.total())
            }
            MeasureSpec::PowerLawCutoff {
                amplitude,
                exponent,
                cutoff,
            } => {
                let mut bp = Vec::with_capacity(breaks.len() + 2);
                bp.push(0.0);
                bp.extend(breaks.iter().copied().filter(|x| *x > 0.0 && *x < *cutoff));
                bp.push(*cutoff);
                bp.sort_by(f64::total_cmp);
                let (c, p) = (*amplitude, *exponent);
                let est = integrate(|x: f64| kernel(x) * (c * x.powf(p)), &bp, cfg)?;
                Ok(est.value)
            }
            MeasureSpec::TabulatedDensity { grid, density } => {
                // only segments carrying mass contribute
                let mut acc = CompensatedSum::<V>::default();
                let mut evals = 0usize;
                let mut j = 0;
                let n = grid.len() - 1;
                while j < n {
                    if density[j] == 0.0 && density[j + 1] == 0.0 {
                        j += 1;
                        continue;
                    }
                    let start = j;
                    while j < n && !(density[j] == 0.0 && density[j + 1] == 0.0) {
                        j += 1;
                    }
                    let (lo, hi) = (grid[start], grid[j]);
                    let mut bp: Vec<f64> = grid[start..=j].to_vec();
                    let first = breaks.partition_point(|x| *x <= lo);
                    let last = breaks.partition_point(|x| *x < hi);
                    bp.extend_from_slice(&breaks[first..last]);
                    bp.sort_by(f64::total_cmp);
                    let local = QuadConfig {
                        max_evals: cfg.max_evals.saturating_sub(evals),
                        ..*cfg
                    };
                    let est = integrate(
                        |x: f64| kernel(x) * self.density_at(x).unwrap_or(0.0),
                        &bp,
                        &local,
                    )?;
                    evals += est.evals;
                    acc.add(est.value);
                }
                Ok(acc.total())
            }
        }
    }
}

fn lerp(x0: f64, x1: f64, y0: f64, y1: f64, x: f64) -> f64 {
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// An extended non-negative real: finite value or divergent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment {
    Finite(f64),
    Divergent,
}

impl Moment {
    pub fn is_finite(&self) -> bool {
        matches!(self, Moment::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Moment::Finite(v) => Some(*v),
            Moment::Divergent => None,
        }
    }
}

impl fmt::Display for Moment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Moment::Finite(v) => write!(f, "{v}"),
            Moment::Divergent => f.write_str("divergent"),
        }
    }
}

impl Serialize for Moment {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Moment::Finite(v) => s.serialize_f64(*v),
            Moment::Divergent => s.serialize_str("divergent"),
        }
    }
}

impl<'de> Deserialize<'de> for Moment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct MomentVisitor;
        impl Visitor<'_> for MomentVisitor {
            type Value = Moment;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative number or \"divergent\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Moment, E> {
                Ok(Moment::Finite(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Moment, E> {
                Ok(Moment::Finite(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Moment, E> {
                Ok(Moment::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Moment, E> {
                if v == "divergent" {
                    Ok(Moment::Divergent)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(MomentVisitor)
    }
}

/// `m0 = ‖h‖²`, `m1 = ‖M^{-1/2}h‖²`, `m2 = ‖M^{-1}h‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub m0: f64,
    pub m1: Moment,
    pub m2: Moment,
}

/// `∫ λ^{-s} dσ_h`.
pub fn moment(measure: &SpectralMeasure, s: u8) -> Moment {
    measure.moment(s)
}

/// The semiboundedness constraint `2‖M^{-1/2}h‖ ≤ 1`, with a few ulps of
/// slack so that couplings placed exactly on the boundary are accepted.
pub fn validate_coupling(measure: &SpectralMeasure) -> bool {
    match measure.moment(1) {
        Moment::Finite(m1) => 2.0 * m1.sqrt() <= 1.0 + COUPLING_SLACK,
        Moment::Divergent => false,
    }
}

pub(crate) const COUPLING_SLACK: f64 = 1e-12;

/// Infrared behaviour of the coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrClass {
    /// `‖M^{-1}h‖ < ∞`: ψ stays bounded and coherence recurs.
    Regular,
    /// `∫_ε λ^{-2} dσ_h → ∞` as `ε → 0`, but `λ^{-2} σ_h(λ)` stays bounded.
    IrDivergent,
    /// `λ^{-2} σ_h(λ) → ∞` as `λ → 0`.
    IrDominant,
}

/// Thresholds for the finite-data infrared tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrClassifier {
    /// Number of lowest mode frequencies sampled for accumulation detection.
    pub accumulation_samples: usize,
    /// Required growth of `λ^{-2}σ_h(λ)` across those samples.
    pub accumulation_growth: f64,
    /// Half-width of the `p̂ ≈ 1` band for tabulated densities.
    pub exponent_tol: f64,
    /// Largest admissible 95% confidence half-width of `p̂`.
    pub fit_tol: f64,
}

impl Default for IrClassifier {
    fn default() -> Self {
        Self {
            accumulation_samples: 10,
            accumulation_growth: 1e3,
            exponent_tol: 0.05,
            fit_tol: 0.05,
        }
    }
}

/// Low-λ power fit of a tabulated density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub exponent: f64,
    /// 95% confidence half-width of the exponent.
    pub half_width: f64,
    pub points: usize,
}

impl IrClassifier {
    pub fn classify(&self, measure: &SpectralMeasure) -> Result<IrClass> {
        match &measure.spec {
            MeasureSpec::PowerLawCutoff { exponent, .. } => Ok(if *exponent < 1.0 {
                IrClass::IrDominant
            } else if *exponent == 1.0 {
                IrClass::IrDivergent
            } else {
                IrClass::Regular
            }),
            MeasureSpec::Discrete { modes } => Ok(if self.accumulates(modes) {
                IrClass::IrDominant
            } else {
                IrClass::Regular
            }),
            MeasureSpec::TabulatedDensity { .. } => {
                if measure.moment(2).is_finite() {
                    return Ok(IrClass::Regular);
                }
                let est = self.low_end_exponent(measure)?;
                let p = est.exponent;
                Ok(if p < 1.0 - self.exponent_tol {
                    IrClass::IrDominant
                } else if p <= 1.0 + self.exponent_tol {
                    IrClass::IrDivergent
                } else {
                    IrClass::Regular
                })
            }
        }
    }

    /// `λ^{-2}σ_h(λ)` sampled at the smallest mode frequencies, walking
    /// towards zero, must grow strictly and by the configured factor.
    fn accumulates(&self, modes: &[Mode]) -> bool {
        let mut live: Vec<&Mode> = modes.iter().filter(|m| m.weight > 0.0).collect();
        if self.accumulation_samples < 2 || live.len() < self.accumulation_samples {
            return false;
        }
        live.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
        let lowest = &live[..self.accumulation_samples];
        let mut cum = 0.0;
        let mut ratios: Vec<f64> = lowest
            .iter()
            .map(|m| {
                cum += m.weight;
                cum / (m.frequency * m.frequency)
            })
            .collect();
        // ratios are ascending in λ; walk downwards
        ratios.reverse();
        let strictly_increasing = ratios.windows(2).all(|w| w[1] > w[0]);
        strictly_increasing && ratios[ratios.len() - 1] > self.accumulation_growth * ratios[0]
    }

    /// Least-squares fit of `log ρ` against `log λ` over the lowest decade
    /// of grid nodes with positive density.
    pub fn low_end_exponent(&self, measure: &SpectralMeasure) -> Result<ExponentEstimate> {
        let MeasureSpec::TabulatedDensity { grid, density } = &measure.spec else {
            return Err(Error::InvalidInput(
                "exponent fit applies to tabulated densities".into(),
            ));
        };
        let first = grid[1];
        let pts: Vec<(f64, f64)> = grid
            .iter()
            .zip(density)
            .skip(1)
            .take_while(|(x, _)| **x <= 10.0 * first * (1.0 + 1e-12))
            .filter(|(_, d)| **d > 0.0)
            .map(|(x, d)| (x.ln(), d.ln()))
            .collect();
        if pts.len() < 3 {
            return Err(Error::Inconclusive(format!(
                "only {} positive density samples in the lowest decade (need 3)",
                pts.len()
            )));
        }
        let fit = linear_fit(&pts);
        let half_width = if pts.len() > 2 {
            let t = StudentsT::new(0.0, 1.0, (pts.len() - 2) as f64)
                .map(|d| d.inverse_cdf(0.975))
                .unwrap_or(f64::INFINITY);
            t * fit.slope_stderr
        } else {
            f64::INFINITY
        };
        if !(half_width <= self.fit_tol) {
            return Err(Error::Inconclusive(format!(
                "low-end exponent {:.4} has 95% half-width {:.4} above tolerance {}",
                fit.slope, half_width, self.fit_tol
            )));
        }
        Ok(ExponentEstimate {
            exponent: fit.slope,
            half_width,
            points: pts.len(),
        })
    }
}

/// Classify with the default thresholds.
pub fn classify_ir(measure: &SpectralMeasure) -> Result<IrClass> {
    IrClassifier::default().classify(measure)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> LinearFit {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let slope_stderr = if pts.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    LinearFit {
        slope,
        intercept,
        slope_stderr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(omega: f64, w: f64) -> SpectralMeasure {
        SpectralMeasure::from_modes(&[(omega, w)]).unwrap()
    }

    #[test]
    fn discrete_second_moment() {
        assert_eq!(single(2.0, 1.0).moment(2), Moment::Finite(0.25));
    }

    #[test]
    fn power_law_moments() {
        let m = SpectralMeasure::power_law(1.0, 0.5, 1.0).unwrap();
        assert_eq!(m.moment(2), Moment::Divergent);
        let m1 = m.moment(1).finite().unwrap();
        assert!((m1 - 2.0).abs() < 1e-15);
        assert!((m.total_mass() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zeroth_moment_is_mass() {
        let m = SpectralMeasure::from_modes(&[(1.0, 0.3), (2.0, 0.7)]).unwrap();
        assert!((m.moment(0).finite().unwrap() - 1.0).abs() < 1e-15);
        let tiny = single(1.0, 1e-300);
        assert!(tiny.total_mass() < 1e-299);
    }

    #[test]
    fn coupling_boundary() {
        assert!(validate_coupling(&single(1.0, 0.25)));
        assert!(!validate_coupling(&single(1.0, 0.26)));
        assert!(!validate_coupling(
            &SpectralMeasure::power_law(1.0, 0.5, 1.0).unwrap()
        ));
        assert!(!validate_coupling(
            &SpectralMeasure::power_law(0.1, 0.0, 1.0).unwrap()
        ));
    }

    #[test]
    fn construction_errors() {
        assert!(SpectralMeasure::from_modes(&[(0.0, 1.0)]).is_err());
        assert!(SpectralMeasure::from_modes(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(SpectralMeasure::from_modes(&[(1.0, -1.0)]).is_err());
        assert!(SpectralMeasure::from_modes(&[(1.0, 0.0)]).is_err());
        assert!(SpectralMeasure::from_modes(&[]).is_err());
        assert!(SpectralMeasure::power_law(0.0, 1.0, 1.0).is_err());
        assert!(SpectralMeasure::power_law(1.0, -0.1, 1.0).is_err());
        assert!(SpectralMeasure::tabulated(vec![0.1, 1.0], vec![1.0, 1.0]).is_err());
        assert!(SpectralMeasure::tabulated(vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]).is_err());
        assert!(SpectralMeasure::tabulated(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn tabulated_moments_match_quadrature() {
        let grid = vec![0.0, 0.5, 1.0, 2.0];
        let density = vec![0.0, 0.0, 2.0, 1.0];
        let m = SpectralMeasure::tabulated(grid, density).unwrap();
        let cfg = QuadConfig::default().with_rel_tol(1e-13);
        for s in 0..=2u8 {
            let q = m
                .integrate_kernel(|x: f64| x.powi(-(s as i32)), &[], &cfg)
                .unwrap();
            let exact = m.moment(s).finite().unwrap();
            assert!((q - exact).abs() < 1e-12 * exact, "s={s}: {q} vs {exact}");
        }
        assert!((m.cumulative(1.0) - 0.5).abs() < 1e-15);
        assert!((m.cumulative(10.0) - m.total_mass()).abs() < 1e-15);
    }

    #[test]
    fn tabulated_divergences() {
        let flat = SpectralMeasure::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(flat.moment(1), Moment::Divergent);
        let linear = SpectralMeasure::tabulated(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!((linear.moment(1).finite().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(linear.moment(2), Moment::Divergent);
    }

    #[test]
    fn classify_examples() {
        let sub = SpectralMeasure::power_law(1.0, 0.5, 1.0).unwrap();
        assert_eq!(classify_ir(&sub).unwrap(), IrClass::IrDominant);
        let ohmic = SpectralMeasure::power_law(1.0, 1.0, 1.0).unwrap();
        assert_eq!(classify_ir(&ohmic).unwrap(), IrClass::IrDivergent);
        assert_eq!(classify_ir(&single(3.0, 1.0)).unwrap(), IrClass::Regular);
    }

    #[test]
    fn accumulation_point_bath_is_dominant() {
        // ω_k = 10^{-k/2}, w_k = ω_k: mimics a flat density near zero
        let modes: Vec<(f64, f64)> = (0..14)
            .map(|k| {
                let w = 10f64.powf(-(k as f64) / 2.0);
                (w, w)
            })
            .collect();
        let m = SpectralMeasure::from_modes(&modes).unwrap();
        assert_eq!(classify_ir(&m).unwrap(), IrClass::IrDominant);
        // too few modes for the heuristic
        let m = SpectralMeasure::from_modes(&modes[..5]).unwrap();
        assert_eq!(classify_ir(&m).unwrap(), IrClass::Regular);
    }

    #[test]
    fn tabulated_fit_recovers_exponent() {
        for (p, want) in [
            (0.5, IrClass::IrDominant),
            (1.0, IrClass::IrDivergent),
            (1.5, IrClass::Regular),
        ] {
            let grid: Vec<f64> = std::iter::once(0.0)
                .chain((0..60).map(|j| 1e-4 * 10f64.powf(j as f64 / 15.0)))
                .collect();
            let density: Vec<f64> = grid.iter().map(|x| x.powf(p)).collect();
            let m = SpectralMeasure::tabulated(grid, density).unwrap();
            let est = IrClassifier::default().low_end_exponent(&m).unwrap();
            assert!((est.exponent - p).abs() < 1e-9);
            assert_eq!(classify_ir(&m).unwrap(), want, "p = {p}");
        }
    }

    #[test]
    fn tabulated_noisy_low_end_is_inconclusive() {
        let grid: Vec<f64> = std::iter::once(0.0)
            .chain((0..40).map(|j| 0.01 * (j + 1) as f64))
            .collect();
        let density: Vec<f64> = grid
            .iter()
            .enumerate()
            .map(|(j, x)| x.sqrt() * if j % 2 == 0 { 3.0 } else { 0.3 })
            .collect();
        let m = SpectralMeasure::tabulated(grid, density).unwrap();
        assert!(matches!(classify_ir(&m), Err(Error::Inconclusive(_))));
    }

    #[test]
    fn tabulated_support_away_from_zero_is_regular() {
        let m =
            SpectralMeasure::tabulated(vec![0.0, 1.0, 1.1, 1.2], vec![0.0, 0.0, 5.0, 0.0]).unwrap();
        assert_eq!(classify_ir(&m).unwrap(), IrClass::Regular);
    }

    #[test]
    fn json_schema_round_trip() {
        let json = r#"{"kind":"powerlaw","amplitude":1.0,"exponent":0.5,"cutoff":1.0}"#;
        let m: SpectralMeasure = serde_json::from_str(json).unwrap();
        assert_eq!(m, SpectralMeasure::power_law(1.0, 0.5, 1.0).unwrap());
        let back = serde_json::to_string(&m).unwrap();
        assert_eq!(back, json);
        let bad = r#"{"kind":"discrete","modes":[{"frequency":0.0,"weight":1.0}]}"#;
        assert!(serde_json::from_str::<SpectralMeasure>(bad).is_err());
    }

    #[test]
    fn moment_serializes_divergent_marker() {
        let r = SpectralMeasure::power_law(1.0, 0.5, 1.0).unwrap().moments();
        let v = serde_json::to_value(r).unwrap();
        assert_eq!(v["m2"], "divergent");
        let back: MomentReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
