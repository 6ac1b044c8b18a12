// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

//! Commuting-environment model: when `H_E` and `G` commute, the trace
//! reduces to the Fourier transform `χ(s) = ∫ e^{iλs} dμ(λ)` of a scalar
//! probability measure, evaluated at `s = (α−β)t`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Fields, Result};
use crate::quadrature::{integrate, QuadConfig};

/// Wire form of a [`FourierEnvironment`] density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    /// Normal density truncated at `mean ± 8·sigma`.
    Gaussian { mean: f64, sigma: f64 },
    /// `exp(−1/(1−x²))` with `x = (λ − center)/width`, support `|x| < 1`.
    SmoothBump { center: f64, width: f64 },
    /// Polynomial pieces on `[breakpoints[j], breakpoints[j+1]]`, each in
    /// powers of `λ − breakpoints[j]`.
    PiecewisePolynomial {
        breakpoints: Vec<f64>,
        coefficients: Vec<Vec<f64>>,
    },
}

/// Normalized spectral density `dμ/dλ` of the environment operator `G` in
/// the reference state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvWire", into = "EnvSpec")]
pub struct FourierEnvironment {
    spec: EnvSpec,
    scale: f64,
}

impl TryFrom<EnvSpec> for FourierEnvironment {
    type Error = Error;

    fn try_from(spec: EnvSpec) -> Result<Self> {
        match &spec {
            EnvSpec::Gaussian { mean, sigma } => {
                if !(mean.is_finite() && sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::InvalidInput(
                        "gaussian needs finite mean and sigma > 0".into(),
                    ));
                }
            }
            EnvSpec::SmoothBump { center, width } => {
                if !(center.is_finite() && width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidInput(
                        "smooth bump needs finite center and width > 0".into(),
                    ));
                }
            }
            EnvSpec::PiecewisePolynomial {
                breakpoints,
                coefficients,
            } => {
                if breakpoints.len() < 2 || coefficients.len() != breakpoints.len() - 1 {
                    return Err(Error::InvalidInput(
                        "piecewise polynomial needs n+1 breakpoints for n pieces".into(),
                    ));
                }
                if breakpoints.iter().any(|b| !b.is_finite())
                    || breakpoints.windows(2).any(|w| !(w[1] > w[0]))
                {
                    return Err(Error::InvalidInput(
                        "breakpoints must be finite and strictly increasing".into(),
                    ));
                }
                if coefficients.iter().flatten().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidInput("coefficients must be finite".into()));
                }
            }
        }
        let mut env = Self { spec, scale: 1.0 };
        env.check_non_negative()?;
        let mass = env.mass(&QuadConfig::default().with_rel_tol(1e-14))?;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidInput("density has no mass".into()));
        }
        env.scale = 1.0 / mass;
        Ok(env)
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum EnvKind {
    Gaussian,
    SmoothBump,
    PiecewisePolynomial,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvWire {
    kind: EnvKind,
    mean: Option<f64>,
    sigma: Option<f64>,
    center: Option<f64>,
    width: Option<f64>,
    breakpoints: Option<Vec<f64>>,
    coefficients: Option<Vec<Vec<f64>>>,
}

impl TryFrom<EnvWire> for FourierEnvironment {
    type Error = Error;

    fn try_from(w: EnvWire) -> Result<Self> {
        let spec = match w.kind {
            EnvKind::Gaussian => {
                let f = Fields { kind: "gaussian" };
                f.forbid(&w.center, "center")?;
                f.forbid(&w.width, "width")?;
                f.forbid(&w.breakpoints, "breakpoints")?;
                f.forbid(&w.coefficients, "coefficients")?;
                EnvSpec::Gaussian {
                    mean: f.need(w.mean, "mean")?,
                    sigma: f.need(w.sigma, "sigma")?,
                }
            }
            EnvKind::SmoothBump => {
                let f = Fields {
                    kind: "smooth_bump",
                };
                f.forbid(&w.mean, "mean")?;
                f.forbid(&w.sigma, "sigma")?;
                f.forbid(&w.breakpoints, "breakpoints")?;
                f.forbid(&w.coefficients, "coefficients")?;
                EnvSpec::SmoothBump {
                    center: f.need(w.center, "center")?,
                    width: f.need(w.width, "width")?,
                }
            }
            EnvKind::PiecewisePolynomial => {
                let f = Fields {
                    kind: "piecewise_polynomial",
                };
                for (v, n) in [
                    (&w.mean, "mean"),
                    (&w.sigma, "sigma"),
                    (&w.center, "center"),
                    (&w.width, "width"),
                ] {
                    f.forbid(v, n)?;
                }
                EnvSpec::PiecewisePolynomial {
                    breakpoints: f.need(w.breakpoints, "breakpoints")?,
                    coefficients: f.need(w.coefficients, "coefficients")?,
                }
            }
        };
        Self::try_from(spec)
    }
}

impl From<FourierEnvironment> for EnvSpec {
    fn from(e: FourierEnvironment) -> Self {
        e.spec
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

impl FourierEnvironment {
    pub fn gaussian(mean: f64, sigma: f64) -> Result<Self> {
        Self::try_from(EnvSpec::Gaussian { mean, sigma })
    }

    pub fn smooth_bump(center: f64, width: f64) -> Result<Self> {
        Self::try_from(EnvSpec::SmoothBump { center, width })
    }

    /// Hard-edged uniform density on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::try_from(EnvSpec::PiecewisePolynomial {
            breakpoints: vec![lo, hi],
            coefficients: vec![vec![1.0]],
        })
    }

    pub fn piecewise_polynomial(
        breakpoints: Vec<f64>,
        coefficients: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Self::try_from(EnvSpec::PiecewisePolynomial {
            breakpoints,
            coefficients,
        })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    /// Whether the decay guarantee `|χ^{(n)}(s)| ≤ C_γ (1+s²)^{−γ}` is
    /// asserted for this density (smooth presets only).
    pub fn is_smooth_preset(&self) -> bool {
        !matches!(self.spec, EnvSpec::PiecewisePolynomial { .. })
    }

    pub fn support(&self) -> (f64, f64) {
        match &self.spec {
            EnvSpec::Gaussian { mean, sigma } => (mean - 8.0 * sigma, mean + 8.0 * sigma),
            EnvSpec::SmoothBump { center, width } => (center - width, center + width),
            EnvSpec::PiecewisePolynomial { breakpoints, .. } => {
                (breakpoints[0], *breakpoints.last().unwrap())
            }
        }
    }

    fn raw(&self, x: f64) -> f64 {
        match &self.spec {
            EnvSpec::Gaussian { mean, sigma } => {
                let z = (x - mean) / sigma;
                if z.abs() > 8.0 {
                    0.0
                } else {
                    (-0.5 * z * z).exp()
                }
            }
            EnvSpec::SmoothBump { center, width } => {
                let z = (x - center) / width;
                if z.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - z * z)).exp()
                }
            }
            EnvSpec::PiecewisePolynomial {
                breakpoints,
                coefficients,
            } => {
                if x < breakpoints[0] || x > *breakpoints.last().unwrap() {
                    return 0.0;
                }
                let j = breakpoints
                    .partition_point(|b| *b <= x)
                    .saturating_sub(1)
                    .min(coefficients.len() - 1);
                horner(&coefficients[j], x - breakpoints[j])
            }
        }
    }

    /// Normalized density `dμ/dλ`.
    pub fn density(&self, x: f64) -> f64 {
        self.scale * self.raw(x)
    }

    fn natural_breaks(&self) -> Vec<f64> {
        match &self.spec {
            EnvSpec::Gaussian { mean, .. } => {
                let (a, b) = self.support();
                vec![a, *mean, b]
            }
            EnvSpec::SmoothBump { center, .. } => {
                let (a, b) = self.support();
                vec![a, *center, b]
            }
            EnvSpec::PiecewisePolynomial { breakpoints, .. } => breakpoints.clone(),
        }
    }

    fn check_non_negative(&self) -> Result<()> {
        if let EnvSpec::PiecewisePolynomial { breakpoints, .. } = &self.spec {
            for w in breakpoints.windows(2) {
                for k in 0..=64 {
                    let x = w[0] + (w[1] - w[0]) * k as f64 / 64.0;
                    if self.raw(x) < 0.0 {
                        return Err(Error::InvalidInput(format!(
                            "density is negative at lambda = {x}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn mass(&self, cfg: &QuadConfig) -> Result<f64> {
        Ok(integrate(|x: f64| self.raw(x), &self.natural_breaks(), cfg)?.value * self.scale)
    }

    /// `∫ dμ`, equal to one after construction.
    pub fn total_mass(&self) -> Result<f64> {
        self.mass(&QuadConfig::default().with_rel_tol(1e-14))
    }
}

fn fourier_config() -> QuadConfig {
    QuadConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-15,
        max_evals: 1_000_000,
    }
}

/// `dⁿ/dsⁿ ∫ e^{iλs} dμ(λ)` for `n ∈ {0, 1}`.
pub fn chi_fourier(env: &FourierEnvironment, s: f64, n: u8) -> Result<Complex64> {
    chi_fourier_with(env, s, n, &fourier_config())
}

pub fn chi_fourier_with(
    env: &FourierEnvironment,
    s: f64,
    n: u8,
    cfg: &QuadConfig,
) -> Result<Complex64> {
    if n > 1 {
        return Err(Error::InvalidInput(format!(
            "derivative order {n} not supported"
        )));
    }
    if !s.is_finite() {
        return Err(Error::InvalidInput("s must be finite".into()));
    }
    if s == 0.0 && n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let (a, b) = env.support();
    let mut bp = env.natural_breaks();
    if s != 0.0 {
        let period = 2.0 * PI / s.abs();
        let k0 = (a / period).ceil() as i64;
        let k1 = (b / period).floor() as i64;
        bp.extend(
            (k0..=k1)
                .map(|k| k as f64 * period)
                .filter(|x| *x > a && *x < b),
        );
        bp.sort_by(f64::total_cmp);
    }
    let est = integrate(
        |x: f64| {
            let phase = Complex64::from_polar(env.density(x), x * s);
            if n == 1 {
                phase * Complex64::new(0.0, x)
            } else {
                phase
            }
        },
        &bp,
        cfg,
    )?;
    Ok(est.value)
}

/// Smallest `C` with `|χ(s)| ≤ C (1+s²)^{−γ}` on the sampled grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c_gamma: f64,
    pub argmax_s: f64,
    /// The maximiser sits in the last tenth of the grid: the bound is not
    /// resolved on this grid and `C` keeps growing as it is extended.
    pub growing: bool,
}

pub fn decay_fit(env: &FourierEnvironment, gamma: f64, s_grid: &[f64]) -> Result<DecayFit> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if s_grid.len() < 2 || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "s grid must be strictly ascending".into(),
        ));
    }
    let min_pos = s_grid
        .iter()
        .map(|s| s.abs())
        .filter(|s| *s > 0.0)
        .fold(f64::INFINITY, f64::min);
    let max_abs = s_grid.iter().map(|s| s.abs()).fold(0.0, f64::max);
    if !(max_abs >= 100.0 * min_pos) {
        return Err(Error::InvalidInput(
            "s grid must cover at least two decades".into(),
        ));
    }
    let ratios: Vec<f64> = s_grid
        .par_iter()
        .map(|&s| chi_fourier(env, s, 0).map(|c| c.norm() * (1.0 + s * s).powf(gamma)))
        .collect::<Result<_>>()?;
    let (idx, c_gamma) =
        ratios
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (j, v)| {
                if v > best.1 {
                    (j, v)
                } else {
                    best
                }
            });
    let tail_start = s_grid.len() - (s_grid.len() / 10).max(1);
    Ok(DecayFit {
        c_gamma,
        argmax_s: s_grid[idx],
        growing: idx >= tail_start,
    })
}
