// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::bounds::{EnvelopeSpec, GaussianKernel, SectorSpec, SupMode};
use crate::decoherence::ReferenceState;
use crate::envmodels::FourierEnvironment;
use crate::error::Fields;
use crate::oracle::TruncatedModel;
use crate::spectral::SpectralMeasure;

/// Subcommand selected by a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Classify,
    Curve,
    Recurrence,
    Fourier,
    Oracle,
    Bound,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Curve => "curve",
            Command::Recurrence => "recurrence",
            Command::Fourier => "fourier",
            Command::Oracle => "oracle",
            Command::Bound => "bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// `count` points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl TimeGrid {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err("start and stop must be finite".into());
        }
        if self.count == 0 {
            return Err("count must be at least 1".into());
        }
        if self.count > 1 && !(self.stop > self.start) {
            return Err("stop must exceed start".into());
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0) {
            return Err("log spacing needs start > 0".into());
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    return self.stop;
                }
                let u = k as f64 / n;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * u,
                    Spacing::Log => self.start * ((self.stop / self.start).ln() * u).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveOptions {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceOptions {
    pub horizon: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierOptions {
    /// Decay exponent for the `C_γ` fit; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

/// Complex entry as `[re, im]`.
pub type ComplexPair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleOptions {
    /// Initial system state, row-major `[re, im]` pairs; the uniform
    /// superposition when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<Vec<Vec<ComplexPair>>>,
}

/// Kernel used by the `bound` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "KernelWire")]
pub enum KernelSpec {
    /// Closed-form factor for the scenario's `measure` and `reference`.
    VanHove,
    Gaussian {
        mean: f64,
        sigma: f64,
    },
    /// Quadrature transform of the scenario's `env`.
    Fourier,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum KernelKind {
    VanHove,
    Gaussian,
    Fourier,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelWire {
    kind: KernelKind,
    mean: Option<f64>,
    sigma: Option<f64>,
}

impl TryFrom<KernelWire> for KernelSpec {
    type Error = crate::Error;

    fn try_from(w: KernelWire) -> crate::Result<Self> {
        let (kind, spec) = match w.kind {
            KernelKind::VanHove => ("van_hove", KernelSpec::VanHove),
            KernelKind::Fourier => ("fourier", KernelSpec::Fourier),
            KernelKind::Gaussian => {
                let f = Fields { kind: "gaussian" };
                return Ok(KernelSpec::Gaussian {
                    mean: f.need(w.mean, "mean")?,
                    sigma: f.need(w.sigma, "sigma")?,
                });
            }
        };
        let f = Fields { kind };
        f.forbid(&w.mean, "mean")?;
        f.forbid(&w.sigma, "sigma")?;
        Ok(spec)
    }
}

impl From<GaussianKernel> for KernelSpec {
    fn from(k: GaussianKernel) -> Self {
        KernelSpec::Gaussian {
            mean: k.mean,
            sigma: k.sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundOptions {
    pub kernel: KernelSpec,
    /// Fixed sector layout; random layouts of dimension `dim` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sectors: Option<SectorSpec>,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub mode: SupMode,
    #[serde(default)]
    pub envelope: EnvelopeSpec,
}

fn default_dim() -> usize {
    20
}

fn default_trials() -> usize {
    1
}

/// Overrides for assertion thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Oracle: largest allowed deviation from the closed form (default
    /// `1e−6`). Bound: slack on the inequality (default `1e−9`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assertion: Option<f64>,
    /// Relative quadrature tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_rel: Option<f64>,
}

/// A batch job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub command: Command,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub output_prefix: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<TimeGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<SpectralMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<FourierEnvironment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<TruncatedModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recurrence: Option<RecurrenceOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<FourierOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundOptions>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Input error located by a JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError {
    pub pointer: String,
    pub message: String,
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let at = if self.pointer.is_empty() {
            "/"
        } else {
            &self.pointer
        };
        write!(f, "{at}: {}", self.message)
    }
}

fn missing(field: &str, command: Command) -> InputError {
    InputError {
        pointer: format!("/{field}"),
        message: format!("required by command `{}`", command.name()),
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Enum { .. } | Segment::Unknown => {}
        }
    }
    out
}

impl Scenario {
    /// Parse and validate; errors carry the JSON pointer of the offending
    /// field.
    pub fn from_json(text: &str) -> Result<Self, InputError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| InputError {
            pointer: pointer_of(e.path()),
            message: e.inner().to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Check that the sub-configurations the command needs are present.
    pub fn validate(&self) -> Result<(), InputError> {
        let c = self.command;
        let need_grid = || -> Result<(), InputError> {
            let g = self.grid.as_ref().ok_or_else(|| missing("grid", c))?;
            g.validate().map_err(|message| InputError {
                pointer: "/grid".into(),
                message,
            })
        };
        match c {
            Command::Classify => {
                self.measure.as_ref().ok_or_else(|| missing("measure", c))?;
            }
            Command::Curve => {
                self.measure.as_ref().ok_or_else(|| missing("measure", c))?;
                self.curve.as_ref().ok_or_else(|| missing("curve", c))?;
                need_grid()?;
            }
            Command::Recurrence => {
                self.measure.as_ref().ok_or_else(|| missing("measure", c))?;
                self.recurrence
                    .as_ref()
                    .ok_or_else(|| missing("recurrence", c))?;
            }
            Command::Fourier => {
                self.env.as_ref().ok_or_else(|| missing("env", c))?;
                need_grid()?;
            }
            Command::Oracle => {
                self.model.as_ref().ok_or_else(|| missing("model", c))?;
                need_grid()?;
            }
            Command::Bound => {
                let b = self.bound.as_ref().ok_or_else(|| missing("bound", c))?;
                need_grid()?;
                match b.kernel {
                    KernelSpec::VanHove => {
                        self.measure.as_ref().ok_or_else(|| missing("measure", c))?;
                    }
                    KernelSpec::Fourier => {
                        self.env.as_ref().ok_or_else(|| missing("env", c))?;
                    }
                    KernelSpec::Gaussian { .. } => {}
                }
                if b.trials == 0 {
                    return Err(InputError {
                        pointer: "/bound/trials".into(),
                        message: "must be at least 1".into(),
                    });
                }
                if b.sectors.is_none() && b.dim < 2 {
                    return Err(InputError {
                        pointer: "/bound/dim".into(),
                        message: "random sector layouts need dim ≥ 2".into(),
                    });
                }
            }
        }
        if let Some(tol) = self.tolerances.assertion {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(InputError {
                    pointer: "/tolerances/assertion".into(),
                    message: "must be positive".into(),
                });
            }
        }
        if let Some(tol) = self.tolerances.quadrature_rel {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(InputError {
                    pointer: "/tolerances/quadrature_rel".into(),
                    message: "must lie in (0, 1)".into(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointer_for_nested_error() {
        let err = Scenario::from_json(
            r#"{"command":"classify","seed":1,"measure":{"kind":"discrete","modes":[{"frequency":1.0,"weight":"x"}]}}"#,
        )
        .unwrap_err();
        assert_eq!(err.pointer, "/measure/modes/0/weight");
    }

    #[test]
    fn seed_is_mandatory() {
        let err = Scenario::from_json(r#"{"command":"classify","measure":{"kind":"powerlaw","amplitude":0.1,"exponent":0.5,"cutoff":1.0}}"#)
            .unwrap_err();
        assert!(err.message.contains("seed"));
    }

    #[test]
    fn missing_sub_config() {
        let err = Scenario::from_json(r#"{"command":"curve","seed":1,"measure":{"kind":"powerlaw","amplitude":0.1,"exponent":0.5,"cutoff":1.0}}"#)
            .unwrap_err();
        assert_eq!(err.pointer, "/curve");
    }

    #[test]
    fn grid_points() {
        let g = TimeGrid {
            start: 1.0,
            stop: 100.0,
            count: 3,
            spacing: Spacing::Log,
        };
        let p = g.points();
        assert_eq!(p[0], 1.0);
        assert!((p[1] - 10.0).abs() < 1e-12);
        assert_eq!(p[2], 100.0);
        let lin = TimeGrid {
            start: 0.0,
            stop: 1.0,
            count: 5,
            spacing: Spacing::Linear,
        };
        assert_eq!(lin.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn round_trip() {
        let text = r#"{"command":"oracle","seed":3,"grid":{"start":0.0,"stop":20.0,"count":200},
            "model":{"f_eigenvalues":[0.0,1.0],"preset":"velocity","modes":[{"frequency":1.0,"coupling":0.2}],"fock_cutoff":40}}"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }
}
