// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use super::scenario::{Command, InputError, KernelSpec, Scenario};
use crate::bounds::{
    measure_bound, random_operator, random_sector_spec, seeded_rng, DephasingKernel, FourierKernel,
    GaussianKernel, VanHoveKernel, BOUND_SLACK,
};
use crate::decoherence::{curve_with, psi, recurrence_scan, ReferenceState};
use crate::envmodels::{chi_fourier, decay_fit};
use crate::error::Error;
use crate::oracle::{uniform_superposition, EvaluatedModel};
use crate::quadrature::QuadConfig;
use crate::spectral::{IrClassifier, MeasureSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;

pub const DEFAULT_ORACLE_TOLERANCE: f64 = 1e-6;

pub const FOURIER_CSV_HEADER: &str = "s,psi,phi,re_chi,im_chi,abs_chi";
pub const ORACLE_CSV_HEADER: &str = "t,max_deviation,max_modulus_deviation,top_level_mass";
pub const RECURRENCE_CSV_HEADER: &str = "t,psi";

/// Result of one scenario run; files are written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: Value,
    pub artifacts: Vec<(String, String)>,
}

enum Failure {
    Input(InputError),
    Assertion(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BoundViolation { .. } => Failure::Assertion(e.to_string()),
            Error::QuadratureFailure { .. } => Failure::Other(e.to_string()),
            other => Failure::Input(InputError {
                pointer: String::new(),
                message: other.to_string(),
            }),
        }
    }
}

struct Output {
    outcome: Value,
    artifacts: Vec<(String, String)>,
    failed_assertion: Option<String>,
}

fn quad(s: &Scenario) -> QuadConfig {
    match s.tolerances.quadrature_rel {
        Some(r) => QuadConfig::default().with_rel_tol(r),
        None => QuadConfig::default(),
    }
}

fn reference(s: &Scenario) -> ReferenceState {
    s.reference.clone().unwrap_or_default()
}

fn classify(s: &Scenario) -> Result<Output, Failure> {
    let m = s.measure.as_ref().expect("validated");
    let classifier = IrClassifier::default();
    let class = classifier.classify(m)?;
    let exponent = match m.spec() {
        MeasureSpec::TabulatedDensity { .. } if !m.moment(2).is_finite() => {
            Some(classifier.low_end_exponent(m)?)
        }
        _ => None,
    };
    Ok(Output {
        outcome: json!({
            "ir_class": class,
            "moments": m.moments(),
            "low_end_exponent": exponent,
        }),
        artifacts: vec![],
        failed_assertion: None,
    })
}

fn curve(s: &Scenario) -> Result<Output, Failure> {
    let m = s.measure.as_ref().expect("validated");
    let opts = s.curve.expect("validated");
    let times = s.grid.expect("validated").points();
    let c = curve_with(m, opts.alpha, opts.beta, &reference(s), &times, &quad(s))?;
    let min_abs = c.chi.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let max_psi = c.psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Output {
        outcome: json!({ "points": times.len(), "min_abs_chi": min_abs, "max_psi": max_psi }),
        artifacts: vec![("curve.csv".into(), c.to_csv())],
        failed_assertion: None,
    })
}

fn recurrence(s: &Scenario) -> Result<Output, Failure> {
    let m = s.measure.as_ref().expect("validated");
    let opts = s.recurrence.expect("validated");
    let hits = recurrence_scan(m, opts.horizon, opts.threshold)?;
    let mut csv = format!("{RECURRENCE_CSV_HEADER}\n");
    for &t in &hits {
        csv.push_str(&crate::csv::row(&[Some(t), Some(psi(m, t)?)]));
    }
    Ok(Output {
        outcome: json!({ "count": hits.len(), "recurrences": hits }),
        artifacts: vec![("recurrences.csv".into(), csv)],
        failed_assertion: None,
    })
}

fn fourier(s: &Scenario) -> Result<Output, Failure> {
    use rayon::prelude::*;
    let env = s.env.as_ref().expect("validated");
    let grid = s.grid.expect("validated").points();
    let values: Vec<Complex64> = grid
        .par_iter()
        .map(|&x| chi_fourier(env, x, 0))
        .collect::<crate::Result<_>>()?;
    let mut csv = format!("{FOURIER_CSV_HEADER}\n");
    for (x, c) in grid.iter().zip(&values) {
        csv.push_str(&crate::csv::row(&[
            Some(*x),
            Some(-2.0 * c.norm().ln()),
            Some(-c.arg()),
            Some(c.re),
            Some(c.im),
            Some(c.norm()),
        ]));
    }
    let fit = match s.fourier.and_then(|f| f.gamma) {
        Some(g) => Some(decay_fit(env, g, &grid)?),
        None => None,
    };
    Ok(Output {
        outcome: json!({ "points": grid.len(), "decay_fit": fit }),
        artifacts: vec![("fourier.csv".into(), csv)],
        failed_assertion: None,
    })
}

fn parse_rho(rows: &[Vec<[f64; 2]>], d: usize) -> Result<DMatrix<Complex64>, Failure> {
    let bad = |message: String| {
        Failure::Input(InputError {
            pointer: "/oracle/rho0".into(),
            message,
        })
    };
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(bad(format!("must be {d}×{d}")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn oracle(s: &Scenario) -> Result<Output, Failure> {
    let model = s.model.clone().expect("validated");
    let d = model.system_dim();
    let rho0 = match s.oracle.as_ref().and_then(|o| o.rho0.as_ref()) {
        Some(rows) => parse_rho(rows, d)?,
        None => uniform_superposition(d),
    };
    let times = s.grid.expect("validated").points();
    let report = EvaluatedModel::new(model)?.compare_with_analytic(&rho0, &reference(s), &times)?;
    let tol = s.tolerances.assertion.unwrap_or(DEFAULT_ORACLE_TOLERANCE);
    let mut csv = format!("{ORACLE_CSV_HEADER}\n");
    for k in 0..times.len() {
        csv.push_str(&crate::csv::row(&[
            Some(report.times[k]),
            Some(report.max_deviation[k]),
            Some(report.max_modulus_deviation[k]),
            Some(report.top_level_mass[k]),
        ]));
    }
    let passed = report.max_error < tol;
    Ok(Output {
        outcome: json!({
            "max_error": report.max_error,
            "tolerance": tol,
            "passed": passed,
            "gate_value": report.gate_value,
            "gate_limit": report.gate_limit,
            "max_trace_error": report.max_trace_error,
            "min_eigenvalue": report.min_eigenvalue,
        }),
        artifacts: vec![
            ("oracle.csv".into(), csv),
            (
                "oracle.json".into(),
                serde_json::to_string_pretty(&report).expect("report serializes"),
            ),
        ],
        failed_assertion: (!passed).then(|| {
            format!(
                "oracle deviation {:e} exceeds tolerance {:e}",
                report.max_error, tol
            )
        }),
    })
}

fn bound(s: &Scenario) -> Result<Output, Failure> {
    let opts = s.bound.clone().expect("validated");
    let times = s.grid.expect("validated").points();
    let kernel: Box<dyn DephasingKernel> = match &opts.kernel {
        KernelSpec::VanHove => Box::new(VanHoveKernel::new(
            s.measure.clone().expect("validated"),
            reference(s),
        )?),
        KernelSpec::Gaussian { mean, sigma } => Box::new(GaussianKernel {
            mean: *mean,
            sigma: *sigma,
        }),
        KernelSpec::Fourier => Box::new(FourierKernel {
            env: s.env.clone().expect("validated"),
        }),
    };
    let slack = s.tolerances.assertion.unwrap_or(BOUND_SLACK);
    let mut rng = seeded_rng(s.seed);
    let mut artifacts = Vec::new();
    let mut trials = Vec::new();
    let mut violations = 0usize;
    for k in 0..opts.trials {
        let spec = match &opts.sectors {
            Some(sp) => sp.clone(),
            None => random_sector_spec(opts.dim, &mut rng)?,
        };
        let a = random_operator(spec.dim(), &mut rng);
        let report = measure_bound(&a, &spec, kernel.as_ref(), &times, opts.mode, opts.envelope)?;
        let bad = (0..times.len())
            .filter(|&j| report.measured_norm[j] > report.bound_e3[j] + slack)
            .count();
        violations += bad;
        let max_ratio = report
            .measured_norm
            .iter()
            .zip(&report.bound_e3)
            .map(|(m, b)| m / b)
            .fold(0.0, f64::max);
        artifacts.push((format!("bound_{k:03}.csv"), report.to_csv()));
        trials.push(json!({
            "trial": k,
            "violations": bad,
            "max_ratio": max_ratio,
            "envelope_constant": report.envelope_constant,
            "envelope_gamma": report.envelope_gamma,
            "gap": report.gap,
            "grid_too_coarse": report.grid_too_coarse,
            "sectors": spec,
        }));
    }
    Ok(Output {
        outcome: json!({ "trials": trials, "violations": violations, "slack": slack }),
        artifacts,
        failed_assertion: (violations > 0).then(|| format!("{violations} bound violations")),
    })
}

fn base_summary(scenario: Option<&Scenario>) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(scenario.map(|s| s.command)));
    m.insert(
        "scenario".into(),
        scenario.map_or(Value::Null, |s| {
            serde_json::to_value(s).expect("scenario serializes")
        }),
    );
    m
}

/// Summary for a scenario that failed to parse.
pub fn input_error_summary(err: &InputError) -> Value {
    let mut m = base_summary(None);
    m.insert("status".into(), json!("input_error"));
    m.insert("exit_code".into(), json!(EXIT_INPUT));
    m.insert(
        "error".into(),
        json!({ "pointer": err.pointer, "message": err.message }),
    );
    Value::Object(m)
}

/// Execute a validated scenario.
pub fn run(scenario: &Scenario) -> RunOutcome {
    let result = match scenario.command {
        Command::Classify => classify(scenario),
        Command::Curve => curve(scenario),
        Command::Recurrence => recurrence(scenario),
        Command::Fourier => fourier(scenario),
        Command::Oracle => oracle(scenario),
        Command::Bound => bound(scenario),
    };
    let mut m = base_summary(Some(scenario));
    let (exit_code, artifacts) = match result {
        Ok(out) => {
            let code = if out.failed_assertion.is_some() {
                EXIT_ASSERTION
            } else {
                EXIT_OK
            };
            m.insert(
                "status".into(),
                json!(if code == EXIT_OK {
                    "ok"
                } else {
                    "assertion_failure"
                }),
            );
            m.insert("outcome".into(), out.outcome);
            if let Some(msg) = out.failed_assertion {
                m.insert("error".into(), json!({ "message": msg }));
            }
            (code, out.artifacts)
        }
        Err(Failure::Input(e)) => {
            m.insert("status".into(), json!("input_error"));
            m.insert(
                "error".into(),
                json!({ "pointer": e.pointer, "message": e.message }),
            );
            (EXIT_INPUT, vec![])
        }
        Err(Failure::Assertion(msg)) => {
            m.insert("status".into(), json!("assertion_failure"));
            m.insert("error".into(), json!({ "message": msg }));
            (EXIT_ASSERTION, vec![])
        }
        Err(Failure::Other(msg)) => {
            m.insert("status".into(), json!("error"));
            m.insert("error".into(), json!({ "message": msg }));
            (EXIT_INPUT, vec![])
        }
    };
    let prefix = &scenario.output_prefix;
    let artifacts: Vec<(String, String)> = artifacts
        .into_iter()
        .map(|(n, c)| (format!("{prefix}{n}"), c))
        .collect();
    m.insert("exit_code".into(), json!(exit_code));
    m.insert(
        "artifacts".into(),
        json!(artifacts.iter().map(|a| &a.0).collect::<Vec<_>>()),
    );
    RunOutcome {
        exit_code,
        summary: Value::Object(m),
        artifacts,
    }
}

/// Write artifacts and `<prefix>summary.json` into `dir`.
pub fn write_outputs(dir: &Path, prefix: &str, outcome: &RunOutcome) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, content) in &outcome.artifacts {
        fs::write(dir.join(name), content)?;
    }
    let mut text = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
    text.push('\n');
    fs::write(dir.join(format!("{prefix}summary.json")), text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Scenario {
        Scenario::from_json(text).unwrap()
    }

    #[test]
    fn classify_power_law() {
        let out = run(&scenario(
            r#"{"command":"classify","seed":0,"measure":{"kind":"powerlaw","amplitude":0.1,"exponent":0.5,"cutoff":1.0}}"#,
        ));
        assert_eq!(out.exit_code, EXIT_OK);
        assert_eq!(out.summary["outcome"]["ir_class"], "ir_dominant");
    }

    #[test]
    fn curve_with_equal_sectors_is_flat() {
        let out = run(&scenario(
            r#"{"command":"curve","seed":0,"measure":{"kind":"powerlaw","amplitude":0.1,"exponent":0.5,"cutoff":1.0},
                "curve":{"alpha":0.3,"beta":0.3},"grid":{"start":0.0,"stop":10.0,"count":11}}"#,
        ));
        assert_eq!(out.exit_code, EXIT_OK);
        for line in out.artifacts[0].1.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!((cols[3], cols[4]), ("1", "0"));
        }
    }

    #[test]
    fn oracle_acceptance_run() {
        let out = run(&scenario(
            r#"{"command":"oracle","seed":0,"grid":{"start":0.0,"stop":20.0,"count":50},
                "model":{"f_eigenvalues":[0.0,1.0],"preset":"velocity","modes":[{"frequency":1.0,"coupling":0.2}],"fock_cutoff":40}}"#,
        ));
        assert_eq!(out.exit_code, EXIT_OK);
        assert!(out.summary["outcome"]["max_error"].as_f64().unwrap() < 1e-6);
    }

    #[test]
    fn oracle_tolerance_failure_exits_two() {
        let out = run(&scenario(
            r#"{"command":"oracle","seed":0,"grid":{"start":0.0,"stop":20.0,"count":20},"tolerances":{"assertion":1e-300},
                "model":{"f_eigenvalues":[0.0,1.0],"preset":"velocity","modes":[{"frequency":1.0,"coupling":0.2}],"fock_cutoff":6}}"#,
        ));
        assert_eq!(out.exit_code, EXIT_ASSERTION);
    }

    #[test]
    fn semantic_error_exits_one() {
        let out = run(&scenario(
            r#"{"command":"recurrence","seed":0,"measure":{"kind":"powerlaw","amplitude":0.1,"exponent":0.5,"cutoff":1.0},
                "recurrence":{"horizon":10.0}}"#,
        ));
        assert_eq!(out.exit_code, EXIT_INPUT);
        assert_eq!(out.summary["status"], "input_error");
    }

    #[test]
    fn bound_run_is_seeded() {
        let text = r#"{"command":"bound","seed":9,"grid":{"start":0.0,"stop":5.0,"count":6},
                "bound":{"kernel":{"kind":"gaussian","mean":0.0,"sigma":1.0},"dim":6,"trials":2}}"#;
        let a = run(&scenario(text));
        let b = run(&scenario(text));
        assert_eq!(a.exit_code, EXIT_OK);
        assert_eq!(a.artifacts, b.artifacts);
        assert_eq!(a.artifacts.len(), 2);
    }

    #[test]
    fn summary_embeds_scenario() {
        let s = scenario(
            r#"{"command":"fourier","seed":0,"env":{"kind":"gaussian","mean":0.0,"sigma":1.0},"grid":{"start":0.0,"stop":8.0,"count":9}}"#,
        );
        let out = run(&s);
        let back: Scenario = serde_json::from_value(out.summary["scenario"].clone()).unwrap();
        assert_eq!(back, s);
    }
}
