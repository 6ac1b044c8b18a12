// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

//! Batch front-end: JSON scenario in, CSV/JSON artifacts and
//! `summary.json` out.

mod run;
mod scenario;

use std::path::PathBuf;

use clap::Parser;

pub use run::{
    input_error_summary, run, write_outputs, RunOutcome, DEFAULT_ORACLE_TOLERANCE, EXIT_ASSERTION,
    EXIT_INPUT, EXIT_OK, FOURIER_CSV_HEADER, ORACLE_CSV_HEADER, RECURRENCE_CSV_HEADER,
};
pub use scenario::{
    BoundOptions, Command, ComplexPair, CurveOptions, FourierOptions, InputError, KernelSpec,
    OracleOptions, RecurrenceOptions, Scenario, Spacing, TimeGrid, Tolerances,
};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "vanhove",
    version,
    about = "Van Hove decoherence toolkit: batch scenario runner"
)]
pub struct Args {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the scenario's assertion tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Override the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

fn report_input_error(args: &Args, err: &InputError) -> i32 {
    eprintln!("error: {err}");
    let outcome = RunOutcome {
        exit_code: EXIT_INPUT,
        summary: input_error_summary(err),
        artifacts: vec![],
    };
    if let Err(e) = write_outputs(&args.out, "", &outcome) {
        eprintln!("error: cannot write summary: {e}");
    }
    EXIT_INPUT
}

/// Run the CLI with parsed arguments; returns the process exit code.
pub fn execute(args: &Args) -> i32 {
    let text = match std::fs::read_to_string(&args.scenario) {
        Ok(t) => t,
        Err(e) => {
            return report_input_error(
                args,
                &InputError {
                    pointer: String::new(),
                    message: format!("cannot read {}: {e}", args.scenario.display()),
                },
            )
        }
    };
    let mut scenario = match Scenario::from_json(&text) {
        Ok(s) => s,
        Err(e) => return report_input_error(args, &e),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(tol) = args.tolerance {
        scenario.tolerances.assertion = Some(tol);
        if let Err(e) = scenario.validate() {
            return report_input_error(args, &e);
        }
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return report_input_error(
                args,
                &InputError {
                    pointer: String::new(),
                    message: "--threads must be at least 1".into(),
                },
            );
        }
        pool = pool.num_threads(n);
    }
    let outcome = match pool.build() {
        Ok(p) => p.install(|| run(&scenario)),
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_INPUT;
        }
    };
    if let Some(msg) = outcome.summary.get("error").and_then(|e| e.get("message")) {
        eprintln!("error: {}", msg.as_str().unwrap_or_default());
    }
    if let Err(e) = write_outputs(&args.out, &scenario.output_prefix, &outcome) {
        eprintln!("error: cannot write outputs: {e}");
        return EXIT_INPUT;
    }
    outcome.exit_code
}

/// Parse process arguments and run; usage errors exit with status 1.
pub fn main_entry() -> i32 {
    match Args::try_parse() {
        Ok(args) => execute(&args),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
