//! Configuration-driven experiment runner behind the `fhlab` binary.

pub mod config;
pub mod experiments;
pub mod output;

use config::{ConfigError, Experiment, RunConfig};
use frac_helmholtz::Error;
use output::Artifacts;
use serde_json::json;
use std::path::Path;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "FHLAB_THREADS";

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("{THREADS_VAR}: {v:?} is not a positive integer")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn status_of(e: &anyhow::Error) -> &'static str {
    match e.downcast_ref::<Error>() {
        Some(Error::NonContraction(_)) => "non-contraction",
        Some(Error::BallExit(_)) => "ball-exit",
        Some(Error::Convergence(_)) => "convergence-failure",
        Some(Error::Geometry(_)) => "geometry-failure",
        Some(Error::Inconsistency(_)) => "inconsistent",
        _ => "error",
    }
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.downcast_ref::<ConfigError>().is_some() || e.downcast_ref::<Error>().is_some_and(|e| e.is_input_error())
}

/// Runs one experiment and returns the process exit status.
pub fn execute(exp: Experiment, config: &Path, out: &Path, seed: Option<u64>, verbose: bool) -> i32 {
    let mut cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("fhlab: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(s) = seed {
        cfg.solver.seed = s;
    }
    if let Err(e) = cfg.validate(exp).and_then(|_| configure_threads()) {
        eprintln!("fhlab: {e}");
        return EXIT_CONFIG;
    }
    let hash = cfg.hash();
    if verbose {
        eprintln!("fhlab: {exp} config_hash={hash}");
    }
    let mut art = match Artifacts::new(out, hash.clone(), cfg.output.snapshots) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("fhlab: {e:#}");
            return EXIT_FAIL;
        }
    };
    let (code, body) = match experiments::run(exp, &cfg, &mut art) {
        Ok(rep) => {
            let status = if rep.pass { "pass" } else { "fail" };
            if verbose {
                eprintln!("fhlab: {exp} {status}");
            }
            let code = if rep.pass { EXIT_PASS } else { EXIT_FAIL };
            (code, json!({ "status": status, "summary": rep.summary }))
        }
        Err(e) if is_config_error(&e) => {
            eprintln!("fhlab: {e:#}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("fhlab: {exp} failed: {e:#}");
            (EXIT_FAIL, json!({ "status": status_of(&e), "diagnostic": format!("{e:#}") }))
        }
    };
    let mut body = body;
    body["experiment"] = json!(exp);
    body["config_hash"] = json!(hash);
    body["artifacts"] = json!(art.written());
    if let Err(e) = art.json(&cfg.json_name(exp), &body) {
        eprintln!("fhlab: {e:#}");
        return EXIT_FAIL;
    }
    code
}
