//! Config-driven experiment runner: parses a JSON experiment description,
//! dispatches to a scenario and writes hashed, reproducible artifacts.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;

use config::ExperimentConfig;
use error::CliError;
use output::OutputDir;
use serde_json::json;
use std::path::Path;

/// Runs one experiment and writes `summary.json` next to its tables.
/// On failure a `diagnostic.json` is left in `out_dir` instead.
pub fn run_experiment(cfg: &ExperimentConfig, config_text: &str, out_dir: &Path) -> Result<OutputDir, CliError> {
    let hash = config::config_hash(config_text);
    let mut out = OutputDir::create(out_dir, &hash)?;
    match scenarios::run_scenario(cfg, &mut out) {
        Ok(summary) => {
            let mut files = out.written().to_vec();
            files.push("summary.json".into());
            out.write_json(
                "summary.json",
                json!({ "scenario": cfg.scenario.tag(), "files": files, "results": summary }),
            )?;
            Ok(out)
        }
        Err(e) => {
            output::write_diagnostic(out_dir, &hash, &e)?;
            Err(e)
        }
    }
}
