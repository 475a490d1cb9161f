//! Command-line harness: configuration, runs and result files.

pub mod config;
pub mod error;
pub mod run;
pub mod svg;
pub mod table;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use config::{parse_config, GridSpec, Mode, RunConfig, RunSection};
pub use error::CliError;
pub use run::{execute, RunOutput};
pub use table::{Provenance, ResultTable, SWEEP_COLUMNS};

/// Provenance of a run: the hash covers the canonical config text.
pub fn provenance(config: &RunConfig) -> Provenance {
    Provenance::new(&config.to_toml(), config.run.seed)
}

/// Renders the CSV table of a finished run.
pub fn render_csv(output: &RunOutput, config: &RunConfig) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    output.table.write_csv(&mut buf, &provenance(config))?;
    Ok(buf)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Executes `config`, writes the CSV to `run.out` (or standard output) and
/// the chart to `run.svg` when both a path and a chart exist. Partial
/// failures and oracle mismatches are reported as errors after the files
/// are written.
pub fn run_to_files(config: &RunConfig) -> Result<RunOutput, CliError> {
    let output = execute(config)?;
    let csv = render_csv(&output, config)?;
    match &config.run.out {
        Some(path) => write_file(path, &csv)?,
        None => std::io::stdout()
            .write_all(&csv)
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })?,
    }
    if let (Some(path), Some(svg)) = (&config.run.svg, &output.svg) {
        write_file(path, svg.as_bytes())?;
    }
    if !output.mismatches.is_empty() {
        return Err(CliError::OracleMismatch(output.mismatches.join("; ")));
    }
    if output.failed > 0 {
        return Err(CliError::PartialFailure {
            failed: output.failed,
        });
    }
    Ok(output)
}
