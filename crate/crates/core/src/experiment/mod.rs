//! Configuration-driven sweeps over cases, mesh levels, `σ` values and estimators.

mod config;
mod sweep;

use std::path::{Path, PathBuf};

pub use config::{parse_config, CDagSource, ExperimentConfig, PolicyConfig, DEFAULT_CALIBRATION_LEVELS, KNOWN_KEYS};
pub use sweep::{
    calibrate_case, run_sweep, CsvRow, RateFit, RowStatus, Summary, SweepOutcome, CSV_HEADER, GUARANTEE_SLACK,
};

use crate::error::Result;

/// Path of the JSON summary written next to `csv_path`.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("summary.json")
}

/// Write the CSV and its JSON summary.
pub fn write_outputs(outcome: &SweepOutcome, csv_path: &Path) -> Result<PathBuf> {
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(csv_path, outcome.csv())?;
    let summary = summary_path(csv_path);
    let json = serde_json::to_string_pretty(&outcome.summary).map_err(|e| crate::Error::Io(e.to_string()))?;
    std::fs::write(&summary, json + "\n")?;
    Ok(summary)
}
