//! Writing tables and reports, and mapping run outcomes to exit codes.

use std::path::{Path, PathBuf};

use pdca::Termination;

use crate::config::Formats;
use crate::experiments::ExperimentOutput;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ITER_BUDGET: i32 = 2;
pub const EXIT_UNCERTIFIABLE: i32 = 3;
pub const EXIT_SOLVER_FAILURE: i32 = 4;

/// Worst outcome wins: failure, then uncertifiable, then budget.
pub fn exit_code(terminations: impl IntoIterator<Item = Termination>) -> i32 {
    terminations
        .into_iter()
        .map(|t| match t {
            Termination::Converged => EXIT_CONVERGED,
            Termination::IterBudget => EXIT_ITER_BUDGET,
            Termination::Uncertifiable => EXIT_UNCERTIFIABLE,
            Termination::Failed => EXIT_SOLVER_FAILURE,
        })
        .max()
        .unwrap_or(EXIT_CONVERGED)
}

/// Writes CSV tables and `<stem>.json` reports into `dir`, returning the paths.
pub fn write_output(dir: &Path, formats: Formats, output: &ExperimentOutput) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if formats.csv {
        for table in &output.tables {
            let path = dir.join(&table.file);
            std::fs::write(&path, table.to_csv())?;
            written.push(path);
        }
    }
    if formats.json {
        for (stem, report) in &output.reports {
            let path = dir.join(format!("{stem}.json"));
            std::fs::write(&path, report.to_json())?;
            written.push(path);
        }
    }
    Ok(written)
}
