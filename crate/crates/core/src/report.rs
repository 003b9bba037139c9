//! Run reports: per-iteration trace plus a final summary, serializable to JSON
//! and CSV.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::algorithms::AlgoConfig;
use crate::error::DcError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dca,
    RevisedDca,
    Pdca,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Dca => "dca",
            Algorithm::RevisedDca => "revised_dca",
            Algorithm::Pdca => "pdca",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterBudget,
    Uncertifiable,
    Failed,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::IterBudget => "iter_budget",
            Termination::Uncertifiable => "uncertifiable",
            Termination::Failed => "failed",
        }
    }
}

/// What kind of limit point a converged run certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    /// Stopped by the step gate only; criticality, not d-stationarity.
    Critical,
    /// ℛ fell below τ.
    DStationary,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    /// Iteration index; the record describes `x^k`.
    pub k: usize,
    pub zeta: f64,
    /// `‖x^k − x^{k−1}‖`.
    pub step_norm: f64,
    pub subproblems: usize,
    pub piece: String,
    pub alpha: Option<f64>,
    pub retries: usize,
    pub x: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub x: Vec<f64>,
    pub zeta: f64,
    pub residual: Option<f64>,
    pub residual_active_tol: Option<f64>,
    pub active_set_size: Option<usize>,
    pub total_subproblems: usize,
    pub iterations: usize,
    pub decision: Termination,
    pub limit_kind: LimitKind,
    pub seconds: f64,
    pub schedule_conforming: Option<bool>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub problem: String,
    pub config: AlgoConfig,
    pub initial_zeta: f64,
    pub records: Vec<IterRecord>,
    #[serde(rename = "final")]
    pub summary: FinalSummary,
}

/// Column order of [`RunReport::summary_csv_row`].
pub const SUMMARY_COLUMNS: [&str; 5] = ["iter", "subproblems", "zeta", "residual", "seconds"];

/// Column order of [`RunReport::trace_csv`].
pub const TRACE_COLUMNS: [&str; 8] =
    ["k", "zeta", "step_norm", "subproblems", "piece", "alpha", "retries", "x"];

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.summary.decision == Termination::Converged
    }

    /// Sum of per-iteration subproblem counts.
    pub fn trace_subproblems(&self) -> usize {
        self.records.iter().map(|r| r.subproblems).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite-serializable data")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Copy with the wall-clock field zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.summary.seconds = 0.0;
        r
    }

    pub fn summary_csv_row(&self) -> String {
        format!(
            "{},{},{:e},{},{:.6}",
            self.summary.iterations,
            self.summary.total_subproblems,
            self.summary.zeta,
            opt(self.summary.residual),
            self.summary.seconds
        )
    }

    pub fn trace_csv(&self) -> String {
        let mut out = TRACE_COLUMNS.join(",");
        out.push('\n');
        for r in &self.records {
            let x = r
                .x
                .as_ref()
                .map(|x| x.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(";"))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{:e},{:e},{},{},{},{},{}",
                r.k,
                r.zeta,
                r.step_norm,
                r.subproblems,
                r.piece.replace(',', ";"),
                opt(r.alpha),
                r.retries,
                x
            );
        }
        out
    }
}

/// A run that stopped on an error, with everything recorded up to that point.
#[derive(Clone, Debug)]
pub struct RunFailure {
    pub error: DcError,
    pub report: Box<RunReport>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} run failed: {}", self.report.algorithm.as_str(), self.error)
    }
}

impl std::error::Error for RunFailure {}

/// Monotonic timer; reads zero on targets without a clock.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}
