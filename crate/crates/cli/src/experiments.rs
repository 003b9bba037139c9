//! The four experiments. Each returns typed results that render to CSV tables and
//! per-run JSON reports.

use std::path::Path;

use pdca::data::{
    gen_ksparse_seeded, kmedians_baseline, load_csv_with, CsvOptions, DataError, Dataset, KsparseInstanceSpec,
};
use pdca::perturbation::derive_seed;
use pdca::problems::{CappedL1Problem, KmediansProblem, KsparseProblem, Toy1dProblem};
use pdca::report::SUMMARY_COLUMNS;
use pdca::{
    residual_with, run_dca, run_pdca, run_revised_dca, seeded_rng, AlgoConfig, DcProblem, RunReport,
    RunResult, StopConfig, Termination, Vector,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ExperimentConfig, ExperimentKind, LabelColumn, Penalty};

#[derive(Debug, Error)]
pub enum ExperimentError {
    /// Unreadable file; the message already names the path.
    #[error(transparent)]
    DatasetIo(DataError),
    #[error("dataset {path}: {source}")]
    Dataset { path: String, source: DataError },
    #[error("{0}")]
    Setup(String),
}

/// A CSV table: fixed column names plus rendered rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file: &str, columns: &[&str]) -> Self {
        Table {
            file: file.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Everything an experiment produced.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub tables: Vec<Table>,
    /// `(file stem, report)` for every solver run.
    pub reports: Vec<(String, RunReport)>,
}

impl ExperimentOutput {
    pub fn terminations(&self) -> impl Iterator<Item = Termination> + '_ {
        self.reports.iter().map(|(_, r)| r.summary.decision)
    }
}

fn unwrap_run(r: RunResult) -> RunReport {
    r.unwrap_or_else(|f| *f.report)
}

fn sci(v: f64) -> String {
    format!("{v:e}")
}

fn opt_sci(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

fn with_tau(algo: &AlgoConfig, tau: f64) -> AlgoConfig {
    AlgoConfig {
        stop: StopConfig { tau, ..algo.stop.clone() },
        ..algo.clone()
    }
}

pub fn nnz(x: &[f64]) -> usize {
    x.iter().filter(|v| **v != 0.0).count()
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    Ok(match cfg.kind {
        ExperimentKind::ToyCompare => toy_compare(cfg).output(),
        ExperimentKind::Ksparse => ksparse(cfg)?.output(),
        ExperimentKind::KsparseCompare => ksparse_compare(cfg)?.output(),
        ExperimentKind::Kmedians => kmedians(cfg)?.output(),
    })
}

/// Conversion of typed results into tables and named reports.
pub trait Render {
    fn output(self) -> ExperimentOutput;
}

pub struct ToyCompare {
    pub x0: f64,
    pub dca: RunReport,
    pub pdca: RunReport,
}

/// DCA and pDCA on the 1-D example from the same start.
pub fn toy_compare(cfg: &ExperimentConfig) -> ToyCompare {
    let algo = AlgoConfig {
        record_iterates: true,
        ..with_tau(&cfg.algo, cfg.tau[0])
    };
    let x0 = Vector::from_element(1, cfg.x0);
    let dca = unwrap_run(run_dca(&Toy1dProblem, &x0, &algo, &mut seeded_rng(algo.seed)));
    let pdca = unwrap_run(run_pdca(&Toy1dProblem, &x0, &algo, &mut seeded_rng(algo.seed)));
    ToyCompare { x0: cfg.x0, dca, pdca }
}

impl Render for ToyCompare {
    fn output(self) -> ExperimentOutput {
        let mut summary = Table::new(
            "toy_summary.csv",
            &["algorithm", "iter", "subproblems", "zeta", "residual", "seconds", "x_final", "limit_kind", "decision"],
        );
        let mut trace = Table::new("toy_trace.csv", &["algorithm", "k", "x", "zeta", "piece", "alpha"]);
        for r in [&self.dca, &self.pdca] {
            let name = r.algorithm.as_str();
            let mut row = vec![name.to_string()];
            row.extend(r.summary_csv_row().split(',').map(str::to_string));
            row.push(sci(r.summary.x[0]));
            row.push(format!("{:?}", r.summary.limit_kind).to_lowercase());
            row.push(r.summary.decision.as_str().to_string());
            summary.rows.push(row);
            for rec in &r.records {
                let x = rec.x.as_ref().map(|x| sci(x[0])).unwrap_or_default();
                trace.rows.push(vec![
                    name.to_string(),
                    rec.k.to_string(),
                    x,
                    sci(rec.zeta),
                    rec.piece.clone(),
                    opt_sci(rec.alpha),
                ]);
            }
        }
        ExperimentOutput {
            tables: vec![summary, trace],
            reports: vec![("toy_dca".into(), self.dca), ("toy_pdca".into(), self.pdca)],
        }
    }
}

/// One cell of the sparse-recovery tables.
#[derive(Clone, Debug)]
pub struct KsparseRow {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub tau: f64,
    pub instance_seed: u64,
    pub report: RunReport,
}

impl KsparseRow {
    pub fn nnz(&self) -> usize {
        nnz(&self.report.summary.x)
    }
}

fn regression_problem(
    cfg: &ExperimentConfig,
    k: usize,
    lambda: f64,
    seed: u64,
) -> Result<Box<dyn DcProblem + Send + Sync>, ExperimentError> {
    let spec = KsparseInstanceSpec {
        noise_std: cfg.noise_std,
        ..KsparseInstanceSpec::new(cfg.m, cfg.n, k, seed)
    };
    let inst = gen_ksparse_seeded(&spec);
    let setup = |e: pdca::DcError| ExperimentError::Setup(e.to_string());
    Ok(match cfg.penalty {
        Penalty::KNorm => Box::new(KsparseProblem::new(inst.a, inst.b, lambda, k).map_err(setup)?),
        Penalty::CappedL1 => Box::new(CappedL1Problem::new(inst.a, inst.b, lambda, cfg.theta).map_err(setup)?),
    })
}

/// Instance seed for trial `t`; independent of K and λ so rows share data.
pub fn instance_seed(base: u64, trial: usize) -> u64 {
    derive_seed(base, trial as u64)
}

/// pDCA on generated instances for every `(K, λ, trial)`, each at every τ from x⁰ = 0.
/// Rows run concurrently; results keep the sweep order.
pub fn ksparse(cfg: &ExperimentConfig) -> Result<Vec<KsparseRow>, ExperimentError> {
    let mut cells = Vec::new();
    for &k in &cfg.k {
        for &lambda in &cfg.lambda {
            for trial in 0..cfg.trials {
                cells.push((k, lambda, instance_seed(cfg.algo.seed, trial)));
            }
        }
    }
    let rows: Result<Vec<Vec<KsparseRow>>, ExperimentError> = cells
        .par_iter()
        .map(|&(k, lambda, seed)| {
            let problem = regression_problem(cfg, k, lambda, seed)?;
            let x0 = Vector::zeros(cfg.n);
            Ok(cfg
                .tau
                .iter()
                .map(|&tau| {
                    let algo = AlgoConfig {
                        seed: derive_seed(seed, 1),
                        ..with_tau(&cfg.algo, tau)
                    };
                    let report = unwrap_run(run_pdca(problem.as_ref(), &x0, &algo, &mut seeded_rng(algo.seed)));
                    eprintln!(
                        "ksparse K={k} lambda={lambda} seed={seed} tau={tau:e}: {} after {} iterations",
                        report.summary.decision.as_str(),
                        report.summary.iterations
                    );
                    KsparseRow {
                        m: cfg.m,
                        n: cfg.n,
                        k,
                        lambda,
                        tau,
                        instance_seed: seed,
                        report,
                    }
                })
                .collect())
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

pub const KSPARSE_COLUMNS: [&str; 12] =
    ["m", "n", "K", "lambda", "tau", "seed", "iter", "zeta", "nnz", "residual", "seconds", "decision"];

impl Render for Vec<KsparseRow> {
    fn output(self) -> ExperimentOutput {
        let mut table = Table::new("ksparse_table.csv", &KSPARSE_COLUMNS);
        let mut reports = Vec::new();
        for row in self {
            let s = &row.report.summary;
            table.rows.push(vec![
                row.m.to_string(),
                row.n.to_string(),
                row.k.to_string(),
                row.lambda.to_string(),
                sci(row.tau),
                row.instance_seed.to_string(),
                s.iterations.to_string(),
                sci(s.zeta),
                row.nnz().to_string(),
                opt_sci(s.residual),
                format!("{:.6}", s.seconds),
                s.decision.as_str().to_string(),
            ]);
            let stem = format!("ksparse_K{}_lambda{}_seed{}_tau{:e}", row.k, row.lambda, row.instance_seed, row.tau);
            reports.push((stem, row.report));
        }
        ExperimentOutput {
            tables: vec![table],
            reports,
        }
    }
}

pub struct KsparseCompare {
    pub revised: RunReport,
    pub pdca: RunReport,
}

/// Revised DCA and pDCA on one instance from x⁰ = 0. An enumeration overflow
/// marks the revised-DCA row failed without stopping pDCA.
pub fn ksparse_compare(cfg: &ExperimentConfig) -> Result<KsparseCompare, ExperimentError> {
    let seed = instance_seed(cfg.algo.seed, 0);
    let problem = regression_problem(cfg, cfg.k[0], cfg.lambda[0], seed)?;
    let algo = AlgoConfig {
        seed: derive_seed(seed, 1),
        ..with_tau(&cfg.algo, cfg.tau[0])
    };
    let x0 = Vector::zeros(cfg.n);
    let revised = unwrap_run(run_revised_dca(problem.as_ref(), &x0, &algo));
    if let Some(e) = &revised.summary.error {
        eprintln!("revised DCA aborted: {e}");
    }
    let pdca = unwrap_run(run_pdca(problem.as_ref(), &x0, &algo, &mut seeded_rng(algo.seed)));
    Ok(KsparseCompare { revised, pdca })
}

impl Render for KsparseCompare {
    fn output(self) -> ExperimentOutput {
        let mut columns = vec!["method"];
        columns.extend(SUMMARY_COLUMNS);
        columns.extend(["decision", "error"]);
        let mut table = Table::new("ksparse_compare.csv", &columns);
        for r in [&self.revised, &self.pdca] {
            let mut row = vec![r.algorithm.as_str().to_string()];
            row.extend(r.summary_csv_row().split(',').map(str::to_string));
            row.push(r.summary.decision.as_str().to_string());
            row.push(r.summary.error.clone().unwrap_or_default().replace(',', ";"));
            table.rows.push(row);
        }
        ExperimentOutput {
            tables: vec![table],
            reports: vec![("compare_revised_dca".into(), self.revised), ("compare_pdca".into(), self.pdca)],
        }
    }
}

#[derive(Clone, Debug)]
pub struct KmediansRow {
    pub dataset: String,
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub baseline_zeta: f64,
    pub baseline_residual: Option<f64>,
    pub report: RunReport,
}

fn label_index(path: &Path, which: LabelColumn) -> Result<Option<usize>, ExperimentError> {
    match which {
        LabelColumn::None => Ok(None),
        LabelColumn::Index(i) => Ok(Some(i)),
        LabelColumn::Last => {
            let text = std::fs::read_to_string(path).map_err(|source| {
                ExperimentError::DatasetIo(DataError::Io {
                    path: path.display().to_string(),
                    source,
                })
            })?;
            let first = text.lines().find(|l| !l.trim().is_empty()).ok_or(ExperimentError::Dataset {
                path: path.display().to_string(),
                source: DataError::Empty,
            })?;
            Ok(Some(first.split(',').count() - 1))
        }
    }
}

/// Loads one dataset with the configured header, label and skipped columns.
pub fn load_dataset(cfg: &ExperimentConfig, path: &Path) -> Result<Dataset, ExperimentError> {
    let opts = CsvOptions {
        has_header: cfg.header,
        label_column: label_index(path, cfg.label_column)?,
        skip_columns: cfg.skip_columns.clone(),
    };
    load_csv_with(path, &opts).map_err(|source| match source {
        DataError::Io { .. } => ExperimentError::DatasetIo(source),
        source => ExperimentError::Dataset {
            path: path.display().to_string(),
            source,
        },
    })
}

/// Baseline centers from the alternating initializer, then pDCA started there.
pub fn kmedians(cfg: &ExperimentConfig) -> Result<Vec<KmediansRow>, ExperimentError> {
    let mut rows = Vec::new();
    for (idx, path) in cfg.datasets.iter().enumerate() {
        let data = load_dataset(cfg, path)?;
        for &k in &cfg.k {
            let seed = derive_seed(cfg.algo.seed, idx as u64);
            let baseline = kmedians_baseline(&data.points, k, cfg.replicates, seed)
                .map_err(|e| ExperimentError::Setup(format!("{}: {e}", data.name)))?;
            let problem = KmediansProblem::new(data.points.clone(), k)
                .map_err(|e| ExperimentError::Setup(format!("{}: {e}", data.name)))?;
            let mu0 = KmediansProblem::flatten(&baseline.centers);
            let algo = AlgoConfig {
                seed,
                ..with_tau(&cfg.algo, cfg.tau[0])
            };
            let baseline_residual = residual_with(&problem, &mu0, algo.stop.active_tol, algo.stop.cap)
                .ok()
                .map(|r| r.value);
            let report = unwrap_run(run_pdca(&problem, &mu0, &algo, &mut seeded_rng(seed)));
            eprintln!(
                "kmedians {} K={k}: baseline {:.6}, pdca {:.6} ({})",
                data.name,
                baseline.objective,
                report.summary.zeta,
                report.summary.decision.as_str()
            );
            rows.push(KmediansRow {
                dataset: data.name.clone(),
                k,
                n: data.points.nrows(),
                d: data.points.ncols(),
                baseline_zeta: baseline.objective,
                baseline_residual,
                report,
            });
        }
    }
    Ok(rows)
}

pub const KMEDIANS_COLUMNS: [&str; 12] = [
    "dataset",
    "K",
    "n",
    "d",
    "zeta_kmed",
    "residual_kmed",
    "zeta_pdca",
    "residual_pdca",
    "iter",
    "subproblems",
    "seconds",
    "decision",
];

impl Render for Vec<KmediansRow> {
    fn output(self) -> ExperimentOutput {
        let mut table = Table::new("kmedians_table.csv", &KMEDIANS_COLUMNS);
        let mut reports = Vec::new();
        for row in self {
            let s = &row.report.summary;
            table.rows.push(vec![
                row.dataset.clone(),
                row.k.to_string(),
                row.n.to_string(),
                row.d.to_string(),
                sci(row.baseline_zeta),
                opt_sci(row.baseline_residual),
                sci(s.zeta),
                opt_sci(s.residual),
                s.iterations.to_string(),
                s.total_subproblems.to_string(),
                format!("{:.6}", s.seconds),
                s.decision.as_str().to_string(),
            ]);
            reports.push((format!("kmedians_{}_K{}", row.dataset, row.k), row.report));
        }
        ExperimentOutput {
            tables: vec![table],
            reports,
        }
    }
}
