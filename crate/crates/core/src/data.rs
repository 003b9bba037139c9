//! Synthetic K-sparse instances, CSV datasets and an alternating k-medians
//! initializer.

use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::perturbation::{derive_seed, seeded_rng};
use crate::problem::{SolverRng, Vector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsparseInstanceSpec {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl KsparseInstanceSpec {
    pub fn new(m: usize, n: usize, k: usize, seed: u64) -> Self {
        KsparseInstanceSpec {
            m,
            n,
            k,
            noise_std: 0.1,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KsparseInstance {
    pub a: DMatrix<f64>,
    pub b: Vector,
    pub x_true: Vector,
}

/// Column-normalized Gaussian design, `K` standard-normal entries at uniform
/// positions, `b = A x_true + noise`.
pub fn gen_ksparse(spec: &KsparseInstanceSpec, rng: &mut SolverRng) -> KsparseInstance {
    assert!(spec.k >= 1 && spec.k < spec.n && spec.m >= 1, "invalid instance spec {spec:?}");
    let mut a = DMatrix::from_fn(spec.m, spec.n, |_, _| StandardNormal.sample(rng));
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    let mut x_true = Vector::zeros(spec.n);
    let mut support = sample(rng, spec.n, spec.k).into_vec();
    support.sort_unstable();
    for i in support {
        x_true[i] = StandardNormal.sample(rng);
    }
    let noise = Vector::from_fn(spec.m, |_, _| {
        spec.noise_std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    });
    let b = &a * &x_true + noise;
    KsparseInstance { a, b, x_true }
}

/// Instance drawn from a generator seeded with `spec.seed`.
pub fn gen_ksparse_seeded(spec: &KsparseInstanceSpec) -> KsparseInstance {
    gen_ksparse(spec, &mut seeded_rng(spec.seed))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub points: DMatrix<f64>,
    pub labels: Option<Vec<i64>>,
    pub name: String,
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("no data rows")]
    Empty,
    #[error("label column {column} is out of range for {fields} fields")]
    LabelColumn { column: usize, fields: usize },
    #[error("no feature columns remain")]
    NoFeatures,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Zero-based column holding integer labels.
    pub label_column: Option<usize>,
    /// Zero-based columns dropped before parsing (identifiers and the like).
    pub skip_columns: Vec<usize>,
}

pub fn load_csv(path: &Path, has_header: bool, label_column: Option<usize>) -> Result<Dataset, DataError> {
    load_csv_with(
        path,
        &CsvOptions {
            has_header,
            label_column,
            skip_columns: Vec::new(),
        },
    )
}

pub fn load_csv_with(path: &Path, opts: &CsvOptions) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, opts, name)
}

/// Rows are numbered from 1 counting the header line, columns from 1.
pub fn read_csv<R: Read>(reader: R, opts: &CsvOptions, name: String) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let offset = if opts.has_header { 2 } else { 1 };
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0;
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + offset;
        let record = record.map_err(|e| DataError::Csv {
            row,
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let fields = record.len();
        match width {
            None => {
                if let Some(c) = opts.label_column {
                    if c >= fields {
                        return Err(DataError::LabelColumn { column: c, fields });
                    }
                }
                width = Some(fields);
            }
            Some(w) if w != fields => {
                return Err(DataError::Ragged {
                    row,
                    expected: w,
                    found: fields,
                })
            }
            _ => {}
        }
        for (col, field) in record.iter().enumerate() {
            if opts.skip_columns.contains(&col) {
                continue;
            }
            let parse_err = || DataError::Parse {
                row,
                column: col + 1,
                value: field.to_string(),
            };
            if Some(col) == opts.label_column {
                labels.push(field.parse::<i64>().map_err(|_| parse_err())?);
            } else {
                let v: f64 = field.parse().map_err(|_| parse_err())?;
                if !v.is_finite() {
                    return Err(parse_err());
                }
                values.push(v);
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(DataError::Empty);
    }
    let d = values.len() / rows;
    if d == 0 {
        return Err(DataError::NoFeatures);
    }
    Ok(Dataset {
        points: DMatrix::from_row_slice(rows, d, &values),
        labels: opts.label_column.map(|_| labels),
        name,
    })
}

/// Writes points (and labels as the last column, when present) without a header.
pub fn write_csv(data: &Dataset, path: &Path) -> Result<(), DataError> {
    let io = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = String::new();
    for (i, row) in data.points.row_iter().enumerate() {
        let mut fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        if let Some(l) = &data.labels {
            fields.push(l[i].to_string());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KmediansBaseline {
    /// K × d centers.
    pub centers: DMatrix<f64>,
    pub objective: f64,
    /// Objective after each sweep of the winning restart.
    pub history: Vec<f64>,
    pub replicate: usize,
}

/// Lower median of an unsorted slice.
pub fn lower_median(values: &mut [f64]) -> f64 {
    let mid = (values.len() - 1) / 2;
    *values.select_nth_unstable_by(mid, f64::total_cmp).1
}

fn l1(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, l: usize) -> f64 {
    (0..points.ncols()).map(|r| (points[(i, r)] - centers[(l, r)]).abs()).sum()
}

/// Nearest center (lowest index on ties) and its distance for every point.
fn assign(points: &DMatrix<f64>, centers: &DMatrix<f64>) -> Vec<(usize, f64)> {
    (0..points.nrows())
        .map(|i| {
            (0..centers.nrows()).fold((0, f64::INFINITY), |best, l| {
                let d = l1(points, i, centers, l);
                if d < best.1 {
                    (l, d)
                } else {
                    best
                }
            })
        })
        .collect()
}

/// `(1/n) Σ_i min_l ‖μ_l − a_i‖₁`.
pub fn clustering_objective(points: &DMatrix<f64>, centers: &DMatrix<f64>) -> f64 {
    assign(points, centers).iter().map(|a| a.1).sum::<f64>() / points.nrows() as f64
}

const MAX_SWEEPS: usize = 100;

fn one_restart(points: &DMatrix<f64>, k: usize, rng: &mut SolverRng) -> (DMatrix<f64>, Vec<f64>) {
    let (n, d) = points.shape();
    let init = sample(rng, n, k).into_vec();
    let mut centers = DMatrix::from_fn(k, d, |l, r| points[(init[l], r)]);
    let mut history = Vec::new();
    let mut previous: Option<Vec<usize>> = None;
    for _ in 0..MAX_SWEEPS {
        let mut labels = assign(points, &centers);
        loop {
            let mut counts = vec![0usize; k];
            for a in &labels {
                counts[a.0] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let far = (0..n)
                .max_by(|&i, &j| labels[i].1.total_cmp(&labels[j].1).then(j.cmp(&i)))
                .expect("n >= 1");
            for r in 0..d {
                centers[(empty, r)] = points[(far, r)];
            }
            labels = assign(points, &centers);
        }
        let mut column = Vec::with_capacity(n);
        for l in 0..k {
            for r in 0..d {
                column.clear();
                column.extend((0..n).filter(|&i| labels[i].0 == l).map(|i| points[(i, r)]));
                centers[(l, r)] = lower_median(&mut column);
            }
        }
        history.push(clustering_objective(points, &centers));
        let current: Vec<usize> = labels.iter().map(|a| a.0).collect();
        if previous.as_ref() == Some(&current) {
            break;
        }
        previous = Some(current);
    }
    (centers, history)
}

/// Best of `replicates` alternating assign/median restarts. Restart `r` draws its
/// initial centers from a generator seeded with `derive_seed(seed, r)`.
pub fn kmedians_baseline(
    points: &DMatrix<f64>,
    k: usize,
    replicates: usize,
    seed: u64,
) -> Result<KmediansBaseline, crate::error::DcError> {
    use crate::error::DcError;
    if k < 1 || k > points.nrows() {
        return Err(DcError::Config(format!(
            "K must satisfy 1 <= K <= n = {}, got {k}",
            points.nrows()
        )));
    }
    if replicates < 1 {
        return Err(DcError::Config("replicates must be at least 1".into()));
    }
    let mut best: Option<KmediansBaseline> = None;
    for rep in 0..replicates {
        let mut rng = seeded_rng(derive_seed(seed, rep as u64));
        let (centers, history) = one_restart(points, k, &mut rng);
        let objective = *history.last().expect("at least one sweep");
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(KmediansBaseline {
                centers,
                objective,
                history,
                replicate: rep,
            });
        }
    }
    Ok(best.expect("replicates >= 1"))
}

/// Uniform points in a box, convenient for demos and property tests.
pub fn uniform_points(n: usize, d: usize, lo: f64, hi: f64, rng: &mut SolverRng) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.random_range(lo..hi))
}
