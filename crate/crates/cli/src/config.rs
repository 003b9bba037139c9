//! Experiment configuration: a flat key/value map (from a config file and from
//! command-line flags, flags winning) resolved into a validated
//! [`ExperimentConfig`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pdca::perturbation::{PerturbationSchedule, ScheduleKind};
use pdca::{AlgoConfig, StopConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: expected `key = value`, found {text:?}")]
    Syntax { path: String, line: usize, text: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: String, key: String },
    #[error("key `{key}`: cannot parse {value:?}: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Every recognised key. Flags use the same names with `-` in place of `_`.
pub const KEYS: &[&str] = &[
    "experiment",
    "m",
    "n",
    "k",
    "lambda",
    "theta",
    "penalty",
    "tau",
    "sigma",
    "epsilon",
    "alpha0",
    "rho",
    "alpha_relative",
    "schedule",
    "seed",
    "trials",
    "noise_std",
    "x0",
    "dataset",
    "label_column",
    "skip_columns",
    "header",
    "replicates",
    "cap",
    "max_iter",
    "record_iterates",
    "out",
    "format",
];

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Ordered key/value pairs; later insertions override earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn set(&mut self, origin: &str, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        let key = normalize_key(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                origin: origin.to_string(),
                key,
            });
        }
        self.values.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Applies `other` on top of `self`.
    pub fn merge(&mut self, other: &RawConfig) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    /// `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    path: origin.to_string(),
                    line: idx + 1,
                    text: line.to_string(),
                });
            };
            raw.set(&format!("{origin}:{}", idx + 1), key, value.trim())?;
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.trim().parse::<T>().map_err(|e| ConfigError::Value {
                    key: key.to_string(),
                    value: v.to_string(),
                    reason: e.to_string(),
                })
            })
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim().parse::<T>().map_err(|e| ConfigError::Value {
                            key: key.to_string(),
                            value: item.to_string(),
                            reason: e.to_string(),
                        })
                    })
                    .collect()
            })
            .transpose()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    ToyCompare,
    Ksparse,
    KsparseCompare,
    Kmedians,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::ToyCompare => "toy-compare",
            ExperimentKind::Ksparse => "ksparse",
            ExperimentKind::KsparseCompare => "ksparse-compare",
            ExperimentKind::Kmedians => "kmedians",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().replace('_', "-").as_str() {
            "toy-compare" | "toy" => Ok(ExperimentKind::ToyCompare),
            "ksparse" => Ok(ExperimentKind::Ksparse),
            "ksparse-compare" => Ok(ExperimentKind::KsparseCompare),
            "kmedians" => Ok(ExperimentKind::Kmedians),
            other => Err(format!(
                "unknown experiment {other:?} (toy-compare, ksparse, ksparse-compare, kmedians)"
            )),
        }
    }
}

/// Regularizer for the sparse regression experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Penalty {
    /// `λ(‖x‖₁ − ‖x‖_(K))`.
    KNorm,
    /// `λ Σ min{|x_i|, θ}`.
    CappedL1,
}

impl FromStr for Penalty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "knorm" | "k-norm" | "ksparse" => Ok(Penalty::KNorm),
            "capped" | "capped-l1" | "capped_l1" => Ok(Penalty::CappedL1),
            other => Err(format!("unknown penalty {other:?} (knorm, capped)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    None,
    Last,
    Index(usize),
}

impl FromStr for LabelColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "none" => Ok(LabelColumn::None),
            "last" => Ok(LabelColumn::Last),
            v => v
                .parse()
                .map(LabelColumn::Index)
                .map_err(|_| format!("expected none, last or a zero-based index, got {v:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

impl FromStr for Formats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut f = Formats { csv: false, json: false };
        for item in s.split(',') {
            match item.trim() {
                "csv" => f.csv = true,
                "json" => f.json = true,
                other => return Err(format!("unknown format {other:?} (csv, json)")),
            }
        }
        Ok(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub m: usize,
    pub n: usize,
    /// Sparsity levels (or cluster counts for k-medians).
    pub k: Vec<usize>,
    pub lambda: Vec<f64>,
    pub theta: f64,
    pub penalty: Penalty,
    pub tau: Vec<f64>,
    pub noise_std: f64,
    /// Instances per table row.
    pub trials: usize,
    /// Starting point of the 1-D comparison.
    pub x0: f64,
    pub datasets: Vec<PathBuf>,
    pub label_column: LabelColumn,
    /// Zero-based columns ignored when loading datasets.
    pub skip_columns: Vec<usize>,
    pub header: bool,
    pub replicates: usize,
    /// Solver settings; `stop.tau` is overwritten per run from `tau`.
    pub algo: AlgoConfig,
    pub out: PathBuf,
    pub formats: Formats,
}

impl ExperimentConfig {
    /// Defaults of `kind` with no overrides.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            kind,
            m: 500,
            n: 1000,
            k: vec![20, 50, 100],
            lambda: vec![0.1, 0.05],
            theta: 0.5,
            penalty: Penalty::KNorm,
            tau: vec![1e-6],
            noise_std: 0.01,
            trials: 1,
            x0: 1.5,
            datasets: Vec::new(),
            label_column: LabelColumn::None,
            skip_columns: Vec::new(),
            header: true,
            replicates: 5,
            algo: AlgoConfig::default(),
            out: PathBuf::from("results"),
            formats: Formats { csv: true, json: true },
        };
        match kind {
            ExperimentKind::ToyCompare => ExperimentConfig {
                tau: vec![1e-8],
                algo: AlgoConfig {
                    schedule: PerturbationSchedule::geometric(0.25, 0.9),
                    record_iterates: true,
                    ..AlgoConfig::default()
                },
                ..base
            },
            ExperimentKind::Ksparse => ExperimentConfig {
                tau: vec![1e-6, 1e-8],
                trials: 3,
                algo: AlgoConfig {
                    sigma: 0.01,
                    ..AlgoConfig::default()
                },
                ..base
            },
            ExperimentKind::KsparseCompare => ExperimentConfig {
                m: 50,
                n: 100,
                k: vec![2],
                lambda: vec![0.1],
                algo: AlgoConfig {
                    stop: StopConfig {
                        cap: 32768,
                        ..StopConfig::default()
                    },
                    ..AlgoConfig::default()
                },
                ..base
            },
            ExperimentKind::Kmedians => ExperimentConfig { k: vec![3], ..base },
        }
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let kind: ExperimentKind = raw.parsed("experiment")?.ok_or(ConfigError::Missing("experiment"))?;
        let mut cfg = Self::defaults(kind);
        if let Some(v) = raw.parsed("m")? {
            cfg.m = v;
        }
        if let Some(v) = raw.parsed("n")? {
            cfg.n = v;
        }
        if let Some(v) = raw.list("k")? {
            cfg.k = v;
        }
        if let Some(v) = raw.list("lambda")? {
            cfg.lambda = v;
        }
        if let Some(v) = raw.parsed("theta")? {
            cfg.theta = v;
        }
        if let Some(v) = raw.parsed("penalty")? {
            cfg.penalty = v;
        }
        if let Some(v) = raw.list("tau")? {
            cfg.tau = v;
        }
        if let Some(v) = raw.parsed("noise_std")? {
            cfg.noise_std = v;
        }
        if let Some(v) = raw.parsed("trials")? {
            cfg.trials = v;
        }
        if let Some(v) = raw.parsed("x0")? {
            cfg.x0 = v;
        }
        if let Some(v) = raw.get("dataset") {
            cfg.datasets = v.split(',').map(|p| PathBuf::from(p.trim())).filter(|p| !p.as_os_str().is_empty()).collect();
        }
        if let Some(v) = raw.parsed("label_column")? {
            cfg.label_column = v;
        }
        if let Some(v) = raw.list("skip_columns")? {
            cfg.skip_columns = v;
        }
        if let Some(v) = raw.parsed("header")? {
            cfg.header = v;
        }
        if let Some(v) = raw.parsed("replicates")? {
            cfg.replicates = v;
        }
        if let Some(v) = raw.parsed("out")? {
            cfg.out = v;
        }
        if let Some(v) = raw.parsed("format")? {
            cfg.formats = v;
        }

        let algo = &mut cfg.algo;
        if let Some(v) = raw.parsed("sigma")? {
            algo.sigma = v;
        }
        if let Some(v) = raw.parsed("epsilon")? {
            algo.epsilon = v;
        }
        if let Some(v) = raw.parsed("seed")? {
            algo.seed = v;
        }
        if let Some(v) = raw.parsed("cap")? {
            algo.stop.cap = v;
        }
        if let Some(v) = raw.parsed("max_iter")? {
            algo.stop.max_iter = v;
        }
        if let Some(v) = raw.parsed("record_iterates")? {
            algo.record_iterates = v;
        }
        algo.schedule = resolve_schedule(raw, algo.schedule)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.tau.is_empty() || self.tau.iter().any(|t| !(*t > 0.0)) {
            return bad(format!("tau values must be positive, got {:?}", self.tau));
        }
        if self.formats == (Formats { csv: false, json: false }) {
            return bad("at least one output format is required".into());
        }
        match self.kind {
            ExperimentKind::ToyCompare => {
                if !self.x0.is_finite() {
                    return bad(format!("x0 must be finite, got {}", self.x0));
                }
            }
            ExperimentKind::Ksparse | ExperimentKind::KsparseCompare => {
                if self.m == 0 || self.n < 2 {
                    return bad(format!("need m >= 1 and n >= 2, got m = {}, n = {}", self.m, self.n));
                }
                if self.k.is_empty() || self.k.iter().any(|&k| k == 0 || k >= self.n) {
                    return bad(format!("every K must satisfy 1 <= K < n = {}, got {:?}", self.n, self.k));
                }
                if self.lambda.is_empty() || self.lambda.iter().any(|l| !(*l > 0.0)) {
                    return bad(format!("lambda values must be positive, got {:?}", self.lambda));
                }
                if self.penalty == Penalty::CappedL1 && !(self.theta > 0.0) {
                    return bad(format!("theta must be positive, got {}", self.theta));
                }
                if !(self.noise_std >= 0.0) {
                    return bad(format!("noise_std must be nonnegative, got {}", self.noise_std));
                }
                if self.trials == 0 {
                    return bad("trials must be at least 1".into());
                }
            }
            ExperimentKind::Kmedians => {
                if self.datasets.is_empty() {
                    return Err(ConfigError::Missing("dataset"));
                }
                if self.k.is_empty() || self.k.contains(&0) {
                    return bad(format!("K must be positive, got {:?}", self.k));
                }
                if self.replicates == 0 {
                    return bad("replicates must be at least 1".into());
                }
            }
        }
        self.algo.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

fn resolve_schedule(raw: &RawConfig, current: PerturbationSchedule) -> Result<PerturbationSchedule, ConfigError> {
    let mut s = current;
    if let Some(name) = raw.get("schedule") {
        s.kind = match name.trim() {
            "harmonic" => ScheduleKind::Harmonic,
            "geometric" => ScheduleKind::Geometric { rho: 0.9 },
            other => {
                return Err(ConfigError::Value {
                    key: "schedule".into(),
                    value: other.into(),
                    reason: "expected harmonic or geometric".into(),
                })
            }
        };
    }
    if let Some(rho) = raw.parsed::<f64>("rho")? {
        match &mut s.kind {
            ScheduleKind::Geometric { rho: r } => *r = rho,
            _ => return Err(ConfigError::Invalid("rho applies only to the geometric schedule".into())),
        }
    }
    if let Some(a) = raw.parsed("alpha0")? {
        s.alpha0 = a;
    }
    if let Some(rel) = raw.parsed("alpha_relative")? {
        s.relative_to_start = rel;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(pairs: &[(&str, &str)]) -> RawConfig {
        let mut r = RawConfig::default();
        for (k, v) in pairs {
            r.set("test", k, *v).unwrap();
        }
        r
    }

    #[test]
    fn parses_files_with_comments() {
        let text = "# comment\nexperiment = ksparse\n\nk = 20, 50  # inline\nnoise-std=0.1\n";
        let r = RawConfig::parse(text, "f.cfg").unwrap();
        let cfg = ExperimentConfig::from_raw(&r).unwrap();
        assert_eq!(cfg.k, vec![20, 50]);
        assert_eq!(cfg.noise_std, 0.1);
        assert_eq!(cfg.algo.sigma, 0.01);
    }

    #[test]
    fn file_errors_name_the_line() {
        let err = RawConfig::parse("experiment = toy\nbogus\n", "f.cfg").unwrap_err();
        assert!(err.to_string().starts_with("f.cfg:2:"), "{err}");
        let err = RawConfig::parse("colour = red\n", "f.cfg").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { .. }));
    }

    #[test]
    fn flags_override_file_values() {
        let mut file = raw(&[("experiment", "ksparse"), ("m", "100"), ("sigma", "0.5")]);
        file.merge(&raw(&[("m", "60")]));
        let cfg = ExperimentConfig::from_raw(&file).unwrap();
        assert_eq!((cfg.m, cfg.algo.sigma), (60, 0.5));
    }

    #[test]
    fn kind_defaults() {
        let toy = ExperimentConfig::from_raw(&raw(&[("experiment", "toy-compare")])).unwrap();
        assert_eq!(toy.tau, vec![1e-8]);
        assert_eq!(toy.algo.schedule, PerturbationSchedule::geometric(0.25, 0.9));
        let cmp = ExperimentConfig::from_raw(&raw(&[("experiment", "ksparse-compare")])).unwrap();
        assert_eq!((cmp.m, cmp.n, cmp.k.as_slice(), cmp.algo.stop.cap), (50, 100, &[2][..], 32768));
        assert_eq!(cmp.algo.sigma, 1.0);
    }

    #[test]
    fn schedule_keys() {
        let cfg = ExperimentConfig::from_raw(&raw(&[
            ("experiment", "ksparse"),
            ("schedule", "geometric"),
            ("rho", "0.5"),
            ("alpha0", "0.01"),
            ("alpha_relative", "false"),
        ]))
        .unwrap();
        assert_eq!(cfg.algo.schedule, PerturbationSchedule::geometric(0.01, 0.5));
        assert!(ExperimentConfig::from_raw(&raw(&[("experiment", "ksparse"), ("rho", "0.5")])).is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        for pairs in [
            vec![("experiment", "ksparse"), ("k", "1000")],
            vec![("experiment", "ksparse"), ("tau", "0")],
            vec![("experiment", "ksparse"), ("sigma", "-1")],
            vec![("experiment", "kmedians")],
            vec![("experiment", "toy"), ("format", "xml")],
            vec![("m", "5")],
        ] {
            assert!(ExperimentConfig::from_raw(&raw(&pairs)).is_err(), "{pairs:?}");
        }
    }
}
