//! WebAssembly bindings for the browser demo.
//!
//! Each demo is a plain Rust function returning a serializable struct; the
//! `wasm_bindgen` wrappers hand the result to JavaScript as a JSON string.

use nalgebra::DMatrix;
use pdca::data::kmedians_baseline;
use pdca::perturbation::{seeded_rng, PerturbationSchedule};
use pdca::problem::DcProblem;
use pdca::problems::{KmediansProblem, Toy1dProblem};
use pdca::subsolvers::pwq::{solve_1d_pwq, Pwq1dProblem};
use pdca::{run_dca, run_pdca, AlgoConfig, RunReport, StopConfig, Vector};
use rand::Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Path1d {
    pub xs: Vec<f64>,
    pub zetas: Vec<f64>,
    pub decision: String,
    pub residual: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ToyPaths {
    pub dca: Path1d,
    pub pdca: Path1d,
}

fn path_of(report: &RunReport) -> Path1d {
    let xs = report
        .records
        .iter()
        .filter_map(|r| r.x.as_ref().map(|x| x[0]))
        .collect();
    Path1d {
        xs,
        zetas: report.records.iter().map(|r| r.zeta).collect(),
        decision: report.summary.decision.as_str().to_string(),
        residual: report.summary.residual,
    }
}

fn report_or_partial(r: Result<RunReport, pdca::RunFailure>) -> RunReport {
    r.unwrap_or_else(|f| *f.report)
}

/// DCA and pDCA iterate paths on `x²/2 − max{−x, 0}` from `x0`.
pub fn toy_paths(x0: f64, alpha0: f64, seed: u64) -> ToyPaths {
    let cfg = AlgoConfig {
        schedule: PerturbationSchedule::geometric(alpha0, 0.9),
        stop: StopConfig {
            tau: 1e-8,
            max_iter: 500,
            ..StopConfig::default()
        },
        record_iterates: true,
        seed,
        ..AlgoConfig::default()
    };
    let x = Vector::from_element(1, x0);
    let dca = report_or_partial(run_dca(&Toy1dProblem, &x, &cfg, &mut seeded_rng(seed)));
    let pdca = report_or_partial(run_pdca(&Toy1dProblem, &x, &cfg, &mut seeded_rng(seed)));
    ToyPaths {
        dca: path_of(&dca),
        pdca: path_of(&pdca),
    }
}

#[derive(Debug, Serialize)]
pub struct PwqCurve {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub argmin: f64,
    pub min_value: f64,
}

/// Samples `(1/n)Σ|x − b_i| + (σ/2)x² − c x` on `[lo, hi]` and marks its exact minimizer.
pub fn pwq_curve(b: &[f64], sigma: f64, c: f64, lo: f64, hi: f64, samples: usize) -> PwqCurve {
    let p = Pwq1dProblem::new(b.to_vec(), sigma, c);
    let argmin = solve_1d_pwq(&p);
    let samples = samples.max(2);
    let xs: Vec<f64> = (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .collect();
    PwqCurve {
        values: xs.iter().map(|&x| p.value(x)).collect(),
        xs,
        argmin,
        min_value: p.value(argmin),
    }
}

#[derive(Debug, Serialize)]
pub struct KmediansDemo {
    /// Row-major `n × 2` points.
    pub points: Vec<[f64; 2]>,
    pub baseline_centers: Vec<[f64; 2]>,
    pub pdca_centers: Vec<[f64; 2]>,
    pub baseline_zeta: f64,
    pub pdca_zeta: f64,
    pub pdca_iterations: usize,
    pub pdca_decision: String,
    pub assignment: Vec<usize>,
}

fn rows(m: &DMatrix<f64>) -> Vec<[f64; 2]> {
    (0..m.nrows()).map(|i| [m[(i, 0)], m[(i, 1)]]).collect()
}

/// Gaussian-ish blobs in the plane: `k` centers, `n` points split evenly.
pub fn blobs(n: usize, k: usize, spread: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = seeded_rng(seed);
    let centers: Vec<(f64, f64)> = (0..k)
        .map(|_| (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)))
        .collect();
    let mut data = DMatrix::zeros(n, 2);
    for i in 0..n {
        let (cx, cy) = centers[i % k];
        // Sum of uniforms approximates a normal draw without another dependency.
        let mut draw = || (0..4).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>() * 0.5 * spread;
        data[(i, 0)] = cx + draw();
        data[(i, 1)] = cy + draw();
    }
    data
}

/// Single-restart alternating medians, then pDCA warm-started from its centers.
pub fn kmedians_demo(n: usize, k: usize, spread: f64, seed: u64) -> Result<KmediansDemo, String> {
    let points = blobs(n, k.max(1), spread, seed);
    let base = kmedians_baseline(&points, k, 1, seed).map_err(|e| e.to_string())?;
    let problem = KmediansProblem::new(points.clone(), k).map_err(|e| e.to_string())?;
    let mu0 = KmediansProblem::flatten(&base.centers);
    let cfg = AlgoConfig {
        stop: StopConfig {
            tau: 1e-10,
            max_iter: 2000,
            ..StopConfig::default()
        },
        seed,
        ..AlgoConfig::default()
    };
    let report = report_or_partial(run_pdca(&problem, &mu0, &cfg, &mut seeded_rng(seed)));
    let mu = Vector::from_vec(report.summary.x.clone());
    let assignment = problem.nearest(&mu).into_iter().map(|c| c[0]).collect();
    Ok(KmediansDemo {
        points: rows(&points),
        baseline_centers: rows(&base.centers),
        pdca_centers: rows(&problem.centers(&mu)),
        baseline_zeta: problem.zeta(&mu0),
        pdca_zeta: report.summary.zeta,
        pdca_iterations: report.summary.iterations,
        pdca_decision: report.summary.decision.as_str().to_string(),
        assignment,
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("demo structs serialize")
}

#[wasm_bindgen(js_name = toyPaths)]
pub fn toy_paths_js(x0: f64, alpha0: f64, seed: u32) -> String {
    to_json(&toy_paths(x0, alpha0, seed.into()))
}

#[wasm_bindgen(js_name = pwqCurve)]
pub fn pwq_curve_js(b: Vec<f64>, sigma: f64, c: f64, lo: f64, hi: f64, samples: u32) -> String {
    to_json(&pwq_curve(&b, sigma, c, lo, hi, samples as usize))
}

#[wasm_bindgen(js_name = kmediansDemo)]
pub fn kmedians_demo_js(n: u32, k: u32, spread: f64, seed: u32) -> Result<String, JsError> {
    kmedians_demo(n as usize, k as usize, spread, seed.into())
        .map(|d| to_json(&d))
        .map_err(|e| JsError::new(&e))
}
