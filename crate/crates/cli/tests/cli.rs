use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pdca"));
    c.current_dir(repo_root());
    c
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn strip_seconds(v: &mut serde_json::Value) {
    v["final"]["seconds"] = serde_json::Value::Null;
}

#[test]
fn toy_compare_writes_traces_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, err) = run(&["--experiment", "toy-compare", "--out", out]);
    assert_eq!(code, 0, "{err}");
    let trace = std::fs::read_to_string(dir.path().join("toy_trace.csv")).unwrap();
    let summary = std::fs::read_to_string(dir.path().join("toy_summary.csv")).unwrap();
    let mut iters = std::collections::HashMap::new();
    for line in summary.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        iters.insert(f[0].to_string(), f[1].parse::<usize>().unwrap());
    }
    for alg in ["dca", "pdca"] {
        let rows = trace.lines().filter(|l| l.starts_with(&format!("{alg},"))).count();
        assert_eq!(rows, iters[alg], "{alg}");
    }
    let pdca: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("toy_pdca.json")).unwrap()).unwrap();
    assert!((pdca["final"]["x"][0].as_f64().unwrap() + 1.0).abs() <= 1e-6);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["--experiment", "nope"]).0, 1);
    assert_eq!(run(&["--bogus"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["--experiment", "ksparse", "--sigma", "-1", "--out", out]).0, 1);
    assert_eq!(run(&["--experiment", "kmedians", "--dataset", "data/missing.csv", "--out", out]).0, 1);
    // A one-iteration budget on the toy cannot certify either run.
    let (code, err) = run(&["--experiment", "toy-compare", "--max-iter", "1", "--out", out]);
    assert_eq!(code, 2, "{err}");
    // The revised DCA overflows a tiny enumeration cap at x0 = 0.
    let (code, err) = run(&["--experiment", "ksparse-compare", "--cap", "8", "--out", out]);
    assert_eq!(code, 4, "{err}");
    let table = std::fs::read_to_string(dir.path().join("ksparse_compare.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert!(rows[1].starts_with("revised_dca,") && rows[1].contains(",failed,"));
    assert!(rows[2].starts_with("pdca,") && rows[2].contains(",converged,"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!("experiment = ksparse\nm = 40\nn = 80\nk = 3\nlambda = 0.1\ntau = 1e-6\ntrials = 1\nout = {}\n", out.display()),
    )
    .unwrap();
    let (code, err) = run(&["--config", cfg.to_str().unwrap(), "--k", "4", "--format", "csv"]);
    assert_eq!(code, 0, "{err}");
    let table = std::fs::read_to_string(out.join("ksparse_table.csv")).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..3], &["40", "80", "4"]);
    assert!(std::fs::read_dir(&out).unwrap().all(|e| !e.unwrap().path().to_string_lossy().ends_with(".json")));
}

#[test]
fn repeated_runs_match_except_timing() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--experiment", "ksparse", "--m", "60", "--n", "120", "--k", "3,5", "--lambda", "0.1", "--trials", "2", "--seed", "7"];
    for d in [&a, &b] {
        let mut full = args.to_vec();
        full.extend(["--out", d.path().to_str().unwrap()]);
        assert_eq!(run(&full).0, 0);
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 1 + 2 * 2 * 2);
    for name in names {
        let ta = std::fs::read_to_string(a.path().join(&name)).unwrap();
        let tb = std::fs::read_to_string(b.path().join(&name)).unwrap();
        if name.to_string_lossy().ends_with(".json") {
            let mut va: serde_json::Value = serde_json::from_str(&ta).unwrap();
            let mut vb: serde_json::Value = serde_json::from_str(&tb).unwrap();
            strip_seconds(&mut va);
            strip_seconds(&mut vb);
            assert_eq!(va, vb, "{name:?}");
        } else {
            let drop_seconds = |t: &str| -> Vec<String> {
                t.lines()
                    .map(|l| {
                        let mut f: Vec<&str> = l.split(',').collect();
                        f.remove(10);
                        f.join(",")
                    })
                    .collect()
            };
            assert_eq!(drop_seconds(&ta), drop_seconds(&tb));
        }
    }
}

#[test]
fn reports_validate_against_shipped_schema() {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(repo_root().join("docs/report.schema.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["--experiment", "toy-compare"],
        vec!["--experiment", "ksparse-compare", "--cap", "8"],
        vec!["--experiment", "kmedians", "--dataset", "data/iris.csv", "--label-column", "last"],
        vec!["--experiment", "ksparse", "--m", "30", "--n", "60", "--k", "2", "--lambda", "0.1", "--trials", "1", "--penalty", "capped"],
    ] {
        let mut full = args.clone();
        full.extend(["--out", out]);
        run(&full);
    }
    let mut seen = 0;
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
            let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
            assert!(errors.is_empty(), "{}: {errors:?}", path.display());
            seen += 1;
        }
    }
    assert_eq!(seen, 2 + 2 + 1 + 2);
}
