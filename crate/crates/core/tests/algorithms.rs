use pdca::data::{gen_ksparse_seeded, KsparseInstanceSpec};
use pdca::problems::{KsparseProblem, Toy1dProblem};
use pdca::verify::monotonicity_violations;
use pdca::*;

fn toy_cfg() -> AlgoConfig {
    AlgoConfig {
        schedule: PerturbationSchedule::geometric(0.25, 0.9),
        stop: StopConfig {
            tau: 1e-8,
            ..StopConfig::default()
        },
        record_iterates: true,
        ..AlgoConfig::default()
    }
}

fn small_ksparse(seed: u64) -> KsparseProblem {
    let spec = KsparseInstanceSpec {
        noise_std: 0.01,
        ..KsparseInstanceSpec::new(30, 40, 2, seed)
    };
    let inst = gen_ksparse_seeded(&spec);
    KsparseProblem::new(inst.a, inst.b, 0.1, 2).unwrap()
}

fn x1(v: f64) -> Vector {
    Vector::from_element(1, v)
}

#[test]
fn toy_dca_is_trapped_and_pdca_escapes() {
    let cfg = toy_cfg();
    let dca = run_dca(&Toy1dProblem, &x1(1.5), &cfg, &mut seeded_rng(0)).unwrap();
    assert!(dca.summary.x[0].abs() <= 1e-6);
    assert!(dca.summary.residual.unwrap() >= 0.4);
    assert_eq!(dca.summary.limit_kind, LimitKind::Critical);

    for seed in 0..20 {
        let p = run_pdca(&Toy1dProblem, &x1(1.5), &cfg, &mut seeded_rng(seed)).unwrap();
        assert!(p.converged());
        assert_eq!(p.summary.limit_kind, LimitKind::DStationary);
        assert!((p.summary.x[0] + 1.0).abs() <= 1e-6, "seed {seed}: {:?}", p.summary.x);
        assert!((p.summary.zeta + 0.5).abs() <= 1e-8);
    }
}

#[test]
fn report_invariants() {
    let p = small_ksparse(3);
    let x0 = Vector::zeros(40);
    let cfg = AlgoConfig {
        record_iterates: true,
        ..AlgoConfig::default()
    };
    let r = run_pdca(&p, &x0, &cfg, &mut seeded_rng(3)).unwrap();
    assert_eq!(r.records.len(), r.summary.iterations);
    assert_eq!(r.trace_subproblems(), r.summary.total_subproblems);
    assert_eq!(r.summary.total_subproblems, r.summary.iterations);
    assert_eq!(r.summary.schedule_conforming, Some(true));
    for (i, rec) in r.records.iter().enumerate() {
        assert_eq!(rec.k, i + 1);
        assert!(rec.alpha.unwrap() > 0.0);
        assert_eq!(rec.x.as_ref().unwrap().len(), 40);
    }
    let last = r.records.last().unwrap();
    assert_eq!(last.zeta, r.summary.zeta);
    assert_eq!(last.x.as_deref().unwrap(), r.summary.x.as_slice());
    assert!(r.summary.residual.unwrap() < cfg.stop.tau);

    let csv = r.trace_csv();
    assert_eq!(csv.lines().count(), r.records.len() + 1);
    assert!(csv.starts_with("k,zeta,step_norm,subproblems,piece,alpha,retries,x"));
    assert_eq!(r.summary_csv_row().split(',').count(), report::SUMMARY_COLUMNS.len());
}

#[test]
fn json_roundtrip_preserves_reports() {
    let p = small_ksparse(4);
    let r = run_pdca(&p, &Vector::zeros(40), &AlgoConfig::default(), &mut seeded_rng(1)).unwrap();
    let back = RunReport::from_json(&r.to_json()).unwrap();
    assert_eq!(back, r);
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert!(json.get("final").is_some());
    assert_eq!(json["algorithm"], "pdca");
    assert_eq!(json["final"]["decision"], "converged");
}

#[test]
fn revised_dca_matches_pdca_on_small_instance() {
    let p = small_ksparse(5);
    let x0 = Vector::zeros(40);
    let cfg = AlgoConfig {
        stop: StopConfig {
            cap: 32768,
            ..StopConfig::default()
        },
        ..AlgoConfig::default()
    };
    let revised = run_revised_dca(&p, &x0, &cfg).unwrap();
    let pd = run_pdca(&p, &x0, &cfg, &mut seeded_rng(5)).unwrap();
    assert!(revised.converged() && pd.converged());
    assert!(revised.summary.total_subproblems >= 3 * revised.summary.iterations);
    assert!((revised.summary.zeta - pd.summary.zeta).abs() <= 1e-4);
    assert!(monotonicity_violations(&revised, 1e-12).is_empty());
    // Deterministic: no randomness in the revised scheme.
    assert_eq!(
        run_revised_dca(&p, &x0, &cfg).unwrap().without_timing(),
        revised.without_timing()
    );
}

#[test]
fn dca_objective_is_monotone() {
    let p = small_ksparse(6);
    let r = run_dca(&p, &Vector::zeros(40), &AlgoConfig::default(), &mut seeded_rng(0)).unwrap();
    assert!(monotonicity_violations(&r, 1e-12).is_empty());
}

#[test]
fn unbounded_iterates_fail_with_partial_report() {
    // From −3 the first step lands at −2, beyond a ceiling of 1.
    let cfg = AlgoConfig {
        bound_ceiling: 1.0,
        ..toy_cfg()
    };
    let err = run_dca(&Toy1dProblem, &x1(-3.0), &cfg, &mut seeded_rng(0)).unwrap_err();
    assert!(matches!(err.error, DcError::Unbounded { .. }), "{err}");
    assert_eq!(err.report.summary.decision, Termination::Failed);
    assert_eq!(err.report.summary.iterations, 0);
    assert!(err.report.summary.error.is_some());
    assert_eq!(err.report.initial_zeta, objective(&Toy1dProblem, &x1(-3.0)).unwrap());
}

#[test]
fn enumeration_overflow_aborts_revised_dca() {
    let cfg = AlgoConfig {
        epsilon: 0.0,
        stop: StopConfig {
            cap: 1,
            ..StopConfig::default()
        },
        ..toy_cfg()
    };
    let err = run_revised_dca(&Toy1dProblem, &x1(0.0), &cfg).unwrap_err();
    assert_eq!(err.report.summary.decision, Termination::Failed);
    assert_eq!(err.report.summary.iterations, 0);
    assert!(err.to_string().contains("revised_dca"));
}

#[test]
fn overflowing_certificate_is_uncertifiable() {
    // A wide membership tolerance makes every sign/support choice active.
    let p = small_ksparse(8);
    let cfg = AlgoConfig {
        stop: StopConfig {
            cap: 16,
            active_tol: ActiveTol::Absolute(1e3),
            ..StopConfig::default()
        },
        ..AlgoConfig::default()
    };
    let r = run_pdca(&p, &Vector::zeros(40), &cfg, &mut seeded_rng(0)).unwrap();
    assert_eq!(r.summary.decision, Termination::Uncertifiable);
    assert_eq!(r.summary.limit_kind, LimitKind::None);
    assert!(r.summary.residual.is_none());
}

#[test]
fn budget_exhaustion_is_reported() {
    let cfg = AlgoConfig {
        stop: StopConfig {
            max_iter: 2,
            tau: 1e-14,
            ..StopConfig::default()
        },
        ..AlgoConfig::default()
    };
    let p = small_ksparse(7);
    let r = run_pdca(&p, &Vector::zeros(40), &cfg, &mut seeded_rng(0)).unwrap();
    assert_eq!(r.summary.decision, Termination::IterBudget);
    assert_eq!(r.summary.iterations, 3);
}

#[test]
fn pdca_advances_the_caller_rng() {
    let mut a = seeded_rng(11);
    let mut b = seeded_rng(11);
    let r1 = run_pdca(&Toy1dProblem, &x1(1.5), &toy_cfg(), &mut a).unwrap();
    let r2 = run_pdca(&Toy1dProblem, &x1(1.5), &toy_cfg(), &mut b).unwrap();
    assert_eq!(r1.without_timing(), r2.without_timing());
    assert_eq!(a, b);
    assert_ne!(a, seeded_rng(11));
}
