use pdca_web::{kmedians_demo, pwq_curve, toy_paths};

#[test]
fn toy_paths_separate_dca_from_pdca() {
    let p = toy_paths(0.0, 0.25, 1);
    assert!(p.dca.xs.last().unwrap().abs() < 1e-6);
    assert!((p.pdca.xs.last().unwrap() + 1.0).abs() < 1e-6);
    assert_eq!(p.pdca.decision, "converged");
    assert_eq!(p.dca.xs.len(), p.dca.zetas.len());
}

#[test]
fn pwq_argmin_beats_every_sample() {
    let c = pwq_curve(&[-1.0, 0.5, 2.0, 2.5], 0.7, 0.3, -3.0, 4.0, 701);
    assert_eq!(c.xs.len(), 701);
    assert!(c.values.iter().all(|&v| v >= c.min_value - 1e-12));
}

#[test]
fn kmedians_demo_does_not_worsen_baseline() {
    let d = kmedians_demo(120, 3, 0.8, 4).unwrap();
    assert_eq!(d.points.len(), 120);
    assert_eq!(d.pdca_centers.len(), 3);
    assert!(d.pdca_zeta <= d.baseline_zeta * (1.0 + 1e-12));
    assert!(d.assignment.iter().all(|&a| a < 3));
}

#[test]
fn kmedians_demo_rejects_bad_k() {
    assert!(kmedians_demo(5, 0, 1.0, 0).is_err());
}
