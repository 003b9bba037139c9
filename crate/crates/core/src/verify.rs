//! Independent checks on solver output: finite-difference gradients, the
//! fixed-point characterization of d-stationarity, near-monotonicity of pDCA
//! traces, the singleton rate after perturbation, and cross-checks of the
//! subproblem solvers against slower reference methods.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{DcError, Result};
use crate::perturbation::{sample_unit_sphere, seeded_rng};
use crate::problem::{DcProblem, PieceSelection, SolverRng, Vector, WarmStart};
use crate::report::{Algorithm, RunReport};
use crate::subsolvers::{
    moreau_env_l1, prox_grad_solve, prox_l1, solve_1d_pwq, ssn_solve, Pwq1dProblem, QuadL1Subproblem, SsnConfig,
};

/// Largest deviation between `grad` and central differences of `f` at `x`.
pub fn fd_gradient_error<F: Fn(&Vector) -> f64>(f: F, grad: &Vector, x: &Vector, h: f64) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        let mut up = x.clone();
        let mut dn = x.clone();
        up[i] += h;
        dn[i] -= h;
        let fd = (f(&up) - f(&dn)) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs());
    }
    worst
}

/// `max_{i ∈ M(x)} ‖x − argmin_y {φ(y) − ⟨∇ψ_i(x), y − x⟩ + (σ/2)‖y − x‖²}‖`,
/// computed through the subproblem solver rather than the prox of φ₁. Zero
/// exactly when `x` is d-stationary.
pub fn fixed_point_gap<P: DcProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    sigma: f64,
    active_tol: f64,
    cap: usize,
) -> Result<f64> {
    let mut worst = 0.0_f64;
    let mut warm = WarmStart::default();
    for piece in problem.active_pieces(x, active_tol, cap)? {
        let g = problem.grad_psi_piece(&piece, x);
        let y = problem.solve_subproblem(&g, x, sigma, &mut warm)?;
        worst = worst.max((&y - x).norm());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityViolation {
    pub k: usize,
    /// `ζ(x^k) − ζ(x^{k−1}) − bound`.
    pub excess: f64,
}

/// Iterations of a pDCA trace violating
/// `ζ(x^{k+1}) ≤ ζ(x^k) + (L + σ_k/2) α_k² + slack·(1 + |ζ(x^k)|)`.
pub fn near_monotonicity_violations(
    report: &RunReport,
    smoothness: f64,
    slack: f64,
) -> Vec<MonotonicityViolation> {
    assert_eq!(report.algorithm, Algorithm::Pdca, "bound applies to pDCA traces");
    let mut prev = report.initial_zeta;
    let mut out = Vec::new();
    for (idx, r) in report.records.iter().enumerate() {
        let alpha = r.alpha.unwrap_or(0.0);
        let sigma = report.config.sigma_at(idx);
        let bound = prev + (smoothness + 0.5 * sigma) * alpha * alpha + slack * (1.0 + prev.abs());
        if r.zeta > bound {
            out.push(MonotonicityViolation {
                k: r.k,
                excess: r.zeta - bound,
            });
        }
        prev = r.zeta;
    }
    out
}

/// Iterations of a DCA or revised-DCA trace where ζ rose by more than `slack`.
pub fn monotonicity_violations(report: &RunReport, slack: f64) -> Vec<MonotonicityViolation> {
    let mut prev = report.initial_zeta;
    let mut out = Vec::new();
    for r in &report.records {
        if r.zeta > prev + slack {
            out.push(MonotonicityViolation {
                k: r.k,
                excess: r.zeta - prev - slack,
            });
        }
        prev = r.zeta;
    }
    out
}

/// Fraction of `trials` single draws `x + α ξ` whose active gradient is a singleton.
pub fn singleton_rate<P: DcProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    alpha: f64,
    trials: usize,
    rng: &mut SolverRng,
) -> f64 {
    let hits = (0..trials)
        .filter(|_| {
            let xi = sample_unit_sphere(rng, problem.dim());
            matches!(problem.singleton_gradient(&(x + xi * alpha)), PieceSelection::Singleton { .. })
        })
        .count();
    hits as f64 / trials as f64
}

/// Worst discrepancies found by [`ssn_oracle`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SsnOracleReport {
    /// `max ‖x_ssn − x_pg‖`.
    pub max_diff: f64,
    /// `max |P(x) + D(z)| / (1 + |P(x)|)`.
    pub max_rel_gap: f64,
}

/// Semismooth Newton against accelerated proximal gradient on `instances`
/// random subproblems of the form `½‖Ax‖² + ⟨c, x⟩ + λ‖x‖₁ + (σ/2)‖x − x̃‖²`.
pub fn ssn_oracle(instances: usize, seed: u64) -> Result<SsnOracleReport> {
    let mut rng = seeded_rng(seed);
    let mut out = SsnOracleReport::default();
    for _ in 0..instances {
        let m = rng.random_range(10..60);
        let n = rng.random_range(20..120);
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let sub = QuadL1Subproblem {
            a: &a,
            c: Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)),
            x_tilde: Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
            sigma: 10f64.powf(rng.random_range(-1.0..1.0)),
            lambda: 10f64.powf(rng.random_range(-2.0..0.0)),
        };
        let ssn = ssn_solve(&sub, None, &SsnConfig::default()).map_err(|e| DcError::Subproblem {
            iteration: 0,
            reason: e.to_string(),
        })?;
        let pg = prox_grad_solve(&sub, 1e-12).map_err(|e| DcError::Subproblem {
            iteration: 0,
            reason: e.to_string(),
        })?;
        let primal = sub.primal_value(&ssn.x);
        out.max_diff = out.max_diff.max((&ssn.x - &pg).norm());
        out.max_rel_gap = out.max_rel_gap.max((primal + sub.dual_value(&ssn.z)).abs() / (1.0 + primal.abs()));
    }
    Ok(out)
}

/// Reference minimizer of `(1/n) Σ|x − b_i| + (σ/2)x² − cx`: a fine grid over
/// `[(c − 1)/σ, (c + 1)/σ]`, then bisection on the naively evaluated right
/// derivative. Value comparisons alone cannot resolve the argmin below `√(ε/σ)`.
pub fn grid_argmin_1d(b: &[f64], sigma: f64, c: f64) -> f64 {
    let w = 1.0 / b.len() as f64;
    let value = |x: f64| w * b.iter().map(|bi| (x - bi).abs()).sum::<f64>() + 0.5 * sigma * x * x - c * x;
    let right_slope = |x: f64| w * b.iter().map(|&bi| if x >= bi { 1.0 } else { -1.0 }).sum::<f64>() + sigma * x - c;
    let lo = (c - 1.0) / sigma - 1e-9;
    let hi = (c + 1.0) / sigma + 1e-9;
    let cells = 100_000;
    let h = (hi - lo) / cells as f64;
    let best = (0..=cells)
        .map(|i| lo + h * i as f64)
        .min_by(|x, y| value(*x).total_cmp(&value(*y)))
        .expect("nonempty grid");
    let (mut a, mut z) = (best - h, best + h);
    for _ in 0..200 {
        let mid = 0.5 * (a + z);
        if right_slope(mid) >= 0.0 {
            z = mid;
        } else {
            a = mid;
        }
    }
    z
}

/// Largest `|x_exact − x_grid|` over `instances` random 1-D piecewise quadratics,
/// a quarter of them with a duplicated breakpoint.
pub fn pwq_oracle(instances: usize, seed: u64) -> f64 {
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0_f64;
    for trial in 0..instances {
        let n = rng.random_range(1..40);
        let mut b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        if trial % 4 == 0 {
            b.push(b[0]);
        }
        let sigma = 10f64.powf(rng.random_range(-1.0..1.5));
        let c = rng.random_range(-3.0..3.0) * sigma;
        let grid = grid_argmin_1d(&b, sigma, c);
        let exact = solve_1d_pwq(&Pwq1dProblem::new(b, sigma, c));
        worst = worst.max((exact - grid).abs());
    }
    worst
}

/// Largest violation of the prox/envelope identities on random inputs: the
/// envelope is attained at the prox, the Moreau decomposition
/// `v = prox_{t‖·‖₁}(v) + Π_{[−t,t]ⁿ}(v)`, and `env ≤ min{t‖v‖₁, ½‖v‖²}`.
pub fn prox_identity_error(trials: usize, seed: u64) -> f64 {
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let n = rng.random_range(1..10);
        let v = Vector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
        let t = rng.random_range(0.0..3.0);
        let p = prox_l1(&v, t);
        let env = moreau_env_l1(&v, t);
        let attained = t * p.lp_norm(1) + 0.5 * (&p - &v).norm_squared();
        let proj = v.map(|vi| vi.clamp(-t, t));
        let upper = (t * v.lp_norm(1)).min(0.5 * v.norm_squared());
        worst = worst
            .max((env - attained).abs())
            .max((&p + proj - &v).norm())
            .max(env - upper);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::seeded_rng;
    use crate::problems::Toy1dProblem;

    #[test]
    fn fd_error_of_exact_gradient_is_tiny() {
        let x = Vector::from_vec(vec![0.3, -1.2]);
        let err = fd_gradient_error(|v| v.norm_squared(), &(&x * 2.0), &x, 1e-6);
        assert!(err < 1e-8);
    }

    #[test]
    fn toy_fixed_point_gap() {
        let p = Toy1dProblem;
        let at_min = fixed_point_gap(&p, &Vector::from_element(1, -1.0), 1.0, 0.0, 8).unwrap();
        assert_eq!(at_min, 0.0);
        let at_zero = fixed_point_gap(&p, &Vector::zeros(1), 1.0, 0.0, 8).unwrap();
        assert!((at_zero - 0.5).abs() < 1e-15);
    }

    #[test]
    fn toy_singletons_away_from_zero() {
        let rate = singleton_rate(&Toy1dProblem, &Vector::zeros(1), 1e-3, 1000, &mut seeded_rng(1));
        assert_eq!(rate, 1.0);
    }
}
