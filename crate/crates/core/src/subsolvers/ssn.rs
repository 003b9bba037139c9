//! Dual semismooth Newton solver for
//!
//! `min_x ½‖Ax‖² + λ‖x‖₁ + ⟨c, x⟩ + (σ/2)‖x − x̃‖²`
//!
//! working on the dual `min_z F(z)` whose gradient is
//! `∇F(z) = z − A·prox_{(λ/σ)‖·‖₁}(x̃ − (c + Aᵀz)/σ)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use super::prox::{moreau_env_l1, prox_l1};
use crate::problem::Vector;

/// Strongly convex quadratic-plus-ℓ1 subproblem.
#[derive(Clone, Debug)]
pub struct QuadL1Subproblem<'a> {
    pub a: &'a DMatrix<f64>,
    pub c: Vector,
    pub x_tilde: Vector,
    pub sigma: f64,
    pub lambda: f64,
}

impl QuadL1Subproblem<'_> {
    pub fn primal_value(&self, x: &Vector) -> f64 {
        let ax = self.a * x;
        0.5 * ax.norm_squared()
            + self.lambda * x.lp_norm(1)
            + self.c.dot(x)
            + 0.5 * self.sigma * (x - &self.x_tilde).norm_squared()
    }

    fn prox_argument(&self, z: &Vector) -> (Vector, Vector) {
        let u = &self.c + self.a.tr_mul(z);
        let w = &self.x_tilde - &u / self.sigma;
        (u, w)
    }

    /// Dual objective `F(z)`; its minimum equals minus the primal optimum.
    pub fn dual_value(&self, z: &Vector) -> f64 {
        let (u, w) = self.prox_argument(z);
        0.5 * z.norm_squared() - self.sigma * moreau_env_l1(&w, self.lambda / self.sigma)
            - (self.x_tilde.dot(&u) - u.norm_squared() / (2.0 * self.sigma))
    }

    /// `(∇F(z), x(z))` with `x(z)` the primal point recovered from `z`.
    pub fn dual_gradient(&self, z: &Vector) -> (Vector, Vector) {
        let (_, w) = self.prox_argument(z);
        let x = prox_l1(&w, self.lambda / self.sigma);
        (z - self.a * &x, x)
    }

    /// Distance of the origin from `∂P(x)`, the primal optimality residual.
    pub fn primal_optimality_gap(&self, x: &Vector) -> f64 {
        let smooth = self.a.tr_mul(&(self.a * x)) + &self.c + (x - &self.x_tilde) * self.sigma;
        let mut gap = 0.0;
        for i in 0..x.len() {
            let g = smooth[i];
            let r = if x[i] > 0.0 {
                g + self.lambda
            } else if x[i] < 0.0 {
                g - self.lambda
            } else {
                (g.abs() - self.lambda).max(0.0)
            };
            gap += r * r;
        }
        gap.sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SsnConfig {
    pub grad_tol: f64,
    pub max_newton: usize,
    pub armijo_slope: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub cg_tol: f64,
    pub cg_max: usize,
    pub jacobian_reg: f64,
    /// Largest `m` for which the full `m × m` Newton matrix is factorized.
    pub dense_limit: usize,
    /// Use the `|J| × |J|` Woodbury system when `|J| < reduced_ratio · m`.
    pub reduced_ratio: f64,
}

impl Default for SsnConfig {
    fn default() -> Self {
        SsnConfig {
            grad_tol: 1e-10,
            max_newton: 100,
            armijo_slope: 1e-4,
            backtrack: 0.5,
            max_backtracks: 50,
            cg_tol: 1e-12,
            cg_max: 1000,
            jacobian_reg: 1e-12,
            dense_limit: 2000,
            reduced_ratio: 0.5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SsnStats {
    pub newton_iters: usize,
    pub backtracks: usize,
    /// `‖∇F(z)‖` at every Newton iterate, the final one last.
    pub residuals: Vec<f64>,
    pub reduced_solves: usize,
    pub dense_solves: usize,
    pub cg_solves: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsnFailure {
    NewtonBudgetExhausted,
    LineSearchFailed,
}

#[derive(Clone, Debug, Error)]
#[error("semismooth Newton failed ({kind:?}) with residual {residual:e}")]
pub struct SsnError {
    pub kind: SsnFailure,
    pub z: Vector,
    pub residual: f64,
    pub stats: SsnStats,
}

#[derive(Clone, Debug)]
pub struct SsnSolution {
    pub x: Vector,
    pub z: Vector,
    pub stats: SsnStats,
}

enum NewtonSystem {
    Reduced,
    Dense,
    Cg,
}

pub fn ssn_solve(
    sub: &QuadL1Subproblem<'_>,
    z0: Option<&Vector>,
    cfg: &SsnConfig,
) -> Result<SsnSolution, SsnError> {
    let (m, _) = sub.a.shape();
    let threshold = sub.lambda / sub.sigma;
    let mut z = match z0 {
        Some(z0) if z0.len() == m => z0.clone(),
        _ => Vector::zeros(m),
    };
    let mut stats = SsnStats::default();
    let mut f_val = sub.dual_value(&z);

    for _ in 0..cfg.max_newton {
        let (_, w) = sub.prox_argument(&z);
        let x = prox_l1(&w, threshold);
        let grad = &z - sub.a * &x;
        let res = grad.norm();
        stats.residuals.push(res);
        if res <= cfg.grad_tol {
            return Ok(SsnSolution { x, z, stats });
        }

        // Generalized Jacobian of the prox: 1 on |w_i| > λ/σ, 0 otherwise (kinks included).
        let active: Vec<usize> = (0..w.len()).filter(|&i| w[i].abs() > threshold).collect();
        let rhs = -&grad;
        let d = newton_direction(sub, &active, &rhs, cfg, &mut stats);
        let slope = grad.dot(&d);

        let slack = 1e-14 * (1.0 + f_val.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let trial = &z + &d * t;
            let f_trial = sub.dual_value(&trial);
            if f_trial <= f_val + cfg.armijo_slope * t * slope + slack {
                accepted = Some((trial, f_trial));
                break;
            }
            stats.backtracks += 1;
            t *= cfg.backtrack;
        }
        stats.newton_iters += 1;
        match accepted {
            Some((trial, f_trial)) => {
                z = trial;
                f_val = f_trial;
            }
            None => {
                return Err(SsnError {
                    kind: SsnFailure::LineSearchFailed,
                    z,
                    residual: res,
                    stats,
                })
            }
        }
    }

    let (grad, x) = sub.dual_gradient(&z);
    let res = grad.norm();
    stats.residuals.push(res);
    if res <= cfg.grad_tol {
        return Ok(SsnSolution { x, z, stats });
    }
    Err(SsnError {
        kind: SsnFailure::NewtonBudgetExhausted,
        z,
        residual: res,
        stats,
    })
}

/// Solves `(αI + (1/σ) A_J A_Jᵀ) d = rhs` with `α = 1 + jacobian_reg`.
fn newton_direction(
    sub: &QuadL1Subproblem<'_>,
    active: &[usize],
    rhs: &Vector,
    cfg: &SsnConfig,
    stats: &mut SsnStats,
) -> Vector {
    let m = rhs.len();
    let alpha = 1.0 + cfg.jacobian_reg;
    if active.is_empty() {
        return rhs / alpha;
    }
    let system = if (active.len() as f64) < cfg.reduced_ratio * m as f64 {
        NewtonSystem::Reduced
    } else if m <= cfg.dense_limit {
        NewtonSystem::Dense
    } else {
        NewtonSystem::Cg
    };
    let b = sub.a.select_columns(active.iter());
    match system {
        NewtonSystem::Reduced => {
            // Woodbury: (αI + BBᵀ/σ)⁻¹ = (1/α)(I − B(ασI + BᵀB)⁻¹Bᵀ).
            stats.reduced_solves += 1;
            let mut small = b.tr_mul(&b);
            for i in 0..small.nrows() {
                small[(i, i)] += alpha * sub.sigma;
            }
            let btr = b.tr_mul(rhs);
            let inner = match small.clone().cholesky() {
                Some(ch) => ch.solve(&btr),
                None => small.lu().solve(&btr).unwrap_or_else(|| DVector::zeros(active.len())),
            };
            (rhs - &b * inner) / alpha
        }
        NewtonSystem::Dense => {
            stats.dense_solves += 1;
            let mut big = &b * b.transpose() / sub.sigma;
            for i in 0..m {
                big[(i, i)] += alpha;
            }
            match big.clone().cholesky() {
                Some(ch) => ch.solve(rhs),
                None => big.lu().solve(rhs).unwrap_or_else(|| rhs / alpha),
            }
        }
        NewtonSystem::Cg => {
            stats.cg_solves += 1;
            let apply = |v: &Vector| -> Vector { v * alpha + &b * b.tr_mul(v) / sub.sigma };
            conjugate_gradient(apply, rhs, cfg.cg_tol, cfg.cg_max)
        }
    }
}

fn conjugate_gradient<F: Fn(&Vector) -> Vector>(
    apply: F,
    rhs: &Vector,
    tol: f64,
    max_iter: usize,
) -> Vector {
    let mut x = Vector::zeros(rhs.len());
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let stop = tol * tol * rhs.norm_squared().max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        if rr <= stop {
            break;
        }
        let ap = apply(&p);
        let step = rr / p.dot(&ap);
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        let rr_new = r.norm_squared();
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::seeded_rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_instance(m: usize, n: usize, seed: u64) -> (DMatrix<f64>, Vector, Vector) {
        let mut rng = seeded_rng(seed);
        let a = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
        let c = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let xt = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        (a, c, xt)
    }

    #[test]
    fn zero_matrix_reduces_to_a_prox() {
        let a = DMatrix::zeros(3, 2);
        let sub = QuadL1Subproblem {
            a: &a,
            c: Vector::zeros(2),
            x_tilde: Vector::from_vec(vec![2.0, 0.5]),
            sigma: 1.0,
            lambda: 1.0,
        };
        let sol = ssn_solve(&sub, None, &SsnConfig::default()).unwrap();
        assert!((sol.x - Vector::from_vec(vec![1.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn certificates_hold_and_duality_gap_closes() {
        for (seed, (m, n)) in [(20, 50), (60, 30), (40, 40)].into_iter().enumerate() {
            let (a, c, xt) = random_instance(m, n, seed as u64);
            let sub = QuadL1Subproblem {
                a: &a,
                c,
                x_tilde: xt,
                sigma: 1.0,
                lambda: 0.8,
            };
            let sol = ssn_solve(&sub, None, &SsnConfig::default()).unwrap();
            let (g, _) = sub.dual_gradient(&sol.z);
            assert!(g.norm() <= 1e-10);
            assert!(sub.primal_optimality_gap(&sol.x) <= 1e-8);
            let p = sub.primal_value(&sol.x);
            let d = sub.dual_value(&sol.z);
            assert!((p + d).abs() <= 1e-8 * (1.0 + p.abs()), "p={p} d={d}");
        }
    }

    #[test]
    fn dense_and_cg_paths_agree_with_reduced_path() {
        let (a, c, xt) = random_instance(30, 60, 9);
        let sub = QuadL1Subproblem {
            a: &a,
            c,
            x_tilde: xt,
            sigma: 0.5,
            lambda: 0.1,
        };
        let base = ssn_solve(&sub, None, &SsnConfig::default()).unwrap();
        let dense = SsnConfig {
            reduced_ratio: 0.0,
            ..SsnConfig::default()
        };
        let cg = SsnConfig {
            reduced_ratio: 0.0,
            dense_limit: 0,
            ..SsnConfig::default()
        };
        let sd = ssn_solve(&sub, None, &dense).unwrap();
        let sc = ssn_solve(&sub, None, &cg).unwrap();
        assert!(sd.stats.dense_solves > 0);
        assert!(sc.stats.cg_solves > 0);
        assert!((&base.x - &sd.x).norm() < 1e-9);
        assert!((&base.x - &sc.x).norm() < 1e-9);
    }

    #[test]
    fn warm_start_at_solution_needs_no_newton_step() {
        let (a, c, xt) = random_instance(15, 25, 4);
        let sub = QuadL1Subproblem {
            a: &a,
            c,
            x_tilde: xt,
            sigma: 2.0,
            lambda: 0.3,
        };
        let sol = ssn_solve(&sub, None, &SsnConfig::default()).unwrap();
        let again = ssn_solve(&sub, Some(&sol.z), &SsnConfig::default()).unwrap();
        assert_eq!(again.stats.newton_iters, 0);
    }

    #[test]
    fn budget_exhaustion_reports_last_iterate() {
        let (a, c, xt) = random_instance(20, 40, 5);
        let sub = QuadL1Subproblem {
            a: &a,
            c,
            x_tilde: xt,
            sigma: 1.0,
            lambda: 0.5,
        };
        let cfg = SsnConfig {
            max_newton: 1,
            grad_tol: 1e-300,
            ..SsnConfig::default()
        };
        let err = ssn_solve(&sub, None, &cfg).unwrap_err();
        assert_eq!(err.kind, SsnFailure::NewtonBudgetExhausted);
        assert_eq!(err.z.len(), 20);
        assert!(err.residual.is_finite());
    }
}
