use thiserror::Error;

use super::prox::prox_l1;
use super::ssn::QuadL1Subproblem;
use crate::problem::Vector;

pub const PROX_GRAD_BUDGET: usize = 1_000_000;

#[derive(Clone, Debug, Error)]
#[error("accelerated proximal gradient hit its budget with residual {residual:e}")]
pub struct ProxGradError {
    pub x: Vector,
    pub residual: f64,
}

/// Largest eigenvalue of `AᵀA` by power iteration.
pub fn spectral_norm_sq(a: &nalgebra::DMatrix<f64>) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut v = Vector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..500 {
        let w = a.tr_mul(&(a * &v));
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw;
        v = w / nw;
        if (next - est).abs() <= 1e-12 * next {
            est = next;
            break;
        }
        est = next;
    }
    est
}

/// Accelerated proximal gradient on the primal subproblem, stopped when the
/// fixed-point residual `‖x − prox(x − ∇f(x)/L)‖` drops to `tol`.
pub fn prox_grad_solve(sub: &QuadL1Subproblem<'_>, tol: f64) -> Result<Vector, ProxGradError> {
    let n = sub.x_tilde.len();
    let lip = 1.01 * spectral_norm_sq(sub.a) + sub.sigma;
    let step = 1.0 / lip;
    let mu = sub.sigma;
    let momentum = (lip.sqrt() - mu.sqrt()) / (lip.sqrt() + mu.sqrt());
    let grad = |x: &Vector| -> Vector {
        sub.a.tr_mul(&(sub.a * x)) + &sub.c + (x - &sub.x_tilde) * sub.sigma
    };
    let forward_backward = |x: &Vector| -> Vector { prox_l1(&(x - grad(x) * step), sub.lambda * step) };

    let mut x = Vector::zeros(n);
    let mut x_prev = x.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..PROX_GRAD_BUDGET {
        let y = &x + (&x - &x_prev) * momentum;
        let next = forward_backward(&y);
        x_prev = std::mem::replace(&mut x, next);
        residual = (&x - forward_backward(&x)).norm();
        if residual <= tol {
            return Ok(x);
        }
    }
    Err(ProxGradError { x, residual })
}
