//! Concrete DC problem instances.

pub mod capped_l1;
pub mod kmedians;
pub mod ksparse;
pub mod toy;

pub use capped_l1::CappedL1Problem;
pub use kmedians::KmediansProblem;
pub use ksparse::{vector_k_norm, KsparseProblem};
pub use toy::Toy1dProblem;

use nalgebra::DMatrix;

use crate::error::{DcError, Result};
use crate::problem::{Vector, WarmStart};
use crate::subsolvers::{prox_grad_solve, ssn_solve, QuadL1Subproblem, SsnConfig};

/// Least-squares data term `½‖Ax − b‖²` plus `λ‖x‖₁`, shared by the K-sparse and
/// capped-ℓ1 instances.
#[derive(Clone, Debug)]
pub(crate) struct LeastSquaresL1 {
    pub a: DMatrix<f64>,
    pub b: Vector,
    pub atb: Vector,
    pub lambda: f64,
    pub ssn: SsnConfig,
}

impl LeastSquaresL1 {
    pub fn new(a: DMatrix<f64>, b: Vector, lambda: f64) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(DcError::Dimension {
                expected: a.nrows(),
                found: b.len(),
            });
        }
        if !(lambda >= 0.0) {
            return Err(DcError::Config(format!("lambda must be nonnegative, got {lambda}")));
        }
        let atb = a.tr_mul(&b);
        Ok(LeastSquaresL1 {
            a,
            b,
            atb,
            lambda,
            ssn: SsnConfig::default(),
        })
    }

    pub fn loss(&self, x: &Vector) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    pub fn loss_grad(&self, x: &Vector) -> Vector {
        self.a.tr_mul(&(&self.a * x - &self.b))
    }

    /// `argmin ½‖Ax − b‖² + λ‖x‖₁ − ⟨g, x⟩ + (σ/2)‖x − center‖²`, mapped to the
    /// quadratic-ℓ1 form with `c = −Aᵀb − g`. Falls back once to accelerated
    /// proximal gradient when the Newton solver fails.
    pub fn solve(&self, g: &Vector, center: &Vector, sigma: f64, warm: &mut WarmStart) -> Result<Vector> {
        let sub = QuadL1Subproblem {
            a: &self.a,
            c: -&self.atb - g,
            x_tilde: center.clone(),
            sigma,
            lambda: self.lambda,
        };
        match ssn_solve(&sub, warm.dual.as_ref(), &self.ssn) {
            Ok(sol) => {
                warm.dual = Some(sol.z);
                Ok(sol.x)
            }
            Err(ssn_err) => {
                warm.dual = None;
                prox_grad_solve(&sub, 1e-12).map_err(|pg| DcError::Subproblem {
                    iteration: 0,
                    reason: format!("{ssn_err}; fallback: {pg}"),
                })
            }
        }
    }
}

#[inline]
pub(crate) fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
