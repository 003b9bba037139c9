//! Capped-ℓ1 least squares `½‖Ax − b‖² + λ Σ min{|x_i|, θ}` written as
//! `λ‖x‖₁ − λ Σ max{x_i − θ, −x_i − θ, 0}`; pieces are patterns `s ∈ {−1,0,1}ⁿ`
//! with `ψ_s(x) = λ Σ_{s_i ≠ 0} (s_i x_i − θ)`.

use nalgebra::DMatrix;
use rand::Rng;

use super::{sgn, LeastSquaresL1};
use crate::error::{DcError, Result};
use crate::problem::{DcProblem, PieceId, PieceSelection, SolverRng, Vector, WarmStart};
use crate::subsolvers::prox_l1;

#[derive(Clone, Debug)]
pub struct CappedL1Problem {
    ls: LeastSquaresL1,
    theta: f64,
}

impl CappedL1Problem {
    pub fn new(a: DMatrix<f64>, b: Vector, lambda: f64, theta: f64) -> Result<Self> {
        if !(lambda > 0.0 && theta > 0.0) {
            return Err(DcError::Config(format!(
                "lambda and theta must be positive, got {lambda}, {theta}"
            )));
        }
        Ok(CappedL1Problem {
            ls: LeastSquaresL1::new(a, b, lambda)?,
            theta,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.ls.a
    }

    pub fn b(&self) -> &Vector {
        &self.ls.b
    }

    pub fn lambda(&self) -> f64 {
        self.ls.lambda
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `λ Σ min{|x_i|, θ}`.
    pub fn penalty(&self, x: &Vector) -> f64 {
        self.ls.lambda * x.iter().map(|v| v.abs().min(self.theta)).sum::<f64>()
    }

    pub fn capped_l1_active_gradient(&self, x: &Vector) -> PieceSelection {
        let boundary: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() == self.theta).collect();
        if !boundary.is_empty() {
            return PieceSelection::Ambiguous { ties: boundary };
        }
        let s: Vec<i32> = x
            .iter()
            .map(|&v| if v.abs() > self.theta { sgn(v) as i32 } else { 0 })
            .collect();
        let gradient = Vector::from_fn(x.len(), |i, _| self.ls.lambda * s[i] as f64);
        PieceSelection::Singleton {
            piece: PieceId(s),
            gradient,
        }
    }

    fn contribution(&self, s: i32, v: f64) -> f64 {
        if s == 0 {
            0.0
        } else {
            self.ls.lambda * (s as f64 * v - self.theta)
        }
    }
}

impl DcProblem for CappedL1Problem {
    fn dim(&self) -> usize {
        self.ls.a.ncols()
    }

    fn name(&self) -> &str {
        "capped_l1"
    }

    fn phi1(&self, x: &Vector) -> f64 {
        self.ls.lambda * x.lp_norm(1)
    }

    fn prox_phi1(&self, v: &Vector, t: f64) -> Vector {
        prox_l1(v, t * self.ls.lambda)
    }

    fn phi2(&self, x: &Vector) -> f64 {
        self.ls.loss(x)
    }

    fn grad_phi2(&self, x: &Vector) -> Vector {
        self.ls.loss_grad(x)
    }

    fn psi(&self, x: &Vector) -> f64 {
        self.ls.lambda * x.iter().map(|v| (v.abs() - self.theta).max(0.0)).sum::<f64>()
    }

    fn psi_piece(&self, piece: &PieceId, x: &Vector) -> f64 {
        piece
            .0
            .iter()
            .zip(x.iter())
            .map(|(&s, &v)| self.contribution(s, v))
            .sum()
    }

    fn grad_psi_piece(&self, piece: &PieceId, _x: &Vector) -> Vector {
        Vector::from_fn(piece.0.len(), |i, _| self.ls.lambda * piece.0[i] as f64)
    }

    /// Per coordinate, every sign whose loss against the best choice fits in the
    /// remaining budget; combinations enumerated depth-first.
    fn active_pieces(&self, x: &Vector, tol: f64, cap: usize) -> Result<Vec<PieceId>> {
        let n = x.len();
        let slack = tol + 1e-14 * (1.0 + self.psi(x));
        let mut options: Vec<Vec<(i32, f64)>> = Vec::with_capacity(n);
        for &v in x.iter() {
            let best = self.ls.lambda * (v.abs() - self.theta).max(0.0);
            let mut opts: Vec<(i32, f64)> = [-1, 0, 1]
                .into_iter()
                .map(|s| (s, best - self.contribution(s, v)))
                .filter(|(_, loss)| *loss <= slack)
                .collect();
            opts.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            options.push(opts);
        }

        fn walk(
            options: &[Vec<(i32, f64)>],
            pos: usize,
            budget: f64,
            s: &mut Vec<i32>,
            out: &mut Vec<PieceId>,
            cap: usize,
        ) -> Result<()> {
            if pos == options.len() {
                if out.len() == cap {
                    return Err(DcError::EnumerationOverflow { cap });
                }
                out.push(PieceId(s.clone()));
                return Ok(());
            }
            for &(sign, loss) in &options[pos] {
                if loss > budget {
                    break;
                }
                s[pos] = sign;
                walk(options, pos + 1, budget - loss, s, out, cap)?;
            }
            Ok(())
        }

        let mut out = Vec::new();
        let mut s = vec![0; n];
        walk(&options, 0, slack, &mut s, &mut out, cap)?;
        Ok(out)
    }

    fn singleton_gradient(&self, x: &Vector) -> PieceSelection {
        self.capped_l1_active_gradient(x)
    }

    fn random_active_piece(&self, x: &Vector, rng: &mut SolverRng, _cap: usize) -> Result<PieceId> {
        let s = x
            .iter()
            .map(|&v| {
                let a = v.abs();
                if a > self.theta || (a == self.theta && rng.random::<bool>()) {
                    sgn(v) as i32
                } else {
                    0
                }
            })
            .collect();
        Ok(PieceId(s))
    }

    fn solve_subproblem(
        &self,
        g: &Vector,
        center: &Vector,
        sigma: f64,
        warm: &mut WarmStart,
    ) -> Result<Vector> {
        self.ls.solve(g, center, sigma, warm)
    }
}
