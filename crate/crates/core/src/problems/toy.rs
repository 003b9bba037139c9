use crate::error::{DcError, Result};
use crate::problem::{DcProblem, PieceId, PieceSelection, Vector};

/// `ζ(x) = x²/2 − max{−x, 0}` on the real line, with pieces `ψ₁(x) = −x`
/// (id 0) and `ψ₂(x) = 0` (id 1). Its only d-stationary point is `x = −1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Toy1dProblem;

const PIECES: [f64; 2] = [-1.0, 0.0];

impl Toy1dProblem {
    fn slope(piece: &PieceId) -> f64 {
        PIECES[piece.0[0] as usize]
    }

    /// Closed-form subproblem minimizer `(g + σ x̂)/(1 + σ)`.
    pub fn step(g: f64, center: f64, sigma: f64) -> f64 {
        (g + sigma * center) / (1.0 + sigma)
    }
}

impl DcProblem for Toy1dProblem {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> &str {
        "toy1d"
    }

    fn phi1(&self, _x: &Vector) -> f64 {
        0.0
    }

    fn prox_phi1(&self, v: &Vector, _t: f64) -> Vector {
        v.clone()
    }

    fn phi2(&self, x: &Vector) -> f64 {
        0.5 * x[0] * x[0]
    }

    fn grad_phi2(&self, x: &Vector) -> Vector {
        x.clone()
    }

    fn psi(&self, x: &Vector) -> f64 {
        (-x[0]).max(0.0)
    }

    fn psi_piece(&self, piece: &PieceId, x: &Vector) -> f64 {
        Self::slope(piece) * x[0]
    }

    fn grad_psi_piece(&self, piece: &PieceId, _x: &Vector) -> Vector {
        Vector::from_element(1, Self::slope(piece))
    }

    fn active_pieces(&self, x: &Vector, tol: f64, cap: usize) -> Result<Vec<PieceId>> {
        let psi = self.psi(x);
        let pieces: Vec<PieceId> = (0..2)
            .map(PieceId::index)
            .filter(|p| self.psi_piece(p, x) >= psi - tol)
            .collect();
        if pieces.len() > cap {
            return Err(DcError::EnumerationOverflow { cap });
        }
        Ok(pieces)
    }

    fn singleton_gradient(&self, x: &Vector) -> PieceSelection {
        let v = x[0];
        if v < 0.0 {
            PieceSelection::Singleton {
                piece: PieceId::index(0),
                gradient: Vector::from_element(1, -1.0),
            }
        } else if v > 0.0 {
            PieceSelection::Singleton {
                piece: PieceId::index(1),
                gradient: Vector::from_element(1, 0.0),
            }
        } else {
            PieceSelection::Ambiguous { ties: vec![0] }
        }
    }

    fn solve_subproblem(
        &self,
        g: &Vector,
        center: &Vector,
        sigma: f64,
        _warm: &mut crate::problem::WarmStart,
    ) -> Result<Vector> {
        Ok(Vector::from_element(1, Self::step(g[0], center[0], sigma)))
    }

    fn piece_label(&self, piece: &PieceId) -> String {
        format!("psi{}", piece.0[0] + 1)
    }
}
