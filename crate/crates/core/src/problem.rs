//! The DC problem abstraction `ζ = φ₁ + φ₂ − max_i ψ_i` and the quantities shared by
//! every solver: objective value, the stationarity residual ℛ and the stopping test.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DcError, Result};

pub type Vector = DVector<f64>;

/// Seeded generator owned by a single solver run.
pub type SolverRng = ChaCha8Rng;

/// Default cap on the number of pieces an active-set enumeration may return.
pub const DEFAULT_PIECE_CAP: usize = 4096;

/// Opaque identifier of one ψ piece. Each problem chooses its own encoding
/// (sign patterns, assignments, plain indices); ordering is lexicographic and is
/// used to break exact ties deterministically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PieceId(pub Vec<i32>);

impl PieceId {
    pub fn index(i: usize) -> Self {
        PieceId(vec![i as i32])
    }

    /// Compact `index:value` listing of the nonzero entries.
    pub fn sparse_label(&self) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0)
            .map(|(i, v)| format!("{i}:{v}"))
            .collect();
        parts.join(" ")
    }
}

/// Outcome of asking for the active gradient at a point.
#[derive(Clone, Debug, PartialEq)]
pub enum PieceSelection {
    /// Every exactly-active piece shares this gradient.
    Singleton { piece: PieceId, gradient: Vector },
    /// The active gradient set has more than one element; `ties` lists the
    /// coordinates (or data points) responsible for the ambiguity.
    Ambiguous { ties: Vec<usize> },
}

impl PieceSelection {
    pub fn is_singleton(&self) -> bool {
        matches!(self, PieceSelection::Singleton { .. })
    }
}

/// Solver state carried between subproblem solves (dual warm start).
#[derive(Clone, Debug, Default)]
pub struct WarmStart {
    pub dual: Option<Vector>,
}

/// A DC program `ζ(x) = φ₁(x) + φ₂(x) − max_i ψ_i(x)`.
///
/// `φ₁` is convex with a computable proximal map, `φ₂` is smooth convex and each
/// `ψ_i` is convex and differentiable. Problems without a smooth part return zero
/// for `φ₂` and its gradient.
pub trait DcProblem: Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    /// Value of φ₁; `f64::INFINITY` outside its domain.
    fn phi1(&self, x: &Vector) -> f64;

    /// `prox_{t φ₁}(v) = argmin_y φ₁(y) + ‖y − v‖² / (2t)`.
    fn prox_phi1(&self, v: &Vector, t: f64) -> Vector;

    fn phi2(&self, x: &Vector) -> f64;

    fn grad_phi2(&self, x: &Vector) -> Vector;

    /// Dedicated value oracle for `ψ = max_i ψ_i`.
    fn psi(&self, x: &Vector) -> f64;

    fn psi_piece(&self, piece: &PieceId, x: &Vector) -> f64;

    fn grad_psi_piece(&self, piece: &PieceId, x: &Vector) -> Vector;

    /// All pieces with `ψ_i(x) ≥ ψ(x) − tol`, or an overflow error when more than
    /// `cap` exist.
    fn active_pieces(&self, x: &Vector, tol: f64, cap: usize) -> Result<Vec<PieceId>>;

    /// The unique active gradient at `x`, or the reason it is not unique.
    fn singleton_gradient(&self, x: &Vector) -> PieceSelection;

    /// Uniformly random piece among the exactly-active ones.
    fn random_active_piece(&self, x: &Vector, rng: &mut SolverRng, cap: usize) -> Result<PieceId> {
        let pieces = self.active_pieces(x, 0.0, cap)?;
        let i = rng.random_range(0..pieces.len());
        Ok(pieces[i].clone())
    }

    /// `argmin_x φ(x) − ⟨g, x⟩ + (σ/2)‖x − center‖²`.
    fn solve_subproblem(
        &self,
        g: &Vector,
        center: &Vector,
        sigma: f64,
        warm: &mut WarmStart,
    ) -> Result<Vector>;

    /// Lipschitz constant shared by all ∇ψ_i (zero for affine pieces).
    fn smoothness(&self) -> f64 {
        0.0
    }

    fn piece_label(&self, piece: &PieceId) -> String {
        piece.sparse_label()
    }

    /// `φ₁ + φ₂ − ψ`; instances with a cancellation-free closed form override it.
    fn zeta(&self, x: &Vector) -> f64 {
        self.phi1(x) + self.phi2(x) - self.psi(x)
    }
}

/// ζ(x) = φ₁(x) + φ₂(x) − ψ(x).
pub fn objective<P: DcProblem + ?Sized>(problem: &P, x: &Vector) -> Result<f64> {
    let phi1 = problem.phi1(x);
    if !phi1.is_finite() {
        return Err(DcError::Infeasible);
    }
    Ok(problem.zeta(x))
}

/// Tolerance used to decide membership in the active set M(x).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ActiveTol {
    Absolute(f64),
    /// `value · (1 + |ψ(x)|)`.
    Relative(f64),
}

impl Default for ActiveTol {
    fn default() -> Self {
        ActiveTol::Relative(1e-10)
    }
}

impl ActiveTol {
    pub fn resolve(self, psi_value: f64) -> f64 {
        match self {
            ActiveTol::Absolute(t) => t,
            ActiveTol::Relative(t) => t * (1.0 + psi_value.abs()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub value: f64,
    /// Number of pieces the maximum was taken over.
    pub active_pieces: usize,
    /// Absolute tolerance used for active-set membership.
    pub active_tol: f64,
}

/// Stationarity residual
///
/// `ℛ(x) = max_{i ∈ M(x)} ‖x − prox_{φ₁}(x − ∇φ₂(x) + ∇ψ_i(x))‖ / (1 + ‖x‖ + ‖∇φ₂(x)‖ + ‖∇ψ_i(x)‖)`
///
/// with `M(x)` taken at absolute tolerance `active_tol`. Zero exactly at
/// d-stationary points.
pub fn stationarity_residual<P: DcProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    active_tol: f64,
    cap: usize,
) -> Result<Residual> {
    if !problem.phi1(x).is_finite() {
        return Err(DcError::Infeasible);
    }
    let pieces = problem.active_pieces(x, active_tol, cap)?;
    let grad2 = problem.grad_phi2(x);
    let x_norm = x.norm();
    let grad2_norm = grad2.norm();
    let mut worst = 0.0_f64;
    for piece in &pieces {
        let gpsi = problem.grad_psi_piece(piece, x);
        let v = x - &grad2 + &gpsi;
        let p = problem.prox_phi1(&v, 1.0);
        let r = (x - p).norm() / (1.0 + x_norm + grad2_norm + gpsi.norm());
        worst = worst.max(r);
    }
    Ok(Residual {
        value: worst,
        active_pieces: pieces.len(),
        active_tol,
    })
}

/// Residual with the tolerance resolved against ψ(x).
pub fn residual_with<P: DcProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    tol: ActiveTol,
    cap: usize,
) -> Result<Residual> {
    let abs = tol.resolve(problem.psi(x));
    stationarity_residual(problem, x, abs, cap)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopConfig {
    pub tau: f64,
    pub max_iter: usize,
    pub active_tol: ActiveTol,
    /// Only evaluate ℛ once the relative step falls below `tau`.
    pub cheap_check_first: bool,
    /// Enumeration cap for ℛ.
    pub cap: usize,
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig {
            tau: 1e-6,
            max_iter: 100_000,
            active_tol: ActiveTol::default(),
            cheap_check_first: true,
            cap: DEFAULT_PIECE_CAP,
        }
    }
}

impl StopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(DcError::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.max_iter < 1 {
            return Err(DcError::Config("max_iter must be at least 1".into()));
        }
        let t = match self.active_tol {
            ActiveTol::Absolute(t) | ActiveTol::Relative(t) => t,
        };
        if !(t >= 0.0) {
            return Err(DcError::Config("active_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopDecision {
    Continue,
    Converged,
    IterBudget,
    Uncertifiable,
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: Vector,
    pub objective: f64,
    /// Completed iterations.
    pub k: usize,
    pub subproblem_count: usize,
    pub perturb_retry_count: usize,
    pub rng: SolverRng,
}

#[derive(Clone, Debug)]
pub struct StopCheck {
    pub decision: StopDecision,
    pub rel_step: f64,
    /// Present whenever ℛ was evaluated.
    pub residual: Option<Residual>,
}

pub fn relative_step(x: &Vector, prev_x: &Vector) -> f64 {
    (x - prev_x).norm() / x.norm().max(1.0)
}

/// Termination test: `ℛ(x) < τ` or `k > max_iter`, with ℛ gated behind the cheap
/// relative-step test when configured.
pub fn check_stop<P: DcProblem + ?Sized>(
    state: &SolverState,
    prev_x: &Vector,
    cfg: &StopConfig,
    problem: &P,
) -> StopCheck {
    let rel_step = relative_step(&state.x, prev_x);
    if state.k > cfg.max_iter {
        return StopCheck {
            decision: StopDecision::IterBudget,
            rel_step,
            residual: None,
        };
    }
    if cfg.cheap_check_first && rel_step >= cfg.tau {
        return StopCheck {
            decision: StopDecision::Continue,
            rel_step,
            residual: None,
        };
    }
    match residual_with(problem, &state.x, cfg.active_tol, cfg.cap) {
        Ok(r) => StopCheck {
            decision: if r.value < cfg.tau {
                StopDecision::Converged
            } else {
                StopDecision::Continue
            },
            rel_step,
            residual: Some(r),
        },
        Err(_) => StopCheck {
            decision: StopDecision::Uncertifiable,
            rel_step,
            residual: None,
        },
    }
}
