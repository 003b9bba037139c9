//! Random perturbations for pDCA: sphere sampling, radius schedules and the
//! redraw loop that waits for a singleton active gradient.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DcError, Result};
use crate::problem::{DcProblem, PieceId, PieceSelection, SolverRng, Vector};

pub const DEFAULT_ALPHA0: f64 = 1e-6;
pub const DEFAULT_MAX_RETRIES: usize = 32;

/// Uniform sample from the unit sphere S^{n-1} (normalized Gaussian vector).
pub fn sample_unit_sphere(rng: &mut SolverRng, n: usize) -> Vector {
    assert!(n >= 1, "sphere dimension must be positive");
    loop {
        let v = Vector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let norm = v.norm();
        if norm > 1e-300 && norm.is_finite() {
            return v / norm;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `α_k = α₀ / (k + 1)`.
    Harmonic,
    /// `α_k = α₀ ρ^k`, `0 < ρ < 1`.
    Geometric { rho: f64 },
    /// `α₀` for the first `hold` iterations, then `α₀ / (k − hold + 2)`.
    ConstantThenHarmonic { hold: usize },
    /// `α_k = α₀`. Violates square-summability; ablation only.
    Constant,
}

/// Radius schedule `α_k`. When `relative_to_start` is set the effective `α₀` is
/// `alpha0 · (1 + ‖x⁰‖)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSchedule {
    pub kind: ScheduleKind,
    pub alpha0: f64,
    pub relative_to_start: bool,
}

impl Default for PerturbationSchedule {
    fn default() -> Self {
        PerturbationSchedule {
            kind: ScheduleKind::Harmonic,
            alpha0: DEFAULT_ALPHA0,
            relative_to_start: true,
        }
    }
}

impl PerturbationSchedule {
    pub fn harmonic(alpha0: f64) -> Self {
        PerturbationSchedule {
            kind: ScheduleKind::Harmonic,
            alpha0,
            relative_to_start: false,
        }
    }

    pub fn geometric(alpha0: f64, rho: f64) -> Self {
        PerturbationSchedule {
            kind: ScheduleKind::Geometric { rho },
            alpha0,
            relative_to_start: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(DcError::Config(format!(
                "alpha0 must be positive, got {}",
                self.alpha0
            )));
        }
        if let ScheduleKind::Geometric { rho } = self.kind {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(DcError::Config(format!("geometric rho must lie in (0,1), got {rho}")));
            }
        }
        Ok(())
    }

    /// Whether `Σ α_k²` is finite.
    pub fn is_conforming(&self) -> bool {
        !matches!(self.kind, ScheduleKind::Constant)
    }

    /// Effective `α₀` for a run started at `x0`.
    pub fn base_radius(&self, x0: &Vector) -> f64 {
        if self.relative_to_start {
            self.alpha0 * (1.0 + x0.norm())
        } else {
            self.alpha0
        }
    }

    /// `α_k / α₀`.
    pub fn factor(&self, k: usize) -> f64 {
        let k = k as f64;
        match self.kind {
            ScheduleKind::Harmonic => 1.0 / (k + 1.0),
            ScheduleKind::Geometric { rho } => rho.powf(k),
            ScheduleKind::ConstantThenHarmonic { hold } => {
                let hold = hold as f64;
                if k < hold {
                    1.0
                } else {
                    1.0 / (k - hold + 2.0)
                }
            }
            ScheduleKind::Constant => 1.0,
        }
    }

    /// `α_k` with the configured `alpha0` (no start scaling).
    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha0 * self.factor(k)
    }

    /// Closed-form `Σ_{k≥0} α_k²`, infinite for non-conforming kinds.
    pub fn square_sum_limit(&self) -> f64 {
        let a2 = self.alpha0 * self.alpha0;
        match self.kind {
            ScheduleKind::Harmonic => a2 * std::f64::consts::PI.powi(2) / 6.0,
            ScheduleKind::Geometric { rho } => a2 / (1.0 - rho * rho),
            ScheduleKind::ConstantThenHarmonic { hold } => {
                a2 * (hold as f64 + std::f64::consts::PI.powi(2) / 6.0 - 1.0)
            }
            ScheduleKind::Constant => f64::INFINITY,
        }
    }
}

/// `α_k` for the given schedule.
pub fn schedule_alpha(schedule: &PerturbationSchedule, k: usize) -> f64 {
    schedule.alpha(k)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbOutcome {
    pub x_hat: Vector,
    pub gradient: Vector,
    pub piece: PieceId,
    /// Redraws before a singleton was found.
    pub retries: usize,
    pub direction: Vector,
}

/// Draws `x̂ = x + α ξ` until the active gradient at `x̂` is a singleton.
pub fn perturb_until_singleton<P: DcProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    alpha: f64,
    rng: &mut SolverRng,
    max_retries: usize,
) -> Result<PerturbOutcome> {
    let n = problem.dim();
    let mut retries = 0;
    loop {
        let xi = sample_unit_sphere(rng, n);
        let x_hat = x + &xi * alpha;
        match problem.singleton_gradient(&x_hat) {
            PieceSelection::Singleton { piece, gradient } => {
                return Ok(PerturbOutcome {
                    x_hat,
                    gradient,
                    piece,
                    retries,
                    direction: xi,
                })
            }
            PieceSelection::Ambiguous { .. } => {
                retries += 1;
                if retries >= max_retries {
                    return Err(DcError::RetryExhausted { retries });
                }
            }
        }
    }
}

/// Seed for run `index` of a sweep started from `seed` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fresh generator for a run.
pub fn seeded_rng(seed: u64) -> SolverRng {
    use rand::SeedableRng;
    SolverRng::seed_from_u64(seed)
}
