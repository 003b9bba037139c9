//! Solvers for difference-of-convex programs `min φ₁(x) + φ₂(x) − max_i ψ_i(x)`:
//! proximal DCA, an ε-active revised DCA and the perturbed DCA, together with
//! the proximal subproblem solvers and four problem instances.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod data;
pub mod error;
pub mod perturbation;
pub mod problem;
pub mod problems;
pub mod report;
pub mod subsolvers;
pub mod verify;

pub use algorithms::{run_dca, run_pdca, run_revised_dca, AlgoConfig, RunResult, SigmaSchedule};
pub use error::{DcError, Result};
pub use perturbation::{seeded_rng, PerturbationSchedule, ScheduleKind};
pub use problem::{
    objective, residual_with, stationarity_residual, ActiveTol, DcProblem, PieceId, PieceSelection,
    StopConfig, Vector,
};
pub use report::{Algorithm, LimitKind, RunFailure, RunReport, Termination};
