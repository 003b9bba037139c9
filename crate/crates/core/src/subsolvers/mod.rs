//! Inner convex solvers used by the problem instances.

pub mod prox;
pub mod prox_grad;
pub mod pwq;
pub mod ssn;

pub use prox::{huber, moreau_env_l1, prox_l1, soft_threshold};
pub use prox_grad::{prox_grad_solve, spectral_norm_sq, ProxGradError};
pub use pwq::{solve_1d_pwq, Pwq1dProblem, SortedBreakpoints};
pub use ssn::{ssn_solve, QuadL1Subproblem, SsnConfig, SsnError, SsnFailure, SsnSolution, SsnStats};
