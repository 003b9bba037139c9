//! Iteration schemes: proximal DCA, the ε-active revised DCA and the perturbed DCA.

use serde::{Deserialize, Serialize};

use crate::error::{DcError, Result};
use crate::perturbation::{perturb_until_singleton, PerturbationSchedule, DEFAULT_MAX_RETRIES};
use crate::problem::{
    check_stop, objective, residual_with, ActiveTol, DcProblem, PieceId, Residual, SolverRng,
    SolverState, StopConfig, StopDecision, Vector, WarmStart,
};
use crate::report::{
    Algorithm, FinalSummary, IterRecord, LimitKind, RunFailure, RunReport, Stopwatch, Termination,
};

/// Proximal weights `σ_k`; the last value repeats once the list is exhausted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaSchedule {
    pub values: Vec<f64>,
}

impl SigmaSchedule {
    pub fn at(&self, k: usize) -> f64 {
        self.values[k.min(self.values.len() - 1)]
    }

    /// `(σ̲, σ̄)`.
    pub fn bounds(&self) -> (f64, f64) {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub sigma: f64,
    pub sigma_schedule: Option<SigmaSchedule>,
    /// Width of the ε-active set used by the revised DCA.
    pub epsilon: f64,
    pub stop: StopConfig,
    pub schedule: PerturbationSchedule,
    pub seed: u64,
    pub max_retries: usize,
    /// Runs fail once `‖x^k‖` exceeds this.
    pub bound_ceiling: f64,
    /// Store every iterate in the trace.
    pub record_iterates: bool,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        AlgoConfig {
            sigma: 1.0,
            sigma_schedule: None,
            epsilon: 1e-3,
            stop: StopConfig::default(),
            schedule: PerturbationSchedule::default(),
            seed: 0,
            max_retries: DEFAULT_MAX_RETRIES,
            bound_ceiling: 1e8,
            record_iterates: false,
        }
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(DcError::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if let Some(s) = &self.sigma_schedule {
            if s.values.is_empty() {
                return Err(DcError::Config("sigma schedule is empty".into()));
            }
            let (lo, hi) = s.bounds();
            if !(lo > 0.0 && hi.is_finite()) {
                return Err(DcError::Config(format!(
                    "sigma schedule bounds must be finite and positive, got [{lo}, {hi}]"
                )));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(DcError::Config(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        if self.max_retries < 1 {
            return Err(DcError::Config("max_retries must be at least 1".into()));
        }
        if !(self.bound_ceiling > 0.0) {
            return Err(DcError::Config("bound_ceiling must be positive".into()));
        }
        self.stop.validate()?;
        self.schedule.validate()
    }

    pub fn sigma_at(&self, k: usize) -> f64 {
        self.sigma_schedule.as_ref().map_or(self.sigma, |s| s.at(k))
    }
}

/// Shared bookkeeping for one run.
struct Run<'a, P: DcProblem + ?Sized> {
    problem: &'a P,
    cfg: &'a AlgoConfig,
    algorithm: Algorithm,
    clock: Stopwatch,
    initial_zeta: f64,
    records: Vec<IterRecord>,
    state: SolverState,
    warm: WarmStart,
}

impl<'a, P: DcProblem + ?Sized> Run<'a, P> {
    fn start(
        problem: &'a P,
        x0: &Vector,
        cfg: &'a AlgoConfig,
        algorithm: Algorithm,
        rng: SolverRng,
    ) -> Result<Self> {
        cfg.validate()?;
        if x0.len() != problem.dim() {
            return Err(DcError::Dimension {
                expected: problem.dim(),
                found: x0.len(),
            });
        }
        let zeta = objective(problem, x0)?;
        Ok(Run {
            problem,
            cfg,
            algorithm,
            clock: Stopwatch::start(),
            initial_zeta: zeta,
            records: Vec::new(),
            state: SolverState {
                x: x0.clone(),
                objective: zeta,
                k: 0,
                subproblem_count: 0,
                perturb_retry_count: 0,
                rng,
            },
            warm: WarmStart::default(),
        })
    }

    /// Accepts `x^{k+1}` and appends its trace record.
    fn advance(
        &mut self,
        x_new: Vector,
        subproblems: usize,
        piece: &PieceId,
        alpha: Option<f64>,
        retries: usize,
    ) -> Result<Vector> {
        let norm = x_new.norm();
        if !(norm <= self.cfg.bound_ceiling) {
            return Err(DcError::Unbounded {
                norm,
                ceiling: self.cfg.bound_ceiling,
            });
        }
        let zeta = objective(self.problem, &x_new)?;
        let prev = std::mem::replace(&mut self.state.x, x_new);
        self.state.k += 1;
        self.state.objective = zeta;
        self.state.subproblem_count += subproblems;
        self.state.perturb_retry_count += retries;
        self.records.push(IterRecord {
            k: self.state.k,
            zeta,
            step_norm: (&self.state.x - &prev).norm(),
            subproblems,
            piece: self.problem.piece_label(piece),
            alpha,
            retries,
            x: self
                .cfg
                .record_iterates
                .then(|| self.state.x.iter().copied().collect()),
        });
        Ok(prev)
    }

    fn report(
        &self,
        decision: Termination,
        limit_kind: LimitKind,
        residual: Option<Residual>,
        error: Option<&DcError>,
    ) -> RunReport {
        let schedule_conforming =
            (self.algorithm == Algorithm::Pdca).then(|| self.cfg.schedule.is_conforming());
        RunReport {
            algorithm: self.algorithm,
            problem: self.problem.name().to_string(),
            config: self.cfg.clone(),
            initial_zeta: self.initial_zeta,
            records: self.records.clone(),
            summary: FinalSummary {
                x: self.state.x.iter().copied().collect(),
                zeta: self.state.objective,
                residual: residual.map(|r| r.value),
                residual_active_tol: residual.map(|r| r.active_tol),
                active_set_size: residual.map(|r| r.active_pieces),
                total_subproblems: self.state.subproblem_count,
                iterations: self.state.k,
                decision,
                limit_kind,
                seconds: self.clock.seconds(),
                schedule_conforming,
                error: error.map(|e| e.to_string()),
            },
        }
    }

    fn fail(&self, error: DcError) -> RunFailure {
        let error = error.at_iteration(self.state.k + 1);
        let residual = residual_with(self.problem, &self.state.x, self.cfg.stop.active_tol, self.cfg.stop.cap).ok();
        RunFailure {
            report: Box::new(self.report(Termination::Failed, LimitKind::None, residual, Some(&error))),
            error,
        }
    }

    /// Applies the shared stop rule; `Some` once the run is over.
    fn stop_rule(&self, prev: &Vector) -> Option<RunReport> {
        let check = check_stop(&self.state, prev, &self.cfg.stop, self.problem);
        let (decision, limit) = match check.decision {
            StopDecision::Continue => return None,
            StopDecision::Converged => (Termination::Converged, LimitKind::DStationary),
            StopDecision::IterBudget => (Termination::IterBudget, LimitKind::None),
            StopDecision::Uncertifiable => (Termination::Uncertifiable, LimitKind::None),
        };
        let residual = check.residual.or_else(|| {
            residual_with(self.problem, &self.state.x, self.cfg.stop.active_tol, self.cfg.stop.cap).ok()
        });
        Some(self.report(decision, limit, residual, None))
    }
}

pub type RunResult = std::result::Result<RunReport, RunFailure>;

fn config_failure<P: DcProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    cfg: &AlgoConfig,
    algorithm: Algorithm,
    error: DcError,
) -> RunFailure {
    RunFailure {
        report: Box::new(RunReport {
            algorithm,
            problem: problem.name().to_string(),
            config: cfg.clone(),
            initial_zeta: f64::NAN,
            records: Vec::new(),
            summary: FinalSummary {
                x: x0.iter().copied().collect(),
                zeta: f64::NAN,
                residual: None,
                residual_active_tol: None,
                active_set_size: None,
                total_subproblems: 0,
                iterations: 0,
                decision: Termination::Failed,
                limit_kind: LimitKind::None,
                seconds: 0.0,
                schedule_conforming: None,
                error: Some(error.to_string()),
            },
        }),
        error,
    }
}

/// Proximal DCA: linearize ψ at an exactly-active piece (uniform among ties) and
/// solve `min φ(x) − ⟨g, x − x^k⟩ + (σ_k/2)‖x − x^k‖²`.
///
/// Stops on the relative step alone, so a converged run certifies criticality;
/// the reported ℛ uses an active set widened to `τ(1 + |ψ|)`.
pub fn run_dca<P: DcProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    cfg: &AlgoConfig,
    rng: &mut SolverRng,
) -> RunResult {
    let mut run = match Run::start(problem, x0, cfg, Algorithm::Dca, rng.clone()) {
        Ok(r) => r,
        Err(e) => return Err(config_failure(problem, x0, cfg, Algorithm::Dca, e)),
    };
    let result = loop {
        let step = (|| -> Result<Vector> {
            let x = &run.state.x;
            let piece = problem.random_active_piece(x, &mut run.state.rng, cfg.stop.cap)?;
            let g = problem.grad_psi_piece(&piece, x);
            let sigma = cfg.sigma_at(run.state.k);
            let x_new = problem.solve_subproblem(&g, x, sigma, &mut run.warm)?;
            run.advance(x_new, 1, &piece, None, 0)
        })();
        let prev = match step {
            Ok(p) => p,
            Err(e) => break Err(run.fail(e)),
        };
        let rel = crate::problem::relative_step(&run.state.x, &prev);
        let over_budget = run.state.k > cfg.stop.max_iter;
        if over_budget || rel < cfg.stop.tau {
            let tol = ActiveTol::Relative(cfg.stop.tau.max(match cfg.stop.active_tol {
                ActiveTol::Relative(t) => t,
                ActiveTol::Absolute(_) => 0.0,
            }));
            let residual = residual_with(problem, &run.state.x, tol, cfg.stop.cap).ok();
            let (decision, limit) = if over_budget {
                (Termination::IterBudget, LimitKind::None)
            } else {
                (Termination::Converged, LimitKind::Critical)
            };
            break Ok(run.report(decision, limit, residual, None));
        }
    };
    *rng = run.state.rng;
    result
}

/// Perturbed DCA: linearize ψ at `x̂^k = x^k + α_k ξ^k`, where the active gradient
/// is a singleton, and solve one subproblem centred at `x̂^k`.
pub fn run_pdca<P: DcProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    cfg: &AlgoConfig,
    rng: &mut SolverRng,
) -> RunResult {
    let mut run = match Run::start(problem, x0, cfg, Algorithm::Pdca, rng.clone()) {
        Ok(r) => r,
        Err(e) => return Err(config_failure(problem, x0, cfg, Algorithm::Pdca, e)),
    };
    let base = cfg.schedule.base_radius(x0);
    let result = loop {
        let k = run.state.k;
        let alpha = base * cfg.schedule.factor(k);
        let step = (|| -> Result<Vector> {
            let out = perturb_until_singleton(problem, &run.state.x, alpha, &mut run.state.rng, cfg.max_retries)?;
            let x_new = problem.solve_subproblem(&out.gradient, &out.x_hat, cfg.sigma_at(k), &mut run.warm)?;
            run.advance(x_new, 1, &out.piece, Some(alpha), out.retries)
        })();
        match step {
            Ok(prev) => {
                if let Some(report) = run.stop_rule(&prev) {
                    break Ok(report);
                }
            }
            Err(e) => break Err(run.fail(e)),
        }
    };
    *rng = run.state.rng;
    result
}

/// Revised DCA: solve the unit-weight subproblem for every ε-active piece and keep
/// the candidate minimizing `ζ(x̂) + ½‖x̂ − x^k‖²` (smallest piece id on ties).
pub fn run_revised_dca<P: DcProblem + ?Sized>(problem: &P, x0: &Vector, cfg: &AlgoConfig) -> RunResult {
    let rng = crate::perturbation::seeded_rng(cfg.seed);
    let mut run = match Run::start(problem, x0, cfg, Algorithm::RevisedDca, rng) {
        Ok(r) => r,
        Err(e) => return Err(config_failure(problem, x0, cfg, Algorithm::RevisedDca, e)),
    };
    loop {
        let step = (|| -> Result<Vector> {
            let x = run.state.x.clone();
            let mut pieces = problem.active_pieces(&x, cfg.epsilon, cfg.stop.cap)?;
            pieces.sort();
            let mut best: Option<(f64, Vector, usize)> = None;
            for (idx, piece) in pieces.iter().enumerate() {
                let g = problem.grad_psi_piece(piece, &x);
                let cand = problem.solve_subproblem(&g, &x, 1.0, &mut run.warm)?;
                let value = objective(problem, &cand)? + 0.5 * (&cand - &x).norm_squared();
                if best.as_ref().is_none_or(|b| value < b.0) {
                    best = Some((value, cand, idx));
                }
            }
            let (_, x_new, idx) = best.ok_or_else(|| DcError::Config("empty active set".into()))?;
            run.advance(x_new, pieces.len(), &pieces[idx], None, 0)
        })();
        match step {
            Ok(prev) => {
                if let Some(report) = run.stop_rule(&prev) {
                    return Ok(report);
                }
            }
            Err(e) => return Err(run.fail(e)),
        }
    }
}
