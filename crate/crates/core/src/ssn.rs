//! Regularized semi-smooth Newton on the splitting residual (DRSSN).
//!
//! Each outer iteration picks `J ∈ ∂R(z_k)` and solves
//! `(J + μ_k I) Δz = −r_k` with `μ_k = λ_k ‖r_k‖`. A trial point is accepted
//! only if it strictly lowers `‖R‖`. By default rejected trials raise `λ` by
//! `ℓ` and an accepted trial lowers it by `ℓ`; see [`Backtrack`] and
//! [`DampingSchedule`] for the alternatives, including a three-regime rule
//! driven by the quality `ψ` of each accepted step.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::game::{duality_gap, LiftedPoint, StrategyProfile};
use crate::jacobian::{newton_solve, residual_jacobian, ResidualJacobian};
use crate::splitting::{residual, restrict, DrsContext, ResidualValue};
use crate::trace::{Phase, RunRecord, Stopwatch, TraceRow};

/// Residual norms at or below this are treated as an exact fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-14;

/// How the quality `ψ` of an accepted Newton direction is measured.
#[derive(Debug, Clone, Copy)]
pub enum DirectionQuality {
    /// `ψ = ‖r_k‖ / ‖r_{k+1}‖`.
    ContractionRatio,
    /// Any other measure of `(prev_norm, new_norm, step)`.
    Custom(fn(f64, f64, &DVector<f64>) -> f64),
}

/// The factor `β₀ < 1` used to relax damping after a high-quality step.
#[derive(Debug, Clone, Copy)]
pub enum DampingContraction {
    /// `β₀ = clamp(√‖r_{k+1}‖, floor, ceil)`.
    SqrtResidual {
        floor: f64,
        ceil: f64,
    },
    Fixed(f64),
}

impl DampingContraction {
    pub fn factor(&self, new_norm: f64) -> f64 {
        match *self {
            DampingContraction::SqrtResidual { floor, ceil } => new_norm.sqrt().clamp(floor, ceil),
            DampingContraction::Fixed(b) => b,
        }
    }
}

/// Which way a failed line-search trial moves the damping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backtrack {
    /// Failure multiplies `λ` by `ℓ` (shorter, more gradient-like step);
    /// success divides it. Trials stop once `λ` exceeds `lambda_cap`.
    RaiseDamping,
    /// Failure divides `λ` by `ℓ`; success multiplies it.
    LowerDamping,
}

/// How the damping for the next Newton step is chosen after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DampingSchedule {
    /// Keep the value the line search left behind.
    LineSearch,
    /// Overwrite it with [`adaptive_lambda_update`] driven by the step quality.
    AdaptiveAfterAccept,
}

#[derive(Debug, Clone, Copy)]
pub struct SsnConfig {
    /// Line-search factor `ℓ`.
    pub ell: f64,
    pub backtrack: Backtrack,
    pub schedule: DampingSchedule,
    /// Trials stop once `λ` exceeds this.
    pub lambda_cap: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub max_newton_iters: usize,
    pub target_gap: f64,
    pub max_line_search_trials: usize,
    pub quality: DirectionQuality,
    pub contraction: DampingContraction,
}

impl Default for SsnConfig {
    fn default() -> Self {
        Self {
            ell: 1.5,
            backtrack: Backtrack::RaiseDamping,
            schedule: DampingSchedule::LineSearch,
            lambda_cap: 1e9,
            lambda_min: 1e-15,
            lambda_max: 1e15,
            alpha1: 1e-2,
            alpha2: 5.0,
            beta1: 2.0,
            beta2: 5.0,
            max_newton_iters: 200,
            target_gap: 1e-12,
            max_line_search_trials: 60,
            quality: DirectionQuality::ContractionRatio,
            contraction: DampingContraction::SqrtResidual { floor: 0.05, ceil: 0.9 },
        }
    }
}

impl SsnConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda_min > 0.0
            && self.lambda_min < self.lambda_max
            && self.alpha1 > 0.0
            && self.alpha1 < self.alpha2
            && self.beta1 > 1.0
            && self.beta2 > self.beta1
            && self.ell > 1.0
            && self.lambda_cap > self.lambda_min
            && self.max_newton_iters > 0
            && self.max_line_search_trials > 0
            && self.target_gap > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("inconsistent SSN parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsnFlag {
    Running,
    Converged,
    Stalled,
}

/// Current iterate, damping and bookkeeping of a DRSSN run.
#[derive(Debug, Clone)]
pub struct SsnState {
    pub z: LiftedPoint,
    pub lambda: f64,
    pub residual: ResidualValue,
    pub newton_steps_taken: usize,
    pub linear_solves: usize,
    pub flag: SsnFlag,
}

impl SsnState {
    pub fn new(ctx: &DrsContext<'_>, z: LiftedPoint, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "initial damping must be positive, got {lambda}"
            )));
        }
        let residual = residual(ctx, &z)?;
        Ok(Self {
            z,
            lambda,
            residual,
            newton_steps_taken: 0,
            linear_solves: 0,
            flag: SsnFlag::Running,
        })
    }
}

/// A trial point `z + Δz` and its residual.
#[derive(Debug, Clone)]
pub struct NewtonCandidate {
    pub z: LiftedPoint,
    pub residual: ResidualValue,
    pub step: DVector<f64>,
}

/// One regularized Newton trial at the state's damping.
///
/// Returns `None` when the residual is already numerically zero.
pub fn newton_step(ctx: &DrsContext<'_>, state: &SsnState) -> Result<Option<NewtonCandidate>> {
    if state.residual.norm() <= FIXED_POINT_TOL {
        return Ok(None);
    }
    let jac = residual_jacobian(ctx, &state.z)?;
    candidate(ctx, state, &jac, state.lambda).map(Some)
}

fn candidate(ctx: &DrsContext<'_>, state: &SsnState, jac: &ResidualJacobian, lambda: f64) -> Result<NewtonCandidate> {
    let mu = lambda * state.residual.norm();
    let step = newton_solve(jac, mu, &state.residual)?;
    let z = LiftedPoint::new(state.z.as_vector() + &step)?;
    let residual = residual(ctx, &z)?;
    Ok(NewtonCandidate { z, residual, step })
}

#[derive(Debug, Clone)]
pub enum LineSearchOutcome {
    Accepted {
        prev_norm: f64,
        new_norm: f64,
        lambda_used: f64,
        step: DVector<f64>,
    },
    Converged,
    Stalled,
}

/// Runs trials until the residual strictly decreases.
///
/// On success the state moves to the accepted point. `config.backtrack`
/// decides whether a failed trial raises or lowers `λ` by the factor `ℓ`;
/// success moves it the other way. The loop gives up once `λ` leaves
/// `[lambda_min, lambda_cap]` or after `max_line_search_trials`, leaving the
/// state untouched apart from the `Stalled` flag.
pub fn line_search_accept(ctx: &DrsContext<'_>, state: &mut SsnState, config: &SsnConfig) -> Result<LineSearchOutcome> {
    if state.residual.norm() <= FIXED_POINT_TOL {
        state.flag = SsnFlag::Converged;
        return Ok(LineSearchOutcome::Converged);
    }
    let jac = residual_jacobian(ctx, &state.z)?;
    let (on_success, on_failure) = match config.backtrack {
        Backtrack::RaiseDamping => (1.0 / config.ell, config.ell),
        Backtrack::LowerDamping => (config.ell, 1.0 / config.ell),
    };
    let mut lambda = state.lambda;
    for _ in 0..config.max_line_search_trials {
        if !(config.lambda_min..=config.lambda_cap).contains(&lambda) {
            break;
        }
        let cand = candidate(ctx, state, &jac, lambda)?;
        state.linear_solves += 1;
        if cand.residual.norm() < state.residual.norm() {
            let prev_norm = state.residual.norm();
            let new_norm = cand.residual.norm();
            state.z = cand.z;
            state.residual = cand.residual;
            state.lambda = lambda * on_success;
            state.newton_steps_taken += 1;
            return Ok(LineSearchOutcome::Accepted {
                prev_norm,
                new_norm,
                lambda_used: lambda,
                step: cand.step,
            });
        }
        lambda *= on_failure;
    }
    state.flag = SsnFlag::Stalled;
    Ok(LineSearchOutcome::Stalled)
}

/// Quality `ψ` of a step under `config.quality`.
pub fn direction_quality(prev_norm: f64, new_norm: f64, step: &DVector<f64>, config: &SsnConfig) -> f64 {
    match config.quality {
        DirectionQuality::ContractionRatio => {
            if new_norm == 0.0 {
                f64::INFINITY
            } else {
                prev_norm / new_norm
            }
        }
        DirectionQuality::Custom(f) => f(prev_norm, new_norm, step),
    }
}

/// Three-regime damping update:
/// `ψ ≥ α₂ → max(λ_min, β₀λ)`, `α₁ ≤ ψ < α₂ → β₁λ`, `ψ < α₁ → min(λ_max, β₂λ)`.
pub fn adaptive_lambda_update(
    prev_norm: f64,
    new_norm: f64,
    step: &DVector<f64>,
    lambda: f64,
    config: &SsnConfig,
) -> Result<f64> {
    if !prev_norm.is_finite() || !new_norm.is_finite() || !lambda.is_finite() {
        return Err(Error::NonFinite("damping update input"));
    }
    if !(prev_norm > 0.0) {
        return Err(Error::InvalidConfig(
            "damping update needs a positive previous residual".into(),
        ));
    }
    let psi = direction_quality(prev_norm, new_norm, step, config);
    if psi.is_nan() {
        return Err(Error::NonFinite("direction quality"));
    }
    let next = if psi >= config.alpha2 {
        (config.contraction.factor(new_norm) * lambda).max(config.lambda_min)
    } else if psi >= config.alpha1 {
        config.beta1 * lambda
    } else {
        (config.beta2 * lambda).min(config.lambda_max)
    };
    Ok(next.clamp(config.lambda_min, config.lambda_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsnStatus {
    Converged,
    Stalled,
    IterationLimit,
}

/// One accepted Newton step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsnStep {
    pub residual_norm: f64,
    /// Damping used to compute the accepted step.
    pub lambda_used: f64,
    /// Damping carried into the next step.
    pub lambda_next: f64,
    pub duality_gap: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SsnOutcome {
    /// Lowest-gap restriction seen; the final one when converged.
    pub profile: StrategyProfile,
    pub gap: f64,
    pub status: SsnStatus,
    pub z: LiftedPoint,
    pub residual_norm: f64,
    pub initial_residual_norm: f64,
    pub lambda: f64,
    pub steps: Vec<SsnStep>,
    pub linear_solves: usize,
    pub trace: RunRecord,
}

/// A resumable DRSSN run; [`drssn`] drives one to completion.
pub struct SsnRun<'c, 'g> {
    ctx: &'c DrsContext<'g>,
    config: SsnConfig,
    state: SsnState,
    initial_residual_norm: f64,
    steps: Vec<SsnStep>,
    best: (f64, StrategyProfile),
    current_gap: f64,
    next_iteration: u64,
    trace: RunRecord,
}

impl<'c, 'g> SsnRun<'c, 'g> {
    /// Evaluates the starting point and records it at `first_iteration`.
    pub fn start(
        ctx: &'c DrsContext<'g>,
        z0: LiftedPoint,
        lambda0: f64,
        config: &SsnConfig,
        clock: &Stopwatch,
        first_iteration: u64,
    ) -> Result<Self> {
        config.validate()?;
        let state = SsnState::new(ctx, z0, lambda0)?;
        let profile = restrict(ctx, &state.z)?;
        let gap = duality_gap(ctx.game(), &profile)?.gap;
        let mut trace = RunRecord::new();
        trace.push(TraceRow {
            iteration: first_iteration,
            phase: Phase::Newton,
            duality_gap: gap,
            residual_norm: state.residual.norm(),
            lambda: state.lambda,
            elapsed_seconds: clock.elapsed(),
        });
        Ok(Self {
            ctx,
            config: *config,
            initial_residual_norm: state.residual.norm(),
            state,
            steps: Vec::new(),
            best: (gap, profile),
            current_gap: gap,
            next_iteration: first_iteration + 1,
            trace,
        })
    }

    pub fn state(&self) -> &SsnState {
        &self.state
    }

    pub fn current_gap(&self) -> f64 {
        self.current_gap
    }

    pub fn steps(&self) -> &[SsnStep] {
        &self.steps
    }

    pub fn next_iteration(&self) -> u64 {
        self.next_iteration
    }

    /// Takes up to `max_steps` accepted steps.
    pub fn advance(&mut self, max_steps: usize, clock: &Stopwatch) -> Result<SsnStatus> {
        for _ in 0..max_steps {
            if self.current_gap <= self.config.target_gap {
                return Ok(SsnStatus::Converged);
            }
            match line_search_accept(self.ctx, &mut self.state, &self.config)? {
                LineSearchOutcome::Converged | LineSearchOutcome::Stalled => {
                    // A numerically exact fixed point whose gap is still above
                    // target cannot be improved either.
                    return Ok(SsnStatus::Stalled);
                }
                LineSearchOutcome::Accepted {
                    prev_norm,
                    new_norm,
                    lambda_used,
                    step,
                } => {
                    let lambda_next = match self.config.schedule {
                        DampingSchedule::LineSearch => self.state.lambda,
                        DampingSchedule::AdaptiveAfterAccept => {
                            adaptive_lambda_update(prev_norm, new_norm, &step, lambda_used, &self.config)?
                        }
                    };
                    self.state.lambda = lambda_next;
                    let profile = restrict(self.ctx, &self.state.z)?;
                    let gap = duality_gap(self.ctx.game(), &profile)?.gap;
                    let elapsed = clock.elapsed();
                    self.current_gap = gap;
                    if gap <= self.best.0 {
                        self.best = (gap, profile);
                    }
                    self.steps.push(SsnStep {
                        residual_norm: new_norm,
                        lambda_used,
                        lambda_next,
                        duality_gap: gap,
                        elapsed_seconds: elapsed,
                    });
                    self.trace.push(TraceRow {
                        iteration: self.next_iteration,
                        phase: Phase::Newton,
                        duality_gap: gap,
                        residual_norm: new_norm,
                        lambda: lambda_next,
                        elapsed_seconds: elapsed,
                    });
                    self.next_iteration += 1;
                }
            }
        }
        Ok(if self.current_gap <= self.config.target_gap {
            SsnStatus::Converged
        } else {
            SsnStatus::IterationLimit
        })
    }

    pub fn finish(self, status: SsnStatus) -> SsnOutcome {
        SsnOutcome {
            profile: self.best.1,
            gap: self.best.0,
            status,
            residual_norm: self.state.residual.norm(),
            z: self.state.z,
            initial_residual_norm: self.initial_residual_norm,
            lambda: self.state.lambda,
            steps: self.steps,
            linear_solves: self.state.linear_solves,
            trace: self.trace,
        }
    }
}

/// Runs DRSSN from `z0` until the restricted gap reaches `config.target_gap`,
/// the step budget runs out, or the line search stalls.
pub fn drssn(
    ctx: &DrsContext<'_>,
    z0: LiftedPoint,
    lambda0: f64,
    config: &SsnConfig,
    clock: &Stopwatch,
) -> Result<SsnOutcome> {
    drssn_from(ctx, z0, lambda0, config, clock, 0)
}

/// [`drssn`] with trace iterations numbered from `first_iteration`.
pub fn drssn_from(
    ctx: &DrsContext<'_>,
    z0: LiftedPoint,
    lambda0: f64,
    config: &SsnConfig,
    clock: &Stopwatch,
    first_iteration: u64,
) -> Result<SsnOutcome> {
    let mut run = SsnRun::start(ctx, z0, lambda0, config, clock, first_iteration)?;
    let status = run.advance(config.max_newton_iters, clock)?;
    Ok(run.finish(status))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::MatrixGame;
    use crate::splitting::{build_context, lift};
    use nalgebra::DMatrix;

    fn step() -> DVector<f64> {
        DVector::zeros(1)
    }

    #[test]
    fn adaptive_regimes() {
        let c = SsnConfig::default();
        // high quality: contraction 10x, beta0 = clamp(sqrt(0.01), .05, .9) = 0.1
        let l = adaptive_lambda_update(0.1, 0.01, &step(), 1.0, &c).unwrap();
        assert!((l - 0.1).abs() < 1e-15);
        // moderate: psi = 1
        assert_eq!(adaptive_lambda_update(1.0, 1.0, &step(), 3.0, &c).unwrap(), 6.0);
        // low: psi = 1e-3
        assert_eq!(adaptive_lambda_update(1e-3, 1.0, &step(), 3.0, &c).unwrap(), 15.0);
        // caps
        assert_eq!(adaptive_lambda_update(1e-3, 1.0, &step(), 1e15, &c).unwrap(), 1e15);
        assert_eq!(adaptive_lambda_update(1.0, 1e-30, &step(), 1e-15, &c).unwrap(), 1e-15);
        // beta0 ceiling
        let l = adaptive_lambda_update(100.0, 10.0, &step(), 1.0, &c).unwrap();
        assert!((l - 0.9).abs() < 1e-15);
    }

    #[test]
    fn adaptive_rejects_bad_inputs() {
        let c = SsnConfig::default();
        assert!(adaptive_lambda_update(f64::NAN, 1.0, &step(), 1.0, &c).is_err());
        assert!(adaptive_lambda_update(0.0, 1.0, &step(), 1.0, &c).is_err());
        assert!(adaptive_lambda_update(1.0, 1.0, &step(), f64::INFINITY, &c).is_err());
    }

    #[test]
    fn custom_quality_is_used() {
        fn always_bad(_: f64, _: f64, _: &DVector<f64>) -> f64 {
            0.0
        }
        let c = SsnConfig {
            quality: DirectionQuality::Custom(always_bad),
            ..SsnConfig::default()
        };
        assert_eq!(adaptive_lambda_update(1.0, 0.001, &step(), 2.0, &c).unwrap(), 10.0);
    }

    #[test]
    fn config_validation() {
        assert!(SsnConfig::default().validate().is_ok());
        let bad = SsnConfig {
            beta2: 1.5,
            ..SsnConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SsnConfig {
            ell: 1.0,
            ..SsnConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_game_converges_without_steps() {
        let g = MatrixGame::new(DMatrix::zeros(3, 4)).unwrap();
        let ctx = build_context(&g, 1.0).unwrap();
        let p = crate::game::StrategyProfile::uniform(3, 4).unwrap();
        let z = lift(&ctx, &p).unwrap();
        let mut state = SsnState::new(&ctx, z.clone(), 1.0).unwrap();
        assert!(newton_step(&ctx, &state).unwrap().is_none());
        assert!(matches!(
            line_search_accept(&ctx, &mut state, &SsnConfig::default()).unwrap(),
            LineSearchOutcome::Converged
        ));
        let out = drssn(&ctx, z, 1.0, &SsnConfig::default(), &Stopwatch::start()).unwrap();
        assert_eq!(out.status, SsnStatus::Converged);
        assert!(out.steps.is_empty());
        assert_eq!(out.linear_solves, 0);
        assert_eq!(out.trace.rows().len(), 1);
    }

    #[test]
    fn first_trial_success_moves_lambda_once() {
        let g = MatrixGame::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let ctx = build_context(&g, 1.0).unwrap();
        let p = crate::game::StrategyProfile::new(
            DVector::from_column_slice(&[0.6, 0.4]),
            DVector::from_column_slice(&[0.45, 0.55]),
        )
        .unwrap();
        let z = lift(&ctx, &p).unwrap();
        for (backtrack, expected) in [(Backtrack::LowerDamping, 1.5), (Backtrack::RaiseDamping, 1.0 / 1.5)] {
            let config = SsnConfig {
                backtrack,
                ..SsnConfig::default()
            };
            let mut state = SsnState::new(&ctx, z.clone(), 1.0).unwrap();
            let before = state.residual.norm();
            let out = line_search_accept(&ctx, &mut state, &config).unwrap();
            assert!(matches!(out, LineSearchOutcome::Accepted { lambda_used, .. } if lambda_used == 1.0));
            assert_eq!(state.linear_solves, 1);
            assert_eq!(state.lambda, expected);
            assert!(state.residual.norm() < before);
        }
    }

    #[test]
    fn stall_leaves_state_untouched() {
        let g = MatrixGame::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let ctx = build_context(&g, 1.0).unwrap();
        let p = crate::game::StrategyProfile::new(
            DVector::from_column_slice(&[0.9, 0.1]),
            DVector::from_column_slice(&[0.2, 0.8]),
        )
        .unwrap();
        let z = lift(&ctx, &p).unwrap();
        let mut state = SsnState::new(&ctx, z.clone(), 1e10).unwrap();
        let out = line_search_accept(&ctx, &mut state, &SsnConfig::default()).unwrap();
        assert!(matches!(out, LineSearchOutcome::Stalled));
        assert_eq!(state.flag, SsnFlag::Stalled);
        assert_eq!(state.z, z);
        assert_eq!(state.lambda, 1e10);
        assert_eq!(state.linear_solves, 0);
    }
}
