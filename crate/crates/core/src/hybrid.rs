//! PRM+ warm starts handed to DRSSN.
//!
//! * PSSN v1: PRM+ (quadratic averaging, alternation) until the gap drops
//!   under a threshold, then a one-time switch to DRSSN with `λ₀ = 1`.
//! * PSSN v2: as v1, but every `theta_update_period` rounds a trial Newton
//!   direction at the lifted average tunes `λ`; the trial point is discarded.
//! * HPSSN: probes DRSSN for a few steps each time the PRM+ gap halves and
//!   stays only if the residual collapses fast enough.

use crate::error::{Error, Result};
use crate::game::LiftedPoint;
use crate::game::{duality_gap, MatrixGame, StrategyProfile};
use crate::instances::InstanceKind;
use crate::jacobian::{newton_solve, residual_jacobian};
use crate::prm::{PrmDynamics, PrmPlus};
use crate::splitting::{lift, residual, DrsContext, DEFAULT_GAMMA};
use crate::ssn::{adaptive_lambda_update, SsnConfig, SsnRun, SsnStatus, SsnStep, FIXED_POINT_TOL};
use crate::trace::{RunRecord, Stopwatch, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybridVariant {
    PssnV1,
    PssnV2,
    Hpssn,
}

#[derive(Debug, Clone, Copy)]
pub struct HybridConfig {
    pub variant: HybridVariant,
    pub switch_gap_threshold: f64,
    pub theta_update_period: u64,
    pub gamma: f64,
    pub target_gap: f64,
    pub max_fo_iters: u64,
    pub checkpoint_every: u64,
    pub initial_lambda: f64,
    pub hpssn_probe_steps: usize,
    pub hpssn_accept_factor: f64,
    pub dynamics: PrmDynamics,
    /// `target_gap` here is overridden by the hybrid target.
    pub ssn: SsnConfig,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            variant: HybridVariant::PssnV2,
            switch_gap_threshold: 1e-5,
            theta_update_period: 500,
            gamma: DEFAULT_GAMMA,
            target_gap: 1e-12,
            max_fo_iters: 500_000,
            checkpoint_every: 100,
            initial_lambda: 1.0,
            hpssn_probe_steps: 5,
            hpssn_accept_factor: 10.0,
            dynamics: PrmDynamics::default(),
            ssn: SsnConfig::default(),
        }
    }
}

impl HybridConfig {
    pub fn with_variant(variant: HybridVariant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.target_gap > 0.0) || !(self.switch_gap_threshold > 0.0) {
            return bad("gap thresholds must be positive");
        }
        if self.target_gap >= self.switch_gap_threshold {
            return bad("target gap must be below the switching threshold");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if self.theta_update_period == 0 || self.checkpoint_every == 0 || self.max_fo_iters == 0 {
            return bad("periods and budgets must be positive");
        }
        if !(self.initial_lambda > 0.0) {
            return bad("initial damping must be positive");
        }
        if self.hpssn_probe_steps == 0 || !(self.hpssn_accept_factor > 1.0) {
            return bad("HPSSN probe steps must be positive and the acceptance factor above 1");
        }
        self.ssn_config().validate()
    }

    fn ssn_config(&self) -> SsnConfig {
        SsnConfig {
            target_gap: self.target_gap,
            ..self.ssn
        }
    }
}

/// Switching thresholds that worked best per instance family and size.
pub fn default_switch_threshold(kind: InstanceKind, n: usize, m: usize, variant: HybridVariant) -> f64 {
    let large = n.max(m) > 200;
    match (kind, large) {
        (InstanceKind::Uniform, false) => 1e-1,
        (InstanceKind::Normal, false) | (InstanceKind::File, false) => 1e-2,
        (InstanceKind::Uniform, true) if m >= 2 * n && variant == HybridVariant::PssnV1 => 1e-6,
        (_, true) => 1e-5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybridStatus {
    Converged,
    FoBudgetExhausted,
    SsnStalled,
}

/// State at a first-order to Newton transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchInfo {
    pub fo_iterations: u64,
    pub gap: f64,
    pub residual_norm: f64,
    pub lambda: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct HybridOutcome {
    pub profile: StrategyProfile,
    /// Recomputed from `profile`, never read from the trace.
    pub gap: f64,
    pub status: HybridStatus,
    pub trace: RunRecord,
    pub fo_iterations: u64,
    pub switches: Vec<SwitchInfo>,
    /// Accepted Newton steps across all Newton phases.
    pub ssn_steps: Vec<SsnStep>,
    pub linear_solves: usize,
    /// Damping after each warm-up update (PSSN v2).
    pub warmup_lambdas: Vec<f64>,
    /// Time spent factoring the resolvent.
    pub setup_seconds: f64,
}

impl HybridOutcome {
    fn finish(game: &MatrixGame, profile: StrategyProfile, status: HybridStatus, parts: Parts) -> Result<Self> {
        let gap = duality_gap(game, &profile)?.gap;
        let status = match status {
            HybridStatus::Converged if gap > parts.target_gap => HybridStatus::SsnStalled,
            s => s,
        };
        Ok(Self {
            profile,
            gap,
            status,
            trace: parts.trace,
            fo_iterations: parts.fo_iterations,
            switches: parts.switches,
            ssn_steps: parts.ssn_steps,
            linear_solves: parts.linear_solves,
            warmup_lambdas: parts.warmup_lambdas,
            setup_seconds: parts.setup_seconds,
        })
    }
}

struct Parts {
    target_gap: f64,
    trace: RunRecord,
    fo_iterations: u64,
    switches: Vec<SwitchInfo>,
    ssn_steps: Vec<SsnStep>,
    linear_solves: usize,
    warmup_lambdas: Vec<f64>,
    setup_seconds: f64,
}

impl Parts {
    fn new(target_gap: f64, setup_seconds: f64) -> Self {
        Self {
            target_gap,
            trace: RunRecord::new(),
            fo_iterations: 0,
            switches: Vec::new(),
            ssn_steps: Vec::new(),
            linear_solves: 0,
            warmup_lambdas: Vec::new(),
            setup_seconds,
        }
    }
}

/// Dispatches on `config.variant`.
pub fn solve_hybrid(game: &MatrixGame, config: &HybridConfig, clock: &Stopwatch) -> Result<HybridOutcome> {
    match config.variant {
        HybridVariant::PssnV1 => pssn_v1(game, config, clock),
        HybridVariant::PssnV2 => pssn_v2(game, config, clock),
        HybridVariant::Hpssn => hpssn(game, config, clock),
    }
}

pub fn pssn_v1(game: &MatrixGame, config: &HybridConfig, clock: &Stopwatch) -> Result<HybridOutcome> {
    pssn(game, config, clock, false)
}

pub fn pssn_v2(game: &MatrixGame, config: &HybridConfig, clock: &Stopwatch) -> Result<HybridOutcome> {
    pssn(game, config, clock, true)
}

/// One discarded Newton trial at the lifted profile, used only to tune `λ`.
pub fn warmup_lambda_update(
    ctx: &DrsContext<'_>,
    profile: &StrategyProfile,
    lambda: f64,
    config: &SsnConfig,
) -> Result<f64> {
    let z = lift(ctx, profile)?;
    let r = residual(ctx, &z)?;
    if r.norm() <= FIXED_POINT_TOL {
        return Ok(lambda);
    }
    let jac = residual_jacobian(ctx, &z)?;
    let step = newton_solve(&jac, lambda * r.norm(), &r)?;
    let trial = LiftedPoint::new(z.as_vector() + &step)?;
    let r_trial = residual(ctx, &trial)?;
    adaptive_lambda_update(r.norm(), r_trial.norm(), &step, lambda, config)
}

fn pssn(game: &MatrixGame, config: &HybridConfig, clock: &Stopwatch, warm: bool) -> Result<HybridOutcome> {
    config.validate()?;
    let ssn_config = config.ssn_config();
    let ctx = DrsContext::new(game, config.gamma)?;
    let mut parts = Parts::new(config.target_gap, clock.elapsed());
    let mut prm = PrmPlus::new(game, config.dynamics);
    let mut lambda = config.initial_lambda;

    let switch_profile = loop {
        let t = prm.rounds();
        if t.is_multiple_of(config.checkpoint_every) || t == config.max_fo_iters {
            let profile = prm.quadratic_average();
            let gap = duality_gap(game, &profile)?.gap;
            parts.trace.push(TraceRow::first_order(t, gap, clock.elapsed()));
            parts.fo_iterations = t;
            if gap <= config.target_gap {
                return HybridOutcome::finish(game, profile, HybridStatus::Converged, parts);
            }
            if gap <= config.switch_gap_threshold {
                break profile;
            }
            if t >= config.max_fo_iters {
                return HybridOutcome::finish(game, profile, HybridStatus::FoBudgetExhausted, parts);
            }
        }
        prm.round();
        if warm && prm.rounds().is_multiple_of(config.theta_update_period) {
            lambda = warmup_lambda_update(&ctx, &prm.quadratic_average(), lambda, &ssn_config)?;
            parts.warmup_lambdas.push(lambda);
            parts.linear_solves += 1;
        }
    };

    let switch_gap = duality_gap(game, &switch_profile)?.gap;
    let z = lift(&ctx, &switch_profile)?;
    let mut run = SsnRun::start(&ctx, z, lambda, &ssn_config, clock, parts.fo_iterations + 1)?;
    parts.switches.push(SwitchInfo {
        fo_iterations: parts.fo_iterations,
        gap: switch_gap,
        residual_norm: run.state().residual.norm(),
        lambda,
        elapsed_seconds: clock.elapsed(),
    });
    let status = run.advance(ssn_config.max_newton_iters, clock)?;
    let out = run.finish(status);
    parts.trace.extend(out.trace);
    parts.ssn_steps.extend(out.steps);
    parts.linear_solves += out.linear_solves;

    let (profile, status) = if out.gap <= switch_gap {
        let s = match out.status {
            SsnStatus::Converged => HybridStatus::Converged,
            _ => HybridStatus::SsnStalled,
        };
        (out.profile, s)
    } else {
        (switch_profile, HybridStatus::SsnStalled)
    };
    HybridOutcome::finish(game, profile, status, parts)
}

pub fn hpssn(game: &MatrixGame, config: &HybridConfig, clock: &Stopwatch) -> Result<HybridOutcome> {
    config.validate()?;
    let ssn_config = config.ssn_config();
    let ctx = DrsContext::new(game, config.gamma)?;
    let mut parts = Parts::new(config.target_gap, clock.elapsed());
    let mut prm = PrmPlus::new(game, config.dynamics);
    let mut lambda = config.initial_lambda;
    // Trace rows are numbered by FO rounds plus Newton rows recorded so far.
    let mut row_offset = 0u64;
    let mut last_probe_gap: Option<f64> = None;
    let mut previous_gap = f64::INFINITY;
    let mut failed_probe = false;
    let mut best: Option<(f64, StrategyProfile)> = None;

    loop {
        let t = prm.rounds();
        if t.is_multiple_of(config.checkpoint_every) || t == config.max_fo_iters {
            let profile = prm.quadratic_average();
            let gap = duality_gap(game, &profile)?.gap;
            parts
                .trace
                .push(TraceRow::first_order(t + row_offset, gap, clock.elapsed()));
            parts.fo_iterations = t;
            if best.as_ref().is_none_or(|(g, _)| gap <= *g) {
                best = Some((gap, profile.clone()));
            }
            if gap <= config.target_gap {
                return HybridOutcome::finish(game, profile, HybridStatus::Converged, parts);
            }
            if t >= config.max_fo_iters {
                let (_, p) = best.expect("a checkpoint was recorded");
                return HybridOutcome::finish(game, p, HybridStatus::FoBudgetExhausted, parts);
            }
            // PRM+ has stopped moving and Newton already failed from here.
            if failed_probe && (gap - previous_gap).abs() <= 1e-12 * gap {
                let (_, p) = best.expect("a checkpoint was recorded");
                return HybridOutcome::finish(game, p, HybridStatus::SsnStalled, parts);
            }
            previous_gap = gap;

            let due = gap <= config.switch_gap_threshold && last_probe_gap.is_none_or(|g| gap <= 0.5 * g);
            if due {
                last_probe_gap = Some(gap);
                let z = lift(&ctx, &profile)?;
                let mut run = SsnRun::start(&ctx, z, lambda, &ssn_config, clock, t + row_offset + 1)?;
                let r0 = run.state().residual.norm();
                parts.switches.push(SwitchInfo {
                    fo_iterations: t,
                    gap,
                    residual_norm: r0,
                    lambda,
                    elapsed_seconds: clock.elapsed(),
                });
                let mut status = run.advance(config.hpssn_probe_steps, clock)?;
                if status == SsnStatus::IterationLimit && run.state().residual.norm() * config.hpssn_accept_factor <= r0
                {
                    let remaining = ssn_config.max_newton_iters.saturating_sub(run.steps().len()).max(1);
                    status = run.advance(remaining, clock)?;
                }
                let out = run.finish(status);
                row_offset += out.trace.rows().len() as u64;
                parts.trace.extend(out.trace);
                parts.ssn_steps.extend(out.steps);
                parts.linear_solves += out.linear_solves;
                lambda = out.lambda.clamp(ssn_config.lambda_min, ssn_config.lambda_max);
                if out.gap <= config.target_gap {
                    return HybridOutcome::finish(game, out.profile, HybridStatus::Converged, parts);
                }
                if best.as_ref().is_none_or(|(g, _)| out.gap < *g) {
                    best = Some((out.gap, out.profile));
                }
                // Back to PRM+; its own iterate is untouched by the probe.
                failed_probe = true;
            }
        }
        prm.round();
    }
}
