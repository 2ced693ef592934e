//! Projected extragradient and optimistic gradient descent-ascent baselines.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::game::{apply_F, duality_gap, project_joint, MatrixGame, StrategyProfile};
use crate::prm::{FoOutcome, FoStatus};
use crate::trace::{RunRecord, Stopwatch, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FomConfig {
    /// `None` selects `1 / (2‖A‖₂)`.
    pub step_size: Option<f64>,
    pub max_iters: u64,
    pub checkpoint_every: u64,
    pub target_gap: f64,
}

impl Default for FomConfig {
    fn default() -> Self {
        Self {
            step_size: None,
            max_iters: 100_000,
            checkpoint_every: 100,
            target_gap: 1e-12,
        }
    }
}

impl FomConfig {
    pub fn resolved_step(&self, game: &MatrixGame) -> Result<f64> {
        let eta = match self.step_size {
            Some(eta) => eta,
            None if game.spectral_norm() > 0.0 => 0.5 / game.spectral_norm(),
            None => 1.0,
        };
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidConfig(format!("step size must be positive, got {eta}")));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::InvalidConfig("checkpoint_every must be positive".into()));
        }
        Ok(eta)
    }
}

fn projected_step(game: &MatrixGame, base: &DVector<f64>, direction: &DVector<f64>, eta: f64) -> Result<DVector<f64>> {
    let mut w = base.clone();
    w.axpy(-eta, direction, 1.0);
    Ok(project_joint(game, &w)?.joint())
}

fn run_loop(
    game: &MatrixGame,
    config: &FomConfig,
    clock: &Stopwatch,
    mut step: impl FnMut(&DVector<f64>) -> Result<DVector<f64>>,
) -> Result<FoOutcome> {
    let n = game.rows();
    let mut z = StrategyProfile::uniform(n, game.cols())?.joint();
    let mut trace = RunRecord::new();
    let mut t = 0u64;
    loop {
        if t.is_multiple_of(config.checkpoint_every) || t == config.max_iters {
            let profile = StrategyProfile::from_joint(&z, n)?;
            let gap = duality_gap(game, &profile)?.gap;
            trace.push(TraceRow::first_order(t, gap, clock.elapsed()));
            let status = if gap <= config.target_gap {
                Some(FoStatus::Converged)
            } else if t >= config.max_iters {
                Some(FoStatus::BudgetExhausted)
            } else {
                None
            };
            if let Some(status) = status {
                return Ok(FoOutcome {
                    profile,
                    gap,
                    iterations: t,
                    status,
                    trace,
                });
            }
        }
        z = step(&z)?;
        t += 1;
    }
}

/// `z_{k+½} = Π(z_k − ηF(z_k))`, `z_{k+1} = Π(z_k − ηF(z_{k+½}))`.
pub fn extragradient_run(game: &MatrixGame, config: &FomConfig, clock: &Stopwatch) -> Result<FoOutcome> {
    let eta = config.resolved_step(game)?;
    run_loop(game, config, clock, |z| {
        let half = projected_step(game, z, &apply_F(game, z)?, eta)?;
        projected_step(game, z, &apply_F(game, &half)?, eta)
    })
}

/// `z_{k+1} = Π(z_k − 2ηF(z_k) + ηF(z_{k−1}))` with `z_{−1} = z_0`.
pub fn ogda_run(game: &MatrixGame, config: &FomConfig, clock: &Stopwatch) -> Result<FoOutcome> {
    let eta = config.resolved_step(game)?;
    let mut previous: Option<DVector<f64>> = None;
    run_loop(game, config, clock, |z| {
        let f = apply_F(game, z)?;
        let f_prev = previous.take().unwrap_or_else(|| f.clone());
        let direction = &f * 2.0 - &f_prev;
        previous = Some(f);
        projected_step(game, z, &direction, eta)
    })
}
