//! (Predictive) Regret Matching+ with alternation.
//!
//! Both players are regret minimizers over losses: the row player sees
//! `ℓ_x = A y` and the column player sees `ℓ_y = −Aᵀ x`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::game::{duality_gap, MatrixGame, StrategyProfile};
use crate::trace::{RunRecord, Stopwatch, TraceRow};

/// Regret accumulator and current strategy of one player.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretState {
    z_cum: DVector<f64>,
    current: DVector<f64>,
    last_loss: DVector<f64>,
}

impl RegretState {
    /// Zero regrets and the uniform strategy.
    pub fn new(d: usize) -> Self {
        Self {
            z_cum: DVector::zeros(d),
            current: DVector::from_element(d, 1.0 / d as f64),
            last_loss: DVector::zeros(d),
        }
    }

    pub fn from_parts(z_cum: DVector<f64>, current: DVector<f64>, last_loss: DVector<f64>) -> Result<Self> {
        let d = z_cum.len();
        for (len, context) in [(current.len(), "current strategy"), (last_loss.len(), "last loss")] {
            if len != d {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: d,
                    found: len,
                });
            }
        }
        if z_cum.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "regret accumulator must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            z_cum,
            current,
            last_loss,
        })
    }

    pub fn regrets(&self) -> &DVector<f64> {
        &self.z_cum
    }

    pub fn current(&self) -> &DVector<f64> {
        &self.current
    }

    pub fn last_loss(&self) -> &DVector<f64> {
        &self.last_loss
    }

    /// `θ = [z + ⟨m, x_prev⟩𝟙 − m]⁺`, normalized; uniform when `θ = 0`.
    pub fn next_strategy(&self, prediction: &DVector<f64>) -> DVector<f64> {
        let offset = prediction.dot(&self.current);
        let theta = self.z_cum.zip_map(prediction, |z, m| (z + offset - m).max(0.0));
        let total = theta.sum();
        if total > 0.0 {
            theta / total
        } else {
            DVector::from_element(theta.len(), 1.0 / theta.len() as f64)
        }
    }

    /// Replaces the current strategy with [`next_strategy`](Self::next_strategy).
    pub fn play(&mut self, prediction: &DVector<f64>) {
        self.current = self.next_strategy(prediction);
    }

    /// `z ← [z + ⟨ℓ, x⟩𝟙 − ℓ]⁺` for the current strategy `x`; remembers `ℓ`.
    pub fn observe_loss(&mut self, loss: &DVector<f64>) {
        let expected = loss.dot(&self.current);
        self.z_cum.zip_apply(loss, |z, l| *z = (*z + expected - l).max(0.0));
        self.last_loss.copy_from(loss);
    }
}

/// `Σ t² x^t / Σ t²` and the same for `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageAccumulator {
    weighted_sum_x: DVector<f64>,
    weighted_sum_y: DVector<f64>,
    weight_total: f64,
}

impl AverageAccumulator {
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            weighted_sum_x: DVector::zeros(n),
            weighted_sum_y: DVector::zeros(m),
            weight_total: 0.0,
        }
    }

    pub fn add(&mut self, x: &DVector<f64>, y: &DVector<f64>, weight: f64) {
        self.weighted_sum_x.axpy(weight, x, 1.0);
        self.weighted_sum_y.axpy(weight, y, 1.0);
        self.weight_total += weight;
    }

    pub fn weight_total(&self) -> f64 {
        self.weight_total
    }

    /// `None` before the first sample.
    pub fn average(&self) -> Option<StrategyProfile> {
        if self.weight_total <= 0.0 {
            return None;
        }
        // Each block is normalized by its own sum so rounding in the weight
        // total cannot push the result off the simplex.
        let x = &self.weighted_sum_x / self.weighted_sum_x.sum();
        let y = &self.weighted_sum_y / self.weighted_sum_y.sum();
        StrategyProfile::new(x, y).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputScheme {
    /// Emit the current strategies.
    LastIterate,
    /// Emit the `t²`-weighted average.
    #[default]
    QuadraticAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    /// Row player moves against the column player's latest strategy, then the
    /// column player responds to the new row strategy.
    #[default]
    RowFirst,
    ColumnFirst,
    Simultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prediction {
    /// `m^t = ℓ^{t−1}`.
    #[default]
    LastLoss,
    /// `m^t = 0`, plain RM+.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PrmDynamics {
    pub order: UpdateOrder,
    pub prediction: Prediction,
}

/// PRM+ self-play on a matrix game.
#[derive(Debug, Clone)]
pub struct PrmPlus<'g> {
    game: &'g MatrixGame,
    row: RegretState,
    col: RegretState,
    average: AverageAccumulator,
    dynamics: PrmDynamics,
    rounds: u64,
    row_loss: DVector<f64>,
    col_loss: DVector<f64>,
}

impl<'g> PrmPlus<'g> {
    pub fn new(game: &'g MatrixGame, dynamics: PrmDynamics) -> Self {
        let (n, m) = (game.rows(), game.cols());
        Self {
            game,
            row: RegretState::new(n),
            col: RegretState::new(m),
            average: AverageAccumulator::new(n, m),
            dynamics,
            rounds: 0,
            row_loss: DVector::zeros(n),
            col_loss: DVector::zeros(m),
        }
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn row_state(&self) -> &RegretState {
        &self.row
    }

    pub fn col_state(&self) -> &RegretState {
        &self.col
    }

    fn prediction(&self, state: &RegretState) -> DVector<f64> {
        match self.dynamics.prediction {
            Prediction::LastLoss => state.last_loss.clone(),
            Prediction::Zero => DVector::zeros(state.last_loss.len()),
        }
    }

    fn update_row(&mut self) {
        let m = self.prediction(&self.row);
        self.row.play(&m);
    }

    fn observe_row(&mut self) {
        self.row_loss.gemv(1.0, self.game.payoff(), &self.col.current, 0.0);
        self.row.observe_loss(&self.row_loss);
    }

    fn update_col(&mut self) {
        let m = self.prediction(&self.col);
        self.col.play(&m);
    }

    fn observe_col(&mut self) {
        self.col_loss.gemv_tr(-1.0, self.game.payoff(), &self.row.current, 0.0);
        self.col.observe_loss(&self.col_loss);
    }

    /// One round. Each player first scores its current strategy against the
    /// opponent's latest one, then moves; the quadratic average absorbs the
    /// post-update strategies with weight `t²`.
    pub fn round(&mut self) {
        match self.dynamics.order {
            UpdateOrder::RowFirst => {
                self.observe_row();
                self.update_row();
                self.observe_col();
                self.update_col();
            }
            UpdateOrder::ColumnFirst => {
                self.observe_col();
                self.update_col();
                self.observe_row();
                self.update_row();
            }
            UpdateOrder::Simultaneous => {
                self.observe_row();
                self.observe_col();
                self.update_row();
                self.update_col();
            }
        }
        self.rounds += 1;
        let t = self.rounds as f64;
        self.average.add(&self.row.current, &self.col.current, t * t);
    }

    pub fn last_iterate(&self) -> StrategyProfile {
        StrategyProfile::new(self.row.current.clone(), self.col.current.clone())
            .expect("regret matching strategies are normalized")
    }

    pub fn quadratic_average(&self) -> StrategyProfile {
        self.average.average().unwrap_or_else(|| self.last_iterate())
    }

    pub fn emitted(&self, scheme: OutputScheme) -> StrategyProfile {
        match scheme {
            OutputScheme::LastIterate => self.last_iterate(),
            OutputScheme::QuadraticAverage => self.quadratic_average(),
        }
    }
}

/// Performs one round of `solver`, returning the profile emitted under `scheme`.
pub fn prm_plus_round(solver: &mut PrmPlus<'_>, scheme: OutputScheme) -> StrategyProfile {
    solver.round();
    solver.emitted(scheme)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrmConfig {
    pub scheme: OutputScheme,
    pub dynamics: PrmDynamics,
    pub max_iters: u64,
    pub checkpoint_every: u64,
    pub target_gap: f64,
}

impl Default for PrmConfig {
    fn default() -> Self {
        Self {
            scheme: OutputScheme::QuadraticAverage,
            dynamics: PrmDynamics::default(),
            max_iters: 500_000,
            checkpoint_every: 100,
            target_gap: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoStatus {
    Converged,
    BudgetExhausted,
}

/// Result of a first-order run.
#[derive(Debug, Clone)]
pub struct FoOutcome {
    pub profile: StrategyProfile,
    pub gap: f64,
    pub iterations: u64,
    pub status: FoStatus,
    pub trace: RunRecord,
}

/// Runs PRM+ from the uniform profile, checking the exact gap of the emitted
/// profile every `checkpoint_every` rounds.
pub fn prm_plus_run(game: &MatrixGame, config: &PrmConfig, clock: &Stopwatch) -> Result<FoOutcome> {
    if config.checkpoint_every == 0 {
        return Err(Error::InvalidConfig("checkpoint_every must be positive".into()));
    }
    let mut solver = PrmPlus::new(game, config.dynamics);
    let mut trace = RunRecord::new();
    loop {
        let t = solver.rounds();
        if t.is_multiple_of(config.checkpoint_every) || t == config.max_iters {
            let profile = solver.emitted(config.scheme);
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
        solver.round();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn zero_regret_and_prediction_give_uniform() {
        let s = RegretState::new(3);
        assert_eq!(s.next_strategy(&DVector::zeros(3)), DVector::from_element(3, 1.0 / 3.0));
    }

    #[test]
    fn hand_traced_next_strategy() {
        let s = RegretState::from_parts(v(&[1.0, 2.0]), v(&[0.5, 0.5]), DVector::zeros(2)).unwrap();
        assert_eq!(s.next_strategy(&DVector::zeros(2)), v(&[1.0 / 3.0, 2.0 / 3.0]));

        let s = RegretState::from_parts(v(&[1.0, 2.0]), v(&[1.0 / 3.0, 2.0 / 3.0]), DVector::zeros(2)).unwrap();
        assert_eq!(s.next_strategy(&v(&[0.0, 3.0])), v(&[0.75, 0.25]));
    }

    #[test]
    fn hand_traced_observe_loss() {
        let mut s = RegretState::from_parts(DVector::zeros(2), v(&[1.0, 0.0]), DVector::zeros(2)).unwrap();
        s.observe_loss(&v(&[1.0, -1.0]));
        assert_eq!(s.regrets(), &v(&[0.0, 2.0]));
        assert_eq!(s.last_loss(), &v(&[1.0, -1.0]));

        let mut s = RegretState::from_parts(v(&[0.5, 1.5]), v(&[0.2, 0.8]), DVector::zeros(2)).unwrap();
        s.observe_loss(&v(&[4.0, 4.0]));
        assert_eq!(s.regrets(), &v(&[0.5, 1.5]));
    }

    #[test]
    fn from_parts_validates() {
        assert!(RegretState::from_parts(v(&[-1.0]), v(&[1.0]), v(&[0.0])).is_err());
        assert!(RegretState::from_parts(v(&[1.0]), v(&[1.0, 0.0]), v(&[0.0])).is_err());
    }

    #[test]
    fn zero_game_stays_uniform() {
        let g = MatrixGame::new(DMatrix::zeros(3, 5)).unwrap();
        let mut prm = PrmPlus::new(&g, PrmDynamics::default());
        for _ in 0..10 {
            let p = prm_plus_round(&mut prm, OutputScheme::LastIterate);
            assert_eq!(p, StrategyProfile::uniform(3, 5).unwrap());
            assert_eq!(duality_gap(&g, &p).unwrap().gap, 0.0);
        }
    }

    #[test]
    fn quadratic_average_matches_direct_recomputation() {
        let g = MatrixGame::from_rows(&[vec![0.3, -1.0, 0.2], vec![-0.4, 0.9, 0.1]]).unwrap();
        let mut prm = PrmPlus::new(&g, PrmDynamics::default());
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..100 {
            prm.round();
            xs.push(prm.row_state().current().clone());
            ys.push(prm.col_state().current().clone());
        }
        let mut sx = DVector::zeros(2);
        let mut sy = DVector::zeros(3);
        let mut w = 0.0;
        for (t, (x, y)) in xs.iter().zip(&ys).enumerate() {
            let wt = ((t + 1) * (t + 1)) as f64;
            sx += x * wt;
            sy += y * wt;
            w += wt;
        }
        let avg = prm.quadratic_average();
        assert!((avg.x() - sx / w).amax() <= 1e-14);
        assert!((avg.y() - sy / w).amax() <= 1e-14);
    }

    #[test]
    fn matching_pennies_average_converges() {
        let g = MatrixGame::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let mut prm = PrmPlus::new(&g, PrmDynamics::default());
        for _ in 0..1000 {
            prm.round();
        }
        assert!(duality_gap(&g, &prm.quadratic_average()).unwrap().gap <= 1e-3);
    }

    #[test]
    fn run_stops_on_target() {
        let g = MatrixGame::new(DMatrix::zeros(2, 2)).unwrap();
        let out = prm_plus_run(&g, &PrmConfig::default(), &Stopwatch::start()).unwrap();
        assert_eq!(out.status, FoStatus::Converged);
        assert_eq!(out.iterations, 0);
        assert!(prm_plus_run(
            &g,
            &PrmConfig {
                checkpoint_every: 0,
                ..PrmConfig::default()
            },
            &Stopwatch::start()
        )
        .is_err());
    }
}
