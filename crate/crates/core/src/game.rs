//! Matrix-game data model, simplex geometry and duality-gap certificates.
//!
//! The row player picks `x ∈ Δⁿ` and minimizes `xᵀAy`; the column player picks
//! `y ∈ Δᵐ` and maximizes it. Everything downstream (the splitting operator,
//! the Newton machinery and the first-order solvers) is phrased in terms of the
//! types defined here.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Coordinates in `[-PROFILE_SLACK, 0)` are treated as floating-point drift and
/// clamped to zero when a profile is built.
pub const PROFILE_SLACK: f64 = 1e-12;

/// Maximum deviation of a strategy's coordinate sum from one.
pub const PROFILE_SUM_TOL: f64 = 1e-10;

const POWER_ITERATIONS: usize = 200;
const POWER_REL_TOL: f64 = 1e-12;
const POWER_SEED: u64 = 0x5eed_a11c;

/// A two-player zero-sum game given by its payoff matrix.
///
/// Immutable after construction; the spectral norm is estimated once.
#[derive(Debug, Clone)]
pub struct MatrixGame {
    payoff: DMatrix<f64>,
    spectral_norm: f64,
}

impl MatrixGame {
    pub fn new(payoff: DMatrix<f64>) -> Result<Self> {
        if payoff.nrows() == 0 || payoff.ncols() == 0 {
            return Err(Error::Empty("payoff matrix"));
        }
        if payoff.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("payoff matrix"));
        }
        let spectral_norm = estimate_spectral_norm(&payoff);
        Ok(Self { payoff, spectral_norm })
    }

    /// Builds a game from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("payoff matrix"));
        }
        let m = rows[0].len();
        for row in rows {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "payoff row length",
                    expected: m,
                    found: row.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }

    /// Number of row-player (minimizer) actions.
    pub fn rows(&self) -> usize {
        self.payoff.nrows()
    }

    /// Number of column-player (maximizer) actions.
    pub fn cols(&self) -> usize {
        self.payoff.ncols()
    }

    /// `n + m`, the length of joint and lifted vectors.
    pub fn dim(&self) -> usize {
        self.rows() + self.cols()
    }

    pub fn payoff(&self) -> &DMatrix<f64> {
        &self.payoff
    }

    /// Cached estimate of `‖A‖₂`.
    pub fn spectral_norm(&self) -> f64 {
        self.spectral_norm
    }

    /// `A y`: the expected loss of each pure row strategy.
    pub fn row_losses(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.payoff * y
    }

    /// `Aᵀ x`: the expected payoff of each pure column strategy.
    pub fn col_payoffs(&self, x: &DVector<f64>) -> DVector<f64> {
        self.payoff.tr_mul(x)
    }

    pub fn value(&self, profile: &StrategyProfile) -> f64 {
        profile.x().dot(&self.row_losses(profile.y()))
    }
}

/// Power iteration on `AᵀA` from a seeded start, floored by the largest
/// row/column norm (both are lower bounds on `‖A‖₂`).
pub fn estimate_spectral_norm(a: &DMatrix<f64>) -> f64 {
    let lower = a
        .row_iter()
        .map(|r| r.norm())
        .chain(a.column_iter().map(|c| c.norm()))
        .fold(0.0_f64, f64::max);
    if lower == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = DVector::from_fn(a.ncols(), |_, _| rng.gen::<f64>() + 0.5);
    v.normalize_mut();
    let mut sigma = 0.0_f64;
    for _ in 0..POWER_ITERATIONS {
        let av = a * &v;
        let next_sigma = av.norm();
        let mut w = a.tr_mul(&av);
        let w_norm = w.norm();
        if w_norm == 0.0 {
            break;
        }
        w /= w_norm;
        v = w;
        let converged = (next_sigma - sigma).abs() <= POWER_REL_TOL * next_sigma;
        sigma = next_sigma;
        if converged {
            break;
        }
    }
    sigma.max((a * &v).norm()).max(lower)
}

/// A feasible strategy pair `(x, y) ∈ Δⁿ × Δᵐ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    x: DVector<f64>,
    y: DVector<f64>,
}

impl StrategyProfile {
    /// Validates both strategies, clamps drift in `[-1e-12, 0)` to zero and
    /// renormalizes.
    pub fn new(x: DVector<f64>, y: DVector<f64>) -> Result<Self> {
        Ok(Self {
            x: sanitize_strategy(x, "row strategy")?,
            y: sanitize_strategy(y, "column strategy")?,
        })
    }

    pub fn uniform(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Empty("strategy"));
        }
        Ok(Self {
            x: DVector::from_element(n, 1.0 / n as f64),
            y: DVector::from_element(m, 1.0 / m as f64),
        })
    }

    /// Splits a joint vector `(x, y)` of length `n + m`.
    pub fn from_joint(joint: &DVector<f64>, n: usize) -> Result<Self> {
        if n == 0 || n >= joint.len() {
            return Err(Error::InfeasibleProfile(format!(
                "cannot split a joint vector of length {} at {n}",
                joint.len()
            )));
        }
        Self::new(
            joint.rows(0, n).into_owned(),
            joint.rows(n, joint.len() - n).into_owned(),
        )
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn joint(&self) -> DVector<f64> {
        let n = self.x.len();
        DVector::from_fn(n + self.y.len(), |i, _| if i < n { self.x[i] } else { self.y[i - n] })
    }

    pub(crate) fn check_dims(&self, game: &MatrixGame) -> Result<()> {
        if self.x.len() != game.rows() {
            return Err(Error::DimensionMismatch {
                context: "row strategy",
                expected: game.rows(),
                found: self.x.len(),
            });
        }
        if self.y.len() != game.cols() {
            return Err(Error::DimensionMismatch {
                context: "column strategy",
                expected: game.cols(),
                found: self.y.len(),
            });
        }
        Ok(())
    }
}

fn sanitize_strategy(mut v: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    if v.is_empty() {
        return Err(Error::InfeasibleProfile(format!("{what} is empty")));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::InfeasibleProfile(format!("{what} has non-finite entries")));
    }
    for c in v.iter_mut() {
        if *c < -PROFILE_SLACK {
            return Err(Error::InfeasibleProfile(format!(
                "{what} has coordinate {c:e} below the tolerated slack"
            )));
        }
        if *c < 0.0 {
            *c = 0.0;
        }
    }
    let sum = v.sum();
    if (sum - 1.0).abs() > PROFILE_SUM_TOL {
        return Err(Error::InfeasibleProfile(format!(
            "{what} sums to {sum:.17} instead of 1"
        )));
    }
    v /= sum;
    Ok(v)
}

/// An unconstrained point of `ℝⁿ⁺ᵐ`, the space the splitting operator acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint(DVector<f64>);

impl LiftedPoint {
    pub fn new(z: DVector<f64>) -> Result<Self> {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("lifted point"));
        }
        Ok(Self(z))
    }

    pub fn from_slice(z: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(z))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Exact duality gap together with the pure best responses that attain it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCertificate {
    pub gap: f64,
    /// Minimizer's best pure response to `y` (argmin of `Ay`).
    pub best_response_row: usize,
    /// Maximizer's best pure response to `x` (argmax of `Aᵀx`).
    pub best_response_col: usize,
}

/// `max_j (xᵀA)_j − min_i (Ay)_i`.
///
/// Both inner problems are linear over a simplex, so the optimum sits at a
/// vertex and this is the exact gap. Ties resolve to the lowest index.
pub fn duality_gap(game: &MatrixGame, profile: &StrategyProfile) -> Result<GapCertificate> {
    profile.check_dims(game)?;
    let ay = game.row_losses(profile.y());
    let atx = game.col_payoffs(profile.x());
    let (best_response_row, min_loss) = first_extreme(&ay, |a, b| a < b);
    let (best_response_col, max_payoff) = first_extreme(&atx, |a, b| a > b);
    let gap = max_payoff - min_loss;
    if !gap.is_finite() {
        return Err(Error::NonFinite("duality gap"));
    }
    Ok(GapCertificate {
        gap,
        best_response_row,
        best_response_col,
    })
}

fn first_extreme(v: &DVector<f64>, better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, v[0]);
    for (i, &c) in v.iter().enumerate().skip(1) {
        if better(c, best.1) {
            best = (i, c);
        }
    }
    best
}

/// Euclidean projection onto the probability simplex by sort-and-threshold.
///
/// Returns `x_i = max(p_i − α, 0)` where `α` is chosen so that `Σ x_i = 1`.
pub fn project_simplex(p: &[f64]) -> Result<DVector<f64>> {
    if p.is_empty() {
        return Err(Error::Empty("vector to project"));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("vector to project"));
    }
    let alpha = simplex_threshold(p);
    Ok(DVector::from_iterator(p.len(), p.iter().map(|&v| (v - alpha).max(0.0))))
}

/// The threshold `α` of the simplex projection of `p` (assumed non-empty and finite).
pub fn simplex_threshold(p: &[f64]) -> f64 {
    let mut sorted = p.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut alpha = sorted[0] - 1.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            alpha = candidate;
        } else {
            break;
        }
    }
    alpha
}

/// Projects the two blocks of `z` onto `Δⁿ` and `Δᵐ` independently.
pub fn project_product(game: &MatrixGame, z: &LiftedPoint) -> Result<StrategyProfile> {
    project_joint(game, z.as_vector())
}

pub(crate) fn project_joint(game: &MatrixGame, z: &DVector<f64>) -> Result<StrategyProfile> {
    check_len(z, game.dim(), "lifted point")?;
    let n = game.rows();
    let s = z.as_slice();
    Ok(StrategyProfile {
        x: project_simplex(&s[..n])?,
        y: project_simplex(&s[n..])?,
    })
}

/// The game operator `F(x, y) = (Ay, −Aᵀx)`.
#[allow(non_snake_case)]
pub fn apply_F(game: &MatrixGame, z: &DVector<f64>) -> Result<DVector<f64>> {
    check_len(z, game.dim(), "operator argument")?;
    let n = game.rows();
    let m = game.cols();
    let x = z.rows(0, n);
    let y = z.rows(n, m);
    let a = game.payoff();
    let mut out = DVector::zeros(n + m);
    out.rows_mut(0, n).gemv(1.0, a, &y, 0.0);
    out.rows_mut(n, m).gemv_tr(-1.0, a, &x, 0.0);
    Ok(out)
}

pub(crate) fn check_len(v: &DVector<f64>, expected: usize, context: &'static str) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pennies() -> MatrixGame {
        MatrixGame::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()
    }

    fn profile(x: &[f64], y: &[f64]) -> StrategyProfile {
        StrategyProfile::new(DVector::from_column_slice(x), DVector::from_column_slice(y)).unwrap()
    }

    /// Brute force over every pure deviation, written without vectorization.
    fn brute_force_gap(game: &MatrixGame, p: &StrategyProfile) -> f64 {
        let a = game.payoff();
        let mut best_col = f64::NEG_INFINITY;
        for j in 0..game.cols() {
            let mut s = 0.0;
            for i in 0..game.rows() {
                s += p.x()[i] * a[(i, j)];
            }
            best_col = best_col.max(s);
        }
        let mut best_row = f64::INFINITY;
        for i in 0..game.rows() {
            let mut s = 0.0;
            for j in 0..game.cols() {
                s += a[(i, j)] * p.y()[j];
            }
            best_row = best_row.min(s);
        }
        best_col - best_row
    }

    #[test]
    fn gap_of_zero_game_is_zero() {
        let g = MatrixGame::new(DMatrix::zeros(2, 2)).unwrap();
        let c = duality_gap(&g, &profile(&[0.3, 0.7], &[0.9, 0.1])).unwrap();
        assert_eq!(c.gap, 0.0);
        assert_eq!((c.best_response_row, c.best_response_col), (0, 0));
    }

    #[test]
    fn matching_pennies_gaps() {
        let g = pennies();
        let c = duality_gap(&g, &profile(&[0.5, 0.5], &[0.5, 0.5])).unwrap();
        assert_eq!(c.gap, 0.0);
        let p = profile(&[1.0, 0.0], &[1.0, 0.0]);
        let c = duality_gap(&g, &p).unwrap();
        assert_eq!(c.gap, brute_force_gap(&g, &p));
        assert_eq!(c.gap, 2.0);
        assert_eq!(c.best_response_row, 1);
        assert_eq!(c.best_response_col, 0);
    }

    #[test]
    fn gap_rejects_mismatched_profile() {
        let g = pennies();
        let p = profile(&[1.0 / 3.0; 3], &[0.5, 0.5]);
        assert!(matches!(duality_gap(&g, &p), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn game_rejects_bad_payoffs() {
        assert!(MatrixGame::new(DMatrix::zeros(0, 3)).is_err());
        assert!(matches!(
            MatrixGame::from_rows(&[vec![1.0, f64::NAN]]),
            Err(Error::NonFinite(_))
        ));
        assert!(MatrixGame::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn profile_clamps_slack_and_rejects_infeasible() {
        let p = profile(&[1.0 + 5e-13, -5e-13], &[1.0]);
        assert_eq!(p.x()[1], 0.0);
        assert_relative_eq!(p.x().sum(), 1.0, epsilon = 1e-15);
        assert!(StrategyProfile::new(
            DVector::from_column_slice(&[1.1, -0.1]),
            DVector::from_column_slice(&[1.0])
        )
        .is_err());
        assert!(StrategyProfile::new(
            DVector::from_column_slice(&[0.6, 0.6]),
            DVector::from_column_slice(&[1.0])
        )
        .is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.5, 0.5]).unwrap().as_slice(), &[0.5, 0.5]);
        assert_eq!(project_simplex(&[2.0, 0.0]).unwrap().as_slice(), &[1.0, 0.0]);
        let u = project_simplex(&[0.6, 0.6, 0.6]).unwrap();
        for v in u.iter() {
            assert_relative_eq!(*v, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert!(matches!(project_simplex(&[]), Err(Error::Empty(_))));
        assert!(project_simplex(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn product_projection_blockwise() {
        let g = pennies();
        let z = LiftedPoint::from_slice(&[2.0, 0.0, 0.0, 2.0]).unwrap();
        let p = project_product(&g, &z).unwrap();
        assert_eq!(p.x().as_slice(), &[1.0, 0.0]);
        assert_eq!(p.y().as_slice(), &[0.0, 1.0]);
        let uni = LiftedPoint::new(StrategyProfile::uniform(2, 2).unwrap().joint()).unwrap();
        assert_eq!(
            project_product(&g, &uni).unwrap(),
            StrategyProfile::uniform(2, 2).unwrap()
        );
        let short = LiftedPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        assert!(project_product(&g, &short).is_err());
    }

    #[test]
    fn operator_examples() {
        let g = MatrixGame::from_rows(&[vec![1.0]]).unwrap();
        let f = apply_F(&g, &DVector::from_column_slice(&[3.0, 5.0])).unwrap();
        assert_eq!(f.as_slice(), &[5.0, -3.0]);
        let zero = MatrixGame::new(DMatrix::zeros(2, 3)).unwrap();
        let f = apply_F(&zero, &DVector::from_element(5, 1.5)).unwrap();
        assert!(f.iter().all(|v| *v == 0.0));
        assert!(apply_F(&g, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn spectral_norm_matches_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, m) in [(1, 1), (3, 7), (12, 5), (20, 20)] {
            let a = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
            let sv = a.clone().svd(false, false).singular_values.max();
            let g = MatrixGame::new(a).unwrap();
            assert_relative_eq!(g.spectral_norm(), sv, max_relative = 1e-6);
        }
        let rank_one = DMatrix::from_fn(4, 6, |i, j| (i + 1) as f64 * (j as f64 - 2.0));
        let sv = rank_one.clone().svd(false, false).singular_values.max();
        assert_relative_eq!(estimate_spectral_norm(&rank_one), sv, max_relative = 1e-12);
    }
}
