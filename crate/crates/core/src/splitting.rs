//! Douglas–Rachford splitting of `F + N_S` for the matrix game.
//!
//! With `M = [[I, γA], [−γAᵀ, I]]` the resolvent of `F` is `M⁻¹`, the resolvent
//! of the normal cone is the product-simplex projection `Π`, and
//!
//! ```text
//! T(z) = z − Π(z) + M⁻¹(2Π(z) − z),     R(z) = z − T(z).
//! ```
//!
//! Zeros of `R` project onto Nash equilibria, and an equilibrium `ẑ` lifts to
//! the zero `ẑ − γF(ẑ)`.

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::game::{apply_F, check_len, project_joint, LiftedPoint, MatrixGame, StrategyProfile};

pub const DEFAULT_GAMMA: f64 = 1.0;

/// Which side of `A` the Schur complement is formed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SchurSide {
    /// `I + γ²AAᵀ` (n × n), used when `n ≤ m`.
    Rows,
    /// `I + γ²AᵀA` (m × m), used when `n > m`.
    Cols,
}

/// Step size plus the factorization realizing `M⁻¹`.
///
/// Building the context factors the smaller Schur complement once; each
/// resolvent application is then two triangular solves and two products
/// with `A`.
pub struct DrsContext<'g> {
    game: &'g MatrixGame,
    gamma: f64,
    side: SchurSide,
    schur: Cholesky<f64, Dyn>,
    dense_inverse: OnceLock<DMatrix<f64>>,
}

impl std::fmt::Debug for DrsContext<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DrsContext")
            .field("n", &self.game.rows())
            .field("m", &self.game.cols())
            .field("gamma", &self.gamma)
            .field("side", &self.side)
            .finish()
    }
}

/// `R(z)` together with its cached Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualValue {
    r: DVector<f64>,
    norm: f64,
}

impl ResidualValue {
    pub fn new(r: DVector<f64>) -> Self {
        let norm = r.norm();
        Self { r, norm }
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.r
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }
}

/// Factors the resolvent of `γF` for `game`.
pub fn build_context(game: &MatrixGame, gamma: f64) -> Result<DrsContext<'_>> {
    DrsContext::new(game, gamma)
}

impl<'g> DrsContext<'g> {
    pub fn new(game: &'g MatrixGame, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "step size gamma must be positive and finite, got {gamma}"
            )));
        }
        let a = game.payoff();
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("payoff matrix"));
        }
        let g2 = gamma * gamma;
        let (side, mut gram) = if game.rows() <= game.cols() {
            (SchurSide::Rows, a * a.transpose())
        } else {
            (SchurSide::Cols, a.tr_mul(a))
        };
        gram *= g2;
        for i in 0..gram.nrows() {
            gram[(i, i)] += 1.0;
        }
        let schur = Cholesky::new(gram)
            .ok_or_else(|| Error::LinearAlgebra("Schur complement of the resolvent is not positive definite".into()))?;
        Ok(Self {
            game,
            gamma,
            side,
            schur,
            dense_inverse: OnceLock::new(),
        })
    }

    pub fn game(&self) -> &'g MatrixGame {
        self.game
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.game.dim()
    }

    /// Solves `[[I, γA], [−γAᵀ, I]] (u, v) = (p, q)`.
    pub fn resolve(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(w, self.dim(), "resolvent argument")?;
        let n = self.game.rows();
        let m = self.game.cols();
        let a = self.game.payoff();
        let g = self.gamma;
        let p = w.rows(0, n);
        let q = w.rows(n, m);
        let mut out = DVector::zeros(n + m);
        match self.side {
            SchurSide::Rows => {
                // (I + γ²AAᵀ)u = p − γAq,  v = q + γAᵀu
                let mut rhs = p.into_owned();
                rhs.gemv(-g, a, &q, 1.0);
                self.schur.solve_mut(&mut rhs);
                let mut v = q.into_owned();
                v.gemv_tr(g, a, &rhs, 1.0);
                out.rows_mut(0, n).copy_from(&rhs);
                out.rows_mut(n, m).copy_from(&v);
            }
            SchurSide::Cols => {
                // (I + γ²AᵀA)v = q + γAᵀp,  u = p − γAv
                let mut rhs = q.into_owned();
                rhs.gemv_tr(g, a, &p, 1.0);
                self.schur.solve_mut(&mut rhs);
                let mut u = p.into_owned();
                u.gemv(-g, a, &rhs, 1.0);
                out.rows_mut(0, n).copy_from(&u);
                out.rows_mut(n, m).copy_from(&rhs);
            }
        }
        Ok(out)
    }

    /// Dense `M⁻¹`, assembled from the Schur factorization on first use.
    pub fn resolvent_matrix(&self) -> &DMatrix<f64> {
        self.dense_inverse.get_or_init(|| self.assemble_inverse())
    }

    fn assemble_inverse(&self) -> DMatrix<f64> {
        let n = self.game.rows();
        let m = self.game.cols();
        let a = self.game.payoff();
        let g = self.gamma;
        let mut inv = DMatrix::zeros(n + m, n + m);
        match self.side {
            SchurSide::Rows => {
                // [[S⁻¹, −γS⁻¹A], [γAᵀS⁻¹, I − γ²AᵀS⁻¹A]]
                let s_inv = self.schur.inverse();
                let s_inv_a = self.schur.solve(a);
                let at_s_inv_a = a.tr_mul(&s_inv_a);
                inv.view_mut((0, 0), (n, n)).copy_from(&s_inv);
                inv.view_mut((0, n), (n, m)).copy_from(&(&s_inv_a * -g));
                inv.view_mut((n, 0), (m, n)).copy_from(&(s_inv_a.transpose() * g));
                let mut br = at_s_inv_a * (-g * g);
                for i in 0..m {
                    br[(i, i)] += 1.0;
                }
                inv.view_mut((n, n), (m, m)).copy_from(&br);
            }
            SchurSide::Cols => {
                // [[I − γ²AT⁻¹Aᵀ, −γAT⁻¹], [γT⁻¹Aᵀ, T⁻¹]]
                let t_inv = self.schur.inverse();
                let t_inv_at = self.schur.solve(&a.transpose());
                let a_t_inv_at = a * &t_inv_at;
                let mut tl = a_t_inv_at * (-g * g);
                for i in 0..n {
                    tl[(i, i)] += 1.0;
                }
                inv.view_mut((0, 0), (n, n)).copy_from(&tl);
                inv.view_mut((0, n), (n, m)).copy_from(&(t_inv_at.transpose() * -g));
                inv.view_mut((n, 0), (m, n)).copy_from(&(t_inv_at * g));
                inv.view_mut((n, n), (m, m)).copy_from(&t_inv);
            }
        }
        inv
    }

    /// `(I + γF) w`, the inverse of [`resolve`](Self::resolve).
    pub fn forward(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let mut out = apply_F(self.game, w)?;
        out *= self.gamma;
        out += w;
        Ok(out)
    }

    pub(crate) fn apply_t_vec(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(z, self.dim(), "lifted point")?;
        let proj = project_joint(self.game, z)?.joint();
        let reflected = &proj * 2.0 - z;
        let mut out = self.resolve(&reflected)?;
        out += z;
        out -= &proj;
        Ok(out)
    }

    pub(crate) fn residual_vec(&self, z: &DVector<f64>) -> Result<ResidualValue> {
        let t = self.apply_t_vec(z)?;
        Ok(ResidualValue::new(z - t))
    }
}

/// One Douglas–Rachford step `z − Π(z) + M⁻¹(2Π(z) − z)`.
#[allow(non_snake_case)]
pub fn apply_T_DRS(ctx: &DrsContext<'_>, z: &LiftedPoint) -> Result<LiftedPoint> {
    LiftedPoint::new(ctx.apply_t_vec(z.as_vector())?)
}

/// `R(z) = z − T(z)`.
pub fn residual(ctx: &DrsContext<'_>, z: &LiftedPoint) -> Result<ResidualValue> {
    ctx.residual_vec(z.as_vector())
}

/// `ẑ ↦ ẑ − γF(ẑ)`; maps equilibria to fixed points of `T`.
pub fn lift(ctx: &DrsContext<'_>, profile: &StrategyProfile) -> Result<LiftedPoint> {
    profile.check_dims(ctx.game())?;
    lift_with_gamma(ctx.game(), profile, ctx.gamma())
}

/// [`lift`] without a factorized context; `γ = 0` is allowed and is the identity.
pub fn lift_with_gamma(game: &MatrixGame, profile: &StrategyProfile, gamma: f64) -> Result<LiftedPoint> {
    profile.check_dims(game)?;
    let joint = profile.joint();
    let f = apply_F(game, &joint)?;
    LiftedPoint::new(joint - f * gamma)
}

/// `Π(z)`; the inverse direction of [`lift`].
pub fn restrict(ctx: &DrsContext<'_>, z: &LiftedPoint) -> Result<StrategyProfile> {
    crate::game::project_product(ctx.game(), z)
}
