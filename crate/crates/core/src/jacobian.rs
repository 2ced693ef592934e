//! Generalized Jacobians of the simplex projection and of the residual `R`,
//! and the regularized Newton system.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::{check_len, project_simplex, LiftedPoint};
use crate::splitting::{DrsContext, ResidualValue};

/// A coordinate counts as active when its projected value exceeds this.
pub const ACTIVATION_TOLERANCE: f64 = 1e-12;

/// `G = diag(a) − aaᵀ/‖a‖₁` for the active-set indicator `a`.
///
/// `G` is the orthogonal projector onto `{v : supp(v) ⊆ active, Σ v = 0}`,
/// so it is stored as the mask alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionJacobian {
    active: Vec<bool>,
    active_count: usize,
}

impl ProjectionJacobian {
    pub fn from_mask(active: Vec<bool>) -> Result<Self> {
        let active_count = active.iter().filter(|a| **a).count();
        if active_count == 0 {
            return Err(Error::LinearAlgebra(
                "simplex projection has an empty active set".into(),
            ));
        }
        Ok(Self { active, active_count })
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    pub fn dim(&self) -> usize {
        self.active.len()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mean = self
            .active
            .iter()
            .zip(v.iter())
            .filter(|(a, _)| **a)
            .map(|(_, x)| *x)
            .sum::<f64>()
            / self.active_count as f64;
        DVector::from_iterator(
            v.len(),
            self.active
                .iter()
                .zip(v.iter())
                .map(|(a, x)| if *a { x - mean } else { 0.0 }),
        )
    }

    pub fn materialize(&self) -> DMatrix<f64> {
        let d = self.dim();
        let inv_k = 1.0 / self.active_count as f64;
        DMatrix::from_fn(d, d, |i, j| {
            if self.active[i] && self.active[j] {
                if i == j {
                    1.0 - inv_k
                } else {
                    -inv_k
                }
            } else {
                0.0
            }
        })
    }
}

/// An element of the generalized Jacobian of `Π_Δ` at `p`.
pub fn projection_jacobian(p: &[f64]) -> Result<ProjectionJacobian> {
    let x = project_simplex(p)?;
    ProjectionJacobian::from_mask(x.iter().map(|v| *v > ACTIVATION_TOLERANCE).collect())
}

/// Dense element `J = D − M⁻¹(2D − I)` of the generalized Jacobian of `R` at `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualJacobian {
    matrix: DMatrix<f64>,
}

impl ResidualJacobian {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                context: "residual jacobian columns",
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn residual_jacobian(ctx: &DrsContext<'_>, z: &LiftedPoint) -> Result<ResidualJacobian> {
    let zv = z.as_vector();
    check_len(zv, ctx.dim(), "lifted point")?;
    let n = ctx.game().rows();
    let s = zv.as_slice();
    let gx = projection_jacobian(&s[..n])?;
    let gy = projection_jacobian(&s[n..])?;
    let minv = ctx.resolvent_matrix();

    // J = Minv − 2·Minv·D + D, with Minv·D formed blockwise from the masks:
    // (Minv·G)[:, j] = a_j·Minv[:, j] − (a_j/k)·Σ_{i active} Minv[:, i].
    let mut j = minv.clone();
    for (offset, g) in [(0, &gx), (n, &gy)] {
        let k = g.active_count() as f64;
        let mut col_sum = DVector::<f64>::zeros(minv.nrows());
        for (i, _) in g.active_mask().iter().enumerate().filter(|(_, a)| **a) {
            col_sum += minv.column(offset + i);
        }
        col_sum *= 2.0 / k;
        for (i, _) in g.active_mask().iter().enumerate().filter(|(_, a)| **a) {
            let c = offset + i;
            let mut col = j.column_mut(c);
            col.axpy(-2.0, &minv.column(c), 1.0);
            col += &col_sum;
            // + D[:, c]
            for (r, _) in g.active_mask().iter().enumerate().filter(|(_, a)| **a) {
                col[offset + r] -= 1.0 / k;
            }
            col[c] += 1.0;
        }
    }
    ResidualJacobian::from_matrix(j)
}

/// Solves `(J + μI) Δz = −r` by LU with partial pivoting.
pub fn newton_solve(jac: &ResidualJacobian, mu: f64, r: &ResidualValue) -> Result<DVector<f64>> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "Newton regularization must be positive and finite, got {mu}"
        )));
    }
    check_len(r.vector(), jac.dim(), "newton right-hand side")?;
    if r.norm() == 0.0 {
        return Ok(DVector::zeros(jac.dim()));
    }
    let mut system = jac.matrix().clone();
    for i in 0..system.nrows() {
        system[(i, i)] += mu;
    }
    let lu = system.lu();
    let step = lu
        .solve(&(-r.vector()))
        .ok_or_else(|| Error::LinearAlgebra("regularized Newton system is singular".into()))?;
    if step.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearAlgebra("regularized Newton step is not finite".into()));
    }
    Ok(step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::MatrixGame;
    use crate::splitting::build_context;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_active_coordinates() {
        let g = projection_jacobian(&[0.3, 0.5]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert_eq!(g.materialize(), expected);

        // central differences of the projection at the same kink-free point
        let h = 1e-6;
        for j in 0..2 {
            let mut p = [0.3, 0.5];
            p[j] += h;
            let plus = project_simplex(&p).unwrap();
            p[j] -= 2.0 * h;
            let minus = project_simplex(&p).unwrap();
            let fd = (plus - minus) / (2.0 * h);
            for i in 0..2 {
                assert_relative_eq!(fd[i], expected[(i, j)], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn single_active_coordinate_is_zero() {
        let g = projection_jacobian(&[5.0, 0.0, -1.0]).unwrap();
        assert_eq!(g.active_mask(), &[true, false, false]);
        assert_eq!(g.materialize(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn annihilates_active_indicator_and_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=10 {
            let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..1.0)).collect();
            let g = projection_jacobian(&p).unwrap();
            let mat = g.materialize();
            let a = DVector::from_iterator(d, g.active_mask().iter().map(|b| f64::from(u8::from(*b))));
            assert!((&mat * &a).norm() <= 1e-14);
            assert_eq!(mat.transpose(), mat);
            assert!((&mat * &mat - &mat).norm() <= 1e-14);
            let v = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            assert!((g.apply(&v) - &mat * &v).norm() <= 1e-14);
            for ev in mat.symmetric_eigenvalues().iter() {
                assert!(ev.abs() < 1e-12 || (ev - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_game_interior_jacobian_is_identity_minus_d() {
        let g = MatrixGame::new(DMatrix::zeros(3, 2)).unwrap();
        let ctx = build_context(&g, 1.0).unwrap();
        let z = LiftedPoint::from_slice(&[0.3, 0.4, 0.2, 0.6, 0.5]).unwrap();
        let j = residual_jacobian(&ctx, &z).unwrap();
        let mut d = DMatrix::zeros(5, 5);
        d.view_mut((0, 0), (3, 3))
            .copy_from(&projection_jacobian(&[0.3, 0.4, 0.2]).unwrap().materialize());
        d.view_mut((3, 3), (2, 2))
            .copy_from(&projection_jacobian(&[0.6, 0.5]).unwrap().materialize());
        let expected = DMatrix::identity(5, 5) - d;
        assert!((j.matrix() - expected).norm() <= 1e-14);
    }

    #[test]
    fn jacobian_matches_formula_with_dense_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = MatrixGame::new(DMatrix::from_fn(4, 6, |_, _| rng.gen_range(-1.0..1.0))).unwrap();
        let ctx = build_context(&g, 0.5).unwrap();
        let zv: Vec<f64> = (0..10).map(|_| rng.gen_range(-0.3..0.6)).collect();
        let z = LiftedPoint::from_slice(&zv).unwrap();
        let mut d = DMatrix::zeros(10, 10);
        d.view_mut((0, 0), (4, 4))
            .copy_from(&projection_jacobian(&zv[..4]).unwrap().materialize());
        d.view_mut((4, 4), (6, 6))
            .copy_from(&projection_jacobian(&zv[4..]).unwrap().materialize());
        let minv = ctx.resolvent_matrix();
        let expected = &d - minv * (&d * 2.0 - DMatrix::identity(10, 10));
        let j = residual_jacobian(&ctx, &z).unwrap();
        assert!((j.matrix() - expected).norm() <= 1e-12);
    }

    #[test]
    fn newton_solve_trivial_systems() {
        let jac = ResidualJacobian::from_matrix(DMatrix::zeros(2, 2)).unwrap();
        let zero = ResidualValue::new(DVector::zeros(2));
        assert_eq!(newton_solve(&jac, 2.0, &zero).unwrap(), DVector::zeros(2));
        let r = ResidualValue::new(DVector::from_column_slice(&[1.0, 1.0]));
        assert_eq!(newton_solve(&jac, 2.0, &r).unwrap().as_slice(), &[-0.5, -0.5]);
        assert!(newton_solve(&jac, 0.0, &r).is_err());
        assert!(newton_solve(&jac, f64::NAN, &r).is_err());
    }

    #[test]
    fn newton_solve_rejects_nan_contamination() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        let jac = ResidualJacobian::from_matrix(m).unwrap();
        let r = ResidualValue::new(DVector::from_column_slice(&[1.0, 1.0]));
        assert!(newton_solve(&jac, 1.0, &r).is_err());
    }
}
