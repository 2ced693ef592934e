//! Generalized Jacobian of the residual, checked against central differences,
//! and the conditioning of the regularized Newton system.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saddle_ssn::jacobian::{newton_solve, projection_jacobian, residual_jacobian};
use saddle_ssn::splitting::{residual, DrsContext};
use saddle_ssn::{generate, InstanceSpec, LiftedPoint};

fn main() -> saddle_ssn::Result<()> {
    let game = generate(&InstanceSpec::normal(8, 5, 3))?;
    let ctx = DrsContext::new(&game, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let z = LiftedPoint::new(DVector::from_fn(ctx.dim(), |_, _| rng.gen_range(-1.0..1.0)))?;

    let s = z.as_vector().as_slice();
    let g = projection_jacobian(&s[..game.rows()])?;
    println!("row block: {} of {} coordinates active", g.active_count(), g.dim());

    let jac = residual_jacobian(&ctx, &z)?;
    let h = 1e-6;
    let mut fd = DMatrix::zeros(ctx.dim(), ctx.dim());
    for j in 0..ctx.dim() {
        let mut plus = z.as_vector().clone();
        let mut minus = z.as_vector().clone();
        plus[j] += h;
        minus[j] -= h;
        let diff =
            residual(&ctx, &LiftedPoint::new(plus)?)?.vector() - residual(&ctx, &LiftedPoint::new(minus)?)?.vector();
        fd.set_column(j, &(diff / (2.0 * h)));
    }
    println!("max |J - FD| = {:.2e}", (jac.matrix() - fd).amax());

    let sym = (jac.matrix() + jac.matrix().transpose()) * 0.5;
    let min_eig = sym.symmetric_eigenvalues().min();
    println!("smallest eigenvalue of the symmetric part: {min_eig:.2e}");

    let r = residual(&ctx, &z)?;
    for mu in [1.0, 1e-2, 1e-4] {
        let mut system = jac.matrix().clone();
        for i in 0..ctx.dim() {
            system[(i, i)] += mu;
        }
        let sv = system.singular_values();
        let inv_norm = 1.0 / sv.min();
        let step = newton_solve(&jac, mu, &r)?;
        let after = residual(&ctx, &LiftedPoint::new(z.as_vector() + &step)?)?.norm();
        println!(
            "mu = {mu:.0e}: |(J + mu I)^-1| = {inv_norm:.3e} <= 1/mu = {:.0e}; |R| {:.3e} -> {after:.3e}",
            1.0 / mu,
            r.norm()
        );
    }
    Ok(())
}
