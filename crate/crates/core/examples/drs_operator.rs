//! The splitting operator on a small game: fixed points, lifting, and the
//! monotonicity of the residual map.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saddle_ssn::splitting::{apply_T_DRS, lift, residual, restrict, DrsContext};
use saddle_ssn::{generate, solve_hybrid, HybridConfig, InstanceSpec, LiftedPoint, Stopwatch};

fn main() -> saddle_ssn::Result<()> {
    let game = generate(&InstanceSpec::uniform(6, 9, 7))?;
    let ctx = DrsContext::new(&game, 1.0)?;
    println!("6x9 game, |A|_2 = {:.4}", game.spectral_norm());

    let eq = solve_hybrid(&game, &HybridConfig::default(), &Stopwatch::start())?;
    let z_star = lift(&ctx, &eq.profile)?;
    let back = restrict(&ctx, &z_star)?;
    println!("equilibrium gap {:.2e}", eq.gap);
    println!("|R(lift(p*))|      = {:.2e}", residual(&ctx, &z_star)?.norm());
    println!(
        "|restrict(lift) - p*| = {:.2e}",
        (back.joint() - eq.profile.joint()).norm()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut point = || LiftedPoint::new(DVector::from_fn(ctx.dim(), |_, _| rng.gen_range(-2.0..2.0)));
    let mut worst_monotone = f64::INFINITY;
    let mut worst_lipschitz: f64 = 0.0;
    for _ in 0..1000 {
        let (a, b) = (point()?, point()?);
        let dz = a.as_vector() - b.as_vector();
        let dr = residual(&ctx, &a)?.vector() - residual(&ctx, &b)?.vector();
        worst_monotone = worst_monotone.min(dz.dot(&dr) / dz.norm_squared());
        worst_lipschitz = worst_lipschitz.max(dr.norm() / dz.norm());
    }
    println!("over 1000 pairs: min <dz, dR>/|dz|^2 = {worst_monotone:.3}, max |dR|/|dz| = {worst_lipschitz:.3}");

    let mut z = point()?;
    for k in 0..=2000 {
        if k % 500 == 0 {
            let gap = saddle_ssn::duality_gap(&game, &restrict(&ctx, &z)?)?.gap;
            println!(
                "plain iteration {k:4}: |R| = {:.3e}, gap = {gap:.3e}",
                residual(&ctx, &z)?.norm()
            );
        }
        z = apply_T_DRS(&ctx, &z)?;
    }
    Ok(())
}
