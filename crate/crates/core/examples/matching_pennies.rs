//! Exact gap certificates and a Newton solve on matching pennies.

use nalgebra::dvector;
use saddle_ssn::splitting::{lift, residual, restrict, DrsContext};
use saddle_ssn::{drssn, duality_gap, MatrixGame, SsnConfig, Stopwatch, StrategyProfile};

fn main() -> saddle_ssn::Result<()> {
    let game = MatrixGame::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]])?;

    for (x, y) in [
        ([0.5, 0.5], [0.5, 0.5]),
        ([1.0, 0.0], [0.5, 0.5]),
        ([0.8, 0.2], [0.3, 0.7]),
    ] {
        let p = StrategyProfile::new(dvector![x[0], x[1]], dvector![y[0], y[1]])?;
        let cert = duality_gap(&game, &p)?;
        println!(
            "x = {x:?}, y = {y:?}: gap {:.3} (row best response {}, column best response {})",
            cert.gap, cert.best_response_row, cert.best_response_col
        );
    }

    let ctx = DrsContext::new(&game, 1.0)?;
    let start = StrategyProfile::new(dvector![0.9, 0.1], dvector![0.2, 0.8])?;
    let z0 = lift(&ctx, &start)?;
    println!("\nresidual at the lifted start: {:.3e}", residual(&ctx, &z0)?.norm());

    let out = drssn(&ctx, z0, 1.0, &SsnConfig::default(), &Stopwatch::start())?;
    for (k, step) in out.steps.iter().enumerate() {
        println!(
            "step {}: |R| = {:.3e}, gap = {:.3e}, lambda = {:.2e}",
            k + 1,
            step.residual_norm,
            step.duality_gap,
            step.lambda_used
        );
    }
    let p = restrict(&ctx, &out.z)?;
    println!(
        "{:?} after {} solves: x = {:?}, y = {:?}",
        out.status,
        out.linear_solves,
        p.x().as_slice(),
        p.y().as_slice()
    );
    Ok(())
}
