//! Predictive Regret Matching+ on a random game: last iterate against the
//! quadratic average, and the regret update by hand.

use nalgebra::dvector;
use saddle_ssn::prm::{prm_plus_run, OutputScheme, PrmConfig, RegretState};
use saddle_ssn::{generate, InstanceSpec, Stopwatch};

fn main() -> saddle_ssn::Result<()> {
    let mut state = RegretState::from_parts(dvector![1.0, 2.0], dvector![1.0 / 3.0, 2.0 / 3.0], dvector![0.0, 0.0])?;
    println!(
        "next strategy with prediction (0, 3): {:?}",
        state.next_strategy(&dvector![0.0, 3.0]).as_slice()
    );
    state.observe_loss(&dvector![1.0, -1.0]);
    println!("regrets after loss (1, -1): {:?}", state.regrets().as_slice());

    let game = generate(&InstanceSpec::uniform(100, 100, 0))?;
    for scheme in [OutputScheme::LastIterate, OutputScheme::QuadraticAverage] {
        let config = PrmConfig {
            scheme,
            max_iters: 20_000,
            checkpoint_every: 100,
            target_gap: 1e-10,
            ..PrmConfig::default()
        };
        let out = prm_plus_run(&game, &config, &Stopwatch::start())?;
        println!(
            "\n{scheme:?}: {:?} after {} rounds, gap {:.3e}",
            out.status, out.iterations, out.gap
        );
        for tol in [1e-2, 1e-4, 1e-6, 1e-8] {
            match out.trace.first_row_below(tol) {
                Some(row) => println!("  gap <= {tol:.0e} at round {}", row.iteration),
                None => println!("  gap <= {tol:.0e} not reached"),
            }
        }
    }
    Ok(())
}
