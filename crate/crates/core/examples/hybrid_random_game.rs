//! PRM+ warm start followed by semi-smooth Newton on a 100x100 uniform game,
//! for each hand-off strategy.
//!
//! `cargo run --example hybrid_random_game -- [seed] [switch-threshold]`

use saddle_ssn::{generate, solve_hybrid, HybridConfig, HybridVariant, InstanceSpec, Phase, Stopwatch};

fn main() -> saddle_ssn::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let threshold: f64 = args
        .next()
        .map_or(1e-4, |s| s.parse().expect("threshold must be a number"));
    let game = generate(&InstanceSpec::uniform(100, 100, seed))?;

    for variant in [HybridVariant::PssnV1, HybridVariant::PssnV2, HybridVariant::Hpssn] {
        let config = HybridConfig {
            switch_gap_threshold: threshold,
            ..HybridConfig::with_variant(variant)
        };
        let out = solve_hybrid(&game, &config, &Stopwatch::start())?;
        println!(
            "\n{variant:?}: {:?}, gap {:.2e}, {} PRM+ rounds, {} Newton steps, {} linear solves, {} damping warm-ups",
            out.status,
            out.gap,
            out.fo_iterations,
            out.ssn_steps.len(),
            out.linear_solves,
            out.warmup_lambdas.len()
        );
        for s in &out.switches {
            println!(
                "  switch at round {} (gap {:.2e}, |R| {:.2e})",
                s.fo_iterations, s.gap, s.residual_norm
            );
        }
        let newton: Vec<_> = out.trace.rows().iter().filter(|r| r.phase == Phase::Newton).collect();
        for row in newton.iter().rev().take(5).rev() {
            println!(
                "  {:>5}  |R| = {:.2e}  gap = {:.2e}  t = {:.4}s",
                row.iteration, row.residual_norm, row.duality_gap, row.elapsed_seconds
            );
        }
    }
    Ok(())
}
