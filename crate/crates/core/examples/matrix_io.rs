//! Loading a payoff matrix from Matrix Market or CSV and solving it.
//!
//! `cargo run --example matrix_io -- path/to/game.mtx`; defaults to the
//! bundled Kuhn poker sequence-form matrix.

use std::path::PathBuf;

use saddle_ssn::{load_matrix, save_matrix, solve_hybrid, HybridConfig, HybridVariant, Stopwatch};

fn main() -> saddle_ssn::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/kuhn.mtx"));
    let game = load_matrix(&path)?;
    let nonzeros = game.payoff().iter().filter(|v| **v != 0.0).count();
    println!(
        "{}: {}x{}, {nonzeros} nonzeros",
        path.display(),
        game.rows(),
        game.cols()
    );

    let config = HybridConfig {
        switch_gap_threshold: 1e-3,
        ..HybridConfig::with_variant(HybridVariant::PssnV1)
    };
    let out = solve_hybrid(&game, &config, &Stopwatch::start())?;
    println!(
        "{:?}: gap {:.2e}, value {:.12}",
        out.status,
        out.gap,
        game.value(&out.profile)
    );

    let copy = std::env::temp_dir().join("saddle_ssn_matrix_io.csv");
    save_matrix(&game, &copy)?;
    let reloaded = load_matrix(&copy)?;
    println!("CSV round trip exact: {}", reloaded.payoff() == game.payoff());
    Ok(())
}
