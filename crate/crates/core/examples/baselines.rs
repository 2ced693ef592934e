//! Time to a moderate gap for PRM+, OGDA and extragradient on seeded
//! Gaussian games.

use saddle_ssn::fom::{extragradient_run, ogda_run, FomConfig};
use saddle_ssn::prm::{prm_plus_run, PrmConfig};
use saddle_ssn::{generate, InstanceSpec, Stopwatch};

const TOL: f64 = 1e-4;

fn main() -> saddle_ssn::Result<()> {
    println!("seed  prm+qa[s]  ogda[s]    eg[s]");
    for seed in 0..5 {
        let game = generate(&InstanceSpec::normal(100, 100, seed))?;
        let prm = PrmConfig {
            target_gap: TOL,
            ..PrmConfig::default()
        };
        let fom = FomConfig {
            target_gap: TOL,
            max_iters: 200_000,
            ..FomConfig::default()
        };
        let clock = Stopwatch::start();
        let t_prm = prm_plus_run(&game, &prm, &clock)?.trace.first_crossing(TOL);
        let clock = Stopwatch::start();
        let t_ogda = ogda_run(&game, &fom, &clock)?.trace.first_crossing(TOL);
        let clock = Stopwatch::start();
        let t_eg = extragradient_run(&game, &fom, &clock)?.trace.first_crossing(TOL);
        let fmt = |t: Option<f64>| t.map_or("-".to_string(), |t| format!("{t:.4}"));
        println!("{seed:4}  {:>9}  {:>7}  {:>7}", fmt(t_prm), fmt(t_ogda), fmt(t_eg));
    }
    Ok(())
}
