//! A small seeded benchmark suite written to CSV.

use saddle_ssn::bench::{run_suite, write_outputs, Method, SuiteConfig, TOLERANCES};

fn main() -> saddle_ssn::Result<()> {
    let out_dir = std::env::temp_dir().join("saddle_ssn_bench_suite");
    let config = SuiteConfig {
        n: 60,
        m: 60,
        seeds: (0, 2),
        methods: vec![Method::PrmQuadraticAverage, Method::Ogda, Method::PssnV1, Method::Hpssn],
        fo_budget: 50_000,
        ..SuiteConfig::default()
    };
    let report = run_suite(&config)?;
    write_outputs(&report, &out_dir)?;

    print!("{:>8}", "method");
    for tol in TOLERANCES {
        print!("{tol:>10.0e}");
    }
    println!();
    for method in &config.methods {
        print!("{:>8}", method.name());
        for tol in TOLERANCES {
            match report.table.cell(*method, tol).and_then(|c| c.mean_seconds) {
                Some(t) => print!("{t:>10.4}"),
                None => print!("{:>10}", "-"),
            }
        }
        println!();
    }
    println!("\noutputs in {}", out_dir.display());
    Ok(())
}
