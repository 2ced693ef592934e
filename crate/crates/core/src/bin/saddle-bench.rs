//! Benchmark harness. Exit codes: 0 all runs completed, 1 a run failed,
//! 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use saddle_ssn::bench::{default_workers, parse_seed_range, run_suite, seed_offset_from_env, Method, SuiteConfig};
use saddle_ssn::InstanceKind;

#[derive(Debug, Parser)]
#[command(version, about = "Run solver sweeps on zero-sum matrix games")]
struct Cli {
    #[arg(long, default_value = "uniform", value_parser = ["uniform", "normal", "file"])]
    kind: String,
    #[arg(long)]
    path: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    m: usize,
    /// Inclusive range, e.g. `0..9`.
    #[arg(long, default_value = "0..9")]
    seeds: String,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "prm-li,prm-qa,eg,ogda,pssn-v1,pssn-v2,hpssn"
    )]
    methods: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long)]
    switch_threshold: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    target: f64,
    #[arg(long, default_value_t = 500_000)]
    fo_budget: u64,
    #[arg(long, default_value_t = 100)]
    checkpoint_every: u64,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

fn config(cli: Cli) -> saddle_ssn::Result<SuiteConfig> {
    let methods = cli
        .methods
        .iter()
        .map(|m| m.trim().parse::<Method>())
        .collect::<saddle_ssn::Result<Vec<_>>>()?;
    let config = SuiteConfig {
        kind: cli.kind.parse::<InstanceKind>()?,
        path: cli.path,
        n: cli.n,
        m: cli.m,
        seeds: parse_seed_range(&cli.seeds)?,
        seed_offset: seed_offset_from_env()?,
        methods,
        gamma: cli.gamma,
        switch_threshold: cli.switch_threshold,
        target: cli.target,
        fo_budget: cli.fo_budget,
        checkpoint_every: cli.checkpoint_every,
        out_dir: Some(cli.out_dir),
        workers: cli.workers.unwrap_or_else(default_workers),
    };
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let config = match config(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_suite(&config) {
        Ok(report) => {
            for run in &report.runs {
                println!(
                    "{}\t{}\tgap={:.3e}\tfo_iters={}\tnewton_steps={}\t{:.3}s",
                    run.summary.run_id,
                    run.summary.status,
                    run.summary.final_gap,
                    run.summary.fo_iterations,
                    run.summary.newton_steps,
                    run.summary.elapsed_seconds
                );
            }
            if report.any_failed() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
