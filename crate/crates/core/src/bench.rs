//! Benchmark suites: every (seed, method) pair on one instance family, with
//! long-form traces, first-crossing tolerance tables and plot files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fom::{extragradient_run, ogda_run, FomConfig};
use crate::game::MatrixGame;
use crate::hybrid::{default_switch_threshold, solve_hybrid, HybridConfig, HybridStatus, HybridVariant};
use crate::instances::{generate, InstanceKind, InstanceSpec};
use crate::prm::{prm_plus_run, FoStatus, OutputScheme, PrmConfig};
use crate::trace::{Phase, RunLabel, RunRecord, Stopwatch};

/// Tolerances reported in the tolerance table.
pub const TOLERANCES: [f64; 6] = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12];

/// Environment variable shifting every seed of a suite.
pub const SEED_OFFSET_ENV: &str = "SADDLE_SSN_SEED_OFFSET";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    #[serde(rename = "prm-li")]
    PrmLastIterate,
    #[serde(rename = "prm-qa")]
    PrmQuadraticAverage,
    #[serde(rename = "eg")]
    Extragradient,
    #[serde(rename = "ogda")]
    Ogda,
    #[serde(rename = "pssn-v1")]
    PssnV1,
    #[serde(rename = "pssn-v2")]
    PssnV2,
    #[serde(rename = "hpssn")]
    Hpssn,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::PrmLastIterate,
        Method::PrmQuadraticAverage,
        Method::Extragradient,
        Method::Ogda,
        Method::PssnV1,
        Method::PssnV2,
        Method::Hpssn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::PrmLastIterate => "prm-li",
            Method::PrmQuadraticAverage => "prm-qa",
            Method::Extragradient => "eg",
            Method::Ogda => "ogda",
            Method::PssnV1 => "pssn-v1",
            Method::PssnV2 => "pssn-v2",
            Method::Hpssn => "hpssn",
        }
    }

    pub fn hybrid_variant(self) -> Option<HybridVariant> {
        match self {
            Method::PssnV1 => Some(HybridVariant::PssnV1),
            Method::PssnV2 => Some(HybridVariant::PssnV2),
            Method::Hpssn => Some(HybridVariant::Hpssn),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// Parses an inclusive seed range `a..b`, or a single seed `a`.
pub fn parse_seed_range(s: &str) -> Result<(u64, u64)> {
    let bad = || Error::InvalidConfig(format!("seed range must look like `0..9`, got `{s}`"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let a = s.trim().parse().map_err(|_| bad())?;
            (a, a)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Reads [`SEED_OFFSET_ENV`]; unset means 0.
pub fn seed_offset_from_env() -> Result<u64> {
    match std::env::var(SEED_OFFSET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{SEED_OFFSET_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteConfig {
    pub kind: InstanceKind,
    pub path: Option<PathBuf>,
    pub n: usize,
    pub m: usize,
    /// Inclusive.
    pub seeds: (u64, u64),
    pub seed_offset: u64,
    pub methods: Vec<Method>,
    pub gamma: f64,
    /// `None` picks a per-family default for each hybrid method.
    pub switch_threshold: Option<f64>,
    pub target: f64,
    pub fo_budget: u64,
    pub checkpoint_every: u64,
    pub out_dir: Option<PathBuf>,
    pub workers: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            kind: InstanceKind::Uniform,
            path: None,
            n: 100,
            m: 100,
            seeds: (0, 9),
            seed_offset: 0,
            methods: Method::ALL.to_vec(),
            gamma: 1.0,
            switch_threshold: None,
            target: 1e-12,
            fo_budget: 500_000,
            checkpoint_every: 100,
            out_dir: None,
            workers: default_workers(),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.kind == InstanceKind::File && self.path.is_none() {
            return bad("--kind file needs --path".into());
        }
        if self.kind != InstanceKind::File && (self.n == 0 || self.m == 0) {
            return bad("--n and --m must be positive".into());
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.target > 0.0) {
            return bad(format!("target must be positive, got {}", self.target));
        }
        if let Some(t) = self.switch_threshold {
            if !(t > self.target) {
                return bad(format!("switch threshold {t} must exceed the target {}", self.target));
            }
        }
        if self.fo_budget == 0 || self.checkpoint_every == 0 || self.workers == 0 {
            return bad("budget, checkpoint cadence and workers must be positive".into());
        }
        if self.seeds.0 > self.seeds.1 {
            return bad("empty seed range".into());
        }
        Ok(())
    }

    /// Seeds after applying the offset.
    pub fn seed_list(&self) -> Vec<u64> {
        (self.seeds.0..=self.seeds.1)
            .map(|s| s.wrapping_add(self.seed_offset))
            .collect()
    }

    pub fn instance_spec(&self, seed: u64) -> InstanceSpec {
        InstanceSpec {
            kind: self.kind,
            n: self.n,
            m: self.m,
            seed,
            path: self.path.clone(),
        }
    }

    pub fn hybrid_config(&self, variant: HybridVariant, game: &MatrixGame) -> HybridConfig {
        let threshold = self
            .switch_threshold
            .unwrap_or_else(|| default_switch_threshold(self.kind, game.rows(), game.cols(), variant));
        HybridConfig {
            variant,
            switch_gap_threshold: threshold,
            gamma: self.gamma,
            target_gap: self.target,
            max_fo_iters: self.fo_budget,
            checkpoint_every: self.checkpoint_every,
            ..HybridConfig::default()
        }
    }
}

/// Final state of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub instance: String,
    pub seed: u64,
    pub method: Method,
    pub status: String,
    pub final_gap: f64,
    pub fo_iterations: u64,
    pub newton_steps: usize,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub record: RunRecord,
    pub summary: RunSummary,
}

impl RunResult {
    pub fn failed(&self) -> bool {
        self.summary.status.starts_with("error")
    }
}

/// Runs `method` on `game`. Timing starts here, so generation and I/O are
/// excluded while resolvent setup is included.
pub fn run_method(game: &MatrixGame, method: Method, config: &SuiteConfig, label: RunLabel) -> Result<RunResult> {
    let clock = Stopwatch::start();
    let fo_status = |s: FoStatus| match s {
        FoStatus::Converged => "converged",
        FoStatus::BudgetExhausted => "budget_exhausted",
    };
    let (mut record, status, final_gap, fo_iterations, newton_steps) = match method {
        Method::PrmLastIterate | Method::PrmQuadraticAverage => {
            let scheme = if method == Method::PrmLastIterate {
                OutputScheme::LastIterate
            } else {
                OutputScheme::QuadraticAverage
            };
            let cfg = PrmConfig {
                scheme,
                max_iters: config.fo_budget,
                checkpoint_every: config.checkpoint_every,
                target_gap: config.target,
                ..PrmConfig::default()
            };
            let out = prm_plus_run(game, &cfg, &clock)?;
            (out.trace, fo_status(out.status), out.gap, out.iterations, 0)
        }
        Method::Extragradient | Method::Ogda => {
            let cfg = FomConfig {
                step_size: None,
                max_iters: config.fo_budget,
                checkpoint_every: config.checkpoint_every,
                target_gap: config.target,
            };
            let out = if method == Method::Extragradient {
                extragradient_run(game, &cfg, &clock)?
            } else {
                ogda_run(game, &cfg, &clock)?
            };
            (out.trace, fo_status(out.status), out.gap, out.iterations, 0)
        }
        Method::PssnV1 | Method::PssnV2 | Method::Hpssn => {
            let variant = method.hybrid_variant().expect("hybrid method");
            let out = solve_hybrid(game, &config.hybrid_config(variant, game), &clock)?;
            let status = match out.status {
                HybridStatus::Converged => "converged",
                HybridStatus::FoBudgetExhausted => "budget_exhausted",
                HybridStatus::SsnStalled => "ssn_stalled",
            };
            (out.trace, status, out.gap, out.fo_iterations, out.ssn_steps.len())
        }
    };
    let elapsed_seconds = clock.elapsed();
    record.label = label;
    let summary = RunSummary {
        run_id: record.label.run_id(),
        instance: record.label.instance.clone(),
        seed: record.label.seed,
        method,
        status: status.to_string(),
        final_gap,
        fo_iterations,
        newton_steps,
        elapsed_seconds,
    };
    Ok(RunResult { record, summary })
}

/// Mean first-crossing time per (method, tolerance). A cell holds a mean only
/// when every seed reached the tolerance, which keeps each row nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToleranceCell {
    pub method: Method,
    pub tolerance: f64,
    pub mean_seconds: Option<f64>,
    pub seeds_reached: usize,
    pub seeds_total: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToleranceTable {
    pub cells: Vec<ToleranceCell>,
}

impl ToleranceTable {
    pub fn from_runs(methods: &[Method], runs: &[RunResult]) -> Self {
        let mut cells = Vec::new();
        for &method in methods {
            let records: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.summary.method == method && !r.failed())
                .map(|r| &r.record)
                .collect();
            for tolerance in TOLERANCES {
                let times: Vec<f64> = records.iter().filter_map(|r| r.first_crossing(tolerance)).collect();
                let total = runs.iter().filter(|r| r.summary.method == method).count();
                let mean_seconds =
                    (!times.is_empty() && times.len() == total).then(|| times.iter().sum::<f64>() / times.len() as f64);
                cells.push(ToleranceCell {
                    method,
                    tolerance,
                    mean_seconds,
                    seeds_reached: times.len(),
                    seeds_total: total,
                });
            }
        }
        Self { cells }
    }

    pub fn cell(&self, method: Method, tolerance: f64) -> Option<&ToleranceCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.tolerance == tolerance)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        w.write_record(["method", "tolerance", "mean_seconds", "seeds_reached", "seeds_total"])
            .map_err(|e| csv_error(path, e))?;
        for c in &self.cells {
            w.write_record([
                c.method.name().to_string(),
                format!("{:e}", c.tolerance),
                c.mean_seconds.map(|t| t.to_string()).unwrap_or_default(),
                c.seeds_reached.to_string(),
                c.seeds_total.to_string(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Everything a suite produced.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub runs: Vec<RunResult>,
    pub table: ToleranceTable,
}

impl SuiteReport {
    pub fn any_failed(&self) -> bool {
        self.runs.iter().any(RunResult::failed)
    }
}

/// Runs every (seed, method) pair on a worker pool, keeping the output order
/// fixed, and writes outputs when `out_dir` is set.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;

    let seeds = config.seed_list();
    let games: Vec<(InstanceSpec, MatrixGame)> = seeds
        .iter()
        .map(|&seed| {
            let spec = config.instance_spec(seed);
            generate(&spec).map(|g| (spec, g))
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, Method)> = (0..games.len())
        .flat_map(|i| config.methods.iter().map(move |&m| (i, m)))
        .collect();
    let runs: Vec<RunResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, method)| {
                let (spec, game) = &games[i];
                let label = RunLabel {
                    instance: spec.instance_id(),
                    seed: spec.seed,
                    method: method.name().to_string(),
                };
                log::info!("running {}", label.run_id());
                run_method(game, method, config, label.clone()).unwrap_or_else(|e| {
                    log::error!("{} failed: {e}", label.run_id());
                    failure(label, method, &e)
                })
            })
            .collect()
    });

    let table = ToleranceTable::from_runs(&config.methods, &runs);
    let report = SuiteReport {
        config: config.clone(),
        runs,
        table,
    };
    if let Some(dir) = &config.out_dir {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

fn failure(label: RunLabel, method: Method, err: &Error) -> RunResult {
    let summary = RunSummary {
        run_id: label.run_id(),
        instance: label.instance.clone(),
        seed: label.seed,
        method,
        status: format!("error: {err}"),
        final_gap: f64::NAN,
        fo_iterations: 0,
        newton_steps: 0,
        elapsed_seconds: f64::NAN,
    };
    let mut record = RunRecord::new();
    record.label = label;
    RunResult { record, summary }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::InvalidConfig(format!("{}: csv error {other:?}", path.display())),
    }
}

const TRACE_HEADER: [&str; 6] = [
    "iteration",
    "phase",
    "duality_gap",
    "residual_norm",
    "lambda",
    "elapsed_seconds",
];

fn trace_fields(record: &RunRecord) -> impl Iterator<Item = [String; 6]> + '_ {
    record.rows().iter().map(|r| {
        [
            r.iteration.to_string(),
            r.phase.to_string(),
            r.duality_gap.to_string(),
            r.residual_norm.to_string(),
            r.lambda.to_string(),
            r.elapsed_seconds.to_string(),
        ]
    })
}

/// `runs.csv`: every trace row of every run, in long form.
pub fn write_runs_csv(runs: &[RunResult], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["instance", "seed", "method"];
    header.extend(TRACE_HEADER);
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for run in runs {
        let label = &run.record.label;
        for fields in trace_fields(&run.record) {
            let mut row = vec![label.instance.clone(), label.seed.to_string(), label.method.clone()];
            row.extend(fields);
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_trace_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(TRACE_HEADER).map_err(|e| csv_error(path, e))?;
    for fields in trace_fields(record) {
        w.write_record(&fields).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `<run-id>.gap.csv` (elapsed_seconds, duality_gap) and
/// `<run-id>.residual.csv` (iteration, residual_norm over Newton rows) into
/// `dir`, returning both paths.
pub fn emit_trace_plotdata(record: &RunRecord, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let id = record.label.run_id();
    let gap_path = dir.join(format!("{id}.gap.csv"));
    let residual_path = dir.join(format!("{id}.residual.csv"));

    let mut w = csv_writer(&gap_path)?;
    w.write_record(["elapsed_seconds", "duality_gap"])
        .map_err(|e| csv_error(&gap_path, e))?;
    let mut gap_rows: Vec<(f64, f64)> = record
        .rows()
        .iter()
        .filter(|r| r.elapsed_seconds.is_finite() && r.duality_gap.is_finite())
        .map(|r| (r.elapsed_seconds, r.duality_gap))
        .collect();
    gap_rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (t, g) in gap_rows {
        w.write_record([t.to_string(), g.to_string()])
            .map_err(|e| csv_error(&gap_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&gap_path, e))?;

    let mut w = csv_writer(&residual_path)?;
    w.write_record(["iteration", "residual_norm"])
        .map_err(|e| csv_error(&residual_path, e))?;
    for r in record
        .rows()
        .iter()
        .filter(|r| r.phase == Phase::Newton && r.residual_norm.is_finite())
    {
        w.write_record([r.iteration.to_string(), r.residual_norm.to_string()])
            .map_err(|e| csv_error(&residual_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&residual_path, e))?;
    Ok((gap_path, residual_path))
}

#[derive(Serialize)]
struct Meta<'a> {
    config: &'a SuiteConfig,
    seeds: Vec<u64>,
    tolerances: [f64; 6],
    switch_thresholds: Vec<(String, f64)>,
    runs: Vec<&'a RunSummary>,
}

/// Writes `runs.csv`, `tolerance_table.csv`, `summary.csv`, `meta.json` and
/// per-run files under `traces/`.
pub fn write_outputs(report: &SuiteReport, dir: &Path) -> Result<()> {
    let traces = dir.join("traces");
    fs::create_dir_all(&traces).map_err(|e| Error::io(&traces, e))?;
    write_runs_csv(&report.runs, &dir.join("runs.csv"))?;
    report.table.write_csv(&dir.join("tolerance_table.csv"))?;

    let summary_path = dir.join("summary.csv");
    let mut w = csv_writer(&summary_path)?;
    for run in &report.runs {
        w.serialize(&run.summary).map_err(|e| csv_error(&summary_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&summary_path, e))?;

    for run in &report.runs {
        let id = run.record.label.run_id();
        write_trace_csv(&run.record, &traces.join(format!("{id}.csv")))?;
        emit_trace_plotdata(&run.record, &traces)?;
    }

    let config = &report.config;
    let (n, m) = match config.kind {
        InstanceKind::File => {
            let game = generate(&config.instance_spec(0))?;
            (game.rows(), game.cols())
        }
        _ => (config.n, config.m),
    };
    let switch_thresholds = config
        .methods
        .iter()
        .filter_map(|&method| {
            let variant = method.hybrid_variant()?;
            let t = config
                .switch_threshold
                .unwrap_or_else(|| default_switch_threshold(config.kind, n, m, variant));
            Some((method.name().to_string(), t))
        })
        .collect();
    let meta = Meta {
        config: &report.config,
        seeds: config.seed_list(),
        tolerances: TOLERANCES,
        switch_thresholds,
        runs: report.runs.iter().map(|r| &r.summary).collect(),
    };
    let meta_path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::InvalidConfig(format!("meta.json: {e}")))?;
    fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seed_range("0..2").unwrap(), (0, 2));
        assert_eq!(parse_seed_range("7").unwrap(), (7, 7));
        assert!(parse_seed_range("3..1").is_err());
        assert!(parse_seed_range("a..b").is_err());
    }

    #[test]
    fn offset_shifts_seeds() {
        let cfg = SuiteConfig {
            seeds: (0, 2),
            seed_offset: 10,
            ..SuiteConfig::default()
        };
        assert_eq!(cfg.seed_list(), vec![10, 11, 12]);
    }

    #[test]
    fn validation_rejects_bad_flags() {
        let ok = SuiteConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            SuiteConfig {
                gamma: 0.0,
                ..ok.clone()
            },
            SuiteConfig {
                methods: vec![],
                ..ok.clone()
            },
            SuiteConfig {
                kind: InstanceKind::File,
                ..ok.clone()
            },
            SuiteConfig {
                switch_threshold: Some(1e-13),
                ..ok.clone()
            },
            SuiteConfig {
                workers: 0,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
