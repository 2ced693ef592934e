//! Per-run convergence traces shared by every solver.

use std::fmt;
use std::time::Instant;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    #[serde(rename = "FO")]
    FirstOrder,
    #[serde(rename = "SSN")]
    Newton,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::FirstOrder => "FO",
            Phase::Newton => "SSN",
        })
    }
}

/// One checkpoint. `residual_norm` and `lambda` are NaN for first-order rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: u64,
    pub phase: Phase,
    pub duality_gap: f64,
    pub residual_norm: f64,
    pub lambda: f64,
    pub elapsed_seconds: f64,
}

impl TraceRow {
    pub fn first_order(iteration: u64, duality_gap: f64, elapsed_seconds: f64) -> Self {
        Self {
            iteration,
            phase: Phase::FirstOrder,
            duality_gap,
            residual_norm: f64::NAN,
            lambda: f64::NAN,
            elapsed_seconds,
        }
    }
}

/// Labels identifying a run inside a suite.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunLabel {
    pub instance: String,
    pub seed: u64,
    pub method: String,
}

impl RunLabel {
    pub fn run_id(&self) -> String {
        format!("{}-s{}-{}", self.instance, self.seed, self.method)
    }
}

/// Ordered checkpoints of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub label: RunLabel,
    rows: Vec<TraceRow>,
}

impl RunRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: TraceRow) {
        debug_assert!(
            self.rows.last().is_none_or(|last| last.iteration < row.iteration),
            "trace iterations must strictly increase"
        );
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn extend(&mut self, other: RunRecord) {
        for row in other.rows {
            self.push(row);
        }
    }

    /// Elapsed time at the first checkpoint whose gap is `≤ tolerance`.
    pub fn first_crossing(&self, tolerance: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.duality_gap <= tolerance)
            .map(|r| r.elapsed_seconds)
    }

    /// Like [`first_crossing`](Self::first_crossing) but reporting the row.
    pub fn first_row_below(&self, tolerance: f64) -> Option<&TraceRow> {
        self.rows.iter().find(|r| r.duality_gap <= tolerance)
    }

    pub fn newton_rows(&self) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(|r| r.phase == Phase::Newton)
    }
}

/// Wall clock for one solver run.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch {
    start: Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self { start: Instant::now() }
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

impl Default for Stopwatch {
    fn default() -> Self {
        Self::start()
    }
}
