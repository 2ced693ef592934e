//! High-precision Nash equilibria of two-player zero-sum matrix games.
//!
//! The row player minimizes and the column player maximizes `xᵀAy` over
//! probability simplices. Solvers:
//!
//! * [`prm`]: Predictive Regret Matching+ with last-iterate or quadratic
//!   averaging output.
//! * [`fom`]: projected extragradient and optimistic gradient baselines.
//! * [`ssn`]: a regularized semi-smooth Newton method on the residual of the
//!   Douglas–Rachford splitting operator ([`splitting`], [`jacobian`]).
//! * [`hybrid`]: PRM+ warm starts handed to the Newton method.
//!
//! Quality is always certified by the exact duality gap
//! ([`game::duality_gap`]). [`instances`] generates seeded random games and
//! reads payoff files; [`bench`] runs suites and writes CSV traces.
//!
//! ```
//! use saddle_ssn::{solve_hybrid, HybridConfig, HybridVariant, MatrixGame, Stopwatch};
//!
//! let game = MatrixGame::from_rows(&[vec![2.0, -1.0], vec![-1.0, 1.0]]).unwrap();
//! let config = HybridConfig {
//!     switch_gap_threshold: 1e-2,
//!     ..HybridConfig::with_variant(HybridVariant::PssnV1)
//! };
//! let out = solve_hybrid(&game, &config, &Stopwatch::start()).unwrap();
//! assert!(out.gap <= 1e-12);
//! ```

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod fom;
pub mod game;
pub mod hybrid;
pub mod instances;
pub mod jacobian;
pub mod prm;
pub mod splitting;
pub mod ssn;
pub mod trace;

pub use error::{Error, Result};
pub use game::{duality_gap, project_simplex, GapCertificate, LiftedPoint, MatrixGame, StrategyProfile};
pub use hybrid::{hpssn, pssn_v1, pssn_v2, solve_hybrid, HybridConfig, HybridOutcome, HybridStatus, HybridVariant};
pub use instances::{generate, load_matrix, save_matrix, InstanceKind, InstanceSpec};
pub use prm::{prm_plus_run, OutputScheme, PrmConfig, PrmPlus};
pub use splitting::{lift, residual, restrict, DrsContext};
pub use ssn::{drssn, Backtrack, DampingSchedule, SsnConfig, SsnOutcome, SsnStatus};
pub use trace::{Phase, RunRecord, Stopwatch, TraceRow};
