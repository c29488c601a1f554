//! Monte Carlo harness, file formats and parallel drivers for `aloha-core`.
//!
//! * [`table_io`]: the plain-text moment table format.
//! * [`instance_io`]: plain-text deployment dumps for regression fixtures.
//! * [`trace`]: per-round peeling traces.
//! * [`parallel`]: rayon-backed moment tabulation and mask sampling, with
//!   results identical to the sequential paths.
//! * [`oracle`]: exhaustive mask enumeration against sampled masks.
//! * [`experiments`]: load sweeps, maximal-load estimation and reports.
//! * [`manifest`]: run manifests echoed into every output.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod format;
pub mod instance_io;
pub mod manifest;
pub mod oracle;
pub mod parallel;
pub mod table_io;
pub mod trace;

pub use error::SimError;

/// Seed used by every command unless one is given.
pub const DEFAULT_SEED: u64 = 2017;
