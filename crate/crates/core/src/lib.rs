//! Core models for slotted Aloha with many base stations whose user adjacency
//! is induced by geographic proximity.
//!
//! The crate is `no_std` (with `alloc`) and contains no IO. It provides:
//!
//! * [`geometry`]: placements in the unit square, disk adjacency and the
//!   Monte Carlo moment table of normalized union-of-disks areas.
//! * [`scenario`]: one slot's network realization, its bipartite decoding
//!   graph, and the degree / coverage formulas.
//! * [`decoders`]: non-cooperative decoding, cooperative peeling, and an
//!   exhaustive activation-mask oracle for tiny deployments.
//! * [`analytics`]: the inclusion-exclusion decoding probability (finite and
//!   asymptotic), the lower bound, the two-iteration cooperative heuristic,
//!   throughput and the maximal-load metric.
//!
//! Randomness flows through [`stream`], which derives independent ChaCha
//! sub-streams from a master seed so that results never depend on
//! scheduling.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analytics;
pub mod decoders;
pub mod geometry;
pub mod scenario;
pub mod stream;

pub use analytics::{AnalyticsError, AsymptoticParams, HeuristicState};
pub use decoders::{DecodeError, DecodeMode, DecodingResult};
pub use geometry::{Estimate, GeometryError, MomentTable, Point2};
pub use scenario::{BipartiteGraph, NetworkInstance, ScenarioError, SystemParams};
