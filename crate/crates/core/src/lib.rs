//! Peer change agent selection on uncertain social networks.
//!
//! The crate covers the whole pipeline of a network intervention run at a
//! drop-in center:
//!
//! * [`ingest`] parses the participant roster, platform friendship edges,
//!   field observation logs and survey waves, and merges the two edge
//!   sources into an [`graph::UncertainNetwork`].
//! * [`graph`] holds the uncertain network and draws concrete networks
//!   from it deterministically.
//! * [`cascade`] estimates independent-cascade spread by Monte Carlo over
//!   sampled networks, with an exact enumeration oracle for small inputs.
//! * [`selector`] picks seeds by lazy greedy maximization of the coverage
//!   still left after earlier rounds.
//! * [`campaign`] runs the multi-round recruitment workflow as an
//!   append-only, hash-chained event log and tabulates survey outcomes.

pub mod baselines;
pub mod campaign;
pub mod cascade;
pub mod config;
pub mod graph;
pub mod ingest;
mod rng;
pub mod selector;

pub use rng::derive_seed;
