//! Coin-based voting governance for delegated proof-of-stake chains.
//!
//! The pipeline has three phases: coins stake into voting power, voters cast
//! (possibly delegated) ballots under an approval or cumulative rule, and the
//! top-n candidates form a committee that approves proposals with at least t
//! member votes. On top of that this crate computes equilibrium takeover
//! strategies and their cost ([`game`]), active and passive takeover
//! resistance with a per-day risk index ([`metrics`]), what-if decay curves
//! over alternative ballot-size and rule choices ([`sim`]), and deterministic
//! event-log replay into daily snapshots ([`store`]).

pub mod config;
pub mod election;
pub mod error;
pub mod game;
pub mod metrics;
pub mod power;
pub mod sim;
pub mod snapshot;
pub mod store;

pub use config::{SystemConfig, VotingRule};
pub use error::{Error, Result};
pub use power::{Power, Rational};

/// Chain account that casts votes or stakes coins.
pub type VoterId = String;

/// Chain account that runs for a committee seat.
pub type CandidateId = String;
