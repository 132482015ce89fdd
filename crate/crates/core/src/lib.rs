//! Deterministic multi-cell wireless simulator in which every base station is
//! a reinforcement-learning agent allocating discrete transmit-power levels
//! to maximize the network's secrecy sum rate against per-cell eavesdroppers.
//! Agents train independently or through federated parameter averaging.

pub mod agents;
pub mod channel;
pub mod env;
pub mod error;
pub mod federation;
pub mod harness;
pub mod neural;
pub mod seeding;

pub use error::{Error, Result};
