//! Lifted Markov chains on graphs: constructions (clock and node-clock
//! lifts, stochastic bridges, diameter-time mixers, cycle lifts) and exact
//! analysis at desk scale (mixing times, marginal mixing times,
//! conductances, induced chains, invariance and flow checks).

pub mod conductance;
pub mod constructions;
pub mod error;
pub mod graph;
pub mod lift;
pub mod markov;
pub mod random;
pub mod verify;

pub use error::{Error, Result};
