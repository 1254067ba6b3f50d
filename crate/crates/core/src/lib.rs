//! Negotiation-based multi-agent Q-learning with sparse interactions.
//!
//! Agents first learn single-agent policies and reward models alone. When
//! acting together they watch for rewards that contradict their models,
//! expand the offending states into joint coordination states, and pick
//! joint actions there by negotiating an equilibrium of the one-shot game
//! formed by their local joint-action Q-values.

pub mod baselines;
pub mod environments;
pub mod equilibrium;
pub mod harness;
pub mod learner;
pub mod negosi;
pub mod transfer;
