//! Normal-form games and the equilibrium negotiation used at coordination
//! states: non-strict EDSP sets, Meta equilibrium sets for any number of
//! agents, and minimum variance selection.

mod game;
mod negotiation;
mod selection;

use thiserror::Error;

pub use game::{JointAction, JointSpace, NormalFormGame};
pub use negotiation::{
    candidate_set_edsp, candidate_set_meta, enumerate_pure_nash, meta_threshold, negotiate_meta_equilibrium,
    negotiate_nonstrict_edsp, AgentCandidates, EquilibriumKind, EquilibriumSet, Prefix, ThresholdProfile,
};
pub use selection::{min_variance_select, utility_spread};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("prefix {0:?} is not a permutation of the game's agents")]
    InvalidPrefix(Vec<usize>),
    #[error("cannot select from an empty candidate set")]
    EmptyCandidates,
}

/// Outcome of a full negotiation round.
#[derive(Clone, Debug, PartialEq)]
pub struct Negotiated {
    pub set: EquilibriumSet,
    pub selected: JointAction,
}

/// Non-strict EDSP set, falling back to the Meta equilibrium set under
/// `prefix` when empty, followed by minimum variance selection.
pub fn negotiate(game: &NormalFormGame, prefix: impl FnOnce() -> Prefix) -> Result<Negotiated, EquilibriumError> {
    let mut set = negotiate_nonstrict_edsp(game);
    if set.is_empty() {
        set = negotiate_meta_equilibrium(game, &prefix())?;
    }
    let selected = min_variance_select(&set.members, game)?;
    Ok(Negotiated { set, selected })
}
