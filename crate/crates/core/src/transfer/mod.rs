//! Local Q-value transfer: a joint-action learner trained on a blank grid
//! supplies collision values over relative positions, which are added to an
//! agent's own global row when a coordination state is first created.

mod io;
mod source;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::environments::{Action, Cell};
use crate::equilibrium::JointSpace;

pub use io::{read_source_task, write_source_task};
pub use source::{collision_penalties, train_source_task, SourceTaskConfig};

#[derive(Debug, Error, PartialEq)]
pub enum TransferError {
    #[error("source table covers {source_agents} agents but the coordination state has {participants}")]
    ParticipantMismatch { source_agents: usize, participants: usize },
    #[error("no source table for {0} agents")]
    MissingSource(usize),
    #[error("source table for {0} agents given twice")]
    DuplicateSource(usize),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Positions of a group of agents relative to each other: consecutive
/// differences `(r_1 - r_2, c_1 - c_2, r_2 - r_3, c_2 - c_3, ...)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelativeState(Vec<i32>);

impl RelativeState {
    /// Relative state of `cells`, ordered by agent index.
    pub fn of(cells: &[Cell]) -> Self {
        assert!(cells.len() >= 2, "a relative state needs at least two agents");
        let mut d = Vec::with_capacity(2 * (cells.len() - 1));
        for w in cells.windows(2) {
            d.push(w[0].row as i32 - w[1].row as i32);
            d.push(w[0].col as i32 - w[1].col as i32);
        }
        RelativeState(d)
    }

    pub fn from_components(components: Vec<i32>) -> Self {
        assert!(
            components.len() >= 2 && components.len().is_multiple_of(2),
            "components come in (row, col) pairs"
        );
        RelativeState(components)
    }

    pub fn n_agents(&self) -> usize {
        self.0.len() / 2 + 1
    }

    pub fn components(&self) -> &[i32] {
        &self.0
    }
}

impl fmt::Display for RelativeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Collision values Q_i^CT learned on the blank source task, per agent and
/// relative state, over the joint actions of all `n_agents` agents.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceTaskQ {
    n_agents: usize,
    tables: Vec<HashMap<RelativeState, Vec<f64>>>,
}

impl SourceTaskQ {
    pub fn new(n_agents: usize) -> Self {
        assert!(n_agents >= 2, "source tasks need at least two agents");
        SourceTaskQ {
            n_agents,
            tables: vec![HashMap::new(); n_agents],
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn joint_size(&self) -> usize {
        Action::COUNT.pow(self.n_agents as u32)
    }

    pub fn entry(&self, agent: usize, rel: &RelativeState) -> Option<&[f64]> {
        self.tables[agent].get(rel).map(Vec::as_slice)
    }

    /// Value at `(rel, joint)`; unvisited relative states are zero.
    pub fn value(&self, agent: usize, rel: &RelativeState, joint: usize) -> f64 {
        self.entry(agent, rel).map_or(0.0, |e| e[joint])
    }

    pub fn entry_mut(&mut self, agent: usize, rel: &RelativeState) -> &mut [f64] {
        let size = self.joint_size();
        self.tables[agent].entry(rel.clone()).or_insert_with(|| vec![0.0; size])
    }

    pub fn relative_states(&self, agent: usize) -> impl Iterator<Item = &RelativeState> {
        self.tables[agent].keys()
    }

    pub fn len(&self, agent: usize) -> usize {
        self.tables[agent].len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.iter().all(HashMap::is_empty)
    }
}

/// Source tables keyed by the number of agents they cover.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SourceLibrary {
    by_count: BTreeMap<usize, SourceTaskQ>,
}

impl SourceLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, q: SourceTaskQ) -> Result<(), TransferError> {
        let n = q.n_agents();
        if self.by_count.insert(n, q).is_some() {
            return Err(TransferError::DuplicateSource(n));
        }
        Ok(())
    }

    pub fn get(&self, n_agents: usize) -> Option<&SourceTaskQ> {
        self.by_count.get(&n_agents)
    }

    /// Fails unless every group size in `2..=n_agents` is covered.
    pub fn require_up_to(&self, n_agents: usize) -> Result<(), TransferError> {
        match (2..=n_agents).find(|n| !self.by_count.contains_key(n)) {
            Some(n) => Err(TransferError::MissingSource(n)),
            None => Ok(()),
        }
    }

    pub fn counts(&self) -> impl Iterator<Item = usize> + '_ {
        self.by_count.keys().copied()
    }
}

/// Hybrid initialization of a participant's local table:
/// `Q^J[a] = Q(s_i, a_position) + Q^CT(rel, a)`.
///
/// `position` is the agent's place among the participants (ordered by agent
/// index) and `global_row` its own global Q-values at its own state.
/// Relative states the source table never visited contribute zero.
pub fn init_local_q(
    global_row: &[f64],
    source: &SourceTaskQ,
    rel: &RelativeState,
    position: usize,
) -> Result<Vec<f64>, TransferError> {
    let participants = rel.n_agents();
    if source.n_agents() != participants {
        return Err(TransferError::ParticipantMismatch {
            source_agents: source.n_agents(),
            participants,
        });
    }
    let space = JointSpace::new(&vec![Action::COUNT; participants]);
    let entry = source.entry(position, rel);
    if entry.is_none() {
        log::debug!("relative state {rel} unseen in the source task; collision term is zero");
    }
    Ok((0..space.size())
        .map(|j| {
            let own = (j / space.stride(position)) % Action::COUNT;
            global_row[own] + entry.map_or(0.0, |e| e[j])
        })
        .collect())
}

/// Local table without transferred knowledge, as used by the CQ-style
/// baseline.
pub fn zero_local_q(participants: usize) -> Vec<f64> {
    vec![0.0; Action::COUNT.pow(participants as u32)]
}
