//! Candidate-set negotiation. Each agent computes its own threshold and
//! candidate set from its own utilities alone; the equilibrium set is the
//! intersection of what every agent broadcasts.

use rand::seq::SliceRandom;
use rand::Rng;

use super::game::{JointAction, JointSpace, NormalFormGame};
use super::EquilibriumError;

/// Ordering of agents defining a metagame k_1 k_2 ... k_n.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Prefix(Vec<usize>);

impl Prefix {
    pub fn new(order: Vec<usize>) -> Result<Self, EquilibriumError> {
        let mut seen = vec![false; order.len()];
        for &k in &order {
            if k >= order.len() || std::mem::replace(&mut seen[k], true) {
                return Err(EquilibriumError::InvalidPrefix(order));
            }
        }
        Ok(Prefix(order))
    }

    pub fn identity(n: usize) -> Self {
        Prefix((0..n).collect())
    }

    /// Uniform draw from the n! permutations.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Prefix(order)
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Agents listed before `agent`.
    pub fn predecessors(&self, agent: usize) -> &[usize] {
        let pos = self.position(agent);
        &self.0[..pos]
    }

    /// Agents listed after `agent`.
    pub fn successors(&self, agent: usize) -> &[usize] {
        let pos = self.position(agent);
        &self.0[pos + 1..]
    }

    fn position(&self, agent: usize) -> usize {
        self.0
            .iter()
            .position(|&k| k == agent)
            .expect("agent is part of the prefix")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquilibriumKind {
    NonStrictEdsp,
    Meta(Prefix),
}

/// Per-agent acceptance thresholds used by a negotiation.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdProfile(pub Vec<f64>);

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumSet {
    /// Sorted lexicographically.
    pub members: Vec<JointAction>,
    pub kind: EquilibriumKind,
    pub thresholds: ThresholdProfile,
}

impl EquilibriumSet {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, joint: &JointAction) -> bool {
        self.members.binary_search(joint).is_ok()
    }

    pub fn prefix(&self) -> Option<&Prefix> {
        match &self.kind {
            EquilibriumKind::Meta(p) => Some(p),
            EquilibriumKind::NonStrictEdsp => None,
        }
    }
}

/// What one agent broadcasts: its threshold and the joint actions that
/// clear it, as sorted linear indices.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentCandidates {
    pub threshold: f64,
    pub members: Vec<usize>,
}

impl AgentCandidates {
    fn from_threshold(threshold: f64, own: &[f64]) -> Self {
        let members = own
            .iter()
            .enumerate()
            .filter(|(_, &u)| u >= threshold)
            .map(|(k, _)| k)
            .collect();
        AgentCandidates { threshold, members }
    }
}

/// Brute-force pure Nash equilibria: no agent gains strictly by deviating
/// alone.
pub fn enumerate_pure_nash(game: &NormalFormGame) -> Vec<JointAction> {
    let space = game.space();
    (0..space.size())
        .filter(|&k| {
            (0..game.n_agents()).all(|i| {
                let u = game.utilities(i);
                (0..space.counts()[i]).all(|a| u[space.with_component(k, i, a)] <= u[k])
            })
        })
        .map(|k| space.decode(k))
        .collect()
}

/// Agent `agent`'s non-strict EDSP candidates, computed from its own
/// utilities only. The threshold is the smallest best-response value over
/// the other agents' joint actions.
pub fn candidate_set_edsp(agent: usize, action_counts: &[usize], own: &[f64]) -> AgentCandidates {
    let space = JointSpace::new(action_counts);
    assert_eq!(own.len(), space.size(), "utility tensor size mismatch");
    let stride = space.stride(agent);
    let block = stride * action_counts[agent];
    let mut threshold = f64::INFINITY;
    // Every joint action whose own component is 0 represents one a_{-i}.
    for outer in (0..space.size()).step_by(block) {
        for inner in 0..stride {
            let base = outer + inner;
            let best = (0..action_counts[agent])
                .map(|a| own[base + a * stride])
                .fold(f64::NEG_INFINITY, f64::max);
            if best < threshold {
                threshold = best;
            }
        }
    }
    AgentCandidates::from_threshold(threshold, own)
}

fn intersect(per_agent: &[AgentCandidates]) -> Vec<usize> {
    let mut acc = per_agent[0].members.clone();
    for c in &per_agent[1..] {
        acc.retain(|k| c.members.binary_search(k).is_ok());
    }
    acc
}

/// Intersection of every agent's EDSP candidate set. May be empty.
pub fn negotiate_nonstrict_edsp(game: &NormalFormGame) -> EquilibriumSet {
    let per_agent: Vec<AgentCandidates> = (0..game.n_agents())
        .map(|i| candidate_set_edsp(i, game.action_counts(), game.utilities(i)))
        .collect();
    EquilibriumSet {
        members: intersect(&per_agent)
            .into_iter()
            .map(|k| game.space().decode(k))
            .collect(),
        kind: EquilibriumKind::NonStrictEdsp,
        thresholds: ThresholdProfile(per_agent.iter().map(|c| c.threshold).collect()),
    }
}

/// min over predecessors, max over `agent`, min over successors of the
/// agent's utility, evaluated as a quantifier chain in prefix order.
pub fn meta_threshold(agent: usize, action_counts: &[usize], own: &[f64], prefix: &Prefix) -> f64 {
    assert_eq!(prefix.len(), action_counts.len(), "prefix must list every agent");
    let space = JointSpace::new(action_counts);
    assert_eq!(own.len(), space.size(), "utility tensor size mismatch");

    fn chain(own: &[f64], space: &JointSpace, order: &[usize], agent: usize, index: usize) -> f64 {
        let Some((&k, rest)) = order.split_first() else {
            return own[index];
        };
        let values = (0..space.counts()[k]).map(|a| chain(own, space, rest, agent, index + a * space.stride(k)));
        if k == agent {
            values.fold(f64::NEG_INFINITY, f64::max)
        } else {
            values.fold(f64::INFINITY, f64::min)
        }
    }

    chain(own, &space, prefix.order(), agent, 0)
}

/// Agent `agent`'s Meta equilibrium candidates under `prefix`.
pub fn candidate_set_meta(agent: usize, action_counts: &[usize], own: &[f64], prefix: &Prefix) -> AgentCandidates {
    AgentCandidates::from_threshold(meta_threshold(agent, action_counts, own, prefix), own)
}

/// Intersection of every agent's Meta equilibrium candidate set.
pub fn negotiate_meta_equilibrium(game: &NormalFormGame, prefix: &Prefix) -> Result<EquilibriumSet, EquilibriumError> {
    if prefix.len() != game.n_agents() {
        return Err(EquilibriumError::InvalidPrefix(prefix.order().to_vec()));
    }
    let per_agent: Vec<AgentCandidates> = (0..game.n_agents())
        .map(|i| candidate_set_meta(i, game.action_counts(), game.utilities(i), prefix))
        .collect();
    let members: Vec<JointAction> = intersect(&per_agent)
        .into_iter()
        .map(|k| game.space().decode(k))
        .collect();
    debug_assert!(!members.is_empty(), "meta equilibrium sets are never empty");
    Ok(EquilibriumSet {
        members,
        kind: EquilibriumKind::Meta(prefix.clone()),
        thresholds: ThresholdProfile(per_agent.iter().map(|c| c.threshold).collect()),
    })
}
