//! The sparse-interaction coordinator: agents act on their pretrained
//! single-agent tables until an observed reward contradicts their reward
//! model, then expand the offending state into a joint coordination state
//! where the participants negotiate an equilibrium joint action.

mod step;

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::Rng;

use crate::environments::{Action, Cell, StateId};
use crate::equilibrium::{negotiate, JointAction, JointSpace, Negotiated, NormalFormGame, Prefix};
use crate::learner::{LearningParams, QTable, RewardModel};

pub use step::{negosi_step, CoordinationMode, NegotiationRecord, SparseLearner, StepRecord};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NegoConfig {
    /// Chebyshev communication range; `None` reaches every agent.
    pub comm_range: Option<usize>,
    pub params: LearningParams,
}

/// True iff the pair is known to the model and the observed reward differs
/// from the modeled one. Rewards are deterministic, so the comparison is
/// exact.
pub fn detect_reward_change(model: &RewardModel, s: StateId, a: Action, observed: f64) -> bool {
    match model.expected(s, a) {
        Some(r) => r != observed,
        None => {
            log::warn!("no reward model entry for state {s} action {a}; change detection skipped");
            false
        }
    }
}

/// Splits `flagged` agents (ascending) into groups that can hear each other.
/// Groups are grown greedily in index order: an agent joins the first group
/// whose members are all within range of it. With unlimited range all
/// flagged agents form one group.
pub fn form_groups(flagged: &[usize], positions: &[Cell], comm_range: Option<usize>) -> Vec<Vec<usize>> {
    let Some(range) = comm_range else {
        return if flagged.is_empty() {
            Vec::new()
        } else {
            vec![flagged.to_vec()]
        };
    };
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in flagged {
        match groups
            .iter_mut()
            .find(|g| g.iter().all(|&j| positions[i].chebyshev(positions[j]) <= range))
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// Identity of a coordination state within one agent's pool.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoordKey {
    /// Agent indices, ascending.
    pub participants: Vec<usize>,
    /// Individual state of each participant, in participant order.
    pub joint_state: Vec<StateId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoordinationState {
    pub key: CoordKey,
    pub pool_index: usize,
    /// Q^J over the participants' joint actions, agent order as in the key.
    pub local_q: Vec<f64>,
    /// Joint actions observed to conflict here.
    pub coordination_pairs: BTreeSet<usize>,
}

/// One agent's expanded joint states.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoordinationPool {
    states: Vec<CoordinationState>,
    index: HashMap<CoordKey, usize>,
}

impl CoordinationPool {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn lookup(&self, key: &CoordKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn get(&self, pool_index: usize) -> &CoordinationState {
        &self.states[pool_index]
    }

    pub fn get_mut(&mut self, pool_index: usize) -> &mut CoordinationState {
        &mut self.states[pool_index]
    }

    /// Returns the pool index of `key` and whether it was created now.
    pub fn get_or_create(&mut self, key: CoordKey, init: impl FnOnce() -> Vec<f64>) -> (usize, bool) {
        if let Some(k) = self.lookup(&key) {
            return (k, false);
        }
        let pool_index = self.states.len();
        let local_q = init();
        debug_assert_eq!(local_q.len(), Action::COUNT.pow(key.participants.len() as u32));
        self.index.insert(key.clone(), pool_index);
        self.states.push(CoordinationState {
            key,
            pool_index,
            local_q,
            coordination_pairs: BTreeSet::new(),
        });
        (pool_index, true)
    }

    pub fn states(&self) -> &[CoordinationState] {
        &self.states
    }
}

/// Everything one agent learns during a multi-agent run.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentTables {
    pub q: QTable,
    pub rewards: RewardModel,
    pub dangerous: HashSet<(StateId, Action)>,
    pub pool: CoordinationPool,
}

impl AgentTables {
    pub fn new(q: QTable, rewards: RewardModel) -> Self {
        AgentTables {
            q,
            rewards,
            dangerous: HashSet::new(),
            pool: CoordinationPool::default(),
        }
    }

    pub fn is_dangerous(&self, s: StateId, a: Action) -> bool {
        self.dangerous.contains(&(s, a))
    }
}

/// Each participant keeps its component of `joint` with probability
/// 1 - epsilon and otherwise plays a uniform random action of its own.
pub fn perturb<R: Rng + ?Sized>(joint: &JointAction, epsilon: f64, rng: &mut R) -> Vec<Action> {
    joint
        .0
        .iter()
        .map(|&a| {
            if rng.gen::<f64>() < epsilon {
                Action::from_index(rng.gen_range(0..Action::COUNT))
            } else {
                Action::from_index(a)
            }
        })
        .collect()
}

/// Negotiates over the participants' local tables and applies each
/// participant's exploration. Returns the negotiation outcome and the
/// actions actually played.
pub fn negosi_joint_action<R: Rng + ?Sized, P: Rng + ?Sized>(
    local_q: &[&[f64]],
    epsilon: f64,
    rng: &mut R,
    prefix_rng: &mut P,
) -> (Negotiated, Vec<Action>) {
    let k = local_q.len();
    let game = NormalFormGame::new(vec![Action::COUNT; k], local_q.iter().map(|t| t.to_vec()).collect())
        .expect("local tables form a valid game");
    let outcome = negotiate(&game, || Prefix::random(k, prefix_rng)).expect("meta equilibrium sets are never empty");
    if let Some(prefix) = outcome.set.prefix() {
        log::trace!("meta equilibrium under prefix {:?}", prefix.order());
    }
    let played = perturb(&outcome.selected, epsilon, rng);
    (outcome, played)
}

/// Joint action each participant would pick greedily from its own local
/// table, keeping only its own component.
pub fn greedy_local_joint_action(local_q: &[&[f64]]) -> JointAction {
    let k = local_q.len();
    let space = JointSpace::new(&vec![Action::COUNT; k]);
    JointAction(
        local_q
            .iter()
            .enumerate()
            .map(|(pos, t)| space.component(crate::learner::argmax(t), pos))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn detection_examples() {
        let mut m = RewardModel::new(2);
        m.record(0, Action::Right, -1.0);
        assert!(detect_reward_change(&m, 0, Action::Right, -10.0));
        assert!(!detect_reward_change(&m, 0, Action::Right, -1.0));
        assert!(!detect_reward_change(&m, 1, Action::Up, -10.0));
    }

    #[test]
    fn unlimited_range_groups_everyone() {
        let pos = [Cell::new(0, 0), Cell::new(0, 1), Cell::new(9, 9)];
        assert_eq!(form_groups(&[0, 1, 2], &pos, None), vec![vec![0, 1, 2]]);
        assert!(form_groups(&[], &pos, None).is_empty());
    }

    #[test]
    fn range_excludes_distant_agent() {
        let pos = [Cell::new(0, 0), Cell::new(1, 1), Cell::new(0, 6)];
        assert_eq!(form_groups(&[0, 1, 2], &pos, Some(2)), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn pool_creates_once() {
        let mut pool = CoordinationPool::default();
        let key = CoordKey {
            participants: vec![0, 1],
            joint_state: vec![3, 4],
        };
        assert_eq!(pool.get_or_create(key.clone(), || vec![0.0; 16]), (0, true));
        assert_eq!(pool.get_or_create(key, || panic!("must not reinitialize")), (0, false));
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn worked_tables_negotiate_a_yielding_pair() {
        let q1 = [
            -1., -1., -11., -1., -10., -10., -10., -10., -5., -5., -5., -5., -1., -11., -1., -1.,
        ];
        let q2 = [
            -10., -1., -11., -5., -10., -1., -1., -5., -10., -1., -1., -5., -10., -11., -1., -5.,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut prng = ChaCha8Rng::seed_from_u64(1);
        let (out, played) = negosi_joint_action(&[&q1, &q2], 0.0, &mut rng, &mut prng);
        // (up, down) and (right, left)
        assert!(out.set.contains(&JointAction(vec![0, 1])));
        assert!(out.set.contains(&JointAction(vec![3, 2])));
        assert_eq!(
            played,
            vec![
                Action::from_index(out.selected.0[0]),
                Action::from_index(out.selected.0[1])
            ]
        );
    }

    #[test]
    fn constant_tables_pick_first_joint_action() {
        let t = [2.0; 16];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, played) = negosi_joint_action(&[&t, &t], 0.0, &mut rng, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(out.set.len(), 16);
        assert_eq!(played, vec![Action::Up, Action::Up]);
    }

    #[test]
    fn greedy_local_uses_own_component() {
        let mut t1 = [0.0; 16];
        let mut t2 = [0.0; 16];
        t1[3 * 4 + 1] = 5.0; // agent 0 likes (right, down)
        t2[2 * 4 + 2] = 5.0; // agent 1 likes (left, left)
        assert_eq!(greedy_local_joint_action(&[&t1, &t2]), JointAction(vec![3, 2]));
    }
}
