//! Tabular single-agent machinery: Q-tables, epsilon-greedy selection,
//! one-step Q-learning and the pretraining that yields each agent's
//! single-agent policy and reward model.

mod io;

use rand::Rng;
use thiserror::Error;

use crate::environments::{step_single, Action, GridMap, StateId, StateSpace, TaskPlan};

pub use io::{read_pretrained, write_pretrained, PretrainIoError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearningParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for LearningParams {
    fn default() -> Self {
        LearningParams {
            alpha: 0.1,
            gamma: 0.9,
            epsilon: 0.01,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("{name} = {value} is outside [0, 1]")]
pub struct ParamError {
    pub name: &'static str,
    pub value: f64,
}

impl LearningParams {
    pub fn new(alpha: f64, gamma: f64, epsilon: f64) -> Result<Self, ParamError> {
        let p = LearningParams { alpha, gamma, epsilon };
        p.validate()?;
        Ok(p)
    }

    /// Defaults for single-agent pretraining. The multi-agent phase transfers
    /// whole Q rows, not just the greedy action, so pretraining explores
    /// enough to value the detours an agent may need when it meets others.
    pub fn pretraining() -> Self {
        LearningParams {
            epsilon: 0.3,
            ..LearningParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, value) in [("alpha", self.alpha), ("gamma", self.gamma), ("epsilon", self.epsilon)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ParamError { name, value });
            }
        }
        Ok(())
    }
}

/// Dense state x action value table over the four moves.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize) -> Self {
        QTable {
            values: vec![0.0; n_states * Action::COUNT],
        }
    }

    pub fn filled(n_states: usize, value: f64) -> Self {
        QTable {
            values: vec![value; n_states * Action::COUNT],
        }
    }

    pub fn n_states(&self) -> usize {
        self.values.len() / Action::COUNT
    }

    pub fn row(&self, s: StateId) -> &[f64] {
        &self.values[s * Action::COUNT..(s + 1) * Action::COUNT]
    }

    pub fn get(&self, s: StateId, a: Action) -> f64 {
        self.values[s * Action::COUNT + a.index()]
    }

    pub fn set(&mut self, s: StateId, a: Action, value: f64) {
        self.values[s * Action::COUNT + a.index()] = value;
    }

    pub fn max(&self, s: StateId) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn greedy(&self, s: StateId) -> Action {
        Action::from_index(argmax(self.row(s)))
    }

    /// Value bootstrapped from `next`; terminal transitions bootstrap zero.
    pub fn bootstrap(&self, next: Option<StateId>) -> f64 {
        next.map_or(0.0, |s| self.max(s))
    }

    /// One-step Q-learning update of entry (s, a). Returns the new value.
    pub fn update(
        &mut self,
        s: StateId,
        a: Action,
        reward: f64,
        next: Option<StateId>,
        params: &LearningParams,
    ) -> f64 {
        let target = reward + params.gamma * self.bootstrap(next);
        let entry = &mut self.values[s * Action::COUNT + a.index()];
        *entry = (1.0 - params.alpha) * *entry + params.alpha * target;
        *entry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Index of the first maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Epsilon-greedy index selection. Always consumes one uniform draw, plus
/// one more when exploring, so that rng streams stay aligned across
/// learners that share them.
pub fn epsilon_greedy_index<R: Rng + ?Sized>(values: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..values.len())
    } else {
        argmax(values)
    }
}

pub fn select_epsilon_greedy<R: Rng + ?Sized>(q: &QTable, s: StateId, epsilon: f64, rng: &mut R) -> Action {
    Action::from_index(epsilon_greedy_index(q.row(s), epsilon, rng))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelEntry {
    pub reward: f64,
    pub visits: u32,
}

/// Last observed immediate reward per (state, action). Rewards are
/// deterministic, so the last observation is the model.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardModel {
    entries: Vec<Option<ModelEntry>>,
}

impl RewardModel {
    pub fn new(n_states: usize) -> Self {
        RewardModel {
            entries: vec![None; n_states * Action::COUNT],
        }
    }

    pub fn n_states(&self) -> usize {
        self.entries.len() / Action::COUNT
    }

    pub fn record(&mut self, s: StateId, a: Action, reward: f64) {
        let e = &mut self.entries[s * Action::COUNT + a.index()];
        let visits = e.map_or(0, |e| e.visits) + 1;
        *e = Some(ModelEntry { reward, visits });
    }

    pub fn insert(&mut self, s: StateId, a: Action, entry: ModelEntry) {
        self.entries[s * Action::COUNT + a.index()] = Some(entry);
    }

    pub fn entry(&self, s: StateId, a: Action) -> Option<ModelEntry> {
        self.entries[s * Action::COUNT + a.index()]
    }

    pub fn expected(&self, s: StateId, a: Action) -> Option<f64> {
        self.entry(s, a).map(|e| e.reward)
    }

    pub fn known(&self) -> impl Iterator<Item = (StateId, Action, ModelEntry)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(k, e)| e.map(|e| (k / Action::COUNT, Action::from_index(k % Action::COUNT), e)))
    }
}

/// Output of single-agent pretraining for one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct Pretrained {
    pub q: QTable,
    pub rewards: RewardModel,
    /// Greedy action per state.
    pub policy: Vec<Action>,
}

impl Pretrained {
    pub fn from_tables(q: QTable, rewards: RewardModel) -> Self {
        let policy = (0..q.n_states()).map(|s| q.greedy(s)).collect();
        Pretrained { q, rewards, policy }
    }
}

/// Learns agent `agent`'s task alone on `map` with Q-learning.
pub fn pretrain_single_agent<R: Rng + ?Sized>(
    map: &GridMap,
    plan: &TaskPlan,
    agent: usize,
    episodes: usize,
    params: &LearningParams,
    rng: &mut R,
) -> Pretrained {
    let space = StateSpace::new(map, plan.stages(agent));
    // Optimistic start: untried actions look as good as reaching a goal, so
    // greedy steps keep probing routes the policy has not settled on.
    let mut q = QTable::filled(space.len(), map.rewards().goal);
    let mut rewards = RewardModel::new(space.len());
    let tasks = plan.tasks(agent);
    for _ in 0..episodes {
        let mut pos = map.starts()[agent];
        let mut stage = 0;
        for _ in 0..map.max_steps() {
            let s = space.id(map, pos, stage);
            let a = select_epsilon_greedy(&q, s, params.epsilon, rng);
            let out = step_single(map, pos, a, tasks[stage].target);
            rewards.record(s, a, out.reward);
            pos = out.next;
            let next = if out.reached_goal {
                stage += 1;
                (stage < tasks.len()).then(|| space.id(map, pos, stage))
            } else {
                Some(space.id(map, pos, stage))
            };
            q.update(s, a, out.reward, next, params);
            if next.is_none() {
                break;
            }
        }
    }
    Pretrained::from_tables(q, rewards)
}

/// Steps the greedy policy needs to finish every task of `agent` alone, or
/// `None` if it does not finish within `max_steps`.
pub fn greedy_path_length(map: &GridMap, plan: &TaskPlan, agent: usize, q: &QTable, max_steps: usize) -> Option<usize> {
    let space = StateSpace::new(map, plan.stages(agent));
    let tasks = plan.tasks(agent);
    let mut pos = map.starts()[agent];
    let mut stage = 0;
    for step in 1..=max_steps {
        let a = q.greedy(space.id(map, pos, stage));
        let out = step_single(map, pos, a, tasks[stage].target);
        pos = out.next;
        if out.reached_goal {
            stage += 1;
            if stage == tasks.len() {
                return Some(step);
            }
        }
    }
    None
}
