use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::{
    detect_reward_change, form_groups, greedy_local_joint_action, negosi_joint_action, perturb, AgentTables, CoordKey,
    NegoConfig,
};
use crate::environments::{Action, Cell, StateId, Transition, World};
use crate::equilibrium::{JointAction, JointSpace};
use crate::learner::{select_epsilon_greedy, Pretrained};
use crate::transfer::{init_local_q, zero_local_q, RelativeState, SourceLibrary, TransferError};

/// How a coordination state is initialized and how its joint action is
/// chosen.
#[derive(Clone, Debug)]
pub enum CoordinationMode {
    /// Hybrid transfer initialization and equilibrium negotiation.
    Negotiate(Arc<SourceLibrary>),
    /// Zero initialization and per-agent greedy choice over the local table.
    GreedyLocal,
}

/// One coordinated choice made during a step.
#[derive(Clone, Debug, PartialEq)]
pub struct NegotiationRecord {
    pub participants: Vec<usize>,
    /// Joint action chosen before exploration.
    pub chosen: JointAction,
    /// Members of the negotiated equilibrium set (empty for greedy choice).
    pub candidates: Vec<JointAction>,
}

#[derive(Clone, Debug)]
pub struct StepRecord {
    pub transition: Transition,
    /// Pool index of the coordination state each agent acted in.
    pub coord: Vec<Option<usize>>,
    pub negotiations: Vec<NegotiationRecord>,
}

impl StepRecord {
    /// `episode step agent state action reward [coord-state]`, one line per
    /// acting agent.
    pub fn trace_lines(&self, episode: usize, step: usize) -> String {
        let mut out = String::new();
        let t = &self.transition;
        for (i, s) in t.states.iter().enumerate() {
            let Some(s) = s else { continue };
            let _ = write!(
                out,
                "{episode} {step} {} {s} {} {}",
                i + 1,
                t.actions[i],
                t.step.rewards[i]
            );
            if let Some(c) = self.coord[i] {
                let _ = write!(out, " {c}");
            }
            out.push('\n');
        }
        out
    }
}

/// NegoSI and the CQ-style baseline: independent learners that expand into
/// joint coordination states where their rewards reveal interaction.
#[derive(Clone, Debug)]
pub struct SparseLearner {
    mode: CoordinationMode,
    config: NegoConfig,
    agents: Vec<AgentTables>,
    rng: ChaCha8Rng,
    nego_rng: ChaCha8Rng,
    warned: HashSet<(usize, StateId, Action)>,
}

impl SparseLearner {
    /// `rng` drives action selection; `nego_rng` only draws metagame
    /// prefixes.
    pub fn new(
        mode: CoordinationMode,
        config: NegoConfig,
        pretrained: &[Pretrained],
        rng: ChaCha8Rng,
        nego_rng: ChaCha8Rng,
    ) -> Result<Self, TransferError> {
        if let CoordinationMode::Negotiate(lib) = &mode {
            lib.require_up_to(pretrained.len())?;
        }
        Ok(SparseLearner {
            mode,
            config,
            agents: pretrained
                .iter()
                .map(|p| AgentTables::new(p.q.clone(), p.rewards.clone()))
                .collect(),
            rng,
            nego_rng,
            warned: HashSet::new(),
        })
    }

    pub fn agents(&self) -> &[AgentTables] {
        &self.agents
    }

    pub fn config(&self) -> &NegoConfig {
        &self.config
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.config.params.epsilon = epsilon;
    }

    pub fn coordination_states(&self) -> usize {
        self.agents.iter().map(|a| a.pool.len()).sum()
    }

    /// Pool index of the (participants, joint state) entry in each
    /// participant's pool, creating missing entries.
    fn ensure_state(&mut self, group: &[usize], states: &[Option<StateId>], positions: &[Cell]) -> Vec<usize> {
        let joint_state: Vec<StateId> = group
            .iter()
            .map(|&i| states[i].expect("participants are active"))
            .collect();
        let cells: Vec<Cell> = group.iter().map(|&i| positions[i]).collect();
        group
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let key = CoordKey {
                    participants: group.to_vec(),
                    joint_state: joint_state.clone(),
                };
                let agent = &mut self.agents[i];
                let row = agent.q.row(joint_state[k]).to_vec();
                let mode = &self.mode;
                let (idx, created) = agent.pool.get_or_create(key, || match mode {
                    CoordinationMode::Negotiate(lib) => {
                        let source = lib.get(group.len()).expect("library checked at construction");
                        init_local_q(&row, source, &RelativeState::of(&cells), k).expect("group size matches source")
                    }
                    CoordinationMode::GreedyLocal => zero_local_q(group.len()),
                });
                if created {
                    log::debug!("agent {} expands joint state {:?} of {:?}", i + 1, joint_state, group);
                }
                idx
            })
            .collect()
    }

    fn changed(&mut self, agent: usize, s: StateId, a: Action, observed: f64) -> bool {
        let model = &self.agents[agent].rewards;
        if model.entry(s, a).is_none() {
            if self.warned.insert((agent, s, a)) {
                log::warn!("agent {}: no reward model entry for state {s} action {a}", agent + 1);
            }
            return false;
        }
        detect_reward_change(model, s, a, observed)
    }

    /// One iteration: propose, coordinate where dangerous, act, detect,
    /// then update local and global values.
    pub fn step(&mut self, world: &mut World<'_>) -> StepRecord {
        let n = world.n_agents();
        let states = world.states();
        let positions = world.positions().to_vec();
        let params = self.config.params;

        let mut actions = vec![Action::Up; n];
        for i in 0..n {
            if let Some(s) = states[i] {
                actions[i] = select_epsilon_greedy(&self.agents[i].q, s, params.epsilon, &mut self.rng);
            }
        }

        let flagged: Vec<usize> = (0..n)
            .filter(|&i| states[i].is_some_and(|s| self.agents[i].is_dangerous(s, actions[i])))
            .collect();
        let mut coord = vec![None; n];
        let mut negotiations = Vec::new();
        let mut acted: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for group in form_groups(&flagged, &positions, self.config.comm_range) {
            if group.len() < 2 {
                continue;
            }
            let idx = self.ensure_state(&group, &states, &positions);
            let tables: Vec<&[f64]> = group
                .iter()
                .zip(&idx)
                .map(|(&i, &k)| self.agents[i].pool.get(k).local_q.as_slice())
                .collect();
            let (chosen, candidates, played) = match &self.mode {
                CoordinationMode::Negotiate(_) => {
                    let (out, played) = negosi_joint_action(&tables, params.epsilon, &mut self.rng, &mut self.nego_rng);
                    (out.selected, out.set.members, played)
                }
                CoordinationMode::GreedyLocal => {
                    let chosen = greedy_local_joint_action(&tables);
                    let played = perturb(&chosen, params.epsilon, &mut self.rng);
                    (chosen, Vec::new(), played)
                }
            };
            for (k, &i) in group.iter().enumerate() {
                actions[i] = played[k];
                coord[i] = Some(idx[k]);
            }
            negotiations.push(NegotiationRecord {
                participants: group.clone(),
                chosen,
                candidates,
            });
            acted.push((group, idx));
        }

        let tr = world.step(&actions);

        let mut changed = Vec::new();
        for i in 0..n {
            if let Some(s) = states[i] {
                if self.changed(i, s, actions[i], tr.step.rewards[i]) {
                    self.agents[i].dangerous.insert((s, actions[i]));
                    changed.push(i);
                }
            }
        }
        for group in form_groups(&changed, &positions, self.config.comm_range) {
            if group.len() < 2 {
                continue;
            }
            let idx = self.ensure_state(&group, &states, &positions);
            let joint = joint_index(&group, &actions);
            for (&i, &k) in group.iter().zip(&idx) {
                self.agents[i].pool.get_mut(k).coordination_pairs.insert(joint);
            }
            if !acted.iter().any(|(g, x)| *g == group && *x == idx) {
                acted.push((group, idx));
            }
        }

        for (group, idx) in &acted {
            let joint = joint_index(group, &actions);
            for (&i, &k) in group.iter().zip(idx) {
                let agent = &mut self.agents[i];
                let target = tr.step.rewards[i] + params.gamma * agent.q.bootstrap(tr.next_states[i]);
                let e = &mut agent.pool.get_mut(k).local_q[joint];
                *e = (1.0 - params.alpha) * *e + params.alpha * target;
            }
        }

        for i in 0..n {
            if let Some(s) = states[i] {
                self.agents[i]
                    .q
                    .update(s, actions[i], tr.step.rewards[i], tr.next_states[i], &params);
            }
        }

        StepRecord {
            transition: tr,
            coord,
            negotiations,
        }
    }
}

fn joint_index(group: &[usize], actions: &[Action]) -> usize {
    let space = JointSpace::new(&vec![Action::COUNT; group.len()]);
    let joint: Vec<usize> = group.iter().map(|&i| actions[i].index()).collect();
    space.encode(&joint)
}

/// One NegoSI iteration on `world`.
pub fn negosi_step(learner: &mut SparseLearner, world: &mut World<'_>) -> StepRecord {
    learner.step(world)
}
