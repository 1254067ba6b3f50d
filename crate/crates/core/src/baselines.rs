//! Comparison learners: independent Q-learners started from the pretrained
//! tables (IL-VFT), and a CQ-style coordinator that shares NegoSI's
//! detection and expansion but starts local tables at zero and lets every
//! agent act greedily on its own local table.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::environments::{Action, World};
use crate::learner::{select_epsilon_greedy, LearningParams, Pretrained, QTable};
use crate::negosi::{CoordinationMode, NegoConfig, SparseLearner, StepRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    IlVft,
    CqStyle,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::IlVft => "ilvft",
            BaselineKind::CqStyle => "cq",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ilvft" | "il-vft" => Ok(BaselineKind::IlVft),
            "cq" | "cq-style" => Ok(BaselineKind::CqStyle),
            other => Err(format!("unknown baseline `{other}`")),
        }
    }
}

/// One IL-VFT iteration: every active agent picks epsilon-greedily from its
/// own table, in agent order, then learns from its own reward.
pub fn ilvft_step<R: Rng + ?Sized>(
    world: &mut World<'_>,
    q: &mut [QTable],
    params: &LearningParams,
    rng: &mut R,
) -> StepRecord {
    let n = world.n_agents();
    let states = world.states();
    let mut actions = vec![Action::Up; n];
    for i in 0..n {
        if let Some(s) = states[i] {
            actions[i] = select_epsilon_greedy(&q[i], s, params.epsilon, rng);
        }
    }
    let tr = world.step(&actions);
    for i in 0..n {
        if let Some(s) = states[i] {
            q[i].update(s, actions[i], tr.step.rewards[i], tr.next_states[i], params);
        }
    }
    StepRecord {
        transition: tr,
        coord: vec![None; n],
        negotiations: Vec::new(),
    }
}

/// Independent learners seeded with the pretrained single-agent tables.
#[derive(Clone, Debug)]
pub struct IndependentLearners {
    q: Vec<QTable>,
    params: LearningParams,
    rng: ChaCha8Rng,
}

impl IndependentLearners {
    pub fn new(pretrained: &[Pretrained], params: LearningParams, rng: ChaCha8Rng) -> Self {
        IndependentLearners {
            q: pretrained.iter().map(|p| p.q.clone()).collect(),
            params,
            rng,
        }
    }

    pub fn tables(&self) -> &[QTable] {
        &self.q
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.params.epsilon = epsilon;
    }

    pub fn step(&mut self, world: &mut World<'_>) -> StepRecord {
        ilvft_step(world, &mut self.q, &self.params, &mut self.rng)
    }
}

/// CQ-style coordinator over the pretrained tables.
pub fn cq_style(config: NegoConfig, pretrained: &[Pretrained], rng: ChaCha8Rng, nego_rng: ChaCha8Rng) -> SparseLearner {
    SparseLearner::new(CoordinationMode::GreedyLocal, config, pretrained, rng, nego_rng)
        .expect("greedy-local coordination needs no source tables")
}

pub fn cq_style_step(learner: &mut SparseLearner, world: &mut World<'_>) -> StepRecord {
    learner.step(world)
}
