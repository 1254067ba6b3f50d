use std::collections::HashMap;

use rand::seq::index::sample;
use rand::Rng;

use super::{RelativeState, SourceTaskQ};
use crate::environments::{resolve_moves, Action, Cell, Goals, GridMap};
use crate::equilibrium::JointSpace;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceTaskConfig {
    /// Side of the blank square grid.
    pub grid_size: usize,
    pub steps: usize,
    /// Agents are re-placed at random every `episode_len` steps.
    pub episode_len: usize,
    /// Floor of the per-entry step size `max(alpha, 1 / visits)`.
    pub alpha: f64,
    pub penalty: f64,
}

impl Default for SourceTaskConfig {
    fn default() -> Self {
        SourceTaskConfig {
            grid_size: 5,
            steps: 1_000_000,
            episode_len: 50,
            alpha: 0.1,
            penalty: -10.0,
        }
    }
}

/// Per-agent penalty flags for one joint move: an agent is penalized when it
/// and another agent head for the same cell or try to swap cells. Moves off
/// the grid have no target and never conflict.
pub fn collision_penalties(map: &GridMap, positions: &[Cell], actions: &[Action]) -> Vec<bool> {
    let n = positions.len();
    let targets: Vec<Option<Cell>> = (0..n)
        .map(|i| map.neighbor(positions[i], actions[i]).filter(|&t| !map.is_blocked(t)))
        .collect();
    let mut hit = vec![false; n];
    for i in 0..n {
        let Some(ti) = targets[i] else { continue };
        for j in (i + 1)..n {
            let Some(tj) = targets[j] else { continue };
            if ti == tj || (ti == positions[j] && tj == positions[i]) {
                hit[i] = true;
                hit[j] = true;
            }
        }
    }
    hit
}

fn blank_map(size: usize, n_agents: usize) -> GridMap {
    let starts = (0..n_agents).map(|i| Cell::new(i / size, i % size)).collect();
    GridMap::new("blank", size, size, &[], starts, Goals::Tasks { per_agent: 0 }).expect("blank grid is valid")
}

/// Trains joint-action learners on a blank grid under uniformly random joint
/// actions. With no discounting each entry converges to the immediate
/// collision penalty of its joint action.
///
/// Early visits of an entry average its samples (step size `1 / visits`)
/// before settling at `alpha`. A constant step of 0.1 stalls a few ulps
/// short of the penalty in floating point; averaging lands on it exactly.
pub fn train_source_task<R: Rng + ?Sized>(n_agents: usize, config: &SourceTaskConfig, rng: &mut R) -> SourceTaskQ {
    let size = config.grid_size;
    assert!(n_agents >= 2 && n_agents <= size * size, "agents must fit on the grid");
    assert!(config.episode_len >= 1, "episodes need at least one step");
    let map = blank_map(size, n_agents);
    let space = JointSpace::new(&vec![Action::COUNT; n_agents]);
    let active = vec![true; n_agents];
    let mut q = SourceTaskQ::new(n_agents);
    let mut visits: HashMap<RelativeState, Vec<u32>> = HashMap::new();
    let mut positions = Vec::new();
    for step in 0..config.steps {
        if step % config.episode_len == 0 {
            positions = sample(rng, size * size, n_agents)
                .into_iter()
                .map(|k| Cell::new(k / size, k % size))
                .collect();
        }
        let joint = rng.gen_range(0..space.size());
        let actions: Vec<Action> = space.decode(joint).0.into_iter().map(Action::from_index).collect();
        let rel = RelativeState::of(&positions);
        let hit = collision_penalties(&map, &positions, &actions);
        let count = &mut visits.entry(rel.clone()).or_insert_with(|| vec![0; space.size()])[joint];
        *count = count.saturating_add(1);
        let rate = config.alpha.max(1.0 / f64::from(*count));
        for (agent, &h) in hit.iter().enumerate() {
            let r = if h { config.penalty } else { 0.0 };
            let e = &mut q.entry_mut(agent, &rel)[joint];
            *e += rate * (r - *e);
        }
        let res = resolve_moves(&map, &positions, &actions, &active);
        for i in 0..n_agents {
            if !res.bounced[i] {
                positions[i] = res.targets[i].expect("unbounced agent has a target");
            }
        }
    }
    for agent in 0..n_agents {
        log::debug!(
            "source task: agent {} visited {} relative states",
            agent + 1,
            q.len(agent)
        );
    }
    q
}
