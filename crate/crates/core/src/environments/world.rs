//! Mutable episode state on top of a [`GridMap`]: per-agent goal sequences,
//! positions, activity, and the individual state index used by Q-tables.

use rand::seq::SliceRandom;
use rand::Rng;

use super::dynamics::{step_joint, JointStep};
use super::map::{Action, Cell, Goals, GridMap};

/// Index of an individual state: a free cell paired with the agent's task
/// number (always 0 on grid maps).
pub type StateId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WarehouseTask {
    pub target: Cell,
    pub index: usize,
}

/// The ordered goals of every agent for one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskPlan {
    tasks: Vec<Vec<WarehouseTask>>,
}

impl TaskPlan {
    /// Goal lists for a fixed-goal map. Panics on warehouse maps.
    pub fn fixed(map: &GridMap) -> TaskPlan {
        match map.goals() {
            Goals::Fixed(goals) => TaskPlan {
                tasks: goals
                    .iter()
                    .map(|&target| vec![WarehouseTask { target, index: 0 }])
                    .collect(),
            },
            Goals::Tasks { .. } => panic!("warehouse maps need a generated task plan"),
        }
    }

    /// Draws `per_agent` targets for every agent. Targets are free cells
    /// next to a shelf; consecutive targets of one agent differ, and the
    /// first differs from the agent's start.
    pub fn random<R: Rng + ?Sized>(map: &GridMap, per_agent: usize, rng: &mut R) -> TaskPlan {
        let mut candidates: Vec<Cell> = map
            .free_cells()
            .iter()
            .copied()
            .filter(|&c| {
                Action::ALL
                    .iter()
                    .any(|&a| map.neighbor(c, a).is_some_and(|n| map.is_blocked(n)))
            })
            .collect();
        if candidates.len() < 2 {
            candidates = map.free_cells().to_vec();
        }
        let tasks = map
            .starts()
            .iter()
            .map(|&start| {
                let mut prev = start;
                (0..per_agent)
                    .map(|index| {
                        let target = loop {
                            let c = *candidates.choose(rng).expect("map has free cells");
                            if c != prev {
                                break c;
                            }
                        };
                        prev = target;
                        WarehouseTask { target, index }
                    })
                    .collect()
            })
            .collect();
        TaskPlan { tasks }
    }

    /// Fixed goals for grid maps, seeded random tasks for warehouse maps.
    pub fn for_map<R: Rng + ?Sized>(map: &GridMap, rng: &mut R) -> TaskPlan {
        match map.goals() {
            Goals::Fixed(_) => TaskPlan::fixed(map),
            Goals::Tasks { per_agent } => TaskPlan::random(map, *per_agent, rng),
        }
    }

    pub fn from_tasks(tasks: Vec<Vec<WarehouseTask>>) -> TaskPlan {
        TaskPlan { tasks }
    }

    pub fn n_agents(&self) -> usize {
        self.tasks.len()
    }

    pub fn tasks(&self, agent: usize) -> &[WarehouseTask] {
        &self.tasks[agent]
    }

    pub fn stages(&self, agent: usize) -> usize {
        self.tasks[agent].len()
    }

    pub fn max_stages(&self) -> usize {
        self.tasks.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn target(&self, agent: usize, stage: usize) -> Option<Cell> {
        self.tasks[agent].get(stage).map(|t| t.target)
    }

    /// Serialized as `agent index row col` lines (agents numbered from 1).
    pub fn to_text(&self) -> String {
        let mut out = String::from("# agent task row col\n");
        for (i, list) in self.tasks.iter().enumerate() {
            for t in list {
                out.push_str(&format!("{} {} {} {}\n", i + 1, t.index, t.target.row, t.target.col));
            }
        }
        out
    }

    pub fn from_text(text: &str, n_agents: usize) -> Result<TaskPlan, String> {
        let mut tasks = vec![Vec::new(); n_agents];
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| format!("line {}: bad number `{t}`", ln + 1)))
                .collect::<Result<_, _>>()?;
            let [agent, index, row, col] = nums[..] else {
                return Err(format!("line {}: expected `agent index row col`", ln + 1));
            };
            if agent == 0 || agent > n_agents {
                return Err(format!("line {}: agent {agent} out of range", ln + 1));
            }
            let list: &mut Vec<WarehouseTask> = &mut tasks[agent - 1];
            if index != list.len() {
                return Err(format!("line {}: tasks must be listed in order", ln + 1));
            }
            list.push(WarehouseTask {
                target: Cell::new(row, col),
                index,
            });
        }
        if tasks.iter().any(Vec::is_empty) {
            return Err("every agent needs at least one task".into());
        }
        Ok(TaskPlan { tasks })
    }
}

/// Target following task `completed`, or `None` once the list is exhausted.
pub fn next_warehouse_goal(tasks: &[WarehouseTask], completed: usize) -> Option<Cell> {
    tasks.get(completed + 1).map(|t| t.target)
}

/// Maps (cell, stage) pairs to dense state indices and back.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateSpace {
    free: usize,
    stages: usize,
}

impl StateSpace {
    pub fn new(map: &GridMap, stages: usize) -> Self {
        StateSpace {
            free: map.free_count(),
            stages: stages.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.free * self.stages
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn id(&self, map: &GridMap, cell: Cell, stage: usize) -> StateId {
        debug_assert!(stage < self.stages);
        stage * self.free + map.free_index(cell).expect("state cell must be free")
    }

    pub fn cell(&self, map: &GridMap, id: StateId) -> Cell {
        map.free_cells()[id % self.free]
    }

    pub fn stage(&self, id: StateId) -> usize {
        id / self.free
    }
}

/// Everything that happened in one joint step.
#[derive(Clone, Debug)]
pub struct Transition {
    /// Individual state before the step, `None` for agents already finished.
    pub states: Vec<Option<StateId>>,
    pub actions: Vec<Action>,
    pub step: JointStep,
    /// Individual state after the step; `None` when the agent is finished
    /// (terminal) or was not acting.
    pub next_states: Vec<Option<StateId>>,
    /// All agents have exhausted their goals.
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct World<'a> {
    map: &'a GridMap,
    plan: &'a TaskPlan,
    spaces: Vec<StateSpace>,
    positions: Vec<Cell>,
    stages: Vec<usize>,
    active: Vec<bool>,
}

impl<'a> World<'a> {
    pub fn new(map: &'a GridMap, plan: &'a TaskPlan) -> Self {
        assert_eq!(map.n_agents(), plan.n_agents(), "task plan must cover every agent");
        let spaces = (0..map.n_agents())
            .map(|i| StateSpace::new(map, plan.stages(i)))
            .collect();
        let mut w = World {
            map,
            plan,
            spaces,
            positions: Vec::new(),
            stages: Vec::new(),
            active: Vec::new(),
        };
        w.reset();
        w
    }

    pub fn reset(&mut self) {
        let n = self.map.n_agents();
        self.positions = self.map.starts().to_vec();
        self.stages = vec![0; n];
        self.active = vec![true; n];
    }

    pub fn map(&self) -> &'a GridMap {
        self.map
    }

    pub fn plan(&self) -> &'a TaskPlan {
        self.plan
    }

    pub fn n_agents(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Cell] {
        &self.positions
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn is_active(&self, agent: usize) -> bool {
        self.active[agent]
    }

    pub fn stage(&self, agent: usize) -> usize {
        self.stages[agent]
    }

    pub fn space(&self, agent: usize) -> StateSpace {
        self.spaces[agent]
    }

    pub fn is_done(&self) -> bool {
        self.active.iter().all(|&a| !a)
    }

    pub fn goal(&self, agent: usize) -> Option<Cell> {
        self.plan.target(agent, self.stages[agent])
    }

    /// Current individual state, `None` once the agent has finished.
    pub fn state(&self, agent: usize) -> Option<StateId> {
        self.active[agent].then(|| self.spaces[agent].id(self.map, self.positions[agent], self.stages[agent]))
    }

    pub fn states(&self) -> Vec<Option<StateId>> {
        (0..self.n_agents()).map(|i| self.state(i)).collect()
    }

    /// Executes one joint action. Actions of finished agents are ignored.
    pub fn step(&mut self, actions: &[Action]) -> Transition {
        let states = self.states();
        let goals: Vec<Cell> = (0..self.n_agents())
            .map(|i| self.goal(i).unwrap_or(self.positions[i]))
            .collect();
        let step = step_joint(self.map, &self.positions, actions, &goals, &self.active);
        self.positions.clone_from(&step.next_positions);
        for i in 0..self.n_agents() {
            if !step.reached_goal[i] {
                continue;
            }
            self.active[i] = match next_warehouse_goal(self.plan.tasks(i), self.stages[i]) {
                Some(_) => {
                    self.stages[i] += 1;
                    true
                }
                None => false,
            };
        }
        let next_states = (0..self.n_agents())
            .map(|i| if states[i].is_some() { self.state(i) } else { None })
            .collect();
        Transition {
            states,
            actions: actions.to_vec(),
            step,
            next_states,
            done: self.is_done(),
        }
    }
}
