use super::map::{Action, Cell, GridMap};

/// Outcome of a single agent moving alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleStep {
    pub next: Cell,
    pub reward: f64,
    pub reached_goal: bool,
}

/// Outcome of one simultaneous move of all agents.
#[derive(Clone, Debug, PartialEq)]
pub struct JointStep {
    pub next_positions: Vec<Cell>,
    pub rewards: Vec<f64>,
    pub bounced: Vec<bool>,
    /// Bounced because of another agent (as opposed to a wall or the border).
    pub collided: Vec<bool>,
    pub reached_goal: Vec<bool>,
    /// Activity after the step; agents that reached their goal drop out.
    pub active: Vec<bool>,
    pub done: bool,
}

impl JointStep {
    pub fn any_collision(&self) -> bool {
        self.collided.iter().any(|&c| c)
    }
}

pub fn step_single(map: &GridMap, pos: Cell, action: Action, goal: Cell) -> SingleStep {
    let rewards = map.rewards();
    match map.neighbor(pos, action).filter(|&t| !map.is_blocked(t)) {
        None => SingleStep {
            next: pos,
            reward: rewards.wall,
            reached_goal: false,
        },
        Some(t) if t == goal => SingleStep {
            next: t,
            reward: rewards.goal,
            reached_goal: true,
        },
        Some(t) => SingleStep {
            next: t,
            reward: rewards.step,
            reached_goal: false,
        },
    }
}

/// Per-agent bounce resolution shared by the environment and the blank
/// source task.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    /// Tentative target, `None` when it lies off-grid or on a blocked cell.
    pub targets: Vec<Option<Cell>>,
    pub bounced: Vec<bool>,
    pub collided: Vec<bool>,
}

/// Resolves simultaneous moves of the active agents.
///
/// An active agent bounces when its target is off-grid or blocked, when it
/// shares a target with another active agent, when it swaps cells with one,
/// or when its target is the cell of an agent that itself bounced. The last
/// rule is applied until nothing changes.
pub fn resolve_moves(map: &GridMap, positions: &[Cell], actions: &[Action], active: &[bool]) -> Resolution {
    let n = positions.len();
    let mut targets = vec![None; n];
    let mut bounced = vec![false; n];
    let mut collided = vec![false; n];
    for i in (0..n).filter(|&i| active[i]) {
        match map.neighbor(positions[i], actions[i]).filter(|&t| !map.is_blocked(t)) {
            Some(t) => targets[i] = Some(t),
            None => bounced[i] = true,
        }
    }
    for i in 0..n {
        let Some(ti) = targets[i] else { continue };
        for j in (i + 1)..n {
            let Some(tj) = targets[j] else { continue };
            let same_target = ti == tj;
            let swap = ti == positions[j] && tj == positions[i];
            if same_target || swap {
                for k in [i, j] {
                    bounced[k] = true;
                    collided[k] = true;
                }
            }
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            let Some(ti) = targets[i] else { continue };
            if bounced[i] {
                continue;
            }
            let blocked_by_stayer = (0..n).any(|j| j != i && active[j] && bounced[j] && positions[j] == ti);
            if blocked_by_stayer {
                bounced[i] = true;
                collided[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Resolution {
        targets,
        bounced,
        collided,
    }
}

/// One joint move. Inactive agents do not move, earn nothing and are
/// invisible to collision checks.
pub fn step_joint(map: &GridMap, positions: &[Cell], actions: &[Action], goals: &[Cell], active: &[bool]) -> JointStep {
    let n = positions.len();
    assert!(
        actions.len() == n && goals.len() == n && active.len() == n,
        "per-agent slices must agree in length"
    );
    let rewards = map.rewards();
    let res = resolve_moves(map, positions, actions, active);
    let mut next_positions = positions.to_vec();
    let mut step_rewards = vec![0.0; n];
    let mut reached_goal = vec![false; n];
    let mut next_active = active.to_vec();
    for i in (0..n).filter(|&i| active[i]) {
        if res.bounced[i] {
            step_rewards[i] = if res.collided[i] {
                rewards.collision
            } else {
                rewards.wall
            };
            continue;
        }
        let t = res.targets[i].expect("unbounced agent has a target");
        next_positions[i] = t;
        if t == goals[i] {
            step_rewards[i] = rewards.goal;
            reached_goal[i] = true;
            next_active[i] = false;
        } else {
            step_rewards[i] = rewards.step;
        }
    }
    let done = next_active.iter().all(|&a| !a);
    JointStep {
        next_positions,
        rewards: step_rewards,
        bounced: res.bounced,
        collided: res.collided,
        reached_goal,
        active: next_active,
        done,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::map::load_map;
    use Action::*;

    fn open(h: usize, w: usize, n: usize) -> GridMap {
        let mut s = format!("map open {h} {w} {n}\n");
        for _ in 0..h {
            s.push_str(&".".repeat(w));
            s.push('\n');
        }
        // starts along the first column, or along the row on 1-row maps
        for i in 0..n {
            let (r, c) = if h > 1 { (i, 0) } else { (0, i) };
            s.push_str(&format!(
                "agent {} start {r} {c} goal {} {}\n",
                i + 1,
                h - 1,
                if i == 0 { w - 1 } else { 0 }
            ));
        }
        load_map(&s).unwrap()
    }

    #[test]
    fn single_free_move_costs_one() {
        let m = open(3, 3, 1);
        let s = step_single(&m, Cell::new(1, 1), Up, Cell::new(2, 2));
        assert_eq!(
            s,
            SingleStep {
                next: Cell::new(0, 1),
                reward: -1.0,
                reached_goal: false
            }
        );
    }

    #[test]
    fn single_border_bounces() {
        let m = open(3, 3, 1);
        let s = step_single(&m, Cell::new(0, 1), Up, Cell::new(2, 2));
        assert_eq!(
            s,
            SingleStep {
                next: Cell::new(0, 1),
                reward: -10.0,
                reached_goal: false
            }
        );
    }

    #[test]
    fn single_goal_pays_hundred() {
        let m = open(3, 3, 1);
        let s = step_single(&m, Cell::new(2, 1), Right, Cell::new(2, 2));
        assert_eq!(
            s,
            SingleStep {
                next: Cell::new(2, 2),
                reward: 100.0,
                reached_goal: true
            }
        );
    }

    #[test]
    fn single_wall_bounces() {
        let m = load_map("map w 1 3 1\n.#.\nagent 1 start 0 0 goal 0 2\n").unwrap();
        let s = step_single(&m, Cell::new(0, 0), Right, Cell::new(0, 2));
        assert_eq!(s.next, Cell::new(0, 0));
        assert_eq!(s.reward, -10.0);
    }

    #[test]
    fn same_target_both_bounce() {
        let m = open(3, 3, 2);
        let pos = [Cell::new(0, 0), Cell::new(0, 2)];
        let goals = [Cell::new(2, 2), Cell::new(2, 0)];
        let js = step_joint(&m, &pos, &[Right, Left], &goals, &[true, true]);
        assert_eq!(js.next_positions, pos.to_vec());
        assert_eq!(js.rewards, vec![-10.0, -10.0]);
        assert_eq!(js.collided, vec![true, true]);
    }

    #[test]
    fn swap_both_bounce() {
        let m = open(3, 3, 2);
        let pos = [Cell::new(1, 0), Cell::new(1, 1)];
        let goals = [Cell::new(2, 2), Cell::new(2, 0)];
        let js = step_joint(&m, &pos, &[Right, Left], &goals, &[true, true]);
        assert_eq!(js.next_positions, pos.to_vec());
        assert_eq!(js.rewards, vec![-10.0, -10.0]);
    }

    #[test]
    fn disjoint_moves_cost_one_each() {
        let m = open(3, 3, 2);
        let pos = [Cell::new(0, 0), Cell::new(2, 2)];
        let goals = [Cell::new(1, 1), Cell::new(0, 2)];
        let js = step_joint(&m, &pos, &[Right, Left], &goals, &[true, true]);
        assert_eq!(js.next_positions, vec![Cell::new(0, 1), Cell::new(2, 1)]);
        assert_eq!(js.rewards, vec![-1.0, -1.0]);
        assert_eq!(js.bounced, vec![false, false]);
    }

    #[test]
    fn chain_bounce_propagates() {
        // A at (0,1) walks into the top border; B at (1,1) moves up into A's cell.
        let m = open(3, 3, 2);
        let pos = [Cell::new(0, 1), Cell::new(1, 1)];
        let goals = [Cell::new(2, 2), Cell::new(2, 0)];
        let js = step_joint(&m, &pos, &[Up, Up], &goals, &[true, true]);
        assert_eq!(js.next_positions, pos.to_vec());
        assert_eq!(js.bounced, vec![true, true]);
        assert_eq!(js.collided, vec![false, true]);
        assert_eq!(js.rewards, vec![-10.0, -10.0]);
    }

    #[test]
    fn following_a_mover_is_allowed() {
        let m = open(1, 4, 2);
        let pos = [Cell::new(0, 1), Cell::new(0, 0)];
        let goals = [Cell::new(0, 3), Cell::new(0, 3)];
        let js = step_joint(&m, &pos, &[Right, Right], &goals, &[true, true]);
        assert_eq!(js.next_positions, vec![Cell::new(0, 2), Cell::new(0, 1)]);
        assert_eq!(js.bounced, vec![false, false]);
    }

    #[test]
    fn inactive_agents_are_invisible() {
        let m = open(1, 3, 2);
        let pos = [Cell::new(0, 0), Cell::new(0, 1)];
        let goals = [Cell::new(0, 2), Cell::new(0, 1)];
        let js = step_joint(&m, &pos, &[Right, Up], &goals, &[true, false]);
        assert_eq!(js.next_positions[0], Cell::new(0, 1));
        assert_eq!(js.rewards, vec![-1.0, 0.0]);
    }

    #[test]
    fn goal_arrival_deactivates() {
        let m = open(1, 3, 2);
        let pos = [Cell::new(0, 1), Cell::new(0, 0)];
        let goals = [Cell::new(0, 2), Cell::new(0, 2)];
        let js = step_joint(&m, &pos, &[Right, Up], &goals, &[true, true]);
        assert_eq!(js.reached_goal, vec![true, false]);
        assert_eq!(js.active, vec![false, true]);
        assert!(!js.done);
        let js2 = step_joint(&m, &js.next_positions, &[Up, Right], &goals, &js.active);
        assert_eq!(js2.next_positions[1], Cell::new(0, 1));
        assert!(!js2.done);
    }
}
