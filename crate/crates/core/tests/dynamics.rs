use negosi_core::environments::{load_map, step_joint, Action, Cell, GridMap};
use negosi_core::transfer::{collision_penalties, RelativeState};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random small map with `n` agents on distinct free cells.
fn random_map(rng: &mut ChaCha8Rng, n: usize) -> GridMap {
    loop {
        let h = rng.gen_range(1..=5);
        let w = rng.gen_range(2..=5);
        let rows: Vec<String> = (0..h)
            .map(|_| (0..w).map(|_| if rng.gen_bool(0.2) { '#' } else { '.' }).collect())
            .collect();
        let free: Vec<(usize, usize)> = (0..h)
            .flat_map(|r| (0..w).map(move |c| (r, c)))
            .filter(|&(r, c)| rows[r].as_bytes()[c] == b'.')
            .collect();
        if free.len() < n + 1 {
            continue;
        }
        let starts: Vec<_> = free.choose_multiple(rng, n).copied().collect();
        let mut text = format!("map rand {h} {w} {n}\n{}\n", rows.join("\n"));
        for (i, s) in starts.iter().enumerate() {
            let g = loop {
                let g = *free.choose(rng).unwrap();
                if g != *s {
                    break g;
                }
            };
            text.push_str(&format!("agent {} start {} {} goal {} {}\n", i + 1, s.0, s.1, g.0, g.1));
        }
        return load_map(&text).unwrap();
    }
}

fn target(map: &GridMap, c: Cell, a: Action) -> Option<Cell> {
    let (dr, dc) = match a {
        Action::Up => (-1, 0),
        Action::Down => (1, 0),
        Action::Left => (0, -1),
        Action::Right => (0, 1),
    };
    let r = c.row as isize + dr;
    let col = c.col as isize + dc;
    if r < 0 || col < 0 || r as usize >= map.height() || col as usize >= map.width() {
        return None;
    }
    let t = Cell::new(r as usize, col as usize);
    (!map.is_blocked(t)).then_some(t)
}

/// Fixed point of the bounce rules, written independently of the crate.
fn oracle_stays(map: &GridMap, pos: &[Cell], acts: &[Action], active: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let n = pos.len();
    let want: Vec<Option<Cell>> = (0..n)
        .map(|i| if active[i] { target(map, pos[i], acts[i]) } else { None })
        .collect();
    let mut stays: Vec<bool> = (0..n).map(|i| active[i] && want[i].is_none()).collect();
    let mut by_agent = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                if let (Some(a), Some(b)) = (want[i], want[j]) {
                    if a == b || (a == pos[j] && b == pos[i]) {
                        stays[i] = true;
                        by_agent[i] = true;
                    }
                }
            }
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if stays[i] || want[i].is_none() {
                continue;
            }
            if (0..n).any(|j| j != i && active[j] && stays[j] && Some(pos[j]) == want[i]) {
                stays[i] = true;
                by_agent[i] = true;
                changed = true;
            }
        }
    }
    (stays, by_agent)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn joint_step_matches_oracle_and_never_stacks_agents(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(&mut rng, n);
        let goals: Vec<Cell> = match map.goals() {
            negosi_core::environments::Goals::Fixed(g) => g.clone(),
            _ => unreachable!(),
        };
        let mut pos = map.starts().to_vec();
        let mut active = vec![true; n];
        for _ in 0..30 {
            if active.iter().all(|a| !a) {
                break;
            }
            let acts: Vec<Action> = (0..n).map(|_| Action::ALL[rng.gen_range(0..4)]).collect();
            let out = step_joint(&map, &pos, &acts, &goals, &active);
            let (stays, by_agent) = oracle_stays(&map, &pos, &acts, &active);
            for i in 0..n {
                if !active[i] {
                    prop_assert_eq!(out.next_positions[i], pos[i]);
                    prop_assert_eq!(out.rewards[i], 0.0);
                    continue;
                }
                prop_assert_eq!(out.bounced[i], stays[i]);
                prop_assert_eq!(out.collided[i], by_agent[i]);
                let expected = if stays[i] {
                    -10.0
                } else if target(&map, pos[i], acts[i]) == Some(goals[i]) {
                    100.0
                } else {
                    -1.0
                };
                prop_assert_eq!(out.rewards[i], expected);
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    if out.active[i] && out.active[j] {
                        prop_assert_ne!(out.next_positions[i], out.next_positions[j]);
                    }
                }
            }
            pos = out.next_positions;
            active = out.active;
        }
    }

    #[test]
    fn relative_state_flips_sign_when_two_agents_swap_order(
        a in (0usize..20, 0usize..20),
        b in (0usize..20, 0usize..20),
    ) {
        let (ca, cb) = (Cell::new(a.0, a.1), Cell::new(b.0, b.1));
        let ab = RelativeState::of(&[ca, cb]);
        let ba = RelativeState::of(&[cb, ca]);
        let neg: Vec<i32> = ab.components().iter().map(|v| -v).collect();
        prop_assert_eq!(ba.components(), neg.as_slice());
    }
}

#[test]
fn three_agent_penalties_match_brute_force() {
    let map = load_map("map blank 6 6 3\n......\n......\n......\n......\n......\n......\nagent 1 start 0 0 goal 5 5\nagent 2 start 0 1 goal 5 4\nagent 3 start 0 2 goal 5 3\n").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cells = map.free_cells().to_vec();
    for _ in 0..300 {
        let pos: Vec<Cell> = cells.choose_multiple(&mut rng, 3).copied().collect();
        for j in 0..64 {
            let acts = [Action::ALL[j / 16], Action::ALL[(j / 4) % 4], Action::ALL[j % 4]];
            let t: Vec<Option<Cell>> = (0..3).map(|i| target(&map, pos[i], acts[i])).collect();
            let expected: Vec<bool> = (0..3)
                .map(|i| {
                    (0..3).any(|k| {
                        k != i
                            && t[i].is_some()
                            && t[k].is_some()
                            && (t[i] == t[k] || (t[i] == Some(pos[k]) && t[k] == Some(pos[i])))
                    })
                })
                .collect();
            assert_eq!(collision_penalties(&map, &pos, &acts), expected, "{pos:?} {acts:?}");
        }
    }
}
