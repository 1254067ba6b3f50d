//! Flat text serialization of pretraining artifacts.
//!
//! A pretrain directory holds `tasks.txt` plus, per agent `i` (from 1),
//! `agent<i>.q` and `agent<i>.rewards`:
//!
//! ```text
//! # qtable map ISR agent 1 states 11
//! <row> <col> <stage> <action> <value>
//! # rewards map ISR agent 1 states 11
//! <row> <col> <stage> <action> <reward> <visits>
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{ModelEntry, Pretrained, QTable, RewardModel};
use crate::environments::{Action, Cell, GridMap, StateSpace, TaskPlan};

#[derive(Debug, Error)]
pub enum PretrainIoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PretrainIoError + '_ {
    move |source| PretrainIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn q_path(dir: &Path, agent: usize) -> PathBuf {
    dir.join(format!("agent{}.q", agent + 1))
}

fn rewards_path(dir: &Path, agent: usize) -> PathBuf {
    dir.join(format!("agent{}.rewards", agent + 1))
}

pub fn write_pretrained(
    dir: &Path,
    map: &GridMap,
    plan: &TaskPlan,
    agents: &[Pretrained],
) -> Result<(), PretrainIoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let tasks = dir.join("tasks.txt");
    fs::write(&tasks, plan.to_text()).map_err(io_err(&tasks))?;
    for (i, pre) in agents.iter().enumerate() {
        let space = StateSpace::new(map, plan.stages(i));
        let header = format!("map {} agent {} states {}", map.name(), i + 1, space.len());

        let mut q = format!("# qtable {header}\n");
        for s in 0..space.len() {
            let c = space.cell(map, s);
            for a in Action::ALL {
                q.push_str(&format!(
                    "{} {} {} {} {}\n",
                    c.row,
                    c.col,
                    space.stage(s),
                    a,
                    pre.q.get(s, a)
                ));
            }
        }
        let path = q_path(dir, i);
        fs::write(&path, q).map_err(io_err(&path))?;

        let mut r = format!("# rewards {header}\n");
        for (s, a, e) in pre.rewards.known() {
            let c = space.cell(map, s);
            r.push_str(&format!(
                "{} {} {} {} {} {}\n",
                c.row,
                c.col,
                space.stage(s),
                a,
                e.reward,
                e.visits
            ));
        }
        let path = rewards_path(dir, i);
        fs::write(&path, r).map_err(io_err(&path))?;
    }
    Ok(())
}

struct Parsed {
    state: usize,
    action: Action,
    rest: Vec<String>,
}

fn parse_table(
    path: &Path,
    kind: &str,
    map: &GridMap,
    agent: usize,
    space: &StateSpace,
) -> Result<Vec<Parsed>, PretrainIoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let fmt_err = |line: usize, message: String| PretrainIoError::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let expected = format!("# {kind} map {} agent {} states {}", map.name(), agent + 1, space.len());
    match lines.next() {
        Some((_, h)) if h.trim() == expected => {}
        Some((_, h)) => return Err(fmt_err(1, format!("header `{h}` does not match `{expected}`"))),
        None => return Err(fmt_err(1, "empty file".into())),
    }
    let mut out = Vec::new();
    for (ln, line) in lines {
        let ln = ln + 1;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 5 {
            return Err(fmt_err(ln, "too few fields".into()));
        }
        let num = |k: usize| {
            toks[k]
                .parse::<usize>()
                .map_err(|_| fmt_err(ln, format!("bad integer `{}`", toks[k])))
        };
        let cell = Cell::new(num(0)?, num(1)?);
        let stage = num(2)?;
        if !map.is_free(cell) {
            return Err(fmt_err(ln, format!("cell {cell} is not a free cell")));
        }
        if stage * map.free_count() >= space.len() {
            return Err(fmt_err(ln, format!("stage {stage} out of range")));
        }
        let action: Action = toks[3].parse().map_err(|e| fmt_err(ln, e))?;
        out.push(Parsed {
            state: space.id(map, cell, stage),
            action,
            rest: toks[4..].iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(out)
}

/// Reads artifacts written by [`write_pretrained`] for every agent of `map`.
pub fn read_pretrained(dir: &Path, map: &GridMap) -> Result<(TaskPlan, Vec<Pretrained>), PretrainIoError> {
    let tasks_path = dir.join("tasks.txt");
    let text = fs::read_to_string(&tasks_path).map_err(io_err(&tasks_path))?;
    let plan = TaskPlan::from_text(&text, map.n_agents()).map_err(|message| PretrainIoError::Format {
        path: tasks_path.clone(),
        line: 0,
        message,
    })?;
    let mut agents = Vec::new();
    for i in 0..map.n_agents() {
        let space = StateSpace::new(map, plan.stages(i));
        let path = q_path(dir, i);
        let mut q = QTable::zeros(space.len());
        for (k, p) in parse_table(&path, "qtable", map, i, &space)?.into_iter().enumerate() {
            let value: f64 = p.rest[0].parse().map_err(|_| PretrainIoError::Format {
                path: path.clone(),
                line: k + 2,
                message: format!("bad value `{}`", p.rest[0]),
            })?;
            q.set(p.state, p.action, value);
        }
        let path = rewards_path(dir, i);
        let mut rewards = RewardModel::new(space.len());
        for (k, p) in parse_table(&path, "rewards", map, i, &space)?.into_iter().enumerate() {
            let bad = || PretrainIoError::Format {
                path: path.clone(),
                line: k + 2,
                message: "expected `reward visits`".into(),
            };
            if p.rest.len() != 2 {
                return Err(bad());
            }
            let reward: f64 = p.rest[0].parse().map_err(|_| bad())?;
            let visits: u32 = p.rest[1].parse().map_err(|_| bad())?;
            rewards.insert(p.state, p.action, ModelEntry { reward, visits });
        }
        agents.push(Pretrained::from_tables(q, rewards));
    }
    Ok((plan, agents))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::fixtures;
    use crate::learner::{pretrain_single_agent, LearningParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn artifacts_round_trip() {
        let map = fixtures::builtin("isr").unwrap();
        let plan = TaskPlan::fixed(&map);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let agents: Vec<Pretrained> = (0..map.n_agents())
            .map(|i| pretrain_single_agent(&map, &plan, i, 50, &LearningParams::default(), &mut rng))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        write_pretrained(dir.path(), &map, &plan, &agents).unwrap();
        let (plan2, agents2) = read_pretrained(dir.path(), &map).unwrap();
        assert_eq!(plan2, plan);
        assert_eq!(agents2, agents);
    }

    #[test]
    fn header_mismatch_is_reported() {
        let map = fixtures::builtin("isr").unwrap();
        let other: GridMap = map.to_text().replacen(map.name(), "OTHER", 1).parse().unwrap();
        let plan = TaskPlan::fixed(&map);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let agents: Vec<Pretrained> = (0..map.n_agents())
            .map(|i| pretrain_single_agent(&map, &plan, i, 5, &LearningParams::default(), &mut rng))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        write_pretrained(dir.path(), &map, &plan, &agents).unwrap();
        assert!(matches!(
            read_pretrained(dir.path(), &other),
            Err(PretrainIoError::Format { .. })
        ));
    }
}
