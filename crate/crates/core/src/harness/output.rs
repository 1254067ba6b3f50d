use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::charts::emit_charts;
use super::{io_error, EpisodeRecord, ExperimentConfig, HarnessError, RunResult};

/// Per-episode means across runs and their final-window averages.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub n_agents: usize,
    pub runs: usize,
    pub episodes: usize,
    pub window: usize,
    /// Mean episode length per episode.
    pub see: Vec<f64>,
    /// Mean reward per agent per episode, indexed `[agent][episode]`.
    pub ree: Vec<Vec<f64>>,
    pub final_see: f64,
    pub final_ree: Vec<f64>,
}

fn tail_mean(v: &[f64], window: usize) -> f64 {
    let tail = &v[v.len() - window.min(v.len())..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Aggregates records of any number of runs. Every run must cover the same
/// episodes.
pub fn summarize(records: &[EpisodeRecord], n_agents: usize, window: usize) -> Result<RunSummary, HarnessError> {
    let data_err = |message: &str| HarnessError::Data {
        path: "<summary>".into(),
        message: message.to_string(),
    };
    if records.is_empty() {
        return Err(data_err("no episodes to summarize"));
    }
    let mut by_episode: BTreeMap<usize, Vec<&EpisodeRecord>> = BTreeMap::new();
    for r in records {
        if r.steps.len() != n_agents || r.rewards.len() != n_agents {
            return Err(data_err("record agent count disagrees with the map"));
        }
        by_episode.entry(r.episode).or_default().push(r);
    }
    let runs = by_episode.values().next().map_or(0, Vec::len);
    if by_episode.values().any(|v| v.len() != runs) {
        return Err(data_err("runs cover different episodes"));
    }
    let episodes = by_episode.len();
    let mut see = Vec::with_capacity(episodes);
    let mut ree = vec![Vec::with_capacity(episodes); n_agents];
    for recs in by_episode.values() {
        let mut ordered = recs.clone();
        ordered.sort_by_key(|r| r.run);
        see.push(ordered.iter().map(|r| r.see() as f64).sum::<f64>() / runs as f64);
        for (i, col) in ree.iter_mut().enumerate() {
            col.push(ordered.iter().map(|r| r.rewards[i]).sum::<f64>() / runs as f64);
        }
    }
    Ok(RunSummary {
        n_agents,
        runs,
        episodes,
        window,
        final_see: tail_mean(&see, window),
        final_ree: ree.iter().map(|c| tail_mean(c, window)).collect(),
        see,
        ree,
    })
}

fn write(path: &Path, text: String) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(io_error(path))
}

fn csv_text(header: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
    format!("{header}{body}")
}

fn episodes_csv(echo: &str, records: &[EpisodeRecord]) -> String {
    let rows = records.iter().flat_map(|r| {
        (0..r.steps.len()).map(move |i| {
            vec![
                r.run.to_string(),
                r.episode.to_string(),
                (i + 1).to_string(),
                r.steps[i].to_string(),
                r.rewards[i].to_string(),
                r.truncated.to_string(),
            ]
        })
    });
    csv_text(
        &format!("# {echo}\n"),
        &["run", "episode", "agent", "steps", "reward", "truncated"],
        rows,
    )
}

fn summary_files(dir: &Path, echo: &str, s: &RunSummary) -> Result<(), HarnessError> {
    let header = format!("# {echo}\n# runs={} window={}\n", s.runs, s.window);
    let mut columns = vec!["episode".to_string(), "see".to_string()];
    columns.extend((1..=s.n_agents).map(|i| format!("ree_{i}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let rows = (0..s.episodes).map(|e| {
        let mut row = vec![(e + 1).to_string(), s.see[e].to_string()];
        row.extend(s.ree.iter().map(|c| c[e].to_string()));
        row
    });
    write(&dir.join("summary.csv"), csv_text(&header, &cols, rows))?;

    let mut rows = vec![vec!["final_see".to_string(), s.final_see.to_string()]];
    rows.extend(
        s.final_ree
            .iter()
            .enumerate()
            .map(|(i, v)| vec![format!("final_ree_{}", i + 1), v.to_string()]),
    );
    write(&dir.join("final.csv"), csv_text(&header, &["statistic", "value"], rows))?;
    emit_charts(&dir.join("charts"), s)
}

/// Writes episodes, summary, final statistics, greedy rollouts, runtimes,
/// charts and (optionally) traces into `dir`.
pub fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    map_name: &str,
    runs: &[RunResult],
    summary: &RunSummary,
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let echo = config.echo(map_name);
    let records: Vec<EpisodeRecord> = runs.iter().flat_map(|r| r.episodes.iter().cloned()).collect();
    write(&dir.join("episodes.csv"), episodes_csv(&echo, &records))?;
    summary_files(dir, &echo, summary)?;

    let rows = runs.iter().flat_map(|r| {
        let ro = &r.rollout;
        (0..ro.steps.len()).map(move |i| {
            vec![
                r.run.to_string(),
                (i + 1).to_string(),
                ro.steps[i].to_string(),
                ro.rewards[i].to_string(),
                ro.truncated.to_string(),
                ro.collisions.to_string(),
                r.coordination_states.to_string(),
            ]
        })
    });
    let cols = [
        "run",
        "agent",
        "steps",
        "reward",
        "truncated",
        "collision_steps",
        "coordination_states",
    ];
    write(&dir.join("rollout.csv"), csv_text(&format!("# {echo}\n"), &cols, rows))?;

    let rows = runs
        .iter()
        .map(|r| vec![r.run.to_string(), r.seed.to_string(), format!("{:.6}", r.runtime_secs)]);
    write(
        &dir.join("runtime.csv"),
        csv_text(&format!("# {echo}\n"), &["run", "seed", "seconds"], rows),
    )?;

    if config.trace {
        let tdir = dir.join("traces");
        fs::create_dir_all(&tdir).map_err(io_error(&tdir))?;
        for r in runs {
            if let Some(t) = &r.trace {
                write(&tdir.join(format!("run{}.txt", r.run)), t.clone())?;
            }
        }
    }
    Ok(())
}

type AgentRow = (usize, f64, bool);

/// Parses an `episodes.csv`, returning the echoed configuration line and
/// one record per (run, episode).
pub fn read_episodes(path: &Path) -> Result<(String, Vec<EpisodeRecord>), HarnessError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    let bad = |message: String| HarnessError::Data {
        path: path.to_path_buf(),
        message,
    };
    let echo = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| bad("missing `#` configuration header".into()))?
        .to_string();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    // (run, episode) -> agent -> (steps, reward, truncated)
    let mut grouped: BTreeMap<(usize, usize), BTreeMap<usize, AgentRow>> = BTreeMap::new();
    for (k, row) in reader.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let field = |c: usize| {
            row.get(c)
                .ok_or_else(|| bad(format!("row {}: missing column {c}", k + 1)))
        };
        let int = |c: usize| -> Result<usize, HarnessError> {
            field(c)?
                .parse()
                .map_err(|_| bad(format!("row {}: bad integer in column {c}", k + 1)))
        };
        let agent = int(2)?;
        if agent == 0 {
            return Err(bad(format!("row {}: agents count from 1", k + 1)));
        }
        let reward: f64 = field(4)?
            .parse()
            .map_err(|_| bad(format!("row {}: bad reward", k + 1)))?;
        let truncated: bool = field(5)?
            .parse()
            .map_err(|_| bad(format!("row {}: bad truncated flag", k + 1)))?;
        grouped
            .entry((int(0)?, int(1)?))
            .or_default()
            .insert(agent - 1, (int(3)?, reward, truncated));
    }
    let mut records = Vec::new();
    for ((run, episode), agents) in grouped {
        if agents.keys().copied().ne(0..agents.len()) {
            return Err(bad(format!("run {run} episode {episode}: agents are not 1..n")));
        }
        records.push(EpisodeRecord {
            run,
            episode,
            steps: agents.values().map(|a| a.0).collect(),
            rewards: agents.values().map(|a| a.1).collect(),
            truncated: agents.values().any(|a| a.2),
            collisions: 0,
        });
    }
    Ok((echo, records))
}

/// Rebuilds summary, final statistics and charts in `dir` from its raw
/// `episodes.csv`.
pub fn recompute_report(dir: &Path) -> Result<RunSummary, HarnessError> {
    let path = dir.join("episodes.csv");
    let (echo, records) = read_episodes(&path)?;
    let window = echo
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("window="))
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| HarnessError::Data {
            path: path.clone(),
            message: "header lacks window=".into(),
        })?;
    let n_agents = records.first().map_or(0, |r| r.steps.len());
    let summary = summarize(&records, n_agents, window)?;
    summary_files(dir, &echo, &summary)?;
    Ok(summary)
}
