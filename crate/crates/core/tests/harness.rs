use std::collections::HashMap;
use std::fs;
use std::path::Path;

use negosi_core::environments::fixtures;
use negosi_core::harness::{
    emit_charts, pretrain_map, read_episodes, recompute_report, run_experiment, summarize, train_source, Algorithm,
    ExperimentConfig, HarnessError, RunSummary,
};
use negosi_core::learner::{write_pretrained, LearningParams};
use negosi_core::transfer::write_source_task;

const TINY: &str = "map tiny 3 3 2\n...\n...\n...\nagent 1 start 0 0 goal 2 2\nagent 2 start 2 0 goal 0 2\n";

/// Map file, pretrained tables and a source table in `dir`.
fn stage(dir: &Path, map_text: &str) -> ExperimentConfig {
    let map_path = dir.join("map.txt");
    fs::write(&map_path, map_text).unwrap();
    let map = negosi_core::environments::load_map(map_text).unwrap();
    let (plan, agents) = pretrain_map(&map, 300, 0, &LearningParams::pretraining());
    write_pretrained(&dir.join("pre"), &map, &plan, &agents).unwrap();
    let src = dir.join("source2.txt");
    fs::write(&src, write_source_task(&train_source(2, 50_000, 0))).unwrap();
    ExperimentConfig {
        map: map_path.display().to_string(),
        pretrain_path: Some(dir.join("pre")),
        source_paths: vec![src],
        output_dir: Some(dir.join("out")),
        ..Default::default()
    }
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

#[test]
fn one_run_one_episode_writes_one_row_per_agent() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = stage(tmp.path(), TINY);
    c.runs = 1;
    c.episodes = 1;
    run_experiment(&c).unwrap();
    let rows = data_rows(&tmp.path().join("out/episodes.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("0,1,1,") && rows[1].starts_with("0,1,2,"));
}

#[test]
fn missing_inputs_fail_before_simulating() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = stage(tmp.path(), TINY);
    c.source_paths = vec![tmp.path().join("absent.txt")];
    assert!(run_experiment(&c).is_err());
    assert!(!tmp.path().join("out").exists());

    let mut c = stage(tmp.path(), TINY);
    c.pretrain_path = Some(tmp.path().join("nowhere"));
    assert!(run_experiment(&c).is_err());
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn report_recomputes_from_raw_episodes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = stage(tmp.path(), TINY);
    c.runs = 3;
    c.episodes = 40;
    c.window = 7;
    let outcome = run_experiment(&c).unwrap();
    let out = tmp.path().join("out");
    let summary_before = fs::read(out.join("summary.csv")).unwrap();
    fs::remove_dir_all(out.join("charts")).unwrap();
    let again = recompute_report(&out).unwrap();
    assert!((again.final_see - outcome.summary.final_see).abs() < 1e-9);
    for (a, b) in again.final_ree.iter().zip(&outcome.summary.final_ree) {
        assert!((a - b).abs() < 1e-9);
    }
    assert_eq!(fs::read(out.join("summary.csv")).unwrap(), summary_before);
    assert!(out.join("charts/see.svg").exists());
}

#[test]
fn episode_rewards_match_trace_sums() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = stage(tmp.path(), TINY);
    c.runs = 2;
    c.episodes = 25;
    c.trace = true;
    for algorithm in Algorithm::ALL {
        c.algorithm = algorithm;
        c.output_dir = Some(tmp.path().join(algorithm.to_string()));
        let outcome = run_experiment(&c).unwrap();
        for run in &outcome.runs {
            // episode, agent -> (steps, reward) summed from the trace lines
            let mut acc: HashMap<(usize, usize), (usize, f64)> = HashMap::new();
            for line in run.trace.as_ref().unwrap().lines() {
                let f: Vec<&str> = line.split_whitespace().collect();
                let e = acc.entry((f[0].parse().unwrap(), f[2].parse().unwrap())).or_default();
                e.0 += 1;
                e.1 += f[5].parse::<f64>().unwrap();
            }
            for r in &run.episodes {
                for i in 0..2 {
                    let (steps, reward) = acc[&(r.episode, i + 1)];
                    assert_eq!(steps, r.steps[i]);
                    assert_eq!(reward, r.rewards[i]);
                }
            }
        }
        let (_, back) = read_episodes(&tmp.path().join(algorithm.to_string()).join("episodes.csv")).unwrap();
        let direct: Vec<_> = outcome.runs.iter().flat_map(|r| r.episodes.clone()).collect();
        assert_eq!(back.len(), direct.len());
        for (a, b) in back.iter().zip(&direct) {
            assert_eq!(
                (a.run, a.episode, &a.steps, &a.rewards),
                (b.run, b.episode, &b.steps, &b.rewards)
            );
        }
    }
}

#[test]
fn charts_for_two_agents() {
    let tmp = tempfile::tempdir().unwrap();
    let summary = RunSummary {
        n_agents: 2,
        runs: 1,
        episodes: 100,
        window: 10,
        see: (1..=100).map(f64::from).collect(),
        ree: vec![vec![1.0; 100], vec![2.0; 100]],
        final_see: 95.5,
        final_ree: vec![1.0, 2.0],
    };
    emit_charts(tmp.path(), &summary).unwrap();
    let mut names: Vec<String> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["ree.svg", "ree_agent1.tsv", "ree_agent2.tsv", "see.svg", "see.tsv"]
    );
    let see = fs::read_to_string(tmp.path().join("see.tsv")).unwrap();
    assert_eq!(see.lines().filter(|l| !l.starts_with('#')).count(), 100);
}

#[test]
fn empty_summaries_are_rejected() {
    assert!(matches!(summarize(&[], 2, 10), Err(HarnessError::Data { .. })));
}

#[test]
fn shipped_maps_parse_and_round_trip() {
    for (name, map) in fixtures::all() {
        let again = negosi_core::environments::load_map(&map.to_text()).unwrap();
        assert_eq!(again.to_text(), map.to_text(), "{name}");
        assert_eq!(
            (again.n_agents(), again.free_count()),
            (map.n_agents(), map.free_count())
        );
    }
}
