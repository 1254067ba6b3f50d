use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use super::{io_error, pretrain_map, run_with, train_source, Algorithm, ExperimentConfig, HarnessError, Prepared};
use crate::environments::fixtures;
use crate::learner::{write_pretrained, LearningParams};
use crate::transfer::{write_source_task, SourceLibrary};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Grids,
    Warehouse,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grids" => Ok(Suite::Grids),
            "warehouse" => Ok(Suite::Warehouse),
            other => Err(format!("unknown suite `{other}` (expected grids or warehouse)")),
        }
    }
}

impl Suite {
    pub fn maps(self) -> &'static [&'static str] {
        match self {
            Suite::Grids => &fixtures::GRID_SUITE,
            Suite::Warehouse => &fixtures::WAREHOUSE_SUITE,
        }
    }

    /// Training episodes and final-statistics window.
    pub fn budget(self) -> (usize, usize) {
        match self {
            Suite::Grids => (2000, 50),
            Suite::Warehouse => (1000, 100),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub runs: usize,
    /// Overrides the suite's episode budget.
    pub episodes: Option<usize>,
    pub pretrain_episodes: usize,
    pub source_steps: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            runs: 10,
            episodes: None,
            pretrain_episodes: 2000,
            source_steps: 1_000_000,
            seed: 0,
            jobs: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub map: String,
    pub algorithm: Algorithm,
    pub final_see: f64,
    pub final_ree: Vec<f64>,
    /// Runs whose greedy rollout after training had a collision.
    pub collision_runs: usize,
    pub mean_runtime_secs: f64,
}

/// Pretrains every map of `suite`, trains the source tables it needs and
/// runs all three algorithms, writing everything under `out`.
pub fn run_bench(suite: Suite, out: &Path, opts: &BenchOptions) -> Result<Vec<BenchRow>, HarnessError> {
    fs::create_dir_all(out).map_err(io_error(out))?;
    let maps: Vec<_> = suite
        .maps()
        .iter()
        .map(|&name| (name, fixtures::builtin(name).expect("suite maps are shipped")))
        .collect();
    let max_agents = maps.iter().map(|(_, m)| m.n_agents()).max().unwrap_or(2);
    let mut library = SourceLibrary::new();
    let mut source_paths = Vec::new();
    for n in 2..=max_agents {
        let q = train_source(n, opts.source_steps, opts.seed);
        let path = out.join(format!("source{n}.txt"));
        fs::write(&path, write_source_task(&q)).map_err(io_error(&path))?;
        source_paths.push(path);
        library.insert(q)?;
    }
    let library = Arc::new(library);
    let (episodes, window) = suite.budget();
    let mut rows = Vec::new();
    for (name, map) in maps {
        let (plan, pretrained) = pretrain_map(&map, opts.pretrain_episodes, opts.seed, &LearningParams::pretraining());
        let pre_dir: PathBuf = out.join(name).join("pretrain");
        write_pretrained(&pre_dir, &map, &plan, &pretrained)?;
        let prepared = Prepared {
            map,
            plan,
            pretrained,
            library: Some(library.clone()),
        };
        for algorithm in Algorithm::ALL {
            let config = ExperimentConfig {
                map: name.to_string(),
                algorithm,
                episodes: opts.episodes.unwrap_or(episodes),
                runs: opts.runs,
                base_seed: opts.seed,
                params: LearningParams::default(),
                output_dir: Some(out.join(name).join(algorithm.to_string())),
                source_paths: source_paths.clone(),
                pretrain_path: Some(pre_dir.clone()),
                jobs: opts.jobs,
                window,
                ..Default::default()
            };
            log::info!("bench: {name} {algorithm}");
            let outcome = run_with(&config, &prepared)?;
            rows.push(BenchRow {
                map: name.to_string(),
                algorithm,
                final_see: outcome.summary.final_see,
                final_ree: outcome.summary.final_ree.clone(),
                collision_runs: outcome.runs.iter().filter(|r| r.rollout.collisions > 0).count(),
                mean_runtime_secs: outcome.runs.iter().map(|r| r.runtime_secs).sum::<f64>() / outcome.runs.len() as f64,
            });
        }
    }
    let mut text = String::from("map,algo,final_see,final_ree,collision_runs,mean_runtime_secs\n");
    for r in &rows {
        let ree: Vec<String> = r.final_ree.iter().map(|v| format!("{v:.3}")).collect();
        text.push_str(&format!(
            "{},{},{:.3},{},{},{:.3}\n",
            r.map,
            r.algorithm,
            r.final_see,
            ree.join(";"),
            r.collision_runs,
            r.mean_runtime_secs
        ));
    }
    let path = out.join("bench.csv");
    fs::write(&path, text).map_err(io_error(&path))?;
    Ok(rows)
}
