//! Experiment orchestration: seeded parallel runs, per-episode metrics
//! (steps and rewards of each episode, runtime), CSV output and charts.

mod bench;
mod charts;
mod config;
mod output;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::baselines::{cq_style, BaselineKind, IndependentLearners};
use crate::environments::{fixtures, load_map, GridMap, TaskPlan, World};
use crate::learner::{pretrain_single_agent, read_pretrained, LearningParams, PretrainIoError, Pretrained};
use crate::negosi::{CoordinationMode, NegoConfig, SparseLearner, StepRecord};
use crate::transfer::{
    read_source_task, train_source_task, SourceLibrary, SourceTaskConfig, SourceTaskQ, TransferError,
};

pub use bench::{run_bench, BenchOptions, BenchRow, Suite};
pub use charts::{emit_charts, render_svg, Series};
pub use config::{Algorithm, ExperimentConfig};
pub use output::{read_episodes, recompute_report, summarize, write_outputs, RunSummary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("map {name}: {message}")]
    Map { name: String, message: String },
    #[error(transparent)]
    Pretrain(#[from] PretrainIoError),
    #[error("source table {path}: {source}")]
    Source { path: PathBuf, source: TransferError },
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
}

pub(crate) fn io_error(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A shipped map by name, or a map file.
pub fn resolve_map(spec: &str) -> Result<GridMap, HarnessError> {
    if let Some(map) = fixtures::builtin(spec) {
        return Ok(map);
    }
    let text = fs::read_to_string(spec).map_err(|e| HarnessError::Map {
        name: spec.to_string(),
        message: format!("not a shipped map and not readable: {e}"),
    })?;
    load_map(&text).map_err(|e| HarnessError::Map {
        name: spec.to_string(),
        message: e.to_string(),
    })
}

/// Action and negotiation rng streams of one run.
pub fn run_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let action = ChaCha8Rng::seed_from_u64(seed);
    let mut nego = ChaCha8Rng::seed_from_u64(seed);
    nego.set_stream(1);
    (action, nego)
}

/// Single-agent pretraining of every agent. Warehouse task lists are drawn
/// from the same seed and must be reused when training together.
pub fn pretrain_map(map: &GridMap, episodes: usize, seed: u64, params: &LearningParams) -> (TaskPlan, Vec<Pretrained>) {
    let mut plan_rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = TaskPlan::for_map(map, &mut plan_rng);
    let agents = (0..map.n_agents())
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            pretrain_single_agent(map, &plan, i, episodes, params, &mut rng)
        })
        .collect();
    (plan, agents)
}

pub fn train_source(n_agents: usize, steps: usize, seed: u64) -> SourceTaskQ {
    let config = SourceTaskConfig {
        steps,
        ..Default::default()
    };
    train_source_task(n_agents, &config, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Inputs shared read-only by all runs of an experiment.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub map: GridMap,
    pub plan: TaskPlan,
    pub pretrained: Vec<Pretrained>,
    pub library: Option<Arc<SourceLibrary>>,
}

impl Prepared {
    /// Loads and checks every input named by `config`.
    pub fn load(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let map = resolve_map(&config.map)?;
        let dir = config.pretrain_path.as_ref().expect("validated");
        let (plan, pretrained) = read_pretrained(dir, &map)?;
        let library = if config.algorithm == Algorithm::NegoSi {
            let mut lib = SourceLibrary::new();
            for path in &config.source_paths {
                let text = fs::read_to_string(path).map_err(io_error(path))?;
                let q = read_source_task(&text).map_err(|source| HarnessError::Source {
                    path: path.clone(),
                    source,
                })?;
                lib.insert(q)?;
            }
            lib.require_up_to(map.n_agents())?;
            Some(Arc::new(lib))
        } else {
            None
        };
        Ok(Prepared {
            map,
            plan,
            pretrained,
            library,
        })
    }
}

/// Any of the three learners behind one interface.
#[derive(Clone, Debug)]
pub enum AnyLearner {
    Sparse(SparseLearner),
    Independent(IndependentLearners),
}

impl AnyLearner {
    pub fn build(
        algorithm: Algorithm,
        prepared: &Prepared,
        config: NegoConfig,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        let (rng, nego_rng) = run_rngs(seed);
        Ok(match algorithm {
            Algorithm::NegoSi => {
                let lib = prepared
                    .library
                    .clone()
                    .ok_or_else(|| HarnessError::Config("negosi needs source tables".into()))?;
                AnyLearner::Sparse(SparseLearner::new(
                    CoordinationMode::Negotiate(lib),
                    config,
                    &prepared.pretrained,
                    rng,
                    nego_rng,
                )?)
            }
            Algorithm::Baseline(BaselineKind::CqStyle) => {
                AnyLearner::Sparse(cq_style(config, &prepared.pretrained, rng, nego_rng))
            }
            Algorithm::Baseline(BaselineKind::IlVft) => {
                AnyLearner::Independent(IndependentLearners::new(&prepared.pretrained, config.params, rng))
            }
        })
    }

    pub fn step(&mut self, world: &mut World<'_>) -> StepRecord {
        match self {
            AnyLearner::Sparse(l) => l.step(world),
            AnyLearner::Independent(l) => l.step(world),
        }
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        match self {
            AnyLearner::Sparse(l) => l.set_epsilon(epsilon),
            AnyLearner::Independent(l) => l.set_epsilon(epsilon),
        }
    }

    pub fn coordination_states(&self) -> usize {
        match self {
            AnyLearner::Sparse(l) => l.coordination_states(),
            AnyLearner::Independent(_) => 0,
        }
    }
}

/// Metrics of one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub run: usize,
    pub episode: usize,
    /// Steps each agent was still acting.
    pub steps: Vec<usize>,
    pub rewards: Vec<f64>,
    pub truncated: bool,
    /// Steps in which at least one agent bounced off another.
    pub collisions: usize,
}

impl EpisodeRecord {
    /// Episode length: steps until the last agent finished.
    pub fn see(&self) -> usize {
        self.steps.iter().copied().max().unwrap_or(0)
    }
}

/// Plays one episode from the start positions, learning as it goes.
pub fn run_episode(
    learner: &mut AnyLearner,
    world: &mut World<'_>,
    run: usize,
    episode: usize,
    mut trace: Option<&mut String>,
) -> EpisodeRecord {
    world.reset();
    let n = world.n_agents();
    let mut steps = vec![0; n];
    let mut rewards = vec![0.0; n];
    let mut collisions = 0;
    let max_steps = world.map().max_steps();
    let mut t = 0;
    while !world.is_done() && t < max_steps {
        t += 1;
        let rec = learner.step(world);
        for i in 0..n {
            if rec.transition.states[i].is_some() {
                steps[i] += 1;
                rewards[i] += rec.transition.step.rewards[i];
            }
        }
        if rec.transition.step.any_collision() {
            collisions += 1;
        }
        if let Some(out) = trace.as_deref_mut() {
            out.push_str(&rec.trace_lines(episode, t));
        }
    }
    EpisodeRecord {
        run,
        episode,
        steps,
        rewards,
        truncated: !world.is_done(),
        collisions,
    }
}

/// Greedy (epsilon = 0) episode on a copy of the learner.
pub fn greedy_rollout(learner: &AnyLearner, map: &GridMap, plan: &TaskPlan, run: usize) -> EpisodeRecord {
    let mut copy = learner.clone();
    copy.set_epsilon(0.0);
    let mut world = World::new(map, plan);
    run_episode(&mut copy, &mut world, run, 0, None)
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub episodes: Vec<EpisodeRecord>,
    /// Greedy episode after training.
    pub rollout: EpisodeRecord,
    pub runtime_secs: f64,
    pub coordination_states: usize,
    pub trace: Option<String>,
}

pub fn run_single(config: &ExperimentConfig, prepared: &Prepared, run: usize) -> Result<RunResult, HarnessError> {
    let seed = config.base_seed.wrapping_add(run as u64);
    let nego = NegoConfig {
        comm_range: config.comm_range,
        params: config.params,
    };
    let started = Instant::now();
    let mut learner = AnyLearner::build(config.algorithm, prepared, nego, seed)?;
    let mut world = World::new(&prepared.map, &prepared.plan);
    let mut trace = config.trace.then(String::new);
    let episodes = (1..=config.episodes)
        .map(|e| run_episode(&mut learner, &mut world, run, e, trace.as_mut()))
        .collect();
    let runtime_secs = started.elapsed().as_secs_f64();
    let rollout = greedy_rollout(&learner, &prepared.map, &prepared.plan, run);
    Ok(RunResult {
        run,
        seed,
        episodes,
        rollout,
        runtime_secs,
        coordination_states: learner.coordination_states(),
        trace,
    })
}

/// All runs of an experiment, in run order whatever the thread count.
pub fn run_prepared(config: &ExperimentConfig, prepared: &Prepared) -> Result<Vec<RunResult>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|k| run_single(config, prepared, k))
            .collect()
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub summary: RunSummary,
    pub runs: Vec<RunResult>,
}

/// Loads inputs (failing before any simulation if something is missing),
/// runs every seed and writes the artifacts when an output directory is
/// configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    let prepared = Prepared::load(config)?;
    run_with(config, &prepared)
}

pub fn run_with(config: &ExperimentConfig, prepared: &Prepared) -> Result<ExperimentOutcome, HarnessError> {
    let runs = run_prepared(config, prepared)?;
    let summary = summarize(
        &runs.iter().flat_map(|r| r.episodes.iter().cloned()).collect::<Vec<_>>(),
        prepared.map.n_agents(),
        config.window,
    )?;
    if let Some(dir) = &config.output_dir {
        write_outputs(dir, config, prepared.map.name(), &runs, &summary)?;
    }
    Ok(ExperimentOutcome { summary, runs })
}
