use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use negosi_core::harness::{
    pretrain_map, recompute_report, resolve_map, run_bench, run_experiment, train_source, Algorithm, BenchOptions,
    ExperimentConfig, Suite,
};
use negosi_core::learner::{write_pretrained, LearningParams};
use negosi_core::transfer::write_source_task;

#[derive(Parser)]
#[command(
    name = "negosi",
    version,
    about = "Sparse-interaction multi-agent Q-learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn each agent's task alone and save Q-tables and reward models.
    /// Exploration defaults to epsilon 0.3 here.
    Pretrain {
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 2000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Train collision values on a blank 5x5 grid.
    SourceTask {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        agents: u8,
        #[arg(long, default_value_t = 1_000_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run seeded multi-agent training and write CSVs and charts.
    Train(TrainArgs),
    /// Pretrain, train source tables and run every algorithm on a suite.
    Bench {
        #[arg(long)]
        suite: Suite,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// Override the suite's episode budget.
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value_t = 1_000_000)]
        source_steps: usize,
    },
    /// Recompute summaries and charts from a run directory's episodes.csv.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
}

impl ParamArgs {
    fn apply(&self, p: &mut LearningParams) {
        if let Some(a) = self.alpha {
            p.alpha = a;
        }
        if let Some(g) = self.gamma {
            p.gamma = g;
        }
        if let Some(e) = self.epsilon {
            p.epsilon = e;
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// `key = value` file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    algo: Option<Algorithm>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Chebyshev communication range, or `inf`.
    #[arg(long)]
    comm_range: Option<String>,
    #[arg(long)]
    pretrain: Option<PathBuf>,
    /// Source table file; repeat for 2- and 3-agent tables.
    #[arg(long)]
    source: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    /// Write per-step traces.
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    params: ParamArgs,
}

fn train_config(args: &TrainArgs) -> Result<ExperimentConfig> {
    let mut c = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut c = ExperimentConfig::default();
            for (k, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                c.set(line)
                    .map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), k + 1))?;
            }
            c
        }
        None => ExperimentConfig::default(),
    };
    if let Some(m) = &args.map {
        c.map = m.clone();
    }
    if let Some(a) = args.algo {
        c.algorithm = a;
    }
    if let Some(e) = args.episodes {
        c.episodes = e;
    }
    if let Some(r) = args.runs {
        c.runs = r;
    }
    if let Some(s) = args.seed {
        c.base_seed = s;
    }
    if let Some(r) = &args.comm_range {
        c.set(&format!("comm_range = {r}")).map_err(anyhow::Error::msg)?;
    }
    if let Some(p) = &args.pretrain {
        c.pretrain_path = Some(p.clone());
    }
    c.source_paths.extend(args.source.iter().cloned());
    if let Some(o) = &args.out {
        c.output_dir = Some(o.clone());
    }
    if let Some(j) = args.jobs {
        c.jobs = j;
    }
    if let Some(w) = args.window {
        c.window = w;
    }
    c.trace |= args.trace;
    args.params.apply(&mut c.params);
    if c.output_dir.is_none() {
        bail!("no output directory: pass --out or set `out` in the config");
    }
    c.validate()?;
    Ok(c)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Pretrain {
            map,
            episodes,
            seed,
            out,
            params,
        } => {
            let grid = resolve_map(&map)?;
            let mut p = LearningParams::pretraining();
            params.apply(&mut p);
            p.validate()?;
            let (plan, agents) = pretrain_map(&grid, episodes, seed, &p);
            write_pretrained(&out, &grid, &plan, &agents)?;
            println!(
                "pretrained {} agents on {} into {}",
                agents.len(),
                grid.name(),
                out.display()
            );
        }
        Command::SourceTask {
            agents,
            steps,
            seed,
            out,
        } => {
            let q = train_source(agents as usize, steps, seed);
            fs::write(&out, write_source_task(&q)).with_context(|| format!("writing {}", out.display()))?;
            println!("source table for {agents} agents written to {}", out.display());
        }
        Command::Train(args) => {
            let config = train_config(&args)?;
            let outcome = run_experiment(&config)?;
            let s = &outcome.summary;
            let collided = outcome.runs.iter().filter(|r| r.rollout.collisions > 0).count();
            println!(
                "{} on {}: final SEE {:.3}, final REE {:?}, greedy rollouts with collisions {collided}/{}",
                config.algorithm,
                config.map,
                s.final_see,
                s.final_ree,
                outcome.runs.len()
            );
        }
        Command::Bench {
            suite,
            out,
            runs,
            episodes,
            seed,
            jobs,
            source_steps,
        } => {
            let opts = BenchOptions {
                runs,
                episodes,
                seed,
                jobs,
                source_steps,
                ..Default::default()
            };
            for row in run_bench(suite, &out, &opts)? {
                println!(
                    "{:<12} {:<7} final SEE {:>9.3}  collision runs {:>2}  runtime {:.3}s",
                    row.map, row.algorithm, row.final_see, row.collision_runs, row.mean_runtime_secs
                );
            }
        }
        Command::Report { input } => {
            let s = recompute_report(&input)?;
            println!(
                "final SEE {:.3}, final REE {:?} over {} runs",
                s.final_see, s.final_ree, s.runs
            );
        }
    }
    Ok(())
}
