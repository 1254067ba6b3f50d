use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::HarnessError;
use crate::baselines::BaselineKind;
use crate::learner::LearningParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    NegoSi,
    Baseline(BaselineKind),
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::NegoSi,
        Algorithm::Baseline(BaselineKind::IlVft),
        Algorithm::Baseline(BaselineKind::CqStyle),
    ];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::NegoSi => f.write_str("negosi"),
            Algorithm::Baseline(b) => b.fmt(f),
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "negosi" => Ok(Algorithm::NegoSi),
            other => other
                .parse()
                .map(Algorithm::Baseline)
                .map_err(|_| format!("unknown algorithm `{other}` (expected negosi, ilvft or cq)")),
        }
    }
}

/// Everything that defines an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Shipped map name or path to a map file.
    pub map: String,
    pub algorithm: Algorithm,
    pub episodes: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub params: LearningParams,
    pub comm_range: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub source_paths: Vec<PathBuf>,
    pub pretrain_path: Option<PathBuf>,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    /// Episodes averaged for final statistics.
    pub window: usize,
    /// Write per-step traces next to the CSVs.
    pub trace: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            map: String::new(),
            algorithm: Algorithm::NegoSi,
            episodes: 2000,
            runs: 10,
            base_seed: 0,
            params: LearningParams::default(),
            comm_range: None,
            output_dir: None,
            source_paths: Vec::new(),
            pretrain_path: None,
            jobs: 0,
            window: 50,
            trace: false,
        }
    }
}

fn parse_range(value: &str) -> Result<Option<usize>, String> {
    if matches!(value, "inf" | "infinite" | "none") {
        return Ok(None);
    }
    match value.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("comm range must be a positive integer or `inf`, got `{value}`")),
        Ok(k) => Ok(Some(k)),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines. Blank lines and `#` comments are
    /// skipped; unknown keys are errors. `source` may repeat.
    pub fn from_kv(text: &str) -> Result<Self, HarnessError> {
        let mut c = ExperimentConfig::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            c.set(line)
                .map_err(|message| HarnessError::Config(format!("line {}: {message}", k + 1)))?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, assignment: &str) -> Result<(), String> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| format!("expected `key = value`, got `{assignment}`"))?;
        let (key, value) = (key.trim(), value.trim());
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
            value.parse().map_err(|_| format!("bad value `{value}` for `{key}`"))
        }
        match key {
            "map" => self.map = value.to_string(),
            "algo" | "algorithm" => self.algorithm = value.parse()?,
            "episodes" => self.episodes = num(key, value)?,
            "runs" => self.runs = num(key, value)?,
            "seed" => self.base_seed = num(key, value)?,
            "alpha" => self.params.alpha = num(key, value)?,
            "gamma" => self.params.gamma = num(key, value)?,
            "epsilon" => self.params.epsilon = num(key, value)?,
            "comm_range" => self.comm_range = parse_range(value)?,
            "out" => self.output_dir = Some(value.into()),
            "source" => self.source_paths.push(value.into()),
            "pretrain" => self.pretrain_path = Some(value.into()),
            "jobs" => self.jobs = num(key, value)?,
            "window" => self.window = num(key, value)?,
            "trace" => self.trace = num(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.map.is_empty() {
            return bad("no map given");
        }
        if self.episodes == 0 {
            return bad("episodes must be at least 1");
        }
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.comm_range == Some(0) {
            return bad("comm range must be at least 1");
        }
        self.params
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.pretrain_path.is_none() {
            return bad("a pretrain directory is required");
        }
        if self.algorithm == Algorithm::NegoSi && self.source_paths.is_empty() {
            return bad("negosi needs at least one source table");
        }
        Ok(())
    }

    /// Settings that determine the per-episode results, for CSV headers.
    /// Paths and worker counts are left out so that output does not depend
    /// on where it is written or how many threads ran it.
    pub fn echo(&self, map_name: &str) -> String {
        let range = self.comm_range.map_or("inf".to_string(), |r| r.to_string());
        format!(
            "algo={} map={map_name} episodes={} runs={} seed={} alpha={} gamma={} epsilon={} comm_range={range} window={}",
            self.algorithm,
            self.episodes,
            self.runs,
            self.base_seed,
            self.params.alpha,
            self.params.gamma,
            self.params.epsilon,
            self.window
        )
    }
}
