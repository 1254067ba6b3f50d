use std::fmt;

use super::EquilibriumError;

/// Joint action as per-agent action indices. The derived ordering is the
/// lexicographic order used for tie-breaking.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction(pub Vec<usize>);

impl JointAction {
    pub fn get(&self, agent: usize) -> usize {
        self.0[agent]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Row-major indexing of A_1 x ... x A_n with agent 0 most significant, so
/// linear order coincides with lexicographic order of joint actions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointSpace {
    counts: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl JointSpace {
    pub fn new(counts: &[usize]) -> Self {
        let mut strides = vec![1; counts.len()];
        for k in (0..counts.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * counts[k + 1];
        }
        JointSpace {
            counts: counts.to_vec(),
            strides,
            size: counts.iter().product(),
        }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n_agents(&self) -> usize {
        self.counts.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn stride(&self, agent: usize) -> usize {
        self.strides[agent]
    }

    pub fn encode(&self, joint: &[usize]) -> usize {
        joint.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn decode(&self, index: usize) -> JointAction {
        JointAction(
            self.strides
                .iter()
                .zip(&self.counts)
                .map(|(s, c)| (index / s) % c)
                .collect(),
        )
    }

    /// Action of `agent` inside the joint action at `index`.
    pub fn component(&self, index: usize, agent: usize) -> usize {
        (index / self.strides[agent]) % self.counts[agent]
    }

    /// `index` with the component of `agent` replaced by `action`.
    pub fn with_component(&self, index: usize, agent: usize, action: usize) -> usize {
        index - self.component(index, agent) * self.strides[agent] + action * self.strides[agent]
    }
}

/// One-shot game: a dense utility tensor per agent over joint actions.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormGame {
    space: JointSpace,
    utilities: Vec<Vec<f64>>,
}

impl NormalFormGame {
    pub fn new(action_counts: Vec<usize>, utilities: Vec<Vec<f64>>) -> Result<Self, EquilibriumError> {
        if action_counts.len() < 2 {
            return Err(EquilibriumError::InvalidGame("at least two agents required".into()));
        }
        if action_counts.contains(&0) {
            return Err(EquilibriumError::InvalidGame("every agent needs an action".into()));
        }
        if utilities.len() != action_counts.len() {
            return Err(EquilibriumError::InvalidGame(format!(
                "{} utility tensors for {} agents",
                utilities.len(),
                action_counts.len()
            )));
        }
        let space = JointSpace::new(&action_counts);
        for (i, u) in utilities.iter().enumerate() {
            if u.len() != space.size() {
                return Err(EquilibriumError::InvalidGame(format!(
                    "agent {i} has {} utilities, expected {}",
                    u.len(),
                    space.size()
                )));
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Err(EquilibriumError::InvalidGame(format!(
                    "agent {i} has a non-finite utility"
                )));
            }
        }
        Ok(NormalFormGame { space, utilities })
    }

    /// Builds a game by evaluating `f(agent, joint)` on every joint action.
    pub fn from_fn(
        action_counts: Vec<usize>,
        mut f: impl FnMut(usize, &JointAction) -> f64,
    ) -> Result<Self, EquilibriumError> {
        let space = JointSpace::new(&action_counts);
        let joints: Vec<JointAction> = (0..space.size()).map(|k| space.decode(k)).collect();
        let utilities = (0..action_counts.len())
            .map(|i| joints.iter().map(|j| f(i, j)).collect())
            .collect();
        Self::new(action_counts, utilities)
    }

    pub fn n_agents(&self) -> usize {
        self.space.n_agents()
    }

    pub fn action_counts(&self) -> &[usize] {
        self.space.counts()
    }

    pub fn space(&self) -> &JointSpace {
        &self.space
    }

    pub fn utilities(&self, agent: usize) -> &[f64] {
        &self.utilities[agent]
    }

    pub fn utility(&self, agent: usize, joint: &JointAction) -> f64 {
        self.utilities[agent][self.space.encode(&joint.0)]
    }

    pub fn joint_actions(&self) -> impl Iterator<Item = JointAction> + '_ {
        (0..self.space.size()).map(|k| self.space.decode(k))
    }
}
