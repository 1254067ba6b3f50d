use super::game::{JointAction, NormalFormGame};
use super::EquilibriumError;

/// Population standard deviation of the agents' utilities at one joint action.
pub fn utility_spread(utilities: &[f64]) -> f64 {
    let n = utilities.len() as f64;
    let mean = utilities.iter().sum::<f64>() / n;
    (utilities.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Minimum variance selection.
///
/// Candidates whose utility sum falls below the mean sum over all
/// candidates are dropped; among the rest the one with the smallest
/// population standard deviation of per-agent utilities wins. Earlier
/// candidates in lexicographic order win ties.
pub fn min_variance_select(candidates: &[JointAction], game: &NormalFormGame) -> Result<JointAction, EquilibriumError> {
    if candidates.is_empty() {
        return Err(EquilibriumError::EmptyCandidates);
    }
    let mut ordered: Vec<&JointAction> = candidates.iter().collect();
    ordered.sort();
    ordered.dedup();

    let profiles: Vec<Vec<f64>> = ordered
        .iter()
        .map(|j| (0..game.n_agents()).map(|i| game.utility(i, j)).collect())
        .collect();
    let sums: Vec<f64> = profiles.iter().map(|p| p.iter().sum()).collect();
    let tau = sums.iter().sum::<f64>() / sums.len() as f64;

    let mut survivors: Vec<usize> = (0..ordered.len()).filter(|&k| sums[k] >= tau).collect();
    if survivors.is_empty() {
        // Only reachable through rounding in the mean; keep the best sums.
        let best = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        survivors = (0..ordered.len()).filter(|&k| sums[k] == best).collect();
    }

    let mut chosen = survivors[0];
    let mut min_spread = utility_spread(&profiles[chosen]);
    for &k in &survivors[1..] {
        let spread = utility_spread(&profiles[k]);
        if spread < min_spread {
            min_spread = spread;
            chosen = k;
        }
    }
    Ok(ordered[chosen].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ja(v: &[usize]) -> JointAction {
        JointAction(v.to_vec())
    }

    /// 3x1 game whose three joint actions carry the given utility pairs.
    fn column_game(profiles: &[(f64, f64)]) -> NormalFormGame {
        NormalFormGame::new(
            vec![profiles.len(), 1],
            vec![
                profiles.iter().map(|p| p.0).collect(),
                profiles.iter().map(|p| p.1).collect(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn drops_below_mean_then_minimizes_spread() {
        let g = column_game(&[(3.0, 3.0), (5.0, 1.0), (1.0, 1.0)]);
        let all = vec![ja(&[0, 0]), ja(&[1, 0]), ja(&[2, 0])];
        assert_eq!(min_variance_select(&all, &g).unwrap(), ja(&[0, 0]));
        // the (5,1) candidate survives the mean filter and has spread 2
        assert_eq!(utility_spread(&[5.0, 1.0]), 2.0);
    }

    #[test]
    fn single_candidate() {
        let g = column_game(&[(3.0, 3.0), (5.0, 1.0)]);
        assert_eq!(min_variance_select(&[ja(&[1, 0])], &g).unwrap(), ja(&[1, 0]));
    }

    #[test]
    fn ties_break_lexicographically() {
        let g = column_game(&[(0.0, 0.0), (2.0, 2.0), (2.0, 2.0)]);
        let picked = min_variance_select(&[ja(&[2, 0]), ja(&[1, 0])], &g).unwrap();
        assert_eq!(picked, ja(&[1, 0]));
    }

    #[test]
    fn empty_input_is_an_error() {
        let g = column_game(&[(0.0, 0.0)]);
        assert_eq!(min_variance_select(&[], &g), Err(EquilibriumError::EmptyCandidates));
    }

    #[test]
    fn rounding_in_the_mean_never_empties_the_pool() {
        let g = column_game(&[(0.1, 0.0), (0.1, 0.0), (0.1, 0.0)]);
        let all = vec![ja(&[0, 0]), ja(&[1, 0]), ja(&[2, 0])];
        assert_eq!(min_variance_select(&all, &g).unwrap(), ja(&[0, 0]));
    }
}
