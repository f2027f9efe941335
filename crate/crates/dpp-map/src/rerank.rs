//! Relevance/diversity re-ranking.
//!
//! [`dpp_rerank`] greedily maximizes the weighted marginal gain
//! `theta * r_i + (1 - theta) * (log det(S_{R ∪ i}) - log det(S_R))` on a
//! similarity kernel, reusing the incremental machinery (optionally
//! windowed). [`mmr_rerank`] is the maximal-marginal-relevance baseline
//! with the same [0, 1] trade-off parameterization, scoring
//! `theta * r_i - (1 - theta) * max_{j selected} S_ij`.

use crate::engine::{self, GainRule, StopSpec};
use crate::error::{Error, Result};
use crate::kernel::{KernelMatrix, TradeoffConfig};

/// Tolerance on the similarity diagonal (entries must be 1).
const DIAG_TOL: f64 = 1e-10;

/// A re-ranking task over one candidate set: relevance scores, a similarity
/// kernel with unit diagonal and entries in [0, 1], the trade-off parameter,
/// the list length, and an optional window (0 disables it).
#[derive(Debug, Clone)]
pub struct RerankRequest<'a> {
    scores: &'a [f64],
    similarity: &'a KernelMatrix,
    theta: TradeoffConfig,
    max_items: usize,
    window: usize,
    epsilon: f64,
}

impl<'a> RerankRequest<'a> {
    pub fn new(
        scores: &'a [f64],
        similarity: &'a KernelMatrix,
        theta: TradeoffConfig,
        max_items: usize,
    ) -> Result<Self> {
        if scores.len() != similarity.dim() {
            return Err(Error::DimensionMismatch {
                context: "rerank scores",
                expected: similarity.dim(),
                found: scores.len(),
            });
        }
        if max_items == 0 {
            return Err(Error::Validation("rerank needs max_items >= 1".into()));
        }
        for i in 0..similarity.dim() {
            if (similarity.entry(i, i) - 1.0).abs() > DIAG_TOL {
                return Err(Error::Validation(format!(
                    "similarity diagonal at {i} is {}, expected 1",
                    similarity.entry(i, i)
                )));
            }
        }
        Ok(Self {
            scores,
            similarity,
            theta,
            max_items,
            window: 0,
            epsilon: crate::greedy::DEFAULT_EPSILON,
        })
    }

    /// Enforce diversity only among the last `w - 1` selected items.
    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        assert!(epsilon > 0.0 && epsilon.is_finite());
        self.epsilon = epsilon;
        self
    }

    pub fn candidate_count(&self) -> usize {
        self.scores.len()
    }
}

/// Re-ranked list: selected indices in order and the weighted gain of each
/// selection step.
#[derive(Debug, Clone, PartialEq)]
pub struct RerankedList {
    pub items: Vec<usize>,
    pub gains: Vec<f64>,
}

/// Greedy maximization of the weighted gain on the similarity kernel.
///
/// theta = 1 short-circuits to the top-N by relevance (ties by index).
/// For theta < 1, candidates whose `d²` has hit zero are excluded outright:
/// their log term is -inf no matter how relevant they are.
pub fn dpp_rerank(req: &RerankRequest<'_>) -> Result<RerankedList> {
    if req.theta.is_pure_relevance() {
        return Ok(relevance_sort(req.scores, req.max_items));
    }
    let picks = engine::run(
        req.similarity,
        req.window,
        GainRule::ThetaWeighted {
            theta: req.theta.theta(),
            scores: req.scores,
        },
        StopSpec::Cardinality {
            n: req.max_items,
            epsilon: req.epsilon,
        },
    )?;
    Ok(RerankedList {
        items: picks.iter().map(|p| p.item).collect(),
        gains: picks.iter().map(|p| p.gain).collect(),
    })
}

/// Maximal marginal relevance with the same trade-off parameterization.
///
/// Each step scores `theta * r_i - (1 - theta) * max_{j} S_ij` over the
/// selected items `j` (restricted to the last `w - 1` picks when a window is
/// set). Ties break to the higher relevance, then the smaller index.
pub fn mmr_rerank(req: &RerankRequest<'_>) -> Result<RerankedList> {
    if req.theta.is_pure_relevance() {
        return Ok(relevance_sort(req.scores, req.max_items));
    }
    let theta = req.theta.theta();
    let n = req.candidate_count();
    let mut alive = vec![true; n];
    let mut items: Vec<usize> = Vec::new();
    let mut gains: Vec<f64> = Vec::new();
    while items.len() < req.max_items {
        let recent = if req.window == 0 {
            &items[..]
        } else {
            &items[items.len().saturating_sub(req.window - 1)..]
        };
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let penalty = recent
                .iter()
                .map(|&j| req.similarity.entry(i, j))
                .fold(0.0f64, f64::max);
            let score = theta * req.scores[i] - (1.0 - theta) * penalty;
            if !score.is_finite() {
                return Err(Error::NumericalFailure {
                    iteration: items.len(),
                });
            }
            let better = match best {
                None => true,
                Some((b, s)) => {
                    score > s
                        || (score == s
                            && (req.scores[i] > req.scores[b]
                                || (req.scores[i] == req.scores[b] && i < b)))
                }
            };
            if better {
                best = Some((i, score));
            }
        }
        let Some((j, score)) = best else { break };
        alive[j] = false;
        items.push(j);
        gains.push(score);
    }
    Ok(RerankedList { items, gains })
}

/// Top-N by relevance with a deterministic order: score descending, index
/// ascending. Gains are the raw scores.
fn relevance_sort(scores: &[f64], max_items: usize) -> RerankedList {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(max_items);
    let gains = order.iter().map(|&i| scores[i]).collect();
    RerankedList {
        items: order,
        gains,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::{fast_greedy, StoppingCriteria};
    use crate::kernel::{
        build_theta_kernel, remap_similarity, synthetic_kernel, SyntheticConfig,
    };
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_sim(n: usize) -> KernelMatrix {
        KernelMatrix::new(Array2::eye(n)).unwrap()
    }

    /// Random remapped similarity plus uniform scores in [0, 1).
    fn random_instance(m: usize, seed: u64) -> (KernelMatrix, Vec<f64>) {
        let (_, _, feats) =
            synthetic_kernel(&SyntheticConfig::new(m, seed).with_feature_dim(6)).unwrap();
        let sim = remap_similarity(&feats);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let scores: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        (sim, scores)
    }

    #[test]
    fn theta_one_is_pure_relevance() {
        let sim = identity_sim(3);
        let theta = TradeoffConfig::new(1.0).unwrap();
        let req = RerankRequest::new(&[0.1, 0.9, 0.5], &sim, theta, 2).unwrap();
        let dpp = dpp_rerank(&req).unwrap();
        assert_eq!(dpp.items, vec![1, 2]);
        let mmr = mmr_rerank(&req).unwrap();
        assert_eq!(mmr.items, dpp.items);
    }

    #[test]
    fn theta_zero_identity_similarity_ties_by_index() {
        let sim = identity_sim(4);
        let theta = TradeoffConfig::new(0.0).unwrap();
        let req = RerankRequest::new(&[0.3, 0.9, 0.1, 0.5], &sim, theta, 4).unwrap();
        let out = dpp_rerank(&req).unwrap();
        assert_eq!(out.items, vec![0, 1, 2, 3]);
        for g in out.gains {
            assert!(g.abs() < 1e-15);
        }
    }

    #[test]
    fn matches_fast_greedy_on_theta_kernel() {
        for seed in [3u64, 11, 29] {
            let (sim, scores) = random_instance(32, seed);
            for theta_val in [0.3, 0.7] {
                let theta = TradeoffConfig::new(theta_val).unwrap();
                let req = RerankRequest::new(&scores, &sim, theta, 10).unwrap();
                let ours = dpp_rerank(&req).unwrap();
                let lprime = build_theta_kernel(&scores, &sim, theta).unwrap();
                let greedy =
                    fast_greedy(&lprime, &StoppingCriteria::cardinality(10)).unwrap();
                assert_eq!(ours.items, greedy.chosen, "seed {seed} theta {theta_val}");
            }
        }
    }

    #[test]
    fn window_wider_than_list_changes_nothing() {
        let (sim, scores) = random_instance(16, 77);
        let theta = TradeoffConfig::new(0.5).unwrap();
        let plain = dpp_rerank(&RerankRequest::new(&scores, &sim, theta, 8).unwrap()).unwrap();
        let windowed = dpp_rerank(
            &RerankRequest::new(&scores, &sim, theta, 8)
                .unwrap()
                .with_window(9),
        )
        .unwrap();
        assert_eq!(plain.items, windowed.items);
    }

    #[test]
    fn theta_zero_equals_plain_greedy_on_similarity() {
        let (sim, scores) = random_instance(12, 13);
        let theta = TradeoffConfig::new(0.0).unwrap();
        let req = RerankRequest::new(&scores, &sim, theta, 4).unwrap();
        let ours = dpp_rerank(&req).unwrap();
        let greedy = fast_greedy(&sim, &StoppingCriteria::cardinality(4)).unwrap();
        assert_eq!(ours.items, greedy.chosen);
    }

    #[test]
    fn endpoint_objectives_against_brute_force() {
        let (sim, scores) = random_instance(10, 5);
        let n = 3;
        // theta = 1 maximizes the score sum exactly.
        let theta1 = TradeoffConfig::new(1.0).unwrap();
        let top = dpp_rerank(&RerankRequest::new(&scores, &sim, theta1, n).unwrap()).unwrap();
        let top_sum: f64 = top.items.iter().map(|&i| scores[i]).sum();
        let mut best_sum = f64::NEG_INFINITY;
        for a in 0..10 {
            for b in (a + 1)..10 {
                for c in (b + 1)..10 {
                    best_sum = best_sum.max(scores[a] + scores[b] + scores[c]);
                }
            }
        }
        assert!((top_sum - best_sum).abs() < 1e-12);
        // theta = 0 greedily maximizes log det(S_R); the exhaustive optimum
        // bounds it from above.
        let theta0 = TradeoffConfig::new(0.0).unwrap();
        let diverse =
            dpp_rerank(&RerankRequest::new(&scores, &sim, theta0, n).unwrap()).unwrap();
        let greedy_ld = crate::dense::log_det(&sim.principal_submatrix(&diverse.items)).unwrap();
        let best = crate::greedy::brute_force_map(&sim, n).unwrap();
        let best_ld = crate::dense::log_det(&sim.principal_submatrix(&best)).unwrap();
        assert!(best_ld >= greedy_ld - 1e-9);
    }

    #[test]
    fn dead_candidates_stay_excluded_below_one() {
        // Items 0 and 1 are identical; after picking one, the other's d²
        // collapses to 0 and must never be selected at theta < 1, even
        // though its relevance dwarfs everything else.
        let a = ndarray::array![[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let sim = KernelMatrix::new(a).unwrap();
        let theta = TradeoffConfig::new(0.9).unwrap();
        let req = RerankRequest::new(&[10.0, 10.0, 0.1], &sim, theta, 3).unwrap();
        let out = dpp_rerank(&req).unwrap();
        assert_eq!(out.items, vec![0, 2]);
    }

    #[test]
    fn mmr_separates_identical_items() {
        // Hand enumeration: identical pair (S = 1) with top scores plus an
        // unrelated moderate item; theta = 0.5 inserts the unrelated item
        // between the twins.
        let a = ndarray::array![[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let sim = KernelMatrix::new(a).unwrap();
        let theta = TradeoffConfig::new(0.5).unwrap();
        let req = RerankRequest::new(&[0.9, 0.9, 0.5], &sim, theta, 3).unwrap();
        let out = mmr_rerank(&req).unwrap();
        assert_eq!(out.items, vec![0, 2, 1]);
    }

    #[test]
    fn mmr_identity_similarity_is_relevance_order() {
        let sim = identity_sim(4);
        let scores = [0.3, 0.9, 0.1, 0.5];
        for theta_val in [0.0, 0.4, 0.8] {
            let theta = TradeoffConfig::new(theta_val).unwrap();
            let req = RerankRequest::new(&scores, &sim, theta, 4).unwrap();
            let out = mmr_rerank(&req).unwrap();
            assert_eq!(out.items, vec![1, 3, 0, 2], "theta {theta_val}");
        }
    }

    #[test]
    fn mmr_windowed_forgets_old_picks() {
        // With a window of 2 only the last pick is penalized, so the twin
        // of the first item comes back as soon as it leaves the window.
        let a = ndarray::array![[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let sim = KernelMatrix::new(a).unwrap();
        let theta = TradeoffConfig::new(0.5).unwrap();
        let req = RerankRequest::new(&[0.9, 0.9, 0.5], &sim, theta, 3)
            .unwrap()
            .with_window(2);
        let out = mmr_rerank(&req).unwrap();
        assert_eq!(out.items, vec![0, 2, 1]);
        // Unwindowed comparison on a 4-item variant where the window makes
        // a difference: twins at 0/1, unrelated 2/3.
        let a = ndarray::array![
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0]
        ];
        let sim = KernelMatrix::new(a).unwrap();
        let scores = [0.9, 0.85, 0.5, 0.1];
        // Unwindowed: the twin stays penalized forever, so the weak item 3
        // beats it (0.05 vs -0.075). Windowed: once item 0 leaves the
        // window the twin scores 0.425 and wins.
        let plain = mmr_rerank(&RerankRequest::new(&scores, &sim, theta, 3).unwrap()).unwrap();
        assert_eq!(plain.items, vec![0, 2, 3]);
        let windowed = mmr_rerank(
            &RerankRequest::new(&scores, &sim, theta, 3)
                .unwrap()
                .with_window(2),
        )
        .unwrap();
        assert_eq!(windowed.items, vec![0, 2, 1]);
    }

    #[test]
    fn request_validation() {
        let sim = identity_sim(3);
        let theta = TradeoffConfig::new(0.5).unwrap();
        assert!(RerankRequest::new(&[1.0, 2.0], &sim, theta, 2).is_err());
        assert!(RerankRequest::new(&[1.0, 2.0, 3.0], &sim, theta, 0).is_err());
        let bad_diag = KernelMatrix::new(ndarray::array![[0.5, 0.0], [0.0, 1.0]]).unwrap();
        assert!(RerankRequest::new(&[1.0, 2.0], &bad_diag, theta, 1).is_err());
    }
}
