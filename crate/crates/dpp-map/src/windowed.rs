//! Greedy MAP inference with diversity enforced only inside a sliding
//! window: the marginal gain of a candidate is taken against the `w - 1`
//! most recently accepted items, and after each acceptance beyond the
//! window the earliest member is removed with a rank-one factor downdate.

use crate::dense;
use crate::engine::{self, GainRule};
use crate::error::{Error, Result};
use crate::greedy::{SelectionResult, StopMode, StoppingCriteria};
use crate::kernel::KernelMatrix;

/// Sliding-window greedy selection in O(wNM) for N items.
///
/// `w = 1` keeps the window empty at every step, so the selection is just
/// the items sorted by diagonal. `w` larger than the selection length never
/// removes anything and reproduces [`crate::greedy::fast_greedy`] exactly.
pub fn windowed_greedy(
    kernel: &KernelMatrix,
    w: usize,
    stop: &StoppingCriteria,
) -> Result<SelectionResult> {
    if w == 0 {
        return Err(Error::Validation("window size must be at least 1".into()));
    }
    let picks = engine::run(kernel, w, GainRule::LogDet, stop.to_spec())?;
    Ok(SelectionResult::from_picks(picks))
}

/// From-scratch reference for [`windowed_greedy`]: every iteration refactors
/// the window kernel densely and recomputes every candidate gain with a
/// triangular solve (the O(w²M)-per-iteration route).
pub fn windowed_reference(
    kernel: &KernelMatrix,
    w: usize,
    stop: &StoppingCriteria,
) -> Result<SelectionResult> {
    if w == 0 {
        return Err(Error::Validation("window size must be at least 1".into()));
    }
    let m = kernel.dim();
    let mut alive = vec![true; m];
    let mut chosen: Vec<usize> = Vec::new();
    let mut pivots: Vec<f64> = Vec::new();
    let mut window: Vec<usize> = Vec::new();
    loop {
        if let StopMode::Cardinality(n) = stop.mode {
            if chosen.len() >= n {
                break;
            }
        }
        let lower = dense::cholesky(&kernel.principal_submatrix(&window)).ok_or(
            Error::NumericalFailure {
                iteration: chosen.len(),
            },
        )?;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            if !alive[i] {
                continue;
            }
            let b: Vec<f64> = window.iter().map(|&j| kernel.entry(j, i)).collect();
            let c = dense::solve_lower(&lower, &b);
            let norm2: f64 = c.iter().map(|x| x * x).sum();
            let mut d2 = kernel.entry(i, i) - norm2;
            if d2.is_nan() {
                return Err(Error::NumericalFailure {
                    iteration: chosen.len(),
                });
            }
            if d2 < 0.0 {
                d2 = 0.0;
            }
            match best {
                Some((_, g)) if d2 <= g => {}
                _ => best = Some((i, d2)),
            }
        }
        let Some((j, d2)) = best else { break };
        if chosen.is_empty() {
            if d2 <= stop.epsilon {
                break;
            }
        } else {
            match stop.mode {
                StopMode::Unconstrained if d2 < 1.0 => break,
                StopMode::Cardinality(_) if d2 < stop.epsilon => break,
                _ => {}
            }
        }
        alive[j] = false;
        chosen.push(j);
        pivots.push(d2);
        window.push(j);
        if chosen.len() >= w {
            window.remove(0);
        }
    }
    let log_det = pivots.iter().map(|p| p.ln()).sum();
    Ok(SelectionResult {
        chosen,
        pivots,
        log_det,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::fast_greedy;
    use crate::kernel::{synthetic_kernel, KernelMatrix, SyntheticConfig};
    use ndarray::Array2;

    fn random_kernel(m: usize, seed: u64) -> KernelMatrix {
        synthetic_kernel(&SyntheticConfig::new(m, seed)).unwrap().0
    }

    fn diag_kernel(diag: &[f64]) -> KernelMatrix {
        let n = diag.len();
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            a[(i, i)] = diag[i];
        }
        KernelMatrix::new(a).unwrap()
    }

    #[test]
    fn wide_window_reproduces_plain_greedy() {
        for seed in 0..5u64 {
            let kernel = random_kernel(12, 700 + seed);
            let stop = StoppingCriteria::cardinality(8);
            let plain = fast_greedy(&kernel, &stop).unwrap();
            let windowed = windowed_greedy(&kernel, 9, &stop).unwrap();
            assert_eq!(plain.chosen, windowed.chosen, "seed {seed}");
            assert_eq!(plain.pivots, windowed.pivots);
            let reference = windowed_reference(&kernel, 9, &stop).unwrap();
            assert_eq!(plain.chosen, reference.chosen);
        }
    }

    #[test]
    fn window_one_sorts_by_diagonal() {
        let kernel = random_kernel(10, 42);
        let stop = StoppingCriteria::cardinality(6);
        let result = windowed_greedy(&kernel, 1, &stop).unwrap();
        let mut order: Vec<usize> = (0..10).collect();
        order.sort_by(|&a, &b| {
            kernel
                .entry(b, b)
                .partial_cmp(&kernel.entry(a, a))
                .unwrap()
                .then(a.cmp(&b))
        });
        assert_eq!(result.chosen, order[..6].to_vec());
        let reference = windowed_reference(&kernel, 1, &stop).unwrap();
        assert_eq!(result.chosen, reference.chosen);
    }

    #[test]
    fn matches_reference_across_window_sizes() {
        for seed in 0..8u64 {
            let kernel = random_kernel(12, 900 + seed);
            let stop = StoppingCriteria::cardinality(8);
            for w in [2usize, 3, 5, 10] {
                let fast = windowed_greedy(&kernel, w, &stop).unwrap();
                let reference = windowed_reference(&kernel, w, &stop).unwrap();
                assert_eq!(fast.chosen, reference.chosen, "seed {seed} w {w}");
                for (a, b) in fast.pivots.iter().zip(&reference.pivots) {
                    assert!((a - b).abs() <= 1e-6 * b.abs().max(1e-9));
                }
            }
        }
    }

    #[test]
    fn reference_diagonal_any_window_is_sorted_prefix() {
        let kernel = diag_kernel(&[1.5, 4.0, 2.5, 3.0, 3.5]);
        for w in [1usize, 2, 4] {
            let result =
                windowed_reference(&kernel, w, &StoppingCriteria::cardinality(4)).unwrap();
            assert_eq!(result.chosen, vec![1, 4, 3, 2], "w {w}");
        }
    }

    #[test]
    fn windowed_selects_past_kernel_rank() {
        // Rank-3 kernel: plain greedy exhausts after 3 picks, but a window
        // of 2 keeps reviving candidates.
        let (kernel, _, _) =
            synthetic_kernel(&SyntheticConfig::new(10, 8).with_feature_dim(3)).unwrap();
        let stop = StoppingCriteria::cardinality(8);
        let plain = fast_greedy(&kernel, &stop).unwrap();
        assert!(plain.len() <= 3);
        let windowed = windowed_greedy(&kernel, 2, &stop).unwrap();
        assert_eq!(windowed.len(), 8);
    }

    #[test]
    fn rejects_zero_window() {
        let kernel = random_kernel(4, 1);
        assert!(windowed_greedy(&kernel, 0, &StoppingCriteria::cardinality(2)).is_err());
        assert!(windowed_reference(&kernel, 0, &StoppingCriteria::cardinality(2)).is_err());
    }
}
