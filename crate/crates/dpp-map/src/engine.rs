//! Shared incremental selection loop behind the greedy, windowed, and
//! weighted re-ranking entry points.
//!
//! One iteration: sweep every live candidate with the last accepted item's
//! `(c_j, d_j)`, drop the earliest window member once the selection is long
//! enough, then accept the candidate maximizing the gain rule. The factor
//! and candidate state stay consistent with the current window throughout.

use crate::chol::{CandidateBlock, TriFactor};
use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;

/// How a candidate's gain is scored at the argmax.
#[derive(Debug, Clone, Copy)]
pub(crate) enum GainRule<'a> {
    /// Pure log-determinant gain; candidates are compared on `d²` directly
    /// since the log is monotone.
    LogDet,
    /// Weighted gain `theta * r_i + (1 - theta) * ln(d_i²)`; candidates with
    /// `d² <= epsilon` are excluded (their gain is -inf).
    ThetaWeighted { theta: f64, scores: &'a [f64] },
}

/// Stopping behavior. `Unconstrained` stops before accepting an item whose
/// `d² < 1`; `Cardinality` stops at `n` items or when the best `d²` (or for
/// the weighted rule, the last eligible candidate) falls below `epsilon`.
#[derive(Debug, Clone, Copy)]
pub(crate) enum StopSpec {
    Unconstrained { epsilon: f64 },
    Cardinality { n: usize, epsilon: f64 },
}

impl StopSpec {
    fn epsilon(&self) -> f64 {
        match self {
            StopSpec::Unconstrained { epsilon } | StopSpec::Cardinality { epsilon, .. } => {
                *epsilon
            }
        }
    }

    fn limit(&self) -> Option<usize> {
        match self {
            StopSpec::Unconstrained { .. } => None,
            StopSpec::Cardinality { n, .. } => Some(*n),
        }
    }
}

/// One accepted item with its pivot `d²` and its gain under the active rule.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Picked {
    pub item: usize,
    pub pivot_d2: f64,
    pub gain: f64,
}

/// Factor/window state exposed to observers after each accept or remove.
#[derive(Debug)]
pub(crate) enum Event<'a> {
    Accept {
        item: usize,
        factor: &'a TriFactor,
        window: &'a [usize],
    },
    Remove {
        item: usize,
        factor: &'a TriFactor,
        window: &'a [usize],
    },
}

pub(crate) fn run(
    kernel: &KernelMatrix,
    window: usize,
    rule: GainRule<'_>,
    stop: StopSpec,
) -> Result<Vec<Picked>> {
    run_observed(kernel, window, rule, stop, &mut |_| {})
}

pub(crate) fn run_observed(
    kernel: &KernelMatrix,
    window: usize,
    rule: GainRule<'_>,
    stop: StopSpec,
    observer: &mut dyn FnMut(Event<'_>),
) -> Result<Vec<Picked>> {
    let m = kernel.dim();
    if m == 0 {
        return Ok(Vec::new());
    }
    if let GainRule::ThetaWeighted { scores, .. } = rule {
        if scores.len() != m {
            return Err(Error::DimensionMismatch {
                context: "weighted gain scores",
                expected: m,
                found: scores.len(),
            });
        }
    }
    let eps = stop.epsilon();

    // Candidate vectors never outgrow the window (if any), the cardinality
    // limit, or the item count; unconstrained runs start small and let the
    // block regrow.
    let mut cap = stop.limit().unwrap_or(64).min(m);
    if window > 0 {
        cap = cap.min(window);
    }
    let mut block = CandidateBlock::new(&kernel.diagonal(), cap);
    let mut factor = TriFactor::empty();
    let mut members: Vec<usize> = Vec::new();
    let mut picked: Vec<Picked> = Vec::new();

    // Seed: the gain-rule argmax over the diagonal. A seed at or below
    // epsilon would make 1/d_j blow up, so the result is empty instead.
    let Some((j0, d20, gain0)) = pick_best(&block, &rule, eps, picked.len())? else {
        return Ok(picked);
    };
    if d20 <= eps {
        return Ok(picked);
    }
    let mut pending = accept(
        &mut block, &mut factor, &mut members, &mut picked, observer, j0, d20, gain0,
    )?;

    loop {
        if let Some(n) = stop.limit() {
            if picked.len() >= n {
                break;
            }
        }
        let (c_j, d_j, j) = pending;
        block.sweep(kernel.row_slice(j), &c_j, d_j)?;
        if window > 0 && picked.len() >= window {
            let trace = factor.drop_first()?;
            let removed = members.remove(0);
            block.apply_downdate(&trace)?;
            observer(Event::Remove {
                item: removed,
                factor: &factor,
                window: &members,
            });
        }
        let Some((j, d2, gain)) = pick_best(&block, &rule, eps, picked.len())? else {
            break;
        };
        match stop {
            StopSpec::Unconstrained { .. } if d2 < 1.0 => break,
            StopSpec::Cardinality { .. } if d2 < eps => break,
            _ => {}
        }
        pending = accept(
            &mut block, &mut factor, &mut members, &mut picked, observer, j, d2, gain,
        )?;
    }
    Ok(picked)
}

/// Gain-rule argmax over live candidates, ties to the smallest index.
/// Returns the winner's `(index, d², gain)`.
fn pick_best(
    block: &CandidateBlock,
    rule: &GainRule<'_>,
    eps: f64,
    iteration: usize,
) -> Result<Option<(usize, f64, f64)>> {
    match rule {
        GainRule::LogDet => {
            let best = block
                .best_alive()
                .map_err(|_| Error::NumericalFailure { iteration })?;
            Ok(best.map(|(i, d2)| (i, d2, d2.ln())))
        }
        GainRule::ThetaWeighted { theta, scores } => {
            let mut best: Option<(usize, f64, f64)> = None;
            for i in 0..block.n() {
                if !block.alive(i) {
                    continue;
                }
                let d2 = block.d2(i);
                if !d2.is_finite() {
                    return Err(Error::NumericalFailure { iteration });
                }
                if d2 <= eps {
                    continue;
                }
                let gain = theta * scores[i] + (1.0 - theta) * d2.ln();
                if !gain.is_finite() {
                    return Err(Error::NumericalFailure { iteration });
                }
                match best {
                    Some((_, _, g)) if gain <= g => {}
                    _ => best = Some((i, d2, gain)),
                }
            }
            Ok(best)
        }
    }
}

/// Acceptance bookkeeping: copy the winner's row out of the block, extend
/// the factor, record the pick, and hand back the sweep inputs for the next
/// iteration.
#[allow(clippy::too_many_arguments)]
fn accept(
    block: &mut CandidateBlock,
    factor: &mut TriFactor,
    members: &mut Vec<usize>,
    picked: &mut Vec<Picked>,
    observer: &mut dyn FnMut(Event<'_>),
    item: usize,
    d2: f64,
    gain: f64,
) -> Result<(Vec<f64>, f64, usize)> {
    let c_j = block.c(item).to_vec();
    let d_j = d2.sqrt();
    factor.extend(&c_j, d_j)?;
    members.push(item);
    block.kill(item);
    picked.push(Picked {
        item,
        pivot_d2: d2,
        gain,
    });
    observer(Event::Accept {
        item,
        factor,
        window: members,
    });
    Ok((c_j, d_j, item))
}
