//! Incremental Cholesky primitives.
//!
//! A selection run maintains a lower-triangular factor `V` with
//! `V Vᵀ = L_Y` for the current selected (or windowed) set `Y`, plus one
//! auxiliary pair `(c_i, d_i²)` per candidate `i` satisfying
//! `V c_iᵀ = L_{Y,i}` and `d_i² = L_ii - |c_i|²`. Three updates keep the
//! whole state consistent in O(|Y|) per candidate:
//!
//! * [`TriFactor::extend`] appends the accepted candidate's row,
//! * [`CandidateAux::step`] appends `e_i = (L_ji - <c_j, c_i>) / d_j` and
//!   lowers `d_i²` by `e_i²`,
//! * [`TriFactor::drop_first`] removes the earliest selected row/column via
//!   a sweep of plane rotations, whose [`DowndateTrace`] replays the same
//!   rotations onto every candidate through
//!   [`CandidateAux::apply_downdate`].
//!
//! [`CandidateBlock`] holds all candidate vectors in one preallocated
//! row-major block so the per-iteration sweep appends by index bump.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Lower-triangular factor stored packed row-major: row `i` holds `i + 1`
/// entries starting at offset `i (i + 1) / 2`. All diagonal entries are
/// strictly positive.
#[derive(Debug, Clone, Default)]
pub struct TriFactor {
    dim: usize,
    data: Vec<f64>,
}

#[inline]
fn tri_offset(i: usize) -> usize {
    i * (i + 1) / 2
}

impl TriFactor {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry (i, j) with j <= i.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i && i < self.dim);
        self.data[tri_offset(i) + j]
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.entry(i, i)
    }

    /// Row `i` (the `i + 1` stored entries).
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[tri_offset(i)..tri_offset(i) + i + 1]
    }

    /// Append one row: the factor of `L_{Y ∪ {j}}` is the factor of `L_Y`
    /// with `(c_j, d_j)` as the new bottom row.
    pub fn extend(&mut self, new_row: &[f64], diag: f64) -> Result<()> {
        if new_row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "factor extension row",
                expected: self.dim,
                found: new_row.len(),
            });
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::DegenerateExtension { d: diag });
        }
        self.data.extend_from_slice(new_row);
        self.data.push(diag);
        self.dim += 1;
        Ok(())
    }

    /// Remove the first row and column. The remaining factor is rebuilt in
    /// place by the classical rank-one update `V' V'ᵀ = V̈ V̈ᵀ + v vᵀ`, where
    /// `v` is the old first column below the diagonal and `V̈` the trailing
    /// block, processed one level at a time with plane rotations.
    ///
    /// The returned trace records, per level, exactly the three scalars a
    /// candidate vector needs to replay the same rotations.
    pub fn drop_first(&mut self) -> Result<DowndateTrace> {
        if self.dim == 0 {
            return Err(Error::EmptyFactor);
        }
        let new_dim = self.dim - 1;
        let mut v: Vec<f64> = (1..self.dim).map(|i| self.entry(i, 0)).collect();
        let mut nd = Vec::with_capacity(tri_offset(new_dim) + new_dim);
        for i in 1..self.dim {
            nd.extend_from_slice(&self.row(i)[1..]);
        }
        let mut steps = Vec::with_capacity(new_dim);
        for l in 0..new_dim {
            let old_diag = nd[tri_offset(l) + l];
            let vl = v[l];
            // Hypotenuse with overflow-safe scaling.
            let t = old_diag.hypot(vl);
            for i in (l + 1)..new_dim {
                let pos = tri_offset(i) + l;
                let rotated = (nd[pos] * old_diag + v[i] * vl) / t;
                v[i] = (v[i] * t - rotated * vl) / old_diag;
                nd[pos] = rotated;
            }
            nd[tri_offset(l) + l] = t;
            steps.push(RotationStep {
                old_diag,
                new_diag: t,
                v: vl,
            });
        }
        self.dim = new_dim;
        self.data = nd;
        Ok(DowndateTrace { steps })
    }

    /// Materialize `V Vᵀ` (used by identity checks).
    pub fn reconstruct(&self) -> Array2<f64> {
        let n = self.dim;
        let mut out = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let lo = i.min(j);
                let mut sum = 0.0;
                for k in 0..=lo {
                    sum += self.entry(i, k) * self.entry(j, k);
                }
                out[(i, j)] = sum;
            }
        }
        out
    }
}

/// One level of the removal sweep: the trailing-block diagonal before the
/// rotation, the rotated diagonal `t`, and the first-column entry `v_l`
/// active at that level.
#[derive(Debug, Clone, Copy)]
pub struct RotationStep {
    pub old_diag: f64,
    pub new_diag: f64,
    pub v: f64,
}

/// Rotation trace produced by [`TriFactor::drop_first`], replayed onto
/// candidate vectors.
#[derive(Debug, Clone)]
pub struct DowndateTrace {
    steps: Vec<RotationStep>,
}

impl DowndateTrace {
    /// Number of levels; equals the post-removal factor dimension.
    pub fn levels(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[RotationStep] {
        &self.steps
    }
}

/// Per-candidate auxiliary state: the growing row vector `c_i` and the
/// scalar `d_i² = L_ii - |c_i|²` (clamped at zero), plus a liveness flag
/// cleared when the candidate is selected.
#[derive(Debug, Clone)]
pub struct CandidateAux {
    c: Vec<f64>,
    d2: f64,
    alive: bool,
}

impl CandidateAux {
    pub fn new(diag: f64) -> Self {
        Self {
            c: Vec::new(),
            d2: clamp_gain(diag),
            alive: true,
        }
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    pub fn alive(&self) -> bool {
        self.alive
    }

    pub fn kill(&mut self) {
        self.alive = false;
    }

    /// Append `e_i = (L_ji - <c_j, c_i>) / d_j` after item `j` was accepted,
    /// and lower `d_i²` by `e_i²`. Returns the appended entry.
    pub fn step(&mut self, l_ji: f64, c_j: &[f64], d_j: f64) -> Result<f64> {
        debug_assert!(self.alive, "stepping a dead candidate");
        if c_j.len() != self.c.len() {
            return Err(Error::DimensionMismatch {
                context: "candidate step pivot vector",
                expected: self.c.len(),
                found: c_j.len(),
            });
        }
        if !(d_j > 0.0) || !d_j.is_finite() {
            return Err(Error::DegeneratePivot { d: d_j });
        }
        let e = (l_ji - dot(c_j, &self.c)) / d_j;
        self.c.push(e);
        self.d2 = next_d2(self.d2, e);
        Ok(e)
    }

    /// Replay the removal rotations: strip the leading entry, rotate the
    /// remaining entries level by level, and raise `d_i²` by the square of
    /// the final carried coefficient.
    pub fn apply_downdate(&mut self, trace: &DowndateTrace) -> Result<()> {
        if self.c.len() != trace.levels() + 1 {
            return Err(Error::TraceMismatch {
                trace_len: trace.levels(),
                c_len: self.c.len(),
            });
        }
        let mut a = self.c[0];
        for (l, step) in trace.steps().iter().enumerate() {
            let rotated = (self.c[l + 1] * step.old_diag + a * step.v) / step.new_diag;
            a = (a * step.new_diag - rotated * step.v) / step.old_diag;
            self.c[l] = rotated;
        }
        self.c.pop();
        self.d2 += a * a;
        Ok(())
    }
}

/// All candidate vectors in one preallocated `n x cap` row-major block with
/// a shared current length, so the sweep writes each new entry by index.
/// The block grows by doubling when an unconstrained run outlives the
/// initial capacity.
#[derive(Debug, Clone)]
pub struct CandidateBlock {
    data: Vec<f64>,
    cap: usize,
    len: usize,
    d2: Vec<f64>,
    alive: Vec<bool>,
}

impl CandidateBlock {
    /// One candidate per kernel diagonal entry; `cap` bounds the number of
    /// entries a candidate vector can hold before the block regrows.
    pub fn new(diag: &[f64], cap: usize) -> Self {
        let n = diag.len();
        let cap = cap.max(1);
        Self {
            data: vec![0.0; n * cap],
            cap,
            len: 0,
            d2: diag.iter().map(|&x| clamp_gain(x)).collect(),
            alive: vec![true; n],
        }
    }

    pub fn n(&self) -> usize {
        self.d2.len()
    }

    /// Shared length of every live candidate vector.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn d2(&self, i: usize) -> f64 {
        self.d2[i]
    }

    #[inline]
    pub fn alive(&self, i: usize) -> bool {
        self.alive[i]
    }

    pub fn kill(&mut self, i: usize) {
        self.alive[i] = false;
    }

    #[inline]
    pub fn c(&self, i: usize) -> &[f64] {
        &self.data[i * self.cap..i * self.cap + self.len]
    }

    /// One selection sweep: for every live candidate append
    /// `e_i = (row_j[i] - <c_j, c_i>) / d_j` and lower `d_i²` by `e_i²`.
    pub fn sweep(&mut self, row_j: &[f64], c_j: &[f64], d_j: f64) -> Result<()> {
        if row_j.len() != self.n() {
            return Err(Error::DimensionMismatch {
                context: "sweep kernel row",
                expected: self.n(),
                found: row_j.len(),
            });
        }
        if c_j.len() != self.len {
            return Err(Error::DimensionMismatch {
                context: "sweep pivot vector",
                expected: self.len,
                found: c_j.len(),
            });
        }
        if !(d_j > 0.0) || !d_j.is_finite() {
            return Err(Error::DegeneratePivot { d: d_j });
        }
        if self.len == self.cap {
            self.grow();
        }
        let cap = self.cap;
        let len = self.len;
        for i in 0..self.n() {
            if !self.alive[i] {
                continue;
            }
            let base = i * cap;
            let ci = &self.data[base..base + len];
            let e = (row_j[i] - dot(c_j, ci)) / d_j;
            self.data[base + len] = e;
            self.d2[i] = next_d2(self.d2[i], e);
        }
        self.len += 1;
        Ok(())
    }

    /// Replay a removal trace onto every live candidate, folding the leading
    /// strip and the level rotations into one left-shifting pass.
    pub fn apply_downdate(&mut self, trace: &DowndateTrace) -> Result<()> {
        if self.len != trace.levels() + 1 {
            return Err(Error::TraceMismatch {
                trace_len: trace.levels(),
                c_len: self.len,
            });
        }
        let cap = self.cap;
        for i in 0..self.n() {
            if !self.alive[i] {
                continue;
            }
            let base = i * cap;
            let mut a = self.data[base];
            for (l, step) in trace.steps().iter().enumerate() {
                let rotated =
                    (self.data[base + l + 1] * step.old_diag + a * step.v) / step.new_diag;
                a = (a * step.new_diag - rotated * step.v) / step.old_diag;
                self.data[base + l] = rotated;
            }
            self.d2[i] += a * a;
        }
        self.len -= 1;
        Ok(())
    }

    /// Largest `d²` among live candidates, smallest index on ties.
    /// `Err(i)` reports the first candidate with a non-finite `d²`.
    pub fn best_alive(&self) -> std::result::Result<Option<(usize, f64)>, usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.n() {
            if !self.alive[i] {
                continue;
            }
            let d2 = self.d2[i];
            if !d2.is_finite() {
                return Err(i);
            }
            match best {
                Some((_, b)) if d2 <= b => {}
                _ => best = Some((i, d2)),
            }
        }
        Ok(best)
    }

    fn grow(&mut self) {
        let new_cap = (self.cap * 2).max(1);
        let mut new_data = vec![0.0; self.n() * new_cap];
        for i in 0..self.n() {
            let src = i * self.cap;
            let dst = i * new_cap;
            new_data[dst..dst + self.len].copy_from_slice(&self.data[src..src + self.len]);
        }
        self.data = new_data;
        self.cap = new_cap;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        sum += x * y;
    }
    sum
}

/// `d² - e²`, clamped so rounding noise never leaves a negative gain.
/// Non-finite updates are forced to NaN so the selection loop can report a
/// numerical failure instead of silently clamping it away.
#[inline]
fn next_d2(d2: f64, e: f64) -> f64 {
    if !e.is_finite() {
        return f64::NAN;
    }
    clamp_gain(d2 - e * e)
}

#[inline]
fn clamp_gain(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        x
    }
}
