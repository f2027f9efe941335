//! Kernel construction: Gram kernels from scores and item features, the
//! similarity remap into [0, 1], the theta-reparameterized trade-off kernel,
//! and the seeded synthetic benchmark kernel.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense;
use crate::error::{Error, Result};

/// Absolute tolerance for the symmetry check on kernel entries.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense symmetric matrix used both as a DPP kernel L and as a similarity
/// matrix S. Symmetry is validated at construction; positive semidefiniteness
/// is validated on demand via [`KernelMatrix::validate_psd`].
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    data: Array2<f64>,
}

impl KernelMatrix {
    /// Wrap a square matrix, checking symmetry within [`SYMMETRY_TOL`].
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let n = data.nrows();
        if data.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "kernel matrix",
                expected: n,
                found: data.ncols(),
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = (data[(i, j)] - data[(j, i)]).abs();
                if !(diff <= SYMMETRY_TOL) {
                    return Err(Error::NotSymmetric { i, j, diff });
                }
            }
        }
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Row `i` as a contiguous slice (the storage is row-major).
    #[inline]
    pub fn row_slice(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.data.as_slice().expect("row-major layout")[i * n..(i + 1) * n]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)]).collect()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    /// The principal submatrix indexed by `idx` in both rows and columns,
    /// in the given order.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Array2<f64> {
        let k = idx.len();
        let mut sub = Array2::<f64>::zeros((k, k));
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                sub[(a, b)] = self.data[(i, j)];
            }
        }
        sub
    }

    /// Check positive semidefiniteness: a dense Cholesky of the kernel with a
    /// small diagonal jitter (`1e-10 * trace / dim`) must succeed. On failure
    /// the error names the first non-positive leading minor.
    pub fn validate_psd(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Ok(());
        }
        let trace: f64 = (0..n).map(|i| self.data[(i, i)]).sum();
        let jitter = 1e-10 * trace / n as f64;
        let mut jittered = self.data.clone();
        for i in 0..n {
            jittered[(i, i)] += jitter;
        }
        match dense::first_bad_pivot(&jittered) {
            None => Ok(()),
            Some(minor_index) => Err(Error::NotPsd { minor_index }),
        }
    }
}

/// Unit-norm item feature rows (M items, D dimensions).
#[derive(Debug, Clone)]
pub struct ItemFeatures {
    rows: Array2<f64>,
}

impl ItemFeatures {
    /// Wrap an M x D matrix whose rows must be unit-norm within 1e-10.
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        for (i, row) in rows.rows().into_iter().enumerate() {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::NotUnitNorm { row: i, norm });
            }
        }
        Ok(Self { rows })
    }

    /// Normalize arbitrary rows to unit norm. Zero rows are rejected.
    pub fn from_unnormalized(mut rows: Array2<f64>) -> Result<Self> {
        for (i, mut row) in rows.rows_mut().into_iter().enumerate() {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::NotUnitNorm { row: i, norm });
            }
            row.mapv_inplace(|x| x / norm);
        }
        Ok(Self { rows })
    }

    pub fn count(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.rows
    }
}

/// Relevance/diversity trade-off parameter theta in [0, 1] and its derived
/// kernel scaling alpha = theta / (2 (1 - theta)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffConfig {
    theta: f64,
}

impl TradeoffConfig {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidTheta { theta });
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// alpha = theta / (2 (1 - theta)); infinite at theta = 1.
    pub fn alpha(&self) -> f64 {
        if self.theta == 1.0 {
            f64::INFINITY
        } else {
            self.theta / (2.0 * (1.0 - self.theta))
        }
    }

    /// theta = 1 degenerates to sorting by relevance score.
    pub fn is_pure_relevance(&self) -> bool {
        self.theta == 1.0
    }
}

/// Configuration for the synthetic benchmark kernel. Scores follow the
/// log-linear model `r_i = exp(slope * x_i + intercept)` with `x_i ~ N(0,1)`,
/// and features are normalized standard Gaussian vectors.
#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub items: usize,
    pub feature_dim: usize,
    pub seed: u64,
    pub score_slope: f64,
    pub score_intercept: f64,
}

impl SyntheticConfig {
    /// Benchmark defaults: feature dimension equal to the item count and the
    /// (0.01, 0.2) log-linear score parameters.
    pub fn new(items: usize, seed: u64) -> Self {
        Self {
            items,
            feature_dim: items,
            seed,
            score_slope: 0.01,
            score_intercept: 0.2,
        }
    }

    pub fn with_feature_dim(mut self, dim: usize) -> Self {
        self.feature_dim = dim;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.items == 0 {
            return Err(Error::Validation("synthetic config needs items >= 1".into()));
        }
        if self.feature_dim == 0 {
            return Err(Error::Validation(
                "synthetic config needs feature_dim >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Seeded standard-normal source: ChaCha8 uniforms fed through Box-Muller.
/// The draw order is part of the reproducibility contract.
struct NormalSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSource {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite.
        let u1: f64 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// Build the Gram kernel `L_ij = r_i * r_j * <f_i, f_j>` from nonnegative
/// scores and unit-norm features.
pub fn build_gram_kernel(scores: &[f64], feats: &ItemFeatures) -> Result<KernelMatrix> {
    if scores.len() != feats.count() {
        return Err(Error::DimensionMismatch {
            context: "gram kernel scores",
            expected: feats.count(),
            found: scores.len(),
        });
    }
    for (index, &value) in scores.iter().enumerate() {
        if value < 0.0 {
            return Err(Error::NegativeScore { index, value });
        }
    }
    let r = Array1::from(scores.to_vec());
    let b = feats.as_array() * &r.view().insert_axis(ndarray::Axis(1));
    let mut l = b.dot(&b.t());
    symmetrize(&mut l);
    KernelMatrix::new(l)
}

/// Map signed feature similarities into [0, 1]:
/// `S_ij = (1 + <f_i, f_j>) / 2`, the Gram matrix of the lifted unit vectors
/// `(1, f_i) / sqrt(2)`. The diagonal is set to exactly 1.
pub fn remap_similarity(feats: &ItemFeatures) -> KernelMatrix {
    let f = feats.as_array();
    let mut s = f.dot(&f.t());
    s.mapv_inplace(|x| 0.5 * (1.0 + x));
    symmetrize(&mut s);
    for i in 0..feats.count() {
        s[(i, i)] = 1.0;
    }
    KernelMatrix::new(s).expect("remap output is symmetric by construction")
}

/// Kernel for the theta trade-off:
/// `L'_ij = exp(alpha r_i) * S_ij * exp(alpha r_j)` with
/// `alpha = theta / (2 (1 - theta))`. Positive semidefiniteness is preserved
/// because this is a congruence by a positive diagonal.
///
/// theta = 1 has no finite alpha and is rejected; that case is handled by the
/// pure-relevance ranking path in [`crate::rerank`].
pub fn build_theta_kernel(
    scores: &[f64],
    sim: &KernelMatrix,
    cfg: TradeoffConfig,
) -> Result<KernelMatrix> {
    if cfg.is_pure_relevance() {
        return Err(Error::ThetaOne);
    }
    if scores.len() != sim.dim() {
        return Err(Error::DimensionMismatch {
            context: "theta kernel scores",
            expected: sim.dim(),
            found: scores.len(),
        });
    }
    let alpha = cfg.alpha();
    let weights: Vec<f64> = scores.iter().map(|&r| (alpha * r).exp()).collect();
    let n = sim.dim();
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = weights[i] * sim.entry(i, j) * weights[j];
        }
    }
    KernelMatrix::new(out)
}

/// Seeded synthetic benchmark instance: scores `r_i = exp(0.01 x_i + 0.2)`
/// and normalized Gaussian features, assembled into a Gram kernel.
///
/// Draw order (fixed for reproducibility): the M score variates first, then
/// the M x D feature matrix row by row.
pub fn synthetic_kernel(
    cfg: &SyntheticConfig,
) -> Result<(KernelMatrix, Vec<f64>, ItemFeatures)> {
    cfg.validate()?;
    let mut source = NormalSource::new(cfg.seed);
    let scores: Vec<f64> = (0..cfg.items)
        .map(|_| (cfg.score_slope * source.next() + cfg.score_intercept).exp())
        .collect();
    let mut rows = Array2::<f64>::zeros((cfg.items, cfg.feature_dim));
    for mut row in rows.rows_mut() {
        for x in row.iter_mut() {
            *x = source.next();
        }
    }
    let feats = ItemFeatures::from_unnormalized(rows)?;
    let kernel = build_gram_kernel(&scores, &feats)?;
    Ok((kernel, scores, feats))
}

/// Force exact symmetry by averaging mirrored entries in place.
fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
}
