//! Concept erasure in embedding space.
//!
//! All three methods share one contract: given an embedding and a [`BoolMask`],
//! produce an embedding from which the erased concepts have been removed.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{concept_strengths, BoolMask, ConceptBank, ConceptSet, EmbeddingMatrix};
use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{self, RANK_TOL};

/// Relative singular-value cutoff on `C` for the Ortho dual basis. Squared it
/// is the `1e-10` cutoff on the Gram matrix `C^T C`.
const ORTHO_SVD_TOL: f64 = 1e-5;

pub const SPLICE_MAX_SWEEPS: usize = 10_000;
const SPLICE_STEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EraserKind {
    Ortho,
    Splice,
    Leace,
}

impl EraserKind {
    pub const ALL: [EraserKind; 3] = [EraserKind::Ortho, EraserKind::Splice, EraserKind::Leace];

    pub fn as_str(self) -> &'static str {
        match self {
            EraserKind::Ortho => "ortho",
            EraserKind::Splice => "splice",
            EraserKind::Leace => "leace",
        }
    }
}

impl fmt::Display for EraserKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EraserKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ortho" => Ok(EraserKind::Ortho),
            "splice" => Ok(EraserKind::Splice),
            "leace" => Ok(EraserKind::Leace),
            other => Err(Error::Unknown { kind: "eraser", name: other.to_string() }),
        }
    }
}

// ---------------------------------------------------------------- Ortho

/// Minimum-norm erasure that zeroes the scores `c_i . z` of erased concepts
/// while leaving the scores of retained concepts untouched.
#[derive(Debug, Clone)]
pub struct OrthoEraser {
    /// `C G^+` with `G = C^T C`, i.e. the transposed pseudoinverse of `C`.
    dual: DMatrix<f64>,
    vectors: DMatrix<f64>,
}

impl OrthoEraser {
    pub fn new(bank: &ConceptBank) -> Self {
        let dual = linalg::pinv(bank.vectors(), ORTHO_SVD_TOL).transpose();
        Self { dual, vectors: bank.vectors().clone() }
    }

    pub fn erase(&self, z: &DVector<f64>, mask: &BoolMask) -> Result<DVector<f64>> {
        ensure_dim("ortho embedding", self.vectors.nrows(), z.len())?;
        ensure_dim("ortho mask", self.vectors.ncols(), mask.len())?;
        let mut r = z.clone();
        for i in mask.erased().iter() {
            let score = self.vectors.column(i).dot(z);
            r.axpy(-score, &self.dual.column(i), 1.0);
        }
        Ok(r)
    }
}

/// One-shot Ortho erase, `r = z - C G^+ P_S C^T z`.
pub fn ortho_erase(z: &DVector<f64>, bank: &ConceptBank, mask: &BoolMask) -> Result<DVector<f64>> {
    OrthoEraser::new(bank).erase(z, mask)
}

// ---------------------------------------------------------------- SPLiCE

/// Sparse nonnegative decomposition of a normalized embedding over the bank.
#[derive(Debug, Clone, PartialEq)]
pub struct SpliceDecomposition {
    pub weights: DVector<f64>,
    /// Cosine between the embedding and its reconstruction `C w` (0 when `w = 0`).
    pub residual_cos: f64,
    pub sweeps: usize,
}

impl SpliceDecomposition {
    pub fn reconstruction(&self, bank: &ConceptBank) -> DVector<f64> {
        bank.vectors() * &self.weights
    }
}

/// Minimizes `1/2 |z/|z| - C w|^2 + lambda |w|_1` over `w >= 0` by cyclic
/// coordinate descent.
pub fn splice_decompose(z: &DVector<f64>, bank: &ConceptBank, lambda: f64, eps: f64) -> Result<SpliceDecomposition> {
    ensure_dim("splice embedding", bank.dim(), z.len())?;
    if lambda.is_nan() || lambda < 0.0 || eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidArgument(format!("splice needs lambda >= 0 and eps > 0 (got {lambda}, {eps})")));
    }
    let norm = z.norm();
    if norm == 0.0 {
        return Err(Error::ZeroEmbedding);
    }
    let target = z / norm;
    let c = bank.vectors();
    let n = bank.len();
    let col_sq: Vec<f64> = (0..n).map(|i| c.column(i).norm_squared()).collect();
    let mut w: DVector<f64> = DVector::zeros(n);
    let mut residual = target.clone();
    let mut sweeps = 0;
    while sweeps < SPLICE_MAX_SWEEPS {
        sweeps += 1;
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let grad = c.column(i).dot(&residual) - lambda;
            let updated = (w[i] + grad / col_sq[i]).max(0.0);
            let step = updated - w[i];
            if step != 0.0 {
                residual.axpy(-step, &c.column(i), 1.0);
                w[i] = updated;
                max_step = max_step.max(step.abs());
            }
        }
        if max_step <= SPLICE_STEP_TOL {
            break;
        }
    }
    let violation = kkt_violation(c, &w, &target, lambda);
    if violation > eps {
        return Err(Error::NonConvergence { sweeps, violation });
    }
    let recon = c * &w;
    let residual_cos = linalg::cosine(z, &recon);
    Ok(SpliceDecomposition { weights: w, residual_cos, sweeps })
}

/// Largest violation of the nonnegative lasso optimality conditions.
pub fn kkt_violation(c: &DMatrix<f64>, w: &DVector<f64>, target: &DVector<f64>, lambda: f64) -> f64 {
    let residual = target - c * w;
    (0..w.len())
        .map(|i| {
            let g = c.column(i).dot(&residual) - lambda;
            if w[i] > 0.0 {
                g.abs()
            } else {
                g.max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// `r = sum over retained i of w_i c_i`.
pub fn splice_erase(decomp: &SpliceDecomposition, bank: &ConceptBank, mask: &BoolMask) -> Result<DVector<f64>> {
    ensure_dim("splice weights", bank.len(), decomp.weights.len())?;
    ensure_dim("splice mask", bank.len(), mask.len())?;
    let mut r = DVector::zeros(bank.dim());
    for (i, &keep) in mask.bits().iter().enumerate() {
        if keep && decomp.weights[i] != 0.0 {
            r.axpy(decomp.weights[i], &bank.vectors().column(i), 1.0);
        }
    }
    Ok(r)
}

// ---------------------------------------------------------------- LEACE

/// Affine eraser `r = P z + b_shift` fitted for one subset of concepts.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaceFit {
    pub projection: DMatrix<f64>,
    pub shift: DVector<f64>,
    pub subset: ConceptSet,
    pub trained_on: usize,
    /// Label columns of `subset` used in the fit (samples x |subset|).
    pub concept_labels: DMatrix<u8>,
}

impl LeaceFit {
    pub fn erase(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        leace_erase(self, z)
    }
}

pub fn leace_erase(fit: &LeaceFit, z: &DVector<f64>) -> Result<DVector<f64>> {
    ensure_dim("leace embedding", fit.projection.ncols(), z.len())?;
    Ok(&fit.projection * z + &fit.shift)
}

/// Training statistics shared by every subset fit: mean, whitening and the
/// per-concept cross-covariance columns.
#[derive(Debug, Clone)]
pub struct LeaceStats {
    mean: DVector<f64>,
    whiten: DMatrix<f64>,
    unwhiten: DMatrix<f64>,
    cross_cov: DMatrix<f64>,
    labels: DMatrix<u8>,
    samples: usize,
}

impl LeaceStats {
    /// `train` rows are samples; `labels` is samples x n with entries in {0,1}.
    pub fn new(train: &DMatrix<f64>, labels: &DMatrix<u8>) -> Result<Self> {
        let samples = train.nrows();
        if samples < 2 {
            return Err(Error::InvalidArgument(format!("leace needs at least 2 training samples, got {samples}")));
        }
        ensure_dim("leace labels vs samples", samples, labels.nrows())?;
        if let Some(bad) = labels.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidArgument(format!("leace labels must be 0/1, found {bad}")));
        }
        let d = train.ncols();
        let n = labels.ncols();
        let mean = train.row_mean().transpose();
        let mut centered = train.clone();
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let inv = 1.0 / samples as f64;
        let cov = centered.tr_mul(&centered) * inv;
        let (unwhiten, whiten) = linalg::psd_sqrt_and_pinv_sqrt(&cov, RANK_TOL);
        let label_f = DMatrix::from_fn(samples, n, |r, c| f64::from(labels[(r, c)]));
        let label_mean = label_f.row_mean();
        let mut label_c = label_f;
        for mut row in label_c.row_iter_mut() {
            row -= &label_mean;
        }
        let cross_cov = centered.tr_mul(&label_c) * inv;
        debug_assert_eq!(cross_cov.shape(), (d, n));
        Ok(Self { mean, whiten, unwhiten, cross_cov, labels: labels.clone(), samples })
    }

    pub fn cross_covariance(&self) -> &DMatrix<f64> {
        &self.cross_cov
    }

    pub fn fit(&self, subset: &ConceptSet) -> Result<LeaceFit> {
        subset.check_within(self.cross_cov.ncols())?;
        let d = self.mean.len();
        let cols: Vec<usize> = subset.iter().collect();
        let concept_labels = DMatrix::from_fn(self.samples, cols.len(), |r, c| self.labels[(r, cols[c])]);
        if cols.is_empty() {
            return Ok(LeaceFit {
                projection: DMatrix::identity(d, d),
                shift: DVector::zeros(d),
                subset: subset.clone(),
                trained_on: self.samples,
                concept_labels,
            });
        }
        let block = DMatrix::from_fn(d, cols.len(), |r, c| self.cross_cov[(r, cols[c])]);
        let whitened = &self.whiten * block;
        let basis = linalg::column_space_basis(&whitened, RANK_TOL);
        let q = &basis * basis.transpose();
        let projection = DMatrix::identity(d, d) - &self.unwhiten * q * &self.whiten;
        let shift = &self.mean - &projection * &self.mean;
        Ok(LeaceFit { projection, shift, subset: subset.clone(), trained_on: self.samples, concept_labels })
    }
}

/// Closed-form LEACE fit for `concept_subset` on `train` with binary labels.
pub fn leace_fit(train: &EmbeddingMatrix, labels: &DMatrix<u8>, concept_subset: &ConceptSet) -> Result<LeaceFit> {
    LeaceStats::new(train.data(), labels)?.fit(concept_subset)
}

/// Binary presence labels from strength signs: 1 iff `cos(z, c_i) > 0`.
pub fn strength_sign_labels(rows: &DMatrix<f64>, bank: &ConceptBank) -> Result<DMatrix<u8>> {
    let mut labels = DMatrix::zeros(rows.nrows(), bank.len());
    for r in 0..rows.nrows() {
        let st = concept_strengths(&rows.row(r).transpose(), bank)?;
        for (c, &v) in st.values().iter().enumerate() {
            labels[(r, c)] = u8::from(v > 0.0);
        }
    }
    Ok(labels)
}

/// LEACE state for a bank: shared statistics plus fits memoized by subset.
#[derive(Debug)]
pub struct LeaceEraser {
    stats: LeaceStats,
    cache: Mutex<HashMap<ConceptSet, Arc<LeaceFit>>>,
}

impl LeaceEraser {
    pub fn new(stats: LeaceStats) -> Self {
        Self { stats, cache: Mutex::new(HashMap::new()) }
    }

    pub fn stats(&self) -> &LeaceStats {
        &self.stats
    }

    pub fn fit_for(&self, subset: &ConceptSet) -> Result<Arc<LeaceFit>> {
        if let Some(fit) = self.cache.lock().expect("leace cache poisoned").get(subset) {
            return Ok(Arc::clone(fit));
        }
        let fit = Arc::new(self.stats.fit(subset)?);
        let mut cache = self.cache.lock().expect("leace cache poisoned");
        // first insert wins so every caller sees the same published fit
        Ok(Arc::clone(cache.entry(subset.clone()).or_insert(fit)))
    }

    pub fn cached_fits(&self) -> usize {
        self.cache.lock().expect("leace cache poisoned").len()
    }

    pub fn erase(&self, z: &DVector<f64>, mask: &BoolMask) -> Result<DVector<f64>> {
        ensure_dim("leace mask", self.stats.cross_cov.ncols(), mask.len())?;
        let erased = mask.erased();
        if erased.is_empty() {
            ensure_dim("leace embedding", self.stats.mean.len(), z.len())?;
            return Ok(z.clone());
        }
        self.fit_for(&erased)?.erase(z)
    }
}

// ---------------------------------------------------------------- dispatcher

/// Everything needed to build an [`Eraser`] for any bank.
#[derive(Debug, Clone, PartialEq)]
pub struct EraserConfig {
    pub kind: EraserKind,
    pub lambda: f64,
    pub eps: f64,
    pub leace_train: usize,
    pub seed: u64,
}

impl Default for EraserConfig {
    fn default() -> Self {
        Self { kind: EraserKind::Ortho, lambda: 0.01, eps: 1e-6, leace_train: 500, seed: 0 }
    }
}

impl EraserConfig {
    pub fn with_kind(kind: EraserKind) -> Self {
        Self { kind, ..Self::default() }
    }
}

#[derive(Debug)]
enum Method {
    Ortho(OrthoEraser),
    Splice { lambda: f64, eps: f64 },
    Leace(LeaceEraser),
}

/// An eraser bound to a concept bank.
#[derive(Debug)]
pub struct Eraser {
    bank: ConceptBank,
    method: Method,
}

/// Per-embedding state: SPLiCE needs the decomposition before masking.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedEmbedding {
    pub z: DVector<f64>,
    pub decomposition: Option<SpliceDecomposition>,
}

impl Eraser {
    pub fn ortho(bank: ConceptBank) -> Self {
        let method = Method::Ortho(OrthoEraser::new(&bank));
        Self { bank, method }
    }

    pub fn splice(bank: ConceptBank, lambda: f64, eps: f64) -> Self {
        Self { bank, method: Method::Splice { lambda, eps } }
    }

    /// LEACE trained on `train` rows. Without labels, presence is the sign of
    /// each concept's strength.
    pub fn leace(bank: ConceptBank, train: &DMatrix<f64>, labels: Option<&DMatrix<u8>>) -> Result<Self> {
        ensure_dim("leace training dimension", bank.dim(), train.ncols())?;
        let derived;
        let labels = match labels {
            Some(l) => {
                ensure_dim("leace label columns", bank.len(), l.ncols())?;
                l
            }
            None => {
                derived = strength_sign_labels(train, &bank)?;
                &derived
            }
        };
        let stats = LeaceStats::new(train, labels)?;
        Ok(Self { bank, method: Method::Leace(LeaceEraser::new(stats)) })
    }

    /// Builds from a config. LEACE draws its training rows from `pool` with a
    /// seeded sample of `config.leace_train` rows; `pool_labels`, when given,
    /// is aligned with the rows of `pool`.
    pub fn from_config(
        config: &EraserConfig,
        bank: ConceptBank,
        pool: &EmbeddingMatrix,
        pool_labels: Option<&DMatrix<u8>>,
    ) -> Result<Self> {
        match config.kind {
            EraserKind::Ortho => Ok(Self::ortho(bank)),
            EraserKind::Splice => Ok(Self::splice(bank, config.lambda, config.eps)),
            EraserKind::Leace => {
                let rows = training_rows(pool.len(), config.leace_train, config.seed);
                let train = DMatrix::from_fn(rows.len(), pool.dim(), |i, j| pool.data()[(rows[i], j)]);
                let labels = match pool_labels {
                    Some(l) => {
                        ensure_dim("leace label rows", pool.len(), l.nrows())?;
                        Some(DMatrix::from_fn(rows.len(), l.ncols(), |i, j| l[(rows[i], j)]))
                    }
                    None => None,
                };
                Self::leace(bank, &train, labels.as_ref())
            }
        }
    }

    pub fn kind(&self) -> EraserKind {
        match self.method {
            Method::Ortho(_) => EraserKind::Ortho,
            Method::Splice { .. } => EraserKind::Splice,
            Method::Leace(_) => EraserKind::Leace,
        }
    }

    pub fn bank(&self) -> &ConceptBank {
        &self.bank
    }

    pub fn vocab_size(&self) -> usize {
        self.bank.len()
    }

    pub fn leace_state(&self) -> Option<&LeaceEraser> {
        match &self.method {
            Method::Leace(l) => Some(l),
            _ => None,
        }
    }

    pub fn prepare(&self, z: &DVector<f64>) -> Result<PreparedEmbedding> {
        ensure_dim("eraser embedding", self.bank.dim(), z.len())?;
        let decomposition = match self.method {
            Method::Splice { lambda, eps } => Some(splice_decompose(z, &self.bank, lambda, eps)?),
            _ => None,
        };
        Ok(PreparedEmbedding { z: z.clone(), decomposition })
    }

    pub fn erase_prepared(&self, prepared: &PreparedEmbedding, mask: &BoolMask) -> Result<DVector<f64>> {
        match &self.method {
            Method::Ortho(o) => o.erase(&prepared.z, mask),
            Method::Splice { .. } => {
                let decomp = prepared
                    .decomposition
                    .as_ref()
                    .ok_or_else(|| Error::Precondition("splice embedding was not decomposed".into()))?;
                splice_erase(decomp, &self.bank, mask)
            }
            Method::Leace(l) => l.erase(&prepared.z, mask),
        }
    }

    /// Uniform `erase(z, mask)`.
    pub fn erase(&self, z: &DVector<f64>, mask: &BoolMask) -> Result<DVector<f64>> {
        self.erase_prepared(&self.prepare(z)?, mask)
    }
}

/// Sorted seeded sample of `min(want, available)` row indices.
pub fn training_rows(available: usize, want: usize, seed: u64) -> Vec<usize> {
    if want >= available {
        return (0..available).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = rand::seq::index::sample(&mut rng, available, want).into_vec();
    rows.sort_unstable();
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bank_from_cols(d: usize, cols: &[Vec<f64>]) -> ConceptBank {
        let m = DMatrix::from_fn(d, cols.len(), |r, c| cols[c][r]);
        let names = (0..cols.len()).map(|i| format!("c{i}")).collect();
        ConceptBank::normalizing(names, m, 10.0).unwrap()
    }

    /// Equality-constrained least squares solved through the KKT system
    /// `[[I, A], [A^T, 0]] [r; mu] = [z; b]` with `A = C`.
    fn kkt_oracle(z: &DVector<f64>, c: &DMatrix<f64>, mask: &BoolMask) -> DVector<f64> {
        let (d, n) = c.shape();
        let mut k = DMatrix::zeros(d + n, d + n);
        k.view_mut((0, 0), (d, d)).copy_from(&DMatrix::identity(d, d));
        k.view_mut((0, d), (d, n)).copy_from(c);
        k.view_mut((d, 0), (n, d)).copy_from(&c.transpose());
        let mut rhs = DVector::zeros(d + n);
        rhs.rows_mut(0, d).copy_from(z);
        for i in 0..n {
            rhs[d + i] = if mask.is_retained(i) { c.column(i).dot(z) } else { 0.0 };
        }
        let sol = k.lu().solve(&rhs).expect("kkt system solvable");
        sol.rows(0, d).into_owned()
    }

    #[test]
    fn ortho_orthonormal_single_erase_is_projection() {
        let bank = bank_from_cols(2, &[vec![1.0, 0.0]]);
        let r = ortho_erase(&DVector::from_vec(vec![2.0, 3.0]), &bank, &BoolMask::new(vec![false])).unwrap();
        assert_eq!(r, DVector::from_vec(vec![0.0, 3.0]));
    }

    #[test]
    fn ortho_all_retain_is_identity() {
        let bank = bank_from_cols(3, &[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]);
        let z = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        assert_eq!(ortho_erase(&z, &bank, &BoolMask::all_retained(2)).unwrap(), z);
    }

    #[test]
    fn ortho_matches_kkt_on_skewed_pair() {
        let s = 0.5f64.sqrt();
        let bank = bank_from_cols(2, &[vec![1.0, 0.0], vec![s, s]]);
        let z = DVector::from_vec(vec![1.0, 1.0]);
        let mask = BoolMask::new(vec![false, true]);
        let r = ortho_erase(&z, &bank, &mask).unwrap();
        let oracle = kkt_oracle(&z, bank.vectors(), &mask);
        assert!((r - oracle).norm() < 1e-8);
    }

    proptest! {
        #[test]
        fn ortho_feasible_optimal_idempotent(
            d in 2usize..8,
            seed in any::<u64>(),
        ) {
            use rand::Rng;
            use rand_distr::StandardNormal;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(1..=d.min(5));
            let cols: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
                .collect();
            let bank = bank_from_cols(d, &cols);
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let mask = BoolMask::new((0..n).map(|_| rng.random_bool(0.5)).collect());
            let eraser = OrthoEraser::new(&bank);
            let r = eraser.erase(&z, &mask).unwrap();
            let tol = 1e-8 * z.norm().max(1.0);
            for i in 0..n {
                let c = bank.vector(i);
                if mask.is_retained(i) {
                    prop_assert!((c.dot(&r) - c.dot(&z)).abs() <= tol);
                } else {
                    prop_assert!(c.dot(&r).abs() <= tol);
                }
            }
            let oracle = kkt_oracle(&z, bank.vectors(), &mask);
            prop_assert!((r.clone() - &z).norm() <= (oracle - &z).norm() + 1e-8);
            let again = eraser.erase(&r, &mask).unwrap();
            prop_assert!((again - r).norm() <= 1e-8);
        }
    }

    #[test]
    fn splice_recovers_nonnegative_mixture() {
        let bank = bank_from_cols(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let z = DVector::from_vec(vec![0.7, 0.3, 0.0]);
        let dec = splice_decompose(&z, &bank, 0.0, 1e-9).unwrap();
        // NNLS oracle on an orthonormal pair is just the clipped projection of z/|z|
        let expected = z.clone() / z.norm();
        assert!((dec.weights[0] - expected[0]).abs() < 1e-9);
        assert!((dec.weights[1] - expected[1]).abs() < 1e-9);
        assert!(dec.residual_cos >= 1.0 - 1e-9);
    }

    #[test]
    fn splice_single_concept_support() {
        let bank = bank_from_cols(2, &[vec![1.0, 0.0], vec![0.6, 0.8]]);
        let dec = splice_decompose(&DVector::from_vec(vec![1.0, 0.0]), &bank, 0.01, 1e-6).unwrap();
        assert!(dec.weights[0] > 0.0);
        assert_eq!(dec.weights[1], 0.0);
        assert!(dec.residual_cos >= 1.0 - 1e-4);
    }

    #[test]
    fn splice_large_lambda_kills_everything() {
        let bank = bank_from_cols(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let dec = splice_decompose(&DVector::from_vec(vec![0.6, 0.8]), &bank, 1.0, 1e-6).unwrap();
        assert!(dec.weights.iter().all(|&w| w == 0.0));
        assert_eq!(dec.residual_cos, 0.0);
        assert!(splice_erase(&dec, &bank, &BoolMask::all_retained(2)).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn splice_rejects_zero_embedding() {
        let bank = bank_from_cols(2, &[vec![1.0, 0.0]]);
        assert!(matches!(splice_decompose(&DVector::zeros(2), &bank, 0.01, 1e-6), Err(Error::ZeroEmbedding)));
    }

    #[test]
    fn splice_erase_zeroes_weights() {
        let bank = bank_from_cols(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let dec = SpliceDecomposition { weights: DVector::from_vec(vec![0.7, 0.3]), residual_cos: 1.0, sweeps: 0 };
        let r = splice_erase(&dec, &bank, &BoolMask::new(vec![false, true])).unwrap();
        assert_eq!(r, DVector::from_vec(vec![0.0, 0.3]));
        let full = splice_erase(&dec, &bank, &BoolMask::all_retained(2)).unwrap();
        assert_eq!(full, DVector::from_vec(vec![0.7, 0.3]));
    }

    proptest! {
        #[test]
        fn splice_kkt_holds(seed in any::<u64>(), lambda in 0.0f64..0.2) {
            use rand_distr::{Distribution, StandardNormal};
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (d, n) = (6, 4);
            let cols: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            let bank = bank_from_cols(d, &cols);
            let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let dec = splice_decompose(&z, &bank, lambda, 1e-6).unwrap();
            prop_assert!(dec.weights.iter().all(|&w| w >= 0.0));
            prop_assert!(kkt_violation(bank.vectors(), &dec.weights, &(z.clone() / z.norm()), lambda) <= 1e-6);
            prop_assert!((-1.0..=1.0).contains(&dec.residual_cos));
        }
    }

    fn label_axis_data(rows: usize, seed: u64) -> (DMatrix<f64>, DMatrix<u8>) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DMatrix::zeros(rows, 2);
        let mut y = DMatrix::zeros(rows, 1);
        for r in 0..rows {
            let label = u8::from(r % 2 == 0);
            y[(r, 0)] = label;
            x[(r, 0)] = f64::from(label);
            x[(r, 1)] = rng.random_range(-1.0..1.0);
        }
        (x, y)
    }

    #[test]
    fn leace_annuls_label_covariance() {
        let (x, y) = label_axis_data(200, 3);
        let stats = LeaceStats::new(&x, &y).unwrap();
        let fit = stats.fit(&ConceptSet::from([0])).unwrap();
        let erased = DMatrix::from_fn(x.nrows(), 2, |r, c| {
            let z = x.row(r).transpose();
            fit.erase(&z).unwrap()[c]
        });
        let label_mean = y.iter().map(|&v| f64::from(v)).sum::<f64>() / x.nrows() as f64;
        for col in 0..2 {
            let m = erased.column(col).mean();
            let cov: f64 =
                (0..x.nrows()).map(|r| (erased[(r, col)] - m) * (f64::from(y[(r, 0)]) - label_mean)).sum::<f64>()
                    / x.nrows() as f64;
            assert!(cov.abs() <= 1e-6, "column {col}: {cov}");
        }
        let residual = DMatrix::identity(2, 2) - &fit.projection;
        assert_eq!(linalg::rank(&residual, 1e-8), 1);
        assert!((&fit.projection * stats.cross_covariance()).column(0).norm() <= 1e-6);
    }

    #[test]
    fn leace_uncorrelated_concept_is_identity() {
        // label independent of both coordinates by construction
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0]);
        let y = DMatrix::from_row_slice(4, 1, &[1, 0, 0, 1]);
        let fit = LeaceStats::new(&x, &y).unwrap().fit(&ConceptSet::from([0])).unwrap();
        let z = DVector::from_vec(vec![0.4, -2.0]);
        assert!((fit.erase(&z).unwrap() - z).norm() < 1e-8);
    }

    #[test]
    fn leace_erase_axis_projector() {
        let fit = LeaceFit {
            projection: DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
            shift: DVector::zeros(2),
            subset: ConceptSet::from([0]),
            trained_on: 0,
            concept_labels: DMatrix::zeros(0, 1),
        };
        assert_eq!(leace_erase(&fit, &DVector::from_vec(vec![5.0, 2.0])).unwrap(), DVector::from_vec(vec![0.0, 2.0]));
    }

    #[test]
    fn dispatcher_identity_reconstruction_and_memo() {
        let bank = bank_from_cols(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let z = DVector::from_vec(vec![0.5, 0.2, 0.9]);
        let all = BoolMask::all_retained(2);
        assert_eq!(Eraser::ortho(bank.clone()).erase(&z, &all).unwrap(), z);

        let splice = Eraser::splice(bank.clone(), 0.0, 1e-9);
        let recon = splice.erase(&z, &all).unwrap();
        assert!((recon.clone() - &z).norm() > 0.5);
        assert_eq!(recon[2], 0.0);

        let (x, _) = label_axis_data(50, 9);
        let train = DMatrix::from_fn(50, 3, |r, c| if c < 2 { x[(r, c)] - 0.5 } else { 0.1 * r as f64 });
        let leace = Eraser::leace(bank, &train, None).unwrap();
        let mask = BoolMask::new(vec![false, true]);
        let a = leace.erase(&z, &mask).unwrap();
        let b = leace.erase(&z, &mask).unwrap();
        assert_eq!(a, b);
        assert_eq!(leace.leace_state().unwrap().cached_fits(), 1);
        assert_eq!(leace.erase(&z, &all).unwrap(), z);
    }

    #[test]
    fn training_rows_sorted_and_seeded() {
        let a = training_rows(100, 10, 7);
        assert_eq!(a, training_rows(100, 10, 7));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(training_rows(5, 10, 7), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn eraser_kind_parses() {
        assert_eq!("leace".parse::<EraserKind>().unwrap(), EraserKind::Leace);
        assert!("pca".parse::<EraserKind>().is_err());
    }
}
