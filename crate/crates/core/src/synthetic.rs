//! Synthetic instances and heads with known explanation structure.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analytics::Relevance;
use crate::bundle::{Bundle, BundleParts, DType};
use crate::domain::{BoolMask, ConceptBank, ConceptSet, ModelHead};
use crate::error::{Error, Result};
use crate::explain::MaskFnOracle;

/// `n` orthonormal unit vectors in dimension `d` (as columns).
pub fn orthonormal_bank<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<ConceptBank> {
    if n == 0 || n > d {
        return Err(Error::InvalidArgument(format!("need 1 <= n <= d, got n={n}, d={d}")));
    }
    let raw = DMatrix::from_fn(d, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = raw.qr().q();
    let names = (0..n).map(|i| format!("concept_{i}")).collect();
    ConceptBank::normalizing(names, q.columns(0, n).into_owned(), 1e-3)
}

/// A two-class linear head that is monotone in the concepts of an
/// orthonormal bank.
///
/// Class 0 scores `sum_i w_i (c_i . z)` with `w_i >= 0`; class 1 is the
/// constant `threshold`. For `z = sum_i a_i c_i` with `a_i > 0`, the prediction
/// stays 0 exactly when the retained mass `sum_{i retained} w_i a_i` reaches the
/// threshold.
#[derive(Debug, Clone)]
pub struct MonotoneLinear {
    pub bank: ConceptBank,
    pub head: ModelHead,
    pub z: DVector<f64>,
    pub coefficients: Vec<f64>,
    pub weights: Vec<f64>,
    pub threshold: f64,
}

impl MonotoneLinear {
    pub fn random<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Self> {
        let bank = orthonormal_bank(n, d, rng)?;
        let coefficients: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = weights.iter().zip(&coefficients).map(|(w, a)| w * a).sum();
        let threshold = total * rng.random_range(0.15..0.85);
        Self::new(bank, coefficients, weights, threshold)
    }

    pub fn new(bank: ConceptBank, coefficients: Vec<f64>, weights: Vec<f64>, threshold: f64) -> Result<Self> {
        let n = bank.len();
        if coefficients.len() != n || weights.len() != n {
            return Err(Error::InvalidArgument("one coefficient and weight per concept".into()));
        }
        let c = bank.vectors();
        let z = c * DVector::from_column_slice(&coefficients);
        let row = (c * DVector::from_column_slice(&weights)).transpose();
        let mut w = DMatrix::zeros(2, bank.dim());
        w.row_mut(0).copy_from(&row);
        let head =
            ModelHead::linear(w, DVector::from_vec(vec![0.0, threshold]), vec!["target".into(), "other".into()])?;
        Ok(Self { bank, head, z, coefficients, weights, threshold })
    }

    /// Closed-form answer to "is the prediction kept under `mask`".
    pub fn preserves(&self, mask: &BoolMask) -> bool {
        let mass: f64 =
            (0..self.bank.len()).filter(|&i| mask.is_retained(i)).map(|i| self.weights[i] * self.coefficients[i]).sum();
        mass >= self.threshold
    }
}

/// Monotone boolean function: kept iff some term is fully retained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneDnf {
    pub n: usize,
    pub terms: Vec<ConceptSet>,
}

impl MonotoneDnf {
    /// Random nonempty terms over `n` variables.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let count = rng.random_range(1..=n.max(1) + 1);
        let terms = (0..count)
            .map(|_| {
                let size = rng.random_range(1..=n.min(3));
                let picked: BTreeSet<usize> = (0..size).map(|_| rng.random_range(0..n)).collect();
                picked.into_iter().collect()
            })
            .collect();
        Self { n, terms }
    }

    pub fn eval(&self, mask: &BoolMask) -> bool {
        self.terms.iter().any(|t| t.iter().all(|i| mask.is_retained(i)))
    }

    pub fn oracle(&self) -> MaskFnOracle<impl Fn(&BoolMask) -> bool + Sync + '_> {
        MaskFnOracle::new(self.n, move |m: &BoolMask| self.eval(m))
    }
}

/// Arbitrary (generally non-monotone) truth table over masks, with the
/// all-retained mask kept and the all-erased mask flipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub n: usize,
    pub kept: Vec<bool>,
}

impl TruthTable {
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let p = rng.random_range(0.2..0.8);
        let mut kept: Vec<bool> = (0..1usize << n).map(|_| rng.random_bool(p)).collect();
        kept[(1 << n) - 1] = true;
        kept[0] = false;
        Self { n, kept }
    }

    pub fn index(mask: &BoolMask) -> usize {
        mask.bits().iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| 1 << i).sum()
    }

    pub fn eval(&self, mask: &BoolMask) -> bool {
        self.kept[Self::index(mask)]
    }

    pub fn oracle(&self) -> MaskFnOracle<impl Fn(&BoolMask) -> bool + Sync + '_> {
        MaskFnOracle::new(self.n, move |m: &BoolMask| self.eval(m))
    }
}

/// Kept iff exactly one concept is retained: adding any concept to a
/// single-concept AXp breaks it.
pub fn exactly_one_oracle(n: usize) -> MaskFnOracle<impl Fn(&BoolMask) -> bool + Sync> {
    MaskFnOracle::new(n, |m: &BoolMask| m.bits().iter().filter(|&&b| b).count() == 1)
}

/// Shape of a synthetic fixture bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureSpec {
    pub images: usize,
    pub concepts: usize,
    pub dim: usize,
    pub seed: u64,
    pub dtype: DType,
    pub checksums: bool,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self { images: 40, concepts: 6, dim: 8, seed: 0, dtype: DType::F64, checksums: true }
    }
}

/// A self-contained bundle: orthonormal concepts, a two-class head with
/// nonnegative concept weights, embeddings mixing concepts (some with negative
/// strength) with small off-span noise,
/// true labels with some misclassifications, presence labels and a relevance
/// table for the `correct:0` behavior.
pub fn fixture_bundle(spec: FixtureSpec) -> Result<Bundle> {
    let FixtureSpec { images: count, concepts: n, dim: d, .. } = spec;
    if count == 0 {
        return Err(Error::EmptyInput("fixture images"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bank = orthonormal_bank(n, d, &mut rng)?;
    let c = bank.vectors();
    let weights = DVector::from_fn(n, |_, _| rng.random_range(0.3..1.0));
    let mut rows = Vec::with_capacity(count);
    let mut mass = Vec::with_capacity(count);
    for _ in 0..count {
        let a = DVector::from_fn(n, |_, _| rng.random_range(-0.3..1.0));
        let noise = DVector::from_fn(d, |_, _| 0.05 * rng.sample::<f64, _>(StandardNormal));
        let off_span = &noise - c * c.tr_mul(&noise);
        mass.push(weights.dot(&a));
        rows.push(c * a + off_span);
    }
    let mut sorted = mass.clone();
    sorted.sort_by(f64::total_cmp);
    let threshold = sorted[count / 2].abs().max(1e-3) * 0.6;
    let mut w = DMatrix::zeros(2, d);
    w.row_mut(0).copy_from(&(c * &weights).transpose());
    let head = ModelHead::linear(w, DVector::from_vec(vec![0.0, threshold]), vec!["target".into(), "other".into()])?;

    let ids: Vec<String> = (0..count).map(|i| format!("img_{i:03}")).collect();
    let embeddings = DMatrix::from_fn(count, d, |r, col| rows[r][col]);
    let mut labels = BTreeMap::new();
    for (id, z) in ids.iter().zip(&rows) {
        let predicted = head.predict(z)?;
        let truth = if rng.random_bool(0.15) { 1 - predicted } else { predicted };
        labels.insert(id.clone(), truth);
    }
    let strengths = embeddings.clone() * c;
    let concept_labels = strengths.map(|v| u8::from(v > 0.0));
    let relevance =
        (0..n).map(|i| (i, if i < n.div_ceil(2) { Relevance::Relevant } else { Relevance::Irrelevant })).collect();
    Bundle::from_parts(BundleParts {
        image_ids: ids,
        embeddings,
        bank,
        head,
        back_map: None,
        concept_labels: Some(concept_labels),
        labels: Some(labels),
        relevance: Some(BTreeMap::from([("correct:0".to_string(), relevance)])),
        dtype: spec.dtype,
        checksums: spec.checksums,
    })
}
