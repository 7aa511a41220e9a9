//! Embedding-space types shared by every other module: embeddings, the concept
//! bank, model heads, concept strengths, and the linear maps between spaces.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{self, RANK_TOL};

/// Column norms of concept and class vectors must be within this of 1.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// Rows of embeddings (one per image) in a shared space of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: DMatrix<f64>,
    image_ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl EmbeddingMatrix {
    pub fn new(data: DMatrix<f64>, image_ids: Vec<String>) -> Result<Self> {
        ensure_dim("embedding rows vs image ids", image_ids.len(), data.nrows())?;
        if data.ncols() == 0 {
            return Err(Error::EmptyInput("embedding dimension"));
        }
        if !linalg::all_finite(data.as_slice()) {
            return Err(Error::NonFinite("embeddings".into()));
        }
        let mut index = HashMap::with_capacity(image_ids.len());
        for (row, id) in image_ids.iter().enumerate() {
            if index.insert(id.clone(), row).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self { data, image_ids, index })
    }

    /// Builds from row vectors.
    pub fn from_rows(rows: &[DVector<f64>], image_ids: Vec<String>) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).ok_or(Error::EmptyInput("embeddings"))?;
        for r in rows {
            ensure_dim("embedding row", d, r.len())?;
        }
        let data = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(data, image_ids)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn len(&self) -> usize {
        self.image_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.data.row(i).transpose()
    }

    pub fn row_of(&self, image_id: &str) -> Option<usize> {
        self.index.get(image_id).copied()
    }

    pub fn embedding(&self, image_id: &str) -> Option<DVector<f64>> {
        self.row_of(image_id).map(|i| self.row(i))
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let data = DMatrix::from_fn(rows.len(), self.dim(), |i, j| self.data[(rows[i], j)]);
        let ids = rows.iter().map(|&r| self.image_ids[r].clone()).collect();
        Self::new(data, ids)
    }
}

/// Vocabulary names plus the `d x n` matrix of stacked unit concept vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptBank {
    names: Vec<String>,
    vectors: DMatrix<f64>,
}

impl ConceptBank {
    /// `vectors` holds one concept per column. Columns must already be unit norm.
    pub fn new(names: Vec<String>, vectors: DMatrix<f64>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::EmptyInput("concept vocabulary"));
        }
        ensure_dim("concept names vs columns", names.len(), vectors.ncols())?;
        if vectors.nrows() == 0 {
            return Err(Error::EmptyInput("concept dimension"));
        }
        if !linalg::all_finite(vectors.as_slice()) {
            return Err(Error::NonFinite("concept vectors".into()));
        }
        let mut seen = HashMap::new();
        for name in &names {
            if seen.insert(name.as_str(), ()).is_some() {
                return Err(Error::DuplicateId(name.clone()));
            }
        }
        for (j, name) in names.iter().enumerate() {
            let norm = vectors.column(j).norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::Normalization { name: name.clone(), norm });
            }
        }
        Ok(Self { names, vectors })
    }

    /// Like [`ConceptBank::new`] but rescales columns whose norm is within
    /// `tolerance` of 1.
    pub fn normalizing(names: Vec<String>, mut vectors: DMatrix<f64>, tolerance: f64) -> Result<Self> {
        if names.len() == vectors.ncols() {
            for (j, name) in names.iter().enumerate() {
                let norm = vectors.column(j).norm();
                if (norm - 1.0).abs() > tolerance || !norm.is_finite() {
                    return Err(Error::Normalization { name: name.clone(), norm });
                }
                vectors.column_mut(j).unscale_mut(norm);
            }
        }
        Self::new(names, vectors)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    /// Sub-vocabulary made of `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        for &i in indices {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange { index: i, len: self.len() });
            }
        }
        let names = indices.iter().map(|&i| self.names[i].clone()).collect();
        let vectors = DMatrix::from_fn(self.dim(), indices.len(), |r, c| self.vectors[(r, indices[c])]);
        Self::new(names, vectors)
    }
}

/// Cosine similarity of an embedding with every concept vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthVector(Vec<f64>);

impl StrengthVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Polarity of a concept in an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "+")]
    Positive,
}

impl Sign {
    /// Strict sign: only an exact zero maps to [`Sign::Zero`].
    pub fn of(value: f64) -> Self {
        if value > 0.0 {
            Sign::Positive
        } else if value < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
            Sign::Zero => '0',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(Sign::Positive),
            '-' => Some(Sign::Negative),
            '0' => Some(Sign::Zero),
            _ => None,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A canonical (strictly ascending, duplicate-free) set of concept indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptSet(Vec<usize>);

impl ConceptSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// All indices `0..n`.
    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_subset(&self, other: &ConceptSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn is_superset(&self, other: &ConceptSet) -> bool {
        other.is_subset(self)
    }

    pub fn intersects(&self, other: &ConceptSet) -> bool {
        self.0.iter().any(|&i| other.contains(i))
    }

    pub fn with(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&i) {
            v.insert(pos, i);
        }
        Self(v)
    }

    pub fn without(&self, i: usize) -> Self {
        Self(self.0.iter().copied().filter(|&j| j != i).collect())
    }

    /// `{0..n} \ self`.
    pub fn complement(&self, n: usize) -> Self {
        Self((0..n).filter(|&i| !self.contains(i)).collect())
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn check_within(&self, n: usize) -> Result<()> {
        match self.max_index() {
            Some(i) if i >= n => Err(Error::IndexOutOfRange { index: i, len: n }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for ConceptSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }
}

impl<const N: usize> From<[usize; N]> for ConceptSet {
    fn from(value: [usize; N]) -> Self {
        value.into_iter().collect()
    }
}

impl fmt::Display for ConceptSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Which concepts survive an erasure: `true` = retained, `false` = erased.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoolMask(Vec<bool>);

impl BoolMask {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn all_retained(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn all_erased(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// Retains exactly `keep`, erases everything else.
    pub fn retaining(n: usize, keep: &ConceptSet) -> Self {
        let mut bits = vec![false; n];
        for i in keep.iter() {
            bits[i] = true;
        }
        Self(bits)
    }

    /// Erases exactly `drop`, retains everything else.
    pub fn erasing(n: usize, drop: &ConceptSet) -> Self {
        let mut bits = vec![true; n];
        for i in drop.iter() {
            bits[i] = false;
        }
        Self(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_retained(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn erased(&self) -> ConceptSet {
        self.0.iter().enumerate().filter(|(_, &b)| !b).map(|(i, _)| i).collect()
    }

    pub fn retained(&self) -> ConceptSet {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    pub fn retains_all(&self) -> bool {
        self.0.iter().all(|&b| b)
    }
}

/// Classifier head operating on embeddings.
#[derive(Debug, Clone, PartialEq)]
pub enum HeadKind {
    /// `argmax(W z + b)`; `weights` is `m x d`.
    Linear { weights: DMatrix<f64>, bias: DVector<f64> },
    /// `argmax_i cos(z, k_i)`; `class_vectors` is `d x m` with unit columns.
    ZeroShot { class_vectors: DMatrix<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelHead {
    kind: HeadKind,
    class_names: Vec<String>,
}

impl ModelHead {
    pub fn linear(weights: DMatrix<f64>, bias: DVector<f64>, class_names: Vec<String>) -> Result<Self> {
        ensure_dim("head bias", weights.nrows(), bias.len())?;
        if !linalg::all_finite(weights.as_slice()) || !linalg::all_finite(bias.as_slice()) {
            return Err(Error::NonFinite("linear head".into()));
        }
        Self::finish(HeadKind::Linear { weights, bias }, class_names)
    }

    pub fn zero_shot(class_vectors: DMatrix<f64>, class_names: Vec<String>) -> Result<Self> {
        if !linalg::all_finite(class_vectors.as_slice()) {
            return Err(Error::NonFinite("class vectors".into()));
        }
        for j in 0..class_vectors.ncols() {
            let norm = class_vectors.column(j).norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                let name = class_names.get(j).cloned().unwrap_or_else(|| format!("class {j}"));
                return Err(Error::Normalization { name, norm });
            }
        }
        Self::finish(HeadKind::ZeroShot { class_vectors }, class_names)
    }

    fn finish(kind: HeadKind, class_names: Vec<String>) -> Result<Self> {
        let head = Self { kind, class_names };
        if head.num_classes() < 2 {
            return Err(Error::InvalidArgument("a head needs at least two classes".into()));
        }
        ensure_dim("class names", head.num_classes(), head.class_names.len())?;
        Ok(head)
    }

    pub fn kind(&self) -> &HeadKind {
        &self.kind
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        match &self.kind {
            HeadKind::Linear { weights, .. } => weights.nrows(),
            HeadKind::ZeroShot { class_vectors } => class_vectors.ncols(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            HeadKind::Linear { weights, .. } => weights.ncols(),
            HeadKind::ZeroShot { class_vectors } => class_vectors.nrows(),
        }
    }

    pub fn scores(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_dim("head input", self.dim(), z.len())?;
        Ok(match &self.kind {
            HeadKind::Linear { weights, bias } => weights * z + bias,
            HeadKind::ZeroShot { class_vectors } => {
                let norm = z.norm();
                if norm == 0.0 {
                    DVector::zeros(class_vectors.ncols())
                } else {
                    class_vectors.tr_mul(z) / norm
                }
            }
        })
    }

    /// Predicted class index; exact ties go to the lowest index.
    pub fn predict(&self, z: &DVector<f64>) -> Result<usize> {
        Ok(linalg::argmax(self.scores(z)?.iter().copied()))
    }

    /// Folds an affine map `z -> W z + d` in front of a linear head, giving the
    /// head that reads the map's source space directly.
    pub fn compose(&self, map: &LinearMap) -> Result<Self> {
        match &self.kind {
            HeadKind::Linear { weights, bias } => {
                ensure_dim("map output vs head input", weights.ncols(), map.weights.nrows())?;
                let w = weights * &map.weights;
                let b = weights * &map.offset + bias;
                Self::linear(w, b, self.class_names.clone())
            }
            HeadKind::ZeroShot { .. } => {
                Err(Error::InvalidArgument("only linear heads can absorb an affine map".into()))
            }
        }
    }
}

/// `z -> W z + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub weights: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl LinearMap {
    pub fn apply(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_dim("linear map input", self.weights.ncols(), z.len())?;
        Ok(&self.weights * z + &self.offset)
    }

    /// Mean squared error over aligned rows.
    pub fn mean_squared_error(&self, src: &EmbeddingMatrix, dst: &EmbeddingMatrix) -> Result<f64> {
        ensure_dim("row count", src.len(), dst.len())?;
        if src.is_empty() {
            return Err(Error::EmptyInput("linear map samples"));
        }
        let mut total = 0.0;
        for i in 0..src.len() {
            total += (self.apply(&src.row(i))? - dst.row(i)).norm_squared();
        }
        Ok(total / src.len() as f64)
    }
}

/// `st(z)_i = cos(z, c_i)`; all zeros for the zero embedding.
pub fn concept_strengths(z: &DVector<f64>, bank: &ConceptBank) -> Result<StrengthVector> {
    ensure_dim("embedding vs concept bank", bank.dim(), z.len())?;
    let norm = z.norm();
    if norm == 0.0 {
        return Ok(StrengthVector(vec![0.0; bank.len()]));
    }
    let values = (0..bank.len())
        .map(|i| {
            let c = bank.vectors.column(i);
            c.dot(z) / (norm * c.norm())
        })
        .collect();
    Ok(StrengthVector(values))
}

/// Sign of each selected concept's strength.
pub fn sign_map(strengths: &StrengthVector, subset: &ConceptSet) -> Result<BTreeMap<usize, Sign>> {
    subset.check_within(strengths.len())?;
    Ok(subset.iter().map(|i| (i, Sign::of(strengths.0[i]))).collect())
}

/// Least-squares affine map from `src` rows to `dst` rows.
///
/// Solves the augmented system `[src | 1] B = dst` with an SVD pseudoinverse,
/// so underdetermined problems return the minimum-Frobenius-norm solution.
pub fn fit_linear_map(src: &EmbeddingMatrix, dst: &EmbeddingMatrix) -> Result<LinearMap> {
    if src.is_empty() {
        return Err(Error::EmptyInput("linear map samples"));
    }
    ensure_dim("paired sample count", src.len(), dst.len())?;
    for (row, (a, b)) in src.image_ids().iter().zip(dst.image_ids()).enumerate() {
        if a != b {
            return Err(Error::MisalignedIds { row, left: a.clone(), right: b.clone() });
        }
    }
    let (n, d1) = (src.len(), src.dim());
    let augmented = DMatrix::from_fn(n, d1 + 1, |i, j| if j < d1 { src.data[(i, j)] } else { 1.0 });
    let solution = linalg::pinv(&augmented, RANK_TOL) * dst.data();
    // solution is (d1 + 1) x d2
    let weights = solution.rows(0, d1).transpose();
    let offset = solution.row(d1).transpose();
    Ok(LinearMap { weights, offset })
}

/// Linear scorer `w . z + b0` fitted by ridge regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeProbe {
    pub weights: DVector<f64>,
    pub bias: f64,
}

impl RidgeProbe {
    pub fn score(&self, z: &DVector<f64>) -> f64 {
        self.weights.dot(z) + self.bias
    }
}

/// Ridge regression to target 1 on `positive` rows and 0 on `negative` rows.
///
/// The intercept is not penalized (data are centered before solving).
/// `lambda = 0` falls back to the minimum-norm least-squares solution.
pub fn fit_ridge_probe(positive: &DMatrix<f64>, negative: &DMatrix<f64>, lambda: f64) -> Result<RidgeProbe> {
    if positive.nrows() == 0 || negative.nrows() == 0 {
        return Err(Error::EmptyInput("ridge probe samples"));
    }
    ensure_dim("probe positive vs negative dimension", positive.ncols(), negative.ncols())?;
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("ridge lambda must be >= 0, got {lambda}")));
    }
    let d = positive.ncols();
    let n = positive.nrows() + negative.nrows();
    let x = DMatrix::from_fn(n, d, |i, j| {
        if i < positive.nrows() {
            positive[(i, j)]
        } else {
            negative[(i - positive.nrows(), j)]
        }
    });
    let y = DVector::from_fn(n, |i, _| if i < positive.nrows() { 1.0 } else { 0.0 });
    let x_mean = x.row_mean().transpose();
    let y_mean = y.mean();
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= x_mean.transpose();
    }
    let yc = y.add_scalar(-y_mean);
    let gram = xc.tr_mul(&xc) + DMatrix::identity(d, d) * lambda;
    let rhs = xc.tr_mul(&yc);
    let weights = linalg::pinv(&gram, RANK_TOL) * rhs;
    let bias = y_mean - x_mean.dot(&weights);
    Ok(RidgeProbe { weights, bias })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn bank(cols: &[&[f64]]) -> ConceptBank {
        let d = cols[0].len();
        let m = DMatrix::from_fn(d, cols.len(), |r, c| cols[c][r]);
        let names = (0..cols.len()).map(|i| format!("c{i}")).collect();
        ConceptBank::new(names, m).unwrap()
    }

    #[test]
    fn strengths_match_hand_cosines() {
        let b = bank(&[&[1.0, 0.0]]);
        assert_eq!(concept_strengths(&v(&[1.0, 0.0]), &b).unwrap().values(), &[1.0]);
        let ortho = bank(&[&[0.0, 1.0]]);
        assert_eq!(concept_strengths(&v(&[1.0, 0.0]), &ortho).unwrap().values(), &[0.0]);
        // 3 / 5
        let st = concept_strengths(&v(&[3.0, 4.0]), &b).unwrap();
        assert!((st.values()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn strengths_of_zero_embedding_are_zero() {
        let b = bank(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(concept_strengths(&v(&[0.0, 0.0]), &b).unwrap().values(), &[0.0, 0.0]);
        assert!(matches!(concept_strengths(&v(&[1.0, 0.0, 0.0]), &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sign_map_is_strict() {
        let st = StrengthVector::new(vec![0.5, -0.2, 0.0]);
        let m = sign_map(&st, &ConceptSet::from([0, 1, 2])).unwrap();
        assert_eq!(m[&0], Sign::Positive);
        assert_eq!(m[&1], Sign::Negative);
        assert_eq!(m[&2], Sign::Zero);
        assert!(sign_map(&StrengthVector::new(vec![0.5]), &ConceptSet::empty()).unwrap().is_empty());
        let tiny = sign_map(&StrengthVector::new(vec![-1e-9]), &ConceptSet::from([0])).unwrap();
        assert_eq!(tiny[&0], Sign::Negative);
        assert!(sign_map(&st, &ConceptSet::from([3])).is_err());
    }

    #[test]
    fn predict_examples_and_tie_break() {
        let head = ModelHead::linear(DMatrix::identity(2, 2), DVector::zeros(2), vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(head.predict(&v(&[2.0, 1.0])).unwrap(), 0);
        assert_eq!(head.predict(&v(&[1.0, 1.0])).unwrap(), 0);
        let zs = ModelHead::zero_shot(DMatrix::identity(2, 2), vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(zs.predict(&v(&[0.0, 3.0])).unwrap(), 1);
    }

    #[test]
    fn head_rejects_single_class_and_bad_norms() {
        assert!(ModelHead::linear(DMatrix::zeros(1, 2), DVector::zeros(1), vec!["a".into()]).is_err());
        let k = DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 1.0]);
        assert!(matches!(ModelHead::zero_shot(k, vec!["a".into(), "b".into()]), Err(Error::Normalization { .. })));
    }

    #[test]
    fn composing_a_map_matches_sequential_application() {
        let head = ModelHead::linear(
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.5, 2.0]),
            v(&[0.1, -0.2]),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let map = LinearMap {
            weights: DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 1.0, -1.0]),
            offset: v(&[0.3, 0.4]),
        };
        let composed = head.compose(&map).unwrap();
        let z = v(&[0.2, -0.7, 1.1]);
        let direct = head.scores(&map.apply(&z).unwrap()).unwrap();
        assert!((composed.scores(&z).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn identity_map_recovered_from_self_pairs() {
        let rows = vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[0.3, 0.8])];
        let ids: Vec<String> = (0..4).map(|i| format!("img{i}")).collect();
        let e = EmbeddingMatrix::from_rows(&rows, ids).unwrap();
        let map = fit_linear_map(&e, &e).unwrap();
        assert!((map.weights.clone() - DMatrix::identity(2, 2)).abs().max() < 1e-8);
        assert!(map.offset.abs().max() < 1e-8);
    }

    #[test]
    fn single_sample_map_interpolates_exactly() {
        let src = EmbeddingMatrix::from_rows(&[v(&[0.4, -1.2])], vec!["x".into()]).unwrap();
        let dst = EmbeddingMatrix::from_rows(&[v(&[2.0, 0.5])], vec!["x".into()]).unwrap();
        let map = fit_linear_map(&src, &dst).unwrap();
        let resid = map.apply(&src.row(0)).unwrap() - dst.row(0);
        assert!(resid.norm() < 1e-12);
    }

    #[test]
    fn fit_linear_map_rejects_misaligned_and_empty() {
        let a = EmbeddingMatrix::from_rows(&[v(&[1.0])], vec!["a".into()]).unwrap();
        let b = EmbeddingMatrix::from_rows(&[v(&[1.0])], vec!["b".into()]).unwrap();
        assert!(matches!(fit_linear_map(&a, &b), Err(Error::MisalignedIds { .. })));
        let empty = EmbeddingMatrix::new(DMatrix::zeros(0, 2), vec![]).unwrap();
        assert!(matches!(fit_linear_map(&empty, &empty), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn ridge_probe_two_point_system() {
        // Hand solution: centered x = +-1 on axis 0, y centered = +-0.5, so
        // w = (0.5, 0), b0 = 0.5.
        let pos = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let neg = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, -1.0, 0.0]);
        let probe = fit_ridge_probe(&pos, &neg, 0.0).unwrap();
        assert!((probe.score(&v(&[1.0, 0.0])) - 1.0).abs() < 1e-6);
        assert!(probe.score(&v(&[-1.0, 0.0])).abs() < 1e-6);
    }

    #[test]
    fn ridge_probe_large_lambda_shrinks_to_mean_target() {
        let pos = DMatrix::from_row_slice(1, 2, &[1.0, 0.5]);
        let neg = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.2, -0.3, 0.0, 1.0]);
        let probe = fit_ridge_probe(&pos, &neg, 1e12).unwrap();
        assert!(probe.weights.norm() < 1e-10);
        assert!((probe.bias - 0.25).abs() < 1e-10);
    }

    #[test]
    fn ridge_probe_identical_sets_score_constant() {
        let pts = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.9]);
        let probe = fit_ridge_probe(&pts, &pts, 0.5).unwrap();
        for i in 0..2 {
            let z = pts.row(i).transpose();
            assert_eq!(probe.score(&z), probe.score(&z.clone()));
        }
        // with identical class inputs the fitted scores agree with the shared target 0.5
        assert!((probe.score(&pts.row(0).transpose()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn embedding_matrix_invariants() {
        assert!(matches!(
            EmbeddingMatrix::from_rows(&[v(&[1.0]), v(&[2.0])], vec!["a".into(), "a".into()]),
            Err(Error::DuplicateId(_))
        ));
        assert!(matches!(EmbeddingMatrix::from_rows(&[v(&[f64::NAN])], vec!["a".into()]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn concept_set_canonical_form() {
        let s: ConceptSet = vec![3, 1, 3, 0].into_iter().collect();
        assert_eq!(s.as_slice(), &[0, 1, 3]);
        assert_eq!(s.complement(5).as_slice(), &[2, 4]);
        assert!(ConceptSet::from([1]).is_subset(&s));
        assert_eq!(s.to_string(), "{0,1,3}");
    }
}
