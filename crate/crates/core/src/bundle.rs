//! On-disk bundle: a JSON manifest plus raw little-endian row-major arrays.
//!
//! ```text
//! bundle/
//!   manifest.json        format_version "conxp-bundle/1"
//!   embeddings.bin       N x d   one image per row
//!   concept_vectors.bin  n x d   one concept per row
//!   head_weight.bin ...  arrays named by the manifest's `head` section
//!   labels.csv           image_id,true_class          (optional)
//!   relevance.csv        behavior,concept,relevance   (optional)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::Relevance;
use crate::domain::{ConceptBank, EmbeddingMatrix, HeadKind, LinearMap, ModelHead};
use crate::error::{Error, Result};

pub const BUNDLE_FORMAT: &str = "conxp-bundle/1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const EMBEDDINGS: &str = "embeddings";
pub const CONCEPT_VECTORS: &str = "concept_vectors";
pub const CONCEPT_LABELS: &str = "concept_labels";
const BYTE_ORDER: &str = "little-endian";
const LAYOUT: &str = "row-major";
/// Concept and class vectors this close to unit norm are rescaled on load.
pub const RENORMALIZE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F32,
    F64,
    U8,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
            DType::U8 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArraySpec {
    pub name: String,
    pub dtype: DType,
    pub shape: [usize; 2],
    pub byte_order: String,
    pub layout: String,
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HeadSpec {
    /// `weight` is m x d, `bias` is m x 1.
    Linear { weight: String, bias: String },
    /// `class_vectors` is m x d, one class per row.
    Zeroshot { class_vectors: String },
}

/// Affine map from the embedding space into the head's input space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapSpec {
    pub weight: String,
    pub offset: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: String,
    pub arrays: Vec<ArraySpec>,
    pub vocabulary: Vec<String>,
    pub class_names: Vec<String>,
    pub image_ids: Vec<String>,
    pub head: HeadSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub back_map: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance_file: Option<String>,
}

/// A typed array held as `f64` (exact for every stored dtype).
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayData {
    pub dtype: DType,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl ArrayData {
    pub fn from_matrix(m: &DMatrix<f64>, dtype: DType) -> Self {
        let values = (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| (r, c))).map(|(r, c)| m[(r, c)]).collect();
        Self { dtype, rows: m.nrows(), cols: m.ncols(), values }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.values)
    }

    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.values.len() * self.dtype.size());
        for &v in &self.values {
            match self.dtype {
                DType::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                DType::F64 => out.extend_from_slice(&v.to_le_bytes()),
                DType::U8 => out.push(v as u8),
            }
        }
        out
    }

    fn decode(spec: &ArraySpec, bytes: &[u8]) -> Self {
        let values = match spec.dtype {
            DType::F32 => bytes
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4-byte chunk"))))
                .collect(),
            DType::F64 => {
                bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect()
            }
            DType::U8 => bytes.iter().map(|&b| f64::from(b)).collect(),
        };
        Self { dtype: spec.dtype, rows: spec.shape[0], cols: spec.shape[1], values }
    }
}

/// Relevance labels per behavior name.
pub type RelevanceTable = BTreeMap<String, BTreeMap<usize, Relevance>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    manifest: Manifest,
    arrays: BTreeMap<String, ArrayData>,
    labels: Option<BTreeMap<String, usize>>,
    relevance: Option<RelevanceTable>,
}

/// In-memory ingredients for a new bundle.
#[derive(Debug, Clone)]
pub struct BundleParts {
    pub image_ids: Vec<String>,
    /// N x d, one image per row.
    pub embeddings: DMatrix<f64>,
    pub bank: ConceptBank,
    pub head: ModelHead,
    pub back_map: Option<LinearMap>,
    /// N x n presence labels aligned with `embeddings`.
    pub concept_labels: Option<DMatrix<u8>>,
    pub labels: Option<BTreeMap<String, usize>>,
    pub relevance: Option<RelevanceTable>,
    pub dtype: DType,
    pub checksums: bool,
}

/// Everything a run needs, validated.
#[derive(Debug, Clone)]
pub struct BundleData {
    pub embeddings: EmbeddingMatrix,
    pub bank: ConceptBank,
    /// Reads embeddings directly (any back map is already folded in).
    pub head: ModelHead,
    pub concept_labels: Option<DMatrix<u8>>,
    pub labels: Option<BTreeMap<String, usize>>,
    pub relevance: Option<RelevanceTable>,
}

impl Bundle {
    pub fn from_parts(parts: BundleParts) -> Result<Self> {
        let mut arrays = BTreeMap::new();
        let mut add = |name: &str, m: DMatrix<f64>, dtype: DType| {
            arrays.insert(name.to_string(), ArrayData::from_matrix(&m, dtype));
        };
        add(EMBEDDINGS, parts.embeddings.clone(), parts.dtype);
        add(CONCEPT_VECTORS, parts.bank.vectors().transpose(), parts.dtype);
        let head = match parts.head.kind() {
            HeadKind::Linear { weights, bias } => {
                add("head_weight", weights.clone(), parts.dtype);
                add("head_bias", DMatrix::from_column_slice(bias.len(), 1, bias.as_slice()), parts.dtype);
                HeadSpec::Linear { weight: "head_weight".into(), bias: "head_bias".into() }
            }
            HeadKind::ZeroShot { class_vectors } => {
                add("class_vectors", class_vectors.transpose(), parts.dtype);
                HeadSpec::Zeroshot { class_vectors: "class_vectors".into() }
            }
        };
        let back_map = parts.back_map.as_ref().map(|map| {
            add("back_map_weight", map.weights.clone(), parts.dtype);
            add("back_map_offset", DMatrix::from_column_slice(map.offset.len(), 1, map.offset.as_slice()), parts.dtype);
            MapSpec { weight: "back_map_weight".into(), offset: "back_map_offset".into() }
        });
        if let Some(l) = &parts.concept_labels {
            add(CONCEPT_LABELS, l.map(f64::from), DType::U8);
        }
        let specs = arrays
            .iter()
            .map(|(name, a)| ArraySpec {
                name: name.clone(),
                dtype: a.dtype,
                shape: [a.rows, a.cols],
                byte_order: BYTE_ORDER.into(),
                layout: LAYOUT.into(),
                file: format!("{name}.bin"),
                sha256: parts.checksums.then(|| sha256_hex(&a.encode())),
            })
            .collect();
        let manifest = Manifest {
            format_version: BUNDLE_FORMAT.into(),
            arrays: specs,
            vocabulary: parts.bank.names().to_vec(),
            class_names: parts.head.class_names().to_vec(),
            image_ids: parts.image_ids,
            head,
            back_map,
            labels_file: parts.labels.as_ref().map(|_| "labels.csv".into()),
            relevance_file: parts.relevance.as_ref().map(|_| "relevance.csv".into()),
        };
        let bundle = Self { manifest, arrays, labels: parts.labels, relevance: parts.relevance };
        bundle.data()?;
        Ok(bundle)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn array(&self, name: &str) -> Result<&ArrayData> {
        self.arrays.get(name).ok_or_else(|| Error::Unknown { kind: "array", name: name.to_string() })
    }

    fn matrix(&self, name: &str) -> Result<DMatrix<f64>> {
        Ok(self.array(name)?.to_matrix())
    }

    fn vector(&self, name: &str) -> Result<DVector<f64>> {
        let a = self.array(name)?;
        Ok(DVector::from_column_slice(&a.values))
    }

    pub fn labels(&self) -> Option<&BTreeMap<String, usize>> {
        self.labels.as_ref()
    }

    pub fn relevance(&self) -> Option<&RelevanceTable> {
        self.relevance.as_ref()
    }

    pub fn embeddings(&self) -> Result<EmbeddingMatrix> {
        EmbeddingMatrix::new(self.matrix(EMBEDDINGS)?, self.manifest.image_ids.clone())
    }

    pub fn concept_bank(&self) -> Result<ConceptBank> {
        let rows = self.matrix(CONCEPT_VECTORS)?;
        ConceptBank::normalizing(self.manifest.vocabulary.clone(), rows.transpose(), RENORMALIZE_TOL)
    }

    pub fn head(&self) -> Result<ModelHead> {
        let names = self.manifest.class_names.clone();
        let head = match &self.manifest.head {
            HeadSpec::Linear { weight, bias } => ModelHead::linear(self.matrix(weight)?, self.vector(bias)?, names)?,
            HeadSpec::Zeroshot { class_vectors } => {
                let mut k = self.matrix(class_vectors)?.transpose();
                for (j, name) in names.iter().enumerate().take(k.ncols()) {
                    let norm = k.column(j).norm();
                    if (norm - 1.0).abs() > RENORMALIZE_TOL || !norm.is_finite() {
                        return Err(Error::Normalization { name: name.clone(), norm });
                    }
                    k.column_mut(j).unscale_mut(norm);
                }
                ModelHead::zero_shot(k, names)?
            }
        };
        match &self.manifest.back_map {
            None => Ok(head),
            Some(spec) => {
                let map = LinearMap { weights: self.matrix(&spec.weight)?, offset: self.vector(&spec.offset)? };
                head.compose(&map)
            }
        }
    }

    pub fn concept_labels(&self) -> Result<Option<DMatrix<u8>>> {
        let Some(a) = self.arrays.get(CONCEPT_LABELS) else {
            return Ok(None);
        };
        if a.values.iter().any(|&v| v > 1.0) {
            return Err(Error::InvalidArgument("concept labels must be 0/1".into()));
        }
        Ok(Some(a.to_matrix().map(|v| v as u8)))
    }

    /// Builds and cross-checks every domain object.
    pub fn data(&self) -> Result<BundleData> {
        let embeddings = self.embeddings()?;
        let bank = self.concept_bank()?;
        let head = self.head()?;
        crate::error::ensure_dim("concept dimension vs embeddings", embeddings.dim(), bank.dim())?;
        crate::error::ensure_dim("head input vs embeddings", embeddings.dim(), head.dim())?;
        let concept_labels = self.concept_labels()?;
        if let Some(l) = &concept_labels {
            crate::error::ensure_dim("concept label rows", embeddings.len(), l.nrows())?;
            crate::error::ensure_dim("concept label columns", bank.len(), l.ncols())?;
        }
        if let Some(labels) = &self.labels {
            for (id, &class) in labels {
                if embeddings.row_of(id).is_none() {
                    return Err(Error::Unknown { kind: "image in labels file", name: id.clone() });
                }
                if class >= head.num_classes() {
                    return Err(Error::IndexOutOfRange { index: class, len: head.num_classes() });
                }
            }
        }
        if let Some(rel) = &self.relevance {
            for concepts in rel.values() {
                if let Some(&i) = concepts.keys().next_back() {
                    if i >= bank.len() {
                        return Err(Error::IndexOutOfRange { index: i, len: bank.len() });
                    }
                }
            }
        }
        Ok(BundleData {
            embeddings,
            bank,
            head,
            concept_labels,
            labels: self.labels.clone(),
            relevance: self.relevance.clone(),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Reads and validates a bundle from its directory (or manifest path).
pub fn load_bundle(path: impl AsRef<Path>) -> Result<Bundle> {
    let manifest_file = manifest_path(path.as_ref());
    let root = manifest_file.parent().map(Path::to_path_buf).unwrap_or_default();
    let manifest: Manifest = serde_json::from_slice(&read(&manifest_file)?)?;
    if manifest.format_version != BUNDLE_FORMAT {
        return Err(Error::Manifest(format!(
            "unsupported format_version `{}` (expected {BUNDLE_FORMAT})",
            manifest.format_version
        )));
    }
    let mut seen = BTreeSet::new();
    for id in &manifest.image_ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    let mut arrays = BTreeMap::new();
    for spec in &manifest.arrays {
        if spec.byte_order != BYTE_ORDER || spec.layout != LAYOUT {
            return Err(Error::Manifest(format!("array `{}` must be {BYTE_ORDER} {LAYOUT}", spec.name)));
        }
        let bytes = read(&root.join(&spec.file))?;
        let expected = (spec.shape[0] * spec.shape[1] * spec.dtype.size()) as u64;
        if bytes.len() as u64 != expected {
            return Err(Error::SizeMismatch { name: spec.name.clone(), expected, actual: bytes.len() as u64 });
        }
        if let Some(sum) = &spec.sha256 {
            if !sum.eq_ignore_ascii_case(&sha256_hex(&bytes)) {
                return Err(Error::Checksum { name: spec.name.clone() });
            }
        }
        let data = ArrayData::decode(spec, &bytes);
        if data.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("array `{}`", spec.name)));
        }
        if arrays.insert(spec.name.clone(), data).is_some() {
            return Err(Error::DuplicateId(spec.name.clone()));
        }
    }
    let labels = match &manifest.labels_file {
        Some(f) => Some(read_labels_csv(&root.join(f))?),
        None => None,
    };
    let relevance = match &manifest.relevance_file {
        Some(f) => Some(read_relevance_csv(&root.join(f), &manifest.vocabulary)?),
        None => None,
    };
    let bundle = Bundle { manifest, arrays, labels, relevance };
    bundle.data()?;
    Ok(bundle)
}

/// Writes the bundle into `dir`, recomputing checksums for arrays that carry one.
pub fn save_bundle(bundle: &Bundle, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = bundle.manifest.clone();
    for spec in &mut manifest.arrays {
        let bytes = bundle.array(&spec.name)?.encode();
        if spec.sha256.is_some() {
            spec.sha256 = Some(sha256_hex(&bytes));
        }
        let path = dir.join(&spec.file);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))?;
    }
    if let (Some(f), Some(labels)) = (&manifest.labels_file, &bundle.labels) {
        write_labels_csv(&dir.join(f), labels)?;
    }
    if let (Some(f), Some(rel)) = (&manifest.relevance_file, &bundle.relevance) {
        write_relevance_csv(&dir.join(f), rel)?;
    }
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRow {
    image_id: String,
    true_class: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct RelevanceRow {
    behavior: String,
    concept: String,
    relevance: String,
}

pub fn read_labels_csv(path: &Path) -> Result<BTreeMap<String, usize>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for row in reader.deserialize() {
        let row: LabelRow = row?;
        if out.insert(row.image_id.clone(), row.true_class).is_some() {
            return Err(Error::DuplicateId(row.image_id));
        }
    }
    Ok(out)
}

pub fn write_labels_csv(path: &Path, labels: &BTreeMap<String, usize>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (id, &class) in labels {
        w.serialize(LabelRow { image_id: id.clone(), true_class: class })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `concept` may be an index or a vocabulary name.
pub fn read_relevance_csv(path: &Path, vocabulary: &[String]) -> Result<RelevanceTable> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = RelevanceTable::new();
    for row in reader.deserialize() {
        let row: RelevanceRow = row?;
        let index = match row.concept.parse::<usize>() {
            Ok(i) => i,
            Err(_) => vocabulary
                .iter()
                .position(|v| *v == row.concept)
                .ok_or_else(|| Error::Unknown { kind: "concept", name: row.concept.clone() })?,
        };
        out.entry(row.behavior).or_default().insert(index, row.relevance.parse()?);
    }
    Ok(out)
}

pub fn write_relevance_csv(path: &Path, table: &RelevanceTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (behavior, concepts) in table {
        for (i, r) in concepts {
            w.serialize(RelevanceRow {
                behavior: behavior.clone(),
                concept: i.to_string(),
                relevance: match r {
                    Relevance::Relevant => "relevant".into(),
                    Relevance::Irrelevant => "irrelevant".into(),
                },
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(dtype: DType, checksums: bool) -> Bundle {
        let bank = ConceptBank::new(vec!["red".into(), "round".into()], DMatrix::identity(2, 2)).unwrap();
        let head = ModelHead::linear(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.25]),
            vec!["apple".into(), "other".into()],
        )
        .unwrap();
        Bundle::from_parts(BundleParts {
            image_ids: vec!["img_a".into(), "img_b".into()],
            embeddings: DMatrix::from_row_slice(2, 2, &[0.6, 0.8, 0.28, 0.96]),
            bank,
            head,
            back_map: None,
            concept_labels: Some(DMatrix::from_row_slice(2, 2, &[1, 1, 0, 1])),
            labels: Some(BTreeMap::from([("img_a".into(), 0), ("img_b".into(), 1)])),
            relevance: Some(BTreeMap::from([(
                "correct:0".to_string(),
                BTreeMap::from([(0, Relevance::Relevant), (1, Relevance::Irrelevant)]),
            )])),
            dtype,
            checksums,
        })
        .unwrap()
    }

    fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
        fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
            })
            .collect()
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        for (dtype, sums) in [(DType::F32, true), (DType::F64, false)] {
            let tmp = tempfile::tempdir().unwrap();
            let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
            save_bundle(&tiny(dtype, sums), &a).unwrap();
            let loaded = load_bundle(&a).unwrap();
            save_bundle(&loaded, &b).unwrap();
            assert_eq!(dir_bytes(&a), dir_bytes(&b));
            assert_eq!(load_bundle(&b).unwrap(), loaded);
            let data = loaded.data().unwrap();
            assert_eq!(data.labels.unwrap()["img_b"], 1);
            assert_eq!(data.concept_labels.unwrap()[(1, 0)], 0);
        }
    }

    #[test]
    fn truncated_array_is_size_mismatch() {
        let tmp = tempfile::tempdir().unwrap();
        save_bundle(&tiny(DType::F64, false), tmp.path()).unwrap();
        let f = tmp.path().join("embeddings.bin");
        let bytes = fs::read(&f).unwrap();
        fs::write(&f, &bytes[..bytes.len() - 3]).unwrap();
        let err = load_bundle(tmp.path()).unwrap_err();
        assert_eq!(err.code(), "size-mismatch");
    }

    #[test]
    fn checksum_and_nonfinite_and_duplicate_codes() {
        let tmp = tempfile::tempdir().unwrap();
        save_bundle(&tiny(DType::F64, true), tmp.path()).unwrap();
        let f = tmp.path().join("embeddings.bin");
        let mut bytes = fs::read(&f).unwrap();
        bytes[0] ^= 1;
        fs::write(&f, &bytes).unwrap();
        assert_eq!(load_bundle(tmp.path()).unwrap_err().code(), "checksum");

        let tmp = tempfile::tempdir().unwrap();
        save_bundle(&tiny(DType::F64, false), tmp.path()).unwrap();
        let f = tmp.path().join("embeddings.bin");
        let mut bytes = fs::read(&f).unwrap();
        bytes[..8].copy_from_slice(&f64::NAN.to_le_bytes());
        fs::write(&f, &bytes).unwrap();
        assert_eq!(load_bundle(tmp.path()).unwrap_err().code(), "non-finite");

        let tmp = tempfile::tempdir().unwrap();
        save_bundle(&tiny(DType::F64, false), tmp.path()).unwrap();
        let mpath = tmp.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&mpath).unwrap().replace("\"img_b\"", "\"img_a\"");
        fs::write(&mpath, text).unwrap();
        assert_eq!(load_bundle(tmp.path()).unwrap_err().code(), "duplicate-id");
    }

    #[test]
    fn concept_norm_rules() {
        let tmp = tempfile::tempdir().unwrap();
        save_bundle(&tiny(DType::F64, false), tmp.path()).unwrap();
        let f = tmp.path().join("concept_vectors.bin");
        let write = |scale: f64| {
            let vals = [scale, 0.0, 0.0, 1.0];
            let bytes: Vec<u8> = vals.iter().flat_map(|v| v.to_le_bytes()).collect();
            fs::write(&f, bytes).unwrap();
        };
        write(0.9);
        assert_eq!(load_bundle(tmp.path()).unwrap_err().code(), "normalization");
        write(1.0005);
        let bank = load_bundle(tmp.path()).unwrap().concept_bank().unwrap();
        assert!((bank.vector(0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn back_map_is_folded_into_the_head() {
        let mut parts_bundle = tiny(DType::F64, false);
        let map = LinearMap {
            weights: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            offset: DVector::from_vec(vec![0.1, 0.0]),
        };
        parts_bundle.arrays.insert("m_w".into(), ArrayData::from_matrix(&map.weights, DType::F64));
        parts_bundle.arrays.insert(
            "m_b".into(),
            ArrayData::from_matrix(&DMatrix::from_column_slice(2, 1, map.offset.as_slice()), DType::F64),
        );
        parts_bundle.manifest.back_map = Some(MapSpec { weight: "m_w".into(), offset: "m_b".into() });
        let head = parts_bundle.head().unwrap();
        let z = DVector::from_vec(vec![0.3, 0.7]);
        let plain = tiny(DType::F64, false).head().unwrap();
        let expected = plain.scores(&map.apply(&z).unwrap()).unwrap();
        assert!((head.scores(&z).unwrap() - expected).norm() < 1e-12);
    }
}
