//! Behaviors, signed aggregation and the metric suite.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    concept_strengths, BoolMask, ConceptBank, ConceptSet, EmbeddingMatrix, ModelHead, Sign, StrengthVector,
};
use crate::erasure::{Eraser, EraserConfig, EraserKind};
use crate::error::{Error, Result};
use crate::explain::{weak_check, PredictionOracle, XpKind};
use crate::linalg;

// ---------------------------------------------------------------- behaviors

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BehaviorSelector {
    /// Images of class `k` predicted as `k`.
    Correct(usize),
    /// Images of class `truth` predicted as `predicted`.
    Misclass { truth: usize, predicted: usize },
}

impl BehaviorSelector {
    pub fn matches(&self, truth: usize, predicted: usize) -> bool {
        match *self {
            BehaviorSelector::Correct(k) => truth == k && predicted == k,
            BehaviorSelector::Misclass { truth: t, predicted: p } => truth == t && predicted == p,
        }
    }
}

impl fmt::Display for BehaviorSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BehaviorSelector::Correct(k) => write!(f, "correct:{k}"),
            BehaviorSelector::Misclass { truth, predicted } => write!(f, "misclass:{truth}:{predicted}"),
        }
    }
}

impl FromStr for BehaviorSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("behavior must be correct:K or misclass:Ki:Kj, got `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["correct", k] => Ok(BehaviorSelector::Correct(num(k)?)),
            ["misclass", t, p] => Ok(BehaviorSelector::Misclass { truth: num(t)?, predicted: num(p)? }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Behavior {
    pub name: String,
    pub selector: BehaviorSelector,
    /// Admitted images, sorted.
    pub image_ids: Vec<String>,
}

impl Behavior {
    pub fn new(selector: BehaviorSelector, mut image_ids: Vec<String>) -> Self {
        image_ids.sort();
        image_ids.dedup();
        Self { name: selector.to_string(), selector, image_ids }
    }

    pub fn len(&self) -> usize {
        self.image_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image_ids.is_empty()
    }
}

/// Whether erasing everything flips the prediction while erasing nothing keeps it.
pub fn admits(eraser: &Eraser, head: &ModelHead, z: &nalgebra::DVector<f64>) -> Result<bool> {
    let original = head.predict(z)?;
    let prepared = eraser.prepare(z)?;
    let n = eraser.vocab_size();
    let kept = head.predict(&eraser.erase_prepared(&prepared, &BoolMask::all_retained(n))?)?;
    if kept != original {
        return Ok(false);
    }
    let gone = head.predict(&eraser.erase_prepared(&prepared, &BoolMask::all_erased(n))?)?;
    Ok(gone != original)
}

/// Selects images matching `selector`, keeps those admitted under every
/// eraser, then subsamples to `cap` with a seeded generator.
pub fn build_behavior(
    embeddings: &EmbeddingMatrix,
    true_labels: &BTreeMap<String, usize>,
    selector: BehaviorSelector,
    head: &ModelHead,
    erasers: &[&Eraser],
    cap: usize,
    seed: u64,
) -> Result<Behavior> {
    select_behavior(embeddings, true_labels, selector, head, erasers, cap, seed).map(|(b, _)| b)
}

/// How many images survived each stage of behavior selection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissionCounts {
    pub matching: usize,
    pub admitted: usize,
    pub selected: usize,
}

/// [`build_behavior`] that also reports the admission funnel.
pub fn select_behavior(
    embeddings: &EmbeddingMatrix,
    true_labels: &BTreeMap<String, usize>,
    selector: BehaviorSelector,
    head: &ModelHead,
    erasers: &[&Eraser],
    cap: usize,
    seed: u64,
) -> Result<(Behavior, AdmissionCounts)> {
    let mut matching = 0;
    let mut admitted = Vec::new();
    for (row, id) in embeddings.image_ids().iter().enumerate() {
        let truth =
            *true_labels.get(id).ok_or_else(|| Error::Precondition(format!("no true label for image `{id}`")))?;
        let z = embeddings.row(row);
        if !selector.matches(truth, head.predict(&z)?) {
            continue;
        }
        matching += 1;
        let mut ok = true;
        for eraser in erasers {
            match admits(eraser, head, &z) {
                Ok(true) => {}
                Ok(false) => {
                    ok = false;
                    break;
                }
                Err(e) => {
                    log::warn!("{id}: excluded, {} eraser failed: {e}", eraser.kind());
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            admitted.push(id.clone());
        }
    }
    admitted.sort();
    let admitted_count = admitted.len();
    if admitted.len() > cap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked = sample(&mut rng, admitted.len(), cap);
        admitted = picked.iter().map(|i| admitted[i].clone()).collect();
    }
    let behavior = Behavior::new(selector, admitted);
    let counts = AdmissionCounts { matching, admitted: admitted_count, selected: behavior.len() };
    Ok((behavior, counts))
}

// ---------------------------------------------------------------- signed keys

/// An explanation together with the sign of each concept in its image.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedKey {
    concepts: ConceptSet,
    signs: Vec<Sign>,
}

impl SignedKey {
    pub fn new(concepts: ConceptSet, signs: Vec<Sign>) -> Result<Self> {
        if concepts.len() != signs.len() {
            return Err(Error::DimensionMismatch {
                context: "signed key signs",
                expected: concepts.len(),
                actual: signs.len(),
            });
        }
        Ok(Self { concepts, signs })
    }

    pub fn from_strengths(concepts: &ConceptSet, strengths: &StrengthVector) -> Result<Self> {
        concepts.check_within(strengths.len())?;
        let signs = concepts.iter().map(|i| Sign::of(strengths.values()[i])).collect();
        Ok(Self { concepts: concepts.clone(), signs })
    }

    pub fn concepts(&self) -> &ConceptSet {
        &self.concepts
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    /// `i:+|j:-` with indices ascending.
    pub fn canonical(&self) -> String {
        self.to_string()
    }

    /// Like [`SignedKey::canonical`] but with concept names.
    pub fn describe(&self, names: &[String]) -> String {
        self.concepts
            .iter()
            .zip(&self.signs)
            .map(|(i, s)| format!("{}{}", s, names.get(i).map(String::as_str).unwrap_or("?")))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for SignedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (i, s)) in self.concepts.iter().zip(&self.signs).enumerate() {
            if k > 0 {
                f.write_str("|")?;
            }
            write!(f, "{i}:{s}")?;
        }
        Ok(())
    }
}

impl FromStr for SignedKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Ok(Self { concepts: ConceptSet::empty(), signs: Vec::new() });
        }
        let bad = || Error::InvalidArgument(format!("malformed signed key `{s}`"));
        let mut pairs = Vec::new();
        for part in s.split('|') {
            let (idx, sign) = part.split_once(':').ok_or_else(bad)?;
            let idx: usize = idx.parse().map_err(|_| bad())?;
            let mut chars = sign.chars();
            let sign = chars.next().and_then(Sign::from_symbol).ok_or_else(bad)?;
            if chars.next().is_some() {
                return Err(bad());
            }
            pairs.push((idx, sign));
        }
        if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(bad());
        }
        Ok(Self { concepts: pairs.iter().map(|p| p.0).collect(), signs: pairs.into_iter().map(|p| p.1).collect() })
    }
}

/// Signed explanations of one kind, per image.
pub type SignedSets = BTreeMap<String, BTreeSet<SignedKey>>;

/// Attaches each image's strength signs to its explanations.
pub fn sign_explanations(
    per_image: &BTreeMap<String, BTreeSet<ConceptSet>>,
    strengths: &BTreeMap<String, StrengthVector>,
) -> Result<SignedSets> {
    per_image
        .iter()
        .map(|(id, sets)| {
            let st = strengths.get(id).ok_or_else(|| Error::Precondition(format!("no strengths for image `{id}`")))?;
            let keys = sets.iter().map(|s| SignedKey::from_strengths(s, st)).collect::<Result<BTreeSet<_>>>()?;
            Ok((id.clone(), keys))
        })
        .collect()
}

/// Strength vectors for every image in `ids`.
pub fn strengths_for<'a>(
    embeddings: &EmbeddingMatrix,
    bank: &ConceptBank,
    ids: impl IntoIterator<Item = &'a String>,
) -> Result<BTreeMap<String, StrengthVector>> {
    ids.into_iter()
        .map(|id| {
            let z = embeddings.embedding(id).ok_or_else(|| Error::Unknown { kind: "image", name: id.clone() })?;
            Ok((id.clone(), concept_strengths(&z, bank)?))
        })
        .collect()
}

// ---------------------------------------------------------------- histograms

pub type Histogram = BTreeMap<SignedKey, usize>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BehaviorHistograms {
    pub h_a: Histogram,
    pub h_c: Histogram,
}

/// Counts each explanation once per behavior image holding it.
pub fn histogram(behavior: &Behavior, per_image: &SignedSets) -> Histogram {
    let mut h = Histogram::new();
    for id in &behavior.image_ids {
        for key in per_image.get(id).into_iter().flatten() {
            *h.entry(key.clone()).or_insert(0) += 1;
        }
    }
    h
}

pub fn aggregate(behavior: &Behavior, axps: &SignedSets, cxps: &SignedSets) -> BehaviorHistograms {
    BehaviorHistograms { h_a: histogram(behavior, axps), h_c: histogram(behavior, cxps) }
}

/// The `k` most frequent keys; ties go to the smaller key.
pub fn top_k(h: &Histogram, k: usize) -> Vec<SignedKey> {
    let mut entries: Vec<(&SignedKey, usize)> = h.iter().map(|(key, &c)| (key, c)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    entries.into_iter().take(k).map(|(key, _)| key.clone()).collect()
}

/// Intersection over union of the two top-`k` key sets.
pub fn gen_at_k(h_train: &Histogram, h_test: &Histogram, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be >= 1".into()));
    }
    let a: BTreeSet<SignedKey> = top_k(h_train, k).into_iter().collect();
    let b: BTreeSet<SignedKey> = top_k(h_test, k).into_iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return Ok(0.0);
    }
    Ok(a.intersection(&b).count() as f64 / union as f64)
}

// ---------------------------------------------------------------- coverage

/// Behavior images holding each key.
pub fn holders(image_ids: &[String], per_image: &SignedSets) -> BTreeMap<SignedKey, BTreeSet<String>> {
    let mut out: BTreeMap<SignedKey, BTreeSet<String>> = BTreeMap::new();
    for id in image_ids {
        for key in per_image.get(id).into_iter().flatten() {
            out.entry(key.clone()).or_default().insert(id.clone());
        }
    }
    out
}

/// Fraction of behavior images holding each key. Keys held by no image are absent.
pub fn individual_coverage(behavior: &Behavior, per_image: &SignedSets) -> BTreeMap<SignedKey, f64> {
    coverage_over(&behavior.image_ids, per_image)
}

fn coverage_over(image_ids: &[String], per_image: &SignedSets) -> BTreeMap<SignedKey, f64> {
    if image_ids.is_empty() {
        return BTreeMap::new();
    }
    let total = image_ids.len() as f64;
    holders(image_ids, per_image).into_iter().map(|(k, imgs)| (k, imgs.len() as f64 / total)).collect()
}

/// Coverage over the deduplicated union of several behaviors.
pub fn mixed_coverage(behaviors: &[&Behavior], per_image: &SignedSets) -> BTreeMap<SignedKey, f64> {
    let union: BTreeSet<&String> = behaviors.iter().flat_map(|b| b.image_ids.iter()).collect();
    let ids: Vec<String> = union.into_iter().cloned().collect();
    coverage_over(&ids, per_image)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxCoverage<K> {
    pub chosen: Vec<K>,
    /// Images covered by the first `i + 1` chosen keys.
    pub covered: Vec<usize>,
}

/// Greedy maximum coverage: repeatedly take the key with the largest marginal
/// gain, smaller key first on ties, until `k` keys are picked or none remain.
pub fn greedy_max_coverage<K: Ord + Clone, T: Ord + Clone>(
    sets: &BTreeMap<K, BTreeSet<T>>,
    k: usize,
) -> MaxCoverage<K> {
    let mut covered: BTreeSet<T> = BTreeSet::new();
    let mut remaining: Vec<(&K, &BTreeSet<T>)> = sets.iter().collect();
    let mut out = MaxCoverage { chosen: Vec::new(), covered: Vec::new() };
    while out.chosen.len() < k && !remaining.is_empty() {
        let mut best = 0;
        let mut best_gain = 0;
        for (pos, (_, s)) in remaining.iter().enumerate() {
            let gain = s.iter().filter(|x| !covered.contains(*x)).count();
            if gain > best_gain {
                best = pos;
                best_gain = gain;
            }
        }
        let (key, s) = remaining.remove(best);
        covered.extend(s.iter().cloned());
        out.chosen.push(key.clone());
        out.covered.push(covered.len());
    }
    out
}

pub fn max_cov_at_k(behavior: &Behavior, per_image: &SignedSets, k: usize) -> Result<MaxCoverage<SignedKey>> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be >= 1".into()));
    }
    Ok(greedy_max_coverage(&holders(&behavior.image_ids, per_image), k))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParsimonyRow {
    pub length: usize,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Coverage distribution of unique keys grouped by explanation length.
pub fn parsimony_stats(behavior: &Behavior, per_image: &SignedSets) -> Vec<ParsimonyRow> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (key, cov) in individual_coverage(behavior, per_image) {
        groups.entry(key.len()).or_default().push(cov);
    }
    groups
        .into_iter()
        .map(|(length, mut v)| {
            v.sort_by(f64::total_cmp);
            ParsimonyRow {
                length,
                count: v.len(),
                min: v[0],
                q1: quantile(&v, 0.25),
                median: quantile(&v, 0.5),
                q3: quantile(&v, 0.75),
                max: v[v.len() - 1],
            }
        })
        .collect()
}

/// Share of total individual coverage owed to keys of length at most `k`.
pub fn cumulative_coverage_at_length(behavior: &Behavior, per_image: &SignedSets, k: usize) -> f64 {
    let cov = individual_coverage(behavior, per_image);
    let total: f64 = cov.values().sum();
    if total == 0.0 {
        return 0.0;
    }
    cov.iter().filter(|(key, _)| key.len() <= k).map(|(_, c)| c).sum::<f64>() / total
}

// ---------------------------------------------------------------- plausibility

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relevance {
    Relevant,
    Irrelevant,
}

impl FromStr for Relevance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "relevant" | "1" | "true" => Ok(Relevance::Relevant),
            "irrelevant" | "0" | "false" => Ok(Relevance::Irrelevant),
            other => Err(Error::Unknown { kind: "relevance", name: other.to_string() }),
        }
    }
}

/// Relevance of every vocabulary concept for one behavior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelevanceLabels(Vec<Relevance>);

impl RelevanceLabels {
    pub fn new(labels: Vec<Relevance>) -> Self {
        Self(labels)
    }

    /// From a sparse map; every concept in `0..n` must be labeled.
    pub fn from_map(n: usize, map: &BTreeMap<usize, Relevance>) -> Result<Self> {
        (0..n)
            .map(|i| {
                map.get(&i).copied().ok_or_else(|| Error::Precondition(format!("concept {i} has no relevance label")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn get(&self, i: usize) -> Option<Relevance> {
        self.0.get(i).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlausibilityCategory {
    Full,
    Partial,
    Implausible,
}

impl fmt::Display for PlausibilityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlausibilityCategory::Full => "full",
            PlausibilityCategory::Partial => "partial",
            PlausibilityCategory::Implausible => "implausible",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plausibility {
    pub ratio: f64,
    pub category: PlausibilityCategory,
}

/// A concept is valid when positive and relevant or negative and irrelevant.
/// The empty key has no invalid concept and counts as fully plausible.
pub fn plausibility(key: &SignedKey, labels: &RelevanceLabels) -> Result<Plausibility> {
    key.concepts.check_within(labels.len())?;
    if key.is_empty() {
        return Ok(Plausibility { ratio: 1.0, category: PlausibilityCategory::Full });
    }
    let valid = key
        .concepts
        .iter()
        .zip(&key.signs)
        .filter(|&(i, s)| {
            matches!((s, labels.0[i]), (Sign::Positive, Relevance::Relevant) | (Sign::Negative, Relevance::Irrelevant))
        })
        .count();
    let ratio = valid as f64 / key.len() as f64;
    let category = if valid == key.len() {
        PlausibilityCategory::Full
    } else if valid == 0 {
        PlausibilityCategory::Implausible
    } else {
        PlausibilityCategory::Partial
    };
    Ok(Plausibility { ratio, category })
}

// ---------------------------------------------------------------- monotonicity

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    /// Percent of augmented AXps still passing; `None` when nothing was tested.
    pub o_a: Option<f64>,
    pub o_c: Option<f64>,
    pub checks_a: usize,
    pub checks_c: usize,
    /// Explanations with fewer than `L` holders.
    pub skipped_a: Vec<SignedKey>,
    pub skipped_c: Vec<SignedKey>,
}

/// Empirical monotonicity test.
///
/// For each top explanation, `l` holder images are drawn and the explanation
/// is grown one random concept at a time (up to `m` steps, bounded by the
/// vocabulary), re-running the weak check after every step. All randomness
/// comes from one generator consumed in the order: AXps then CXps, and per
/// explanation the holder draw followed by each image's concept picks.
#[allow(clippy::too_many_arguments)]
pub fn monotonicity_test<O: PredictionOracle>(
    oracles: &BTreeMap<String, O>,
    axps: &SignedSets,
    cxps: &SignedSets,
    top_axps: &[SignedKey],
    top_cxps: &[SignedKey],
    l: usize,
    m: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    if l == 0 || m == 0 {
        return Err(Error::InvalidArgument("monotonicity test needs L >= 1 and m >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<String> = oracles.keys().cloned().collect();
    let (o_a, checks_a, skipped_a) = monotonicity_side(oracles, &ids, axps, top_axps, XpKind::Axp, l, m, &mut rng)?;
    let (o_c, checks_c, skipped_c) = monotonicity_side(oracles, &ids, cxps, top_cxps, XpKind::Cxp, l, m, &mut rng)?;
    Ok(MonotonicityReport { o_a, o_c, checks_a, checks_c, skipped_a, skipped_c })
}

#[allow(clippy::too_many_arguments)]
fn monotonicity_side<O: PredictionOracle>(
    oracles: &BTreeMap<String, O>,
    ids: &[String],
    per_image: &SignedSets,
    top: &[SignedKey],
    kind: XpKind,
    l: usize,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Option<f64>, usize, Vec<SignedKey>)> {
    let held = holders(ids, per_image);
    let mut passed = 0usize;
    let mut total = 0usize;
    let mut skipped = Vec::new();
    for key in top {
        let candidates: Vec<&String> = held.get(key).map(|s| s.iter().collect()).unwrap_or_default();
        if candidates.len() < l {
            skipped.push(key.clone());
            continue;
        }
        let mut chosen: Vec<usize> = sample(rng, candidates.len(), l).into_vec();
        chosen.sort_unstable();
        for pos in chosen {
            let oracle = &oracles[candidates[pos]];
            let n = oracle.vocab_size();
            let mut grown = key.concepts.clone();
            let steps = m.min(n.saturating_sub(grown.len()));
            for _ in 0..steps {
                let pool = grown.complement(n);
                let pick = pool.as_slice()[rng.random_range(0..pool.len())];
                grown = grown.with(pick);
                total += 1;
                if weak_check(oracle, kind, &grown)? {
                    passed += 1;
                }
            }
        }
    }
    let rate = (total > 0).then(|| passed as f64 / total as f64 * 100.0);
    Ok((rate, total, skipped))
}

// ---------------------------------------------------------------- vocabulary

/// For each prefix size, the fraction of images whose prediction flips when
/// every concept of the prefix is erased. With SPLiCE, images whose
/// reconstruction already changes the prediction never count as flips.
pub fn vocab_alpha_test(
    images: &EmbeddingMatrix,
    bank: &ConceptBank,
    config: &EraserConfig,
    head: &ModelHead,
    prefix_sizes: &[usize],
    pool: &EmbeddingMatrix,
    pool_labels: Option<&DMatrix<u8>>,
) -> Result<BTreeMap<usize, f64>> {
    if images.is_empty() {
        return Err(Error::EmptyInput("alpha test images"));
    }
    let originals: Vec<usize> = (0..images.len()).map(|r| head.predict(&images.row(r))).collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for &size in prefix_sizes {
        if size == 0 || size > bank.len() {
            return Err(Error::InvalidArgument(format!("prefix size {size} outside 1..={}", bank.len())));
        }
        let prefix: Vec<usize> = (0..size).collect();
        let sub = bank.select(&prefix)?;
        let labels = pool_labels.map(|l| l.columns(0, size).into_owned());
        let eraser = Eraser::from_config(config, sub, pool, labels.as_ref())?;
        let mut flips = 0usize;
        for (r, &orig) in originals.iter().enumerate() {
            let prepared = eraser.prepare(&images.row(r))?;
            if config.kind == EraserKind::Splice {
                let recon = eraser.erase_prepared(&prepared, &BoolMask::all_retained(size))?;
                if head.predict(&recon)? != orig {
                    continue;
                }
            }
            let gone = eraser.erase_prepared(&prepared, &BoolMask::all_erased(size))?;
            if head.predict(&gone)? != orig {
                flips += 1;
            }
        }
        out.insert(size, flips as f64 / images.len() as f64);
    }
    Ok(out)
}

/// Concepts by descending mean absolute strength, ties by index.
pub fn vocab_order_by_strength(embeddings: &EmbeddingMatrix, bank: &ConceptBank) -> Result<Vec<usize>> {
    if embeddings.is_empty() {
        return Err(Error::EmptyInput("embeddings"));
    }
    let mut sums = vec![0.0; bank.len()];
    for r in 0..embeddings.len() {
        let st = concept_strengths(&embeddings.row(r), bank)?;
        for (s, v) in sums.iter_mut().zip(st.values()) {
            *s += v.abs();
        }
    }
    let mut order: Vec<usize> = (0..bank.len()).collect();
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    Ok(order)
}

/// Drops near-duplicate concepts. Pairs with cosine above `threshold` are
/// visited from most to least similar and the less frequent member of each is
/// dropped. `frequency_order` lists concept indices from most to least frequent.
/// Returns the pruned bank and the kept original indices.
pub fn vocab_prune_similar(
    bank: &ConceptBank,
    frequency_order: &[usize],
    threshold: f64,
) -> Result<(ConceptBank, Vec<usize>)> {
    let n = bank.len();
    let mut rank = vec![usize::MAX; n];
    for (r, &i) in frequency_order.iter().enumerate() {
        if i >= n || rank[i] != usize::MAX {
            return Err(Error::InvalidArgument("frequency order must be a permutation of the vocabulary".into()));
        }
        rank[i] = r;
    }
    if frequency_order.len() != n {
        return Err(Error::InvalidArgument("frequency order must be a permutation of the vocabulary".into()));
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let sim = linalg::cosine(&bank.vector(i), &bank.vector(j));
            if sim > threshold {
                pairs.push((sim, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut dropped = vec![false; n];
    for (_, i, j) in pairs {
        let victim = if rank[i] > rank[j] { i } else { j };
        dropped[victim] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|&i| !dropped[i]).collect();
    Ok((bank.select(&kept)?, kept))
}
