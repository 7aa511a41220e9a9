//! Explanation checks, deletion-based shrinking, and the three enumerators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use itertools::Itertools;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{BoolMask, ConceptSet, ModelHead};
use crate::erasure::{Eraser, PreparedEmbedding};
use crate::error::{ensure_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XpKind {
    Axp,
    Cxp,
}

impl XpKind {
    pub fn as_str(self) -> &'static str {
        match self {
            XpKind::Axp => "axp",
            XpKind::Cxp => "cxp",
        }
    }
}

impl fmt::Display for XpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for XpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axp" => Ok(XpKind::Axp),
            "cxp" => Ok(XpKind::Cxp),
            other => Err(Error::Unknown { kind: "explanation kind", name: other.to_string() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Explanation {
    pub kind: XpKind,
    pub concepts: ConceptSet,
}

/// Answers whether the original prediction survives an erasure mask.
pub trait PredictionOracle {
    fn vocab_size(&self) -> usize;
    fn preserves(&self, mask: &BoolMask) -> Result<bool>;
}

impl<O: PredictionOracle + ?Sized> PredictionOracle for &O {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn preserves(&self, mask: &BoolMask) -> Result<bool> {
        (**self).preserves(mask)
    }
}

/// Oracle backed by a plain predicate on masks.
pub struct MaskFnOracle<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&BoolMask) -> bool> MaskFnOracle<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&BoolMask) -> bool> PredictionOracle for MaskFnOracle<F> {
    fn vocab_size(&self) -> usize {
        self.n
    }

    fn preserves(&self, mask: &BoolMask) -> Result<bool> {
        ensure_dim("oracle mask", self.n, mask.len())?;
        Ok((self.f)(mask))
    }
}

/// One image under one head and one eraser.
#[derive(Debug, Clone)]
pub struct InstanceContext {
    image_id: String,
    predicted_class: usize,
    head: Arc<ModelHead>,
    eraser: Arc<Eraser>,
    prepared: PreparedEmbedding,
}

impl InstanceContext {
    pub fn new(
        image_id: impl Into<String>,
        z: DVector<f64>,
        head: Arc<ModelHead>,
        eraser: Arc<Eraser>,
    ) -> Result<Self> {
        let predicted_class = head.predict(&z)?;
        let prepared = eraser.prepare(&z)?;
        Ok(Self { image_id: image_id.into(), predicted_class, head, eraser, prepared })
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn z(&self) -> &DVector<f64> {
        &self.prepared.z
    }

    pub fn predicted_class(&self) -> usize {
        self.predicted_class
    }

    pub fn head(&self) -> &ModelHead {
        &self.head
    }

    pub fn eraser(&self) -> &Eraser {
        &self.eraser
    }

    pub fn prepared(&self) -> &PreparedEmbedding {
        &self.prepared
    }

    pub fn erased_prediction(&self, mask: &BoolMask) -> Result<usize> {
        let r = self.eraser.erase_prepared(&self.prepared, mask)?;
        self.head.predict(&r)
    }
}

impl PredictionOracle for InstanceContext {
    fn vocab_size(&self) -> usize {
        self.eraser.vocab_size()
    }

    fn preserves(&self, mask: &BoolMask) -> Result<bool> {
        Ok(self.erased_prediction(mask)? == self.predicted_class)
    }
}

/// Prediction preserved with exactly `subset` retained.
pub fn weak_axp_check<O: PredictionOracle + ?Sized>(oracle: &O, subset: &ConceptSet) -> Result<bool> {
    let n = oracle.vocab_size();
    subset.check_within(n)?;
    oracle.preserves(&BoolMask::retaining(n, subset))
}

/// Prediction changed with exactly `subset` erased.
pub fn weak_cxp_check<O: PredictionOracle + ?Sized>(oracle: &O, subset: &ConceptSet) -> Result<bool> {
    let n = oracle.vocab_size();
    subset.check_within(n)?;
    Ok(!oracle.preserves(&BoolMask::erasing(n, subset))?)
}

pub fn weak_check<O: PredictionOracle + ?Sized>(oracle: &O, kind: XpKind, subset: &ConceptSet) -> Result<bool> {
    match kind {
        XpKind::Axp => weak_axp_check(oracle, subset),
        XpKind::Cxp => weak_cxp_check(oracle, subset),
    }
}

/// Deletion-based shrinking in ascending index order.
pub fn shrink<O: PredictionOracle + ?Sized>(oracle: &O, kind: XpKind, subset: &ConceptSet) -> Result<Explanation> {
    if !weak_check(oracle, kind, subset)? {
        return Err(Error::Precondition(format!("{subset} is not a weak {kind}")));
    }
    let mut session = Session::unbounded(oracle);
    let concepts = session.shrink(kind, subset.clone())?.expect("an unbounded session never runs out of time");
    Ok(Explanation { kind, concepts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumBudget {
    pub max_depth: usize,
    pub max_iterations: usize,
    pub timeout: Duration,
}

impl Default for EnumBudget {
    fn default() -> Self {
        Self { max_depth: 2, max_iterations: 250, timeout: Duration::from_secs(36_000) }
    }
}

/// What an enumerator found for one instance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Enumeration {
    pub axps: BTreeSet<ConceptSet>,
    pub cxps: BTreeSet<ConceptSet>,
    /// The search space was fully explored.
    pub exhausted: bool,
    /// Stopped by the timeout.
    pub truncated: bool,
    /// Admission failed: the prediction already changes with nothing erased,
    /// or survives erasing everything.
    pub inexplicable: bool,
    pub oracle_calls: usize,
}

impl Enumeration {
    pub fn of_kind(&self, kind: XpKind) -> &BTreeSet<ConceptSet> {
        match kind {
            XpKind::Axp => &self.axps,
            XpKind::Cxp => &self.cxps,
        }
    }

    fn of_kind_mut(&mut self, kind: XpKind) -> &mut BTreeSet<ConceptSet> {
        match kind {
            XpKind::Axp => &mut self.axps,
            XpKind::Cxp => &mut self.cxps,
        }
    }

    /// All explanations, AXps first, each kind in canonical order.
    pub fn explanations(&self) -> Vec<Explanation> {
        let tag = |kind: XpKind, sets: &BTreeSet<ConceptSet>| {
            sets.iter().map(move |c| Explanation { kind, concepts: c.clone() }).collect::<Vec<_>>()
        };
        let mut out = tag(XpKind::Axp, &self.axps);
        out.extend(tag(XpKind::Cxp, &self.cxps));
        out
    }
}

/// Oracle wrapper that enforces the deadline before every call.
struct Session<'a, O: ?Sized> {
    oracle: &'a O,
    n: usize,
    start: Instant,
    timeout: Option<Duration>,
    calls: usize,
}

impl<'a, O: PredictionOracle + ?Sized> Session<'a, O> {
    fn new(oracle: &'a O, timeout: Duration) -> Self {
        Self { n: oracle.vocab_size(), oracle, start: Instant::now(), timeout: Some(timeout), calls: 0 }
    }

    fn unbounded(oracle: &'a O) -> Self {
        Self { n: oracle.vocab_size(), oracle, start: Instant::now(), timeout: None, calls: 0 }
    }

    fn preserves(&mut self, mask: &BoolMask) -> Result<Option<bool>> {
        if let Some(t) = self.timeout {
            if self.start.elapsed() >= t {
                return Ok(None);
            }
        }
        self.calls += 1;
        self.oracle.preserves(mask).map(Some)
    }

    fn check(&mut self, kind: XpKind, subset: &ConceptSet) -> Result<Option<bool>> {
        Ok(match kind {
            XpKind::Axp => self.preserves(&BoolMask::retaining(self.n, subset))?,
            XpKind::Cxp => self.preserves(&BoolMask::erasing(self.n, subset))?.map(|p| !p),
        })
    }

    fn shrink(&mut self, kind: XpKind, mut current: ConceptSet) -> Result<Option<ConceptSet>> {
        for c in current.clone().iter() {
            let candidate = current.without(c);
            match self.check(kind, &candidate)? {
                None => return Ok(None),
                Some(true) => current = candidate,
                Some(false) => {}
            }
        }
        Ok(Some(current))
    }

    /// `Some(true)` when the instance can be explained at all.
    fn admit(&mut self) -> Result<Option<bool>> {
        let Some(kept) = self.preserves(&BoolMask::all_retained(self.n))? else {
            return Ok(None);
        };
        if !kept {
            return Ok(Some(false));
        }
        Ok(self.preserves(&BoolMask::all_erased(self.n))?.map(|survives| !survives))
    }
}

fn admission<O: PredictionOracle + ?Sized>(session: &mut Session<'_, O>, out: &mut Enumeration) -> Result<bool> {
    match session.admit()? {
        None => {
            out.truncated = true;
            Ok(false)
        }
        Some(false) => {
            out.inexplicable = true;
            Ok(false)
        }
        Some(true) => Ok(true),
    }
}

/// Breadth-first enumeration of explanations of one kind with at most
/// `budget.max_depth` concepts. Supersets of found explanations are skipped.
pub fn naive_enum<O: PredictionOracle + ?Sized>(oracle: &O, kind: XpKind, budget: &EnumBudget) -> Result<Enumeration> {
    if budget.max_depth == 0 {
        return Err(Error::InvalidArgument("naive enumeration depth must be >= 1".into()));
    }
    let mut session = Session::new(oracle, budget.timeout);
    let mut out = Enumeration::default();
    let n = session.n;
    if admission(&mut session, &mut out)? {
        let depth = budget.max_depth.min(n);
        'levels: for size in 1..=depth {
            for combo in (0..n).combinations(size) {
                let candidate = ConceptSet::from_iter(combo);
                if out.of_kind(kind).iter().any(|found| found.is_subset(&candidate)) {
                    continue;
                }
                match session.check(kind, &candidate)? {
                    None => {
                        out.truncated = true;
                        break 'levels;
                    }
                    Some(true) => {
                        out.of_kind_mut(kind).insert(candidate);
                    }
                    Some(false) => {}
                }
            }
        }
        out.exhausted = !out.truncated && depth == n;
    }
    out.oracle_calls = session.calls;
    Ok(out)
}

/// Smallest set hitting every member of `cxps` that contains no member of
/// `axps`; ties go to the lexicographically smallest sorted tuple.
pub fn find_mhs(cxps: &BTreeSet<ConceptSet>, axps: &BTreeSet<ConceptSet>) -> Option<ConceptSet> {
    if cxps.iter().any(ConceptSet::is_empty) {
        return None;
    }
    let universe: Vec<usize> = cxps.iter().flat_map(|c| c.iter()).collect::<BTreeSet<_>>().into_iter().collect();
    let search = MhsSearch { universe: &universe, cxps: cxps.iter().collect(), axps: axps.iter().collect() };
    let mut chosen = Vec::new();
    for k in 0..=universe.len() {
        if search.dfs(0, k, &mut chosen) {
            return Some(ConceptSet::from_iter(chosen));
        }
    }
    None
}

struct MhsSearch<'a> {
    universe: &'a [usize],
    cxps: Vec<&'a ConceptSet>,
    axps: Vec<&'a ConceptSet>,
}

impl MhsSearch<'_> {
    fn dfs(&self, start: usize, k: usize, chosen: &mut Vec<usize>) -> bool {
        let contains = |s: &ConceptSet| s.iter().all(|i| chosen.binary_search(&i).is_ok());
        if self.axps.iter().any(|a| contains(a)) {
            return false;
        }
        let remaining = k - chosen.len();
        let unhit: Vec<&ConceptSet> =
            self.cxps.iter().copied().filter(|c| !c.iter().any(|i| chosen.binary_search(&i).is_ok())).collect();
        if remaining == 0 {
            return unhit.is_empty();
        }
        if self.universe.len() - start < remaining {
            return false;
        }
        let floor = self.universe[start];
        // every unhit set needs an element still available; greedily packing
        // pairwise disjoint unhit sets gives a lower bound on picks needed
        let mut used: BTreeSet<usize> = BTreeSet::new();
        let mut disjoint = 0;
        for c in &unhit {
            let avail: Vec<usize> = c.iter().filter(|&i| i >= floor).collect();
            if avail.is_empty() {
                return false;
            }
            if avail.iter().all(|i| !used.contains(i)) {
                disjoint += 1;
                used.extend(avail);
            }
        }
        if disjoint > remaining {
            return false;
        }
        for pos in start..self.universe.len() {
            if self.universe.len() - pos < remaining {
                break;
            }
            chosen.push(self.universe[pos]);
            if self.dfs(pos + 1, k, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
}

/// Hitting-set-duality enumeration of both AXps and CXps.
pub fn xp_enum<O: PredictionOracle + ?Sized>(oracle: &O, budget: &EnumBudget) -> Result<Enumeration> {
    if budget.max_iterations == 0 {
        return Err(Error::InvalidArgument("xp_enum needs at least one iteration".into()));
    }
    let mut session = Session::new(oracle, budget.timeout);
    let mut out = Enumeration::default();
    let n = session.n;
    if admission(&mut session, &mut out)? {
        for _ in 0..budget.max_iterations {
            let Some(seed) = find_mhs(&out.cxps, &out.axps) else {
                out.exhausted = true;
                break;
            };
            let found = match session.check(XpKind::Axp, &seed)? {
                None => None,
                Some(true) => session.shrink(XpKind::Axp, seed)?.map(|s| (XpKind::Axp, s)),
                // retaining exactly `seed` flips the prediction, which is the
                // same mask as erasing exactly its complement
                Some(false) => session.shrink(XpKind::Cxp, seed.complement(n))?.map(|s| (XpKind::Cxp, s)),
            };
            match found {
                Some((kind, set)) => {
                    out.of_kind_mut(kind).insert(set);
                }
                None => {
                    out.truncated = true;
                    break;
                }
            }
        }
    }
    out.oracle_calls = session.calls;
    Ok(out)
}

/// Per-image result of saturation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Saturation {
    pub sets: BTreeMap<String, BTreeSet<ConceptSet>>,
    /// Images whose oracle failed, with the error message; they keep their
    /// initial sets.
    pub failures: BTreeMap<String, String>,
}

/// Shares explanations across a behavior: every pooled explanation that is a
/// weak explanation for another image is shrunk for that image and added.
pub fn xp_sat_enum<O>(
    instances: &[(String, O)],
    initial: &BTreeMap<String, BTreeSet<ConceptSet>>,
    kind: XpKind,
) -> Saturation
where
    O: PredictionOracle + Sync,
{
    let pool: BTreeSet<ConceptSet> = initial.values().flatten().cloned().collect();
    let results: Vec<(String, BTreeSet<ConceptSet>, Option<String>)> = instances
        .par_iter()
        .map(|(id, oracle)| {
            let start = initial.get(id).cloned().unwrap_or_default();
            match saturate_one(oracle, &pool, start.clone(), kind) {
                Ok(set) => (id.clone(), set, None),
                Err(e) => {
                    log::warn!("saturation failed for {id}: {e}");
                    (id.clone(), start, Some(e.to_string()))
                }
            }
        })
        .collect();
    let mut out = Saturation::default();
    for (id, set, failure) in results {
        if let Some(msg) = failure {
            out.failures.insert(id.clone(), msg);
        }
        out.sets.insert(id, set);
    }
    out
}

fn saturate_one<O: PredictionOracle + ?Sized>(
    oracle: &O,
    pool: &BTreeSet<ConceptSet>,
    mut own: BTreeSet<ConceptSet>,
    kind: XpKind,
) -> Result<BTreeSet<ConceptSet>> {
    for candidate in pool {
        if own.contains(candidate) {
            continue;
        }
        if weak_check(oracle, kind, candidate)? {
            own.insert(shrink(oracle, kind, candidate)?.concepts);
        }
    }
    Ok(own)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Preserved iff c0 retained, or c1 and c2 both retained.
    fn or_and_head() -> MaskFnOracle<impl Fn(&BoolMask) -> bool> {
        MaskFnOracle::new(3, |m: &BoolMask| m.is_retained(0) || (m.is_retained(1) && m.is_retained(2)))
    }

    fn sets(xs: &[&[usize]]) -> BTreeSet<ConceptSet> {
        xs.iter().map(|s| s.iter().copied().collect()).collect()
    }

    fn full_budget(n: usize) -> EnumBudget {
        EnumBudget { max_depth: n, max_iterations: 10_000, ..EnumBudget::default() }
    }

    /// Minimal sets under the single-mask checks, by scanning all 2^n subsets.
    fn brute_minimal<O: PredictionOracle>(oracle: &O, kind: XpKind) -> BTreeSet<ConceptSet> {
        let n = oracle.vocab_size();
        let weak: Vec<ConceptSet> = (0u32..1 << n)
            .map(|bits| (0..n).filter(|i| bits >> i & 1 == 1).collect::<ConceptSet>())
            .filter(|s| weak_check(oracle, kind, s).unwrap())
            .collect();
        weak.iter().filter(|s| !weak.iter().any(|t| t != *s && t.is_subset(s))).cloned().collect()
    }

    #[test]
    fn checks_on_monotone_head() {
        let h = or_and_head();
        assert!(weak_axp_check(&h, &ConceptSet::from([0])).unwrap());
        assert!(!weak_axp_check(&h, &ConceptSet::empty()).unwrap());
        assert!(weak_axp_check(&h, &ConceptSet::full(3)).unwrap());
        assert!(!weak_cxp_check(&h, &ConceptSet::empty()).unwrap());
        assert!(weak_cxp_check(&h, &ConceptSet::full(3)).unwrap());
        assert!(weak_cxp_check(&h, &ConceptSet::from([0, 1])).unwrap());
        assert!(!weak_cxp_check(&h, &ConceptSet::from([1, 2])).unwrap());
        assert!(weak_check(&h, XpKind::Axp, &ConceptSet::from([5])).is_err());
    }

    #[test]
    fn shrink_ascending_order() {
        let h = or_and_head();
        assert_eq!(shrink(&h, XpKind::Axp, &ConceptSet::from([0, 1])).unwrap().concepts, ConceptSet::from([0]));
        assert_eq!(shrink(&h, XpKind::Axp, &ConceptSet::from([1, 2])).unwrap().concepts, ConceptSet::from([1, 2]));
        // both singletons suffice: 0 is dropped first, then 1 must stay
        let either = MaskFnOracle::new(2, |m: &BoolMask| m.is_retained(0) || m.is_retained(1));
        assert_eq!(shrink(&either, XpKind::Axp, &ConceptSet::from([0, 1])).unwrap().concepts, ConceptSet::from([1]));
        assert!(matches!(shrink(&h, XpKind::Axp, &ConceptSet::from([1])), Err(Error::Precondition(_))));
    }

    #[test]
    fn naive_enum_examples() {
        let h = or_and_head();
        let budget = EnumBudget::default();
        let a = naive_enum(&h, XpKind::Axp, &budget).unwrap();
        assert_eq!(a.axps, sets(&[&[0], &[1, 2]]));
        assert!(a.cxps.is_empty());
        let c = naive_enum(&h, XpKind::Cxp, &budget).unwrap();
        assert_eq!(c.cxps, sets(&[&[0, 1], &[0, 2]]));
        let flat = MaskFnOracle::new(3, |_: &BoolMask| true);
        let f = naive_enum(&flat, XpKind::Axp, &budget).unwrap();
        assert!(f.inexplicable && f.axps.is_empty());
    }

    #[test]
    fn find_mhs_examples() {
        let none = BTreeSet::new();
        assert_eq!(find_mhs(&sets(&[&[0], &[1]]), &none), Some(ConceptSet::from([0, 1])));
        assert_eq!(find_mhs(&sets(&[&[0, 1], &[1, 2]]), &none), Some(ConceptSet::from([1])));
        assert_eq!(find_mhs(&sets(&[&[0, 1]]), &sets(&[&[0], &[1]])), None);
        assert_eq!(find_mhs(&none, &none), Some(ConceptSet::empty()));
        assert_eq!(find_mhs(&none, &sets(&[&[]])), None);
        // lexicographic tie-break among the two size-1 hitting sets
        assert_eq!(find_mhs(&sets(&[&[2, 4]]), &none), Some(ConceptSet::from([2])));
        assert_eq!(find_mhs(&sets(&[&[2, 4]]), &sets(&[&[2]])), Some(ConceptSet::from([4])));
    }

    fn brute_mhs(cxps: &BTreeSet<ConceptSet>, axps: &BTreeSet<ConceptSet>, n: usize) -> Option<ConceptSet> {
        let mut all: Vec<ConceptSet> = (0u32..1 << n)
            .map(|bits| (0..n).filter(|i| bits >> i & 1 == 1).collect::<ConceptSet>())
            .filter(|s| cxps.iter().all(|c| c.intersects(s)) && !axps.iter().any(|a| a.is_subset(s)))
            .collect();
        all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.as_slice().cmp(b.as_slice())));
        all.into_iter().next()
    }

    fn family(n: usize) -> impl Strategy<Value = BTreeSet<ConceptSet>> {
        proptest::collection::btree_set(
            proptest::collection::btree_set(0..n, 1..=n).prop_map(|s| s.into_iter().collect::<ConceptSet>()),
            0..6,
        )
    }

    proptest! {
        #[test]
        fn find_mhs_matches_exhaustive_scan(cxps in family(6), axps in family(6)) {
            prop_assert_eq!(find_mhs(&cxps, &axps), brute_mhs(&cxps, &axps, 6));
        }
    }

    #[test]
    fn xp_enum_matches_naive_and_brute_force() {
        let h = or_and_head();
        let out = xp_enum(&h, &full_budget(3)).unwrap();
        assert!(out.exhausted);
        assert_eq!(out.axps, sets(&[&[0], &[1, 2]]));
        assert_eq!(out.cxps, sets(&[&[0, 1], &[0, 2]]));
        assert_eq!(out.axps, brute_minimal(&h, XpKind::Axp));
        assert_eq!(out.cxps, brute_minimal(&h, XpKind::Cxp));
    }

    #[test]
    fn xp_enum_single_iteration_gives_one_explanation() {
        let h = or_and_head();
        let out = xp_enum(&h, &EnumBudget { max_iterations: 1, ..EnumBudget::default() }).unwrap();
        // the first candidate is the empty set, which fails, so the first find
        // is the shrink of the full vocabulary as a CXp
        assert!(out.axps.is_empty());
        assert_eq!(out.cxps, sets(&[&[0, 2]]));
        assert!(!out.exhausted);
    }

    #[test]
    fn zero_timeout_truncates_before_any_call() {
        let h = or_and_head();
        let budget = EnumBudget { timeout: Duration::ZERO, ..EnumBudget::default() };
        let out = xp_enum(&h, &budget).unwrap();
        assert!(out.truncated && !out.inexplicable && out.axps.is_empty() && out.cxps.is_empty());
        assert_eq!(out.oracle_calls, 0);
        assert!(naive_enum(&h, XpKind::Axp, &budget).unwrap().truncated);
    }

    #[test]
    fn saturation_shares_and_shrinks() {
        let h = or_and_head();
        let instances = vec![("a".to_string(), &h), ("b".to_string(), &h)];
        let mut initial = BTreeMap::new();
        initial.insert("a".to_string(), sets(&[&[0]]));
        initial.insert("b".to_string(), sets(&[&[1, 2]]));
        let out = xp_sat_enum(&instances, &initial, XpKind::Axp);
        assert_eq!(out.sets["a"], sets(&[&[0], &[1, 2]]));
        assert_eq!(out.sets["b"], sets(&[&[0], &[1, 2]]));

        // {0,1} is valid for an image that only needs c1, so it arrives shrunk
        let needs_one = MaskFnOracle::new(3, |m: &BoolMask| m.is_retained(1));
        let instances = vec![("a".to_string(), &h as &dyn PredictionOracleSync), ("c".to_string(), &needs_one)];
        let mut initial = BTreeMap::new();
        initial.insert("a".to_string(), sets(&[&[0, 1]]));
        initial.insert("c".to_string(), BTreeSet::new());
        let out = xp_sat_enum(&instances, &initial, XpKind::Axp);
        assert_eq!(out.sets["c"], sets(&[&[1]]));
        assert_eq!(out.sets["a"], sets(&[&[0, 1]]));

        // an invalid pooled explanation leaves the image unchanged
        let needs_two = MaskFnOracle::new(3, |m: &BoolMask| m.is_retained(2));
        let instances = vec![("c".to_string(), &needs_two as &dyn PredictionOracleSync)];
        let mut initial = BTreeMap::new();
        initial.insert("c".to_string(), BTreeSet::new());
        initial.insert("other".to_string(), sets(&[&[0]]));
        assert!(xp_sat_enum(&instances, &initial, XpKind::Axp).sets["c"].is_empty());
    }

    trait PredictionOracleSync: PredictionOracle + Sync {}
    impl<T: PredictionOracle + Sync> PredictionOracleSync for T {}
}
