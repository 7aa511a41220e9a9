//! Explanation records (JSONL), run reports (JSON) and metric tables (CSV).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytics::{AdmissionCounts, SignedKey, SignedSets};
use crate::domain::{ConceptSet, Sign};
use crate::erasure::EraserKind;
use crate::error::{Error, Result};
use crate::explain::XpKind;

pub const REPORT_FORMAT: &str = "conxp-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnumeratorKind {
    Naive,
    Xpenum,
    Xpsatenum,
}

impl EnumeratorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnumeratorKind::Naive => "naive",
            EnumeratorKind::Xpenum => "xpenum",
            EnumeratorKind::Xpsatenum => "xpsatenum",
        }
    }
}

impl fmt::Display for EnumeratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnumeratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(EnumeratorKind::Naive),
            "xpenum" => Ok(EnumeratorKind::Xpenum),
            "xpsatenum" => Ok(EnumeratorKind::Xpsatenum),
            other => Err(Error::Unknown { kind: "enumerator", name: other.to_string() }),
        }
    }
}

/// One explanation of one image, a single JSONL line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub image_id: String,
    pub kind: XpKind,
    pub concepts: Vec<usize>,
    pub signs: Vec<Sign>,
    pub eraser: EraserKind,
    pub enumerator: EnumeratorKind,
    pub elapsed_ns: u64,
    pub truncated: bool,
}

impl ExplanationRecord {
    pub fn validate(&self) -> Result<()> {
        if self.concepts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "record for `{}`: concepts must be strictly ascending",
                self.image_id
            )));
        }
        if self.concepts.len() != self.signs.len() {
            return Err(Error::InvalidArgument(format!(
                "record for `{}`: {} concepts but {} signs",
                self.image_id,
                self.concepts.len(),
                self.signs.len()
            )));
        }
        Ok(())
    }

    pub fn concept_set(&self) -> ConceptSet {
        self.concepts.iter().copied().collect()
    }

    pub fn signed_key(&self) -> Result<SignedKey> {
        SignedKey::new(self.concept_set(), self.signs.clone())
    }
}

/// Canonical order: image, then kind (AXps first), then concepts.
pub fn sort_records(records: &mut [ExplanationRecord]) {
    records.sort_by(|a, b| {
        (&a.image_id, a.kind, &a.concepts, a.enumerator).cmp(&(&b.image_id, b.kind, &b.concepts, b.enumerator))
    });
}

pub fn records_to_jsonl(records: &[ExplanationRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_jsonl(text: &str) -> Result<Vec<ExplanationRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let r: ExplanationRecord = serde_json::from_str(l)?;
            r.validate()?;
            Ok(r)
        })
        .collect()
}

pub fn write_jsonl(path: &Path, records: &[ExplanationRecord]) -> Result<()> {
    fs::write(path, records_to_jsonl(records)?).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<ExplanationRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text)
}

/// Unsigned explanation sets of one kind, per image.
pub fn concept_sets(records: &[ExplanationRecord], kind: XpKind) -> BTreeMap<String, BTreeSet<ConceptSet>> {
    let mut out: BTreeMap<String, BTreeSet<ConceptSet>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.kind == kind) {
        out.entry(r.image_id.clone()).or_default().insert(r.concept_set());
    }
    out
}

/// Signed explanation sets of one kind, per image (duplicates across
/// enumerators collapse).
pub fn signed_sets(records: &[ExplanationRecord], kind: XpKind) -> Result<SignedSets> {
    let mut out = SignedSets::new();
    for r in records.iter().filter(|r| r.kind == kind) {
        out.entry(r.image_id.clone()).or_default().insert(r.signed_key()?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub depth: usize,
    pub max_iters: usize,
    pub timeout_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageReport {
    pub image_id: String,
    pub predicted_class: usize,
    pub elapsed_ns: u64,
    pub truncated: bool,
    pub inexplicable: bool,
    pub exhausted: bool,
    pub axps: usize,
    pub cxps: usize,
    pub oracle_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub images: usize,
    /// Wall-clock time of the whole run.
    pub elapsed_ns: u64,
    /// Sum of per-image times.
    pub image_elapsed_ns: u64,
    pub truncated: usize,
    pub inexplicable: usize,
    pub errors: usize,
    pub axps: usize,
    pub cxps: usize,
    pub oracle_calls: usize,
}

/// Summary of one `explain` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: String,
    pub command: String,
    pub behavior: String,
    pub eraser: EraserKind,
    pub enumerator: EnumeratorKind,
    pub kind: String,
    pub seed: u64,
    pub budget: BudgetReport,
    pub admission: AdmissionCounts,
    pub cap: usize,
    pub images: Vec<ImageReport>,
    pub totals: Totals,
    pub warnings: Vec<String>,
}

impl RunReport {
    /// Images that produced explanations (admitted, no error).
    pub fn explained_images(&self) -> Vec<String> {
        self.images.iter().filter(|i| i.error.is_none() && !i.inexplicable).map(|i| i.image_id.clone()).collect()
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let report: RunReport = serde_json::from_slice(&text)?;
    if report.format_version != REPORT_FORMAT {
        return Err(Error::Manifest(format!(
            "unsupported report format `{}` (expected {REPORT_FORMAT})",
            report.format_version
        )));
    }
    Ok(report)
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Shortest round-trip float formatting, shared by every table.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, kind: XpKind, concepts: Vec<usize>) -> ExplanationRecord {
        let signs = vec![Sign::Positive; concepts.len()];
        ExplanationRecord {
            image_id: id.into(),
            kind,
            concepts,
            signs,
            eraser: EraserKind::Ortho,
            enumerator: EnumeratorKind::Naive,
            elapsed_ns: 17,
            truncated: false,
        }
    }

    #[test]
    fn jsonl_field_order_and_round_trip() {
        let mut recs =
            vec![rec("b", XpKind::Axp, vec![1]), rec("a", XpKind::Cxp, vec![0, 2]), rec("a", XpKind::Axp, vec![2])];
        sort_records(&mut recs);
        let text = records_to_jsonl(&recs).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            r#"{"image_id":"a","kind":"axp","concepts":[2],"signs":["+"],"eraser":"ortho","enumerator":"naive","elapsed_ns":17,"truncated":false}"#
        );
        let back = parse_jsonl(&text).unwrap();
        assert_eq!(back, recs);
        assert_eq!(records_to_jsonl(&back).unwrap(), text);
    }

    #[test]
    fn misaligned_or_unsorted_records_are_rejected() {
        let mut r = rec("a", XpKind::Axp, vec![2, 1]);
        assert!(r.validate().is_err());
        r.concepts = vec![1, 2];
        r.signs.pop();
        assert!(r.validate().is_err());
    }

    #[test]
    fn grouping_collapses_duplicates() {
        let mut dup = rec("a", XpKind::Axp, vec![2]);
        dup.enumerator = EnumeratorKind::Xpsatenum;
        let recs = vec![rec("a", XpKind::Axp, vec![2]), dup, rec("a", XpKind::Cxp, vec![0])];
        assert_eq!(concept_sets(&recs, XpKind::Axp)["a"].len(), 1);
        assert_eq!(signed_sets(&recs, XpKind::Cxp).unwrap()["a"].len(), 1);
    }
}
