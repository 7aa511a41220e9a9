//! Command-line front end. Every subcommand is a thin layer over the library.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{self, Behavior, BehaviorSelector, Histogram, RelevanceLabels, SignedKey, SignedSets};
use crate::bundle::{self, BundleData, DType};
use crate::domain::{concept_strengths, ConceptSet, Sign};
use crate::erasure::{Eraser, EraserConfig, EraserKind};
use crate::error::{Error, Result};
use crate::explain::{naive_enum, xp_enum, xp_sat_enum, EnumBudget, Enumeration, InstanceContext, XpKind};
use crate::records::{
    self, fmt_f64, BudgetReport, EnumeratorKind, ExplanationRecord, ImageReport, RunReport, Table, Totals,
    REPORT_FORMAT,
};
use crate::synthetic::{fixture_bundle, FixtureSpec};

#[derive(Debug, Parser)]
#[command(name = "conxp", version, about = "Concept-based abductive and contrastive explanations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate explanations for every image of a behavior.
    Explain(ExplainArgs),
    /// Share explanations across the images of a run.
    Saturate(SaturateArgs),
    /// Histogram of signed explanations.
    Aggregate(AggregateArgs),
    /// Generalization, coverage, parsimony and plausibility tables.
    Metrics(MetricsArgs),
    /// Vocabulary sizing, ordering and pruning.
    Vocab(VocabArgs),
    /// Empirical monotonicity test of the head.
    Monotest(MonotestArgs),
    /// Write a synthetic fixture bundle.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EraserArgs {
    #[arg(long, default_value = "ortho")]
    pub eraser: EraserKind,
    /// SPLiCE sparsity penalty.
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    /// SPLiCE KKT tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// LEACE training sample size.
    #[arg(long, default_value_t = 500)]
    pub leace_train: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl EraserArgs {
    fn config(&self, kind: EraserKind) -> EraserConfig {
        EraserConfig { kind, lambda: self.lambda, eps: self.eps, leace_train: self.leace_train, seed: self.seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnumChoice {
    Naive,
    Xpenum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindChoice {
    Axp,
    Cxp,
    Both,
}

impl KindChoice {
    fn kinds(self) -> &'static [XpKind] {
        match self {
            KindChoice::Axp => &[XpKind::Axp],
            KindChoice::Cxp => &[XpKind::Cxp],
            KindChoice::Both => &[XpKind::Axp, XpKind::Cxp],
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            KindChoice::Axp => "axp",
            KindChoice::Cxp => "cxp",
            KindChoice::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// `correct:K` or `misclass:Ki:Kj`.
    #[arg(long)]
    pub behavior: BehaviorSelector,
    #[command(flatten)]
    pub eraser: EraserArgs,
    #[arg(long = "enum", value_enum, default_value = "naive")]
    pub enumerator: EnumChoice,
    #[arg(long, value_enum, default_value = "both")]
    pub kind: KindChoice,
    /// Largest explanation size tried by the naive enumerator.
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    /// Iteration cap of the hitting-set enumerator.
    #[arg(long, default_value_t = 250)]
    pub max_iters: usize,
    /// Per-image time limit.
    #[arg(long, default_value_t = 36_000.0)]
    pub timeout_secs: f64,
    /// Largest behavior size; bigger behaviors are subsampled.
    #[arg(long, default_value_t = 700)]
    pub cap: usize,
    /// Extra erasers an image must also be explicable under.
    #[arg(long, value_delimiter = ',')]
    pub admit_with: Vec<EraserKind>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    /// Zero every timing field so that output is byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SaturateArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub eraser: EraserArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AggregateArgs {
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Restricts the histogram to the run's behavior images.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Supplies concept names.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// One run report per behavior.
    #[arg(long, required = true)]
    pub report: Vec<PathBuf>,
    /// Supplies relevance labels for plausibility.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Seed of the train/test split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct VocabArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[command(flatten)]
    pub eraser: EraserArgs,
    /// Prefix sizes of the strength-ordered vocabulary.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Drop concepts more similar than this to a more frequent one.
    #[arg(long)]
    pub prune_threshold: Option<f64>,
    /// Explanation records used to rank concepts by frequency when pruning.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MonotestArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
    #[command(flatten)]
    pub eraser: EraserArgs,
    /// Number of top explanations of each kind to test.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Images per explanation.
    #[arg(long, default_value_t = 5)]
    pub l: usize,
    /// Augmentation steps per image.
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub images: usize,
    #[arg(long, default_value_t = 6)]
    pub concepts: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "f64")]
    pub dtype: DTypeChoice,
    #[arg(long)]
    pub no_checksums: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DTypeChoice {
    F32,
    F64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Explain(a) => run_explain(&a).map(|_| ()),
        Command::Saturate(a) => run_saturate(&a),
        Command::Aggregate(a) => run_aggregate(&a),
        Command::Metrics(a) => run_metrics(&a),
        Command::Vocab(a) => run_vocab(&a),
        Command::Monotest(a) => run_monotest(&a),
        Command::Synth(a) => run_synth(&a),
    }
}

fn load(path: &Path) -> Result<BundleData> {
    bundle::load_bundle(path)?.data()
}

fn build_eraser(data: &BundleData, config: &EraserConfig) -> Result<Eraser> {
    Eraser::from_config(config, data.bank.clone(), &data.embeddings, data.concept_labels.as_ref())
}

fn embedding(data: &BundleData, id: &str) -> Result<DVector<f64>> {
    data.embeddings.embedding(id).ok_or_else(|| Error::Unknown { kind: "image", name: id.to_string() })
}

fn signs_of(z: &DVector<f64>, data: &BundleData, concepts: &ConceptSet) -> Result<Vec<Sign>> {
    let st = concept_strengths(z, &data.bank)?;
    Ok(concepts.iter().map(|i| Sign::of(st.values()[i])).collect())
}

fn elapsed_ns(d: Duration) -> u64 {
    u64::try_from(d.as_nanos()).unwrap_or(u64::MAX)
}

fn enumerate(
    ctx: &InstanceContext,
    choice: EnumChoice,
    kinds: KindChoice,
    budget: &EnumBudget,
    start: Instant,
) -> Result<Enumeration> {
    match choice {
        EnumChoice::Xpenum => {
            let mut e = xp_enum(ctx, budget)?;
            match kinds {
                KindChoice::Axp => e.cxps.clear(),
                KindChoice::Cxp => e.axps.clear(),
                KindChoice::Both => {}
            }
            Ok(e)
        }
        EnumChoice::Naive => {
            let mut total = Enumeration { exhausted: true, ..Enumeration::default() };
            for &kind in kinds.kinds() {
                let remaining = EnumBudget { timeout: budget.timeout.saturating_sub(start.elapsed()), ..*budget };
                let e = naive_enum(ctx, kind, &remaining)?;
                total.axps.extend(e.axps);
                total.cxps.extend(e.cxps);
                total.exhausted &= e.exhausted;
                total.truncated |= e.truncated;
                total.inexplicable |= e.inexplicable;
                total.oracle_calls += e.oracle_calls;
                if e.truncated || e.inexplicable {
                    break;
                }
            }
            total.exhausted &= !total.truncated && !total.inexplicable;
            Ok(total)
        }
    }
}

/// What `explain` wrote.
#[derive(Debug, Clone)]
pub struct ExplainOutput {
    pub records: Vec<ExplanationRecord>,
    pub report: RunReport,
}

pub fn run_explain(args: &ExplainArgs) -> Result<ExplainOutput> {
    let run_start = Instant::now();
    if !(args.timeout_secs >= 0.0 && args.timeout_secs.is_finite()) {
        return Err(Error::InvalidArgument("--timeout-secs must be a finite non-negative number".into()));
    }
    let data = load(&args.bundle)?;
    let labels = data
        .labels
        .as_ref()
        .ok_or_else(|| Error::Precondition("bundle has no labels file; behaviors need true classes".into()))?;
    let main = Arc::new(build_eraser(&data, &args.eraser.config(args.eraser.eraser))?);
    let mut extra = Vec::new();
    for &kind in args.admit_with.iter().collect::<BTreeSet<_>>() {
        if kind != main.kind() {
            extra.push(build_eraser(&data, &args.eraser.config(kind))?);
        }
    }
    let mut admitters: Vec<&Eraser> = vec![&main];
    admitters.extend(extra.iter());
    let (behavior, admission) = analytics::select_behavior(
        &data.embeddings,
        labels,
        args.behavior,
        &data.head,
        &admitters,
        args.cap,
        args.eraser.seed,
    )?;

    let mut warnings = Vec::new();
    if main.kind() == EraserKind::Leace && args.enumerator == EnumChoice::Xpenum {
        warnings.push("leace with xpenum fits one projection per candidate set and may be very slow".to_string());
    }
    if admission.selected < admission.admitted {
        warnings.push(format!("behavior subsampled from {} to {} images", admission.admitted, admission.selected));
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let budget = EnumBudget {
        max_depth: args.depth,
        max_iterations: args.max_iters,
        timeout: Duration::from_secs_f64(args.timeout_secs),
    };
    let head = Arc::new(data.head.clone());
    let enumerator = match args.enumerator {
        EnumChoice::Naive => EnumeratorKind::Naive,
        EnumChoice::Xpenum => EnumeratorKind::Xpenum,
    };
    let per_image: Vec<(ImageReport, Vec<ExplanationRecord>)> = behavior
        .image_ids
        .par_iter()
        .map(|id| {
            let start = Instant::now();
            let z = embedding(&data, id)?;
            let predicted_class = head.predict(&z)?;
            let outcome = InstanceContext::new(id.clone(), z.clone(), head.clone(), main.clone())
                .and_then(|ctx| enumerate(&ctx, args.enumerator, args.kind, &budget, start));
            let elapsed = if args.no_timing { 0 } else { elapsed_ns(start.elapsed()) };
            let mut report = ImageReport {
                image_id: id.clone(),
                predicted_class,
                elapsed_ns: elapsed,
                truncated: false,
                inexplicable: false,
                exhausted: false,
                axps: 0,
                cxps: 0,
                oracle_calls: 0,
                error: None,
            };
            let e = match outcome {
                Ok(e) => e,
                Err(err) => {
                    log::warn!("{id}: {err}");
                    report.error = Some(format!("{}: {err}", err.code()));
                    return Ok((report, Vec::new()));
                }
            };
            report.truncated = e.truncated;
            report.inexplicable = e.inexplicable;
            report.exhausted = e.exhausted;
            report.axps = e.axps.len();
            report.cxps = e.cxps.len();
            report.oracle_calls = e.oracle_calls;
            let recs = e
                .explanations()
                .into_iter()
                .map(|x| {
                    Ok(ExplanationRecord {
                        image_id: id.clone(),
                        kind: x.kind,
                        signs: signs_of(&z, &data, &x.concepts)?,
                        concepts: x.concepts.as_slice().to_vec(),
                        eraser: main.kind(),
                        enumerator,
                        elapsed_ns: elapsed,
                        truncated: e.truncated,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((report, recs))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut images = Vec::with_capacity(per_image.len());
    let mut all = Vec::new();
    for (r, recs) in per_image {
        images.push(r);
        all.extend(recs);
    }
    images.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    records::sort_records(&mut all);
    records::write_jsonl(&args.out, &all)?;

    let mut totals = Totals { images: images.len(), ..Totals::default() };
    for i in &images {
        totals.image_elapsed_ns = totals.image_elapsed_ns.saturating_add(i.elapsed_ns);
        totals.truncated += usize::from(i.truncated);
        totals.inexplicable += usize::from(i.inexplicable);
        totals.errors += usize::from(i.error.is_some());
        totals.axps += i.axps;
        totals.cxps += i.cxps;
        totals.oracle_calls += i.oracle_calls;
    }
    totals.elapsed_ns = if args.no_timing { 0 } else { elapsed_ns(run_start.elapsed()) };
    let report = RunReport {
        format_version: REPORT_FORMAT.into(),
        command: "explain".into(),
        behavior: behavior.name.clone(),
        eraser: main.kind(),
        enumerator,
        kind: args.kind.as_str().into(),
        seed: args.eraser.seed,
        budget: BudgetReport { depth: args.depth, max_iters: args.max_iters, timeout_secs: args.timeout_secs },
        admission,
        cap: args.cap,
        images,
        totals,
        warnings,
    };
    records::write_json(&args.report, &report)?;
    Ok(ExplainOutput { records: all, report })
}

fn single_eraser(recs: &[ExplanationRecord]) -> Result<Option<EraserKind>> {
    let kinds: BTreeSet<EraserKind> = recs.iter().map(|r| r.eraser).collect();
    match kinds.len() {
        0 => Ok(None),
        1 => Ok(kinds.into_iter().next()),
        _ => Err(Error::InvalidArgument("records mix several erasers".into())),
    }
}

fn contexts(data: &BundleData, eraser: Arc<Eraser>, ids: &BTreeSet<String>) -> Result<Vec<(String, InstanceContext)>> {
    let head = Arc::new(data.head.clone());
    ids.iter()
        .map(|id| {
            let ctx = InstanceContext::new(id.clone(), embedding(data, id)?, head.clone(), eraser.clone())?;
            Ok((id.clone(), ctx))
        })
        .collect()
}

pub fn run_saturate(args: &SaturateArgs) -> Result<()> {
    let data = load(&args.bundle)?;
    let input = records::read_jsonl(&args.input)?;
    let kind = single_eraser(&input)?.unwrap_or(args.eraser.eraser);
    let eraser = Arc::new(build_eraser(&data, &args.eraser.config(kind))?);
    let ids: BTreeSet<String> = input.iter().map(|r| r.image_id.clone()).collect();
    let instances = contexts(&data, eraser, &ids)?;
    let mut out = input.clone();
    for xp in [XpKind::Axp, XpKind::Cxp] {
        let initial = records::concept_sets(&input, xp);
        if initial.is_empty() {
            continue;
        }
        let sat = xp_sat_enum(&instances, &initial, xp);
        for (id, msg) in &sat.failures {
            log::warn!("{id}: saturation failed: {msg}");
        }
        for (id, sets) in &sat.sets {
            let before = initial.get(id);
            let z = embedding(&data, id)?;
            for s in sets.iter().filter(|s| before.is_none_or(|b| !b.contains(*s))) {
                out.push(ExplanationRecord {
                    image_id: id.clone(),
                    kind: xp,
                    concepts: s.as_slice().to_vec(),
                    signs: signs_of(&z, &data, s)?,
                    eraser: kind,
                    enumerator: EnumeratorKind::Xpsatenum,
                    elapsed_ns: 0,
                    truncated: false,
                });
            }
        }
    }
    records::sort_records(&mut out);
    records::write_jsonl(&args.out, &out)
}

fn read_inputs(paths: &[PathBuf]) -> Result<Vec<ExplanationRecord>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(records::read_jsonl(p)?);
    }
    Ok(all)
}

fn behavior_of(report: &RunReport) -> Result<Behavior> {
    Ok(Behavior::new(report.behavior.parse()?, report.explained_images()))
}

fn describe(key: &SignedKey, names: Option<&[String]>) -> String {
    names.map(|n| key.describe(n)).unwrap_or_default()
}

/// Rows of `kind,key,names,count`, most frequent first.
pub fn histogram_table(hists: &[(XpKind, Histogram)], names: Option<&[String]>) -> Table {
    let mut t = Table::new(&["kind", "key", "names", "count"]);
    for (kind, h) in hists {
        let mut entries: Vec<(&SignedKey, &usize)> = h.iter().collect();
        entries.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        for (key, count) in entries {
            t.push(vec![kind.to_string(), key.canonical(), describe(key, names), count.to_string()]);
        }
    }
    t
}

pub fn run_aggregate(args: &AggregateArgs) -> Result<()> {
    let recs = read_inputs(&args.input)?;
    let names = match &args.bundle {
        Some(b) => Some(bundle::load_bundle(b)?.manifest().vocabulary.clone()),
        None => None,
    };
    let ids: Vec<String> = match &args.report {
        Some(r) => records::read_report(r)?.explained_images(),
        None => recs.iter().map(|r| r.image_id.clone()).collect::<BTreeSet<_>>().into_iter().collect(),
    };
    let mut hists = Vec::new();
    for xp in [XpKind::Axp, XpKind::Cxp] {
        let sets = records::signed_sets(&recs, xp)?;
        let mut h = Histogram::new();
        for id in &ids {
            for key in sets.get(id).into_iter().flatten() {
                *h.entry(key.clone()).or_insert(0) += 1;
            }
        }
        hists.push((xp, h));
    }
    histogram_table(&hists, names.as_deref()).write(&args.out)
}

/// Seeded split of a behavior into two halves (the first gets the extra image).
pub fn split_behavior(behavior: &Behavior, seed: u64) -> (Behavior, Behavior) {
    let mut ids = behavior.image_ids.clone();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ids.len().div_ceil(2);
    let test = ids.split_off(cut);
    (Behavior::new(behavior.selector, ids), Behavior::new(behavior.selector, test))
}

pub fn run_metrics(args: &MetricsArgs) -> Result<()> {
    if args.k == 0 {
        return Err(Error::InvalidArgument("--k must be >= 1".into()));
    }
    let recs = read_inputs(&args.input)?;
    let behaviors = args.report.iter().map(|p| behavior_of(&records::read_report(p)?)).collect::<Result<Vec<_>>>()?;
    let bundle = match &args.bundle {
        Some(b) => Some(bundle::load_bundle(b)?),
        None => None,
    };
    let sets: Vec<(XpKind, SignedSets)> = [XpKind::Axp, XpKind::Cxp]
        .into_iter()
        .map(|k| Ok((k, records::signed_sets(&recs, k)?)))
        .collect::<Result<_>>()?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;

    let mut gen = Table::new(&["behavior", "kind", "k", "train_images", "test_images", "gen"]);
    let mut cov = Table::new(&["behavior", "kind", "key", "length", "coverage"]);
    let mut maxcov = Table::new(&["behavior", "kind", "rank", "key", "covered", "fraction"]);
    let mut pars = Table::new(&["behavior", "kind", "length", "count", "min", "q1", "median", "q3", "max"]);
    let mut cumul = Table::new(&["behavior", "kind", "length", "coverage"]);
    let mut plaus = Table::new(&["behavior", "kind", "key", "ratio", "category"]);
    for b in &behaviors {
        let (train, test) = split_behavior(b, args.seed);
        for (kind, per_image) in &sets {
            let kind_s = kind.to_string();
            let g = analytics::gen_at_k(
                &analytics::histogram(&train, per_image),
                &analytics::histogram(&test, per_image),
                args.k,
            )?;
            gen.push(vec![
                b.name.clone(),
                kind_s.clone(),
                args.k.to_string(),
                train.len().to_string(),
                test.len().to_string(),
                fmt_f64(g),
            ]);

            let coverage = analytics::individual_coverage(b, per_image);
            let mut ranked: Vec<(&SignedKey, &f64)> = coverage.iter().collect();
            ranked.sort_by(|x, y| y.1.total_cmp(x.1).then_with(|| x.0.cmp(y.0)));
            for (key, c) in &ranked {
                cov.push(vec![b.name.clone(), kind_s.clone(), key.canonical(), key.len().to_string(), fmt_f64(**c)]);
            }

            let mc = analytics::max_cov_at_k(b, per_image, args.k)?;
            for (rank, (key, covered)) in mc.chosen.iter().zip(&mc.covered).enumerate() {
                maxcov.push(vec![
                    b.name.clone(),
                    kind_s.clone(),
                    (rank + 1).to_string(),
                    key.canonical(),
                    covered.to_string(),
                    fmt_f64(*covered as f64 / b.len().max(1) as f64),
                ]);
            }

            for row in analytics::parsimony_stats(b, per_image) {
                pars.push(vec![
                    b.name.clone(),
                    kind_s.clone(),
                    row.length.to_string(),
                    row.count.to_string(),
                    fmt_f64(row.min),
                    fmt_f64(row.q1),
                    fmt_f64(row.median),
                    fmt_f64(row.q3),
                    fmt_f64(row.max),
                ]);
            }

            let longest = coverage.keys().map(SignedKey::len).max().unwrap_or(0);
            for len in 1..=longest {
                cumul.push(vec![
                    b.name.clone(),
                    kind_s.clone(),
                    len.to_string(),
                    fmt_f64(analytics::cumulative_coverage_at_length(b, per_image, len)),
                ]);
            }

            let relevance = bundle.as_ref().and_then(|bd| bd.relevance()).and_then(|r| r.get(&b.name));
            if let (Some(map), Some(bd)) = (relevance, &bundle) {
                let labels = RelevanceLabels::from_map(bd.manifest().vocabulary.len(), map)?;
                for (key, _) in &ranked {
                    let p = analytics::plausibility(key, &labels)?;
                    plaus.push(vec![
                        b.name.clone(),
                        kind_s.clone(),
                        key.canonical(),
                        fmt_f64(p.ratio),
                        p.category.to_string(),
                    ]);
                }
            }
        }
    }
    let dir = &args.out_dir;
    gen.write(&dir.join("gen_at_k.csv"))?;
    cov.write(&dir.join("coverage.csv"))?;
    maxcov.write(&dir.join("maxcov.csv"))?;
    pars.write(&dir.join("parsimony.csv"))?;
    cumul.write(&dir.join("cumulative.csv"))?;
    plaus.write(&dir.join("plausibility.csv"))?;
    if behaviors.len() > 1 {
        let refs: Vec<&Behavior> = behaviors.iter().collect();
        let mut mixed = Table::new(&["kind", "key", "coverage"]);
        for (kind, per_image) in &sets {
            for (key, c) in analytics::mixed_coverage(&refs, per_image) {
                mixed.push(vec![kind.to_string(), key.canonical(), fmt_f64(c)]);
            }
        }
        mixed.write(&dir.join("mixed_coverage.csv"))?;
    }
    Ok(())
}

pub fn run_vocab(args: &VocabArgs) -> Result<()> {
    let data = load(&args.bundle)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let names = data.bank.names();
    let order = analytics::vocab_order_by_strength(&data.embeddings, &data.bank)?;
    let mut order_t = Table::new(&["rank", "concept", "name"]);
    for (rank, &i) in order.iter().enumerate() {
        order_t.push(vec![(rank + 1).to_string(), i.to_string(), names[i].clone()]);
    }
    order_t.write(&args.out_dir.join("order.csv"))?;

    if !args.sizes.is_empty() {
        let ordered = data.bank.select(&order)?;
        let labels = data
            .concept_labels
            .as_ref()
            .map(|l| nalgebra::DMatrix::from_fn(l.nrows(), order.len(), |r, c| l[(r, order[c])]));
        let alpha = analytics::vocab_alpha_test(
            &data.embeddings,
            &ordered,
            &args.eraser.config(args.eraser.eraser),
            &data.head,
            &args.sizes,
            &data.embeddings,
            labels.as_ref(),
        )?;
        let mut t = Table::new(&["size", "alpha"]);
        for (size, a) in alpha {
            t.push(vec![size.to_string(), fmt_f64(a)]);
        }
        t.write(&args.out_dir.join("alpha.csv"))?;
    }

    if let Some(threshold) = args.prune_threshold {
        let frequency = match &args.input {
            Some(p) => {
                let mut counts = vec![0usize; data.bank.len()];
                for r in records::read_jsonl(p)? {
                    for &i in &r.concepts {
                        *counts.get_mut(i).ok_or(Error::IndexOutOfRange { index: i, len: data.bank.len() })? += 1;
                    }
                }
                let rank: BTreeMap<usize, usize> = order.iter().enumerate().map(|(r, &i)| (i, r)).collect();
                let mut f: Vec<usize> = (0..data.bank.len()).collect();
                f.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(rank[&a].cmp(&rank[&b])));
                f
            }
            None => order.clone(),
        };
        let (_, kept) = analytics::vocab_prune_similar(&data.bank, &frequency, threshold)?;
        let mut t = Table::new(&["concept", "name", "kept"]);
        for (i, name) in names.iter().enumerate() {
            t.push(vec![i.to_string(), name.clone(), kept.binary_search(&i).is_ok().to_string()]);
        }
        t.write(&args.out_dir.join("pruned.csv"))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct MonotestOutput {
    behavior: String,
    n: usize,
    l: usize,
    m: usize,
    seed: u64,
    o_a: Option<f64>,
    o_c: Option<f64>,
    checks_a: usize,
    checks_c: usize,
    skipped_a: Vec<String>,
    skipped_c: Vec<String>,
}

pub fn run_monotest(args: &MonotestArgs) -> Result<()> {
    let data = load(&args.bundle)?;
    let recs = read_inputs(&args.input)?;
    let report = records::read_report(&args.report)?;
    let behavior = behavior_of(&report)?;
    let kind = single_eraser(&recs)?.unwrap_or(report.eraser);
    let eraser = Arc::new(build_eraser(&data, &args.eraser.config(kind))?);
    let ids: BTreeSet<String> = behavior.image_ids.iter().cloned().collect();
    let oracles: BTreeMap<String, InstanceContext> = contexts(&data, eraser, &ids)?.into_iter().collect();
    let axps = records::signed_sets(&recs, XpKind::Axp)?;
    let cxps = records::signed_sets(&recs, XpKind::Cxp)?;
    let top_a = analytics::top_k(&analytics::histogram(&behavior, &axps), args.n);
    let top_c = analytics::top_k(&analytics::histogram(&behavior, &cxps), args.n);
    let r = analytics::monotonicity_test(&oracles, &axps, &cxps, &top_a, &top_c, args.l, args.m, args.eraser.seed)?;
    let out = MonotestOutput {
        behavior: behavior.name,
        n: args.n,
        l: args.l,
        m: args.m,
        seed: args.eraser.seed,
        o_a: r.o_a,
        o_c: r.o_c,
        checks_a: r.checks_a,
        checks_c: r.checks_c,
        skipped_a: r.skipped_a.iter().map(SignedKey::canonical).collect(),
        skipped_c: r.skipped_c.iter().map(SignedKey::canonical).collect(),
    };
    records::write_json(&args.out, &out)
}

pub fn run_synth(args: &SynthArgs) -> Result<()> {
    let b = fixture_bundle(FixtureSpec {
        images: args.images,
        concepts: args.concepts,
        dim: args.dim,
        seed: args.seed,
        dtype: match args.dtype {
            DTypeChoice::F32 => DType::F32,
            DTypeChoice::F64 => DType::F64,
        },
        checksums: !args.no_checksums,
    })?;
    bundle::save_bundle(&b, &args.out)
}
