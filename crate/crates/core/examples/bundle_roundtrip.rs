//! Write a bundle to disk, read it back, and run the command-line pipeline
//! against it from code.

use conxp::analytics::BehaviorSelector;
use conxp::bundle::{load_bundle, save_bundle, DType};
use conxp::cli::{run_explain, EnumChoice, EraserArgs, ExplainArgs, KindChoice};
use conxp::erasure::EraserKind;
use conxp::synthetic::{fixture_bundle, FixtureSpec};

fn main() -> conxp::Result<()> {
    let dir = std::env::temp_dir().join(format!("conxp-example-{}", std::process::id()));
    let bundle = fixture_bundle(FixtureSpec { dtype: DType::F32, ..FixtureSpec::default() })?;
    save_bundle(&bundle, dir.join("bundle"))?;
    let loaded = load_bundle(dir.join("bundle"))?;
    println!("manifest:\n{}", serde_json::to_string_pretty(loaded.manifest())?);

    let out = run_explain(&ExplainArgs {
        bundle: dir.join("bundle"),
        behavior: BehaviorSelector::Correct(0),
        eraser: EraserArgs { eraser: EraserKind::Ortho, lambda: 0.01, eps: 1e-6, leace_train: 500, seed: 0 },
        enumerator: EnumChoice::Xpenum,
        kind: KindChoice::Both,
        depth: 2,
        max_iters: 250,
        timeout_secs: 10.0,
        cap: 700,
        admit_with: vec![],
        out: dir.join("explanations.jsonl"),
        report: dir.join("report.json"),
        no_timing: false,
    })?;
    println!(
        "{} records for {} images in {:.2} ms",
        out.records.len(),
        out.report.totals.images,
        out.report.totals.elapsed_ns as f64 / 1e6
    );
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
