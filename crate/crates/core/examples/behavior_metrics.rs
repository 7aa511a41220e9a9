//! From a bundle to behavior-level numbers: histograms, generalization,
//! coverage, parsimony and plausibility.

use std::collections::BTreeMap;
use std::sync::Arc;

use conxp::analytics::{
    build_behavior, gen_at_k, histogram, max_cov_at_k, parsimony_stats, plausibility, sign_explanations, strengths_for,
    top_k, Behavior, BehaviorSelector, RelevanceLabels,
};
use conxp::erasure::Eraser;
use conxp::explain::{naive_enum, EnumBudget, InstanceContext, XpKind};
use conxp::synthetic::{fixture_bundle, FixtureSpec};

fn main() -> conxp::Result<()> {
    let data = fixture_bundle(FixtureSpec { images: 120, ..FixtureSpec::default() })?.data()?;
    let eraser = Arc::new(Eraser::ortho(data.bank.clone()));
    let head = Arc::new(data.head.clone());
    let selector = BehaviorSelector::Correct(0);
    let behavior =
        build_behavior(&data.embeddings, data.labels.as_ref().unwrap(), selector, &head, &[&eraser], 700, 0)?;
    println!("{}: {} images", behavior.name, behavior.len());

    let mut axps = BTreeMap::new();
    for id in &behavior.image_ids {
        let ctx =
            InstanceContext::new(id.clone(), data.embeddings.embedding(id).unwrap(), head.clone(), eraser.clone())?;
        axps.insert(id.clone(), naive_enum(&ctx, XpKind::Axp, &EnumBudget::default())?.axps);
    }
    let strengths = strengths_for(&data.embeddings, &data.bank, &behavior.image_ids)?;
    let signed = sign_explanations(&axps, &strengths)?;
    let h = histogram(&behavior, &signed);
    for key in top_k(&h, 5) {
        println!("{:>3}  {}", h[&key], key.describe(data.bank.names()));
    }

    let (train, test) = behavior.image_ids.split_at(behavior.len() / 2);
    let half = |ids: &[String]| Behavior::new(selector, ids.to_vec());
    println!("gen@5 = {:.3}", gen_at_k(&histogram(&half(train), &signed), &histogram(&half(test), &signed), 5)?);
    let mc = max_cov_at_k(&behavior, &signed, 3)?;
    println!("top-3 greedy cover reaches {:?} images", mc.covered);
    for row in parsimony_stats(&behavior, &signed) {
        println!("length {}: {} keys, median coverage {:.3}", row.length, row.count, row.median);
    }
    let relevance = &data.relevance.as_ref().unwrap()["correct:0"];
    let labels = RelevanceLabels::from_map(data.bank.len(), relevance)?;
    for key in top_k(&h, 3) {
        println!("{} is {}", key, plausibility(&key, &labels)?.category);
    }
    Ok(())
}
