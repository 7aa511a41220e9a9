//! Share explanations found on some images with the rest of a behavior.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use conxp::erasure::Eraser;
use conxp::explain::{xp_enum, xp_sat_enum, EnumBudget, InstanceContext, XpKind};
use conxp::synthetic::{fixture_bundle, FixtureSpec};

fn main() -> conxp::Result<()> {
    let data = fixture_bundle(FixtureSpec::default())?.data()?;
    let head = Arc::new(data.head.clone());
    let eraser = Arc::new(Eraser::ortho(data.bank.clone()));
    let mut instances = Vec::new();
    for (r, id) in data.embeddings.image_ids().iter().enumerate().take(12) {
        instances.push((
            id.clone(),
            InstanceContext::new(id.clone(), data.embeddings.row(r), head.clone(), eraser.clone())?,
        ));
    }
    // only the first four images are explained directly
    let mut initial: BTreeMap<String, BTreeSet<_>> = BTreeMap::new();
    for (i, (id, ctx)) in instances.iter().enumerate() {
        let sets = if i < 4 { xp_enum(ctx, &EnumBudget::default())?.cxps } else { BTreeSet::new() };
        initial.insert(id.clone(), sets);
    }
    let sat = xp_sat_enum(&instances, &initial, XpKind::Cxp);
    for (id, sets) in &sat.sets {
        println!("{id}: {} CXps before, {} after", initial[id].len(), sets.len());
    }
    Ok(())
}
