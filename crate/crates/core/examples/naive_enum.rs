//! Breadth-first search for short explanations of one prediction.

use std::sync::Arc;

use conxp::erasure::Eraser;
use conxp::explain::{naive_enum, EnumBudget, InstanceContext, XpKind};
use conxp::synthetic::MonotoneLinear;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> conxp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let inst = MonotoneLinear::random(6, 8, &mut rng)?;
    let ctx = InstanceContext::new(
        "img",
        inst.z.clone(),
        Arc::new(inst.head.clone()),
        Arc::new(Eraser::ortho(inst.bank.clone())),
    )?;
    println!("predicted class {}", ctx.predicted_class());
    for kind in [XpKind::Axp, XpKind::Cxp] {
        let e = naive_enum(&ctx, kind, &EnumBudget::default())?;
        let sets: Vec<String> = e.of_kind(kind).iter().map(ToString::to_string).collect();
        println!("{kind}s up to size 2: {} ({} oracle calls)", sets.join(" "), e.oracle_calls);
    }
    Ok(())
}
