//! Hitting-set driven enumeration of both explanation kinds, with a check of
//! their duality.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Duration;

use conxp::domain::ConceptSet;
use conxp::erasure::Eraser;
use conxp::explain::{xp_enum, EnumBudget, InstanceContext};
use conxp::synthetic::MonotoneLinear;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn hits_all(h: &ConceptSet, family: &BTreeSet<ConceptSet>) -> bool {
    family.iter().all(|f| f.intersects(h))
}

fn main() -> conxp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inst = MonotoneLinear::random(7, 9, &mut rng)?;
    let ctx = InstanceContext::new(
        "img",
        inst.z.clone(),
        Arc::new(inst.head.clone()),
        Arc::new(Eraser::ortho(inst.bank.clone())),
    )?;
    let budget = EnumBudget { max_iterations: 1000, timeout: Duration::from_secs(10), ..EnumBudget::default() };
    let e = xp_enum(&ctx, &budget)?;
    println!("exhausted: {}, oracle calls: {}", e.exhausted, e.oracle_calls);
    for a in &e.axps {
        println!("AXp {a}  hits every CXp: {}", hits_all(a, &e.cxps));
    }
    for c in &e.cxps {
        println!("CXp {c}  hits every AXp: {}", hits_all(c, &e.axps));
    }
    Ok(())
}
