//! The empirical monotonicity test on a monotone head and on one that is
//! monotone in no direction.

use std::collections::{BTreeMap, BTreeSet};

use conxp::analytics::{monotonicity_test, SignedKey, SignedSets};
use conxp::domain::{ConceptSet, Sign};
use conxp::explain::{xp_enum, EnumBudget};
use conxp::synthetic::{exactly_one_oracle, MonotoneDnf};

fn positive(sets: &BTreeSet<ConceptSet>) -> BTreeSet<SignedKey> {
    sets.iter().map(|s| SignedKey::new(s.clone(), vec![Sign::Positive; s.len()]).unwrap()).collect()
}

fn main() -> conxp::Result<()> {
    let n = 5;
    let ids: Vec<String> = (0..3).map(|i| format!("img{i}")).collect();
    let dnf = MonotoneDnf { n, terms: vec![ConceptSet::from([0, 1]), ConceptSet::from([3])] };
    let found = xp_enum(&dnf.oracle(), &EnumBudget::default())?;
    let per =
        |sets: &BTreeSet<ConceptSet>| -> SignedSets { ids.iter().map(|id| (id.clone(), positive(sets))).collect() };
    let oracles: BTreeMap<String, _> = ids.iter().map(|id| (id.clone(), dnf.oracle())).collect();
    let top_a: Vec<SignedKey> = positive(&found.axps).into_iter().collect();
    let top_c: Vec<SignedKey> = positive(&found.cxps).into_iter().collect();
    let r = monotonicity_test(&oracles, &per(&found.axps), &per(&found.cxps), &top_a, &top_c, 2, 4, 0)?;
    println!("monotone head:      O_A = {:?}, O_C = {:?}", r.o_a, r.o_c);

    let singles: BTreeSet<ConceptSet> = (0..n).map(|i| ConceptSet::from([i])).collect();
    let anti: BTreeMap<String, _> = ids.iter().map(|id| (id.clone(), exactly_one_oracle(n))).collect();
    let top: Vec<SignedKey> = positive(&singles).into_iter().collect();
    let r = monotonicity_test(&anti, &per(&singles), &SignedSets::new(), &top, &[], 2, 4, 0)?;
    println!("exactly-one head:   O_A = {:?}", r.o_a);
    Ok(())
}
