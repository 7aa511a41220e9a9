//! How big must the vocabulary be before erasing all of it flips most
//! predictions, and which near-duplicate concepts can go.

use conxp::analytics::{vocab_alpha_test, vocab_order_by_strength, vocab_prune_similar};
use conxp::domain::ConceptBank;
use conxp::erasure::{EraserConfig, EraserKind};
use conxp::synthetic::{fixture_bundle, FixtureSpec};
use nalgebra::DMatrix;

fn main() -> conxp::Result<()> {
    let data = fixture_bundle(FixtureSpec { images: 80, concepts: 8, dim: 10, ..FixtureSpec::default() })?.data()?;
    let order = vocab_order_by_strength(&data.embeddings, &data.bank)?;
    let ordered = data.bank.select(&order)?;
    let config = EraserConfig::with_kind(EraserKind::Ortho);
    let alpha =
        vocab_alpha_test(&data.embeddings, &ordered, &config, &data.head, &[1, 2, 4, 8], &data.embeddings, None)?;
    for (size, a) in alpha {
        println!("first {size} concepts: erasing them flips {:.0}% of predictions", a * 100.0);
    }

    // a bank with a near-duplicate pair
    let v = DMatrix::from_row_slice(3, 3, &[1.0, 0.995, 0.0, 0.0, 0.0999, 0.0, 0.0, 0.0, 1.0]);
    let bank = ConceptBank::normalizing(vec!["car".into(), "automobile".into(), "tree".into()], v, 1e-2)?;
    let (pruned, kept) = vocab_prune_similar(&bank, &[1, 0, 2], 0.9)?;
    println!("kept {:?} -> {:?}", kept, pruned.names());
    Ok(())
}
