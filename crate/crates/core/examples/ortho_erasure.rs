//! Erase one concept from an embedding with non-orthogonal concepts and watch
//! every other concept score stay put.

use conxp::domain::{BoolMask, ConceptBank, ConceptSet};
use conxp::erasure::Eraser;
use nalgebra::{DMatrix, DVector};

fn main() -> conxp::Result<()> {
    let s = 0.5f64.sqrt();
    let vectors = DMatrix::from_columns(&[
        DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
        DVector::from_vec(vec![s, s, 0.0, 0.0]),
        DVector::from_vec(vec![0.0, 0.0, s, s]),
    ]);
    let bank = ConceptBank::new(vec!["stripes".into(), "fur".into(), "water".into()], vectors)?;
    let z = DVector::from_vec(vec![0.9, 0.4, -0.3, 0.2]);
    let eraser = Eraser::ortho(bank.clone());
    let r = eraser.erase(&z, &BoolMask::erasing(3, &ConceptSet::from([1])))?;
    println!("{:<8} {:>9} {:>9}", "concept", "before", "after");
    for (i, name) in bank.names().iter().enumerate() {
        let c = bank.vector(i);
        println!("{name:<8} {:>9.5} {:>9.5}", c.dot(&z), c.dot(&r));
    }
    println!("moved by {:.5}", (&r - &z).norm());
    Ok(())
}
