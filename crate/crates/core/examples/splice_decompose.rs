//! Sparse nonnegative decomposition of an embedding over a concept bank, then
//! erasure by dropping terms of the reconstruction.

use conxp::domain::{BoolMask, ConceptBank, ConceptSet};
use conxp::erasure::{splice_decompose, splice_erase};
use nalgebra::{DMatrix, DVector};

fn main() -> conxp::Result<()> {
    let vectors = DMatrix::from_columns(&[
        DVector::from_vec(vec![1.0, 0.0, 0.0]),
        DVector::from_vec(vec![0.0, 1.0, 0.0]),
        DVector::from_vec(vec![0.0, 0.0, 1.0]),
        DVector::from_vec(vec![0.6, 0.8, 0.0]),
    ]);
    let bank = ConceptBank::new(vec!["sky".into(), "grass".into(), "road".into(), "field".into()], vectors)?;
    let z = DVector::from_vec(vec![0.7, 0.7, 0.1]);
    for lambda in [0.0, 0.01, 0.1] {
        let d = splice_decompose(&z, &bank, lambda, 1e-6)?;
        println!(
            "lambda {lambda:<5} weights {:.4?} cos(z, recon) {:.4} sweeps {}",
            d.weights.as_slice(),
            d.residual_cos,
            d.sweeps
        );
    }
    let d = splice_decompose(&z, &bank, 0.01, 1e-6)?;
    let r = splice_erase(&d, &bank, &BoolMask::erasing(4, &ConceptSet::from([3])))?;
    println!("without `field`: {:.4?}", r.as_slice());
    Ok(())
}
