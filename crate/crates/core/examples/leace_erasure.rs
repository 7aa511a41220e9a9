//! Fit LEACE on labeled synthetic data and check that no linear trace of the
//! concept is left.

use conxp::domain::{ConceptSet, EmbeddingMatrix};
use conxp::erasure::LeaceStats;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> conxp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (samples, d) = (400, 5);
    let labels = DMatrix::from_fn(samples, 2, |r, c| u8::from((r >> c) & 1 == 1));
    let data = DMatrix::from_fn(samples, d, |r, j| {
        let noise: f64 = rng.sample(StandardNormal);
        noise
            + if j == 0 { 2.0 * f64::from(labels[(r, 0)]) } else { 0.0 }
            + if j == 1 { f64::from(labels[(r, 1)]) } else { 0.0 }
    });
    let ids = (0..samples).map(|i| format!("x{i}")).collect();
    let train = EmbeddingMatrix::new(data, ids)?;
    let stats = LeaceStats::new(train.data(), &labels)?;
    println!("cross-covariance before:\n{:.3}", stats.cross_covariance());

    let fit = stats.fit(&ConceptSet::from([0]))?;
    let erased: Vec<DVector<f64>> = (0..samples).map(|r| fit.erase(&train.row(r))).collect::<Result<_, _>>()?;
    let erased = EmbeddingMatrix::from_rows(&erased, train.image_ids().to_vec())?;
    let after = LeaceStats::new(erased.data(), &labels)?;
    println!("cross-covariance after erasing concept 0:\n{:.3}", after.cross_covariance());
    Ok(())
}
