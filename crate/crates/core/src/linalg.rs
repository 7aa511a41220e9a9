//! Small dense linear-algebra helpers shared by the fitting and erasure code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Singular values at or below `RANK_TOL * sigma_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Moore-Penrose pseudoinverse through the SVD, zeroing singular values at or
/// below `rel_tol * sigma_max`.
pub fn pinv(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    let sigma_max = svd.singular_values.max();
    let cutoff = rel_tol * sigma_max;
    let mut out = DMatrix::zeros(cols, rows);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        // out += v_k * u_k^T / s
        let vk = v_t.row(k).transpose();
        let uk = u.column(k);
        out += (vk * uk.transpose()) / s;
    }
    out
}

/// Numerical rank with the same relative cutoff as [`pinv`].
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    let cutoff = rel_tol * sv.max();
    sv.iter().filter(|&&s| s > cutoff && s > 0.0).count()
}

/// Orthonormal basis (as columns) of the column space of `a`.
pub fn column_space_basis(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let rows = a.nrows();
    if a.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("svd computed with u");
    let sigma_max = svd.singular_values.max();
    let cutoff = rel_tol * sigma_max;
    let keep: Vec<usize> =
        svd.singular_values.iter().enumerate().filter(|(_, &s)| s > cutoff && s > 0.0).map(|(k, _)| k).collect();
    DMatrix::from_fn(rows, keep.len(), |r, c| u[(r, keep[c])])
}

/// Symmetric square root and pseudo-inverse square root of a PSD matrix.
///
/// Eigenvalues at or below `rel_tol * lambda_max` (or negative from rounding)
/// are treated as zero in both factors, so directions outside the support are
/// annihilated by both.
pub fn psd_sqrt_and_pinv_sqrt(sym: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = sym.nrows();
    let eig = SymmetricEigen::new(sym.clone());
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = rel_tol * lambda_max;
    let mut sqrt = DMatrix::zeros(n, n);
    let mut inv_sqrt = DMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= cutoff || lambda <= 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        let outer = v * v.transpose();
        sqrt += &outer * lambda.sqrt();
        inv_sqrt += outer / lambda.sqrt();
    }
    (sqrt, inv_sqrt)
}

pub fn cosine(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        a.dot(b) / (na * nb)
    }
}

pub fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

/// Index of the maximum, lowest index winning exact ties.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_val || i == 0 {
            best = i;
            best_val = v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_of_rank_deficient_matrix_satisfies_penrose_identities() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let p = pinv(&a, RANK_TOL);
        let apa = &a * &p * &a;
        let pap = &p * &a * &p;
        assert!((apa - &a).norm() < 1e-12);
        assert!((pap - &p).norm() < 1e-12);
        assert_eq!(rank(&a, RANK_TOL), 1);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let s = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let (r, ri) = psd_sqrt_and_pinv_sqrt(&s, RANK_TOL);
        assert!((&r * &r - &s).norm() < 1e-12);
        assert!((&r * &ri - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax([1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax([2.0, 2.0]), 0);
        let c = cosine(&DVector::from_vec(vec![3.0, 4.0]), &DVector::from_vec(vec![1.0, 0.0]));
        assert!((c - 0.6).abs() < 1e-15);
    }
}
