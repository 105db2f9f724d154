//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::{CMat, CVec, C64};

/// `(A + Aᴴ)/2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending order.
pub fn hermitian_eigen(a: &CMat) -> (DVector<f64>, CMat) {
    let eig = hermitian_part(a).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMat::zeros(a.nrows(), n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    hermitian_eigen(a).0[0]
}

/// Re Tr(A B) without forming the product.
pub fn re_trace_product(a: &CMat, b: &CMat) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            let x = a[(i, k)] * b[(k, i)];
            s += x.re;
        }
    }
    s
}

pub fn real_trace(a: &CMat) -> f64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].re).sum()
}

/// Inverse of a Hermitian positive-definite matrix, `None` if Cholesky fails.
pub fn hpd_inverse(a: &CMat) -> Option<CMat> {
    hermitian_part(a).cholesky().map(|c| c.inverse())
}

/// Moore-Penrose right inverse `Aᴴ(AAᴴ)⁻¹` of a full-row-rank matrix.
pub fn right_pseudo_inverse(a: &CMat) -> Option<CMat> {
    let gram = a * a.adjoint();
    let inv = hpd_inverse(&gram)?;
    Some(a.adjoint() * inv)
}

/// Outer product `x yᴴ`.
pub fn outer(x: &CVec, y: &CVec) -> CMat {
    x * y.adjoint()
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sqr(x: &CVec) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// Inner product `xᴴ y`.
pub fn dot_h(x: &CVec, y: &CVec) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Real Vandermonde matrix with columns `1, x, x², …` truncated to `k` columns.
pub fn vandermonde(x: &[f64], k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), k, |i, j| x[i].powi(j as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let a = CMat::from_fn(4, 4, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let h = hermitian_part(&a);
        let (vals, vecs) = hermitian_eigen(&h);
        for i in 1..vals.len() {
            assert!(vals[i - 1] <= vals[i]);
        }
        let d = CMat::from_diagonal(&vals.map(|v| C64::new(v, 0.0)));
        let rec = &vecs * d * vecs.adjoint();
        assert!((rec - h).norm() < 1e-10);
    }

    #[test]
    fn trace_product_matches_dense() {
        let a = CMat::from_fn(3, 3, |i, j| C64::new(i as f64 + 0.5, j as f64));
        let b = CMat::from_fn(3, 3, |i, j| C64::new(j as f64, 1.0 - i as f64));
        assert!((re_trace_product(&a, &b) - (&a * &b).trace().re).abs() < 1e-12);
    }
}
