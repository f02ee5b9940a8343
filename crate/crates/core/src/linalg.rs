//! Small dense complex matrices stored row-major in slices.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// `out += s * a * b` with `a: m x k`, `b: k x n`.
#[inline]
pub fn gemm_acc(out: &mut [C64], a: &[C64], b: &[C64], m: usize, k: usize, n: usize, s: C64) {
    for i in 0..m {
        for l in 0..k {
            let ail = a[i * k + l] * s;
            if ail == ZERO {
                continue;
            }
            let brow = &b[l * n..(l + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += ail * *bv;
            }
        }
    }
}

pub fn to_dmatrix(a: &[C64], rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_row_slice(rows, cols, a)
}

pub fn from_dmatrix(m: &DMatrix<C64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Conjugate transpose of a `rows x cols` block.
pub fn adjoint(a: &[C64], rows: usize, cols: usize) -> Vec<C64> {
    let mut out = vec![ZERO; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j].conj();
        }
    }
    out
}

/// Largest entry of `|a - a^dagger|`.
pub fn hermitian_defect(a: &[C64], n: usize) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            m = m.max((a[i * n + j] - a[j * n + i].conj()).norm());
        }
    }
    m
}

/// Hermitian eigen-decomposition: ascending eigenvalues and the matching
/// eigenvectors as columns (`vecs[(i, j)]` is component `i` of vector `j`).
pub fn hermitian_eigen(a: &[C64], n: usize) -> (Vec<f64>, DMatrix<C64>) {
    let m = to_dmatrix(a, n, n);
    let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Spectral norm (largest singular value) of a `rows x cols` block.
pub fn spectral_norm(a: &[C64], rows: usize, cols: usize) -> f64 {
    if rows == 1 && cols == 1 {
        return a[0].norm();
    }
    let m = to_dmatrix(a, rows, cols);
    let gram = m.adjoint() * &m;
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(*v)).max(0.0).sqrt()
}

/// Inverse of an `n x n` block together with its 2-norm condition number.
/// Returns `None` when the matrix is numerically singular.
pub fn inverse_with_condition(a: &[C64], n: usize) -> Option<(Vec<C64>, f64)> {
    let m = to_dmatrix(a, n, n);
    let inv = m.clone().try_inverse()?;
    let cond = spectral_norm(a, n, n) * spectral_norm(&from_dmatrix(&inv), n, n);
    Some((from_dmatrix(&inv), cond))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_and_orthonormal() {
        let a = vec![
            C64::new(2.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, -1.0),
            C64::new(-1.0, 0.0),
        ];
        let (vals, vecs) = hermitian_eigen(&a, 2);
        assert!(vals[0] < vals[1]);
        let gram = vecs.adjoint() * &vecs;
        assert!((gram[(0, 1)]).norm() < 1e-14);
        let m = to_dmatrix(&a, 2, 2);
        let r = &m * vecs.column(0) - vecs.column(0) * C64::new(vals[0], 0.0);
        assert!(r.norm() < 1e-13);
    }

    #[test]
    fn norm_of_projector_is_one() {
        let p = vec![C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(0.5, 0.0)];
        assert!((spectral_norm(&p, 2, 2) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = vec![C64::new(1.0, 0.0), C64::new(2.0, 1.0), C64::new(0.0, 0.0), C64::new(3.0, 0.0)];
        let (inv, cond) = inverse_with_condition(&a, 2).unwrap();
        let mut prod = vec![ZERO; 4];
        gemm_acc(&mut prod, &a, &inv, 2, 2, 2, ONE);
        assert!((prod[0] - ONE).norm() < 1e-14 && prod[1].norm() < 1e-14);
        assert!(cond >= 1.0);
    }
}
