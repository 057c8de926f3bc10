//! Small dense-matrix helpers shared across the crate.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::Scalar;

/// Horizontal concatenation. All blocks must share the row count.
pub(crate) fn hstack<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    assert!(!blocks.is_empty());
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack: row mismatch");
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Vertical concatenation. All blocks must share the column count.
pub(crate) fn vstack<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    assert!(!blocks.is_empty());
    let cols = blocks[0].ncols();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack: column mismatch");
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

/// Block-diagonal stacking.
pub(crate) fn block_diag<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub(crate) fn to_complex<T: Scalar>(m: &DMatrix<T>) -> DMatrix<Complex<T>> {
    m.map(|x| Complex::new(x, T::zero()))
}

/// Modulus of a complex scalar without requiring `num_traits::Float`.
pub(crate) fn cmod<T: Scalar>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// Largest singular value; zero for empty matrices.
pub(crate) fn max_singular_value<T: Scalar>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone().singular_values().max()
}

pub(crate) fn max_singular_value_c<T: Scalar>(m: &DMatrix<Complex<T>>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone().singular_values().max()
}

/// Frobenius-relative symmetrization `(M + M^T)/2`.
pub(crate) fn symmetrize<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::from_config(0.5)
}

/// Eigenvalues of a (not necessarily symmetric) real matrix.
pub(crate) fn eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Vec<Complex<T>> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Spectral radius of a real square matrix; zero for the empty matrix.
pub(crate) fn spectral_radius<T: Scalar>(m: &DMatrix<T>) -> T {
    eigenvalues(m)
        .iter()
        .map(|&z| cmod(z))
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// Eigenvalues of a Hermitian complex matrix, via the real symmetric
/// embedding `[[Re, -Im], [Im, Re]]` (each eigenvalue appears twice).
pub(crate) fn hermitian_eigenvalues<T: Scalar>(m: &DMatrix<Complex<T>>) -> Vec<T> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut emb = DMatrix::<T>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            emb[(i, j)] = z.re;
            emb[(i + n, j + n)] = z.re;
            emb[(i + n, j)] = z.im;
            emb[(i, j + n)] = -z.im;
        }
    }
    let eigs = emb.symmetric_eigenvalues();
    let mut v: Vec<T> = eigs.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // keep one copy of each doubled eigenvalue
    v.into_iter().step_by(2).collect()
}

/// Symmetric PSD square root via eigendecomposition. Negative eigenvalues
/// below `-tol` are rejected.
pub(crate) fn sqrtm_psd<T: Scalar>(m: &DMatrix<T>, tol: T) -> Option<DMatrix<T>> {
    let se = symmetrize(m).symmetric_eigen();
    let mut d = se.eigenvalues.clone();
    for x in d.iter_mut() {
        if *x < -tol {
            return None;
        }
        *x = if *x > T::zero() { x.sqrt() } else { T::zero() };
    }
    let v = se.eigenvectors;
    Some(&v * DMatrix::from_diagonal(&d) * v.transpose())
}

/// Solves `M X = RHS` for real `M`, `None` if singular.
pub(crate) fn solve<T: Scalar>(m: &DMatrix<T>, rhs: &DMatrix<T>) -> Option<DMatrix<T>> {
    if m.is_empty() {
        return Some(DMatrix::zeros(0, rhs.ncols()));
    }
    m.clone().lu().solve(rhs)
}

/// Inverse of a real square matrix, `None` if singular.
pub(crate) fn inverse<T: Scalar>(m: &DMatrix<T>) -> Option<DMatrix<T>> {
    if m.is_empty() {
        return Some(m.clone());
    }
    m.clone().try_inverse()
}

/// Orthonormal basis of the orthogonal complement of the column span of
/// `m` (p x k with orthonormal-ish full-rank columns): returns p x (p-k).
pub(crate) fn orth_complement<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let p = m.nrows();
    let k = m.ncols();
    if p == k {
        return DMatrix::zeros(p, 0);
    }
    if k == 0 {
        return DMatrix::identity(p, p);
    }
    let q = m.clone().qr().q();
    let pperp = DMatrix::<T>::identity(p, p) - &q * q.transpose();
    let svd = pperp.svd(true, false);
    let u = svd.u.unwrap();
    let mut cols = Vec::new();
    for i in 0..p {
        if svd.singular_values[i] > T::from_config(0.5) {
            cols.push(u.column(i).into_owned());
        }
    }
    assert_eq!(cols.len(), p - k, "complement dimension mismatch");
    let mut out = DMatrix::zeros(p, p - k);
    for (j, c) in cols.iter().enumerate() {
        out.column_mut(j).copy_from(c);
    }
    out
}

/// Reciprocal condition estimate from singular values (0 for singular).
pub(crate) fn rcond<T: Scalar>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::one();
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if max <= T::zero() {
        T::zero()
    } else {
        min / max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stacking_and_block_diag() {
        let a = DMatrix::<f64>::from_row_slice(1, 2, &[1.0, 2.0]);
        let b = DMatrix::<f64>::from_row_slice(1, 1, &[3.0]);
        let h = hstack(&[&a, &b]);
        assert_eq!(h, DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]));
        let d = block_diag(&[&a, &b]);
        assert_eq!(d.nrows(), 2);
        assert_eq!(d[(1, 2)], 3.0);
        assert_eq!(d[(1, 0)], 0.0);
    }

    #[test]
    fn hermitian_eigs_match_real_case() {
        let m = to_complex(&DMatrix::<f64>::from_row_slice(
            2,
            2,
            &[2.0, 1.0, 1.0, 2.0],
        ));
        let eigs = hermitian_eigenvalues(&m);
        assert_relative_eq!(eigs[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(eigs[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn sqrtm_recovers_matrix() {
        let m = DMatrix::<f64>::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let s = sqrtm_psd(&m, 1e-12).unwrap();
        assert_relative_eq!((&s * &s - &m).norm(), 0.0, epsilon = 1e-12);
    }
}
