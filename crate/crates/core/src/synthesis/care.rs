//! Continuous-time algebraic Riccati equations via the matrix sign
//! function.
//!
//! For `A'X + XA + XGX + Q = 0` the associated Hamiltonian is
//! `H = [A, G; -Q, -A']`; the stabilizing solution spans the stable
//! invariant subspace, extracted from the projector `(I - sign(H))/2`.
//! The sign iteration `W <- (W/c + c W^{-1})/2` with determinant scaling
//! converges quadratically when `H` has no imaginary-axis eigenvalues;
//! failure to converge is reported as infeasibility by the callers.

use nalgebra::DMatrix;

use crate::mat;
use crate::Scalar;

const SIGN_MAX_ITERS: usize = 120;
const SIGN_TOL: f64 = 1e-13;
/// Residual acceptance threshold relative to `1 + ||X||`.
const CARE_RESIDUAL_TOL: f64 = 1e-7;

/// Stabilizing solution of `A'X + XA + XGX + Q = 0`, or `None` when no
/// such solution exists at working precision (boundary of feasibility).
pub fn solve_care<T: Scalar>(
    a: &DMatrix<T>,
    g: &DMatrix<T>,
    q: &DMatrix<T>,
) -> Option<DMatrix<T>> {
    let n = a.nrows();
    if n == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    // Hamiltonian
    let mut h = DMatrix::<T>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(g);
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    // matrix sign iteration with determinant scaling
    let mut w = h.clone();
    let mut converged = false;
    for _ in 0..SIGN_MAX_ITERS {
        let lu = w.clone().lu();
        let det: T = lu.determinant();
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        let w_inv = lu.try_inverse()?;
        let c = det.abs().powf(T::one() / T::from_usize(2 * n).unwrap());
        if !c.is_finite() || c == T::zero() {
            return None;
        }
        let w_next = (&w / c + &w_inv * c) * T::from_config(0.5);
        let delta = (&w_next - &w).norm();
        let scale = w_next.norm();
        w = w_next;
        if delta <= T::from_config(SIGN_TOL) * (T::one() + scale) {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }

    // stable subspace basis from the projector (I - sign(H))/2
    let mut proj = -&w;
    for i in 0..2 * n {
        proj[(i, i)] += T::one();
    }
    proj *= T::from_config(0.5);
    let qr = proj.col_piv_qr();
    let qmat = qr.q();
    let basis = qmat.columns(0, n).into_owned();
    let u1 = basis.rows(0, n).into_owned();
    let u2 = basis.rows(n, n).into_owned();
    if mat::rcond(&u1) <= T::from_config(1e-12) {
        return None;
    }
    // X = U2 U1^{-1}
    let x_t = mat::solve(&u1.transpose(), &u2.transpose())?;
    let x = mat::symmetrize(&x_t.transpose());

    // residual check
    let res = a.transpose() * &x + &x * a + &x * g * &x + q;
    if res.norm() > T::from_config(CARE_RESIDUAL_TOL) * (T::one() + x.norm()) {
        return None;
    }
    Some(x)
}
