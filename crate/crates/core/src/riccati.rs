//! Stabilizing solutions of discrete-time algebraic Riccati equations.
//!
//! The DARE solved here is
//!
//! ```text
//!   X = A'XA + Q - (A'XB + S)(R + B'XB)^{-1}(A'XB + S)'
//! ```
//!
//! via the structure-preserving doubling algorithm (SDA): after removing
//! the cross term with `A_hat = A - B R^{-1} S'`, `Q_hat = Q - S R^{-1} S'`,
//! the fixed-point doubling iteration
//!
//! ```text
//!   A_{k+1} = A_k (I + G_k H_k)^{-1} A_k
//!   G_{k+1} = G_k + A_k (I + G_k H_k)^{-1} G_k A_k'
//!   H_{k+1} = H_k + A_k' H_k (I + G_k H_k)^{-1} A_k
//! ```
//!
//! with `G_0 = B R^{-1} B'`, `H_0 = Q_hat` converges quadratically to the
//! stabilizing solution `H_k -> X` whenever one exists. Only linear solves
//! are required, and the iteration also handles the indefinite-`R`
//! equations arising in spectral factorization.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::mat;
use crate::ss::SCHUR_MARGIN;
use crate::{Error, Result, Scalar};

/// Convergence threshold on successive iterates (relative).
const SDA_TOL: f64 = 1e-13;
/// Cap on doubling steps.
const SDA_MAX_ITERS: usize = 100;
/// Accepted residual for a stabilizing solution, relative to `1 + ||X||`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Rank tolerance of the PBH stabilizability test.
const PBH_TOL: f64 = 1e-9;
/// Grid size for the frequency-domain column-rank condition.
const RANK_GRID: usize = 720;

/// Quadratic cost data `Q = C_e' C_e`, `S = C_e' D_eu`, `R = D_eu' D_eu`.
#[derive(Debug, Clone)]
pub struct CostData<T: Scalar> {
    pub q: DMatrix<T>,
    pub s: DMatrix<T>,
    pub r: DMatrix<T>,
}

impl<T: Scalar> CostData<T> {
    /// Builds the cost from the error channel `e = C_e x + D_eu u`.
    pub fn from_error_channel(c_e: &DMatrix<T>, d_eu: &DMatrix<T>) -> Self {
        Self {
            q: c_e.transpose() * c_e,
            s: c_e.transpose() * d_eu,
            r: d_eu.transpose() * d_eu,
        }
    }
}

/// Stabilizing DARE solution with the associated state-feedback gain.
#[derive(Debug, Clone)]
pub struct DareSolution<T: Scalar> {
    /// Stabilizing solution, symmetric PSD.
    pub x: DMatrix<T>,
    /// Gain `K_x = (R + B'XB)^{-1}(A'XB + S)'`.
    pub k_x: DMatrix<T>,
    /// Closed loop `A - B K_x`, Schur and nonsingular.
    pub a_cl: DMatrix<T>,
    /// Frobenius norm of the DARE residual.
    pub residual: T,
}

/// Report of the standing assumptions for the non-causal baseline.
#[derive(Debug, Clone)]
pub struct AssumptionReport<T: Scalar> {
    /// (i) `R = D_eu' D_eu` positive definite.
    pub r_positive: bool,
    pub r_min_eig: T,
    /// (ii) `(A, B_u)` stabilizable (PBH over unstable eigenvalues).
    pub stabilizable: bool,
    pub pbh_margin: T,
    /// (iii) `A - B_u R^{-1} S'` nonsingular.
    pub shifted_a_nonsingular: bool,
    pub shifted_a_rcond: T,
    /// (iv) `[A - e^{j theta} I, B_u; C_e, D_eu]` has full column rank on
    /// a frequency grid; `rank_margin` is the smallest relative singular
    /// value observed, so the condition is sampled rather than proven on
    /// the continuum.
    pub full_column_rank: bool,
    pub rank_margin: T,
}

impl<T: Scalar> AssumptionReport<T> {
    pub fn all_pass(&self) -> bool {
        self.r_positive && self.stabilizable && self.shifted_a_nonsingular && self.full_column_rank
    }
}

/// PBH stabilizability: every eigenvalue of `A` with `|lambda| >= 1`
/// keeps `[A - lambda I, B]` full row rank. Returns the smallest relative
/// margin over the unstable eigenvalues (1 if all eigenvalues are stable).
pub fn stabilizable<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> (bool, T) {
    let n = a.nrows();
    if n == 0 {
        return (true, T::one());
    }
    let mut margin = T::one();
    let mut ok = true;
    for lam in mat::eigenvalues(a) {
        if mat::cmod(lam) < T::one() - T::from_config(SCHUR_MARGIN) {
            continue;
        }
        let mut m = DMatrix::<Complex<T>>::zeros(n, n + b.ncols());
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex::new(a[(i, j)], T::zero());
            }
            m[(i, i)] -= lam;
            for j in 0..b.ncols() {
                m[(i, n + j)] = Complex::new(b[(i, j)], T::zero());
            }
        }
        let sv = m.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let rel = if smax > T::zero() { smin / smax } else { T::zero() };
        if rel < margin {
            margin = rel;
        }
        if rel <= T::from_config(PBH_TOL) {
            ok = false;
        }
    }
    (ok, margin)
}

/// Checks Theorem-style standing assumptions (i)-(iv) for the data
/// `(A, B_u, C_e, D_eu)`.
pub fn check_assumptions<T: Scalar>(
    a: &DMatrix<T>,
    b_u: &DMatrix<T>,
    c_e: &DMatrix<T>,
    d_eu: &DMatrix<T>,
) -> AssumptionReport<T> {
    let cost = CostData::from_error_channel(c_e, d_eu);
    // (i)
    let r_eigs = mat::symmetrize(&cost.r).symmetric_eigenvalues();
    let r_min_eig = r_eigs.iter().copied().fold(T::max_value().unwrap(), |m, x| {
        if x < m {
            x
        } else {
            m
        }
    });
    let r_positive = r_min_eig > T::from_config(1e-12);
    // (ii)
    let (stab, pbh_margin) = stabilizable(a, b_u);
    // (iii)
    let shifted = if r_positive {
        let r_inv_st = mat::solve(&cost.r, &cost.s.transpose()).unwrap();
        a - b_u * r_inv_st
    } else {
        a.clone()
    };
    let shifted_a_rcond = mat::rcond(&shifted);
    let shifted_a_nonsingular = r_positive && shifted_a_rcond > T::from_config(1e-12);
    // (iv)
    let n = a.nrows();
    let cols = n + b_u.ncols();
    let rows = n + c_e.nrows();
    let mut rank_margin = T::max_value().unwrap();
    for k in 0..RANK_GRID {
        let th = T::two_pi() * T::from_usize(k).unwrap() / T::from_usize(RANK_GRID).unwrap();
        let z = Complex::new(th.cos(), th.sin());
        let mut m = DMatrix::<Complex<T>>::zeros(rows, cols);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex::new(a[(i, j)], T::zero());
            }
            m[(i, i)] -= z;
            for j in 0..b_u.ncols() {
                m[(i, n + j)] = Complex::new(b_u[(i, j)], T::zero());
            }
        }
        for i in 0..c_e.nrows() {
            for j in 0..n {
                m[(n + i, j)] = Complex::new(c_e[(i, j)], T::zero());
            }
            for j in 0..d_eu.ncols() {
                m[(n + i, n + j)] = Complex::new(d_eu[(i, j)], T::zero());
            }
        }
        let sv = m.singular_values();
        // full column rank: the smallest of the leading `cols` singular values
        let smax = sv.max();
        let smin = sv.min();
        let rel = if smax > T::zero() { smin / smax } else { T::zero() };
        if rel < rank_margin {
            rank_margin = rel;
        }
    }
    let full_column_rank = rank_margin > T::from_config(PBH_TOL);
    AssumptionReport {
        r_positive,
        r_min_eig,
        stabilizable: stab,
        pbh_margin,
        shifted_a_nonsingular,
        shifted_a_rcond,
        full_column_rank,
        rank_margin,
    }
}

/// Raw output of the doubling solver, before the sign-definite checks of
/// [`solve_dare`]. Also used for the indefinite-`R` factorization DARE.
#[derive(Debug, Clone)]
pub struct GeneralDareSolution<T: Scalar> {
    pub x: DMatrix<T>,
    pub gain: DMatrix<T>,
    pub a_cl: DMatrix<T>,
    pub residual: T,
    pub iterations: usize,
}

/// Solves the DARE with general (possibly indefinite) `R` by SDA.
/// Returns the solution with `A - B K` Schur if the iteration converges;
/// no sign conditions on `X` are imposed here.
pub fn solve_dare_general<T: Scalar>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    q: &DMatrix<T>,
    s: &DMatrix<T>,
    r: &DMatrix<T>,
) -> Result<GeneralDareSolution<T>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch("DARE: A/B/Q sizes".into()));
    }
    let m = b.ncols();
    if r.nrows() != m || r.ncols() != m || s.nrows() != n || s.ncols() != m {
        return Err(Error::DimensionMismatch("DARE: R/S sizes".into()));
    }
    if mat::rcond(r) <= T::from_config(1e-14) {
        return Err(Error::NoStabilizingSolution("R is numerically singular".into()));
    }
    // remove the cross term
    let r_inv_st = mat::solve(r, &s.transpose()).unwrap();
    let a_hat = a - b * &r_inv_st;
    let q_hat = mat::symmetrize(&(q - s * &r_inv_st));
    let r_inv_bt = mat::solve(r, &b.transpose()).unwrap();
    let g0 = mat::symmetrize(&(b * &r_inv_bt));

    let mut ak = a_hat.clone();
    let mut gk = g0;
    let mut hk = q_hat;
    let tol = T::from_config(SDA_TOL);
    let mut iterations = SDA_MAX_ITERS;
    let eye = DMatrix::<T>::identity(n, n);
    for it in 0..SDA_MAX_ITERS {
        let w = &eye + &gk * &hk;
        if mat::rcond(&w) <= T::from_config(1e-14) {
            return Err(Error::NoStabilizingSolution(format!(
                "doubling iterate {it} is singular"
            )));
        }
        let w_inv = mat::inverse(&w).unwrap();
        let winv_a = &w_inv * &ak;
        let a_next = &ak * &winv_a;
        let g_next = mat::symmetrize(&(&gk + &ak * &w_inv * &gk * ak.transpose()));
        let h_incr = ak.transpose() * &hk * &winv_a;
        let h_next = mat::symmetrize(&(&hk + &h_incr));
        let delta = (&h_next - &hk).norm();
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if delta <= tol * (T::one() + hk.norm()) {
            iterations = it + 1;
            break;
        }
        if !delta.is_finite() {
            return Err(Error::NoStabilizingSolution(
                "doubling iteration diverged".into(),
            ));
        }
    }
    let x = mat::symmetrize(&hk);

    // gain and closed loop for the original (cross-term) data
    let r_cl = r + b.transpose() * &x * b;
    if mat::rcond(&r_cl) <= T::from_config(1e-14) {
        return Err(Error::NoStabilizingSolution(
            "R + B'XB is numerically singular".into(),
        ));
    }
    let rhs = b.transpose() * &x * a + s.transpose();
    let gain = mat::solve(&r_cl, &rhs).unwrap();
    let a_cl = a - b * &gain;

    // residual of the original DARE
    let axb_s = a.transpose() * &x * b + s;
    let inner = mat::solve(&r_cl, &axb_s.transpose()).unwrap();
    let res_m = &x - a.transpose() * &x * a - q + &axb_s * &inner;
    let residual = res_m.norm();

    Ok(GeneralDareSolution {
        x,
        gain,
        a_cl,
        residual,
        iterations,
    })
}

/// Stabilizing solution of the standard DARE for the quadratic cost.
///
/// On success `X` is symmetric PSD with residual below
/// `RESIDUAL_TOL * (1 + ||X||)`, and `A - B_u K_x` is Schur stable and
/// nonsingular (required by the non-causal baseline recursion and the
/// spectral factor).
pub fn solve_dare<T: Scalar>(
    a: &DMatrix<T>,
    b_u: &DMatrix<T>,
    cost: &CostData<T>,
) -> Result<DareSolution<T>> {
    let sol = solve_dare_general(a, b_u, &cost.q, &cost.s, &cost.r)?;
    let xnorm = sol.x.norm();
    if sol.residual > T::from_config(RESIDUAL_TOL) * (T::one() + xnorm) {
        return Err(Error::NoStabilizingSolution(format!(
            "residual {:?} exceeds tolerance",
            sol.residual.to_f64()
        )));
    }
    let min_eig = sol
        .x
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(T::zero(), |m, x| if x < m { x } else { m });
    if min_eig < -T::from_config(RESIDUAL_TOL) * (T::one() + xnorm) {
        return Err(Error::NoStabilizingSolution(
            "solution is not positive semidefinite".into(),
        ));
    }
    if !crate::ss::is_schur(&sol.a_cl) {
        return Err(Error::NoStabilizingSolution(
            "closed loop is not Schur stable".into(),
        ));
    }
    let rc = mat::rcond(&sol.a_cl);
    if rc <= T::from_config(1e-12) {
        return Err(Error::SingularClosedLoop {
            cond: rc.to_f64().map(|v| 1.0 / v).unwrap_or(f64::INFINITY),
        });
    }
    Ok(DareSolution {
        x: sol.x,
        k_x: sol.gain,
        a_cl: sol.a_cl,
        residual: sol.residual,
    })
}

/// Solves the discrete Lyapunov equation `Y = A Y A' + Q` for Schur `A`
/// by squared-Smith doubling.
pub fn dlyap<T: Scalar>(a: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    if !crate::ss::is_schur(a) {
        return Err(Error::UnstableSystem);
    }
    let mut y = mat::symmetrize(q);
    let mut w = a.clone();
    for _ in 0..SDA_MAX_ITERS {
        let incr = &w * &y * w.transpose();
        y += &incr;
        w = &w * &w;
        if incr.norm() <= T::from_config(1e-15) * (T::one() + y.norm()) {
            return Ok(mat::symmetrize(&y));
        }
    }
    Err(Error::NoStabilizingSolution(
        "Lyapunov doubling did not converge".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn demo_cost() -> CostData<f64> {
        CostData::from_error_channel(&dmatrix![3.0_f64.sqrt(); 0.0], &dmatrix![0.0; 1.0])
    }

    #[test]
    fn assumptions_pass_on_demo_data() {
        let rep = check_assumptions(
            &dmatrix![0.5],
            &dmatrix![1.0],
            &dmatrix![3.0_f64.sqrt(); 0.0],
            &dmatrix![0.0; 1.0],
        );
        assert!(rep.all_pass(), "{rep:?}");
    }

    #[test]
    fn uncontrollable_unstable_mode_fails_pbh() {
        let rep = check_assumptions(&dmatrix![1.0], &dmatrix![0.0], &dmatrix![1.0], &dmatrix![1.0]);
        assert!(!rep.stabilizable);
    }

    #[test]
    fn singular_shifted_a_detected() {
        // A = 0, S = 0: A - B R^{-1} S' = 0 is singular
        let rep = check_assumptions(&dmatrix![0.0], &dmatrix![1.0], &dmatrix![1.0; 0.0], &dmatrix![0.0; 1.0]);
        assert!(!rep.shifted_a_nonsingular);
    }

    #[test]
    fn memoryless_dare() {
        // A = 0: X = Q, K_x = 0 solves the raw equation, but the closed
        // loop A - B K_x = 0 is singular, which the strict solver rejects
        // (the spectral factor needs an invertible closed loop)
        let cost = CostData {
            q: dmatrix![3.0],
            s: dmatrix![0.0],
            r: dmatrix![1.0],
        };
        let sol = solve_dare_general(
            &dmatrix![0.0],
            &dmatrix![1.0],
            &cost.q,
            &cost.s,
            &cost.r,
        )
        .unwrap();
        assert_relative_eq!(sol.x[(0, 0)], 3.0, epsilon = 1e-12);
        assert_relative_eq!(sol.gain[(0, 0)], 0.0, epsilon = 1e-12);
        assert!(matches!(
            solve_dare(&dmatrix![0.0], &dmatrix![1.0], &cost),
            Err(Error::SingularClosedLoop { .. })
        ));
    }

    #[test]
    fn scalar_quadratic_roots() {
        // closed forms: X^2 - 2.25X - 3 = 0 at A = 0.5 and
        // X^2 - 3.96X - 3 = 0 at A = 1.4
        let sol = solve_dare(&dmatrix![0.5], &dmatrix![1.0], &demo_cost()).unwrap();
        let root = (2.25 + (2.25f64 * 2.25 + 12.0).sqrt()) / 2.0;
        assert_relative_eq!(sol.x[(0, 0)], root, epsilon = 1e-12);
        assert_relative_eq!(sol.x[(0, 0)], 3.19036, epsilon = 1e-4);
        assert_relative_eq!(sol.k_x[(0, 0)], 0.38068, epsilon = 1e-4);
        assert_relative_eq!(sol.a_cl[(0, 0)], 0.11932, epsilon = 1e-4);
        assert!(sol.residual <= RESIDUAL_TOL * (1.0 + sol.x.norm()));

        let sol = solve_dare(&dmatrix![1.4], &dmatrix![1.0], &demo_cost()).unwrap();
        let root = (3.96 + (3.96f64 * 3.96 + 12.0).sqrt()) / 2.0;
        assert_relative_eq!(sol.x[(0, 0)], root, epsilon = 1e-12);
        assert_relative_eq!(sol.x[(0, 0)], 4.61065, epsilon = 1e-4);
    }

    #[test]
    fn value_iteration_cross_check() {
        // 2-state instance checked against 500 steps of the finite-horizon
        // Riccati recursion
        let a = dmatrix![0.9, 0.2; -0.1, 0.7];
        let b = dmatrix![1.0; 0.5];
        let c_e = dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0];
        let d_eu = dmatrix![0.0; 0.0; 1.0];
        let cost = CostData::from_error_channel(&c_e, &d_eu);
        let sol = solve_dare(&a, &b, &cost).unwrap();

        let mut x = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..500 {
            let r_cl = &cost.r + b.transpose() * &x * &b;
            let axb_s = a.transpose() * &x * &b + &cost.s;
            let inner = r_cl.clone().lu().solve(&axb_s.transpose()).unwrap();
            x = a.transpose() * &x * &a + &cost.q - &axb_s * inner;
            x = (&x + &x.transpose()) * 0.5;
        }
        assert_relative_eq!((&sol.x - &x).norm() / x.norm(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn dlyap_solves_equation() {
        let a = dmatrix![0.8, 0.3; 0.0, -0.5];
        let q = dmatrix![1.0, 0.2; 0.2, 2.0];
        let y = dlyap(&a, &q).unwrap();
        let res = (&y - &a * &y * a.transpose() - &q).norm();
        assert!(res < 1e-12, "residual {res}");
    }

    #[test]
    fn indefinite_r_factorization_form() {
        // spectral-factorization-style DARE with negative definite R still
        // produces a Schur closed loop
        let a = dmatrix![0.3];
        let b = dmatrix![1.0];
        let q = dmatrix![0.0];
        let c = dmatrix![0.4];
        let r0 = 2.0;
        // Z = A'ZA + (C - B'ZA)'(R0 - B'ZB)^{-1}(C - B'ZA) maps to the
        // general DARE with S = -C', R = -R0, Q = 0
        let sol = solve_dare_general(&a, &b, &q, &(-c.transpose()), &dmatrix![-r0]).unwrap();
        assert!(crate::ss::is_schur(&sol.a_cl));
        assert!(sol.residual < 1e-12);
    }
}
