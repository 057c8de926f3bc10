//! H-infinity output-feedback synthesis for discrete-time plants.
//!
//! Route: bilinear transform to continuous time (norm-preserving), then
//! the two-Riccati central controller, then the inverse transform. The
//! transformed plant generally has feedthrough on every channel, so the
//! standard-form reductions are applied first:
//!
//! 1. strip the `(y,u)` feedthrough (re-wrapped around the controller),
//! 2. orthonormalize the `(e,u)` and `(y,w)` feedthroughs to
//!    `[0; I]` / `[0 I]` form,
//! 3. absorb the fixable part of the `(e,w)` feedthrough with the
//!    central Parrott completion as a constant output feedback (the
//!    feasibility condition on the remainder is exact, not the
//!    conservative `sigma_max(D11) < gamma` shortcut),
//! 4. cancel the remaining `(e,w)` feedthrough with the norm-preserving
//!    Moebius scattering transformation,
//! 5. solve the two Riccati equations by the matrix sign function and
//!    assemble the central controller,
//! 6. undo every transformation in reverse and verify the discrete
//!    closed loop independently.
//!
//! Synthesis failures at a given level are reported as `None`
//! (infeasible); structural defects raise errors.

use nalgebra::DMatrix;

use crate::lft::lft_lower;
use crate::mat;
use crate::norms::hinf_norm_with_grid;
use crate::ss::StateSpace;
use crate::synthesis::bilinear;
use crate::synthesis::care::solve_care;
use crate::{Error, Result, Scalar};

/// Channel partition of a synthesis plant `(w, u) -> (e, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Partition {
    pub n_w: usize,
    pub n_u: usize,
    pub n_e: usize,
    pub n_y: usize,
}

/// Continuous-time working plant.
#[derive(Debug, Clone)]
struct Plant<T: Scalar> {
    a: DMatrix<T>,
    b1: DMatrix<T>,
    b2: DMatrix<T>,
    c1: DMatrix<T>,
    c2: DMatrix<T>,
    d11: DMatrix<T>,
    d12: DMatrix<T>,
    d21: DMatrix<T>,
    d22: DMatrix<T>,
}

impl<T: Scalar> Plant<T> {
    fn split(sys: &StateSpace<T>, p: &Partition) -> Self {
        let (n_w, n_u, n_e, n_y) = (p.n_w, p.n_u, p.n_e, p.n_y);
        Self {
            a: sys.a().clone(),
            b1: sys.b().columns(0, n_w).into_owned(),
            b2: sys.b().columns(n_w, n_u).into_owned(),
            c1: sys.c().rows(0, n_e).into_owned(),
            c2: sys.c().rows(n_e, n_y).into_owned(),
            d11: sys.d().view((0, 0), (n_e, n_w)).into_owned(),
            d12: sys.d().view((0, n_w), (n_e, n_u)).into_owned(),
            d21: sys.d().view((n_e, 0), (n_y, n_w)).into_owned(),
            d22: sys.d().view((n_e, n_w), (n_y, n_u)).into_owned(),
        }
    }
}

/// Channel transforms recorded while normalizing, applied to the
/// controller on the way out: `K_orig = ru_inv * K_new * ty`.
struct ChannelTransforms<T: Scalar> {
    ru_inv: DMatrix<T>,
    ty: DMatrix<T>,
}

fn apply_channel_transforms<T: Scalar>(
    k: StateSpace<T>,
    t: &ChannelTransforms<T>,
) -> StateSpace<T> {
    StateSpace::new(
        k.a().clone(),
        k.b() * &t.ty,
        &t.ru_inv * k.c(),
        &t.ru_inv * k.d() * &t.ty,
    )
    .expect("transform keeps dimensions")
}

/// Wraps a synthesized controller around a stripped `(y,u)` feedthrough:
/// the controller was designed for `y - D22 u`.
fn wrap_d22<T: Scalar>(k: StateSpace<T>, d22: &DMatrix<T>) -> Option<StateSpace<T>> {
    if d22.iter().all(|&x| x == T::zero()) {
        return Some(k);
    }
    let n_u = k.n_outputs();
    let loop_m = DMatrix::identity(n_u, n_u) + k.d() * d22;
    if mat::rcond(&loop_m) <= T::from_config(1e-12) {
        return None;
    }
    let phi = mat::inverse(&loop_m)?;
    let a = k.a() - k.b() * d22 * &phi * k.c();
    let b = k.b() * (DMatrix::identity(d22.nrows(), d22.nrows()) - d22 * &phi * k.d());
    let c = &phi * k.c();
    let d = &phi * k.d();
    StateSpace::new(a, b, c, d).ok()
}

fn add_feedthrough<T: Scalar>(k: StateSpace<T>, shift: &DMatrix<T>) -> StateSpace<T> {
    StateSpace::new(
        k.a().clone(),
        k.b().clone(),
        k.c().clone(),
        k.d() + shift,
    )
    .expect("same dimensions")
}

/// Orthonormalizes `D12` to `[0; I]` and `D21` to `[0 I]` by unitary
/// error/disturbance transforms and invertible control/measurement
/// scalings.
fn normalize<T: Scalar>(p: &mut Plant<T>) -> Result<ChannelTransforms<T>> {
    let tol = T::from_config(1e-9);
    // D12 = U1 S V', tall full column rank
    let (n_e, n_u) = (p.d12.nrows(), p.d12.ncols());
    if n_e < n_u {
        return Err(Error::AssumptionViolated(
            "(e,u) feedthrough has more controls than errors".into(),
        ));
    }
    let svd12 = p.d12.clone().svd(true, true);
    let smax = svd12.singular_values.max();
    let smin = svd12.singular_values.min();
    if n_u > 0 && smin <= tol * (T::one() + smax) {
        return Err(Error::AssumptionViolated(
            "(e,u) feedthrough is column rank deficient".into(),
        ));
    }
    let u1 = svd12.u.as_ref().unwrap().clone();
    let u2 = mat::orth_complement(&u1);
    let mut te = DMatrix::<T>::zeros(n_e, n_e);
    te.view_mut((0, 0), (n_e - n_u, n_e)).copy_from(&u2.transpose());
    te.view_mut((n_e - n_u, 0), (n_u, n_e)).copy_from(&u1.transpose());
    let v = svd12.v_t.as_ref().unwrap().transpose();
    let mut sinv = DMatrix::<T>::zeros(n_u, n_u);
    for i in 0..n_u {
        sinv[(i, i)] = T::one() / svd12.singular_values[i];
    }
    let ru_inv = &v * &sinv;

    p.c1 = &te * &p.c1;
    p.d11 = &te * &p.d11;
    p.b2 = &p.b2 * &ru_inv;
    let mut d12 = DMatrix::<T>::zeros(n_e, n_u);
    for i in 0..n_u {
        d12[(n_e - n_u + i, i)] = T::one();
    }
    p.d12 = d12;

    // D21 = U S V1', wide full row rank
    let (n_y, n_w) = (p.d21.nrows(), p.d21.ncols());
    if n_w < n_y {
        return Err(Error::AssumptionViolated(
            "(y,w) feedthrough has more measurements than disturbances".into(),
        ));
    }
    let svd21 = p.d21.clone().svd(true, true);
    let smax = svd21.singular_values.max();
    let smin = svd21.singular_values.min();
    if n_y > 0 && smin <= tol * (T::one() + smax) {
        return Err(Error::AssumptionViolated(
            "(y,w) feedthrough is row rank deficient".into(),
        ));
    }
    let v1 = svd21.v_t.as_ref().unwrap().transpose();
    let v2 = mat::orth_complement(&v1);
    let mut tw = DMatrix::<T>::zeros(n_w, n_w);
    tw.view_mut((0, 0), (n_w, n_w - n_y)).copy_from(&v2);
    tw.view_mut((0, n_w - n_y), (n_w, n_y)).copy_from(&v1);
    let uy = svd21.u.as_ref().unwrap().clone();
    let mut syinv = DMatrix::<T>::zeros(n_y, n_y);
    for i in 0..n_y {
        syinv[(i, i)] = T::one() / svd21.singular_values[i];
    }
    let ty = &syinv * uy.transpose();

    p.b1 = &p.b1 * &tw;
    p.d11 = &p.d11 * &tw;
    p.c2 = &ty * &p.c2;
    let mut d21 = DMatrix::<T>::zeros(n_y, n_w);
    for i in 0..n_y {
        d21[(i, n_w - n_y + i)] = T::one();
    }
    p.d21 = d21;

    Ok(ChannelTransforms { ru_inv, ty })
}

/// Central Parrott completion: constant output feedback minimizing the
/// largest singular value of the shifted `(e,w)` feedthrough. Returns
/// `None` when even the optimal completion cannot bring it below one
/// (the level is infeasible).
fn parrott_shift<T: Scalar>(p: &mut Plant<T>) -> Option<DMatrix<T>> {
    let (n_e, n_u) = (p.d11.nrows(), p.d12.ncols());
    let (n_y, n_w) = (p.d21.nrows(), p.d11.ncols());
    let (re, rw) = (n_e - n_u, n_w - n_y);
    let d1111 = p.d11.view((0, 0), (re, rw)).into_owned();
    let d1112 = p.d11.view((0, rw), (re, n_y)).into_owned();
    let d1121 = p.d11.view((re, 0), (n_u, rw)).into_owned();
    let d1122 = p.d11.view((re, rw), (n_u, n_y)).into_owned();

    let top = mat::hstack(&[&d1111, &d1112]);
    let left = mat::vstack(&[&d1111, &d1121]);
    let gamma0 = {
        let a = mat::max_singular_value(&top);
        let b = mat::max_singular_value(&left);
        if a > b {
            a
        } else {
            b
        }
    };
    if gamma0 >= T::one() - T::from_config(1e-9) {
        return None;
    }
    // central completion at a level slightly above the optimum
    let ghat = {
        let bumped = gamma0 * (T::one() + T::from_config(1e-6)) + T::from_config(1e-8);
        if bumped < T::from_config(0.5) + gamma0 * T::from_config(0.5) {
            bumped
        } else {
            (T::one() + gamma0) * T::from_config(0.5)
        }
    };
    let mut core = DMatrix::<T>::identity(rw, rw) * ghat * ghat;
    core -= d1111.transpose() * &d1111;
    let core_inv = mat::inverse(&core)?;
    let shift = -&d1122 - &d1121 * &core_inv * d1111.transpose() * &d1112;

    // apply u = shift * y + u_new
    p.a = &p.a + &p.b2 * &shift * &p.c2;
    p.b1 = &p.b1 + &p.b2 * &shift * &p.d21;
    p.c1 = &p.c1 + &p.d12 * &shift * &p.c2;
    p.d11 = &p.d11 + &p.d12 * &shift * &p.d21;
    if mat::max_singular_value(&p.d11) >= T::one() - T::from_config(1e-12) {
        return None;
    }
    Some(shift)
}

/// Moebius scattering transformation sending the `(e,w)` feedthrough to
/// zero while preserving the closed-loop norm condition. Returns the new
/// `(y,u)` feedthrough it creates.
fn mobius_zero_d11<T: Scalar>(p: &mut Plant<T>) -> Option<DMatrix<T>> {
    let n = p.d11.clone();
    if n.iter().all(|&x| x == T::zero()) {
        return Some(DMatrix::zeros(p.d21.nrows(), p.d12.ncols()));
    }
    let (n_e, n_w) = (n.nrows(), n.ncols());
    let tol = T::from_config(1e-12);
    let i_nnt = DMatrix::<T>::identity(n_e, n_e) - &n * n.transpose();
    let i_ntn = DMatrix::<T>::identity(n_w, n_w) - n.transpose() * &n;
    let i_nnt_inv = mat::inverse(&i_nnt)?;
    let i_nnt_sqrt = mat::sqrtm_psd(&i_nnt, tol)?;
    let i_nnt_isqrt = mat::inverse(&i_nnt_sqrt)?;
    let i_ntn_sqrt = mat::sqrtm_psd(&i_ntn, tol)?;
    let i_ntn_isqrt = mat::inverse(&i_ntn_sqrt)?;

    let nt_inv = n.transpose() * &i_nnt_inv;
    let a = &p.a + &p.b1 * &nt_inv * &p.c1;
    let b1 = &p.b1 * &i_ntn_isqrt;
    let b2 = &p.b2 + &p.b1 * &nt_inv * &p.d12;
    let c1 = &i_nnt_isqrt * &p.c1;
    let c2 = &p.c2 + &p.d21 * &nt_inv * &p.c1;
    let d12 = &i_nnt_isqrt * &p.d12;
    let d21 = &p.d21 * &i_ntn_isqrt;
    let d22 = &p.d21 * &nt_inv * &p.d12;

    p.a = a;
    p.b1 = b1;
    p.b2 = b2;
    p.c1 = c1;
    p.c2 = c2;
    p.d11 = DMatrix::zeros(n_e, n_w);
    p.d12 = d12;
    p.d21 = d21;
    Some(d22)
}

/// Central controller for the normalized continuous plant at level one:
/// `D11 = 0`, `D12 = [0; I]`, `D21 = [0 I]`, `D22 = 0`.
fn central_controller<T: Scalar>(p: &Plant<T>) -> Option<StateSpace<T>> {
    let n = p.a.nrows();
    let d12t_c1 = p.d12.transpose() * &p.c1;
    let a_x = &p.a - &p.b2 * &d12t_c1;
    let g_x = &p.b1 * p.b1.transpose() - &p.b2 * p.b2.transpose();
    let proj_e = DMatrix::<T>::identity(p.c1.nrows(), p.c1.nrows()) - &p.d12 * p.d12.transpose();
    let q_x = mat::symmetrize(&(p.c1.transpose() * &proj_e * &p.c1));
    let x = match solve_care(&a_x, &g_x, &q_x) {
        Some(x) => x,
        None => {
            if std::env::var("RROC_HINF_DEBUG").is_ok() { eprintln!("DEBUG: X-CARE failed"); }
            return None;
        }
    };
    let eig_tol = T::from_config(1e-8) * (T::one() + x.norm());
    if x.symmetric_eigenvalues().iter().any(|&e| e < -eig_tol) {
        if std::env::var("RROC_HINF_DEBUG").is_ok() { eprintln!("DEBUG: X not PSD"); }
        return None;
    }

    let b1_d21t = &p.b1 * p.d21.transpose();
    let a_y = (&p.a - &b1_d21t * &p.c2).transpose();
    let g_y = p.c1.transpose() * &p.c1 - p.c2.transpose() * &p.c2;
    let proj_w = DMatrix::<T>::identity(p.b1.ncols(), p.b1.ncols()) - p.d21.transpose() * &p.d21;
    let q_y = mat::symmetrize(&(&p.b1 * &proj_w * p.b1.transpose()));
    let y = match solve_care(&a_y, &g_y, &q_y) {
        Some(y) => y,
        None => {
            if std::env::var("RROC_HINF_DEBUG").is_ok() { eprintln!("DEBUG: Y-CARE failed"); }
            return None;
        }
    };
    let eig_tol = T::from_config(1e-8) * (T::one() + y.norm());
    if y.symmetric_eigenvalues().iter().any(|&e| e < -eig_tol) {
        if std::env::var("RROC_HINF_DEBUG").is_ok() { eprintln!("DEBUG: Y not PSD"); }
        return None;
    }

    // spectral radius coupling condition
    if mat::spectral_radius(&(&x * &y)) >= T::one() - T::from_config(1e-9) {
        if std::env::var("RROC_HINF_DEBUG").is_ok() { eprintln!("DEBUG: rho(XY) = {:?} >= 1", mat::spectral_radius(&(&x * &y)).to_f64()); }
        return None;
    }

    let f = -(p.b2.transpose() * &x + &d12t_c1);
    let l = -(&y * p.c2.transpose() + &b1_d21t);
    let z = mat::inverse(&(DMatrix::identity(n, n) - &y * &x))?;
    let zl = &z * &l;
    let c2_eff = &p.c2 + &p.d21 * p.b1.transpose() * &x;
    let a_k = &p.a + &p.b1 * p.b1.transpose() * &x + &p.b2 * &f + &zl * &c2_eff;
    StateSpace::new(a_k, -&zl, f.clone(), DMatrix::zeros(f.nrows(), zl.ncols())).ok()
}

/// Synthesizes an output-feedback controller achieving
/// `||F_L(G, K)||_inf < gamma` for the discrete plant, or returns `None`
/// when the level is infeasible. The returned controller is verified on
/// the discrete closed loop.
pub fn hinf_synthesize<T: Scalar>(
    g: &StateSpace<T>,
    part: &Partition,
    gamma: T,
    verify_grid: usize,
) -> Result<Option<StateSpace<T>>> {
    if part.n_w + part.n_u != g.n_inputs() || part.n_e + part.n_y != g.n_outputs() {
        return Err(Error::DimensionMismatch(
            "partition does not match the plant channel counts".into(),
        ));
    }
    if gamma <= T::zero() {
        return Ok(None);
    }
    let cont = bilinear::to_continuous(g)?;
    let mut p = Plant::split(&cont, part);

    // scale the error channel so the target level is one
    p.c1 /= gamma;
    p.d11 /= gamma;
    p.d12 /= gamma;

    let d22_outer = std::mem::replace(&mut p.d22, DMatrix::zeros(part.n_y, part.n_u));
    let t1 = normalize(&mut p)?;
    let shift = match parrott_shift(&mut p) {
        Some(s) => s,
        None => {
            if std::env::var("RROC_HINF_DEBUG").is_ok() { eprintln!("DEBUG: parrott infeasible"); }
            return Ok(None);
        }
    };
    let d22_mobius = match mobius_zero_d11(&mut p) {
        Some(d) => d,
        None => return Ok(None),
    };
    p.d22 = DMatrix::zeros(part.n_y, part.n_u);
    let t2 = normalize(&mut p)?;

    let k = match central_controller(&p) {
        Some(k) => k,
        None => {
            if std::env::var("RROC_HINF_DEBUG").is_ok() { eprintln!("DEBUG: central controller conditions failed"); }
            return Ok(None);
        }
    };

    // undo the reductions in reverse order
    let k = apply_channel_transforms(k, &t2);
    let k = match wrap_d22(k, &d22_mobius) {
        Some(k) => k,
        None => return Ok(None),
    };
    let k = add_feedthrough(k, &shift);
    let k = apply_channel_transforms(k, &t1);
    let k = match wrap_d22(k, &d22_outer) {
        Some(k) => k,
        None => return Ok(None),
    };
    let k_disc = bilinear::to_discrete(&k)?;

    // independent discrete-time verification
    let cl = lft_lower(g, part.n_u, part.n_y, &k_disc)?;
    if !cl.is_stable() {
        if std::env::var("RROC_HINF_DEBUG").is_ok() { eprintln!("DEBUG: closed loop unstable"); }
        return Ok(None);
    }
    let norm = hinf_norm_with_grid(&cl, verify_grid)?;
    if norm > gamma * (T::one() - T::from_config(1e-9)) {
        if std::env::var("RROC_HINF_DEBUG").is_ok() { eprintln!("DEBUG: verification norm {:?} > gamma {:?}", norm.to_f64(), gamma.to_f64()); }
        return Ok(None);
    }
    Ok(Some(k_disc))
}

/// Minimizes the achievable closed-loop level by bisection. `hi_hint` is
/// doubled until feasible (up to a cap) before bisecting down to the
/// relative tolerance. Returns the best verified controller and level.
pub fn hinf_min_gamma<T: Scalar>(
    g: &StateSpace<T>,
    part: &Partition,
    hi_hint: T,
    rel_tol: T,
    verify_grid: usize,
) -> Result<Option<(T, StateSpace<T>)>> {
    let mut hi = if hi_hint > T::zero() {
        hi_hint
    } else {
        T::one()
    };
    let mut best: Option<(T, StateSpace<T>)> = None;
    for _ in 0..60 {
        match hinf_synthesize(g, part, hi, verify_grid)? {
            Some(k) => {
                best = Some((hi, k));
                break;
            }
            None => hi *= T::from_config(2.0),
        }
    }
    let (mut hi, _) = match &best {
        Some((g0, _)) => (*g0, ()),
        None => return Ok(None),
    };
    let mut lo = T::zero();
    while hi - lo > rel_tol * hi {
        let mid = (hi + lo) * T::from_config(0.5);
        match hinf_synthesize(g, part, mid, verify_grid)? {
            Some(k) => {
                hi = mid;
                best = Some((mid, k));
            }
            None => lo = mid,
        }
    }
    Ok(best)
}
