//! Canonical spectral factorization of the regret-augmented cost.
//!
//! For a non-causal baseline with closed loop `T_nc` and a regret level
//! `gamma`, the para-Hermitian spectrum
//!
//! ```text
//!   Phi(z) = gamma^2 I + T_nc~(z) T_nc(z)
//! ```
//!
//! is factored as `Phi = F~ F` with `F` and `F^{-1}` both causal and
//! Schur stable, so `||F d||^2 = gamma^2 ||d||^2 + J(K_nc, d)` for every
//! square-summable disturbance.
//!
//! Although `T_nc` mixes causal and anticausal dynamics, completing the
//! square in the baseline's cost gives `Phi` an exact additive split with
//! only `n_x` causal states:
//!
//! ```text
//!   Phi(z) = R_0 + Psi(z) + Psi~(z),   Psi(z) = C_s (zI - A_cl)^{-1} B_s
//! ```
//!
//! where, with `Y` solving the Lyapunov equation
//! `Y = A_cl Y A_cl' + B_u R_e^{-1} B_u'` (the partial-fraction split of
//! the causal-anticausal product),
//!
//! ```text
//!   C_s = B_d' X A_cl,
//!   B_s = B_d - Y X B_d,
//!   R_0 = gamma^2 I + B_d' X B_d - B_d' X Y X B_d.
//! ```
//!
//! The canonical factor then comes from the factorization DARE
//!
//! ```text
//!   Z = A_cl' Z A_cl + (C_s - B_s' Z A_cl)' (R_0 - B_s' Z B_s)^{-1} (C_s - B_s' Z A_cl)
//! ```
//!
//! (the general DARE with `Q = 0`, `S = -C_s'`, `R = -R_0`), giving
//! `F = [A_cl, B_s; D_F K_F, D_F]` with `D_F = (R_0 - B_s' Z B_s)^{1/2}`
//! chosen symmetric positive definite, which pins down the factor among
//! its constant-unitary multiples.

use nalgebra::DMatrix;

use crate::baseline::NoncausalBaseline;
use crate::mat;
use crate::riccati::{dlyap, solve_dare_general, stabilizable};
use crate::ss::StateSpace;
use crate::{Error, Result, Scalar};

/// Grid size for the built-in verification sweep.
pub const DEFAULT_CHECK_GRID: usize = 512;
/// Relative tolerance of the construction self-check.
const SELF_CHECK_TOL: f64 = 1e-6;

/// Causal stable spectral factor and its causal stable inverse.
#[derive(Debug, Clone)]
pub struct SpectralFactorPair<T: Scalar> {
    pub f: StateSpace<T>,
    pub f_inv: StateSpace<T>,
    pub gamma: T,
    /// Uncertainty sample the factor was built at, when known.
    pub delta: Option<DMatrix<T>>,
}

/// Builds the spectral factor pair for the baseline's regret-augmented
/// cost at level `gamma`.
pub fn spectral_factorize<T: Scalar>(
    nc: &NoncausalBaseline<T>,
    gamma: T,
) -> Result<SpectralFactorPair<T>> {
    if gamma <= T::zero() {
        return Err(Error::FactorizationDiverged(
            "regret level must be positive".into(),
        ));
    }
    let a_cl = nc.dare.a_cl.clone();
    let x = nc.dare.x.clone();
    let b_d = nc.plant.b_d();
    let b_u = nc.plant.b_u();
    let n_d = b_d.ncols();

    // Lemma hypothesis diagnostic: ((A_cl)^{-T}, X B_d) stabilizable.
    let hypothesis_ok = match mat::inverse(&a_cl.transpose()) {
        Some(a_inv_t) => stabilizable(&a_inv_t, &(&x * &b_d)).0,
        None => false,
    };

    let attempt = build_factor(nc, &a_cl, &x, &b_d, &b_u, n_d, gamma);
    match attempt {
        Ok(pair) => Ok(pair),
        Err(e) => {
            if !hypothesis_ok {
                Err(Error::StabilizabilityViolated(format!(
                    "((A_cl)^-T, X B_d) fails the PBH test and the factorization failed: {e}"
                )))
            } else {
                Err(e)
            }
        }
    }
}

fn build_factor<T: Scalar>(
    nc: &NoncausalBaseline<T>,
    a_cl: &DMatrix<T>,
    x: &DMatrix<T>,
    b_d: &DMatrix<T>,
    b_u: &DMatrix<T>,
    n_d: usize,
    gamma: T,
) -> Result<SpectralFactorPair<T>> {
    // Y = A_cl Y A_cl' + B_u R_e^{-1} B_u'
    let re_inv_but = mat::solve(&nc.r_e, &b_u.transpose())
        .ok_or_else(|| Error::FactorizationDiverged("R_e is singular".into()))?;
    let j = mat::symmetrize(&(b_u * &re_inv_but));
    let y = dlyap(a_cl, &j).map_err(|e| {
        Error::FactorizationDiverged(format!("Lyapunov split failed: {e}"))
    })?;

    let xbd = x * b_d;
    let c_s = b_d.transpose() * x * a_cl;
    let b_s = b_d - &y * &xbd;
    let r0 = mat::symmetrize(
        &(DMatrix::identity(n_d, n_d) * gamma * gamma + b_d.transpose() * &xbd
            - xbd.transpose() * &y * &xbd),
    );

    // factorization DARE in (A_cl, B_s) with Q = 0, S = -C_s', R = -R_0
    let n = a_cl.nrows();
    let zero_q = DMatrix::zeros(n, n);
    let sol = solve_dare_general(a_cl, &b_s, &zero_q, &(-c_s.transpose()), &(-&r0)).map_err(
        |e| Error::FactorizationDiverged(format!("factorization DARE failed: {e}")),
    )?;
    if !crate::ss::is_schur(&sol.a_cl) {
        return Err(Error::FactorizationDiverged(
            "factor inverse is not Schur stable".into(),
        ));
    }
    let d_f_sq = mat::symmetrize(&(&r0 - b_s.transpose() * &sol.x * &b_s));
    let min_eig = d_f_sq
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(T::max_value().unwrap(), |m, v| if v < m { v } else { m });
    if min_eig <= T::from_config(1e-12) * (T::one() + d_f_sq.norm()) {
        return Err(Error::NoninvertibleFactor);
    }
    let d_f = mat::sqrtm_psd(&d_f_sq, T::from_config(1e-12)).ok_or(Error::NoninvertibleFactor)?;
    let k_f = sol.gain.clone();
    let c_f = &d_f * &k_f;
    let f = StateSpace::new(a_cl.clone(), b_s.clone(), c_f, d_f.clone())?;
    let d_f_inv = mat::inverse(&d_f).ok_or(Error::NoninvertibleFactor)?;
    let f_inv = StateSpace::new(
        sol.a_cl.clone(),
        &b_s * &d_f_inv,
        -&k_f,
        d_f_inv,
    )?;

    let pair = SpectralFactorPair {
        f,
        f_inv,
        gamma,
        delta: None,
    };
    // construction self-check on a coarse grid
    let err = check_factor(&pair, nc, 32)?;
    if err > T::from_config(SELF_CHECK_TOL) {
        return Err(Error::FactorizationDiverged(format!(
            "spectral identity violated by relative error {:?}",
            err.to_f64()
        )));
    }
    Ok(pair)
}

/// Maximum relative deviation on a frequency grid between `F~ F` and
/// `gamma^2 I + T_nc~ T_nc`.
pub fn check_factor<T: Scalar>(
    pair: &SpectralFactorPair<T>,
    nc: &NoncausalBaseline<T>,
    grid: usize,
) -> Result<T> {
    let n_d = pair.f.n_inputs();
    let mut worst = T::zero();
    for k in 0..grid {
        let th = T::pi() * T::from_usize(k).unwrap() / T::from_usize(grid - 1).unwrap();
        let fr = pair.f.freq_response(th)?;
        let lhs = fr.adjoint() * &fr;
        let t_nc = nc.freq_map(th)?;
        let mut rhs = t_nc.adjoint() * &t_nc;
        for i in 0..n_d {
            rhs[(i, i)] += num_complex::Complex::new(pair.gamma * pair.gamma, T::zero());
        }
        let denom = mat::max_singular_value_c(&rhs);
        let diff = mat::max_singular_value_c(&(&lhs - &rhs));
        let rel = diff / (T::one() + denom);
        if rel > worst {
            worst = rel;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::NoncausalBaseline;
    use crate::presets::scalar_benchmark;
    use crate::signal::{simulate, Signal};
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn baseline_at(delta: f64) -> NoncausalBaseline<f64> {
        let plant = scalar_benchmark::<f64>().realize(&dmatrix![delta]).unwrap();
        NoncausalBaseline::for_plant(&plant).unwrap()
    }

    #[test]
    fn constant_spectrum_when_no_disturbance_path() {
        // B_d = 0: T_nc = 0 and F must be the static gain gamma I
        let plant = crate::lft::RealizedPlant::from_parts(
            StateSpace::new(
                dmatrix![0.5],
                dmatrix![0.0, 1.0],
                dmatrix![1.0; 0.0; 1.0],
                dmatrix![0.0, 0.0; 0.0, 1.0; 0.0, 0.0],
            )
            .unwrap(),
            1,
            2,
        )
        .unwrap();
        let nc = NoncausalBaseline::for_plant(&plant).unwrap();
        let pair = spectral_factorize(&nc, 2.0).unwrap();
        for th in [0.0, 1.0, 3.0] {
            let g = pair.f.freq_response(th).unwrap();
            assert_relative_eq!(g[(0, 0)].re, 2.0, epsilon = 1e-12);
            assert_relative_eq!(g[(0, 0)].im, 0.0, epsilon = 1e-12);
            let gi = pair.f_inv.freq_response(th).unwrap();
            assert_relative_eq!(gi[(0, 0)].re, 0.5, epsilon = 1e-12);
        }
        // homogeneity: doubling gamma doubles the factor
        let pair2 = spectral_factorize(&nc, 4.0).unwrap();
        assert_relative_eq!(pair2.f.d()[(0, 0)], 2.0 * pair.f.d()[(0, 0)], epsilon = 1e-12);
    }

    #[test]
    fn spectral_identity_on_grid() {
        for (gamma, delta) in [(0.94, 0.0), (3.15, 1.0), (3.75, -1.0), (2.0, 0.5)] {
            let nc = baseline_at(delta);
            let pair = spectral_factorize(&nc, gamma).unwrap();
            let err = check_factor(&pair, &nc, 512).unwrap();
            assert!(
                err < 1e-6,
                "identity error {err} at gamma={gamma}, delta={delta}"
            );
            assert!(pair.f.is_stable());
            assert!(pair.f_inv.is_stable());
        }
    }

    #[test]
    fn perturbed_factor_detected() {
        let nc = baseline_at(0.0);
        let mut pair = spectral_factorize(&nc, 0.94).unwrap();
        let exact = check_factor(&pair, &nc, 128).unwrap();
        assert!(exact < 1e-8);
        // a 1% feedthrough perturbation shows up at the percent level
        pair.f = StateSpace::new(
            pair.f.a().clone(),
            pair.f.b().clone(),
            pair.f.c().clone(),
            pair.f.d() * 1.01,
        )
        .unwrap();
        let perturbed = check_factor(&pair, &nc, 128).unwrap();
        assert!(perturbed > 5e-3, "perturbation error {perturbed}");
    }

    #[test]
    fn inverse_is_true_inverse() {
        let nc = baseline_at(0.3);
        let pair = spectral_factorize(&nc, 1.5).unwrap();
        let prod = pair.f.series(&pair.f_inv).unwrap();
        for k in 0..128 {
            let th = std::f64::consts::PI * k as f64 / 127.0;
            let g = prod.freq_response(th).unwrap();
            assert_relative_eq!(g[(0, 0)].re, 1.0, epsilon = 1e-8);
            assert_relative_eq!(g[(0, 0)].im, 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn energy_identity_time_domain() {
        let nc = baseline_at(0.0);
        let gamma = 0.94;
        let pair = spectral_factorize(&nc, gamma).unwrap();
        let disturbances = [
            Signal::from_scalars(0, &[1.0]),
            Signal::from_scalars(-2, &[0.5, -1.0, 2.0]),
            Signal::from_scalars(3, &[0.1, 0.0, -0.7, 0.4]),
        ];
        for d in disturbances {
            let (_, fd_cost) = simulate(&pair.f, &d, 50).unwrap();
            let (_, _, nc_cost) = nc.noncausal_cost(&d).unwrap();
            let expect = gamma * gamma * d.energy() + nc_cost;
            assert_relative_eq!(fd_cost, expect, max_relative = 1e-5);
        }
    }

    #[test]
    fn gamma_monotonicity_pointwise() {
        let nc = baseline_at(0.5);
        let lo = spectral_factorize(&nc, 1.0).unwrap();
        let hi = spectral_factorize(&nc, 2.0).unwrap();
        for k in 0..64 {
            let th = std::f64::consts::PI * k as f64 / 63.0;
            let gl = lo.f.gain_at(th).unwrap();
            let gh = hi.f.gain_at(th).unwrap();
            assert!(gh >= gl, "spectrum dominance violated at theta={th}");
        }
    }
}
