//! Linearization of the inverse spectral factor over the uncertainty set
//! and assembly of the augmented synthesis plant.
//!
//! The inverse factor `F_delta^{-1}` depends nonlinearly on the
//! uncertainty, so it is approximated by the linear expansion
//!
//! ```text
//!   F_delta^{-1} ~ N_0 + sum_i delta_i N_i,
//!   N_0 = F_0^{-1},  N_i = (F_{+E_i}^{-1} - F_{-E_i}^{-1}) / 2,
//! ```
//!
//! with fit nodes at the center and at `delta_i = +-1`. The expansion is
//! then written as an upper LFT `F_U(M, Delta_M)` whose coefficient block
//! layout has a structurally zero `(v, w)` block, stacked identity
//! feedthroughs into the uncertainty outputs, `[N_1 ... N_S]` and `N_0`
//! in the disturbance row. Serial interconnection with the original plant
//! yields the augmented plant with the uncertainty duplicated.
//!
//! The fit interpolates the center sample exactly; at the vertices it
//! differs from the true inverse factor by the curvature of
//! `F_delta^{-1}` in `delta`, which is reported as a diagnostic (bound
//! violations near the edge of the uncertainty range are attributable to
//! this error).

use nalgebra::DMatrix;

use crate::baseline::NoncausalBaseline;
use crate::lft::{BlockStructure, RobustPlant, UncertainPlant};
use crate::mat;
use crate::specfact::{spectral_factorize, SpectralFactorPair};
use crate::ss::StateSpace;
use crate::{Error, Result, Scalar};

/// Frequency grid used by the fit-error diagnostic.
const FIT_DIAG_GRID: usize = 64;

/// Linear expansion of the inverse spectral factor.
#[derive(Debug, Clone)]
pub struct LinearizedInverse<T: Scalar> {
    /// `n[0] = N_0`, `n[i] = N_i` for blocks `i = 1..=S`.
    pub n: Vec<StateSpace<T>>,
    pub gamma: T,
    pub block: BlockStructure,
    /// Per-axis fit-error samples `(block index, delta, max relative
    /// frequency-domain error against the exact inverse factor)`.
    pub fit_error: Vec<FitErrorSample<T>>,
}

/// One fit-error diagnostic sample.
#[derive(Debug, Clone, Copy)]
pub struct FitErrorSample<T: Scalar> {
    pub block: usize,
    pub delta: T,
    pub max_rel_error: T,
}

impl<T: Scalar> LinearizedInverse<T> {
    /// Block structure of the duplicated uncertainty acting on the
    /// expansion: one repeated-scalar block of width `n_d` per original
    /// block (each scalar multiplies a full `n_d x n_d` coefficient).
    pub fn copy_block(&self) -> BlockStructure {
        let n_d = self.n[0].n_inputs();
        BlockStructure::new(vec![n_d; self.block.n_blocks()]).unwrap()
    }

    /// Worst fit error over all diagnostic samples.
    pub fn worst_fit_error(&self) -> T {
        self.fit_error
            .iter()
            .map(|s| s.max_rel_error)
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

/// Augmented plant: the original uncertain plant in series with the
/// expansion LFT, carrying two copies of the uncertainty.
#[derive(Debug, Clone)]
pub struct AugmentedPlant<T: Scalar> {
    /// Plant with inputs `(w_1, w_2, d_hat, u)`, outputs `(v_1, v_2, e, y)`
    /// and the doubled block structure. Stored as a [`RobustPlant`]
    /// because the serial interconnection picks up feedthrough into the
    /// measurement from the second uncertainty copy, which the strict
    /// zero-pattern plant type forbids.
    pub phat: RobustPlant<T>,
    /// The expansion LFT `M`, inputs `(w_2, d_hat)`, outputs `(v_2, d)`.
    pub m: StateSpace<T>,
    /// Structure of the original uncertainty copy.
    pub plant_block: BlockStructure,
    /// Structure of the expansion copy.
    pub m_block: BlockStructure,
}

impl<T: Scalar> AugmentedPlant<T> {
    /// Realizes the doubled uncertainty `diag(Delta, Delta_M)` from the
    /// shared scalar parameters.
    pub fn realize_doubled(&self, deltas: &[T]) -> Result<DMatrix<T>> {
        let d1 = self.plant_block.realize(deltas)?;
        let d2 = self.m_block.realize(deltas)?;
        Ok(mat::block_diag(&[&d1, &d2]))
    }
}

/// `+-E_i`: identity on block `i` (1-based), zero elsewhere.
pub fn vertex<T: Scalar>(
    block: &BlockStructure,
    i: usize,
    positive: bool,
) -> Result<DMatrix<T>> {
    if i == 0 || i > block.n_blocks() {
        return Err(Error::IndexOutOfRange {
            index: i,
            count: block.n_blocks(),
        });
    }
    let mut deltas = vec![T::zero(); block.n_blocks()];
    deltas[i - 1] = if positive { T::one() } else { -T::one() };
    block.realize(&deltas)
}

/// Builds the linear expansion through a factory mapping an uncertainty
/// sample to its spectral factor pair. The factory is invoked at the
/// center and both vertices of every axis (`2S + 1` factorizations), plus
/// the half-vertices for the fit-error diagnostic.
pub fn linearize_inverse<T, F>(
    factory: F,
    block: &BlockStructure,
    gamma: T,
) -> Result<LinearizedInverse<T>>
where
    T: Scalar,
    F: Fn(&DMatrix<T>) -> Result<SpectralFactorPair<T>>,
{
    let s = block.n_blocks();
    let n_total = block.total();
    let center = DMatrix::<T>::zeros(n_total, n_total);
    let pair0 = factory(&center)
        .map_err(|e| Error::FactorizationDiverged(format!("at the center sample: {e}")))?;
    let mut systems = vec![pair0.f_inv.clone()];
    let mut exact: Vec<(usize, T, StateSpace<T>)> = Vec::new();
    for i in 1..=s {
        let e_plus = vertex(block, i, true)?;
        let e_minus = vertex(block, i, false)?;
        let plus = factory(&e_plus).map_err(|e| {
            Error::FactorizationDiverged(format!("at vertex +E_{i}: {e}"))
        })?;
        let minus = factory(&e_minus).map_err(|e| {
            Error::FactorizationDiverged(format!("at vertex -E_{i}: {e}"))
        })?;
        let diff = plus.f_inv.sub(&minus.f_inv)?.scale_output(T::from_config(0.5));
        systems.push(diff);
        exact.push((i, T::one(), plus.f_inv));
        exact.push((i, -T::one(), minus.f_inv));
        // half-vertex samples for the diagnostic
        for half in [T::from_config(0.5), T::from_config(-0.5)] {
            let mut deltas = vec![T::zero(); s];
            deltas[i - 1] = half;
            let sample = block.realize(&deltas)?;
            let pair = factory(&sample).map_err(|e| {
                Error::FactorizationDiverged(format!("at diagnostic sample {i}: {e}"))
            })?;
            exact.push((i, half, pair.f_inv));
        }
    }

    let mut fit_error = Vec::new();
    for (i, delta, f_inv) in &exact {
        let mut worst = T::zero();
        for k in 0..FIT_DIAG_GRID {
            let th = T::pi() * T::from_usize(k).unwrap()
                / T::from_usize(FIT_DIAG_GRID - 1).unwrap();
            let approx = systems[0].freq_response(th)?
                + systems[*i].freq_response(th)?.map(|z| z * *delta);
            let truth = f_inv.freq_response(th)?;
            let denom = T::one() + mat::max_singular_value_c(&truth);
            let err = mat::max_singular_value_c(&(&approx - &truth)) / denom;
            if err > worst {
                worst = err;
            }
        }
        fit_error.push(FitErrorSample {
            block: *i,
            delta: *delta,
            max_rel_error: worst,
        });
    }

    Ok(LinearizedInverse {
        n: systems,
        gamma,
        block: block.clone(),
        fit_error,
    })
}

/// Standard factory: realize the plant at the sample, build the baseline
/// and factorize at the given level.
pub fn linearize_plant_inverse<T: Scalar>(
    plant: &UncertainPlant<T>,
    gamma: T,
) -> Result<LinearizedInverse<T>> {
    linearize_inverse(
        |delta| {
            let realized = plant.realize(delta)?;
            let nc = NoncausalBaseline::for_plant(&realized)?;
            let mut pair = spectral_factorize(&nc, gamma)?;
            pair.delta = Some(delta.clone());
            Ok(pair)
        },
        plant.block(),
        gamma,
    )
}

/// Assembles the expansion LFT: inputs `(w_2, d_hat)`, outputs
/// `(v_2, d)`, with the coefficient layout carrying a structurally zero
/// `(v_2, w_2)` block, identity feedthrough `d_hat -> v_2`, the
/// difference systems in the `(d, w_2)` row and the center system in the
/// `(d, d_hat)` corner.
pub fn assemble_m<T: Scalar>(lin: &LinearizedInverse<T>) -> StateSpace<T> {
    let s = lin.block.n_blocks();
    let n_d = lin.n[0].n_inputs();
    let a_blocks: Vec<&DMatrix<T>> = lin.n[1..].iter().map(|x| x.a()).collect::<Vec<_>>();
    let mut all_a: Vec<&DMatrix<T>> = a_blocks;
    all_a.push(lin.n[0].a());
    let a = mat::block_diag(&all_a);

    let states: usize = lin.n.iter().map(|x| x.n_states()).sum();
    let n_w2 = s * n_d;
    let mut b = DMatrix::<T>::zeros(states, n_w2 + n_d);
    let mut c = DMatrix::<T>::zeros(n_w2 + n_d, states);
    let mut d = DMatrix::<T>::zeros(n_w2 + n_d, n_w2 + n_d);
    let mut row_state = 0;
    for i in 1..=s {
        let ni = &lin.n[i];
        b.view_mut((row_state, (i - 1) * n_d), (ni.n_states(), n_d))
            .copy_from(ni.b());
        c.view_mut((n_w2, row_state), (n_d, ni.n_states()))
            .copy_from(ni.c());
        d.view_mut((n_w2, (i - 1) * n_d), (n_d, n_d)).copy_from(ni.d());
        row_state += ni.n_states();
    }
    let n0 = &lin.n[0];
    b.view_mut((row_state, n_w2), (n0.n_states(), n_d))
        .copy_from(n0.b());
    c.view_mut((n_w2, row_state), (n_d, n0.n_states()))
        .copy_from(n0.c());
    d.view_mut((n_w2, n_w2), (n_d, n_d)).copy_from(n0.d());
    // identity feedthrough d_hat -> each v_2 block
    for i in 0..s {
        for k in 0..n_d {
            d[(i * n_d + k, n_w2 + k)] = T::one();
        }
    }
    StateSpace::new(a, b, c, d).expect("assembled LFT is dimensionally consistent")
}

/// Serial interconnection of the plant and the expansion LFT: the
/// expansion output feeds the plant's disturbance channel. Plant states
/// come first.
pub fn build_augmented<T: Scalar>(
    p: &UncertainPlant<T>,
    m: &StateSpace<T>,
    m_block: &BlockStructure,
) -> Result<AugmentedPlant<T>> {
    let n = p.n_unc();
    let n_d = p.n_dist();
    let n_u = p.n_ctrl();
    let n_e = p.n_err();
    let n_y = p.n_meas();
    let n_m = m_block.total();
    if m.n_inputs() != n_m + n_d || m.n_outputs() != n_m + n_d {
        return Err(Error::DimensionMismatch(format!(
            "expansion LFT is {}x{}, expected {}x{}",
            m.n_outputs(),
            m.n_inputs(),
            n_m + n_d,
            n_m + n_d
        )));
    }

    let b_mw = m.b().columns(0, n_m).into_owned();
    let b_md = m.b().columns(n_m, n_d).into_owned();
    let c_mv = m.c().rows(0, n_m).into_owned();
    let c_md = m.c().rows(n_m, n_d).into_owned();
    let d_mvw = m.d().view((0, 0), (n_m, n_m)).into_owned();
    let d_mvd = m.d().view((0, n_m), (n_m, n_d)).into_owned();
    let d_mdw = m.d().view((n_m, 0), (n_d, n_m)).into_owned();
    let d_mdd = m.d().view((n_m, n_m), (n_d, n_d)).into_owned();

    let (n_xp, n_xm) = (p.n_states(), m.n_states());
    let a_p = p.a();
    let b_w = p.b_w();
    let b_d = p.b_d();
    let b_u = p.b_u();
    let c_v = p.c_v();
    let c_e = p.c_e();
    let c_y = p.c_y();
    let d_vw = p.d_vw();
    let d_vd = p.d_vd();
    let d_vu = p.d_vu();
    let d_eu = p.d_eu();
    let d_yd = p.d_yd();

    let zero = |r: usize, c: usize| DMatrix::<T>::zeros(r, c);

    let a = mat::vstack(&[
        &mat::hstack(&[&a_p, &(&b_d * &c_md)]),
        &mat::hstack(&[&zero(n_xm, n_xp), m.a()]),
    ]);
    let b = mat::vstack(&[
        &mat::hstack(&[&b_w, &(&b_d * &d_mdw), &(&b_d * &d_mdd), &b_u]),
        &mat::hstack(&[&zero(n_xm, n), &b_mw, &b_md, &zero(n_xm, n_u)]),
    ]);
    let c = mat::vstack(&[
        &mat::hstack(&[&c_v, &(&d_vd * &c_md)]),
        &mat::hstack(&[&zero(n_m, n_xp), &c_mv]),
        &mat::hstack(&[&c_e, &zero(n_e, n_xm)]),
        &mat::hstack(&[&c_y, &(&d_yd * &c_md)]),
    ]);
    let d = mat::vstack(&[
        &mat::hstack(&[&d_vw, &(&d_vd * &d_mdw), &(&d_vd * &d_mdd), &d_vu]),
        &mat::hstack(&[&zero(n_m, n), &d_mvw, &d_mvd, &zero(n_m, n_u)]),
        &mat::hstack(&[&zero(n_e, n), &zero(n_e, n_m), &zero(n_e, n_d), &d_eu]),
        &mat::hstack(&[&zero(n_y, n), &(&d_yd * &d_mdw), &(&d_yd * &d_mdd), &zero(n_y, n_u)]),
    ]);

    let doubled = p.block().concat(m_block);
    let ss = StateSpace::new(a, b, c, d)?;
    Ok(AugmentedPlant {
        phat: RobustPlant {
            ss,
            block: doubled,
            n_d,
            n_u,
            n_e,
            n_y,
        },
        m: m.clone(),
        plant_block: p.block().clone(),
        m_block: m_block.clone(),
    })
}
