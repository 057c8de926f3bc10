//! Controller synthesis drivers: plain H-infinity synthesis,
//! DK-iteration for structured robust performance, and the three
//! regret-level feasibility problems with bisection.
//!
//! All three regret modes reduce to a level-one performance condition on
//! a plant whose disturbance channel is weighted by an inverse spectral
//! factor:
//!
//! - nominal: weight by the center factor, no uncertainty channels, pure
//!   H-infinity synthesis;
//! - robust with fixed baseline: weight by the center factor, keep the
//!   uncertainty channels, DK-iteration;
//! - robust with uncertainty-dependent baseline: weight by the
//!   linearized inverse-factor expansion, duplicating the uncertainty,
//!   DK-iteration on the augmented plant.

pub mod bilinear;
pub mod care;
pub mod dk;
pub mod hinf;

use nalgebra::DMatrix;

use crate::augment::{assemble_m, build_augmented, linearize_plant_inverse};
use crate::baseline::NoncausalBaseline;
use crate::lft::{lft_lower, RobustPlant, UncertainPlant};
use crate::mat;
use crate::norms::hinf_norm_with_grid;
use crate::specfact::spectral_factorize;
use crate::ss::StateSpace;
use crate::{Error, Result, Scalar};

pub use dk::{dk_iteration, scaled_upper_bound, ScalingSet};
pub use hinf::{hinf_min_gamma, hinf_synthesize, Partition};

/// Strictness margin: feasibility predicates test the closed-loop level
/// against `1 - FEASIBILITY_MARGIN` instead of a strict inequality.
pub const FEASIBILITY_MARGIN: f64 = 1e-9;

/// Tuning knobs for synthesis and bisection.
#[derive(Debug, Clone)]
pub struct SynthOptions {
    /// Coarse grid for norm verification sweeps.
    pub freq_grid: usize,
    /// Frequency grid for the D-step scaling optimization.
    pub dk_grid: usize,
    /// Cap on DK iterations.
    pub max_dk: usize,
    /// Relative improvement below which DK stops.
    pub dk_rel_improvement: f64,
    /// Relative tolerance of the K-step level minimization.
    pub kstep_rel_tol: f64,
    /// Relative tolerance of the outer regret-level bisection.
    pub bisect_rel_tol: f64,
    /// Number of audit probes below the bisected level used to expose
    /// non-monotone feasibility predicates.
    pub audit_probes: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            freq_grid: 2048,
            dk_grid: 256,
            max_dk: 12,
            dk_rel_improvement: 0.01,
            kstep_rel_tol: 5e-3,
            bisect_rel_tol: 1e-3,
            audit_probes: 2,
        }
    }
}

/// One DK (or bisection) iteration record.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub gamma: f64,
    pub scales: Vec<f64>,
    pub note: String,
}

/// A synthesized controller with its verified performance level.
#[derive(Debug, Clone)]
pub struct SynthesisResult<T: Scalar> {
    /// Output-feedback controller, `y -> u`.
    pub k: StateSpace<T>,
    /// Verified level: closed-loop norm (plain synthesis) or scaled
    /// robust-performance norm (DK).
    pub gamma_achieved: T,
    /// Final uncertainty-block scalings (empty without uncertainty).
    pub scales: Vec<T>,
    pub log: Vec<IterationRecord>,
    /// Set when DK stopped because no step improved the level.
    pub no_progress: bool,
}

/// The three regret synthesis problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegretMode {
    /// Nominal additive regret (no robustness), pure H-infinity synthesis.
    Nominal,
    /// Robust regret against the baseline built on the nominal plant.
    RobustFixedBaseline,
    /// Robust regret against the uncertainty-dependent baseline, via the
    /// linearized inverse-factor expansion.
    RobustUncertaintyDependent,
}

impl RegretMode {
    pub fn tag(&self) -> &'static str {
        match self {
            RegretMode::Nominal => "ar",
            RegretMode::RobustFixedBaseline => "rob",
            RegretMode::RobustUncertaintyDependent => "robunc",
        }
    }
}

/// Builds the inverse factor of the nominal baseline at the given level.
fn nominal_inverse_factor<T: Scalar>(
    plant: &UncertainPlant<T>,
    gamma_r: T,
) -> Result<StateSpace<T>> {
    let n = plant.n_unc();
    let realized = plant.realize(&DMatrix::zeros(n, n))?;
    let nc = NoncausalBaseline::for_plant(&realized)?;
    Ok(spectral_factorize(&nc, gamma_r)?.f_inv)
}

/// Weights the realized nominal plant's disturbance channel:
/// `(d_hat, u) -> (e, y)` with `d = W d_hat`. Plant states first.
fn weight_nominal_plant<T: Scalar>(
    plant: &UncertainPlant<T>,
    w: &StateSpace<T>,
) -> Result<(StateSpace<T>, Partition)> {
    let n = plant.n_unc();
    let p0 = plant.realize(&DMatrix::zeros(n, n))?;
    let (n_d, n_u, n_e, n_y) = (p0.n_d, p0.n_u, p0.n_e, p0.n_y);
    if w.n_outputs() != n_d || w.n_inputs() != n_d {
        return Err(Error::DimensionMismatch(
            "disturbance weight must be square on the disturbance channel".into(),
        ));
    }
    let (n_xp, n_xw) = (p0.ss.n_states(), w.n_states());
    let zero = |r: usize, c: usize| DMatrix::<T>::zeros(r, c);
    let a = mat::vstack(&[
        &mat::hstack(&[&p0.a(), &(p0.b_d() * w.c())]),
        &mat::hstack(&[&zero(n_xw, n_xp), w.a()]),
    ]);
    let b = mat::vstack(&[
        &mat::hstack(&[&(p0.b_d() * w.d()), &p0.b_u()]),
        &mat::hstack(&[w.b(), &zero(n_xw, n_u)]),
    ]);
    let c = mat::vstack(&[
        &mat::hstack(&[&p0.c_e(), &zero(n_e, n_xw)]),
        &mat::hstack(&[&p0.c_y(), &(p0.d_yd() * w.c())]),
    ]);
    let d = mat::vstack(&[
        &mat::hstack(&[&zero(n_e, n_d), &p0.d_eu()]),
        &mat::hstack(&[&(p0.d_yd() * w.d()), &zero(n_y, n_u)]),
    ]);
    Ok((
        StateSpace::new(a, b, c, d)?,
        Partition {
            n_w: n_d,
            n_u,
            n_e,
            n_y,
        },
    ))
}

/// Weights the uncertain plant's disturbance channel, keeping the
/// uncertainty channels: `(w, d_hat, u) -> (v, e, y)`.
fn weight_uncertain_plant<T: Scalar>(
    plant: &UncertainPlant<T>,
    w: &StateSpace<T>,
) -> Result<RobustPlant<T>> {
    let n = plant.n_unc();
    let (n_d, n_u, n_e, n_y) = (
        plant.n_dist(),
        plant.n_ctrl(),
        plant.n_err(),
        plant.n_meas(),
    );
    if w.n_outputs() != n_d || w.n_inputs() != n_d {
        return Err(Error::DimensionMismatch(
            "disturbance weight must be square on the disturbance channel".into(),
        ));
    }
    let (n_xp, n_xw) = (plant.n_states(), w.n_states());
    let zero = |r: usize, c: usize| DMatrix::<T>::zeros(r, c);
    let a = mat::vstack(&[
        &mat::hstack(&[&plant.a(), &(plant.b_d() * w.c())]),
        &mat::hstack(&[&zero(n_xw, n_xp), w.a()]),
    ]);
    let b = mat::vstack(&[
        &mat::hstack(&[&plant.b_w(), &(plant.b_d() * w.d()), &plant.b_u()]),
        &mat::hstack(&[&zero(n_xw, n), w.b(), &zero(n_xw, n_u)]),
    ]);
    let c = mat::vstack(&[
        &mat::hstack(&[&plant.c_v(), &(plant.d_vd() * w.c())]),
        &mat::hstack(&[&plant.c_e(), &zero(n_e, n_xw)]),
        &mat::hstack(&[&plant.c_y(), &(plant.d_yd() * w.c())]),
    ]);
    let d = mat::vstack(&[
        &mat::hstack(&[&plant.d_vw(), &(plant.d_vd() * w.d()), &plant.d_vu()]),
        &mat::hstack(&[&zero(n_e, n), &zero(n_e, n_d), &plant.d_eu()]),
        &mat::hstack(&[&zero(n_y, n), &(plant.d_yd() * w.d()), &zero(n_y, n_u)]),
    ]);
    Ok(RobustPlant {
        ss: StateSpace::new(a, b, c, d)?,
        block: plant.block().clone(),
        n_d,
        n_u,
        n_e,
        n_y,
    })
}

/// Nominal regret feasibility: weight the nominal plant by the inverse
/// center factor and synthesize at level one.
pub fn feasible_nominal_regret<T: Scalar>(
    plant: &UncertainPlant<T>,
    gamma_r: T,
    opts: &SynthOptions,
) -> Result<Option<SynthesisResult<T>>> {
    let f_inv = nominal_inverse_factor(plant, gamma_r)?;
    let (weighted, part) = weight_nominal_plant(plant, &f_inv)?;
    let k = match hinf_synthesize(&weighted, &part, T::one(), opts.freq_grid)? {
        Some(k) => k,
        None => return Ok(None),
    };
    let cl = lft_lower(&weighted, part.n_u, part.n_y, &k)?;
    let achieved = hinf_norm_with_grid(&cl, opts.freq_grid)?;
    if achieved > T::one() - T::from_config(FEASIBILITY_MARGIN) {
        return Ok(None);
    }
    Ok(Some(SynthesisResult {
        k,
        gamma_achieved: achieved,
        scales: Vec::new(),
        log: vec![IterationRecord {
            iteration: 0,
            gamma: achieved.to_f64().unwrap_or(f64::NAN),
            scales: Vec::new(),
            note: format!("nominal regret level {:?}", gamma_r.to_f64()),
        }],
        no_progress: false,
    }))
}

/// Robust regret feasibility with the fixed (nominal) baseline: weight
/// the uncertain plant by the center inverse factor and run DK at level
/// one.
pub fn feasible_robust_regret_fixed<T: Scalar>(
    plant: &UncertainPlant<T>,
    gamma_r: T,
    opts: &SynthOptions,
) -> Result<Option<SynthesisResult<T>>> {
    let f_inv = nominal_inverse_factor(plant, gamma_r)?;
    let weighted = weight_uncertain_plant(plant, &f_inv)?;
    let result = dk_iteration(&weighted, opts)?;
    if result.gamma_achieved > T::one() - T::from_config(FEASIBILITY_MARGIN) {
        return Ok(None);
    }
    Ok(Some(result))
}

/// Robust regret feasibility with the uncertainty-dependent baseline:
/// linearize the inverse factor, build the augmented plant with doubled
/// uncertainty and run DK at level one.
pub fn feasible_robust_regret_unc<T: Scalar>(
    plant: &UncertainPlant<T>,
    gamma_r: T,
    opts: &SynthOptions,
) -> Result<Option<SynthesisResult<T>>> {
    let lin = linearize_plant_inverse(plant, gamma_r)?;
    let m = assemble_m(&lin);
    let aug = build_augmented(plant, &m, &lin.copy_block())?;
    let mut result = dk_iteration(&aug.phat, opts)?;
    result.log.push(IterationRecord {
        iteration: result.log.len(),
        gamma: result.gamma_achieved.to_f64().unwrap_or(f64::NAN),
        scales: Vec::new(),
        note: format!(
            "inverse-factor fit error (max over axis samples): {:.3e}",
            lin.worst_fit_error().to_f64().unwrap_or(f64::NAN)
        ),
    });
    if result.gamma_achieved > T::one() - T::from_config(FEASIBILITY_MARGIN) {
        return Ok(None);
    }
    Ok(Some(result))
}

/// Outcome of a regret-level bisection.
#[derive(Debug, Clone)]
pub struct BisectionOutcome<T: Scalar> {
    /// Minimal feasible level found (within tolerance).
    pub gamma: T,
    /// Synthesis result at that level.
    pub result: SynthesisResult<T>,
    /// Probed levels with their feasibility, in probe order.
    pub history: Vec<(f64, bool)>,
    /// Set when the history contradicts monotone feasibility.
    pub monotonicity_warning: bool,
}

/// Bisects a feasibility predicate down to the minimal feasible level.
/// The predicate is assumed monotone (feasible above a threshold); audit
/// probes below the found level expose violations of that assumption.
pub fn bisect_gamma<T, F>(
    feasibility: F,
    lo: T,
    hi: T,
    opts: &SynthOptions,
) -> Result<BisectionOutcome<T>>
where
    T: Scalar,
    F: Fn(T) -> Result<Option<SynthesisResult<T>>>,
{
    let mut history: Vec<(f64, bool)> = Vec::new();
    let mut hi = hi;
    let mut best: Option<(T, SynthesisResult<T>)> = None;
    for attempt in 0..4 {
        match feasibility(hi)? {
            Some(res) => {
                history.push((hi.to_f64().unwrap_or(f64::NAN), true));
                best = Some((hi, res));
                break;
            }
            None => {
                history.push((hi.to_f64().unwrap_or(f64::NAN), false));
                if attempt == 3 {
                    return Err(Error::UpperBoundInfeasible {
                        hi: hi.to_f64().unwrap_or(f64::NAN),
                    });
                }
                hi *= T::from_config(2.0);
            }
        }
    }
    let (mut hi_ok, mut result) = best.unwrap();
    let mut lo = lo;
    let tol = T::from_config(opts.bisect_rel_tol);
    while hi_ok - lo > tol * hi_ok {
        let mid = (hi_ok + lo) * T::from_config(0.5);
        match feasibility(mid)? {
            Some(res) => {
                history.push((mid.to_f64().unwrap_or(f64::NAN), true));
                hi_ok = mid;
                result = res;
            }
            None => {
                history.push((mid.to_f64().unwrap_or(f64::NAN), false));
                lo = mid;
            }
        }
    }
    // audit probes well below the found level
    for j in 1..=opts.audit_probes {
        let probe = hi_ok / T::from_usize(1 << j).unwrap() / T::from_config(2.0);
        if probe <= T::zero() {
            break;
        }
        let ok = feasibility(probe)?.is_some();
        history.push((probe.to_f64().unwrap_or(f64::NAN), ok));
    }
    // monotonicity scan: a feasible probe below an infeasible one is a
    // contradiction
    let mut warning = false;
    for &(ga, fa) in &history {
        for &(gb, fb) in &history {
            if fa && !fb && gb > ga {
                warning = true;
            }
        }
    }
    Ok(BisectionOutcome {
        gamma: hi_ok,
        result,
        history,
        monotonicity_warning: warning,
    })
}

/// Minimal plain H-infinity level of the unweighted nominal plant; the
/// default bisection upper bound is ten times this value.
pub fn nominal_hinf_level<T: Scalar>(
    plant: &UncertainPlant<T>,
    opts: &SynthOptions,
) -> Result<T> {
    let n = plant.n_unc();
    let p0 = plant.realize(&DMatrix::zeros(n, n))?;
    let part = Partition {
        n_w: p0.n_d,
        n_u: p0.n_u,
        n_e: p0.n_e,
        n_y: p0.n_y,
    };
    let best = hinf_min_gamma(
        &p0.ss,
        &part,
        T::one(),
        T::from_config(opts.kstep_rel_tol),
        opts.freq_grid,
    )?
    .ok_or_else(|| Error::NominalInfeasible("nominal plant is not synthesizable".into()))?;
    Ok(best.0)
}

/// One-call driver: bisects the minimal regret level for the given mode.
pub fn synthesize_regret<T: Scalar>(
    plant: &UncertainPlant<T>,
    mode: RegretMode,
    opts: &SynthOptions,
) -> Result<BisectionOutcome<T>> {
    let hi = nominal_hinf_level(plant, opts)? * T::from_config(10.0);
    let lo = T::zero();
    match mode {
        RegretMode::Nominal => bisect_gamma(
            |g| feasible_nominal_regret(plant, g, opts),
            lo,
            hi,
            opts,
        ),
        RegretMode::RobustFixedBaseline => bisect_gamma(
            |g| feasible_robust_regret_fixed(plant, g, opts),
            lo,
            hi,
            opts,
        ),
        RegretMode::RobustUncertaintyDependent => bisect_gamma(
            |g| feasible_robust_regret_unc(plant, g, opts),
            lo,
            hi,
            opts,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_converges_on_synthetic_predicate() {
        let opts = SynthOptions {
            audit_probes: 0,
            ..SynthOptions::default()
        };
        let dummy = |g: f64| -> Result<Option<SynthesisResult<f64>>> {
            Ok(if g >= 2.0 {
                Some(SynthesisResult {
                    k: StateSpace::static_gain(nalgebra::dmatrix![0.0]),
                    gamma_achieved: g,
                    scales: vec![],
                    log: vec![],
                    no_progress: false,
                })
            } else {
                None
            })
        };
        let out = bisect_gamma(dummy, 0.0, 10.0, &opts).unwrap();
        assert!(out.gamma >= 2.0 && out.gamma <= 2.002 * 2.0_f64.max(1.0));
        assert!(out.gamma <= 2.0 * (1.0 + 3.0 * opts.bisect_rel_tol));
        assert!(!out.monotonicity_warning);
    }

    #[test]
    fn non_monotone_predicate_flagged() {
        let opts = SynthOptions {
            audit_probes: 2,
            ..SynthOptions::default()
        };
        // feasible above 2 and also on a low island
        let dummy = |g: f64| -> Result<Option<SynthesisResult<f64>>> {
            Ok(if g >= 2.0 || g <= 0.6 {
                Some(SynthesisResult {
                    k: StateSpace::static_gain(nalgebra::dmatrix![0.0]),
                    gamma_achieved: g,
                    scales: vec![],
                    log: vec![],
                    no_progress: false,
                })
            } else {
                None
            })
        };
        let out = bisect_gamma(dummy, 0.0, 10.0, &opts).unwrap();
        assert!(out.monotonicity_warning, "history: {:?}", out.history);
    }

    #[test]
    fn infeasible_upper_bound_errors() {
        let opts = SynthOptions::default();
        let never = |_g: f64| -> Result<Option<SynthesisResult<f64>>> { Ok(None) };
        assert!(matches!(
            bisect_gamma(never, 0.0, 1.0, &opts),
            Err(Error::UpperBoundInfeasible { .. })
        ));
    }
}
