//! DK-iteration: alternating H-infinity synthesis and constant
//! per-block scaling optimization for robust performance over the
//! structured uncertainty plus one full performance block.
//!
//! The D-scales are frequency-independent positive scalars, one per
//! repeated block, with the performance channel fixed at one. This is a
//! deliberately simple parameterization: it keeps the scaled plant free
//! of extra states and is conservative for real parametric uncertainty,
//! so achieved levels may exceed those of richer mu-synthesis
//! implementations.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::lft::{BlockStructure, RobustPlant};
use crate::norms::{frequency_grid, hinf_norm_with_grid};
use crate::ss::StateSpace;
use crate::synthesis::hinf::{hinf_min_gamma, Partition};
use crate::synthesis::{IterationRecord, SynthOptions, SynthesisResult};
use crate::{Error, Result, Scalar};

/// Constant per-block uncertainty scalings; the performance block is
/// implicitly unscaled.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSet<T: Scalar> {
    pub scales: Vec<T>,
}

impl<T: Scalar> ScalingSet<T> {
    pub fn unit(n_blocks: usize) -> Self {
        Self {
            scales: vec![T::one(); n_blocks],
        }
    }
}

/// Scaled maximum singular value `sigma_max(D M D^{-1})` of one
/// frequency-response sample, with the rows/columns of block `i` scaled
/// by `d_i` / `1/d_i` and all remaining channels (the performance block)
/// unscaled.
pub fn scaled_upper_bound<T: Scalar>(
    m: &DMatrix<Complex<T>>,
    block: &BlockStructure,
    scaling: &ScalingSet<T>,
) -> T {
    let mut scaled = m.clone();
    let mut at = 0;
    for (&d, &r) in scaling.scales.iter().zip(block.sizes()) {
        let inv = T::one() / d;
        for k in 0..r {
            let row = at + k;
            if row < scaled.nrows() {
                for j in 0..scaled.ncols() {
                    scaled[(row, j)] *= Complex::new(d, T::zero());
                }
            }
            let col = at + k;
            if col < scaled.ncols() {
                for i in 0..scaled.nrows() {
                    scaled[(i, col)] *= Complex::new(inv, T::zero());
                }
            }
        }
        at += r;
    }
    crate::mat::max_singular_value_c(&scaled)
}

/// Applies constant block scalings to a closed `(w, d) -> (v, e)` system.
fn scale_closed_loop<T: Scalar>(
    cl: &StateSpace<T>,
    block: &BlockStructure,
    n_d: usize,
    n_e: usize,
    scaling: &ScalingSet<T>,
) -> Result<StateSpace<T>> {
    let wrapped = RobustPlant {
        ss: cl.clone(),
        block: block.clone(),
        n_d,
        n_u: 0,
        n_e,
        n_y: 0,
    };
    Ok(wrapped.scaled(&scaling.scales)?.ss)
}

/// Worst-case grid objective for the D-step.
fn grid_objective<T: Scalar>(
    responses: &[DMatrix<Complex<T>>],
    block: &BlockStructure,
    scaling: &ScalingSet<T>,
) -> T {
    responses
        .iter()
        .map(|m| scaled_upper_bound(m, block, scaling))
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// Coordinate descent on the log-scales, golden-section per coordinate.
fn optimize_scales<T: Scalar>(
    responses: &[DMatrix<Complex<T>>],
    block: &BlockStructure,
    start: &ScalingSet<T>,
) -> ScalingSet<T> {
    let mut best = start.clone();
    let mut best_val = grid_objective(responses, block, &best);
    let inv_phi = T::from_config(0.618_033_988_749_894_9);
    for _sweep in 0..8 {
        let before = best_val;
        for i in 0..best.scales.len() {
            // golden-section on log10(d_i) in [-6, 6]
            let mut lo = T::from_config(-6.0);
            let mut hi = T::from_config(6.0);
            let eval = |logd: T, current: &ScalingSet<T>| {
                let mut s = current.clone();
                s.scales[i] = T::from_config(10.0).powf(logd);
                grid_objective(responses, block, &s)
            };
            let mut c = hi - (hi - lo) * inv_phi;
            let mut d = lo + (hi - lo) * inv_phi;
            let mut fc = eval(c, &best);
            let mut fd = eval(d, &best);
            for _ in 0..60 {
                if hi - lo < T::from_config(1e-4) {
                    break;
                }
                if fc < fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - (hi - lo) * inv_phi;
                    fc = eval(c, &best);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + (hi - lo) * inv_phi;
                    fd = eval(d, &best);
                }
            }
            let (logd, val) = if fc < fd { (c, fc) } else { (d, fd) };
            if val < best_val {
                best.scales[i] = T::from_config(10.0).powf(logd);
                best_val = val;
            }
        }
        if before - best_val <= T::from_config(1e-4) * (T::one() + before) {
            break;
        }
    }
    best
}

/// Robust synthesis by DK-iteration on an uncertain plant with
/// performance channels. With no uncertainty blocks this reduces exactly
/// to plain H-infinity synthesis.
///
/// `gamma_achieved` is the verified scaled norm of the best controller;
/// robust performance holds when it is below one.
pub fn dk_iteration<T: Scalar>(
    plant: &RobustPlant<T>,
    opts: &SynthOptions,
) -> Result<SynthesisResult<T>> {
    let n = plant.n_unc();
    let s_blocks = plant.block.n_blocks();
    let part = Partition {
        n_w: n + plant.n_d,
        n_u: plant.n_u,
        n_e: n + plant.n_e,
        n_y: plant.n_y,
    };
    let verify_grid = opts.freq_grid;
    let kstep_tol = T::from_config(opts.kstep_rel_tol);

    if n == 0 {
        let best = hinf_min_gamma(&plant.ss, &part, T::one(), kstep_tol, verify_grid)?
            .ok_or_else(|| Error::NominalInfeasible("H-infinity synthesis failed".into()))?;
        let (gamma, k) = best;
        let cl = plant.close_controller(&k)?;
        let verified = hinf_norm_with_grid(&cl, verify_grid)?;
        return Ok(SynthesisResult {
            k,
            gamma_achieved: verified,
            scales: Vec::new(),
            log: vec![IterationRecord {
                iteration: 0,
                gamma: gamma.to_f64().unwrap_or(f64::NAN),
                scales: Vec::new(),
                note: "plain synthesis (no uncertainty blocks)".into(),
            }],
            no_progress: false,
        });
    }

    let grid: Vec<T> = frequency_grid(opts.dk_grid);
    let mut scaling = ScalingSet::unit(s_blocks);
    let mut log: Vec<IterationRecord> = Vec::new();
    let mut best: Option<(T, StateSpace<T>, ScalingSet<T>)> = None;
    let mut no_progress = false;

    for iter in 0..opts.max_dk {
        // K-step on the scaled plant
        let scaled_plant = plant.scaled(&scaling.scales)?;
        let hi_hint = match &best {
            Some((b, _, _)) => *b * T::from_config(1.05),
            None => T::one(),
        };
        let kstep = hinf_min_gamma(&scaled_plant.ss, &part, hi_hint, kstep_tol, verify_grid)?;
        let (_, k) = match kstep {
            Some(res) => res,
            None => {
                if best.is_none() {
                    return Err(Error::NominalInfeasible(
                        "K-step synthesis failed on the scaled plant".into(),
                    ));
                }
                no_progress = true;
                break;
            }
        };
        // verified scaled norm of the candidate
        let cl = plant.close_controller(&k)?;
        if !cl.is_stable() {
            no_progress = true;
            break;
        }
        let scaled_cl = scale_closed_loop(&cl, &plant.block, plant.n_d, plant.n_e, &scaling)?;
        let beta = hinf_norm_with_grid(&scaled_cl, verify_grid)?;
        let improved = match &best {
            Some((b, _, _)) => beta < *b * (T::one() - T::from_config(1e-12)),
            None => true,
        };
        if improved {
            best = Some((beta, k.clone(), scaling.clone()));
        }
        log.push(IterationRecord {
            iteration: iter,
            gamma: best.as_ref().unwrap().0.to_f64().unwrap_or(f64::NAN),
            scales: scaling
                .scales
                .iter()
                .map(|s| s.to_f64().unwrap_or(f64::NAN))
                .collect(),
            note: format!(
                "K-step norm {:.6e}{}",
                beta.to_f64().unwrap_or(f64::NAN),
                if improved { "" } else { " (not accepted)" }
            ),
        });

        // D-step around the best controller so far
        let (_, best_k, _) = best.as_ref().unwrap();
        let cl_best = plant.close_controller(best_k)?;
        let mut responses = Vec::with_capacity(grid.len());
        for &th in &grid {
            responses.push(cl_best.freq_response(th)?);
        }
        let new_scaling = optimize_scales(&responses, &plant.block, &scaling);
        let scaled_best =
            scale_closed_loop(&cl_best, &plant.block, plant.n_d, plant.n_e, &new_scaling)?;
        let beta_d = hinf_norm_with_grid(&scaled_best, verify_grid)?;
        let prev_best = best.as_ref().unwrap().0;
        if beta_d < prev_best {
            best = Some((beta_d, best_k.clone(), new_scaling.clone()));
        }
        let improvement = (prev_best - beta_d) / prev_best;
        log.push(IterationRecord {
            iteration: iter,
            gamma: best.as_ref().unwrap().0.to_f64().unwrap_or(f64::NAN),
            scales: new_scaling
                .scales
                .iter()
                .map(|s| s.to_f64().unwrap_or(f64::NAN))
                .collect(),
            note: format!("D-step norm {:.6e}", beta_d.to_f64().unwrap_or(f64::NAN)),
        });
        scaling = new_scaling;
        if improvement < T::from_config(opts.dk_rel_improvement) && iter > 0 {
            break;
        }
    }

    let (gamma_achieved, k, scaling) =
        best.ok_or_else(|| Error::NominalInfeasible("no stabilizing controller found".into()))?;
    Ok(SynthesisResult {
        k,
        gamma_achieved,
        scales: scaling.scales,
        log,
        no_progress,
    })
}
