//! H-infinity norm computation and the shared frequency-sweep engine.
//!
//! The norm is located by a coarse log-spaced grid on `[0, pi]` (real
//! systems have conjugate-symmetric responses) followed by golden-section
//! refinement around the best grid peaks. Pathological peaks narrower than
//! the grid spacing can be missed; the grid size is exposed as a knob on
//! every entry point for that reason.

use crate::ss::StateSpace;
use crate::{Error, Result, Scalar};

/// Default number of coarse grid points on `[0, pi]`.
pub const DEFAULT_GRID: usize = 2048;
/// Number of grid peaks refined by golden-section search.
const REFINED_PEAKS: usize = 5;
/// Relative tolerance of the golden-section refinement.
const REFINE_TOL: f64 = 1e-8;

/// Log-spaced frequency grid on `[0, pi]`, including both endpoints.
pub fn frequency_grid<T: Scalar>(n: usize) -> Vec<T> {
    assert!(n >= 2);
    let pi = T::pi();
    let lo = T::from_config(1e-6);
    let mut grid = Vec::with_capacity(n);
    grid.push(T::zero());
    // n-1 log-spaced points from pi*1e-6 to pi
    let decades = -lo.log10();
    let m = n - 1;
    for k in 0..m {
        let frac = T::from_usize(k).unwrap() / T::from_usize(m - 1).unwrap();
        let exp = (frac - T::one()) * decades;
        grid.push(pi * T::from_config(10.0).powf(exp));
    }
    grid
}

/// Supremum of `f` over the unit circle's upper half `[0, pi]`:
/// coarse grid scan plus golden-section refinement around the top peaks.
/// Returns `(theta_at_max, max_value)`.
pub fn sup_on_circle<T, F>(f: F, n_grid: usize, refine_tol: T) -> Result<(T, T)>
where
    T: Scalar,
    F: Fn(T) -> Result<T>,
{
    let grid = frequency_grid::<T>(n_grid);
    let mut values = Vec::with_capacity(grid.len());
    for &th in &grid {
        values.push(f(th)?);
    }

    // indices of local maxima (endpoints included), best first
    let mut peaks: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            let left_ok = i == 0 || values[i] >= values[i - 1];
            let right_ok = i + 1 == grid.len() || values[i] >= values[i + 1];
            left_ok && right_ok
        })
        .collect();
    peaks.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());
    peaks.truncate(REFINED_PEAKS);

    let mut best_th = grid[peaks[0]];
    let mut best = values[peaks[0]];
    for &i in &peaks {
        let lo = if i == 0 { grid[0] } else { grid[i - 1] };
        let hi = if i + 1 == grid.len() {
            grid[grid.len() - 1]
        } else {
            grid[i + 1]
        };
        let (th, v) = golden_max(&f, lo, hi, refine_tol)?;
        if v > best {
            best = v;
            best_th = th;
        }
    }
    Ok((best_th, best))
}

fn golden_max<T, F>(f: &F, mut lo: T, mut hi: T, rel_tol: T) -> Result<(T, T)>
where
    T: Scalar,
    F: Fn(T) -> Result<T>,
{
    let inv_phi = T::from_config(0.618_033_988_749_894_9);
    let mut c = hi - (hi - lo) * inv_phi;
    let mut d = lo + (hi - lo) * inv_phi;
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if hi - lo <= rel_tol * (T::one() + hi) {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - (hi - lo) * inv_phi;
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + (hi - lo) * inv_phi;
            fd = f(d)?;
        }
    }
    if fc > fd {
        Ok((c, fc))
    } else {
        Ok((d, fd))
    }
}

/// H-infinity norm of a stable system with the default grid.
pub fn hinf_norm<T: Scalar>(sys: &StateSpace<T>) -> Result<T> {
    hinf_norm_with_grid(sys, DEFAULT_GRID)
}

/// H-infinity norm with an explicit coarse-grid size.
pub fn hinf_norm_with_grid<T: Scalar>(sys: &StateSpace<T>, n_grid: usize) -> Result<T> {
    if !sys.is_stable() {
        return Err(Error::UnstableSystem);
    }
    if sys.n_states() == 0 {
        return Ok(crate::mat::max_singular_value(sys.d()));
    }
    let (_, v) = sup_on_circle(
        |th| sys.gain_at(th),
        n_grid,
        T::from_config(REFINE_TOL),
    )?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    #[test]
    fn static_gain_norm_is_max_singular_value() {
        let sys = StateSpace::static_gain(dmatrix![3.0, 0.0; 0.0, 1.0]);
        assert_relative_eq!(hinf_norm(&sys).unwrap(), 3.0);
    }

    #[test]
    fn scalar_lag_peaks_at_dc() {
        let sys = StateSpace::new(dmatrix![0.5], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0])
            .unwrap();
        assert_relative_eq!(hinf_norm(&sys).unwrap(), 2.0, epsilon = 1e-8);
        let sys9 = StateSpace::new(dmatrix![0.9], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0])
            .unwrap();
        // dense-grid oracle: |1/(e^{j t} - 0.9)| maximized over 200k points
        let mut oracle: f64 = 0.0;
        for k in 0..200_000 {
            let th = std::f64::consts::PI * k as f64 / 199_999.0;
            let z = num_complex::Complex::new(th.cos(), th.sin());
            oracle = oracle.max((1.0 / (z - 0.9)).norm());
        }
        let got = hinf_norm(&sys9).unwrap();
        assert_relative_eq!(got, oracle, epsilon = 1e-7);
        assert_relative_eq!(got, 10.0, epsilon = 1e-7);
    }

    #[test]
    fn unstable_system_rejected() {
        let sys = StateSpace::new(dmatrix![1.4], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0])
            .unwrap();
        assert!(matches!(hinf_norm(&sys), Err(Error::UnstableSystem)));
    }

    #[test]
    fn interior_peak_found() {
        // resonant pair with peak away from the endpoints
        let r = 0.95;
        let th0 = 1.1f64;
        let a = dmatrix![r * th0.cos(), r * th0.sin(); -r * th0.sin(), r * th0.cos()];
        let sys = StateSpace::new(
            a,
            dmatrix![1.0; 0.0],
            dmatrix![1.0, 0.0],
            dmatrix![0.0],
        )
        .unwrap();
        let norm = hinf_norm(&sys).unwrap();
        let mut oracle: f64 = 0.0;
        for k in 0..400_000 {
            let th = std::f64::consts::PI * k as f64 / 399_999.0;
            oracle = oracle.max(sys.gain_at(th).unwrap());
        }
        assert_relative_eq!(norm, oracle, max_relative = 1e-6);
    }
}
