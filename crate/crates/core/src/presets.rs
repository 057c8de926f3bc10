//! Bundled benchmark problem: a scalar uncertain plant used by the test
//! suites and the command-line reproduction run.

use nalgebra::dmatrix;

use crate::lft::{BlockStructure, PlantBlocks, UncertainPlant};
use crate::Scalar;

/// Scalar uncertain plant
///
/// ```text
///   x_{t+1} = (0.5 + 0.9 delta) x_t + 5 d_t + u_t
///   e_t     = [sqrt(3) x_t; u_t]
///   y_t     = x_t + 10 d_t
/// ```
///
/// with one real uncertainty block `|delta| <= 1`. The measurement sees
/// the disturbance through the same gain as the state equation
/// so the
/// disturbance path into the measurement stays minimum phase across the
/// whole uncertainty range and
/// the controller can stably recover the full-information regret optimum
/// at every uncertainty sample.
pub fn scalar_benchmark<T: Scalar>() -> UncertainPlant<T> {
    let c = T::from_config;
    UncertainPlant::from_blocks(
        PlantBlocks {
            a: dmatrix![c(0.5)],
            b_w: dmatrix![c(0.9)],
            b_d: dmatrix![c(5.0)],
            b_u: dmatrix![c(1.0)],
            c_v: dmatrix![c(1.0)],
            d_vw: dmatrix![c(0.0)],
            d_vd: dmatrix![c(0.0)],
            d_vu: dmatrix![c(0.0)],
            c_e: dmatrix![c(3.0).sqrt(); c(0.0)],
            d_eu: dmatrix![c(0.0); c(1.0)],
            c_y: dmatrix![c(1.0)],
            d_yd: dmatrix![c(10.0)],
        },
        BlockStructure::new(vec![1]).unwrap(),
    )
    .expect("benchmark plant is well formed")
}

/// Reference regret levels for [`scalar_benchmark`] with acceptance bands.
///
/// The nominal level comes from plain H-infinity synthesis and reproduces
/// tightly; the two robust levels depend on the DK-iteration heuristic and
/// carry wider bands.
#[derive(Debug, Clone, Copy)]
pub struct BenchmarkBands {
    pub nominal: (f64, f64),
    pub robust_fixed: (f64, f64),
    pub robust_unc: (f64, f64),
}

/// Reference values: 0.94 (nominal), 3.15 (robust, fixed baseline) and
/// 3.75 (robust, uncertainty-dependent baseline).
pub fn benchmark_bands() -> BenchmarkBands {
    BenchmarkBands {
        nominal: (0.94 - 0.05, 0.94 + 0.05),
        robust_fixed: (3.15 * 0.9, 3.15 * 1.25),
        robust_unc: (3.75 * 0.9, 3.75 * 1.25),
    }
}
