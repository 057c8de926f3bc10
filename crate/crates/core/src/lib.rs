//! Robust regret-optimal control for discrete-time LTI systems with
//! structured real-parametric uncertainty.
//!
//! The toolkit covers the full synthesis pipeline:
//!
//! - [`ss`]: discrete-time state-space algebra (realizations, frequency
//!   response, stability, norms, interconnections, simulation),
//! - [`lft`]: uncertain plants and linear fractional transformations,
//! - [`riccati`]: stabilizing DARE solutions via structure-preserving
//!   doubling,
//! - [`baseline`]: the optimal non-causal controller with full disturbance
//!   preview, built per uncertainty realization,
//! - [`specfact`]: canonical spectral factors of the regret-augmented cost,
//! - [`augment`]: linearization of the inverse factor over the uncertainty
//!   set and assembly of the augmented synthesis plant,
//! - [`synthesis`]: H-infinity output-feedback synthesis, DK-iteration and
//!   the regret-level bisection drivers,
//! - [`regret`]: frequency-domain regret evaluation and bound validation.
//!
//! All core math is generic over the scalar type through [`Scalar`]
//! (`f32` or `f64`); concrete `f64` aliases are exported at the crate root.

pub mod augment;
pub mod baseline;
pub mod lft;
pub(crate) mod mat;
pub mod norms;
pub mod presets;
pub mod regret;
pub mod riccati;
pub mod signal;
pub mod specfact;
pub mod ss;
pub mod synthesis;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type the toolkit is generic over: a real field with primitive
/// conversions. Implemented for `f32` and `f64`.
pub trait Scalar: RealField + FromPrimitive + ToPrimitive + Copy {
    /// Converts an `f64` constant (tolerances, grid factors) into `Self`.
    fn from_config(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }
}

impl<T> Scalar for T where T: RealField + FromPrimitive + ToPrimitive + Copy {}

/// Errors reported by the toolkit.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("matrix dimensions inconsistent: {0}")]
    DimensionMismatch(String),
    #[error("e^(j{theta}) is an eigenvalue of the state matrix (pole on the unit circle)")]
    SingularAtFrequency { theta: f64 },
    #[error("system is not Schur stable")]
    UnstableSystem,
    #[error("interconnection is ill-posed: {0}")]
    IllPosedInterconnection(String),
    #[error("tail energy did not settle below tolerance within {max_steps} steps")]
    NonConvergedTail { max_steps: usize },
    #[error("DARE has no stabilizing solution: {0}")]
    NoStabilizingSolution(String),
    #[error("closed-loop state matrix is numerically singular (condition estimate {cond:.3e})")]
    SingularClosedLoop { cond: f64 },
    #[error("spectral factorization stabilizability hypothesis violated: {0}")]
    StabilizabilityViolated(String),
    #[error("spectral factorization diverged: {0}")]
    FactorizationDiverged(String),
    #[error("spectral factor feedthrough is singular")]
    NoninvertibleFactor,
    #[error("synthesis assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("nominal (zero-uncertainty) synthesis infeasible: {0}")]
    NominalInfeasible(String),
    #[error("bisection upper bound {hi} is infeasible")]
    UpperBoundInfeasible { hi: f64 },
    #[error("closed loop is unstable")]
    UnstableClosedLoop,
    #[error("block index {index} out of range (structure has {count} blocks)")]
    IndexOutOfRange { index: usize, count: usize },
}

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

pub use augment::{AugmentedPlant, LinearizedInverse};
pub use baseline::NoncausalBaseline;
pub use lft::{BlockStructure, PlantBlocks, RobustPlant, UncertainPlant};
pub use regret::{BaselineMode, BoundReport, RegretCurve};
pub use riccati::{AssumptionReport, CostData, DareSolution};
pub use signal::Signal;
pub use specfact::SpectralFactorPair;
pub use ss::StateSpace;
pub use synthesis::{ScalingSet, SynthOptions, SynthesisResult};

/// Concrete `f64` aliases for the main domain types.
pub type StateSpace64 = StateSpace<f64>;
pub type UncertainPlant64 = UncertainPlant<f64>;
pub type Signal64 = Signal<f64>;
pub type NoncausalBaseline64 = NoncausalBaseline<f64>;
pub type SpectralFactorPair64 = SpectralFactorPair<f64>;
pub type SynthesisResult64 = SynthesisResult<f64>;
