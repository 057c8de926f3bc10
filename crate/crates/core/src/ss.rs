//! Discrete-time state-space realizations and their algebra.
//!
//! A [`StateSpace`] holds the realization
//!
//! ```text
//!   x_{t+1} = A x_t + B d_t
//!   e_t     = C x_t + D d_t
//! ```
//!
//! with transfer function `G(z) = C (zI - A)^{-1} B + D`. The state count
//! may be zero, in which case the system is the static gain `D`. In every
//! interconnection the upstream system's states come first in the combined
//! state vector, so realizations are reproducible.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::mat;
use crate::{Error, Result, Scalar};

/// Relative margin for the strict Schur test: spectral radius must be
/// below `1 - SCHUR_MARGIN`. Strict stability is required downstream by
/// the Riccati solvers and the norm computations.
pub const SCHUR_MARGIN: f64 = 1e-9;

/// A discrete-time LTI realization `(A, B, C, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace<T: Scalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
}

impl<T: Scalar> StateSpace<T> {
    /// Builds a realization, checking dimensional consistency.
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "B has {} rows, expected {}",
                b.nrows(),
                n
            )));
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "C has {} columns, expected {}",
                c.ncols(),
                n
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// A memoryless system `e = D d`.
    pub fn static_gain(d: DMatrix<T>) -> Self {
        let (p, m) = (d.nrows(), d.ncols());
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
        }
    }

    /// The identity system of the given width.
    pub fn identity(width: usize) -> Self {
        Self::static_gain(DMatrix::identity(width, width))
    }

    /// The zero system with the given output/input widths.
    pub fn zero(n_out: usize, n_in: usize) -> Self {
        Self::static_gain(DMatrix::zeros(n_out, n_in))
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Frequency response `G(e^{j theta}) = C (e^{j theta} I - A)^{-1} B + D`.
    ///
    /// Fails with [`Error::SingularAtFrequency`] when `e^{j theta}` is an
    /// eigenvalue of `A` (a pole on the unit circle).
    pub fn freq_response(&self, theta: T) -> Result<DMatrix<Complex<T>>> {
        let n = self.n_states();
        let dc = mat::to_complex(&self.d);
        if n == 0 {
            return Ok(dc);
        }
        let z = Complex::new(theta.cos(), theta.sin());
        let mut zi_a = mat::to_complex(&self.a).map(|x| -x);
        for i in 0..n {
            zi_a[(i, i)] += z;
        }
        let lu = zi_a.lu();
        // Pole-on-circle detection via the LU diagonal of (zI - A).
        let umin = (0..n)
            .map(|i| mat::cmod(lu.u()[(i, i)]))
            .fold(T::max_value().unwrap(), |a, b| if b < a { b } else { a });
        let umax = (0..n)
            .map(|i| mat::cmod(lu.u()[(i, i)]))
            .fold(T::zero(), |a, b| if b > a { b } else { a });
        if umin <= T::from_config(1e-14) * (T::one() + umax) {
            return Err(Error::SingularAtFrequency {
                theta: theta.to_f64().unwrap_or(f64::NAN),
            });
        }
        let x = lu
            .solve(&mat::to_complex(&self.b))
            .ok_or(Error::SingularAtFrequency {
                theta: theta.to_f64().unwrap_or(f64::NAN),
            })?;
        Ok(mat::to_complex(&self.c) * x + dc)
    }

    /// Largest singular value of the frequency response at `theta`.
    pub fn gain_at(&self, theta: T) -> Result<T> {
        Ok(mat::max_singular_value_c(&self.freq_response(theta)?))
    }

    /// True when the state matrix is Schur stable (see [`is_schur`]).
    pub fn is_stable(&self) -> bool {
        is_schur(&self.a)
    }

    /// Series composition `self ∘ rhs` (input feeds `rhs` first). The
    /// frequency response is the pointwise product `self(z) * rhs(z)`.
    /// Upstream (`rhs`) states come first.
    pub fn series(&self, rhs: &Self) -> Result<Self> {
        if self.n_inputs() != rhs.n_outputs() {
            return Err(Error::DimensionMismatch(format!(
                "series: downstream expects {} inputs, upstream has {} outputs",
                self.n_inputs(),
                rhs.n_outputs()
            )));
        }
        let a = mat::block_diag(&[&rhs.a, &self.a]);
        let mut a = a;
        // downstream state driven by upstream output
        a.view_mut((rhs.n_states(), 0), (self.n_states(), rhs.n_states()))
            .copy_from(&(&self.b * &rhs.c));
        let b = mat::vstack(&[&rhs.b, &(&self.b * &rhs.d)]);
        let c = mat::hstack(&[&(&self.d * &rhs.c), &self.c]);
        let d = &self.d * &rhs.d;
        Self::new(a, b, c, d)
    }

    /// Parallel sum: same input, outputs added. `self` states first.
    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.n_inputs() != rhs.n_inputs() || self.n_outputs() != rhs.n_outputs() {
            return Err(Error::DimensionMismatch(
                "add: systems must share input and output widths".into(),
            ));
        }
        let a = mat::block_diag(&[&self.a, &rhs.a]);
        let b = mat::vstack(&[&self.b, &rhs.b]);
        let c = mat::hstack(&[&self.c, &rhs.c]);
        let d = &self.d + &rhs.d;
        Self::new(a, b, c, d)
    }

    /// Output negation.
    pub fn neg(&self) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            c: -&self.c,
            d: -&self.d,
        }
    }

    /// Scales every output by a constant factor.
    pub fn scale_output(&self, k: T) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            c: &self.c * k,
            d: &self.d * k,
        }
    }

    /// Parallel difference `self - rhs`.
    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.add(&rhs.neg())
    }

    /// Diagonal stacking: inputs and outputs concatenated, no coupling.
    pub fn append(&self, rhs: &Self) -> Self {
        Self {
            a: mat::block_diag(&[&self.a, &rhs.a]),
            b: mat::block_diag(&[&self.b, &rhs.b]),
            c: mat::block_diag(&[&self.c, &rhs.c]),
            d: mat::block_diag(&[&self.d, &rhs.d]),
        }
    }

    /// Keeps the selected input and output channels.
    pub fn select(&self, outputs: std::ops::Range<usize>, inputs: std::ops::Range<usize>) -> Self {
        let c = self.c.rows(outputs.start, outputs.len()).into_owned();
        let d = self
            .d
            .view((outputs.start, inputs.start), (outputs.len(), inputs.len()))
            .into_owned();
        let b = self.b.columns(inputs.start, inputs.len()).into_owned();
        Self {
            a: self.a.clone(),
            b,
            c,
            d,
        }
    }
}

/// Strict Schur stability: spectral radius `< 1 - 1e-9`.
pub fn is_schur<T: Scalar>(a: &DMatrix<T>) -> bool {
    assert_eq!(a.nrows(), a.ncols(), "is_schur expects a square matrix");
    mat::spectral_radius(a) < T::one() - T::from_config(SCHUR_MARGIN)
}

/// Spectral radius of a square real matrix.
pub fn spectral_radius<T: Scalar>(a: &DMatrix<T>) -> T {
    mat::spectral_radius(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn scalar_sys(a: f64, b: f64, c: f64, d: f64) -> StateSpace<f64> {
        StateSpace::new(
            dmatrix![a],
            dmatrix![b],
            dmatrix![c],
            dmatrix![d],
        )
        .unwrap()
    }

    #[test]
    fn freq_response_static_gain() {
        let sys = StateSpace::static_gain(dmatrix![2.0]);
        let g = sys.freq_response(1.0).unwrap();
        assert_relative_eq!(g[(0, 0)].re, 2.0);
        assert_relative_eq!(g[(0, 0)].im, 0.0);
    }

    #[test]
    fn freq_response_scalar_lag() {
        let sys = scalar_sys(0.5, 1.0, 1.0, 0.0);
        let g0 = sys.freq_response(0.0).unwrap();
        assert_relative_eq!(g0[(0, 0)].re, 2.0, epsilon = 1e-14);
        let gpi = sys.freq_response(std::f64::consts::PI).unwrap();
        // 1/(-1 - 0.5) = -2/3, independently via complex arithmetic
        let z = num_complex::Complex::new(-1.0f64, 0.0);
        let oracle = 1.0 / (z - 0.5);
        assert_relative_eq!(gpi[(0, 0)].re, oracle.re, epsilon = 1e-14);
        assert_relative_eq!(gpi[(0, 0)].im, oracle.im, epsilon = 1e-14);
    }

    #[test]
    fn freq_response_pole_on_circle_errors() {
        let sys = scalar_sys(1.0, 1.0, 1.0, 0.0);
        assert!(matches!(
            sys.freq_response(0.0),
            Err(Error::SingularAtFrequency { .. })
        ));
    }

    #[test]
    fn schur_test_examples() {
        assert!(is_schur(&dmatrix![0.5]));
        assert!(!is_schur(&dmatrix![1.4]));
        // eigenvalues 0.5, 0.5 from the characteristic polynomial z^2 - z + 0.25
        let a = dmatrix![0.0, 1.0; -0.25, 1.0];
        assert!(is_schur(&a));
        assert_relative_eq!(spectral_radius(&a), 0.5, epsilon = 1e-10);
    }

    #[test]
    fn series_of_gains() {
        let g1 = StateSpace::static_gain(dmatrix![2.0]);
        let g2 = StateSpace::static_gain(dmatrix![3.0]);
        let p = g1.series(&g2).unwrap();
        assert_relative_eq!(p.d()[(0, 0)], 6.0);
    }

    #[test]
    fn series_with_identity_preserves_response() {
        let g = scalar_sys(0.4, 1.0, 2.0, 0.3);
        let p = g.series(&StateSpace::identity(1)).unwrap();
        for k in 0..8 {
            let th = std::f64::consts::PI * k as f64 / 7.0;
            let lhs = p.freq_response(th).unwrap();
            let rhs = g.freq_response(th).unwrap();
            assert_relative_eq!(lhs[(0, 0)].re, rhs[(0, 0)].re, epsilon = 1e-13);
            assert_relative_eq!(lhs[(0, 0)].im, rhs[(0, 0)].im, epsilon = 1e-13);
        }
    }

    #[test]
    fn series_frequency_product_identity() {
        let g1 = StateSpace::new(
            dmatrix![0.3, 0.1; 0.0, -0.4],
            dmatrix![1.0; 0.5],
            dmatrix![1.0, -1.0],
            dmatrix![0.2],
        )
        .unwrap();
        let g2 = StateSpace::new(
            dmatrix![0.6, -0.2; 0.1, 0.0],
            dmatrix![0.0; 1.0],
            dmatrix![2.0, 0.3],
            dmatrix![-0.1],
        )
        .unwrap();
        let p = g1.series(&g2).unwrap();
        for k in 0..16 {
            let th = std::f64::consts::PI * k as f64 / 15.0;
            let lhs = p.freq_response(th).unwrap()[(0, 0)];
            let rhs = g1.freq_response(th).unwrap()[(0, 0)] * g2.freq_response(th).unwrap()[(0, 0)];
            assert_relative_eq!(lhs.re, rhs.re, epsilon = 1e-12);
            assert_relative_eq!(lhs.im, rhs.im, epsilon = 1e-12);
        }
    }
}
