//! Uncertain plants, block-diagonal uncertainty structures and linear
//! fractional transformations.
//!
//! An [`UncertainPlant`] is a realization with inputs `(w, d, u)` and
//! outputs `(v, e, y)`: the `(w, v)` channel pair carries the structured
//! uncertainty `w = Delta v`, `d` is the disturbance, `u` the control,
//! `e` the error and `y` the measurement. The feedthrough blocks
//! `(e,w)`, `(e,d)`, `(y,w)` and `(y,u)` are required to be exactly zero,
//! which guarantees the closed uncertainty loop keeps zero `(e,d)` and
//! `(y,u)` feedthrough for every admissible uncertainty.

use nalgebra::DMatrix;

use crate::mat;
use crate::ss::StateSpace;
use crate::{Error, Result, Scalar};

/// Block-diagonal real uncertainty structure: `S` repeated-scalar blocks
/// `delta_i I_{r_i}` with `|delta_i| <= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    sizes: Vec<usize>,
}

impl BlockStructure {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.iter().any(|&r| r == 0) {
            return Err(Error::DimensionMismatch(
                "uncertainty block sizes must be positive".into(),
            ));
        }
        Ok(Self { sizes })
    }

    /// The empty structure (no uncertainty channels).
    pub fn empty() -> Self {
        Self { sizes: Vec::new() }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of blocks `S`.
    pub fn n_blocks(&self) -> usize {
        self.sizes.len()
    }

    /// Total uncertainty width `n = sum r_i`.
    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Realizes `diag(delta_1 I_{r_1}, ..., delta_S I_{r_S})`.
    pub fn realize<T: Scalar>(&self, deltas: &[T]) -> Result<DMatrix<T>> {
        if deltas.len() != self.n_blocks() {
            return Err(Error::DimensionMismatch(format!(
                "{} scalar parameters supplied for {} blocks",
                deltas.len(),
                self.n_blocks()
            )));
        }
        let n = self.total();
        let mut m = DMatrix::zeros(n, n);
        let mut at = 0;
        for (&d, &r) in deltas.iter().zip(&self.sizes) {
            for k in 0..r {
                m[(at + k, at + k)] = d;
            }
            at += r;
        }
        Ok(m)
    }

    /// Concatenation of two structures (used when the uncertainty is
    /// duplicated around an augmented plant).
    pub fn concat(&self, other: &Self) -> Self {
        let mut sizes = self.sizes.clone();
        sizes.extend_from_slice(&other.sizes);
        Self { sizes }
    }
}

/// The Eq.-style plant blocks, named by channel.
#[derive(Debug, Clone)]
pub struct PlantBlocks<T: Scalar> {
    pub a: DMatrix<T>,
    pub b_w: DMatrix<T>,
    pub b_d: DMatrix<T>,
    pub b_u: DMatrix<T>,
    pub c_v: DMatrix<T>,
    pub d_vw: DMatrix<T>,
    pub d_vd: DMatrix<T>,
    pub d_vu: DMatrix<T>,
    pub c_e: DMatrix<T>,
    pub d_eu: DMatrix<T>,
    pub c_y: DMatrix<T>,
    pub d_yd: DMatrix<T>,
}

/// Uncertain plant with channels `(w, d, u) -> (v, e, y)` and a
/// block-diagonal uncertainty structure on the `(w, v)` pair.
#[derive(Debug, Clone)]
pub struct UncertainPlant<T: Scalar> {
    ss: StateSpace<T>,
    n_d: usize,
    n_u: usize,
    n_e: usize,
    n_y: usize,
    block: BlockStructure,
}

impl<T: Scalar> UncertainPlant<T> {
    /// Assembles the plant from its named blocks.
    pub fn from_blocks(blocks: PlantBlocks<T>, block: BlockStructure) -> Result<Self> {
        let n = block.total();
        let n_x = blocks.a.nrows();
        let (n_d, n_u) = (blocks.b_d.ncols(), blocks.b_u.ncols());
        let (n_e, n_y) = (blocks.c_e.nrows(), blocks.c_y.nrows());
        if blocks.b_w.ncols() != n || blocks.c_v.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "uncertainty channel width {} does not match block structure total {}",
                blocks.b_w.ncols(),
                n
            )));
        }
        let b = mat::hstack(&[&blocks.b_w, &blocks.b_d, &blocks.b_u]);
        let zero_ew = DMatrix::zeros(n_e, n);
        let zero_ed = DMatrix::zeros(n_e, n_d);
        let zero_yw = DMatrix::zeros(n_y, n);
        let zero_yu = DMatrix::zeros(n_y, n_u);
        let c = mat::vstack(&[&blocks.c_v, &blocks.c_e, &blocks.c_y]);
        let d_row_v = mat::hstack(&[&blocks.d_vw, &blocks.d_vd, &blocks.d_vu]);
        let d_row_e = mat::hstack(&[&zero_ew, &zero_ed, &blocks.d_eu]);
        let d_row_y = mat::hstack(&[&zero_yw, &blocks.d_yd, &zero_yu]);
        let d = mat::vstack(&[&d_row_v, &d_row_e, &d_row_y]);
        let ss = StateSpace::new(blocks.a, b, c, d)?;
        debug_assert_eq!(ss.n_states(), n_x);
        Ok(Self {
            ss,
            n_d,
            n_u,
            n_e,
            n_y,
            block,
        })
    }

    /// Wraps an already-assembled realization, verifying the channel
    /// widths and the required feedthrough zero pattern.
    pub fn from_state_space(
        ss: StateSpace<T>,
        n_d: usize,
        n_u: usize,
        n_e: usize,
        n_y: usize,
        block: BlockStructure,
    ) -> Result<Self> {
        let n = block.total();
        if ss.n_inputs() != n + n_d + n_u || ss.n_outputs() != n + n_e + n_y {
            return Err(Error::DimensionMismatch(format!(
                "plant is {}x{}, expected ({}+{}+{}) inputs and ({}+{}+{}) outputs",
                ss.n_outputs(),
                ss.n_inputs(),
                n,
                n_d,
                n_u,
                n,
                n_e,
                n_y
            )));
        }
        let d = ss.d();
        let checks = [
            ("(e,w)", n, n, n_e, n, 0usize),
            ("(e,d)", n, n + n_d, n_e, n_d, 1),
            ("(y,w)", n + n_e, 0, n_y, n, 2),
            ("(y,u)", n + n_e, n + n_d, n_y, n_u, 3),
        ];
        for (name, r0, _c0, rows, cols, idx) in checks {
            let c0 = match idx {
                0 => 0,
                1 => n,
                2 => 0,
                _ => n + n_d,
            };
            let blockview = d.view((r0, c0), (rows, cols));
            if blockview.iter().any(|&x| x != T::zero()) {
                return Err(Error::DimensionMismatch(format!(
                    "feedthrough block {name} must be exactly zero"
                )));
            }
        }
        Ok(Self {
            ss,
            n_d,
            n_u,
            n_e,
            n_y,
            block,
        })
    }

    pub fn ss(&self) -> &StateSpace<T> {
        &self.ss
    }
    pub fn block(&self) -> &BlockStructure {
        &self.block
    }
    pub fn n_unc(&self) -> usize {
        self.block.total()
    }
    pub fn n_dist(&self) -> usize {
        self.n_d
    }
    pub fn n_ctrl(&self) -> usize {
        self.n_u
    }
    pub fn n_err(&self) -> usize {
        self.n_e
    }
    pub fn n_meas(&self) -> usize {
        self.n_y
    }
    pub fn n_states(&self) -> usize {
        self.ss.n_states()
    }

    pub fn a(&self) -> DMatrix<T> {
        self.ss.a().clone()
    }
    pub fn b_w(&self) -> DMatrix<T> {
        self.ss.b().columns(0, self.n_unc()).into_owned()
    }
    pub fn b_d(&self) -> DMatrix<T> {
        self.ss.b().columns(self.n_unc(), self.n_d).into_owned()
    }
    pub fn b_u(&self) -> DMatrix<T> {
        self.ss
            .b()
            .columns(self.n_unc() + self.n_d, self.n_u)
            .into_owned()
    }
    pub fn c_v(&self) -> DMatrix<T> {
        self.ss.c().rows(0, self.n_unc()).into_owned()
    }
    pub fn c_e(&self) -> DMatrix<T> {
        self.ss.c().rows(self.n_unc(), self.n_e).into_owned()
    }
    pub fn c_y(&self) -> DMatrix<T> {
        self.ss.c().rows(self.n_unc() + self.n_e, self.n_y).into_owned()
    }
    pub fn d_vw(&self) -> DMatrix<T> {
        self.ss
            .d()
            .view((0, 0), (self.n_unc(), self.n_unc()))
            .into_owned()
    }
    pub fn d_vd(&self) -> DMatrix<T> {
        self.ss
            .d()
            .view((0, self.n_unc()), (self.n_unc(), self.n_d))
            .into_owned()
    }
    pub fn d_vu(&self) -> DMatrix<T> {
        self.ss
            .d()
            .view((0, self.n_unc() + self.n_d), (self.n_unc(), self.n_u))
            .into_owned()
    }
    pub fn d_eu(&self) -> DMatrix<T> {
        self.ss
            .d()
            .view(
                (self.n_unc(), self.n_unc() + self.n_d),
                (self.n_e, self.n_u),
            )
            .into_owned()
    }
    pub fn d_yd(&self) -> DMatrix<T> {
        self.ss
            .d()
            .view(
                (self.n_unc() + self.n_e, self.n_unc()),
                (self.n_y, self.n_d),
            )
            .into_owned()
    }

    /// True when `I - D_vw Delta` is invertible (the uncertainty loop is
    /// well posed).
    pub fn is_well_posed(&self, delta: &DMatrix<T>) -> bool {
        let n = self.n_unc();
        let m = DMatrix::identity(n, n) - self.d_vw() * delta;
        mat::rcond(&m) > T::from_config(1e-12)
    }

    /// Closes `w = Delta v` around the top channels, producing the
    /// realized `(d, u) -> (e, y)` plant. The zero feedthrough pattern
    /// guarantees the result has zero `(e,d)` and `(y,u)` feedthrough.
    pub fn close_uncertainty(&self, delta: &DMatrix<T>) -> Result<StateSpace<T>> {
        let n = self.n_unc();
        if delta.nrows() != n || delta.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "uncertainty is {}x{}, expected {}x{}",
                delta.nrows(),
                delta.ncols(),
                n,
                n
            )));
        }
        lft_upper(&self.ss, delta)
    }

    /// The realized plant for a structured sample `diag(delta_i I_{r_i})`.
    pub fn close_structured(&self, deltas: &[T]) -> Result<StateSpace<T>> {
        self.close_uncertainty(&self.block.realize(deltas)?)
    }

    /// Closes the uncertainty and keeps the channel bookkeeping.
    pub fn realize(&self, delta: &DMatrix<T>) -> Result<RealizedPlant<T>> {
        Ok(RealizedPlant {
            ss: self.close_uncertainty(delta)?,
            n_d: self.n_d,
            n_u: self.n_u,
            n_e: self.n_e,
            n_y: self.n_y,
        })
    }
}

/// A realized `(d, u) -> (e, y)` plant produced by closing the
/// uncertainty channels; keeps the channel partition. The `(e,d)` and
/// `(y,u)` feedthrough blocks are zero by construction.
#[derive(Debug, Clone)]
pub struct RealizedPlant<T: Scalar> {
    pub ss: StateSpace<T>,
    pub n_d: usize,
    pub n_u: usize,
    pub n_e: usize,
    pub n_y: usize,
}

impl<T: Scalar> RealizedPlant<T> {
    pub fn a(&self) -> DMatrix<T> {
        self.ss.a().clone()
    }
    pub fn b_d(&self) -> DMatrix<T> {
        self.ss.b().columns(0, self.n_d).into_owned()
    }
    pub fn b_u(&self) -> DMatrix<T> {
        self.ss.b().columns(self.n_d, self.n_u).into_owned()
    }
    pub fn c_e(&self) -> DMatrix<T> {
        self.ss.c().rows(0, self.n_e).into_owned()
    }
    pub fn c_y(&self) -> DMatrix<T> {
        self.ss.c().rows(self.n_e, self.n_y).into_owned()
    }
    pub fn d_eu(&self) -> DMatrix<T> {
        self.ss
            .d()
            .view((0, self.n_d), (self.n_e, self.n_u))
            .into_owned()
    }
    pub fn d_yd(&self) -> DMatrix<T> {
        self.ss.d().view((self.n_e, 0), (self.n_y, self.n_d)).into_owned()
    }

    /// Quadratic cost of the realized error channel.
    pub fn cost(&self) -> crate::riccati::CostData<T> {
        crate::riccati::CostData::from_error_channel(&self.c_e(), &self.d_eu())
    }

    /// Wraps a plain partitioned system.
    pub fn from_parts(ss: StateSpace<T>, n_d: usize, n_e: usize) -> Result<Self> {
        if n_d > ss.n_inputs() || n_e > ss.n_outputs() {
            return Err(Error::DimensionMismatch(
                "partition exceeds the system channel counts".into(),
            ));
        }
        Ok(Self {
            n_d,
            n_u: ss.n_inputs() - n_d,
            n_e,
            n_y: ss.n_outputs() - n_e,
            ss,
        })
    }
}

/// Closes `w = Delta v` around the leading input/output channels of a
/// partitioned system. The uncertainty input width is `delta.nrows()`
/// (the `w` channels) and its output width `delta.ncols()` (the `v`
/// channels).
pub fn lft_upper<T: Scalar>(sys: &StateSpace<T>, delta: &DMatrix<T>) -> Result<StateSpace<T>> {
    let n_w = delta.nrows();
    let n_v = delta.ncols();
    if n_w > sys.n_inputs() || n_v > sys.n_outputs() {
        return Err(Error::DimensionMismatch(
            "uncertainty larger than the partitioned channels".into(),
        ));
    }
    let n_r = sys.n_inputs() - n_w;
    let n_z = sys.n_outputs() - n_v;
    let b1 = sys.b().columns(0, n_w).into_owned();
    let b2 = sys.b().columns(n_w, n_r).into_owned();
    let c1 = sys.c().rows(0, n_v).into_owned();
    let c2 = sys.c().rows(n_v, n_z).into_owned();
    let d11 = sys.d().view((0, 0), (n_v, n_w)).into_owned();
    let d12 = sys.d().view((0, n_w), (n_v, n_r)).into_owned();
    let d21 = sys.d().view((n_v, 0), (n_z, n_w)).into_owned();
    let d22 = sys.d().view((n_v, n_w), (n_z, n_r)).into_owned();

    // Lambda = Delta (I - D11 Delta)^{-1}
    let loop_mat = DMatrix::identity(n_v, n_v) - &d11 * delta;
    if mat::rcond(&loop_mat) <= T::from_config(1e-12) {
        return Err(Error::IllPosedInterconnection(
            "I - D_vw Delta is singular".into(),
        ));
    }
    let lambda = delta
        * mat::solve(&loop_mat, &DMatrix::identity(n_v, n_v)).ok_or_else(|| {
            Error::IllPosedInterconnection("I - D_vw Delta is singular".into())
        })?;

    let a = sys.a() + &b1 * &lambda * &c1;
    let b = &b2 + &b1 * &lambda * &d12;
    let c = &c2 + &d21 * &lambda * &c1;
    let d = &d22 + &d21 * &lambda * &d12;
    StateSpace::new(a, b, c, d)
}

/// Closes a controller `u = K y` around the trailing input/output
/// channels of a partitioned system. Plant states come first in the
/// closed-loop state vector.
pub fn lft_lower<T: Scalar>(
    sys: &StateSpace<T>,
    n_u: usize,
    n_y: usize,
    k: &StateSpace<T>,
) -> Result<StateSpace<T>> {
    if k.n_inputs() != n_y || k.n_outputs() != n_u {
        return Err(Error::DimensionMismatch(format!(
            "controller is {}x{}, expected {}x{}",
            k.n_outputs(),
            k.n_inputs(),
            n_u,
            n_y
        )));
    }
    if n_u > sys.n_inputs() || n_y > sys.n_outputs() {
        return Err(Error::DimensionMismatch(
            "controller larger than the partitioned channels".into(),
        ));
    }
    let n_r = sys.n_inputs() - n_u;
    let n_z = sys.n_outputs() - n_y;
    let b1 = sys.b().columns(0, n_r).into_owned();
    let b2 = sys.b().columns(n_r, n_u).into_owned();
    let c1 = sys.c().rows(0, n_z).into_owned();
    let c2 = sys.c().rows(n_z, n_y).into_owned();
    let d11 = sys.d().view((0, 0), (n_z, n_r)).into_owned();
    let d12 = sys.d().view((0, n_r), (n_z, n_u)).into_owned();
    let d21 = sys.d().view((n_z, 0), (n_y, n_r)).into_owned();
    let d22 = sys.d().view((n_z, n_r), (n_y, n_u)).into_owned();
    let (ak, bk, ck, dk) = (k.a(), k.b(), k.c(), k.d());

    // Phi = (I - D22 DK)^{-1}, Psi = (I - DK D22)^{-1}
    let phi_m = DMatrix::identity(n_y, n_y) - &d22 * dk;
    let psi_m = DMatrix::identity(n_u, n_u) - dk * &d22;
    if mat::rcond(&phi_m) <= T::from_config(1e-12) {
        return Err(Error::IllPosedInterconnection(
            "algebraic loop: I - D_yu D_K is singular".into(),
        ));
    }
    let phi = mat::inverse(&phi_m).ok_or_else(|| {
        Error::IllPosedInterconnection("algebraic loop: I - D_yu D_K is singular".into())
    })?;
    let psi = mat::inverse(&psi_m).ok_or_else(|| {
        Error::IllPosedInterconnection("algebraic loop: I - D_K D_yu is singular".into())
    })?;

    let psi_dk = &psi * dk;
    let a11 = sys.a() + &b2 * &psi_dk * &c2;
    let a12 = &b2 * &psi * ck;
    let a21 = bk * &phi * &c2;
    let a22 = ak + bk * &d22 * &psi * ck;
    let a = mat::vstack(&[
        &mat::hstack(&[&a11, &a12]),
        &mat::hstack(&[&a21, &a22]),
    ]);
    let bcl1 = &b1 + &b2 * &psi_dk * &d21;
    let bcl2 = bk * &phi * &d21;
    let b = mat::vstack(&[&bcl1, &bcl2]);
    let ccl1 = &c1 + &d12 * &psi_dk * &c2;
    let ccl2 = &d12 * &psi * ck;
    let c = mat::hstack(&[&ccl1, &ccl2]);
    let d = &d11 + &d12 * &psi_dk * &d21;
    StateSpace::new(a, b, c, d)
}

/// Uncertain plant together with performance channels, without the
/// strict feedthrough-zero pattern of [`UncertainPlant`]. This is the
/// carrier for robust synthesis: augmented plants pick up nonzero
/// `(y, w)`-style feedthrough blocks that the strict type forbids.
#[derive(Debug, Clone)]
pub struct RobustPlant<T: Scalar> {
    pub ss: StateSpace<T>,
    pub block: BlockStructure,
    pub n_d: usize,
    pub n_u: usize,
    pub n_e: usize,
    pub n_y: usize,
}

impl<T: Scalar> RobustPlant<T> {
    pub fn n_unc(&self) -> usize {
        self.block.total()
    }

    /// Closes the uncertainty channels, leaving `(d, u) -> (e, y)`.
    pub fn close_uncertainty(&self, delta: &DMatrix<T>) -> Result<StateSpace<T>> {
        lft_upper(&self.ss, delta)
    }

    /// Full closed loop `d -> e` for a given uncertainty and controller.
    pub fn closed_loop(
        &self,
        delta: &DMatrix<T>,
        k: &StateSpace<T>,
    ) -> Result<StateSpace<T>> {
        let open = self.close_uncertainty(delta)?;
        lft_lower(&open, self.n_u, self.n_y, k)
    }

    /// Closes only the controller, leaving `(w, d) -> (v, e)` open for
    /// robustness analysis.
    pub fn close_controller(&self, k: &StateSpace<T>) -> Result<StateSpace<T>> {
        lft_lower(&self.ss, self.n_u, self.n_y, k)
    }

    /// Applies constant per-block scalings `diag(d_i I_{r_i})` to the
    /// uncertainty channels: `v` rows multiplied by `d_i`, `w` columns by
    /// `1/d_i`. Constant scalings commute with the uncertainty, so the
    /// scaled plant represents the same robust performance problem.
    pub fn scaled(&self, scales: &[T]) -> Result<Self> {
        if scales.len() != self.block.n_blocks() {
            return Err(Error::DimensionMismatch(format!(
                "{} scales for {} blocks",
                scales.len(),
                self.block.n_blocks()
            )));
        }
        let n = self.n_unc();
        let mut row_scale = Vec::with_capacity(n);
        for (&s, &r) in scales.iter().zip(self.block.sizes()) {
            for _ in 0..r {
                row_scale.push(s);
            }
        }
        let mut b = self.ss.b().clone();
        let mut c = self.ss.c().clone();
        let mut d = self.ss.d().clone();
        for (j, &s) in row_scale.iter().enumerate() {
            let inv = T::one() / s;
            // w column j scaled by 1/d_i
            for i in 0..b.nrows() {
                b[(i, j)] *= inv;
            }
            for i in 0..d.nrows() {
                d[(i, j)] *= inv;
            }
            // v row j scaled by d_i
            for kcol in 0..c.ncols() {
                c[(j, kcol)] *= s;
            }
            for kcol in 0..d.ncols() {
                d[(j, kcol)] *= s;
            }
        }
        Ok(Self {
            ss: StateSpace::new(self.ss.a().clone(), b, c, d)?,
            block: self.block.clone(),
            n_d: self.n_d,
            n_u: self.n_u,
            n_e: self.n_e,
            n_y: self.n_y,
        })
    }
}

impl<T: Scalar> From<&UncertainPlant<T>> for RobustPlant<T> {
    fn from(p: &UncertainPlant<T>) -> Self {
        Self {
            ss: p.ss().clone(),
            block: p.block().clone(),
            n_d: p.n_dist(),
            n_u: p.n_ctrl(),
            n_e: p.n_err(),
            n_y: p.n_meas(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn demo_plant() -> UncertainPlant<f64> {
        crate::presets::scalar_benchmark()
    }

    #[test]
    fn zero_closure_is_subsystem() {
        let p = demo_plant();
        let sub = p.close_uncertainty(&dmatrix![0.0]).unwrap();
        assert_eq!(sub.n_inputs(), 2);
        assert_eq!(sub.n_outputs(), 3);
        assert_relative_eq!(sub.a()[(0, 0)], 0.5);
        assert_relative_eq!(sub.b()[(0, 0)], 5.0);
        assert_relative_eq!(sub.b()[(0, 1)], 1.0);
    }

    #[test]
    fn closed_a_matches_affine_family() {
        let p = demo_plant();
        let up = p.close_uncertainty(&dmatrix![1.0]).unwrap();
        assert_relative_eq!(up.a()[(0, 0)], 1.4, epsilon = 1e-15);
        let dn = p.close_uncertainty(&dmatrix![-1.0]).unwrap();
        assert_relative_eq!(dn.a()[(0, 0)], -0.4, epsilon = 1e-15);
    }

    #[test]
    fn closed_plant_keeps_zero_feedthrough() {
        let p = demo_plant();
        let up = p.close_uncertainty(&dmatrix![0.7]).unwrap();
        // (e, d) and (y, u) feedthrough stay exactly zero
        assert_eq!(up.d()[(0, 0)], 0.0);
        assert_eq!(up.d()[(1, 0)], 0.0);
        assert_eq!(up.d()[(2, 1)], 0.0);
    }

    #[test]
    fn ill_posed_loop_detected() {
        let p = UncertainPlant::from_blocks(
            PlantBlocks {
                a: dmatrix![0.5],
                b_w: dmatrix![1.0],
                b_d: dmatrix![1.0],
                b_u: dmatrix![1.0],
                c_v: dmatrix![1.0],
                d_vw: dmatrix![1.0],
                d_vd: dmatrix![0.0],
                d_vu: dmatrix![0.0],
                c_e: dmatrix![1.0],
                d_eu: dmatrix![1.0],
                c_y: dmatrix![1.0],
                d_yd: dmatrix![1.0],
            },
            BlockStructure::new(vec![1]).unwrap(),
        )
        .unwrap();
        assert!(!p.is_well_posed(&dmatrix![1.0]));
        assert!(matches!(
            p.close_uncertainty(&dmatrix![1.0]),
            Err(Error::IllPosedInterconnection(_))
        ));
        assert!(p.is_well_posed(&dmatrix![0.5]));
    }

    #[test]
    fn lower_lft_static_feedback() {
        // x+ = 0.5 x + d + u, e = x, y = x; u = -0.5 y gives closed A = 0
        let sys = StateSpace::new(
            dmatrix![0.5],
            dmatrix![1.0, 1.0],
            dmatrix![1.0; 1.0],
            dmatrix![0.0, 0.0; 0.0, 0.0],
        )
        .unwrap();
        let k = StateSpace::static_gain(dmatrix![-0.5]);
        let cl = lft_lower(&sys, 1, 1, &k).unwrap();
        assert_relative_eq!(cl.a()[(0, 0)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn cascade_matches_direct_interconnection() {
        let p = demo_plant();
        let k = StateSpace::static_gain(dmatrix![-0.3]);
        let delta = dmatrix![0.4];
        let open = p.close_uncertainty(&delta).unwrap();
        let cl = lft_lower(&open, 1, 1, &k).unwrap();
        // direct scalar closed loop: x+ = (A_d - 0.3 B_u) x + (B_d - 0.3 B_u) d
        // with y = x + d, u = -0.3(x + d)
        let a_d = 0.5 + 0.9 * 0.4;
        assert_relative_eq!(cl.a()[(0, 0)], a_d - 0.3, epsilon = 1e-14);
        assert_relative_eq!(cl.b()[(0, 0)], 5.0 - 0.3, epsilon = 1e-14);
    }

    #[test]
    fn zero_controller_recovers_open_loop() {
        let p = demo_plant();
        let open = p.close_uncertainty(&dmatrix![0.0]).unwrap();
        let k = StateSpace::static_gain(dmatrix![0.0]);
        let cl = lft_lower(&open, 1, 1, &k).unwrap();
        for th in [0.0, 0.5, 2.0] {
            let g1 = cl.freq_response(th).unwrap();
            let g2 = open.freq_response(th).unwrap();
            // d -> e rows coincide with the open-loop subsystem
            assert_relative_eq!(g1[(0, 0)].re, g2[(0, 0)].re, epsilon = 1e-13);
            assert_relative_eq!(g1[(1, 0)].im, g2[(1, 0)].im, epsilon = 1e-13);
        }
    }

    #[test]
    fn block_structure_realize() {
        let b = BlockStructure::new(vec![1, 2]).unwrap();
        let m = b.realize(&[0.5, -1.0]).unwrap();
        assert_eq!(m.nrows(), 3);
        assert_eq!(m[(0, 0)], 0.5);
        assert_eq!(m[(1, 1)], -1.0);
        assert_eq!(m[(2, 2)], -1.0);
        assert_eq!(m[(0, 1)], 0.0);
    }
}
