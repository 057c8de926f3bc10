//! The optimal non-causal baseline controller.
//!
//! For a realized plant and quadratic error cost, the controller with
//! full knowledge of the disturbance sequence runs the backward adjoint
//! recursion
//!
//! ```text
//!   v_t = (A - B_u K_x)' (v_{t+1} + X B_d d_t),   v -> 0 at +infinity
//!   u_t = -K_x x_t - K_v v_{t+1} - K_d d_t
//! ```
//!
//! with `X` the stabilizing DARE solution, `K_v = (R + B_u'XB_u)^{-1}B_u'`
//! and `K_d = (R + B_u'XB_u)^{-1}B_u'XB_d`. No causal controller achieves
//! a lower cost for any square-summable disturbance.
//!
//! The realized plant's uncertainty output channel and the controller's
//! adjoint state are distinct objects even though both are traditionally
//! written `v`; here the adjoint state is always called `adjoint_state`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::lft::RealizedPlant;
use crate::mat;
use crate::riccati::{solve_dare, CostData, DareSolution};
use crate::signal::{Signal, TAIL_TOL};
use crate::{Error, Result, Scalar};

/// Relative norm below which the backward adjoint tail is truncated.
const ADJOINT_TAIL_TOL: f64 = 1e-12;
const MAX_WINDOW: usize = 1_000_000;

/// Non-causal baseline for one uncertainty realization.
#[derive(Debug, Clone)]
pub struct NoncausalBaseline<T: Scalar> {
    /// Stabilizing DARE solution for the realized plant.
    pub dare: DareSolution<T>,
    /// Preview gain `(R + B_u'XB_u)^{-1} B_u'`.
    pub k_v: DMatrix<T>,
    /// Direct disturbance gain `(R + B_u'XB_u)^{-1} B_u' X B_d`.
    pub k_d: DMatrix<T>,
    /// `R + B_u' X B_u`.
    pub r_e: DMatrix<T>,
    /// The realized plant the baseline was built for.
    pub plant: RealizedPlant<T>,
}

/// Builds the baseline gains for a realized plant and its error cost.
pub fn build_baseline<T: Scalar>(
    plant: &RealizedPlant<T>,
    cost: &CostData<T>,
) -> Result<NoncausalBaseline<T>> {
    let b_u = plant.b_u();
    let b_d = plant.b_d();
    let dare = solve_dare(&plant.a(), &b_u, cost)?;
    let r_e = &cost.r + b_u.transpose() * &dare.x * &b_u;
    let k_v = mat::solve(&r_e, &b_u.transpose()).ok_or_else(|| {
        Error::NoStabilizingSolution("R + B_u'XB_u is numerically singular".into())
    })?;
    let k_d = &k_v * &dare.x * &b_d;
    Ok(NoncausalBaseline {
        dare,
        k_v,
        k_d,
        r_e,
        plant: plant.clone(),
    })
}

impl<T: Scalar> NoncausalBaseline<T> {
    /// Convenience constructor deriving the cost from the realized error
    /// channel.
    pub fn for_plant(plant: &RealizedPlant<T>) -> Result<Self> {
        build_baseline(plant, &plant.cost())
    }

    /// Runs the non-causal controller against a finitely supported
    /// disturbance: backward adjoint recursion, then the forward plant
    /// recursion. Returns the control and error trajectories and the
    /// closed-loop cost.
    pub fn noncausal_cost(&self, d: &Signal<T>) -> Result<(Signal<T>, Signal<T>, T)> {
        let plant = &self.plant;
        let n_x = plant.ss.n_states();
        let (n_d, n_u, n_e) = (plant.n_d, plant.n_u, plant.n_e);
        if d.is_empty() {
            return Ok((Signal::zero(n_u), Signal::zero(n_e), T::zero()));
        }
        if d.width() != n_d {
            return Err(Error::DimensionMismatch(format!(
                "disturbance width {} does not match {} channels",
                d.width(),
                n_d
            )));
        }
        let a = plant.a();
        let b_d = plant.b_d();
        let b_u = plant.b_u();
        let c_e = plant.c_e();
        let d_eu = plant.d_eu();
        let a_cl_t = self.dare.a_cl.transpose();
        let xbd = &self.dare.x * &b_d;

        // Backward pass: the adjoint state vanishes identically beyond the
        // disturbance support and decays geometrically before it. The
        // pre-roll is extended until the adjoint tail norm is negligible.
        let t_end = d.end(); // v_t = 0 for all t >= t_end
        let mut adjoint: Vec<DVector<T>> = Vec::new(); // adjoint[k] = v_{t_end - 1 - k}
        let mut v = DVector::<T>::zeros(n_x);
        let mut v_max = T::zero();
        let tail_tol = T::from_config(ADJOINT_TAIL_TOL);
        let mut t = t_end - 1;
        loop {
            let dt = d.get(t, n_d);
            v = &a_cl_t * (&v + &xbd * &dt);
            let norm = v.norm();
            if norm > v_max {
                v_max = norm;
            }
            adjoint.push(v.clone());
            let before_support = t < d.start();
            if before_support && norm <= tail_tol * (T::one() + v_max) {
                break;
            }
            if adjoint.len() >= MAX_WINDOW {
                return Err(Error::NonConvergedTail {
                    max_steps: MAX_WINDOW,
                });
            }
            t -= 1;
        }
        let t_start = t; // earliest time with a stored adjoint value
        let v_at = |time: i64, store: &Vec<DVector<T>>| -> DVector<T> {
            // stored for t_start <= time < t_end, zero at or beyond t_end
            if time >= t_end || time < t_start {
                DVector::zeros(n_x)
            } else {
                store[(t_end - 1 - time) as usize].clone()
            }
        };

        // Forward pass from rest at the pre-roll start.
        let mut x = DVector::<T>::zeros(n_x);
        let mut u_traj = Vec::new();
        let mut e_traj = Vec::new();
        let mut cost = T::zero();
        let settle = crate::signal::DEFAULT_SETTLE;
        let mut tail: std::collections::VecDeque<T> = std::collections::VecDeque::new();
        let mut tail_sum = T::zero();
        let mut time = t_start;
        loop {
            let dt = d.get(time, n_d);
            let v_next = v_at(time + 1, &adjoint);
            let u = -&self.dare.k_x * &x - &self.k_v * &v_next - &self.k_d * &dt;
            let e = &c_e * &x + &d_eu * &u;
            let step = e.dot(&e);
            cost += step;
            tail.push_back(step);
            tail_sum += step;
            if tail.len() > settle {
                tail_sum -= tail.pop_front().unwrap();
            }
            x = &a * &x + &b_d * &dt + &b_u * &u;
            u_traj.push(u);
            e_traj.push(e);
            time += 1;
            let past = time >= t_end;
            if past && tail.len() == settle && tail_sum <= T::from_config(TAIL_TOL) * (T::one() + cost)
            {
                break;
            }
            if (time - t_start) as usize >= MAX_WINDOW {
                return Err(Error::NonConvergedTail {
                    max_steps: MAX_WINDOW,
                });
            }
        }
        Ok((
            Signal::new(t_start, u_traj)?,
            Signal::new(t_start, e_traj)?,
            cost,
        ))
    }

    /// Exact frequency response of the non-causal closed loop, the
    /// `d -> e` map `T_nc(e^{j theta})`.
    ///
    /// The adjoint branch transforms to
    /// `v = (I - z A_cl')^{-1} A_cl' X B_d d`, which converges on the unit
    /// circle because `A_cl` is Schur; the plant branch only involves
    /// `(zI - A_cl)^{-1}`.
    pub fn freq_map(&self, theta: T) -> Result<DMatrix<Complex<T>>> {
        let plant = &self.plant;
        let n_x = plant.ss.n_states();
        let z = Complex::new(theta.cos(), theta.sin());
        let a_cl_t = mat::to_complex(&self.dare.a_cl.transpose());
        let xbd = mat::to_complex(&(&self.dare.x * plant.b_d()));
        let eye = DMatrix::<Complex<T>>::identity(n_x, n_x);

        // d -> v
        let m1 = &eye - &a_cl_t * z;
        let h_v = m1
            .lu()
            .solve(&(&a_cl_t * &xbd))
            .ok_or(Error::SingularAtFrequency {
                theta: theta.to_f64().unwrap_or(f64::NAN),
            })?;
        // d -> s with s_t = -K_v v_{t+1} - K_d d_t
        let k_v = mat::to_complex(&self.k_v);
        let k_d = mat::to_complex(&self.k_d);
        let sigma = -(&k_v * &h_v * z) - &k_d;
        // x = (zI - A_cl)^{-1}(B_u s + B_d)
        let a_cl = mat::to_complex(&self.dare.a_cl);
        let b_u = mat::to_complex(&plant.b_u());
        let b_d = mat::to_complex(&plant.b_d());
        let m2 = &eye * z - &a_cl;
        let x_state = m2
            .lu()
            .solve(&(&b_u * &sigma + &b_d))
            .ok_or(Error::SingularAtFrequency {
                theta: theta.to_f64().unwrap_or(f64::NAN),
            })?;
        // u = -K_x x + s, e = C_e x + D_eu u
        let k_x = mat::to_complex(&self.dare.k_x);
        let gamma = -(&k_x * &x_state) + &sigma;
        let c_e = mat::to_complex(&plant.c_e());
        let d_eu = mat::to_complex(&plant.d_eu());
        Ok(&c_e * &x_state + &d_eu * &gamma)
    }
}
