//! Bilinear (Tustin) maps between discrete and continuous realizations.
//!
//! The substitution `z = (1 + s)/(1 - s)` maps the unit circle onto the
//! imaginary axis and preserves the H-infinity norm exactly, with
//! `e^{j theta} <-> j tan(theta/2)`. Discrete poles at `z = -1`
//! (continuous poles at `s = 1`) make the transform improper and are
//! rejected.

use nalgebra::DMatrix;

use crate::mat;
use crate::ss::StateSpace;
use crate::{Error, Result, Scalar};

/// Discrete realization to its continuous bilinear equivalent.
pub fn to_continuous<T: Scalar>(sys: &StateSpace<T>) -> Result<StateSpace<T>> {
    let n = sys.n_states();
    let eye = DMatrix::<T>::identity(n, n);
    let api = sys.a() + &eye;
    if mat::rcond(&api) <= T::from_config(1e-12) {
        return Err(Error::AssumptionViolated(
            "plant has a pole at z = -1 (bilinear transform singularity)".into(),
        ));
    }
    let api_inv = mat::inverse(&api).unwrap();
    let rt2 = T::from_config(2.0).sqrt();
    let a = &api_inv * (sys.a() - &eye);
    let b = (&api_inv * sys.b()) * rt2;
    let c = (sys.c() * &api_inv) * rt2;
    let d = sys.d() - sys.c() * &api_inv * sys.b();
    StateSpace::new(a, b, c, d)
}

/// Continuous realization back to discrete.
pub fn to_discrete<T: Scalar>(sys: &StateSpace<T>) -> Result<StateSpace<T>> {
    let n = sys.n_states();
    let eye = DMatrix::<T>::identity(n, n);
    let ima = &eye - sys.a();
    if mat::rcond(&ima) <= T::from_config(1e-12) {
        return Err(Error::AssumptionViolated(
            "controller has a pole at s = 1 (bilinear transform singularity)".into(),
        ));
    }
    let ima_inv = mat::inverse(&ima).unwrap();
    let rt2 = T::from_config(2.0).sqrt();
    let a = &ima_inv * (&eye + sys.a());
    let b = (&ima_inv * sys.b()) * rt2;
    let c = (sys.c() * &ima_inv) * rt2;
    let d = sys.d() + sys.c() * &ima_inv * sys.b();
    StateSpace::new(a, b, c, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    #[test]
    fn round_trip_recovers_response() {
        let sys = StateSpace::new(
            dmatrix![0.5, 0.2; -0.1, 0.3],
            dmatrix![1.0; 0.5],
            dmatrix![1.0, -2.0],
            dmatrix![0.3],
        )
        .unwrap();
        let back = to_discrete(&to_continuous(&sys).unwrap()).unwrap();
        for k in 0..9 {
            let th = std::f64::consts::PI * k as f64 / 9.0;
            let g1 = sys.freq_response(th).unwrap()[(0, 0)];
            let g2 = back.freq_response(th).unwrap()[(0, 0)];
            assert_relative_eq!(g1.re, g2.re, epsilon = 1e-12);
            assert_relative_eq!(g1.im, g2.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn frequency_axis_mapping() {
        // G_d(e^{j theta}) = G_c(j tan(theta/2))
        let sys = StateSpace::new(dmatrix![0.5], dmatrix![1.0], dmatrix![1.0], dmatrix![0.2])
            .unwrap();
        let cont = to_continuous(&sys).unwrap();
        for th in [0.0, 0.4, 1.0, 2.0] {
            let gd = sys.freq_response(th).unwrap()[(0, 0)];
            // continuous response at s = j tan(theta/2)
            let s = num_complex::Complex::new(0.0, (th / 2.0f64).tan());
            let a = cont.a()[(0, 0)];
            let gc = cont.c()[(0, 0)] * cont.b()[(0, 0)] / (s - a) + cont.d()[(0, 0)];
            assert_relative_eq!(gd.re, gc.re, epsilon = 1e-12);
            assert_relative_eq!(gd.im, gc.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn stability_regions_map() {
        let stable = StateSpace::new(dmatrix![0.9], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0])
            .unwrap();
        let c = to_continuous(&stable).unwrap();
        assert!(c.a()[(0, 0)] < 0.0);
        let unstable =
            StateSpace::new(dmatrix![1.4], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0]).unwrap();
        let c = to_continuous(&unstable).unwrap();
        assert!(c.a()[(0, 0)] > 0.0);
    }

    #[test]
    fn pole_at_minus_one_rejected() {
        let sys = StateSpace::new(dmatrix![-1.0], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0])
            .unwrap();
        assert!(matches!(
            to_continuous(&sys),
            Err(Error::AssumptionViolated(_))
        ));
    }
}
