//! Finitely supported two-sided signals and time-domain simulation.

use nalgebra::DVector;
use num_complex::Complex;

use crate::ss::StateSpace;
use crate::{Error, Result, Scalar};

/// Default trailing window checked for settling.
pub const DEFAULT_SETTLE: usize = 50;
/// Tail energy tolerance relative to the accumulated cost.
pub const TAIL_TOL: f64 = 1e-12;
/// Hard cap on simulated steps before giving up on settling.
const MAX_STEPS: usize = 1_000_000;

/// A finitely supported two-sided vector sequence: zero outside the
/// stored window `[start, start + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T: Scalar> {
    start: i64,
    samples: Vec<DVector<T>>,
}

impl<T: Scalar> Signal<T> {
    pub fn new(start: i64, samples: Vec<DVector<T>>) -> Result<Self> {
        if let Some(first) = samples.first() {
            if samples.iter().any(|s| s.len() != first.len()) {
                return Err(Error::DimensionMismatch(
                    "signal samples must share one width".into(),
                ));
            }
        }
        Ok(Self { start, samples })
    }

    /// The zero signal of a given width (empty support).
    pub fn zero(width: usize) -> Self {
        let _ = width;
        Self {
            start: 0,
            samples: Vec::new(),
        }
    }

    /// Unit impulse in channel `channel` at time `t`.
    pub fn impulse(width: usize, channel: usize, t: i64) -> Self {
        let mut v = DVector::zeros(width);
        v[channel] = T::one();
        Self {
            start: t,
            samples: vec![v],
        }
    }

    pub fn from_scalars(start: i64, values: &[T]) -> Self {
        Self {
            start,
            samples: values.iter().map(|&v| DVector::from_element(1, v)).collect(),
        }
    }

    pub fn start(&self) -> i64 {
        self.start
    }
    /// One past the last stored sample.
    pub fn end(&self) -> i64 {
        self.start + self.samples.len() as i64
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
    pub fn samples(&self) -> &[DVector<T>] {
        &self.samples
    }
    pub fn width(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len())
    }

    /// Sample at time `t` (zero outside the stored window).
    pub fn get(&self, t: i64, width: usize) -> DVector<T> {
        if t < self.start || t >= self.end() {
            DVector::zeros(width)
        } else {
            self.samples[(t - self.start) as usize].clone()
        }
    }

    /// Squared l2 norm.
    pub fn energy(&self) -> T {
        self.samples
            .iter()
            .fold(T::zero(), |acc, s| acc + s.dot(s))
    }

    /// Discrete-time Fourier transform at angle `theta`:
    /// `sum_t d_t e^{-j theta t}`.
    pub fn dtft(&self, theta: T) -> DVector<Complex<T>> {
        let w = self.width();
        let mut out = DVector::from_element(w, Complex::new(T::zero(), T::zero()));
        for (k, s) in self.samples.iter().enumerate() {
            let t = T::from_i64(self.start + k as i64).unwrap();
            let ph = Complex::new((theta * t).cos(), -(theta * t).sin());
            for i in 0..w {
                out[i] += ph * Complex::new(s[i], T::zero());
            }
        }
        out
    }
}

/// Simulates a stable system driven by a finitely supported disturbance
/// from zero initial state, extending past the support until the energy
/// over the trailing `settle` window drops below `TAIL_TOL` of the
/// accumulated cost. Returns the error signal and `sum e_t' e_t`.
pub fn simulate<T: Scalar>(
    sys: &StateSpace<T>,
    d: &Signal<T>,
    settle: usize,
) -> Result<(Signal<T>, T)> {
    if !sys.is_stable() {
        return Err(Error::UnstableSystem);
    }
    if !d.is_empty() && d.width() != sys.n_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "disturbance width {} does not match {} plant inputs",
            d.width(),
            sys.n_inputs()
        )));
    }
    let settle = settle.max(1);
    let tol = T::from_config(TAIL_TOL);
    let mut x = DVector::<T>::zeros(sys.n_states());
    let mut cost = T::zero();
    let mut out = Vec::new();
    let mut tail: std::collections::VecDeque<T> = std::collections::VecDeque::new();
    let mut tail_sum = T::zero();
    let mut t = d.start();
    loop {
        let dt = d.get(t, sys.n_inputs());
        let e = sys.c() * &x + sys.d() * &dt;
        let step = e.dot(&e);
        cost += step;
        tail.push_back(step);
        tail_sum += step;
        if tail.len() > settle {
            tail_sum -= tail.pop_front().unwrap();
        }
        out.push(e);
        x = sys.a() * &x + sys.b() * &dt;
        t += 1;
        let past_support = t >= d.end();
        if past_support && tail.len() == settle && tail_sum <= tol * (T::one() + cost) {
            break;
        }
        if (t - d.start()) as usize >= MAX_STEPS {
            return Err(Error::NonConvergedTail {
                max_steps: MAX_STEPS,
            });
        }
    }
    Ok((Signal::new(d.start(), out)?, cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    #[test]
    fn one_step_response_cost() {
        // x+ = 0 x + d, e = sqrt(3) x: unit impulse gives cost 3
        let sys = StateSpace::new(
            dmatrix![0.0],
            dmatrix![1.0],
            dmatrix![3.0_f64.sqrt()],
            dmatrix![0.0],
        )
        .unwrap();
        let d = Signal::impulse(1, 0, 0);
        let (_, cost) = simulate(&sys, &d, DEFAULT_SETTLE).unwrap();
        assert_relative_eq!(cost, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_disturbance_zero_cost() {
        let sys = StateSpace::new(dmatrix![0.5], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0])
            .unwrap();
        let (_, cost) = simulate(&sys, &Signal::zero(1), DEFAULT_SETTLE).unwrap();
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn geometric_series_cost() {
        let sys = StateSpace::new(dmatrix![0.5], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0])
            .unwrap();
        let d = Signal::impulse(1, 0, 0);
        let (_, cost) = simulate(&sys, &d, DEFAULT_SETTLE).unwrap();
        // sum 0.25^k = 4/3
        assert_relative_eq!(cost, 4.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn unstable_system_rejected() {
        let sys = StateSpace::new(dmatrix![1.01], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0])
            .unwrap();
        assert!(matches!(
            simulate(&sys, &Signal::impulse(1, 0, 0), DEFAULT_SETTLE),
            Err(Error::UnstableSystem)
        ));
    }

    #[test]
    fn dtft_of_impulse_is_flat() {
        let d = Signal::<f64>::impulse(1, 0, 0);
        for th in [0.0, 1.0, 2.5] {
            let v = d.dtft(th);
            assert_relative_eq!(v[0].re, 1.0, epsilon = 1e-14);
            assert_relative_eq!(v[0].im, 0.0, epsilon = 1e-14);
        }
        let shifted = Signal::<f64>::impulse(1, 0, 3);
        let v = shifted.dtft(1.0);
        assert_relative_eq!(v[0].re, (3.0f64).cos(), epsilon = 1e-14);
        assert_relative_eq!(v[0].im, -(3.0f64).sin(), epsilon = 1e-14);
    }
}
