//! Scalar abstraction shared by the field, solver, oracle and observables.
//!
//! Everything numeric in this crate is written against [`Real`], so the same
//! code runs in `f64` (the default, see the aliases in the crate root) or in
//! `f32` for quick low-precision scans.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by every numerical routine in the crate.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Lossy conversion to `f64`, used for reporting and hashing.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Composite trapezoid rule over samples `ys` at abscissae `xs`.
pub fn trapezoid<T: Real>(xs: &[T], ys: &[T]) -> T {
    debug_assert_eq!(xs.len(), ys.len());
    let half = T::lit(0.5);
    xs.windows(2)
        .zip(ys.windows(2))
        .fold(T::zero(), |acc, (x, y)| acc + half * (x[1] - x[0]) * (y[0] + y[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_is_exact_for_linear_integrands() {
        let xs: Vec<f64> = (0..11).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let exact = 3.0f64 * 3.0 + 3.0;
        assert!((trapezoid(&xs, &ys) - exact).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_of_single_point_is_zero() {
        assert_eq!(trapezoid(&[1.0f32], &[5.0]), 0.0);
    }
}
