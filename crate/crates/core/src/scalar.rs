//! Floating-point scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used throughout the numeric pipeline.
///
/// Implemented for `f32` and `f64`. Artifacts record [`Scalar::NAME`] so a
/// file written at one precision is never silently read at another.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    const NAME: &'static str;
    const BYTES: usize;

    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";
    const BYTES: usize = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
    }
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";
    const BYTES: usize = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes[..4].try_into().expect("4 bytes"))
    }
}

/// Digamma function ψ(x) for x > 0.
///
/// Shifts the argument above 10 with the recurrence ψ(x) = ψ(x+1) − 1/x and
/// then applies the asymptotic series.
pub fn digamma<T: Scalar>(x: T) -> T {
    let mut x = x.as_f64();
    if x.is_nan() || x <= 0.0 {
        return T::nan();
    }
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    T::lit(acc + x.ln() - 0.5 * inv - series)
}

/// Sum in index order, accumulated at the scalar's own precision.
#[inline]
pub(crate) fn sum<T: Scalar>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |acc, &x| acc + x)
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn digamma_reference_values() {
        // Reference values from mpmath.digamma.
        assert_relative_eq!(digamma(1.0f64), -0.5772156649015329, epsilon = 1e-13);
        assert_relative_eq!(digamma(0.5f64), -1.9635100260214235, epsilon = 1e-13);
        assert_relative_eq!(digamma(0.01f64), -100.56088545786867, epsilon = 1e-11);
        assert_relative_eq!(digamma(10.0f64), 2.251752589066721, epsilon = 1e-13);
        assert_relative_eq!(digamma(123.456f64), 4.811829323828985, epsilon = 1e-13);
        assert_relative_eq!(digamma(2.5f32), 0.7031566, epsilon = 1e-6);
    }

    #[test]
    fn digamma_recurrence() {
        for &x in &[0.03, 0.7, 1.3, 4.9, 17.0] {
            let lhs: f64 = digamma(x + 1.0);
            assert_relative_eq!(lhs, digamma(x) + 1.0 / x, epsilon = 1e-12);
        }
    }

    #[test]
    fn digamma_domain() {
        assert!(digamma(0.0f64).is_nan());
        assert!(digamma(-1.0f64).is_nan());
    }

    #[test]
    fn le_roundtrip() {
        let mut buf = Vec::new();
        1.25f64.write_le(&mut buf);
        (-3.5f32).write_le(&mut buf);
        assert_eq!(f64::read_le(&buf[..8]), 1.25);
        assert_eq!(f32::read_le(&buf[8..]), -3.5);
    }
}
