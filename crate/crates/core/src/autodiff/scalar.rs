use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::DomainError;

/// Real-like number type shared by plain `f64`, dual numbers and truncated Taylor polynomials.
///
/// Comparisons are deliberately absent; generic code branches on [`Scalar::value`].
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn from_f64(x: f64) -> Self;

    /// The plain real part.
    fn value(&self) -> f64;

    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn powf(self, p: f64) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn recip(self) -> Self {
        Self::one() / self
    }

    fn square(self) -> Self {
        self * self
    }

    fn try_sqrt(self) -> Result<Self, DomainError> {
        let v = self.value();
        if v < 0.0 || !v.is_finite() {
            Err(DomainError { op: "sqrt", value: v })
        } else {
            Ok(self.sqrt())
        }
    }

    fn try_ln(self) -> Result<Self, DomainError> {
        let v = self.value();
        if v <= 0.0 || !v.is_finite() {
            Err(DomainError { op: "ln", value: v })
        } else {
            Ok(self.ln())
        }
    }

    fn try_recip(self) -> Result<Self, DomainError> {
        let v = self.value();
        if v == 0.0 || !v.is_finite() {
            Err(DomainError { op: "recip", value: v })
        } else {
            Ok(self.recip())
        }
    }

    fn try_powf(self, p: f64) -> Result<Self, DomainError> {
        let v = self.value();
        if v <= 0.0 || !v.is_finite() {
            Err(DomainError { op: "powf", value: v })
        } else {
            Ok(self.powf(p))
        }
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
}
