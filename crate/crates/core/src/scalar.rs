use core::fmt::Debug;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use faer::traits::ComplexField;

#[allow(non_camel_case_types)]
pub type c64 = num_complex::Complex<f64>;

/// Field element of the matrices this crate works with: `f64` or [`c64`].
pub trait Scalar:
    ComplexField<Real = f64>
    + Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    const IS_COMPLEX: bool;

    fn from_re(x: f64) -> Self;
    /// Drops the imaginary part for real scalars.
    fn from_c64(z: c64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn conj(self) -> Self;
    fn abs2(self) -> f64;
    fn scale(self, s: f64) -> Self;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    #[inline]
    fn from_re(x: f64) -> Self {
        x
    }
    #[inline]
    fn from_c64(z: c64) -> Self {
        z.re
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn im(self) -> f64 {
        0.0
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn abs2(self) -> f64 {
        self * self
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for c64 {
    const IS_COMPLEX: bool = true;

    #[inline]
    fn from_re(x: f64) -> Self {
        c64::new(x, 0.0)
    }
    #[inline]
    fn from_c64(z: c64) -> Self {
        z
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn im(self) -> f64 {
        self.im
    }
    #[inline]
    fn conj(self) -> Self {
        c64::new(self.re, -self.im)
    }
    #[inline]
    fn abs2(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        c64::new(self.re * s, self.im * s)
    }
}
