//! Scalar abstractions.
//!
//! [`Real`] is the floating-point base type (`f32` or `f64`). [`Scalar`] is
//! anything the geometric formulas can be evaluated on: a plain real, or a
//! [`Jet2`](crate::jet::Jet2) carrying partial derivatives alongside the value.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point base type: f32 or f64.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Names the real base type of a [`Scalar`].
pub trait HasRe {
    type Re: Real;
}

/// A value the closed-form geometry can be evaluated on.
pub trait Scalar:
    HasRe
    + Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<<Self as HasRe>::Re, Output = Self>
    + Sub<<Self as HasRe>::Re, Output = Self>
    + Mul<<Self as HasRe>::Re, Output = Self>
    + Div<<Self as HasRe>::Re, Output = Self>
{
    /// Constant (all derivatives zero).
    fn cst(x: Self::Re) -> Self;
    /// Primal value.
    fn re(&self) -> Self::Re;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, a: Self::Re) -> Self;

    #[inline]
    fn recip(self) -> Self {
        Self::cst(<Self::Re as num_traits::One>::one()) / self
    }

    #[inline]
    fn lit(x: f64) -> Self {
        Self::cst(<Self::Re as Real>::lit(x))
    }

    #[inline]
    fn sq(self) -> Self {
        self * self
    }
}

impl HasRe for f32 {
    type Re = f32;
}

impl HasRe for f64 {
    type Re = f64;
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn cst(x: $t) -> Self {
                x
            }
            #[inline]
            fn re(&self) -> $t {
                *self
            }
            #[inline]
            fn sqrt(self) -> Self {
                Float::sqrt(self)
            }
            #[inline]
            fn exp(self) -> Self {
                Float::exp(self)
            }
            #[inline]
            fn ln(self) -> Self {
                Float::ln(self)
            }
            #[inline]
            fn sin(self) -> Self {
                Float::sin(self)
            }
            #[inline]
            fn cos(self) -> Self {
                Float::cos(self)
            }
            #[inline]
            fn powi(self, n: i32) -> Self {
                Float::powi(self, n)
            }
            #[inline]
            fn powf(self, a: $t) -> Self {
                Float::powf(self, a)
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);
