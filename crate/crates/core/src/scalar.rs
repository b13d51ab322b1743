//! Scalar abstraction: every matrix in this crate stores `Complex<T>` entries
//! where `T` is a real floating-point type implementing [`Scalar`].

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real base type for all computations: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossy conversion from `f64` literals.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex scalar over the real base type `T`.
pub type C<T> = Complex<T>;

pub fn c_zero<T: Scalar>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

pub fn c_one<T: Scalar>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

pub fn c_re<T: Scalar>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}
