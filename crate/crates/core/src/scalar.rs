//! Numeric abstraction shared by scoring code.
//!
//! Metrics only need field arithmetic, so they run over `f32`, `f64` or exact
//! rationals. BM25 needs a logarithm and is bound on [`Real`] instead.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_rational::Ratio;
use num_traits::{Float, One, ToPrimitive, Zero};

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_count(n: u64) -> Self;

    fn to_f64(&self) -> f64;
}

macro_rules! float_scalar {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            fn from_count(n: u64) -> Self {
                n as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }
        }
    )*};
}

float_scalar!(f32, f64);

impl Scalar for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count fits in i64"))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Floating-point scalars usable for BM25 scoring.
pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}
