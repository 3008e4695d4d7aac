//! Scalar abstractions shared by the numeric code.
//!
//! [`Scalar`] only asks for field arithmetic plus conversions, so exact types
//! such as `num_rational::Ratio<i64>` satisfy it alongside `f32`/`f64`.
//! [`Real`] adds the transcendental operations needed by the spectral,
//! statistical and learning code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Field-like scalar: exact rationals and IEEE floats both qualify.
pub trait Scalar: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in scalar type")
    }
}

impl<T> Scalar for T where T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug {}

/// Floating point scalar: f32 or f64.
pub trait Real:
    Scalar
    + Float
    + NumAssign
    + Sum
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }
}

impl<T> Real for T where
    T: Scalar
        + Float
        + NumAssign
        + Sum
        + Display
        + Default
        + Send
        + Sync
        + Serialize
        + DeserializeOwned
        + 'static
{
}
