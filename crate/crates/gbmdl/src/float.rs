//! Scalar abstraction. Every numeric routine in this crate is generic over
//! [`Float`], implemented for `f32` and `f64`; the crate root exports
//! double-precision aliases for the common entry points.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar usable throughout the library.
pub trait Float:
    num_traits::Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Sum
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Cast an `f64` constant into this scalar type.
    fn cast(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 constant")
    }

    /// Convert a sample or dimension count into this scalar type.
    fn from_count(value: usize) -> Self {
        Self::from_usize(value).expect("count representable as float")
    }
}

impl Float for f32 {}
impl Float for f64 {}
