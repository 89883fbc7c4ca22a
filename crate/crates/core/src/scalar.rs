//! Scalar abstraction for the numeric core.
//!
//! Every algorithm in this crate is generic over [`Real`], which is satisfied
//! by `f32` and `f64`. Concrete type aliases for common instantiations live at
//! the crate root.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the toolkit is generic over.
///
/// The bounds cover arithmetic ([`Float`]), conversion of literal constants
/// and counts ([`FromPrimitive`]), and text round-trips (`FromStr`/`Display`)
/// used by the file formats.
pub trait Real:
    Float + FromPrimitive + FromStr + Display + Debug + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + FromStr + Display + Debug + Send + Sync + 'static
{
}

/// Converts a literal constant into `T`. Panics only if `T` cannot represent
/// any finite `f64`, which no implementor of [`Real`] exhibits.
pub(crate) fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in scalar type")
}

/// Converts a count into `T`, rounding if the mantissa is too narrow.
pub(crate) fn from_count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}
