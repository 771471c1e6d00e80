//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the placement model is computed in.
///
/// Implemented for `f32` and `f64`. Distances need a square root, so exact
/// rational types are not supported.
pub trait Real:
    Float + FromPrimitive + Sum + Default + Debug + Display + FromStr + Serialize + DeserializeOwned + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the supported types.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable in scalar type")
    }

    /// Lossy conversion to `f64`, used for formatting and statistics.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Relative tolerance scaled to the magnitude of `reference`.
pub(crate) fn tolerance<T: Real>(reference: T) -> T {
    let rel = T::lit(1e-9).max(T::epsilon() * T::lit(8.0));
    rel * (T::one() + reference.abs())
}
