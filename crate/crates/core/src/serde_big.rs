//! Serialize arbitrary-precision integers and rationals as decimal strings.

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::Serializer;

pub(crate) fn biguint<S: Serializer>(value: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&value.to_string())
}

pub(crate) fn u128_str<S: Serializer>(value: &u128, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&value.to_string())
}

/// `"n"` for integers, `"n/d"` otherwise.
pub fn format_rational(value: &BigRational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}
