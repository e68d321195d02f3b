//! Serialization helpers for exact values.

use std::fmt::Display;

use serde::Serializer;

pub(crate) fn bigint_str<S: Serializer>(v: &num_bigint::BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub(crate) fn display_str<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub(crate) fn rational_str<S: Serializer>(v: &crate::exact::Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&crate::exact::fmt_rational(v))
}
