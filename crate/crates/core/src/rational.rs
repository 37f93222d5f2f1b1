//! Rational scalars and their JSON encodings.
//!
//! Integers travel as JSON numbers (arbitrary precision), rationals as
//! strings of the form `"p/q"` (or `"p"` when integral).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};
use std::str::FromStr;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_from_int(n: &BigInt) -> Q {
    Q::from_integer(n.clone())
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // very large numerators / denominators: fall back on scaled division
        let n = x.numer().bits() as i64;
        let d = x.denom().bits() as i64;
        let shift = (n.max(d) - 1000).max(0) as usize;
        let nn = (x.numer() >> shift).to_f64().unwrap_or(0.0);
        let dd = (x.denom() >> shift).to_f64().unwrap_or(1.0);
        nn / dd
    })
}

pub fn parse_rational(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).ok()?;
            let d = BigInt::from_str(d.trim()).ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Q::new(n, d))
            }
        }
        None => BigInt::from_str(s).ok().map(Q::from_integer),
    }
}

pub fn format_rational(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn abs(x: &Q) -> Q {
    x.abs()
}

/// Converts a JSON value (number or numeric string) to a big integer.
pub fn bigint_from_json(v: &serde_json::Value) -> Option<BigInt> {
    match v {
        serde_json::Value::Number(n) => BigInt::from_str(&n.to_string()).ok(),
        serde_json::Value::String(s) => BigInt::from_str(s.trim()).ok(),
        _ => None,
    }
}

pub fn bigint_to_json(n: &BigInt) -> serde_json::Value {
    serde_json::Value::Number(
        serde_json::Number::from_str(&n.to_string()).expect("integer literal is a JSON number"),
    )
}

pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::String(s) => {
                parse_rational(s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}")))
            }
            serde_json::Value::Number(_) => bigint_from_json(&v)
                .map(Q::from_integer)
                .ok_or_else(|| D::Error::custom(format!("expected an integer or \"p/q\", got {v}"))),
            _ => Err(D::Error::custom("expected rational string")),
        }
    }
}

pub mod serde_q_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format_rational(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let vs = Vec::<serde_json::Value>::deserialize(d)?;
        vs.iter()
            .map(|v| match v {
                serde_json::Value::String(s) => {
                    parse_rational(s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}")))
                }
                _ => bigint_from_json(v)
                    .map(Q::from_integer)
                    .ok_or_else(|| D::Error::custom(format!("bad rational {v}"))),
            })
            .collect()
    }
}
