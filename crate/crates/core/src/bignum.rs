//! Serde helpers writing integers as JSON numbers when they fit in `i64`
//! and as decimal strings otherwise.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Small(i64),
    Big(String),
}

fn to_repr(x: &BigInt) -> Repr {
    match x.to_i64() {
        Some(v) => Repr::Small(v),
        None => Repr::Big(x.to_string()),
    }
}

fn from_repr<E: serde::de::Error>(r: Repr) -> Result<BigInt, E> {
    match r {
        Repr::Small(v) => Ok(BigInt::from(v)),
        Repr::Big(s) => s.parse().map_err(|_| E::custom(format!("bad integer {s:?}"))),
    }
}

/// JSON value for an integer.
pub fn to_json(x: &BigInt) -> serde_json::Value {
    serde_json::to_value(to_repr(x)).expect("integer serializes")
}

pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    to_repr(x).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
    from_repr(Repr::deserialize(d)?)
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        xs.iter().map(to_repr).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
    }
}

pub mod vecvec {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
        xs.iter()
            .map(|r| r.iter().map(to_repr).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigInt>>, D::Error> {
        Vec::<Vec<Repr>>::deserialize(d)?
            .into_iter()
            .map(|r| r.into_iter().map(from_repr).collect())
            .collect()
    }
}

pub mod opt_vec {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &Option<Vec<BigInt>>, s: S) -> Result<S::Ok, S::Error> {
        xs.as_ref().map(|v| v.iter().map(to_repr).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<BigInt>>, D::Error> {
        match Option::<Vec<Repr>>::deserialize(d)? {
            None => Ok(None),
            Some(v) => v.into_iter().map(from_repr).collect::<Result<_, _>>().map(Some),
        }
    }
}
