//! Places of `Q`, sets of places, and local splitting data in an extension.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ideal::{primes_above, PrimeIdeal};
use super::{is_prime, Field};
use crate::error::{Error, Result};

/// A place of `Q`: the archimedean place or a rational prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Place {
    Infinite,
    Finite(u64),
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Infinite => write!(f, "inf"),
            Place::Finite(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for Place {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "inf" || s == "∞" {
            return Ok(Place::Infinite);
        }
        let p: u64 = s.parse().map_err(|_| Error::Input(format!("bad place '{s}'")))?;
        Place::finite(p)
    }
}

impl Place {
    pub fn finite(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(Place::Finite(p))
        } else {
            Err(Error::Input(format!("place {p} is not a prime")))
        }
    }

    pub fn prime(&self) -> Option<u64> {
        match self {
            Place::Infinite => None,
            Place::Finite(p) => Some(*p),
        }
    }
}

impl Serialize for Place {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Place::Infinite => s.serialize_str("inf"),
            Place::Finite(p) => s.serialize_u64(*p),
        }
    }
}

impl<'de> Deserialize<'de> for Place {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Place;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "\"inf\" or a prime number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Place, E> {
                v.parse().map_err(|e: Error| E::custom(e.to_string()))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Place, E> {
                Place::finite(v).map_err(|e| E::custom(e.to_string()))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Place, E> {
                if v < 0 {
                    return Err(E::custom(format!("place {v} is not a prime")));
                }
                self.visit_u64(v as u64)
            }
        }
        d.deserialize_any(V)
    }
}

/// A finite set of places of `Q` containing the archimedean place.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PlaceSet(BTreeSet<Place>);

impl<'de> Deserialize<'de> for PlaceSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<Place> = Vec::deserialize(d)?;
        PlaceSet::new(v).map_err(|e| de::Error::custom(e.to_string()))
    }
}

impl fmt::Display for PlaceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl FromStr for PlaceSet {
    type Err = Error;

    /// Parses `inf,2,5`.
    fn from_str(s: &str) -> Result<Self> {
        let places = s.split(',').filter(|t| !t.trim().is_empty()).map(Place::from_str).collect::<Result<Vec<_>>>()?;
        PlaceSet::new(places)
    }
}

impl PlaceSet {
    pub fn new(places: impl IntoIterator<Item = Place>) -> Result<Self> {
        let set: BTreeSet<Place> = places.into_iter().collect();
        if !set.contains(&Place::Infinite) {
            return Err(Error::Input("S must contain \"inf\"".into()));
        }
        Ok(PlaceSet(set))
    }

    pub fn archimedean() -> Self {
        PlaceSet([Place::Infinite].into_iter().collect())
    }

    pub fn with_primes(primes: &[u64]) -> Result<Self> {
        let mut v = vec![Place::Infinite];
        for &p in primes {
            v.push(Place::finite(p)?);
        }
        Self::new(v)
    }

    pub fn contains(&self, v: Place) -> bool {
        self.0.contains(&v)
    }

    pub fn contains_prime(&self, p: u64) -> bool {
        self.0.contains(&Place::Finite(p))
    }

    pub fn places(&self) -> impl Iterator<Item = Place> + '_ {
        self.0.iter().copied()
    }

    pub fn finite_primes(&self) -> Vec<u64> {
        self.0.iter().filter_map(Place::prime).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &PlaceSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &PlaceSet) -> PlaceSet {
        PlaceSet(self.0.union(&other.0).copied().collect())
    }

    /// Primes of `k` above the finite places, in place order then canonical order.
    pub fn primes_in(&self, k: &Field) -> Result<Vec<PrimeIdeal>> {
        let mut out = Vec::new();
        for p in self.finite_primes() {
            out.extend(primes_above(k, p)?);
        }
        Ok(out)
    }

    /// Number of places of `k` above this set: archimedean places plus primes.
    pub fn count_in(&self, k: &Field) -> Result<usize> {
        let (r1, r2) = k.signature();
        Ok(r1 + r2 + self.primes_in(k)?.len())
    }
}

/// Local behaviour of a place of the base field in a Galois extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalType {
    Split,
    Inert,
    RamifiedTame,
    RamifiedWild,
    /// Unramified with both `f > 1` and `g > 1`; only occurs in degree 4.
    PartiallySplit,
}

impl LocalType {
    pub fn is_ramified(&self) -> bool {
        matches!(self, LocalType::RamifiedTame | LocalType::RamifiedWild)
    }
}

impl fmt::Display for LocalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LocalType::Split => "split",
            LocalType::Inert => "inert",
            LocalType::RamifiedTame => "ramified_tame",
            LocalType::RamifiedWild => "ramified_wild",
            LocalType::PartiallySplit => "partially_split",
        };
        write!(f, "{s}")
    }
}

/// Splitting of one prime `v` of the base field in `K`.
#[derive(Clone, Debug)]
pub struct PlaceData {
    pub p: u64,
    /// The prime `v` of the base field (for base `Q`, the ideal `pZ`).
    pub base_prime: PrimeIdeal,
    pub local_type: LocalType,
    /// Relative ramification, residue degree, and number of primes above `v`.
    pub e: u32,
    pub f: u32,
    pub g: u32,
    /// Primes of `K` above `v`; the first one is the chosen `w_v`.
    pub primes: Vec<PrimeIdeal>,
    /// Galois masks of `Gal(K/F)` stabilising `w_v`, and those acting trivially on its residue field.
    pub decomposition_group: Vec<usize>,
    pub inertia_group: Vec<usize>,
}

impl PlaceData {
    pub fn chosen(&self) -> &PrimeIdeal {
        &self.primes[0]
    }
}

/// Splitting data of every prime of `base` above `p` in `k`.
pub fn places_above(k: &Field, base: &Field, p: u64) -> Result<Vec<PlaceData>> {
    let rel = k.fixing_masks(base)?;
    let degree = rel.len() as u32;
    let up = primes_above(k, p)?;
    let down = primes_above(base, p)?;
    let mut out = Vec::new();
    for v in down {
        let v_ext = k.embed_ideal(base, &v.ideal)?;
        let mut primes: Vec<PrimeIdeal> = up.iter().filter(|w| v_ext.is_subset(k, &w.ideal)).cloned().collect();
        primes.sort_by(|a, b| a.ideal.hnf_cmp(&b.ideal));
        let w = primes.first().ok_or_else(|| Error::Inconsistent(format!("no prime above {p}")))?;
        let e = w.e / v.e;
        let f = w.f / v.f;
        let g = primes.len() as u32;
        if e * f * g != degree {
            return Err(Error::Inconsistent(format!("efg = {} at {p}", e * f * g)));
        }
        let decomposition_group: Vec<usize> =
            rel.iter().copied().filter(|&m| w.ideal.conj(k, m) == w.ideal).collect();
        let basis = k.integral_basis();
        let inertia_group: Vec<usize> = decomposition_group
            .iter()
            .copied()
            .filter(|&m| basis.iter().all(|x| w.ideal.contains(k, &k.sub(&k.conj(x, m), x))))
            .collect();
        let local_type = if e > 1 {
            if u64::from(e) % p == 0 {
                LocalType::RamifiedWild
            } else {
                LocalType::RamifiedTame
            }
        } else if g == degree {
            LocalType::Split
        } else if g == 1 {
            LocalType::Inert
        } else {
            LocalType::PartiallySplit
        };
        out.push(PlaceData {
            p,
            base_prime: v,
            local_type,
            e,
            f,
            g,
            primes,
            decomposition_group,
            inertia_group,
        });
    }
    Ok(out)
}

/// Splitting data of the chosen (least) prime of `base` above `p`.
pub fn split_prime(k: &Field, base: &Field, p: u64) -> Result<PlaceData> {
    places_above(k, base, p)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Inconsistent(format!("no prime of {} above {p}", base.name())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_splitting_examples() {
        let q = Field::rational();
        let k = Field::quadratic(-5).unwrap();
        let d = split_prime(&k, &q, 3).unwrap();
        assert_eq!((d.local_type, d.e, d.f, d.g), (LocalType::Split, 1, 1, 2));
        assert_eq!(d.decomposition_group, vec![0]);
        let d = split_prime(&k, &q, 2).unwrap();
        assert_eq!((d.local_type, d.e), (LocalType::RamifiedWild, 2));
        assert_eq!(d.inertia_group, vec![0, 1]);
        let k = Field::quadratic(-23).unwrap();
        let d = split_prime(&k, &q, 23).unwrap();
        assert_eq!(d.local_type, LocalType::RamifiedTame);
        let d = split_prime(&k, &q, 5).unwrap();
        assert_eq!((d.local_type, d.f), (LocalType::Inert, 2));
        assert_eq!(d.inertia_group, vec![0]);
    }

    #[test]
    fn relative_splitting() {
        // Q(√-5, i) is unramified over Q(√-5)
        let f = Field::quadratic(-5).unwrap();
        let k = Field::biquadratic(-5, -1).unwrap();
        for p in [2, 3, 5, 7, 29] {
            for d in places_above(&k, &f, p).unwrap() {
                assert!(!d.local_type.is_ramified(), "p = {p}");
            }
        }
        let q = Field::rational();
        let d = split_prime(&k, &q, 3).unwrap();
        assert_eq!(d.local_type, LocalType::PartiallySplit);
    }

    #[test]
    fn place_set_parsing() {
        let s: PlaceSet = "inf,5,2".parse().unwrap();
        assert_eq!(s.finite_primes(), vec![2, 5]);
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"["inf",2,5]"#);
        let t: PlaceSet = serde_json::from_str(r#"["inf",2,5]"#).unwrap();
        assert_eq!(s, t);
        assert!("2,5".parse::<PlaceSet>().is_err());
        assert!("inf,4".parse::<PlaceSet>().is_err());
    }
}
