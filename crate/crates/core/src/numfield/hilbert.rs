//! Kronecker and Hilbert symbols over `Q`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::places::Place;

/// Legendre symbol `(a/p)` for an odd prime `p`.
pub fn legendre(a: &BigInt, p: u64) -> i8 {
    let pb = BigInt::from(p);
    let r = a.mod_floor(&pb);
    if r.is_zero() {
        return 0;
    }
    let e = BigInt::from((p - 1) / 2);
    if r.modpow(&e, &pb).is_one() {
        1
    } else {
        -1
    }
}

/// Kronecker symbol `(D/p)` for `p` prime, or `p = -1`.
pub fn kronecker(d: &BigInt, p: i64) -> i8 {
    match p {
        -1 => {
            if d.is_negative() {
                -1
            } else {
                1
            }
        }
        2 => {
            if d.is_even() {
                0
            } else {
                match d.mod_floor(&BigInt::from(8)).to_u8().unwrap() {
                    1 | 7 => 1,
                    _ => -1,
                }
            }
        }
        p if p > 2 => legendre(d, p as u64),
        _ => panic!("kronecker symbol needs a prime or -1"),
    }
}

/// Writes a nonzero integer as `p^k · u` with `p ∤ u`.
fn split_power(x: &BigInt, p: u64) -> (u32, BigInt) {
    let pb = BigInt::from(p);
    let mut u = x.clone();
    let mut k = 0;
    while u.is_multiple_of(&pb) {
        u /= &pb;
        k += 1;
    }
    (k, u)
}

/// Integer in the same square class as the nonzero rational `q`.
fn integer_representative(q: &BigRational) -> BigInt {
    q.numer() * q.denom()
}

/// Hilbert symbol `(a, b)_v` of nonzero rationals.
pub fn hilbert_symbol(a: &BigRational, b: &BigRational, v: Place) -> i8 {
    assert!(!a.is_zero() && !b.is_zero(), "Hilbert symbol of zero");
    let a = integer_representative(a);
    let b = integer_representative(b);
    hilbert_symbol_int(&a, &b, v)
}

pub fn hilbert_symbol_int(a: &BigInt, b: &BigInt, v: Place) -> i8 {
    match v {
        Place::Infinite => {
            if a.is_negative() && b.is_negative() {
                -1
            } else {
                1
            }
        }
        Place::Finite(2) => {
            let (alpha, u) = split_power(a, 2);
            let (beta, w) = split_power(b, 2);
            // ε(x) = (x-1)/2 mod 2, ω(x) = (x²-1)/8 mod 2
            let epsilon = |x: &BigInt| -> u32 {
                let r = x.mod_floor(&BigInt::from(4)).to_u32().unwrap();
                if r == 3 {
                    1
                } else {
                    0
                }
            };
            let omega = |x: &BigInt| -> u32 {
                let r = x.mod_floor(&BigInt::from(8)).to_u32().unwrap();
                if r == 3 || r == 5 {
                    1
                } else {
                    0
                }
            };
            let e = epsilon(&u) * epsilon(&w) + alpha * omega(&w) + beta * omega(&u);
            if e % 2 == 0 {
                1
            } else {
                -1
            }
        }
        Place::Finite(p) => {
            let (alpha, u) = split_power(a, p);
            let (beta, w) = split_power(b, p);
            let mut s: i8 = 1;
            if alpha % 2 == 1 && beta % 2 == 1 && (p - 1) / 2 % 2 == 1 {
                s = -s;
            }
            if beta % 2 == 1 {
                s *= legendre(&u, p);
            }
            if alpha % 2 == 1 {
                s *= legendre(&w, p);
            }
            s
        }
    }
}

/// Places where `(a, b)_v` can be `-1`: infinity, 2, and odd primes dividing `ab`.
pub fn relevant_places(a: &BigInt, b: &BigInt) -> Vec<Place> {
    let mut out = vec![Place::Infinite, Place::Finite(2)];
    for p in super::prime_factors(&(a * b)) {
        let p = p.to_u64().expect("small prime");
        if p != 2 {
            out.push(Place::Finite(p));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numfield::rat;

    #[test]
    fn symbol_examples() {
        assert_eq!(hilbert_symbol(&rat(-1), &rat(-1), Place::Infinite), -1);
        assert_eq!(hilbert_symbol(&rat(-1), &rat(-1), Place::Finite(2)), -1);
        assert_eq!(hilbert_symbol(&rat(2), &rat(-5), Place::Finite(5)), -1);
        assert_eq!(kronecker(&BigInt::from(-20), 3), 1);
        assert_eq!(kronecker(&BigInt::from(-20), 5), 0);
        assert_eq!(kronecker(&BigInt::from(-4), 2), 0);
    }

    #[test]
    fn product_formula_small() {
        for a in -30i64..=30 {
            for b in -30i64..=30 {
                if a == 0 || b == 0 {
                    continue;
                }
                let (ab, bb) = (BigInt::from(a), BigInt::from(b));
                let prod: i32 = relevant_places(&ab, &bb)
                    .into_iter()
                    .map(|v| hilbert_symbol_int(&ab, &bb, v) as i32)
                    .product();
                assert_eq!(prod, 1, "({a},{b})");
            }
        }
    }
}
