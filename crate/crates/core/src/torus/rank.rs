//! Rank of `T°(U)`, the R-equivalence note for cyclic splitting, and a bounded
//! search for the kernel of `φ_S` in the projective group torus.

use num_bigint::BigInt;
use num_integer::Integer;
use serde::Serialize;

use super::{decompose_torus, QuadraticExtension, TorusSpec};
use crate::error::{Error, Result};
use crate::numfield::ideal::{factor, primes_above, Ideal};
use crate::numfield::places::PlaceSet;
use crate::numfield::{rat, rat_big, Field};

#[derive(Clone, Debug, Serialize)]
pub struct RankReport {
    pub field: String,
    pub s: PlaceSet,
    /// `rank X^G`.
    pub fixed_rank: usize,
    /// Primes where inertia acts nontrivially on `X`.
    pub bad_places: Vec<u64>,
    /// `rank X^G · (#(S ∪ B) − 1)`.
    pub formula: usize,
    /// Rank assembled per indecomposable summand from S-unit ranks.
    pub direct: usize,
    pub agree: bool,
}

/// Compares `rank X^G·(#(S∪B) − 1)` with the rank of `T°(U)` computed from S-units:
/// `rank O*_{F,S}` per `G_m` summand, `rank O*_{K,S_K} − rank O*_{F,S}` per norm-one
/// summand, `rank O*_{K,S_K}` per induced summand.
pub fn rank_report(t: &TorusSpec) -> Result<RankReport> {
    let d = decompose_torus(t)?;
    let ext = QuadraticExtension::from_torus(t)?;
    let bad: Vec<u64> = t.bad_places()?.iter().map(|v| v.p).collect();
    let sb = t.s.union(&PlaceSet::with_primes(&bad)?);
    let fixed_rank = t.lattice.fixed_rank();
    let formula = fixed_rank * (sb.count_in(&t.base)? - 1);
    let rf = ext.uf.rank();
    let rk = ext.uk.rank();
    let direct = d.a * rf + d.b * (rk - rf) + d.c * rk;
    Ok(RankReport {
        field: t.splitting.name(),
        s: t.s.clone(),
        fixed_rank,
        bad_places: bad,
        formula,
        direct,
        agree: formula == direct,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct REquivalenceNote {
    pub in_scope: bool,
    /// Order and exponent of the splitting group.
    pub n: usize,
    pub e: usize,
    pub statement: String,
}

/// For cyclic splitting group of order `n = e`, `T(F)/R` is killed by `n/e = 1`,
/// so R-equivalence class groups coincide with class groups.
pub fn r_equivalence_note(t: &TorusSpec) -> REquivalenceNote {
    let g = t.lattice.group();
    let n = g.order();
    let e = g.elements().map(|x| g.elem_order(x)).fold(1, |a, b| a.lcm(&b));
    if !g.is_cyclic() {
        return REquivalenceNote {
            in_scope: false,
            n,
            e,
            statement: "splitting group is not cyclic; out of scope".into(),
        };
    }
    REquivalenceNote {
        in_scope: true,
        n,
        e,
        statement: format!("T(F)/R is annihilated by n/e = {}, so C^R = C", n / e),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KerPhiCheck {
    pub field: String,
    pub s: PlaceSet,
    pub height: i64,
    pub examined: usize,
    /// Elements whose divisor outside `S` is extended from `Q`.
    pub qualifying: usize,
    /// Qualifying elements that are not an S-unit times a rational.
    pub counterexamples: Vec<String>,
}

/// Searches `x = a + bω`, `|a|, |b| ≤ height`, for elements with `φ_S(x) = 0`,
/// i.e. whose ideal outside `S` is extended from `Q`, and checks each is an
/// S-unit times a rational number. No claim of completeness.
pub fn ker_phi_check(k: &Field, s: &PlaceSet, height: i64) -> Result<KerPhiCheck> {
    if k.degree() != 2 {
        return Err(Error::Precondition("ker_phi_check needs a quadratic field".into()));
    }
    let ext = QuadraticExtension::new(&Field::rational(), k, s)?;
    let basis = k.integral_basis();
    let mut examined = 0;
    let mut qualifying = 0;
    let mut counterexamples = Vec::new();
    for a in -height..=height {
        for b in -height..=height {
            let x = k.add(&k.scale(&basis[0], &rat(a)), &k.scale(&basis[1], &rat(b)));
            if x.is_zero() {
                continue;
            }
            examined += 1;
            // exponent of p in the rational m with (x) = m·(S-part)
            let mut m = BigInt::from(1);
            let mut extended = true;
            let factors = factor(k, &Ideal::principal(k, &x)?)?;
            for (prime, ord) in &factors {
                if s.contains_prime(prime.p) {
                    continue;
                }
                let others: Vec<_> = factors.iter().filter(|(q, _)| q.p == prime.p).collect();
                let g = primes_above(k, prime.p)?.len();
                let same = others.len() == g && others.iter().all(|(_, o)| o == ord);
                if !same || ord % i64::from(prime.e) != 0 {
                    extended = false;
                    break;
                }
                if others[0].0 == *prime {
                    m *= BigInt::from(prime.p).pow((ord / i64::from(prime.e)) as u32);
                }
            }
            if !extended {
                continue;
            }
            qualifying += 1;
            let y = k.scale(&x, &rat_big(&m).recip());
            if ext.uk.dlog(&y).is_err() {
                counterexamples.push(k.format(&x));
            }
        }
    }
    Ok(KerPhiCheck { field: k.name(), s: s.clone(), height, examined, qualifying, counterexamples })
}
