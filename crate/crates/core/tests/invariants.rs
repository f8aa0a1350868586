//! Property tests for the structural invariants of each module.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

use toruscl::abelian::{hnf, is_exact_at, AbHom, FgAbGroup, IntMatrix};
use toruscl::gmodule::{coflasque_resolution, decompose_c2, flasque_resolution, FiniteGroup, GLattice};
use toruscl::numfield::hilbert::hilbert_symbol;
use toruscl::numfield::places::{Place, PlaceSet};
use toruscl::numfield::{is_squarefree, Field, SClassGroup, SUnitGroup};
use toruscl::torus::{self, TorusSpec};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = IntMatrix> {
    prop::collection::vec(prop::collection::vec(-9i64..=9, cols), rows).prop_map(|r| IntMatrix::from_i64(&r))
}

/// Product of elementary matrices.
fn unimodular(n: usize) -> impl Strategy<Value = IntMatrix> {
    prop::collection::vec((0..n, 0..n, -3i64..=3), 0..8).prop_map(move |ops| {
        let mut p = IntMatrix::identity(n);
        for (i, j, k) in ops {
            if i != j {
                let mut e = IntMatrix::identity(n);
                e.set(i, j, BigInt::from(k));
                p = p.mul(&e);
            }
        }
        p
    })
}

/// Counts `Z^n / rowspan(m)` by breadth-first search over HNF-reduced representatives.
fn brute_force_order(m: &IntMatrix, limit: usize) -> Option<usize> {
    let (h, _) = hnf(m);
    let n = m.cols();
    let pivots: Vec<(usize, usize)> = (0..h.rows())
        .filter_map(|i| (0..n).find(|&j| !h.get(i, j).is_zero()).map(|j| (i, j)))
        .collect();
    let reduce = |mut x: Vec<BigInt>| {
        for &(i, j) in &pivots {
            let q = x[j].div_floor(h.get(i, j));
            for (c, xc) in x.iter_mut().enumerate() {
                *xc -= &q * h.get(i, c);
            }
        }
        x
    };
    let mut seen = BTreeSet::new();
    let mut queue = vec![vec![BigInt::zero(); n]];
    seen.insert(queue[0].clone());
    while let Some(x) = queue.pop() {
        for j in 0..n {
            let mut y = x.clone();
            y[j] += 1;
            let y = reduce(y);
            if seen.insert(y.clone()) {
                if seen.len() > limit {
                    return None;
                }
                queue.push(y);
            }
        }
    }
    Some(seen.len())
}

fn finite_group(orders: &[u64]) -> FgAbGroup {
    FgAbGroup::direct_sum(&orders.iter().map(|&n| FgAbGroup::cyclic(n)).collect::<Vec<_>>())
}

/// A homomorphism of products of cyclic groups from random multipliers, scaled
/// so that it is well defined.
fn hom(src: &[u64], tgt: &[u64], coeffs: &[i64]) -> AbHom {
    let mut m = IntMatrix::zeros(tgt.len(), src.len());
    for (i, &b) in tgt.iter().enumerate() {
        for (j, &a) in src.iter().enumerate() {
            let step = b / a.gcd(&b);
            m.set(i, j, BigInt::from(coeffs[i * src.len() + j] * step as i64));
        }
    }
    AbHom::new(finite_group(src), finite_group(tgt), m).expect("well defined")
}

fn element_set(g: &FgAbGroup, xs: impl IntoIterator<Item = Vec<BigInt>>) -> BTreeSet<Vec<BigInt>> {
    xs.into_iter().map(|x| g.canonical_coords(&x)).collect()
}

fn cyclic_orders() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1u64..=8, 1..=2).prop_filter("order at most 64", |v| v.iter().product::<u64>() <= 64)
}

fn c2_lattice(counts: (usize, usize, usize)) -> GLattice {
    let c2 = FiniteGroup::cyclic(2);
    let mut parts = Vec::new();
    parts.extend(std::iter::repeat_n(GLattice::trivial(c2.clone(), 1), counts.0));
    parts.extend(std::iter::repeat_n(GLattice::sign(c2.clone()).unwrap(), counts.1));
    parts.extend(std::iter::repeat_n(GLattice::regular(&c2), counts.2));
    GLattice::direct_sum(&parts).unwrap()
}

fn squarefree_d() -> impl Strategy<Value = i64> {
    (-60i64..=60).prop_filter("squarefree, not 0 or 1", |&d| d != 0 && d != 1 && is_squarefree(d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cokernel_order_is_det(m in (1usize..=3).prop_flat_map(|n| matrix(n, n))) {
        let det = m.det().abs();
        prop_assume!(!det.is_zero() && det <= BigInt::from(200));
        let g = FgAbGroup::cokernel(&m);
        prop_assert_eq!(g.order_u64(), det.to_u64());
        prop_assert_eq!(brute_force_order(&m, 200).map(|x| x as u64), det.to_u64());
    }

    #[test]
    fn cokernel_is_invariant_under_isomorphism(
        (m, u, v) in (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| (matrix(r, c), unimodular(r), unimodular(c)))
    ) {
        let a = FgAbGroup::cokernel(&m);
        let b = FgAbGroup::cokernel(&u.mul(&m).mul(&v));
        prop_assert!(a.is_isomorphic(&b), "{} vs {}", a, b);
    }

    #[test]
    fn exactness_agrees_with_enumeration(
        (a, b, c, cf, cg) in (cyclic_orders(), cyclic_orders(), cyclic_orders()).prop_flat_map(|(a, b, c)| {
            let nf = a.len() * b.len();
            let ng = b.len() * c.len();
            (Just(a), Just(b), Just(c), prop::collection::vec(-3i64..=3, nf), prop::collection::vec(-3i64..=3, ng))
        })
    ) {
        let f = hom(&a, &b, &cf);
        let g = hom(&b, &c, &cg);
        let (ga, gb) = (f.source().clone(), f.target().clone());
        let image = element_set(&gb, ga.elements(64).unwrap().iter().map(|x| f.apply(x)));
        let kernel = element_set(&gb, gb.elements(64).unwrap().into_iter().filter(|y| g.target().is_zero(&g.apply(y))));
        prop_assert_eq!(is_exact_at(&f, &g).unwrap().exact, image == kernel);
    }

    #[test]
    fn decomposition_survives_basis_change(
        (counts, p) in (0usize..=2, 0usize..=2, 0usize..=2)
            .prop_filter("nonzero", |c| c.0 + c.1 + c.2 > 0)
            .prop_flat_map(|c| (Just(c), unimodular(c.0 + c.1 + 2 * c.2)))
    ) {
        let x = c2_lattice(counts).change_basis(&p).unwrap();
        let d = decompose_c2(&x).unwrap();
        prop_assert_eq!((d.a, d.b, d.c), counts);
    }

    #[test]
    fn resolutions_have_the_right_complement(
        counts in (0usize..=2, 0usize..=2, 0usize..=1).prop_filter("nonzero", |c| c.0 + c.1 + c.2 > 0)
    ) {
        let x = c2_lattice(counts);
        prop_assert!(flasque_resolution(&x).unwrap().complement.is_flasque().unwrap());
        prop_assert!(coflasque_resolution(&x).unwrap().complement.is_coflasque().unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hilbert_product_formula(an in -100i64..=100, ad in 1i64..=100, bn in -100i64..=100, bd in 1i64..=100) {
        prop_assume!(an != 0 && bn != 0);
        let a = BigRational::new(an.into(), ad.into());
        let b = BigRational::new(bn.into(), bd.into());
        let mut places = vec![Place::Infinite, Place::Finite(2)];
        for n in [an, ad, bn, bd] {
            let mut m = n.unsigned_abs() >> n.unsigned_abs().trailing_zeros();
            let mut p = 3;
            while m > 1 {
                if m % p == 0 {
                    places.push(Place::Finite(p));
                    while m % p == 0 {
                        m /= p;
                    }
                }
                p += 1;
            }
        }
        places.sort();
        places.dedup();
        let product: i64 = places.iter().map(|&v| i64::from(hilbert_symbol(&a, &b, v))).product();
        prop_assert_eq!(product, 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn real_units_are_fundamental(d in (2i64..=47).prop_filter("squarefree", |&d| is_squarefree(d))) {
        let k = Field::quadratic(d).unwrap();
        let eps = k.units().unwrap().fundamental().unwrap().clone();
        prop_assert!(k.norm(&eps).abs().is_one());
        // Smallest y > 0 with x^2 - d y^2 = ±1, or ±4 in the half-integral case.
        let c = if d.rem_euclid(4) == 1 { 4 } else { 1 };
        let y = (1i64..)
            .find(|&y| {
                [d * y * y + c, d * y * y - c].iter().any(|&t| t >= 0 && (t as f64).sqrt().round().powi(2) as i64 == t)
            })
            .unwrap();
        let coeff = eps.coords()[1].abs() * BigRational::from_integer(if c == 4 { 2.into() } else { 1.into() });
        prop_assert_eq!(coeff, BigRational::from_integer(y.into()));
    }

    #[test]
    fn enlarging_s_gives_a_quotient(d in squarefree_d(), extra in prop::sample::subsequence(vec![2u64, 3, 5, 7], 0..=2)) {
        let k = Field::quadratic(d).unwrap();
        let small = SClassGroup::compute(&k, &PlaceSet::archimedean()).unwrap();
        let big = SClassGroup::compute(&k, &PlaceSet::with_primes(&extra).unwrap()).unwrap();
        let n = small.group().gens();
        let map = AbHom::new(small.group().clone(), big.group().clone(), IntMatrix::identity(n));
        prop_assert!(map.unwrap().is_surjective());
    }

    #[test]
    fn s_unit_rank_is_dirichlet(d in squarefree_d(), extra in prop::sample::subsequence(vec![2u64, 3, 5, 7, 11], 0..=3)) {
        let k = Field::quadratic(d).unwrap();
        let s = PlaceSet::with_primes(&extra).unwrap();
        prop_assert_eq!(SUnitGroup::compute(&k, &s).unwrap().rank() + 1, s.count_in(&k).unwrap());
    }

    #[test]
    fn norm_one_class_group_matches_order_identity(d in prop::sample::select(vec![-1i64, -2, -5, -6, -10, -23, 2, 3, 5, 6, 7])) {
        let q = Field::rational();
        let k = Field::quadratic(d).unwrap();
        let s = torus::ramified_place_set(&k, &q).unwrap();
        let direct = torus::norm_one_class_group(&q, &k, &s).unwrap();
        let r = torus::verify_corollary_8_5(&k, &s, None).unwrap();
        prop_assert!(r.certified && r.holds);
        prop_assert!(direct.group.is_isomorphic(&r.c_t), "{} vs {}", direct.group, r.c_t);
    }

    #[test]
    fn class_group_of_a_sum_is_the_product(
        d in prop::sample::select(vec![-1i64, -5, -23, 2, 3, 10]),
        counts in (0usize..=1, 0usize..=1, 0usize..=1).prop_filter("nonzero", |c| c.0 + c.1 + c.2 > 0)
    ) {
        let q = Field::rational();
        let k = Field::quadratic(d).unwrap();
        let s = PlaceSet::archimedean();
        let g = k.galois_group();
        let whole = torus::class_group(&TorusSpec::new(q.clone(), k.clone(), c2_on(&g, counts), s.clone()).unwrap()).unwrap();
        let mut parts = Vec::new();
        for (i, &n) in [counts.0, counts.1, counts.2].iter().enumerate() {
            let one = [(1, 0, 0), (0, 1, 0), (0, 0, 1)][i];
            for _ in 0..n {
                let t = TorusSpec::new(q.clone(), k.clone(), c2_on(&g, one), s.clone()).unwrap();
                parts.push(torus::class_group(&t).unwrap().group);
            }
        }
        let product = FgAbGroup::direct_sum(&parts);
        prop_assert!(whole.group.is_isomorphic(&product), "{} vs {}", whole.group, product);
    }
}

/// `c2_lattice` over the Galois group of `k`.
fn c2_on(g: &FiniteGroup, counts: (usize, usize, usize)) -> GLattice {
    let x = c2_lattice(counts);
    let action: Vec<IntMatrix> = g.elements().map(|e| x.action(e).clone()).collect();
    GLattice::new(g.clone(), action).unwrap()
}

#[test]
fn split_primes_are_swapped_by_galois() {
    for d in [-5i64, -23, 10] {
        let k = Field::quadratic(d).unwrap();
        let cl = k.class_group().unwrap();
        for p in [3u64, 7, 11, 13, 29, 41] {
            let primes = toruscl::numfield::ideal::primes_above(&k, p).unwrap();
            if primes.len() != 2 {
                continue;
            }
            let (a, b) = (&primes[0].ideal, &primes[1].ideal);
            assert!(a.conj(&k, 1) == *b, "d = {d}, p = {p}");
            let product = cl.group().elem_eq(
                &cl.dlog(&k, &a.mul(&k, b)).unwrap(),
                &cl.dlog(&k, &toruscl::numfield::Ideal::principal(&k, &k.from_int(p as i64)).unwrap()).unwrap(),
            );
            assert!(product);
            let sum: Vec<BigInt> = cl
                .dlog(&k, a)
                .unwrap()
                .iter()
                .zip(cl.dlog(&k, b).unwrap())
                .map(|(x, y)| x + y)
                .collect();
            assert!(cl.group().is_zero(&sum), "d = {d}, p = {p}");
        }
    }
}
