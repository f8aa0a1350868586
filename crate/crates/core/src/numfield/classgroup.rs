//! Principality testing, class groups, S-class groups, and the maps induced on
//! class groups by extension and norm of ideals.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::enumerate::{bound_above, for_each_short, lll_reduce};
use super::ideal::{primes_above, Ideal, PrimeIdeal, PrimeRecord};
use super::places::PlaceSet;
use super::{prime_factors, rat_big, Elem, Field, FieldKind};
use crate::abelian::{lattice_basis, AbHom, FgAbGroup, IntMatrix};
use crate::error::{Error, Result};

/// Upper bound on `T2` of some generator of a principal integral ideal of norm `n`.
fn generator_t2_bound(k: &Field, n: &BigInt) -> Result<BigRational> {
    let nf = n.to_f64().unwrap_or(f64::INFINITY);
    match k.kind() {
        FieldKind::Rational => Ok(rat_big(&(n * n))),
        FieldKind::Quadratic if k.is_totally_imaginary() => Ok(rat_big(&(n * 2))),
        FieldKind::Quadratic => {
            let eps = k.units()?.fundamental().expect("real quadratic unit");
            let e = k.embeddings(eps)[0].norm();
            Ok(bound_above(nf * (e + 1.0 / e)))
        }
        FieldKind::Biquadratic if k.is_totally_imaginary() => {
            let eta = k.units()?.fundamental().expect("unit of rank one");
            let t = k.embeddings(eta)[0].norm();
            Ok(bound_above(2.0 * nf.sqrt() * (t + 1.0 / t)))
        }
        FieldKind::Biquadratic => Err(Error::Unsupported("principality in real biquadratic fields".into())),
    }
}

/// A generator of the fractional ideal `i`, or `None` if it is not principal.
///
/// The search region is large enough that `None` is a proof of non-principality;
/// running out of budget is reported as [`Error::Budget`].
pub fn is_principal(k: &Field, i: &Ideal, budget: u64) -> Result<Option<Elem>> {
    let (j, den) = i.integral_multiple(k);
    let target = j.norm_int();
    if k.degree() == 1 {
        let g = k.from_int_coords(&[target]);
        return Ok(Some(k.scale(&g, &BigRational::new(BigInt::one(), den))));
    }
    let bound = generator_t2_bound(k, &target)?;
    let basis = j.basis(k);
    let mut found = None;
    for_each_short(k, &basis, &bound, budget, |x| {
        if k.norm(x).abs() == rat_big(&target) {
            found = Some(x.clone());
            true
        } else {
            false
        }
    })?;
    Ok(found.map(|g| k.scale(&g, &BigRational::new(BigInt::one(), den))))
}

/// An integral ideal in the class of `i` of small norm: `β·i` for a short `β ∈ i⁻¹`.
pub fn reduce_ideal(k: &Field, i: &Ideal) -> Ideal {
    if k.degree() == 1 {
        return Ideal::unit(k);
    }
    let inv = i.inverse(k);
    let red = lll_reduce(k, &inv.basis(k));
    i.mul_elem(k, &red[0])
}

/// Valuations of the integral ideal `j` at the factor base, when `j` factors over it.
fn smooth_vector(k: &Field, fb: &[PrimeIdeal], by_p: &HashMap<u64, Vec<usize>>, j: &Ideal) -> Option<Vec<BigInt>> {
    let norm = j.norm_int();
    if norm.is_one() {
        return Some(vec![BigInt::zero(); fb.len()]);
    }
    let mut v = vec![BigInt::zero(); fb.len()];
    let mut rest = norm;
    for p in prime_factors(&rest.clone()) {
        let idx = by_p.get(&p.to_u64()?)?;
        for &i in idx {
            let e = fb[i].valuation(k, j);
            if e > 0 {
                v[i] = BigInt::from(e);
                for _ in 0..e {
                    rest /= fb[i].norm();
                }
            }
        }
    }
    rest.is_one().then_some(v)
}

/// Class group as the quotient of the free group on a factor base of primes.
#[derive(Clone, Debug)]
pub struct ClassGroup {
    factor_base: Vec<PrimeIdeal>,
    by_p: HashMap<u64, Vec<usize>>,
    group: FgAbGroup,
    bound: u64,
    budget: u64,
}

/// Serialized class group: factor base and relation rows, enough to rebuild
/// the same presentation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGroupRecord {
    pub factor_base: Vec<PrimeRecord>,
    pub gens: usize,
    #[serde(with = "crate::bignum::vecvec")]
    pub relations: Vec<Vec<BigInt>>,
    pub bound: u64,
    pub budget: u64,
}

impl ClassGroup {
    pub fn record(&self) -> ClassGroupRecord {
        ClassGroupRecord {
            factor_base: self.factor_base.iter().map(|p| p.record()).collect(),
            gens: self.group.gens(),
            relations: self.group.relations().row_vecs(),
            bound: self.bound,
            budget: self.budget,
        }
    }

    pub fn from_record(k: &Field, r: &ClassGroupRecord) -> Result<Self> {
        let factor_base = r.factor_base.iter().map(|p| PrimeIdeal::from_record(k, p)).collect::<Result<Vec<_>>>()?;
        if r.gens != factor_base.len() && !(r.gens == 0 && r.relations.is_empty()) {
            return Err(Error::Input("class group record: generator count differs from factor base".into()));
        }
        let mut by_p: HashMap<u64, Vec<usize>> = HashMap::new();
        for (i, pr) in factor_base.iter().enumerate() {
            by_p.entry(pr.p).or_default().push(i);
        }
        let group = FgAbGroup::from_presentation(r.gens, IntMatrix::from_rows(&r.relations, r.gens))?;
        Ok(ClassGroup { factor_base, by_p, group, bound: r.bound, budget: r.budget })
    }

    pub fn compute(k: &Field, budget: u64) -> Result<Self> {
        if k.kind() == FieldKind::Biquadratic && !k.is_totally_imaginary() {
            return Err(Error::Unsupported("class groups of real biquadratic fields".into()));
        }
        let bound = k.minkowski_bound().floor() as u64;
        let mut factor_base = Vec::new();
        for p in 2..=bound {
            if !super::is_prime(p) {
                continue;
            }
            for pr in primes_above(k, p)? {
                if pr.norm() <= BigInt::from(bound) {
                    factor_base.push(pr);
                }
            }
        }
        let mut by_p: HashMap<u64, Vec<usize>> = HashMap::new();
        for (i, pr) in factor_base.iter().enumerate() {
            by_p.entry(pr.p).or_default().push(i);
        }
        let nfb = factor_base.len();
        let mut cg = ClassGroup { factor_base, by_p, group: FgAbGroup::free(nfb), bound, budget };
        if nfb == 0 {
            cg.group = FgAbGroup::trivial();
            return Ok(cg);
        }
        let mut relations: Vec<Vec<BigInt>> = Vec::new();
        cg.collect_relations(k, &mut relations)?;
        loop {
            let rel = lattice_basis(&IntMatrix::from_rows(&relations, nfb));
            cg.group = FgAbGroup::from_presentation(nfb, rel)?;
            match cg.find_hidden_relation(k)? {
                Some(r) => relations.push(r),
                None => break,
            }
        }
        cg.certify(k)?;
        Ok(cg)
    }

    /// Relations from `pO` and from short elements of each factor-base prime,
    /// until the relation lattice has full rank.
    fn collect_relations(&self, k: &Field, relations: &mut Vec<Vec<BigInt>>) -> Result<()> {
        let nfb = self.factor_base.len();
        for (&p, idx) in &self.by_p {
            let all = primes_above(k, p)?;
            if all.len() == idx.len() {
                let mut r = vec![BigInt::zero(); nfb];
                for &i in idx {
                    r[i] = BigInt::from(self.factor_base[i].e);
                }
                relations.push(r);
            }
        }
        relations.sort();
        let n = k.degree() as i32;
        let mut scale = 1.0f64;
        for _round in 0..12 {
            if crate::abelian::hnf_rank(&crate::abelian::hnf(&IntMatrix::from_rows(relations, nfb)).0) == nfb {
                return Ok(());
            }
            for i in 0..nfb {
                let pr = &self.factor_base[i];
                let nf = pr.norm().to_f64().unwrap();
                let t2 = scale * n as f64 * (nf * self.bound as f64).powf(2.0 / n as f64);
                let mut found = 0;
                let mut err = None;
                for_each_short(k, &pr.ideal.basis(k), &bound_above(t2), self.budget, |x| {
                    match Ideal::principal(k, x) {
                        Ok(j) => {
                            if let Some(v) = smooth_vector(k, &self.factor_base, &self.by_p, &j) {
                                if v.iter().any(|c| !c.is_zero()) {
                                    relations.push(v);
                                    found += 1;
                                }
                            }
                        }
                        Err(e) => err = Some(e),
                    }
                    found >= 40 || err.is_some()
                })?;
                if let Some(e) = err {
                    return Err(e);
                }
            }
            scale *= 2.0;
        }
        Err(Error::Budget("could not find a full-rank relation lattice".into()))
    }

    /// A nonzero element of prime order in the current group whose ideal is
    /// principal, as a relation vector; `None` certifies the group is exact.
    fn find_hidden_relation(&self, k: &Field) -> Result<Option<Vec<BigInt>>> {
        let order = match self.group.order_u64() {
            Some(o) => o,
            None => return Err(Error::Inconsistent("relation lattice lost full rank".into())),
        };
        let inv = self.group.invariant_factors().to_vec();
        let gens = self.group.canonical_generators();
        for l in prime_factors(&BigInt::from(order)) {
            let l = l.to_u64().unwrap();
            // basis of A[l]
            let slots: Vec<Vec<BigInt>> = inv
                .iter()
                .zip(&gens)
                .filter(|(d, _)| (*d % l).is_zero())
                .map(|(d, g)| g.iter().map(|x| x * (d / l)).collect())
                .collect();
            let r = slots.len() as u32;
            // one representative per line: first nonzero coefficient is 1
            for code in 1..l.pow(r) {
                let mut coeffs = Vec::with_capacity(r as usize);
                let mut c = code;
                for _ in 0..r {
                    coeffs.push(c % l);
                    c /= l;
                }
                if coeffs.iter().find(|&&x| x != 0) != Some(&1) {
                    continue;
                }
                let mut v = vec![BigInt::zero(); self.factor_base.len()];
                for (a, s) in coeffs.iter().zip(&slots) {
                    for (vi, si) in v.iter_mut().zip(s) {
                        *vi += si * a;
                    }
                }
                let ideal = self.ideal_of(k, &v);
                if is_principal(k, &reduce_ideal(k, &ideal), self.budget)?.is_some() {
                    return Ok(Some(v));
                }
            }
        }
        Ok(None)
    }

    /// Checks that each canonical generator has exactly its invariant-factor order.
    fn certify(&self, k: &Field) -> Result<()> {
        for (d, g) in self.group.invariant_factors().iter().zip(self.group.canonical_generators()) {
            let ideal = self.ideal_of(k, &g);
            let full = reduce_ideal(k, &ideal.pow(k, d.to_i64().unwrap()));
            if is_principal(k, &full, self.budget)?.is_none() {
                return Err(Error::Inconsistent("class group generator power is not principal".into()));
            }
            for l in prime_factors(d) {
                let e = (d / &l).to_i64().unwrap();
                let part = reduce_ideal(k, &ideal.pow(k, e));
                if is_principal(k, &part, self.budget)?.is_some() {
                    return Err(Error::Inconsistent("class group generator has smaller order".into()));
                }
            }
        }
        Ok(())
    }

    /// The ideal `∏ P_i^{v_i}` over the factor base.
    pub fn ideal_of(&self, k: &Field, v: &[BigInt]) -> Ideal {
        let mut acc = Ideal::unit(k);
        for (e, pr) in v.iter().zip(&self.factor_base) {
            let e = e.to_i64().expect("small exponent");
            if e > 0 {
                acc = acc.mul(k, &pr.ideal.pow(k, e));
            } else if e < 0 {
                acc = acc.mul(k, &pr.inverse().pow(k, -e));
            }
        }
        acc
    }

    /// Presentation on the factor base: generators are the primes, relations principal ideals.
    pub fn group(&self) -> &FgAbGroup {
        &self.group
    }

    pub fn factor_base(&self) -> &[PrimeIdeal] {
        &self.factor_base
    }

    pub fn factor_base_bound(&self) -> u64 {
        self.bound
    }

    pub fn order(&self) -> u64 {
        self.group.order_u64().expect("finite class group")
    }

    /// Ideals representing the canonical generators, one per invariant factor.
    pub fn generator_ideals(&self, k: &Field) -> Vec<Ideal> {
        self.group
            .canonical_generators()
            .iter()
            .map(|g| {
                let nonzero: Vec<usize> = (0..g.len()).filter(|&i| !g[i].is_zero()).collect();
                if nonzero.len() == 1 && g[nonzero[0]].is_one() {
                    self.factor_base[nonzero[0]].ideal.clone()
                } else {
                    reduce_ideal(k, &self.ideal_of(k, g))
                }
            })
            .collect()
    }

    /// Class of a fractional ideal, in the factor-base coordinates of [`ClassGroup::group`].
    pub fn dlog(&self, k: &Field, i: &Ideal) -> Result<Vec<BigInt>> {
        let nfb = self.factor_base.len();
        if nfb == 0 {
            return Ok(vec![]);
        }
        if let Some(pos) = self.factor_base.iter().position(|p| &p.ideal == i) {
            let mut v = vec![BigInt::zero(); nfb];
            v[pos] = BigInt::one();
            return Ok(v);
        }
        if i.is_integral() {
            if let Some(v) = smooth_vector(k, &self.factor_base, &self.by_p, i) {
                return Ok(v);
            }
        }
        // [i] = [β i] for β ∈ i⁻¹; look for a smooth β i
        let inv = i.inverse(k);
        let basis = inv.basis(k);
        let n = k.degree() as i32;
        let base = n as f64 * inv.norm().to_f64().unwrap().powf(2.0 / n as f64);
        let mut scale = self.bound.max(2) as f64;
        for _ in 0..20 {
            let mut result = None;
            for_each_short(k, &basis, &bound_above(base * scale), self.budget, |beta| {
                let j = i.mul_elem(k, beta);
                if let Some(v) = smooth_vector(k, &self.factor_base, &self.by_p, &j) {
                    result = Some(v);
                    true
                } else {
                    false
                }
            })?;
            if let Some(v) = result {
                return Ok(v);
            }
            scale *= 2.0;
        }
        Err(Error::Budget("discrete logarithm search found no smooth representative".into()))
    }

    pub fn is_trivial_class(&self, k: &Field, i: &Ideal) -> Result<bool> {
        Ok(self.group.is_zero(&self.dlog(k, i)?))
    }
}

/// Class group modulo the classes of the primes above the finite places of `S`.
#[derive(Clone, Debug)]
pub struct SClassGroup {
    class_group: ClassGroup,
    s: PlaceSet,
    s_primes: Vec<PrimeIdeal>,
    group: FgAbGroup,
    projection: AbHom,
}

impl SClassGroup {
    pub fn compute(k: &Field, s: &PlaceSet) -> Result<Self> {
        let class_group = k.class_group()?.clone();
        let s_primes = s.primes_in(k)?;
        let extra = s_primes.iter().map(|p| class_group.dlog(k, &p.ideal)).collect::<Result<Vec<_>>>()?;
        let group = class_group.group().quotient(&extra);
        let n = class_group.group().gens();
        let projection = AbHom::new(class_group.group().clone(), group.clone(), IntMatrix::identity(n))?;
        Ok(SClassGroup { class_group, s: s.clone(), s_primes, group, projection })
    }

    pub fn group(&self) -> &FgAbGroup {
        &self.group
    }

    pub fn class_group(&self) -> &ClassGroup {
        &self.class_group
    }

    pub fn places(&self) -> &PlaceSet {
        &self.s
    }

    pub fn s_primes(&self) -> &[PrimeIdeal] {
        &self.s_primes
    }

    /// The quotient map `Cl(K) → Cl_S(K)`.
    pub fn projection(&self) -> &AbHom {
        &self.projection
    }

    pub fn order(&self) -> u64 {
        self.group.order_u64().expect("finite S-class group")
    }

    pub fn dlog(&self, k: &Field, i: &Ideal) -> Result<Vec<BigInt>> {
        self.class_group.dlog(k, i)
    }

    pub fn generator_ideals(&self, k: &Field) -> Vec<Ideal> {
        self.group
            .canonical_generators()
            .iter()
            .map(|g| reduce_ideal(k, &self.class_group.ideal_of(k, g)))
            .collect()
    }
}

/// `C_{F,S} → C_{K,S_K}`, `[a] ↦ [a O_K]`.
pub fn capitulation_map(f: &Field, cf: &SClassGroup, k: &Field, ck: &SClassGroup) -> Result<AbHom> {
    let cols = cf
        .class_group()
        .factor_base()
        .iter()
        .map(|p| ck.dlog(k, &k.embed_ideal(f, &p.ideal)?))
        .collect::<Result<Vec<_>>>()?;
    let m = IntMatrix::from_cols(&cols, ck.group().gens());
    AbHom::new(cf.group().clone(), ck.group().clone(), m)
}

/// `C_{K,S_K} → C_{F,S}`, `[A] ↦ [N_{K/F} A]`.
pub fn class_norm_map(k: &Field, ck: &SClassGroup, f: &Field, cf: &SClassGroup) -> Result<AbHom> {
    let cols = ck
        .class_group()
        .factor_base()
        .iter()
        .map(|p| cf.dlog(f, &k.relative_norm_ideal(f, &p.ideal)?))
        .collect::<Result<Vec<_>>>()?;
    let m = IntMatrix::from_cols(&cols, cf.group().gens());
    AbHom::new(ck.group().clone(), cf.group().clone(), m)
}

/// Checks that `x` generates `i`, exactly.
pub fn is_generator(k: &Field, i: &Ideal, x: &Elem) -> bool {
    Ideal::principal(k, x).map(|j| &j == i).unwrap_or(false)
}

/// Norm bound used for a given ideal, exposed for reports.
pub fn principality_bound(k: &Field, i: &Ideal) -> Result<BigRational> {
    let (j, _) = i.integral_multiple(k);
    generator_t2_bound(k, &j.norm_int())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numfield::enumerate::DEFAULT_BUDGET;

    #[test]
    fn principality_examples() {
        let k = Field::quadratic(-5).unwrap();
        let s5 = Ideal::principal(&k, &k.elem(&[0, 1])).unwrap();
        let g = is_principal(&k, &s5, DEFAULT_BUDGET).unwrap().unwrap();
        assert!(is_generator(&k, &s5, &g));
        let p2 = &primes_above(&k, 2).unwrap()[0];
        assert!(is_principal(&k, &p2.ideal, DEFAULT_BUDGET).unwrap().is_none());
        let k = Field::quadratic(-1).unwrap();
        let i = Ideal::principal(&k, &k.elem(&[1, 1])).unwrap();
        assert!(is_principal(&k, &i, DEFAULT_BUDGET).unwrap().is_some());
    }

    #[test]
    fn class_group_examples() {
        for (d, inv) in [(-1, "0"), (-5, "Z/2"), (-23, "Z/3"), (-14, "Z/4"), (-21, "Z/2 ⊕ Z/2"), (10, "Z/2"), (2, "0"), (79, "Z/3")] {
            let k = Field::quadratic(d).unwrap();
            let cl = k.class_group().unwrap();
            assert_eq!(cl.group().invariants_string(), inv, "d = {d}");
        }
        let k = Field::quadratic(-5).unwrap();
        let cl = k.class_group().unwrap();
        let g = &cl.generator_ideals(&k)[0];
        assert_eq!(g, &primes_above(&k, 2).unwrap()[0].ideal);
    }

    #[test]
    fn s_class_group_examples() {
        let k = Field::quadratic(-5).unwrap();
        let c = SClassGroup::compute(&k, &PlaceSet::archimedean()).unwrap();
        assert_eq!(c.group().invariants_string(), "Z/2");
        let c = SClassGroup::compute(&k, &"inf,2".parse().unwrap()).unwrap();
        assert!(c.group().is_trivial());
        let k = Field::quadratic(-23).unwrap();
        let c = SClassGroup::compute(&k, &"inf,23".parse().unwrap()).unwrap();
        assert_eq!(c.group().invariants_string(), "Z/3");
    }

    #[test]
    fn dlog_is_a_homomorphism() {
        let k = Field::quadratic(-23).unwrap();
        let cl = k.class_group().unwrap();
        let p2 = primes_above(&k, 2).unwrap();
        let p3 = primes_above(&k, 3).unwrap();
        let a = cl.dlog(&k, &p2[0].ideal).unwrap();
        let b = cl.dlog(&k, &p3[0].ideal).unwrap();
        let ab = cl.dlog(&k, &p2[0].ideal.mul(&k, &p3[0].ideal)).unwrap();
        let sum: Vec<BigInt> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        assert!(cl.group().elem_eq(&ab, &sum));
        // conjugate primes have inverse classes
        let c = cl.dlog(&k, &p2[1].ideal).unwrap();
        let s: Vec<BigInt> = a.iter().zip(&c).map(|(x, y)| x + y).collect();
        assert!(cl.group().is_zero(&s));
    }
}
