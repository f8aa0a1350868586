//! Unit groups and S-unit groups with their Galois action.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::classgroup::is_principal;
use super::enumerate::{short_vectors, DEFAULT_BUDGET};
use super::ideal::{Ideal, PrimeIdeal};
use super::places::PlaceSet;
use super::{rat, rat_big, Elem, Field, FieldKind};
use crate::abelian::{lattice_basis, AbHom, FgAbGroup, IntMatrix};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use crate::gmodule::{FiniteGroup, GModule};

/// Units: a generator of the roots of unity and at most one fundamental unit.
#[derive(Clone, Debug)]
pub struct UnitGroup {
    torsion: Elem,
    torsion_order: u64,
    fundamental: Option<Elem>,
}

/// Serialized unit group; elements as power-basis coordinate strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitGroupRecord {
    pub torsion: Vec<String>,
    pub torsion_order: u64,
    pub fundamental: Option<Vec<String>>,
}

impl UnitGroup {
    pub fn record(&self) -> UnitGroupRecord {
        UnitGroupRecord {
            torsion: self.torsion.to_strings(),
            torsion_order: self.torsion_order,
            fundamental: self.fundamental.as_ref().map(|e| e.to_strings()),
        }
    }

    /// Rebuilds a unit group, checking that the elements are units of the stated kind.
    pub fn from_record(k: &Field, r: &UnitGroupRecord) -> Result<Self> {
        let torsion = Elem::from_strings(&r.torsion)?;
        if root_order(k, &torsion) != Some(r.torsion_order) {
            return Err(Error::Input("unit record: torsion generator has the wrong order".into()));
        }
        let fundamental = r.fundamental.as_ref().map(|v| Elem::from_strings(v)).transpose()?;
        if fundamental.is_some() != (k.unit_rank() == 1) {
            return Err(Error::Input("unit record: unit rank mismatch".into()));
        }
        if let Some(e) = &fundamental {
            if !k.norm(e).abs().is_one() || !k.is_integral(e) {
                return Err(Error::Input("unit record: fundamental unit is not a unit".into()));
            }
        }
        Ok(UnitGroup { torsion, torsion_order: r.torsion_order, fundamental })
    }
}

fn root_order(k: &Field, z: &Elem) -> Option<u64> {
    let mut p = z.clone();
    for n in 1..=24u64 {
        if p == k.one() {
            return Some(n);
        }
        p = k.mul(&p, z);
    }
    None
}

/// Exact floor of `(P + √d)/Q` for `Q ≠ 0` and non-square `d > 0`.
fn cf_floor(p: &BigInt, q: &BigInt, s: &BigInt) -> BigInt {
    let num = p + s;
    if q.is_positive() {
        Integer::div_floor(&num, q)
    } else {
        -(Integer::div_floor(&num, &-q) + BigInt::one())
    }
}

/// Fundamental unit `ε > 1` of `Q(√d)` for squarefree `d > 1`, with its norm.
///
/// Expands `θ = -ω̄` as a continued fraction, where `ω` generates the ring of
/// integers, and returns the first convergent `p/q` with `p + qω` a unit.
pub fn fundamental_unit(d: i64) -> Result<(Elem, i8)> {
    if d <= 1 || !super::is_squarefree(d) {
        return Err(Error::Input(format!("fundamental unit needs squarefree d > 1, got {d}")));
    }
    let k = Field::quadratic(d)?;
    let db = BigInt::from(d);
    let s = db.sqrt();
    let one_mod4 = d.rem_euclid(4) == 1;
    // θ = (P + √d)/Q
    let (mut pp, mut qq) = if one_mod4 { (BigInt::from(-1), BigInt::from(2)) } else { (BigInt::zero(), BigInt::one()) };
    let omega = if one_mod4 { k.scale(&k.elem(&[1, 1]), &BigRational::new(1.into(), 2.into())) } else { k.elem(&[0, 1]) };
    let (mut p0, mut p1) = (BigInt::zero(), BigInt::one());
    let (mut q0, mut q1) = (BigInt::one(), BigInt::zero());
    for _ in 0..10_000 {
        let a = cf_floor(&pp, &qq, &s);
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        let cand = k.add(&k.from_rational(rat_big(&p2)), &k.scale(&omega, &rat_big(&q2)));
        let nm = k.norm(&cand);
        if nm.abs().is_one() && !(q2.is_zero()) {
            let sign = if nm.is_positive() { 1 } else { -1 };
            return Ok((cand, sign));
        }
        (p0, p1) = (p1, p2);
        (q0, q1) = (q1, q2);
        // θ' = 1/(θ - a)
        let pn = &a * &qq - &pp;
        let qn = (&db - &pn * &pn) / &qq;
        pp = pn;
        qq = qn;
    }
    Err(Error::Budget(format!("continued fraction for {d} did not reach a unit")))
}

impl UnitGroup {
    pub(crate) fn compute(k: &Field) -> Result<Self> {
        let n = rat(k.degree() as i64);
        let mut roots: Vec<Elem> = Vec::new();
        for z in short_vectors(k, &k.integral_basis(), &n, DEFAULT_BUDGET)? {
            if k.t2(&z) == n {
                roots.push(k.neg(&z));
                roots.push(z);
            }
        }
        let mut best: Option<(u64, Elem)> = None;
        for z in &roots {
            if let Some(o) = root_order(k, z) {
                if best.as_ref().is_none_or(|(b, _)| o > *b) {
                    best = Some((o, z.clone()));
                }
            }
        }
        let (torsion_order, torsion) = best.ok_or_else(|| Error::Inconsistent("no roots of unity found".into()))?;
        let fundamental = match k.kind() {
            FieldKind::Rational => None,
            FieldKind::Quadratic if k.is_totally_imaginary() => None,
            FieldKind::Quadratic => Some(fundamental_unit(k.gens()[0])?.0),
            FieldKind::Biquadratic if k.is_totally_imaginary() => {
                let sub = k.real_quadratic_subfield().expect("real subfield");
                let eps = k.embed(&sub, &fundamental_unit(sub.gens()[0])?.0)?;
                Some(Self::unit_index_lift(k, &eps, &torsion, torsion_order).unwrap_or(eps))
            }
            FieldKind::Biquadratic => {
                return Err(Error::Unsupported("units of real biquadratic fields".into()));
            }
        };
        Ok(UnitGroup { torsion, torsion_order, fundamental })
    }

    /// A unit `η` with `η² = ζε` for some root of unity `ζ`, if one exists.
    fn unit_index_lift(k: &Field, eps: &Elem, zeta: &Elem, w: u64) -> Option<Elem> {
        let n = k.degree();
        let mut z = k.one();
        for _ in 0..w {
            let target = k.mul(&z, eps);
            let emb = k.embeddings(&target);
            for signs in 0..(1u32 << n) {
                let roots: Vec<_> = emb
                    .iter()
                    .enumerate()
                    .map(|(i, x)| if signs >> i & 1 == 1 { -x.sqrt() } else { x.sqrt() })
                    .collect();
                let cand = k.from_embeddings(&roots, 4);
                if k.mul(&cand, &cand) == target {
                    return Some(cand);
                }
            }
            z = k.mul(&z, zeta);
        }
        None
    }

    pub fn torsion_generator(&self) -> &Elem {
        &self.torsion
    }

    pub fn torsion_order(&self) -> u64 {
        self.torsion_order
    }

    pub fn fundamental(&self) -> Option<&Elem> {
        self.fundamental.as_ref()
    }

    pub fn rank(&self) -> usize {
        usize::from(self.fundamental.is_some())
    }

    /// Writes a unit as `ζ^t η^m`, returning `(t mod w, m)`.
    pub fn dlog(&self, k: &Field, u: &Elem) -> Result<(u64, BigInt)> {
        if !k.norm(u).abs().is_one() || !k.is_integral(u) {
            return Err(Error::Input("element is not a unit".into()));
        }
        let mut m = BigInt::zero();
        let mut rest = u.clone();
        if let Some(eta) = &self.fundamental {
            let lu = k.embeddings(u)[0].norm().ln();
            let le = k.embeddings(eta)[0].norm().ln();
            let e = (lu / le).round() as i64;
            m = BigInt::from(e);
            rest = k.mul(u, &k.pow(eta, &BigInt::from(-e))?);
        }
        let mut z = k.one();
        for t in 0..self.torsion_order {
            if z == rest {
                return Ok((t, m));
            }
            z = k.mul(&z, &self.torsion);
        }
        Err(Error::Inconsistent("unit logarithm failed to land on a root of unity".into()))
    }
}

/// `O*_{K,S}` with explicit generators: a root of unity, the fundamental unit,
/// and one generator per basis vector of the principal part of the S-primes.
#[derive(Clone, Debug)]
pub struct SUnitGroup {
    field: Field,
    s: PlaceSet,
    primes: Vec<PrimeIdeal>,
    units: UnitGroup,
    s_gens: Vec<Elem>,
    /// Valuation vectors of `s_gens` at `primes`, a basis of the relation lattice.
    s_vals: Vec<Vec<BigInt>>,
    group: FgAbGroup,
}

impl SUnitGroup {
    pub fn compute(k: &Field, s: &PlaceSet) -> Result<Self> {
        let units = k.units()?.clone();
        let primes = s.primes_in(k)?;
        let ns = primes.len();
        let mut s_gens = Vec::new();
        let mut s_vals = Vec::new();
        if ns > 0 {
            let cl = k.class_group()?;
            let cols = primes.iter().map(|p| cl.dlog(k, &p.ideal)).collect::<Result<Vec<_>>>()?;
            let map = AbHom::new(FgAbGroup::free(ns), cl.group().clone(), IntMatrix::from_cols(&cols, cl.group().gens()))?;
            let kernel = map.kernel().generator_vecs();
            let basis = lattice_basis(&IntMatrix::from_rows(&kernel, ns)).row_vecs();
            if basis.len() != ns {
                return Err(Error::Inconsistent("S-prime relation lattice has wrong rank".into()));
            }
            for v in basis {
                let mut ideal = Ideal::unit(k);
                for (e, p) in v.iter().zip(&primes) {
                    let e = e.to_i64().expect("small exponent");
                    if e != 0 {
                        ideal = ideal.mul(k, &if e > 0 { p.ideal.pow(k, e) } else { p.inverse().pow(k, -e) });
                    }
                }
                let g = is_principal(k, &ideal, DEFAULT_BUDGET)?
                    .ok_or_else(|| Error::Inconsistent("relation ideal is not principal".into()))?;
                s_gens.push(g);
                s_vals.push(v);
            }
        }
        let r = units.rank();
        let w = units.torsion_order();
        let gens = 1 + r + ns;
        let mut rel = vec![BigInt::zero(); gens];
        rel[0] = BigInt::from(w);
        let group = FgAbGroup::from_presentation(gens, IntMatrix::from_rows(&[rel], gens))?;
        Ok(SUnitGroup { field: k.clone(), s: s.clone(), primes, units, s_gens, s_vals, group })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn places(&self) -> &PlaceSet {
        &self.s
    }

    /// The finite primes of `S_K`.
    pub fn primes(&self) -> &[PrimeIdeal] {
        &self.primes
    }

    pub fn units(&self) -> &UnitGroup {
        &self.units
    }

    /// Generators in presentation order: root of unity, fundamental unit, S-generators.
    pub fn generators(&self) -> Vec<Elem> {
        let mut v = vec![self.units.torsion_generator().clone()];
        v.extend(self.units.fundamental().cloned());
        v.extend(self.s_gens.iter().cloned());
        v
    }

    pub fn s_generators(&self) -> &[Elem] {
        &self.s_gens
    }

    /// `Z/w ⊕ Z^{r + #S_K^fin}`.
    pub fn group(&self) -> &FgAbGroup {
        &self.group
    }

    pub fn rank(&self) -> usize {
        self.group.free_rank()
    }

    pub fn torsion_order(&self) -> u64 {
        self.units.torsion_order()
    }

    /// Valuations at the primes of `S_K`.
    pub fn valuations(&self, x: &Elem) -> Result<Vec<BigInt>> {
        let k = &self.field;
        let i = Ideal::principal(k, x)?;
        Ok(self.primes.iter().map(|p| BigInt::from(p.valuation(k, &i))).collect())
    }

    /// Coordinates of an S-unit in the generators.
    pub fn dlog(&self, x: &Elem) -> Result<Vec<BigInt>> {
        let k = &self.field;
        let vals = self.valuations(x)?;
        let i = Ideal::principal(k, x)?;
        let total: BigRational = self.primes.iter().zip(&vals).fold(BigRational::one(), |acc, (p, v)| {
            let nv = rat_big(&p.norm());
            let e = v.to_i32().unwrap();
            if e >= 0 {
                acc * nv.pow(e)
            } else {
                acc / nv.pow(-e)
            }
        });
        if i.norm() != total {
            return Err(Error::Input("element is not an S-unit".into()));
        }
        let ns = self.primes.len();
        let coeffs = if ns == 0 {
            vec![]
        } else {
            let a = IntMatrix::from_cols(&self.s_vals, ns);
            crate::abelian::solve_int(&a, &vals).ok_or_else(|| Error::Inconsistent("S-unit valuations not in span".into()))?
        };
        let mut u = x.clone();
        for (c, g) in coeffs.iter().zip(&self.s_gens) {
            u = k.mul(&u, &k.pow(g, &-c)?);
        }
        let (t, m) = self.units.dlog(k, &u)?;
        let mut out = vec![BigInt::from(t)];
        if self.units.rank() == 1 {
            out.push(m);
        }
        out.extend(coeffs);
        Ok(out)
    }

    /// Element with the given coordinates.
    pub fn element(&self, c: &[BigInt]) -> Result<Elem> {
        let k = &self.field;
        let mut x = k.one();
        for (e, g) in c.iter().zip(self.generators()) {
            x = k.mul(&x, &k.pow(&g, e)?);
        }
        Ok(x)
    }

    /// Relative Galois group `Gal(K/F)` as a group on the fixing masks of `F`.
    pub fn relative_group(&self, base: &Field) -> Result<(FiniteGroup, Vec<usize>)> {
        let masks = self.field.fixing_masks(base)?;
        let g = self.field.galois_group().subgroup(&masks)?;
        Ok((g, masks))
    }

    /// The S-units as a `Gal(K/F)`-module.
    pub fn galois_module(&self, base: &Field) -> Result<GModule> {
        let (g, masks) = self.relative_group(base)?;
        let gens = self.generators();
        let mut action = Vec::new();
        for &m in &masks {
            let cols = gens.iter().map(|x| self.dlog(&self.field.conj(x, m))).collect::<Result<Vec<_>>>()?;
            action.push(IntMatrix::from_cols(&cols, gens.len()));
        }
        GModule::new(g, self.group.clone(), action)
    }
}
