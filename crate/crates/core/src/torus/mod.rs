//! Tori split by a quadratic extension `K/F`: component groups, S-class groups
//! via the resolution `0 → G_m → R_{K/F}(G_m) → T′ → 0`, capitulation, Ono
//! invariants, and the norm-torus sequences over `Q`.
//!
//! A torus is given by its character lattice `X` over `Gal(K/F) ≅ C2` and is
//! reduced to `G_m^a × (R^1_{K/F} G_m)^b × R_{K/F}(G_m)^c` by [`decompose_torus`].
//! The norm-one torus `R^1` is identified with `R/G_m` through `x ↦ x/σ(x)`.

pub mod local;
pub mod normtorus;
pub mod rank;
pub mod sequences;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::abelian::{AbHom, FgAbGroup, IntMatrix, SubgroupData};
use crate::error::{Error, Result};
use crate::gmodule::{decompose_c2, C2Decomposition, FiniteGroup, GLattice, GroupRecord, LatticeRecord};
use crate::numfield::classgroup::{capitulation_map, is_principal, SClassGroup};
use crate::numfield::enumerate::DEFAULT_BUDGET;
use crate::numfield::places::{places_above, PlaceData, PlaceSet};
use crate::numfield::{prime_factors, Elem, Field, FieldSpec, Ideal, SUnitGroup};

pub use local::{component_group, delta_cokernel, LocalComponentData};
pub use normtorus::{
    c_norm_gm, ono_coflasque, sha_norm_gm, verify_corollary_8_5, w_group_gm, Corollary85Report, NormCokernel, ShaNorm,
    WGroup,
};
pub use rank::{ker_phi_check, r_equivalence_note, rank_report, KerPhiCheck, REquivalenceNote, RankReport};
pub use sequences::{
    capitulation_gm, ono_flasque, sha1_s_units, verify_theorem_6_1, CapitulationResult, OnoResult, Theorem61Report,
};

/// An `F`-torus split by `K`, with its character lattice and a set of places of `F`.
#[derive(Clone, Debug)]
pub struct TorusSpec {
    pub base: Field,
    pub splitting: Field,
    pub lattice: GLattice,
    pub s: PlaceSet,
}

/// JSON form of a [`TorusSpec`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusRecord {
    pub base: FieldSpec,
    pub splitting: FieldSpec,
    pub lattice: LatticeRecord,
    #[serde(rename = "S")]
    pub s: PlaceSet,
}

impl TorusSpec {
    pub fn new(base: Field, splitting: Field, lattice: GLattice, s: PlaceSet) -> Result<Self> {
        let masks = splitting.fixing_masks(&base)?;
        if masks.len() != lattice.group().order() {
            return Err(Error::Input(format!(
                "lattice group has order {}, but Gal({}/{}) has order {}",
                lattice.group().order(),
                splitting.name(),
                base.name(),
                masks.len()
            )));
        }
        Ok(TorusSpec { base, splitting, lattice, s })
    }

    pub fn from_record(r: &TorusRecord) -> Result<Self> {
        Self::new(r.base.build()?, r.splitting.build()?, r.lattice.build()?, r.s.clone())
    }

    pub fn record(&self) -> Result<TorusRecord> {
        let group = match self.lattice.group().order() {
            1 => GroupRecord::Named("C1".into()),
            2 => GroupRecord::Named("C2".into()),
            _ => GroupRecord::Named("C2xC2".into()),
        };
        Ok(TorusRecord {
            base: self.base.spec(),
            splitting: self.splitting.spec(),
            lattice: LatticeRecord::from_lattice(&self.lattice, group)?,
            s: self.s.clone(),
        })
    }

    /// `G_m` over `F`, viewed as split by `K`.
    pub fn gm(base: &Field, top: &Field, s: &PlaceSet) -> Result<Self> {
        Self::new(base.clone(), top.clone(), GLattice::trivial(FiniteGroup::cyclic(2), 1), s.clone())
    }

    /// The norm-one torus `R^1_{K/F} G_m`, character lattice `Z_sign`.
    pub fn norm_one(base: &Field, top: &Field, s: &PlaceSet) -> Result<Self> {
        Self::new(base.clone(), top.clone(), GLattice::sign(FiniteGroup::cyclic(2))?, s.clone())
    }

    /// `R_{K/F}(G_m)`, character lattice `Z[C2]`.
    pub fn weil_restriction(base: &Field, top: &Field, s: &PlaceSet) -> Result<Self> {
        Self::new(base.clone(), top.clone(), GLattice::regular(&FiniteGroup::cyclic(2)), s.clone())
    }

    /// Galois masks of `Gal(K/F)`, in the order of the lattice group's elements
    /// (identity first).
    pub fn masks(&self) -> Result<Vec<usize>> {
        self.splitting.fixing_masks(&self.base)
    }

    /// Lattice group element corresponding to a Galois mask.
    pub(crate) fn lattice_element(&self, mask: usize) -> Result<usize> {
        let masks = self.masks()?;
        let g = self.lattice.group();
        if g.order() != 2 {
            return Err(Error::Unsupported("only quadratic splitting fields are supported here".into()));
        }
        let other = 1 - g.identity();
        match masks.iter().position(|&m| m == mask) {
            Some(0) => Ok(g.identity()),
            Some(_) => Ok(other),
            None => Err(Error::Input(format!("mask {mask} is not in Gal(K/F)"))),
        }
    }

    /// Places of `F` where inertia acts nontrivially on `X`.
    pub fn bad_places(&self) -> Result<Vec<PlaceData>> {
        let mut out = Vec::new();
        for v in ramified_places(&self.splitting, &self.base)? {
            let mut trivial = true;
            for &m in &v.inertia_group {
                let g = self.lattice_element(m)?;
                if *self.lattice.action(g) != IntMatrix::identity(self.lattice.rank()) {
                    trivial = false;
                }
            }
            if !trivial {
                out.push(v);
            }
        }
        Ok(out)
    }
}

/// Multiplicities `(a, b, c)` of `G_m`, the norm-one torus and `R_{K/F}(G_m)`.
pub fn decompose_torus(t: &TorusSpec) -> Result<C2Decomposition> {
    if t.lattice.group().order() != 2 {
        return Err(Error::Unsupported("decomposition needs splitting group C2".into()));
    }
    decompose_c2(&t.lattice)
}

/// All places of `base` ramified in `top`.
pub fn ramified_places(top: &Field, base: &Field) -> Result<Vec<PlaceData>> {
    let mut out = Vec::new();
    for p in prime_factors(top.discriminant()) {
        let p = u64::try_from(p).map_err(|_| Error::Unsupported("huge discriminant".into()))?;
        out.extend(places_above(top, base, p)?.into_iter().filter(|d| d.local_type.is_ramified()));
    }
    Ok(out)
}

/// `{∞} ∪ {p : some prime above p ramifies in K/F}`.
pub fn ramified_place_set(top: &Field, base: &Field) -> Result<PlaceSet> {
    let mut ps: Vec<u64> = ramified_places(top, base)?.iter().map(|v| v.p).collect();
    ps.dedup();
    PlaceSet::with_primes(&ps)
}

/// A class of `C_{F,S}` that dies in `C_{K,S_K}`, with the element generating
/// its extension up to `S_K`-primes.
#[derive(Clone, Debug)]
pub struct CapitulatedClass {
    /// Coordinates in `C_{F,S}`.
    pub class: Vec<BigInt>,
    pub ideal: Ideal,
    /// `x` with `(x) = a O_K · ∏ P^{n_P}` over the primes `P` of `S_K`.
    pub generator: Elem,
}

/// Everything attached to a quadratic extension `K/F` and a set `S` of places of `F`.
#[derive(Clone, Debug)]
pub struct QuadraticExtension {
    pub base: Field,
    pub top: Field,
    pub s: PlaceSet,
    /// Galois mask of the generator `σ` of `Gal(K/F)`.
    pub sigma: usize,
    pub cf: SClassGroup,
    pub ck: SClassGroup,
    pub uf: SUnitGroup,
    pub uk: SUnitGroup,
    /// The capitulation map `C_{F,S} → C_{K,S_K}`.
    pub j: AbHom,
}

impl QuadraticExtension {
    pub fn new(base: &Field, top: &Field, s: &PlaceSet) -> Result<Self> {
        let masks = top.fixing_masks(base)?;
        if masks.len() != 2 {
            return Err(Error::Precondition(format!("[{}:{}] must be 2", top.name(), base.name())));
        }
        let cf = SClassGroup::compute(base, s)?;
        let ck = SClassGroup::compute(top, s)?;
        let uf = SUnitGroup::compute(base, s)?;
        let uk = SUnitGroup::compute(top, s)?;
        let j = capitulation_map(base, &cf, top, &ck)?;
        Ok(QuadraticExtension { base: base.clone(), top: top.clone(), s: s.clone(), sigma: masks[1], cf, ck, uf, uk, j })
    }

    pub fn from_torus(t: &TorusSpec) -> Result<Self> {
        Self::new(&t.base, &t.splitting, &t.s)
    }

    pub fn conj(&self, x: &Elem) -> Elem {
        self.top.conj(x, self.sigma)
    }

    /// `x / σ(x)`.
    pub fn quotient_by_conj(&self, x: &Elem) -> Result<Elem> {
        self.top.div(x, &self.conj(x))
    }

    /// A power-basis element `β` with `σ(β) = -β`.
    pub fn anti_invariant(&self) -> Elem {
        let t = (1..self.top.degree())
            .find(|t| (t & self.sigma).count_ones() % 2 == 1)
            .expect("σ is nontrivial");
        self.top.power_basis(t)
    }

    /// The unit-group inclusion `O*_{F,S} → O*_{K,S_K}`.
    pub fn unit_inclusion(&self) -> Result<AbHom> {
        let cols = self
            .uf
            .generators()
            .iter()
            .map(|g| self.uk.dlog(&self.top.embed(&self.base, g)?))
            .collect::<Result<Vec<_>>>()?;
        AbHom::new(self.uf.group().clone(), self.uk.group().clone(), IntMatrix::from_cols(&cols, self.uk.group().gens()))
    }

    /// The action of `σ` on `O*_{K,S_K}`.
    pub fn unit_action(&self) -> Result<AbHom> {
        let cols = self
            .uk
            .generators()
            .iter()
            .map(|g| self.uk.dlog(&self.conj(g)))
            .collect::<Result<Vec<_>>>()?;
        AbHom::new(self.uk.group().clone(), self.uk.group().clone(), IntMatrix::from_cols(&cols, self.uk.group().gens()))
    }

    /// The action of `σ` on `C_{K,S_K}`.
    pub fn class_action(&self) -> Result<AbHom> {
        let cl = self.ck.class_group();
        let cols = cl
            .factor_base()
            .iter()
            .map(|p| cl.dlog(&self.top, &p.ideal.conj(&self.top, self.sigma)))
            .collect::<Result<Vec<_>>>()?;
        AbHom::new(self.ck.group().clone(), self.ck.group().clone(), IntMatrix::from_cols(&cols, self.ck.group().gens()))
    }

    /// Generators of `Ker j`, each with an explicit generator of its extension.
    pub fn capitulated_classes(&self) -> Result<Vec<CapitulatedClass>> {
        let cl_k = self.ck.class_group();
        let s_classes = self
            .ck
            .s_primes()
            .iter()
            .map(|p| cl_k.dlog(&self.top, &p.ideal))
            .collect::<Result<Vec<_>>>()?;
        let s_span = SubgroupData::from_vectors(cl_k.group().clone(), &s_classes);
        let mut out = Vec::new();
        for v in self.j.kernel().generator_vecs() {
            if self.cf.group().is_zero(&v) {
                continue;
            }
            let ideal = self.cf.class_group().ideal_of(&self.base, &v);
            let ext = self.top.embed_ideal(&self.base, &ideal)?;
            let c = s_span
                .coords(&cl_k.dlog(&self.top, &ext)?)
                .ok_or_else(|| Error::Inconsistent("capitulated class outside the S-prime span".into()))?;
            let mut j = ext;
            for (ci, p) in c.iter().zip(self.ck.s_primes()) {
                let e = i64::try_from(ci).map_err(|_| Error::Inconsistent("huge exponent".into()))?;
                if e != 0 {
                    j = j.mul(&self.top, &p.ideal.pow(&self.top, -e));
                }
            }
            let generator = is_principal(&self.top, &j, DEFAULT_BUDGET)?
                .ok_or_else(|| Error::Inconsistent("capitulated ideal is not principal".into()))?;
            out.push(CapitulatedClass { class: v, ideal, generator });
        }
        Ok(out)
    }

    /// Ramified places of `F` outside `S`.
    pub fn ramified_outside_s(&self) -> Result<Vec<PlaceData>> {
        Ok(ramified_places(&self.top, &self.base)?.into_iter().filter(|v| !self.s.contains_prime(v.p)).collect())
    }

    /// The invariant of a norm-one element `u` in `H^1(G_w, O_w^*) ≅ Z/2` at a
    /// ramified place: write `u = β/σ(β)` and take `ord_w(β) mod 2`.
    pub fn local_h1_invariant(&self, v: &PlaceData, u: &Elem) -> Result<BigInt> {
        let k = &self.top;
        let one_plus = k.add(&k.one(), u);
        let beta = if one_plus.is_zero() { self.anti_invariant() } else { one_plus };
        let ord = v.chosen().elem_valuation(k, &beta)?;
        Ok(BigInt::from(ord.rem_euclid(2)))
    }
}

/// Result of a torus class-group computation.
#[derive(Clone, Debug, Serialize)]
pub struct ClassGroupResult {
    pub group: FgAbGroup,
    pub route: ClassGroupRoute,
    /// The classical groups that entered, as `name: invariants`.
    pub constituents: Vec<String>,
    /// Cross-checks run alongside, with their verdicts.
    pub checks: Vec<(String, bool)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassGroupRoute {
    Resolution,
    Assembly,
    Direct,
}

/// `C_{T,F,S}` for a quasi-trivial torus: one S-class group per orbit block.
pub fn quasi_trivial_class_group(t: &TorusSpec) -> Result<ClassGroupResult> {
    let d = decompose_torus(t)?;
    if d.b != 0 {
        return Err(Error::Precondition("lattice is not a permutation lattice".into()));
    }
    let cf = SClassGroup::compute(&t.base, &t.s)?;
    let ck = SClassGroup::compute(&t.splitting, &t.s)?;
    let mut parts = vec![cf.group().clone(); d.a];
    parts.extend(vec![ck.group().clone(); d.c]);
    Ok(ClassGroupResult {
        group: FgAbGroup::direct_sum(&parts),
        route: ClassGroupRoute::Direct,
        constituents: vec![
            format!("C_{{F,S}}^{}: {}", d.a, cf.group().invariants_string()),
            format!("C_{{K,S_K}}^{}: {}", d.c, ck.group().invariants_string()),
        ],
        checks: vec![],
    })
}

/// `C_{T′,F,S} ≅ coker(C_{F,S} → C_{K,S_K})` for the norm-one torus.
pub fn norm_one_class_group(base: &Field, top: &Field, s: &PlaceSet) -> Result<ClassGroupResult> {
    let ext = QuadraticExtension::new(base, top, s)?;
    Ok(norm_one_from(&ext))
}

pub(crate) fn norm_one_from(ext: &QuadraticExtension) -> ClassGroupResult {
    ClassGroupResult {
        group: ext.j.coker(),
        route: ClassGroupRoute::Resolution,
        constituents: vec![
            format!("C_{{F,S}}: {}", ext.cf.group().invariants_string()),
            format!("C_{{K,S_K}}: {}", ext.ck.group().invariants_string()),
            format!("Ker j: {}", ext.j.kernel().as_group().invariants_string()),
        ],
        checks: vec![],
    }
}

/// `C_{T,F,S} ≅ C_{F,S}^a × C_{T′,F,S}^b × C_{K,S_K}^c`.
pub fn class_group(t: &TorusSpec) -> Result<ClassGroupResult> {
    let d = decompose_torus(t)?;
    let ext = QuadraticExtension::from_torus(t)?;
    let cf = ext.cf.group().clone();
    let ck = ext.ck.group().clone();
    let ct = ext.j.coker();
    let mut parts = vec![cf.clone(); d.a];
    parts.extend(vec![ct.clone(); d.b]);
    parts.extend(vec![ck.clone(); d.c]);
    let group = FgAbGroup::direct_sum(&parts);
    let mut checks = vec![];
    if d.b == 0 {
        let direct = quasi_trivial_class_group(t)?;
        checks.push(("quasi-trivial route agrees".to_string(), direct.group.is_isomorphic(&group)));
    }
    Ok(ClassGroupResult {
        group,
        route: ClassGroupRoute::Assembly,
        constituents: vec![
            format!("C_{{F,S}}^{}: {}", d.a, cf.invariants_string()),
            format!("C_{{T',F,S}}^{}: {}", d.b, ct.invariants_string()),
            format!("C_{{K,S_K}}^{}: {}", d.c, ck.invariants_string()),
        ],
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(txt: &str) -> PlaceSet {
        txt.parse().unwrap()
    }

    #[test]
    fn decomposition_examples() {
        let q = Field::rational();
        let k = Field::quadratic(-5).unwrap();
        let inf = PlaceSet::archimedean();
        let d = |t: TorusSpec| {
            let d = decompose_torus(&t).unwrap();
            (d.a, d.b, d.c)
        };
        assert_eq!(d(TorusSpec::gm(&q, &k, &inf).unwrap()), (1, 0, 0));
        assert_eq!(d(TorusSpec::norm_one(&q, &k, &inf).unwrap()), (0, 1, 0));
        assert_eq!(d(TorusSpec::weil_restriction(&q, &k, &inf).unwrap()), (0, 0, 1));
    }

    #[test]
    fn record_round_trip() {
        let json = r#"{"base":"Q","splitting":{"quadratic":-5},"lattice":{"group":"C2","rank":2,"action":{"s":[[0,1],[1,0]]}},"S":["inf",2,5]}"#;
        let r: TorusRecord = serde_json::from_str(json).unwrap();
        let t = TorusSpec::from_record(&r).unwrap();
        assert_eq!(t.s.finite_primes(), vec![2, 5]);
        let d = decompose_torus(&t).unwrap();
        assert_eq!((d.a, d.b, d.c), (0, 0, 1));
        let back = TorusSpec::from_record(&t.record().unwrap()).unwrap();
        assert_eq!(back.lattice.action(1), t.lattice.action(1));
    }

    #[test]
    fn quasi_trivial_examples() {
        let q = Field::rational();
        let k = Field::quadratic(-5).unwrap();
        let t = TorusSpec::gm(&q, &k, &s("inf")).unwrap();
        assert!(quasi_trivial_class_group(&t).unwrap().group.is_trivial());
        let t = TorusSpec::weil_restriction(&q, &k, &s("inf")).unwrap();
        assert_eq!(quasi_trivial_class_group(&t).unwrap().group.invariants_string(), "Z/2");
        let k = Field::quadratic(-23).unwrap();
        let t = TorusSpec::weil_restriction(&q, &k, &s("inf,23")).unwrap();
        assert_eq!(quasi_trivial_class_group(&t).unwrap().group.invariants_string(), "Z/3");
        let t = TorusSpec::norm_one(&q, &k, &s("inf")).unwrap();
        assert!(quasi_trivial_class_group(&t).is_err());
    }

    #[test]
    fn norm_one_examples() {
        let q = Field::rational();
        let r = norm_one_class_group(&q, &Field::quadratic(-23).unwrap(), &s("inf")).unwrap();
        assert_eq!(r.group.invariants_string(), "Z/3");
        let r = norm_one_class_group(&q, &Field::quadratic(-5).unwrap(), &s("inf,2,5")).unwrap();
        assert!(r.group.is_trivial());
        let f = Field::quadratic(-5).unwrap();
        let k = Field::biquadratic(-5, -1).unwrap();
        let r = norm_one_class_group(&f, &k, &s("inf")).unwrap();
        assert!(r.group.is_trivial());
    }

    #[test]
    fn assembly_examples() {
        let q = Field::rational();
        let k = Field::quadratic(-5).unwrap();
        let x = GLattice::direct_sum(&[GLattice::regular(&FiniteGroup::cyclic(2)), GLattice::trivial(FiniteGroup::cyclic(2), 1)])
            .unwrap();
        let t = TorusSpec::new(q.clone(), k, x, s("inf")).unwrap();
        let r = class_group(&t).unwrap();
        assert_eq!(r.group.invariants_string(), "Z/2");
        assert!(r.checks.iter().all(|(_, ok)| *ok));
        let t = TorusSpec::norm_one(&q, &Field::quadratic(-23).unwrap(), &s("inf")).unwrap();
        assert_eq!(class_group(&t).unwrap().group.invariants_string(), "Z/3");
        for set in ["inf", "inf,2", "inf,3,7"] {
            let t = TorusSpec::gm(&q, &Field::quadratic(-14).unwrap(), &s(set)).unwrap();
            assert!(class_group(&t).unwrap().group.is_trivial());
        }
    }

    #[test]
    fn bad_places_from_lattice() {
        let q = Field::rational();
        let k = Field::quadratic(-5).unwrap();
        let inf = PlaceSet::archimedean();
        assert!(TorusSpec::gm(&q, &k, &inf).unwrap().bad_places().unwrap().is_empty());
        let ps: Vec<u64> = TorusSpec::weil_restriction(&q, &k, &inf).unwrap().bad_places().unwrap().iter().map(|v| v.p).collect();
        assert_eq!(ps, vec![2, 5]);
    }
}
