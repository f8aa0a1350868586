//! Local data at a place `v` of `F`: the component group `Φ_v`, the functionals
//! realizing `ϑ_v`, and the cokernel of `δ_v: Φ_v → Φ_{w_v}^{G(w_v)}`.
//!
//! With `Y = Hom(X, Z)` and `I` the inertia group at `w_v`, the image of
//! `T(F_v)` under `ord_{w_v}` is `e·Y^I + N_I(Y)`, so
//! `coker δ_v = Y^I / (e·Y^I + N_I Y)`; for `I` trivial it vanishes.

use num_bigint::BigInt;
use serde::Serialize;

use super::{decompose_torus, TorusSpec};
use crate::abelian::{solve_int, FgAbGroup, IntMatrix};
use crate::error::{Error, Result};
use crate::numfield::places::{LocalType, PlaceData};

#[derive(Clone, Debug, Serialize)]
pub struct LocalComponentData {
    pub p: u64,
    pub local_type: LocalType,
    pub e: u32,
    pub f: u32,
    pub g: u32,
    /// The chosen prime `w_v`, as an HNF description.
    pub chosen_prime: String,
    pub phi: FgAbGroup,
    /// One entry per indecomposable summand, naming the functional realizing `ϑ_v`.
    pub theta_description: Vec<String>,
    pub delta_cokernel: FgAbGroup,
    /// `rank X^{D_v}`.
    pub d_v: usize,
    /// `(Z/e_v)^{d_v}`.
    pub predicted_cokernel: FgAbGroup,
    pub matches_prediction: bool,
    /// Index of `Im N_v` in `Φ_v`: `f_v` per `G_m` summand, `1` for the others.
    pub norm_image_index: u64,
}

/// `(Z/e)^{d}`.
fn power_of_cyclic(e: u32, d: usize) -> FgAbGroup {
    if e <= 1 {
        return FgAbGroup::trivial();
    }
    FgAbGroup::from_invariants(&vec![BigInt::from(e); d], 0).expect("valid invariants")
}

/// `Y^I / (e·Y^I + N_I Y)` for `Y = Hom(X, Z)`.
pub fn delta_cokernel(t: &TorusSpec, v: &PlaceData) -> Result<FgAbGroup> {
    let inertia = v.inertia_group.iter().map(|&m| t.lattice_element(m)).collect::<Result<Vec<_>>>()?;
    if inertia.len() <= 1 {
        return Ok(FgAbGroup::trivial());
    }
    let y = t.lattice.dual();
    let n = y.rank();
    let fixed = y.fixed_basis(&inertia);
    let r = fixed.len();
    if r == 0 {
        return Ok(FgAbGroup::trivial());
    }
    let basis = IntMatrix::from_cols(&fixed, n);
    let mut norm = IntMatrix::zeros(n, n);
    for &g in &inertia {
        norm = norm.add(y.action(g));
    }
    let e = BigInt::from(v.e);
    let mut relations = Vec::new();
    for b in &fixed {
        let scaled: Vec<BigInt> = b.iter().map(|x| x * &e).collect();
        relations.push(solve_int(&basis, &scaled).expect("in the fixed lattice"));
    }
    for c in norm.col_vecs() {
        relations.push(
            solve_int(&basis, &c).ok_or_else(|| Error::Inconsistent("norm image is not inertia-fixed".into()))?,
        );
    }
    FgAbGroup::from_presentation(r, IntMatrix::from_rows(&relations, r))
}

/// `Φ_v`, the `ϑ_v` recipe, and the `δ_v` cokernel for a torus split by a quadratic field.
pub fn component_group(t: &TorusSpec, v: &PlaceData) -> Result<LocalComponentData> {
    if v.local_type == LocalType::RamifiedWild && !t.s.contains_prime(v.p) {
        return Err(Error::Precondition(format!("wildly ramified place {} must lie in S", v.p)));
    }
    let d = decompose_torus(t)?;
    let mut parts = Vec::new();
    let mut theta = Vec::new();
    for _ in 0..d.a {
        parts.push(FgAbGroup::free(1));
        theta.push("G_m: ord_v".to_string());
    }
    for _ in 0..d.b {
        let (phi, recipe) = match v.local_type {
            LocalType::Split => (FgAbGroup::free(1), "norm-one: ord_w(β) - ord_σw(β) for t = β/σ(β)"),
            LocalType::Inert => (FgAbGroup::trivial(), "norm-one: zero"),
            LocalType::RamifiedTame | LocalType::RamifiedWild => {
                (FgAbGroup::cyclic(2), "norm-one: ord_w(β) mod 2 for t = β/σ(β), i.e. t mod w = ±1")
            }
            LocalType::PartiallySplit => {
                return Err(Error::Unsupported("partially split places need a degree-4 splitting group".into()))
            }
        };
        parts.push(phi);
        theta.push(recipe.to_string());
    }
    for _ in 0..d.c {
        parts.push(FgAbGroup::free(v.g as usize));
        theta.push("R_{K/F}(G_m): (ord_w)_{w|v}".to_string());
    }
    let decomposition = v.decomposition_group.iter().map(|&m| t.lattice_element(m)).collect::<Result<Vec<_>>>()?;
    let d_v = t.lattice.fixed_basis(&decomposition).len();
    let delta = delta_cokernel(t, v)?;
    let predicted = power_of_cyclic(v.e, d_v);
    Ok(LocalComponentData {
        p: v.p,
        local_type: v.local_type,
        e: v.e,
        f: v.f,
        g: v.g,
        chosen_prime: v.chosen().ideal.describe(&t.splitting),
        phi: FgAbGroup::direct_sum(&parts),
        theta_description: theta,
        matches_prediction: delta.is_isomorphic(&predicted),
        delta_cokernel: delta,
        d_v,
        predicted_cokernel: predicted,
        norm_image_index: u64::from(v.f).pow(d.a as u32),
    })
}

/// The norm-one functional at `v` evaluated on `t = β/σ(β)`, in `Φ_v` coordinates.
pub fn norm_one_theta(t: &TorusSpec, v: &PlaceData, beta: &crate::numfield::Elem) -> Result<Vec<BigInt>> {
    let k = &t.splitting;
    match v.local_type {
        LocalType::Split => {
            let a = v.primes[0].elem_valuation(k, beta)?;
            let b = v.primes[1].elem_valuation(k, beta)?;
            Ok(vec![BigInt::from(a - b)])
        }
        LocalType::Inert => Ok(vec![]),
        LocalType::RamifiedTame | LocalType::RamifiedWild => {
            Ok(vec![BigInt::from(v.chosen().elem_valuation(k, beta)?.rem_euclid(2))])
        }
        LocalType::PartiallySplit => Err(Error::Unsupported("partially split place".into())),
    }
}

/// Reduction of a `w`-unit modulo a prime of residue degree one, as an integer in `[0, p)`.
pub fn reduce_mod_prime(t: &TorusSpec, v: &PlaceData, x: &crate::numfield::Elem) -> Result<Option<u64>> {
    let k = &t.splitting;
    let w = v.chosen();
    if w.f != 1 || w.elem_valuation(k, x)? != 0 {
        return Ok(None);
    }
    for c in 0..v.p {
        let diff = k.sub(x, &k.from_int(c as i64));
        if diff.is_zero() || w.elem_valuation(k, &diff)? > 0 {
            return Ok(Some(c));
        }
    }
    Err(Error::Inconsistent("no residue found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{Signed, Zero};
    use crate::numfield::places::{split_prime, PlaceSet};
    use crate::numfield::{rat, Field};

    fn inf() -> PlaceSet {
        PlaceSet::archimedean()
    }

    #[test]
    fn component_group_examples() {
        let q = Field::rational();
        let k = Field::quadratic(-5).unwrap();
        let v = split_prime(&k, &q, 3).unwrap();
        let t = TorusSpec::weil_restriction(&q, &k, &inf()).unwrap();
        assert_eq!(component_group(&t, &v).unwrap().phi, FgAbGroup::free(2));
        let t = TorusSpec::gm(&q, &k, &inf()).unwrap();
        assert_eq!(component_group(&t, &v).unwrap().phi, FgAbGroup::free(1));
        let k = Field::quadratic(-23).unwrap();
        let v = split_prime(&k, &q, 23).unwrap();
        let t = TorusSpec::norm_one(&q, &k, &inf()).unwrap();
        assert_eq!(component_group(&t, &v).unwrap().phi.invariants_string(), "Z/2");
        // wild places must be in S
        let v2 = split_prime(&Field::quadratic(-1).unwrap(), &q, 2).unwrap();
        let t = TorusSpec::norm_one(&q, &Field::quadratic(-1).unwrap(), &inf()).unwrap();
        assert!(matches!(component_group(&t, &v2), Err(Error::Precondition(_))));
    }

    #[test]
    fn delta_cokernel_examples() {
        let q = Field::rational();
        let k = Field::quadratic(-23).unwrap();
        let gm = TorusSpec::gm(&q, &k, &inf()).unwrap();
        let n1 = TorusSpec::norm_one(&q, &k, &inf()).unwrap();
        let r = TorusSpec::weil_restriction(&q, &k, &inf()).unwrap();
        let inert = split_prime(&k, &q, 5).unwrap();
        let tame = split_prime(&k, &q, 23).unwrap();
        assert!(delta_cokernel(&gm, &inert).unwrap().is_trivial());
        assert_eq!(delta_cokernel(&gm, &tame).unwrap().invariants_string(), "Z/2");
        assert!(delta_cokernel(&n1, &tame).unwrap().is_trivial());
        // the induced torus: ord_w(T(F_v)) is the whole diagonal
        assert!(delta_cokernel(&r, &tame).unwrap().is_trivial());
        let c = component_group(&r, &tame).unwrap();
        assert_eq!((c.d_v, c.predicted_cokernel.invariants_string().as_str()), (1, "Z/2"));
        assert!(!c.matches_prediction);
    }

    #[test]
    fn tame_theta_is_sign_of_reduction() {
        // t = β/σ(β) has ϑ = 1 exactly when t ≡ -1 mod w
        let q = Field::rational();
        let k = Field::quadratic(-23).unwrap();
        let t = TorusSpec::norm_one(&q, &k, &inf()).unwrap();
        let v = split_prime(&k, &q, 23).unwrap();
        let mut seen = [false; 2];
        for a in -6..=6 {
            for b in -3..=3 {
                let beta = k.add(&k.from_int(a), &k.scale(&k.power_basis(1), &rat(b)));
                if beta.is_zero() {
                    continue;
                }
                let tt = k.div(&beta, &k.conj(&beta, 1)).unwrap();
                let theta = norm_one_theta(&t, &v, &beta).unwrap();
                let red = reduce_mod_prime(&t, &v, &tt).unwrap().expect("unit at w");
                assert!(red == 1 || red == 22, "residue {red}");
                let parity = usize::from(red == 22);
                assert_eq!(theta[0], BigInt::from(parity), "β = {a} + {b}√-23");
                seen[parity] = true;
            }
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn split_theta_is_surjective() {
        let q = Field::rational();
        let k = Field::quadratic(-5).unwrap();
        let t = TorusSpec::norm_one(&q, &k, &inf()).unwrap();
        let v = split_prime(&k, &q, 3).unwrap();
        let beta = k.add(&k.from_int(1), &k.power_basis(1));
        // N(1 + √-5) = 6, so exactly one of the primes above 3 divides it
        let theta = norm_one_theta(&t, &v, &beta).unwrap();
        assert_eq!(theta[0].abs(), BigInt::from(1));
        assert!(!theta[0].is_zero());
    }
}
