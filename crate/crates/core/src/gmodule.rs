//! Finite groups, G-lattices and G-modules, Tate cohomology, and
//! flasque/coflasque resolutions of character lattices.
//!
//! Group elements are indices into a Cayley table. A group acts on a module
//! presented as `Z^n / R` by integer matrices on column vectors.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::abelian::{
    integer_kernel, lattice_basis, solve_int, verify_complex, AbHom, FgAbGroup, IntMatrix, SubgroupData,
};
use crate::error::{Error, Result};

/// Largest group handled by subgroup enumeration.
pub const MAX_GROUP_ORDER: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    identity: usize,
    inverses: Vec<usize>,
    labels: Vec<String>,
}

impl FiniteGroup {
    /// Builds a group from its multiplication table, checking the group axioms.
    pub fn new(table: Vec<Vec<usize>>, labels: Vec<String>) -> Result<Self> {
        let n = table.len();
        if n == 0 || labels.len() != n || table.iter().any(|r| r.len() != n || r.iter().any(|&x| x >= n)) {
            return Err(Error::Input("malformed multiplication table".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x))
            .ok_or_else(|| Error::Input("table has no identity".into()))?;
        let mut inverses = vec![0; n];
        for (x, inv) in inverses.iter_mut().enumerate() {
            *inv = (0..n)
                .find(|&y| table[x][y] == identity && table[y][x] == identity)
                .ok_or_else(|| Error::Input(format!("element {x} has no inverse")))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::Input("table is not associative".into()));
                    }
                }
            }
        }
        Ok(FiniteGroup { table, identity, inverses, labels })
    }

    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    /// `Z/n`, element `k` is `s^k`.
    pub fn cyclic(n: usize) -> Self {
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let labels = (0..n)
            .map(|k| match k {
                0 => "1".to_string(),
                1 => "s".to_string(),
                _ => format!("s^{k}"),
            })
            .collect();
        Self::new(table, labels).expect("cyclic table")
    }

    /// `C2 × C2` with elements `1, s, t, st`.
    pub fn klein() -> Self {
        let table = (0..4).map(|a| (0..4).map(|b| a ^ b).collect()).collect();
        let labels = ["1", "s", "t", "st"].iter().map(|s| s.to_string()).collect();
        Self::new(table, labels).expect("klein table")
    }

    /// Symmetric group on three letters, as permutations in lexicographic order.
    pub fn s3() -> Self {
        let perms: Vec<[usize; 3]> =
            vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let idx = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
        let table = perms
            .iter()
            .map(|a| perms.iter().map(|b| idx([a[b[0]], a[b[1]], a[b[2]]])).collect())
            .collect();
        let labels = perms.iter().map(|p| format!("({}{}{})", p[0] + 1, p[1] + 1, p[2] + 1)).collect();
        Self::new(table, labels).expect("s3 table")
    }

    /// Direct product; element `(a, b)` has index `a * |other| + b`.
    pub fn direct_product(&self, other: &FiniteGroup) -> FiniteGroup {
        let (n, m) = (self.order(), other.order());
        let table = (0..n * m)
            .map(|x| (0..n * m).map(|y| self.mul(x / m, y / m) * m + other.mul(x % m, y % m)).collect())
            .collect();
        let labels = (0..n * m).map(|x| format!("({},{})", self.labels[x / m], other.labels[x % m])).collect();
        FiniteGroup::new(table, labels).expect("product table")
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverses[a]
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order()
    }

    pub fn elem_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    pub fn is_abelian(&self) -> bool {
        self.elements().all(|a| self.elements().all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// An element generating the group, if it is cyclic.
    pub fn cyclic_generator(&self) -> Option<usize> {
        self.elements().find(|&a| self.elem_order(a) == self.order())
    }

    pub fn is_cyclic(&self) -> bool {
        self.cyclic_generator().is_some()
    }

    pub fn is_subgroup(&self, elems: &[usize]) -> bool {
        !elems.is_empty()
            && elems.contains(&self.identity)
            && elems.iter().all(|&a| elems.iter().all(|&b| elems.contains(&self.mul(a, self.inverse(b)))))
    }

    fn closure_mask(&self, mut mask: u64) -> u64 {
        mask |= 1 << self.identity;
        loop {
            let mut next = mask;
            for a in 0..self.order() {
                if mask >> a & 1 == 0 {
                    continue;
                }
                for b in 0..self.order() {
                    if mask >> b & 1 == 1 {
                        next |= 1 << self.mul(a, b);
                    }
                }
            }
            if next == mask {
                return mask;
            }
            mask = next;
        }
    }

    /// All subgroups, as sorted element lists ordered by size then lexicographically.
    pub fn subgroups(&self) -> Result<Vec<Vec<usize>>> {
        if self.order() > MAX_GROUP_ORDER {
            return Err(Error::Unsupported(format!(
                "subgroup enumeration limited to order {MAX_GROUP_ORDER}, got {}",
                self.order()
            )));
        }
        let mut found: BTreeSet<u64> = self.elements().map(|a| self.closure_mask(1 << a)).collect();
        loop {
            let current: Vec<u64> = found.iter().copied().collect();
            let mut grew = false;
            for (i, &a) in current.iter().enumerate() {
                for &b in &current[i + 1..] {
                    if found.insert(self.closure_mask(a | b)) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let mut subs: Vec<Vec<usize>> =
            found.into_iter().map(|m| (0..self.order()).filter(|&a| m >> a & 1 == 1).collect()).collect();
        subs.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        Ok(subs)
    }

    /// True iff every Sylow subgroup is cyclic.
    pub fn is_metacyclic(&self) -> Result<bool> {
        let subs = self.subgroups()?;
        let mut n = self.order();
        let mut p = 2;
        while n > 1 {
            if n.is_multiple_of(p) {
                let mut pk = 1;
                while n.is_multiple_of(p) {
                    n /= p;
                    pk *= p;
                }
                let sylow = subs.iter().find(|s| s.len() == pk).expect("Sylow subgroups exist");
                if !sylow.iter().any(|&a| self.elem_order(a) == pk) {
                    return Ok(false);
                }
            }
            p += 1;
        }
        Ok(true)
    }

    /// The subgroup on `elems` as a group in its own right; element `i` of the
    /// result is `elems[i]`.
    pub fn subgroup(&self, elems: &[usize]) -> Result<FiniteGroup> {
        if !self.is_subgroup(elems) {
            return Err(Error::Input(format!("{elems:?} is not a subgroup")));
        }
        let pos = |x: usize| elems.iter().position(|&e| e == x).expect("closed");
        let table = elems.iter().map(|&a| elems.iter().map(|&b| pos(self.mul(a, b))).collect()).collect();
        let labels = elems.iter().map(|&a| self.labels[a].clone()).collect();
        FiniteGroup::new(table, labels)
    }

    /// Left cosets `gH`, each sorted, ordered by their least element.
    pub fn left_cosets(&self, h: &[usize]) -> Result<Vec<Vec<usize>>> {
        if !self.is_subgroup(h) {
            return Err(Error::Input(format!("{h:?} is not a subgroup")));
        }
        let mut seen = vec![false; self.order()];
        let mut cosets = Vec::new();
        for g in self.elements() {
            if seen[g] {
                continue;
            }
            let mut c: Vec<usize> = h.iter().map(|&x| self.mul(g, x)).collect();
            c.sort_unstable();
            for &x in &c {
                seen[x] = true;
            }
            cosets.push(c);
        }
        Ok(cosets)
    }
}

/// A finitely generated abelian group with a linear action of a finite group.
#[derive(Clone, Debug)]
pub struct GModule {
    group: FiniteGroup,
    module: FgAbGroup,
    action: Vec<IntMatrix>,
}

impl GModule {
    /// Checks that each matrix is a well-defined endomorphism and that the
    /// assignment is a homomorphism from the group.
    pub fn new(group: FiniteGroup, module: FgAbGroup, action: Vec<IntMatrix>) -> Result<Self> {
        if action.len() != group.order() {
            return Err(Error::Input("one action matrix per group element required".into()));
        }
        for a in &action {
            AbHom::new(module.clone(), module.clone(), a.clone())?;
        }
        let n = module.gens();
        for j in 0..n {
            let e = module.basis_elem(j);
            if !module.elem_eq(&action[group.identity()].mul_vec(&e), &e) {
                return Err(Error::Input("identity does not act trivially".into()));
            }
        }
        for g in group.elements() {
            for h in group.elements() {
                let gh = action[g].mul(&action[h]);
                let target = &action[group.mul(g, h)];
                for j in 0..n {
                    if !module.elem_eq(&gh.col_vec(j), &target.col_vec(j)) {
                        return Err(Error::Input(format!(
                            "action is not multiplicative at ({}, {})",
                            group.label(g),
                            group.label(h)
                        )));
                    }
                }
            }
        }
        Ok(GModule { group, module, action })
    }

    /// The module with every element acting as the identity.
    pub fn trivial(group: FiniteGroup, module: FgAbGroup) -> Self {
        let id = IntMatrix::identity(module.gens());
        let action = vec![id; group.order()];
        GModule { group, module, action }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn module(&self) -> &FgAbGroup {
        &self.module
    }

    pub fn action(&self, g: usize) -> &IntMatrix {
        &self.action[g]
    }

    pub fn act(&self, g: usize, x: &[BigInt]) -> Vec<BigInt> {
        self.action[g].mul_vec(x)
    }

    pub fn gens(&self) -> usize {
        self.module.gens()
    }

    /// `Σ_{h ∈ elems} A_h`.
    pub fn norm_matrix(&self, elems: &[usize]) -> IntMatrix {
        let n = self.gens();
        elems.iter().fold(IntMatrix::zeros(n, n), |acc, &h| acc.add(&self.action[h]))
    }

    /// Elements fixed by every element of `elems`.
    pub fn fixed(&self, elems: &[usize]) -> SubgroupData {
        let n = self.gens();
        let id = IntMatrix::identity(n);
        let blocks: Vec<IntMatrix> = elems.iter().map(|&h| self.action[h].sub(&id)).collect();
        let stacked = blocks.iter().skip(1).fold(blocks[0].clone(), |acc, b| acc.vstack(b));
        let target = FgAbGroup::direct_sum(&vec![self.module.clone(); elems.len()]);
        AbHom::new(self.module.clone(), target, stacked).expect("action is well defined").kernel()
    }

    /// The augmentation submodule `I_H M`.
    pub fn augmentation_image(&self, elems: &[usize]) -> SubgroupData {
        let n = self.gens();
        let id = IntMatrix::identity(n);
        let mut cols = Vec::new();
        for &h in elems {
            let d = self.action[h].sub(&id);
            cols.extend(d.col_vecs());
        }
        SubgroupData::from_vectors(self.module.clone(), &cols)
    }

    fn norm_hom(&self) -> AbHom {
        let all: Vec<usize> = self.group.elements().collect();
        AbHom::new(self.module.clone(), self.module.clone(), self.norm_matrix(&all)).expect("norm is well defined")
    }

    /// `Ĥ^0 = M^G / N M`.
    pub fn h0_tate(&self) -> FgAbGroup {
        let all: Vec<usize> = self.group.elements().collect();
        let fixed = self.fixed(&all);
        let norms = self.norm_hom().image();
        fixed.quotient_by(&norms).expect("norms are invariant")
    }

    /// `Ĥ^{-1} = ker N / I_G M`.
    pub fn hm1_tate(&self) -> FgAbGroup {
        let all: Vec<usize> = self.group.elements().collect();
        let ker = self.norm_hom().kernel();
        let aug = self.augmentation_image(&all);
        ker.quotient_by(&aug).expect("augmentation lies in the norm kernel")
    }

    fn cochain_group(&self, k: u32) -> FgAbGroup {
        let copies = self.group.order().pow(k);
        FgAbGroup::direct_sum(&vec![self.module.clone(); copies])
    }

    /// Differential `C^k -> C^{k+1}` of inhomogeneous cochains, `k ≤ 2`.
    fn bar_differential(&self, k: u32) -> AbHom {
        let g = self.group.order();
        let n = self.gens();
        let src = self.cochain_group(k);
        let tgt = self.cochain_group(k + 1);
        let mut d = IntMatrix::zeros(tgt.gens(), src.gens());
        let mut add_block = |row_block: usize, col_block: usize, m: &IntMatrix, sign: i64| {
            let s = BigInt::from(sign);
            for i in 0..n {
                for j in 0..n {
                    let v = m.get(i, j);
                    if !v.is_zero() {
                        let cur = d.get(row_block * n + i, col_block * n + j) + v * &s;
                        d.set(row_block * n + i, col_block * n + j, cur);
                    }
                }
            }
        };
        let id = IntMatrix::identity(n);
        let grp = &self.group;
        match k {
            0 => {
                for a in 0..g {
                    add_block(a, 0, &self.action[a], 1);
                    add_block(a, 0, &id, -1);
                }
            }
            1 => {
                for a in 0..g {
                    for b in 0..g {
                        let r = a * g + b;
                        add_block(r, b, &self.action[a], 1);
                        add_block(r, grp.mul(a, b), &id, -1);
                        add_block(r, a, &id, 1);
                    }
                }
            }
            2 => {
                for a in 0..g {
                    for b in 0..g {
                        for c in 0..g {
                            let r = (a * g + b) * g + c;
                            add_block(r, b * g + c, &self.action[a], 1);
                            add_block(r, grp.mul(a, b) * g + c, &id, -1);
                            add_block(r, a * g + grp.mul(b, c), &id, 1);
                            add_block(r, a * g + b, &id, -1);
                        }
                    }
                }
            }
            _ => unreachable!("bar differentials are built up to degree 2"),
        }
        AbHom::new(src, tgt, d).expect("bar differential is well defined")
    }

    /// `H^k(G, M)` for `k ∈ {1, 2}` from the bar resolution.
    pub fn bar_cohomology(&self, k: u32) -> Result<FgAbGroup> {
        if !(1..=2).contains(&k) {
            return Err(Error::Unsupported(format!("bar cohomology in degree {k}")));
        }
        let cocycles = self.bar_differential(k).kernel();
        let coboundaries = self.bar_differential(k - 1).image();
        cocycles.quotient_by(&coboundaries)
    }

    /// Tate cohomology `Ĥ^i(G, M)`. Cyclic groups use periodicity; other groups
    /// support `i ∈ {-1, 0, 1, 2}`.
    pub fn tate(&self, i: i32) -> Result<FgAbGroup> {
        if self.group.is_cyclic() {
            return Ok(if i.rem_euclid(2) == 0 { self.h0_tate() } else { self.hm1_tate() });
        }
        match i {
            -1 => Ok(self.hm1_tate()),
            0 => Ok(self.h0_tate()),
            1 | 2 => self.bar_cohomology(i as u32),
            _ => Err(Error::Unsupported(format!("Tate degree {i} for a non-cyclic group"))),
        }
    }

    /// Restriction to the subgroup on `elems`.
    pub fn restrict(&self, elems: &[usize]) -> Result<GModule> {
        let h = self.group.subgroup(elems)?;
        let action = elems.iter().map(|&g| self.action[g].clone()).collect();
        Ok(GModule { group: h, module: self.module.clone(), action })
    }

    /// Module induced from `n` (a module over the subgroup on `h_elems`, indexed
    /// as in [`FiniteGroup::subgroup`]) to `g`.
    pub fn induce(g: &FiniteGroup, h_elems: &[usize], n: &GModule) -> Result<GModule> {
        if n.group.order() != h_elems.len() {
            return Err(Error::Input("module group does not match the subgroup".into()));
        }
        let cosets = g.left_cosets(h_elems)?;
        let reps: Vec<usize> = cosets.iter().map(|c| c[0]).collect();
        let k = reps.len();
        let m = n.gens();
        let module = FgAbGroup::direct_sum(&vec![n.module.clone(); k]);
        let mut action = Vec::with_capacity(g.order());
        for x in g.elements() {
            let mut a = IntMatrix::zeros(k * m, k * m);
            for (i, &ri) in reps.iter().enumerate() {
                let xr = g.mul(x, ri);
                let j = cosets.iter().position(|c| c.contains(&xr)).expect("cosets cover");
                let hh = g.mul(g.inverse(reps[j]), xr);
                let hi = h_elems.iter().position(|&e| e == hh).expect("in subgroup");
                let b = &n.action[hi];
                for p in 0..m {
                    for q in 0..m {
                        a.set(j * m + p, i * m + q, b.get(p, q).clone());
                    }
                }
            }
            action.push(a);
        }
        GModule::new(g.clone(), module, action)
    }
}

/// A free G-module of finite rank.
#[derive(Clone, Debug)]
pub struct GLattice {
    inner: GModule,
}

impl GLattice {
    pub fn new(group: FiniteGroup, action: Vec<IntMatrix>) -> Result<Self> {
        let rank = action.first().map_or(0, |a| a.cols());
        for a in &action {
            if a.rows() != rank || a.cols() != rank || !a.is_unimodular() {
                return Err(Error::Input("action matrices must be square and unimodular".into()));
            }
        }
        Ok(GLattice { inner: GModule::new(group, FgAbGroup::free(rank), action)? })
    }

    /// `Z^rank` with trivial action.
    pub fn trivial(group: FiniteGroup, rank: usize) -> Self {
        GLattice { inner: GModule::trivial(group, FgAbGroup::free(rank)) }
    }

    /// `Z` with a cyclic group of even order acting through its sign character.
    pub fn sign(group: FiniteGroup) -> Result<Self> {
        let s = group.cyclic_generator().filter(|_| group.order().is_multiple_of(2));
        let Some(s) = s else {
            return Err(Error::Input("sign lattice needs a cyclic group of even order".into()));
        };
        let mut action = vec![IntMatrix::identity(1); group.order()];
        let mut x = s;
        let mut k = 1;
        while x != group.identity() {
            if k % 2 == 1 {
                action[x] = IntMatrix::from_i64(&[vec![-1]]);
            }
            x = group.mul(x, s);
            k += 1;
        }
        GLattice::new(group, action)
    }

    /// `Z` with `G` acting through a character `G -> {±1}` given by its values.
    pub fn character(group: FiniteGroup, signs: &[i64]) -> Result<Self> {
        let action = signs.iter().map(|&s| IntMatrix::from_i64(&[vec![s]])).collect();
        GLattice::new(group, action)
    }

    /// `Z[G/H]`, basis the left cosets ordered by least element.
    pub fn permutation(group: &FiniteGroup, h: &[usize]) -> Result<Self> {
        let cosets = group.left_cosets(h)?;
        let k = cosets.len();
        let action = group
            .elements()
            .map(|g| {
                let mut a = IntMatrix::zeros(k, k);
                for (i, c) in cosets.iter().enumerate() {
                    let gx = group.mul(g, c[0]);
                    let j = cosets.iter().position(|d| d.contains(&gx)).expect("cosets cover");
                    a.set(j, i, BigInt::one());
                }
                a
            })
            .collect();
        GLattice::new(group.clone(), action)
    }

    /// `Z[G]`.
    pub fn regular(group: &FiniteGroup) -> Self {
        Self::permutation(group, &[group.identity()]).expect("trivial subgroup")
    }

    pub fn direct_sum(parts: &[GLattice]) -> Result<Self> {
        let group = parts
            .first()
            .ok_or_else(|| Error::Input("empty direct sum".into()))?
            .group()
            .clone();
        if parts.iter().any(|p| *p.group() != group) {
            return Err(Error::Input("direct sum over different groups".into()));
        }
        let action = group
            .elements()
            .map(|g| IntMatrix::block_diag(&parts.iter().map(|p| p.action(g).clone()).collect::<Vec<_>>()))
            .collect();
        GLattice::new(group, action)
    }

    /// Same lattice in the basis given by the columns of unimodular `p`.
    pub fn change_basis(&self, p: &IntMatrix) -> Result<Self> {
        let n = self.rank();
        if p.rows() != n || p.cols() != n || !p.is_unimodular() {
            return Err(Error::Input("basis change must be unimodular".into()));
        }
        let pinv = unimodular_inverse(p);
        let action = self.group().elements().map(|g| pinv.mul(self.action(g)).mul(p)).collect();
        GLattice::new(self.group().clone(), action)
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.inner.group
    }

    pub fn rank(&self) -> usize {
        self.inner.gens()
    }

    pub fn action(&self, g: usize) -> &IntMatrix {
        &self.inner.action[g]
    }

    pub fn as_module(&self) -> &GModule {
        &self.inner
    }

    pub fn tate(&self, i: i32) -> Result<FgAbGroup> {
        self.inner.tate(i)
    }

    /// Basis of the fixed sublattice `X^H` (HNF rows).
    pub fn fixed_basis(&self, h: &[usize]) -> Vec<Vec<BigInt>> {
        let n = self.rank();
        let id = IntMatrix::identity(n);
        let mut stacked = IntMatrix::zeros(0, n);
        for &g in h {
            stacked = stacked.vstack(&self.action(g).sub(&id));
        }
        let ker = integer_kernel(&stacked);
        if ker.is_empty() {
            return ker;
        }
        lattice_basis(&IntMatrix::from_rows(&ker, n)).row_vecs()
    }

    pub fn fixed_rank(&self) -> usize {
        let all: Vec<usize> = self.group().elements().collect();
        self.fixed_basis(&all).len()
    }

    /// `Hom(X, Z)` with `g` acting by `(A_{g^{-1}})^T`.
    pub fn dual(&self) -> GLattice {
        let g = self.group();
        let action = g.elements().map(|x| self.action(g.inverse(x)).transpose()).collect();
        GLattice { inner: GModule { group: g.clone(), module: self.inner.module.clone(), action } }
    }

    pub fn restrict(&self, elems: &[usize]) -> Result<GLattice> {
        Ok(GLattice { inner: self.inner.restrict(elems)? })
    }

    /// `Ĥ^{-1}(H, X) = 0` for every subgroup `H`.
    pub fn is_flasque(&self) -> Result<bool> {
        for h in self.group().subgroups()? {
            if !self.restrict(&h)?.inner.hm1_tate().is_trivial() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `Ĥ^1(H, X) = 0` for every subgroup `H`.
    pub fn is_coflasque(&self) -> Result<bool> {
        for h in self.group().subgroups()? {
            if !self.restrict(&h)?.tate(1)?.is_trivial() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `φ A^X_g = A^Y_g φ` for all `g`, where `φ: X -> Y` has `Y.rank()` rows.
    pub fn is_equivariant(&self, other: &GLattice, phi: &IntMatrix) -> bool {
        self.group()
            .elements()
            .all(|g| phi.mul(self.action(g)) == other.action(g).mul(phi))
    }

    /// Sublattice spanned by the columns of `basis`, assumed `G`-stable, with the induced action.
    pub fn sublattice(&self, basis: &IntMatrix) -> Result<GLattice> {
        let group = self.group().clone();
        let mut action = Vec::with_capacity(group.order());
        for g in group.elements() {
            let moved = self.action(g).mul(basis);
            let mut cols = Vec::new();
            for v in moved.col_vecs() {
                cols.push(
                    solve_int(basis, &v).ok_or_else(|| Error::Inconsistent("sublattice is not stable".into()))?,
                );
            }
            action.push(IntMatrix::from_cols(&cols, basis.cols()));
        }
        GLattice::new(group, action)
    }
}

/// The group of a serialized lattice: a name (`"C1"`, `"C2"`, `"C2xC2"`) or a Cayley table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupRecord {
    Named(String),
    Table(Vec<Vec<usize>>),
}

impl GroupRecord {
    pub fn build(&self) -> Result<FiniteGroup> {
        match self {
            GroupRecord::Named(n) => match n.as_str() {
                "C1" | "1" | "trivial" => Ok(FiniteGroup::trivial()),
                "C2" => Ok(FiniteGroup::cyclic(2)),
                "C2xC2" | "V4" => Ok(FiniteGroup::klein()),
                "S3" => Ok(FiniteGroup::s3()),
                other => Err(Error::Input(format!("unknown group name {other:?}"))),
            },
            GroupRecord::Table(t) => {
                let labels = (0..t.len()).map(|i| i.to_string()).collect();
                FiniteGroup::new(t.clone(), labels)
            }
        }
    }
}

/// Serialized lattice: `{"group": ..., "rank": n, "action": {label: rows}}`.
///
/// `action` may list only generators; the remaining matrices are filled in by
/// multiplying, and the result is checked to be a homomorphism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeRecord {
    pub group: GroupRecord,
    pub rank: usize,
    pub action: BTreeMap<String, Vec<Vec<i64>>>,
}

impl LatticeRecord {
    pub fn build(&self) -> Result<GLattice> {
        let group = self.group.build()?;
        let n = self.rank;
        let mut known: Vec<Option<IntMatrix>> = vec![None; group.order()];
        known[group.identity()] = Some(IntMatrix::identity(n));
        for (label, rows) in &self.action {
            let g = group
                .labels()
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| Error::Input(format!("no group element labelled {label:?}")))?;
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Input(format!("action of {label:?} is not {n}x{n}")));
            }
            known[g] = Some(IntMatrix::from_i64(rows));
        }
        loop {
            let mut grew = false;
            for a in group.elements() {
                for b in group.elements() {
                    let c = group.mul(a, b);
                    if known[c].is_none() {
                        if let (Some(x), Some(y)) = (&known[a], &known[b]) {
                            known[c] = Some(x.mul(y));
                            grew = true;
                        }
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let action = known
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Input("listed elements do not generate the group".into()))?;
        if n == 0 {
            return Ok(GLattice::trivial(group, 0));
        }
        GLattice::new(group, action)
    }

    /// Record listing every non-identity element.
    pub fn from_lattice(x: &GLattice, group: GroupRecord) -> Result<Self> {
        let g = x.group();
        let mut action = BTreeMap::new();
        for e in g.elements().filter(|&e| e != g.identity()) {
            let rows = x.action(e).to_i64_rows().ok_or_else(|| Error::Input("action entries overflow i64".into()))?;
            action.insert(g.label(e).to_string(), rows);
        }
        Ok(LatticeRecord { group, rank: x.rank(), action })
    }
}

/// Inverse of a unimodular matrix.
pub fn unimodular_inverse(p: &IntMatrix) -> IntMatrix {
    let n = p.rows();
    let cols: Vec<Vec<BigInt>> = (0..n)
        .map(|j| {
            let mut e = vec![BigInt::zero(); n];
            e[j] = BigInt::one();
            solve_int(p, &e).expect("unimodular")
        })
        .collect();
    IntMatrix::from_cols(&cols, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionKind {
    /// `0 -> C -> P -> X -> 0` with `C` coflasque.
    Coflasque,
    /// `0 -> X -> P -> F -> 0` with `F` flasque.
    Flasque,
}

/// A resolution of a lattice by a permutation lattice.
#[derive(Clone, Debug)]
pub struct Resolution {
    pub kind: ResolutionKind,
    pub lattice: GLattice,
    pub permutation: GLattice,
    /// Subgroup of each `Z[G/H]` summand of `permutation`, in order.
    pub blocks: Vec<Vec<usize>>,
    pub complement: GLattice,
    /// Coflasque: `C -> P` and `P -> X`. Flasque: `X -> P` and `P -> F`.
    pub first_map: IntMatrix,
    pub second_map: IntMatrix,
    /// Exactness of the three-term sequence as abelian groups.
    pub exact: bool,
    /// The maps commute with the action.
    pub equivariant: bool,
    /// The complement is coflasque (resp. flasque).
    pub certified: bool,
}

fn permutation_sum(group: &FiniteGroup, blocks: &[Vec<usize>]) -> Result<GLattice> {
    if blocks.is_empty() {
        return Ok(GLattice::trivial(group.clone(), 0));
    }
    let parts: Vec<GLattice> = blocks.iter().map(|h| GLattice::permutation(group, h)).collect::<Result<_>>()?;
    GLattice::direct_sum(&parts)
}

/// Columns of the map `⊕ Z[G/H_i] -> X` sending the coset `H_i` to `x_i`.
fn covering_map(x: &GLattice, blocks: &[(Vec<usize>, Vec<BigInt>)]) -> Result<IntMatrix> {
    let g = x.group();
    let mut cols = Vec::new();
    for (h, v) in blocks {
        for c in g.left_cosets(h)? {
            cols.push(x.action(c[0]).mul_vec(v));
        }
    }
    Ok(IntMatrix::from_cols(&cols, x.rank()))
}

/// Image of `P^H` in `X` for the covering built from `blocks`.
fn covered_fixed(x: &GLattice, blocks: &[(Vec<usize>, Vec<BigInt>)], h: &[usize]) -> Result<SubgroupData> {
    let g = x.group();
    let mut images = Vec::new();
    for (k, v) in blocks {
        let cosets = g.left_cosets(k)?;
        let mut done = vec![false; cosets.len()];
        for i in 0..cosets.len() {
            if done[i] {
                continue;
            }
            // orbit of the coset under H; its sum is H-fixed
            let mut sum = vec![BigInt::zero(); x.rank()];
            let mut orbit = BTreeSet::new();
            for &a in h {
                let moved = g.mul(a, cosets[i][0]);
                let j = cosets.iter().position(|c| c.contains(&moved)).expect("cosets cover");
                orbit.insert(j);
            }
            for &j in &orbit {
                done[j] = true;
                for (s, t) in sum.iter_mut().zip(x.action(cosets[j][0]).mul_vec(v)) {
                    *s += t;
                }
            }
            images.push(sum);
        }
    }
    Ok(SubgroupData::from_vectors(FgAbGroup::free(x.rank()), &images))
}

fn fully_covered(x: &GLattice, blocks: &[(Vec<usize>, Vec<BigInt>)], subs: &[Vec<usize>]) -> Result<bool> {
    for h in subs {
        let cov = covered_fixed(x, blocks, h)?;
        if !x.fixed_basis(h).iter().all(|v| cov.contains(v)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Kernel lattice of `phi: P -> X`, returned as the inclusion matrix.
fn kernel_inclusion(phi: &IntMatrix) -> IntMatrix {
    let ker = integer_kernel(phi);
    IntMatrix::from_cols(&ker, phi.cols())
}

fn three_term_exact(a: usize, b: usize, c: usize, f: &IntMatrix, g: &IntMatrix) -> Result<bool> {
    let (fa, fb, fc) = (FgAbGroup::free(a), FgAbGroup::free(b), FgAbGroup::free(c));
    let zero = FgAbGroup::trivial();
    let chain = vec![
        AbHom::zero(zero.clone(), fa.clone()),
        AbHom::new(fa, fb.clone(), f.clone())?,
        AbHom::new(fb, fc.clone(), g.clone())?,
        AbHom::zero(fc, zero),
    ];
    Ok(verify_complex(&chain)?.all_exact)
}

/// `0 -> C -> P -> X -> 0` with `P` a sum of `Z[G/H]` chosen so every `P^H -> X^H`
/// is onto, which makes `C` coflasque.
pub fn coflasque_resolution(x: &GLattice) -> Result<Resolution> {
    let group = x.group().clone();
    let mut subs = group.subgroups()?;
    subs.reverse();
    let mut blocks: Vec<(Vec<usize>, Vec<BigInt>)> = Vec::new();
    for h in &subs {
        for v in x.fixed_basis(h) {
            if !covered_fixed(x, &blocks, h)?.contains(&v) {
                blocks.push((h.clone(), v));
            }
        }
    }
    let mut i = blocks.len();
    while i > 0 {
        i -= 1;
        let mut trial = blocks.clone();
        trial.remove(i);
        if fully_covered(x, &trial, &subs)? {
            blocks = trial;
        }
    }
    let block_groups: Vec<Vec<usize>> = blocks.iter().map(|(h, _)| h.clone()).collect();
    let p = permutation_sum(&group, &block_groups)?;
    let phi = covering_map(x, &blocks)?;
    let iota = kernel_inclusion(&phi);
    let c = p.sublattice(&iota)?;
    let exact = three_term_exact(c.rank(), p.rank(), x.rank(), &iota, &phi)?;
    let equivariant = p.is_equivariant(x, &phi) && c.is_equivariant(&p, &iota);
    let certified = c.is_coflasque()?;
    Ok(Resolution {
        kind: ResolutionKind::Coflasque,
        lattice: x.clone(),
        permutation: p,
        blocks: block_groups,
        complement: c,
        first_map: iota,
        second_map: phi,
        exact,
        equivariant,
        certified,
    })
}

/// `0 -> X -> P -> F -> 0` with `F` flasque, by dualizing a coflasque resolution of `X^∨`.
pub fn flasque_resolution(x: &GLattice) -> Result<Resolution> {
    let co = coflasque_resolution(&x.dual())?;
    let p = co.permutation.dual();
    let f = co.complement.dual();
    let into_p = co.second_map.transpose();
    let onto_f = co.first_map.transpose();
    let exact = three_term_exact(x.rank(), p.rank(), f.rank(), &into_p, &onto_f)?;
    let equivariant = x.is_equivariant(&p, &into_p) && p.is_equivariant(&f, &onto_f);
    let certified = f.is_flasque()?;
    Ok(Resolution {
        kind: ResolutionKind::Flasque,
        lattice: x.clone(),
        permutation: p,
        blocks: co.blocks,
        complement: f,
        first_map: into_p,
        second_map: onto_f,
        exact,
        equivariant,
        certified,
    })
}

/// Multiplicities `(a, b, c)` in `X ≅ Z^a ⊕ Z_sign^b ⊕ Z[C2]^c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct C2Decomposition {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

fn log2_order(g: &FgAbGroup) -> Result<usize> {
    let n = g.order_u64().ok_or_else(|| Error::Inconsistent("infinite cohomology group".into()))?;
    if !n.is_power_of_two() {
        return Err(Error::Inconsistent(format!("cohomology of order {n} over C2")));
    }
    Ok(n.trailing_zeros() as usize)
}

pub fn decompose_c2(x: &GLattice) -> Result<C2Decomposition> {
    if x.group().order() != 2 {
        return Err(Error::Input("decompose_c2 needs the group of order 2".into()));
    }
    let a = log2_order(&x.tate(0)?)?;
    let b = log2_order(&x.tate(1)?)?;
    let n = x.rank();
    if a + b > n || !(n - a - b).is_multiple_of(2) {
        return Err(Error::Inconsistent(format!("rank {n} incompatible with a={a}, b={b}")));
    }
    let c = (n - a - b) / 2;
    let s = 1 - x.group().identity();
    let plus = integer_kernel(&x.action(s).sub(&IntMatrix::identity(n))).len();
    let minus = integer_kernel(&x.action(s).add(&IntMatrix::identity(n))).len();
    if plus != a + c || minus != b + c {
        return Err(Error::Inconsistent(format!(
            "eigenlattice ranks ({plus}, {minus}) disagree with (a, b, c) = ({a}, {b}, {c})"
        )));
    }
    Ok(C2Decomposition { a, b, c })
}

/// For C2-lattices: a direct summand of a permutation lattice, i.e. no sign summand.
pub fn is_invertible_c2(x: &GLattice) -> Result<bool> {
    Ok(decompose_c2(x)?.b == 0)
}

/// Checks `Ĥ^i(G, Ind n) ≅ Ĥ^i(H, n)` for `i ∈ {-1, 0, 1}`.
pub fn induced_check(g: &FiniteGroup, h_elems: &[usize], n: &GModule) -> Result<bool> {
    let m = GModule::induce(g, h_elems, n)?;
    for i in -1..=1 {
        if !m.tate(i)?.is_isomorphic(&n.tate(i)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2() -> FiniteGroup {
        FiniteGroup::cyclic(2)
    }

    #[test]
    fn subgroup_counts() {
        assert_eq!(c2().subgroups().unwrap().len(), 2);
        assert_eq!(FiniteGroup::klein().subgroups().unwrap().len(), 5);
        assert_eq!(FiniteGroup::s3().subgroups().unwrap().len(), 6);
        assert_eq!(FiniteGroup::cyclic(12).subgroups().unwrap().len(), 6);
        let d = FiniteGroup::klein().direct_product(&c2());
        assert_eq!(d.subgroups().unwrap().len(), 16);
    }

    #[test]
    fn metacyclic_examples() {
        assert!(FiniteGroup::cyclic(6).is_metacyclic().unwrap());
        assert!(!FiniteGroup::klein().is_metacyclic().unwrap());
        assert!(FiniteGroup::s3().is_metacyclic().unwrap());
    }

    #[test]
    fn tate_examples_c2() {
        let z = GLattice::trivial(c2(), 1);
        assert_eq!(z.tate(0).unwrap().to_string(), "Z/2");
        assert!(z.tate(1).unwrap().is_trivial());
        let sgn = GLattice::sign(c2()).unwrap();
        assert!(sgn.tate(0).unwrap().is_trivial());
        assert_eq!(sgn.tate(1).unwrap().to_string(), "Z/2");
        let reg = GLattice::regular(&c2());
        for i in -2..=2 {
            assert!(reg.tate(i).unwrap().is_trivial());
        }
    }

    #[test]
    fn bar_matches_periodic_for_cyclic() {
        for (g, x) in [
            (c2(), GLattice::sign(c2()).unwrap()),
            (c2(), GLattice::trivial(c2(), 2)),
            (FiniteGroup::cyclic(3), GLattice::trivial(FiniteGroup::cyclic(3), 1)),
            (FiniteGroup::cyclic(4), GLattice::sign(FiniteGroup::cyclic(4)).unwrap()),
        ] {
            let m = x.as_module();
            assert_eq!(g.order(), m.group().order());
            for k in 1..=2u32 {
                let bar = m.bar_cohomology(k).unwrap();
                let per = m.tate(k as i32).unwrap();
                assert!(bar.is_isomorphic(&per), "degree {k}: bar {bar} vs periodic {per}");
            }
        }
    }

    #[test]
    fn klein_cohomology_of_z() {
        let g = FiniteGroup::klein();
        let z = GLattice::trivial(g, 1);
        assert_eq!(z.tate(0).unwrap().to_string(), "Z/4");
        assert!(z.tate(1).unwrap().is_trivial());
        assert_eq!(z.tate(2).unwrap().to_string(), "Z/2 ⊕ Z/2");
        assert_eq!(z.tate(-1).unwrap().to_string(), "0");
    }

    #[test]
    fn flasque_flags() {
        let reg = GLattice::regular(&c2());
        assert!(reg.is_flasque().unwrap() && reg.is_coflasque().unwrap());
        // over a cyclic group Ĥ^{-1} = Ĥ^1, and both are Z/2 for the sign lattice
        let sgn = GLattice::sign(c2()).unwrap();
        assert_eq!(sgn.tate(-1).unwrap().to_string(), "Z/2");
        assert!(!sgn.is_flasque().unwrap());
        assert!(!sgn.is_coflasque().unwrap());
        let z = GLattice::trivial(c2(), 1);
        assert!(z.is_flasque().unwrap() && z.is_coflasque().unwrap());
    }

    #[test]
    fn permutation_lattices() {
        let g = FiniteGroup::klein();
        let whole: Vec<usize> = g.elements().collect();
        let p = GLattice::permutation(&g, &whole).unwrap();
        assert_eq!(p.rank(), 1);
        assert!(g.elements().all(|x| p.action(x) == &IntMatrix::identity(1)));
        let q = GLattice::permutation(&g, &[0, 1]).unwrap();
        assert_eq!(q.rank(), 2);
        assert_eq!(q.action(1), &IntMatrix::identity(2));
        assert_eq!(q.action(2), &IntMatrix::from_i64(&[vec![0, 1], vec![1, 0]]));
        for h in g.subgroups().unwrap() {
            let p = GLattice::permutation(&g, &h).unwrap();
            assert!(p.is_flasque().unwrap() && p.is_coflasque().unwrap());
        }
    }

    #[test]
    fn duals() {
        let sgn = GLattice::sign(c2()).unwrap();
        assert_eq!(sgn.dual().action(1), sgn.action(1));
        let reg = GLattice::regular(&c2());
        assert_eq!(reg.dual().action(1), reg.action(1));
    }

    #[test]
    fn coflasque_resolution_examples() {
        let z = GLattice::trivial(c2(), 1);
        let r = coflasque_resolution(&z).unwrap();
        assert_eq!((r.permutation.rank(), r.complement.rank()), (1, 0));
        assert!(r.exact && r.certified && r.equivariant);

        let sgn = GLattice::sign(c2()).unwrap();
        let r = coflasque_resolution(&sgn).unwrap();
        assert_eq!(r.blocks, vec![vec![0]]);
        assert_eq!(r.complement.rank(), 1);
        assert_eq!(r.complement.action(1), &IntMatrix::identity(1));
        assert!(r.exact && r.certified && r.equivariant);

        let reg = GLattice::regular(&c2());
        let r = coflasque_resolution(&reg).unwrap();
        assert_eq!(r.blocks, vec![vec![0]]);
        assert_eq!(r.complement.rank(), 0);
    }

    #[test]
    fn flasque_resolution_examples() {
        let sgn = GLattice::sign(c2()).unwrap();
        let r = flasque_resolution(&sgn).unwrap();
        assert_eq!(r.permutation.rank(), 2);
        assert_eq!(r.complement.rank(), 1);
        assert_eq!(r.complement.action(1), &IntMatrix::identity(1));
        assert!(r.exact && r.certified && r.equivariant);
        let reg = GLattice::regular(&c2());
        assert_eq!(flasque_resolution(&reg).unwrap().complement.rank(), 0);
    }

    #[test]
    fn klein_norm_one_resolutions() {
        // kernel of the augmentation Z[G] -> Z for the Klein group
        let g = FiniteGroup::klein();
        let reg = GLattice::regular(&g);
        let aug = IntMatrix::from_i64(&[vec![1, 1, 1, 1]]);
        let j = reg.sublattice(&kernel_inclusion(&aug)).unwrap();
        assert_eq!(j.rank(), 3);
        for r in [coflasque_resolution(&j).unwrap(), flasque_resolution(&j).unwrap()] {
            assert!(r.exact && r.certified && r.equivariant, "{:?}", r.kind);
        }
    }

    #[test]
    fn c2_decompositions() {
        let reg = GLattice::regular(&c2());
        assert_eq!(decompose_c2(&reg).unwrap(), C2Decomposition { a: 0, b: 0, c: 1 });
        let x = GLattice::direct_sum(&[GLattice::trivial(c2(), 1), GLattice::sign(c2()).unwrap()]).unwrap();
        assert_eq!(decompose_c2(&x).unwrap(), C2Decomposition { a: 1, b: 1, c: 0 });
        assert!(!is_invertible_c2(&x).unwrap());
        assert!(is_invertible_c2(&reg).unwrap());
    }

    #[test]
    fn shapiro_examples() {
        let n = GModule::trivial(FiniteGroup::trivial(), FgAbGroup::free(1));
        assert!(induced_check(&c2(), &[0], &n).unwrap());
        let n = GModule::trivial(c2(), FgAbGroup::cyclic(3));
        assert!(induced_check(&c2(), &[0, 1], &n).unwrap());
        let g = FiniteGroup::klein();
        let h = g.subgroup(&[0, 1]).unwrap();
        let n = GModule::trivial(h, FgAbGroup::free(1));
        assert!(induced_check(&g, &[0, 1], &n).unwrap());
    }
}
