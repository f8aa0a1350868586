//! Exact integer linear algebra and finitely generated abelian groups.
//!
//! A group is always carried as a presentation `Z^n / rowspan(R)`. Elements
//! are integer vectors of length `n`; homomorphisms act on column vectors,
//! so a map `A -> B` is a `B.gens() x A.gens()` matrix.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]({}x{})", self.rows, self.cols)
    }
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Input(format!(
                "matrix {}x{} needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn diagonal(entries: &[BigInt]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, e) in entries.iter().enumerate() {
            m.data[i * n + i] = e.clone();
        }
        m
    }

    /// Builds a matrix from small integer rows. Panics on ragged input.
    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        let data = rows.iter().flatten().map(|&x| BigInt::from(x)).collect();
        IntMatrix { rows: r, cols: c, data }
    }

    /// Builds a matrix whose rows are the given vectors; `cols` is used when there are none.
    pub fn from_rows(rows: &[Vec<BigInt>], cols: usize) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "row length");
            for (j, x) in r.iter().enumerate() {
                m.data[i * cols + j] = x.clone();
            }
        }
        m
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<BigInt>], rows: usize) -> Self {
        Self::from_rows(cols, rows).transpose()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<BigInt> {
        self.row(i).to_vec()
    }

    pub fn col_vec(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row_vecs(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row_vec(i)).collect()
    }

    pub fn col_vecs(&self) -> Vec<Vec<BigInt>> {
        (0..self.cols).map(|j| self.col_vec(j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in matrix-vector product");
        (0..self.rows)
            .map(|i| {
                let mut s = BigInt::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        s += a * b;
                    }
                }
                s
            })
            .collect()
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, k: &BigInt) -> IntMatrix {
        let data = self.data.iter().map(|a| a * k).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        IntMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Places `other` to the right of `self`.
    pub fn hstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let cols = self.cols + other.cols;
        let mut m = Self::zeros(self.rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.data[i * cols + j] = self.get(i, j).clone();
            }
            for j in 0..other.cols {
                m.data[i * cols + self.cols + j] = other.get(i, j).clone();
            }
        }
        m
    }

    /// Block-diagonal sum.
    pub fn block_diag(blocks: &[IntMatrix]) -> IntMatrix {
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(r, c);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    m.data[(r0 + i) * c + c0 + j] = b.get(i, j).clone();
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        m
    }

    pub fn select_rows(&self, idx: &[usize]) -> IntMatrix {
        let rows: Vec<Vec<BigInt>> = idx.iter().map(|&i| self.row_vec(i)).collect();
        Self::from_rows(&rows, self.cols)
    }

    pub fn select_cols(&self, idx: &[usize]) -> IntMatrix {
        self.transpose().select_rows(idx).transpose()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] += k * row[src]
    fn add_row_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let s = &self.data[src * self.cols + j];
            if !s.is_zero() {
                let v = s * k;
                self.data[dst * self.cols + j] += v;
            }
        }
    }

    /// col[dst] += k * col[src]
    fn add_col_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let s = &self.data[i * self.cols + src];
            if !s.is_zero() {
                let v = s * k;
                self.data[i * self.cols + dst] += v;
            }
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -std::mem::take(&mut self.data[i * self.cols + j]);
            self.data[i * self.cols + j] = v;
        }
    }

    /// Determinant by fraction-free Bareiss elimination.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a.get(k, k).is_zero() {
                match (k + 1..n).find(|&i| !a.get(i, k).is_zero()) {
                    Some(i) => {
                        a.swap_rows(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a.get(i, j) * a.get(k, k) - a.get(i, k) * a.get(k, j)) / &prev;
                    a.set(i, j, v);
                }
            }
            prev = a.get(k, k).clone();
        }
        sign * a.get(n - 1, n - 1)
    }

    pub fn is_unimodular(&self) -> bool {
        self.rows == self.cols && self.det().abs().is_one()
    }

    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.to_i64()).collect())
            .collect()
    }
}

fn nearest_quotient(a: &BigInt, b: &BigInt) -> BigInt {
    // round(a / b) with ties toward floor; b != 0
    let (q, r) = a.div_mod_floor(b);
    let twice = &r * 2;
    if b.is_positive() {
        if twice > *b {
            q + 1
        } else {
            q
        }
    } else if twice < *b {
        q + 1
    } else {
        q
    }
}

/// Row Hermite normal form: returns `(h, u)` with `h = u * m`, `u` unimodular,
/// `h` in echelon form with positive pivots and entries above each pivot in `[0, pivot)`.
pub fn hnf(m: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(m.rows);
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        loop {
            let piv = (r..m.rows)
                .filter(|&i| !h.get(i, c).is_zero())
                .min_by(|&a, &b| h.get(a, c).abs().cmp(&h.get(b, c).abs()).then(a.cmp(&b)));
            let Some(p) = piv else { break };
            h.swap_rows(r, p);
            u.swap_rows(r, p);
            let mut clean = true;
            for i in r + 1..m.rows {
                if h.get(i, c).is_zero() {
                    continue;
                }
                let q = -nearest_quotient(h.get(i, c), h.get(r, c));
                h.add_row_multiple(i, r, &q);
                u.add_row_multiple(i, r, &q);
                if !h.get(i, c).is_zero() {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
        if h.get(r, c).is_zero() {
            continue;
        }
        if h.get(r, c).is_negative() {
            h.negate_row(r);
            u.negate_row(r);
        }
        for i in 0..r {
            let q = -h.get(i, c).div_floor(h.get(r, c));
            h.add_row_multiple(i, r, &q);
            u.add_row_multiple(i, r, &q);
        }
        r += 1;
    }
    (h, u)
}

/// Rank of the row HNF (number of nonzero rows).
pub fn hnf_rank(h: &IntMatrix) -> usize {
    (0..h.rows).filter(|&i| h.row(i).iter().any(|x| !x.is_zero())).count()
}

/// Nonzero rows of the HNF of `m`: a canonical basis of its row lattice.
pub fn lattice_basis(m: &IntMatrix) -> IntMatrix {
    let (h, _) = hnf(m);
    let k = hnf_rank(&h);
    h.select_rows(&(0..k).collect::<Vec<_>>())
}

pub(crate) struct SnfFull {
    pub d: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
    pub v_inv: IntMatrix,
}

pub(crate) fn snf_full(m: &IntMatrix) -> SnfFull {
    let (rows, cols) = (m.rows, m.cols);
    let mut d = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let mut v_inv = IntMatrix::identity(cols);
    for t in 0..rows.min(cols) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    let x = d.get(i, j);
                    if x.is_zero() {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((bi, bj)) => x.abs().cmp(&d.get(bi, bj).abs()) == Ordering::Less,
                    };
                    if better {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return SnfFull { d, u, v, v_inv };
            };
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);
            v_inv.swap_rows(t, pj);
            let mut clean = true;
            for i in t + 1..rows {
                if d.get(i, t).is_zero() {
                    continue;
                }
                let q = -nearest_quotient(d.get(i, t), d.get(t, t));
                d.add_row_multiple(i, t, &q);
                u.add_row_multiple(i, t, &q);
                if !d.get(i, t).is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                if d.get(t, j).is_zero() {
                    continue;
                }
                let q = -nearest_quotient(d.get(t, j), d.get(t, t));
                d.add_col_multiple(j, t, &q);
                v.add_col_multiple(j, t, &q);
                // v_inv: rows transform inversely, row[t] -= q * row[j]
                let nq = -q;
                v_inv.add_row_multiple(t, j, &nq);
                if !d.get(t, j).is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            let p = d.get(t, t).clone();
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !d.get(i, j).is_multiple_of(&p)));
            match bad {
                Some(i) => {
                    let one = BigInt::one();
                    d.add_row_multiple(t, i, &one);
                    u.add_row_multiple(t, i, &one);
                }
                None => break,
            }
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    SnfFull { d, u, v, v_inv }
}

/// Smith normal form: `(d, u, v)` with `d = u * m * v`, `d` diagonal with
/// nonnegative entries `d_1 | d_2 | ...`, and `u`, `v` unimodular.
pub fn snf(m: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let s = snf_full(m);
    (s.d, s.u, s.v)
}

/// Basis of the integer kernel `{x : a x = 0}`, one vector per entry.
pub fn integer_kernel(a: &IntMatrix) -> Vec<Vec<BigInt>> {
    let (h, u) = hnf(&a.transpose());
    let k = hnf_rank(&h);
    let basis: Vec<Vec<BigInt>> = (k..u.rows).map(|i| u.row_vec(i)).collect();
    if basis.is_empty() {
        return basis;
    }
    // canonical basis for deterministic output
    lattice_basis(&IntMatrix::from_rows(&basis, a.cols)).row_vecs()
}

/// Some integer solution of `a z = b`, if one exists.
pub fn solve_int(a: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(a.rows, b.len(), "right-hand side length");
    // z^T a^T = b^T; write h = u a^T in row echelon form and solve w h = b^T.
    let (h, u) = hnf(&a.transpose());
    let k = hnf_rank(&h);
    let mut w = vec![BigInt::zero(); u.rows];
    let mut residual: Vec<BigInt> = b.to_vec();
    let mut col = 0;
    for i in 0..k {
        while h.get(i, col).is_zero() {
            if !residual[col].is_zero() {
                return None;
            }
            col += 1;
        }
        let p = h.get(i, col);
        if !residual[col].is_multiple_of(p) {
            return None;
        }
        let q = &residual[col] / p;
        for j in col..h.cols {
            let t = h.get(i, j) * &q;
            residual[j] -= t;
        }
        w[i] = q;
        col += 1;
    }
    if residual.iter().any(|x| !x.is_zero()) {
        return None;
    }
    let mut z = vec![BigInt::zero(); a.cols];
    for (i, wi) in w.iter().enumerate() {
        if wi.is_zero() {
            continue;
        }
        for (j, zj) in z.iter_mut().enumerate() {
            *zj += wi * u.get(i, j);
        }
    }
    Some(z)
}

/// Reduces `x` against a row HNF basis; zero result iff `x` lies in the lattice.
fn reduce_against(h: &IntMatrix, x: &[BigInt]) -> Vec<BigInt> {
    let mut x = x.to_vec();
    let mut col = 0;
    for i in 0..h.rows {
        while col < h.cols && h.get(i, col).is_zero() {
            col += 1;
        }
        if col == h.cols {
            break;
        }
        let p = h.get(i, col);
        let q = x[col].div_floor(p);
        if !q.is_zero() {
            for j in col..h.cols {
                let t = h.get(i, j) * &q;
                x[j] -= t;
            }
        }
        col += 1;
    }
    x
}

/// Whether `x` lies in the row lattice of the row-HNF matrix `h`.
pub fn lattice_contains(h: &IntMatrix, x: &[BigInt]) -> bool {
    reduce_against(h, x).iter().all(|v| v.is_zero())
}

/// Order of a finitely generated abelian group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    Finite(#[serde(with = "crate::bignum")] BigInt),
    Infinite,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(n) => write!(f, "{n}"),
            Order::Infinite => write!(f, "infinite"),
        }
    }
}

/// A finitely generated abelian group `Z^gens / rowspan(relations)` together with
/// its invariant-factor decomposition.
#[derive(Clone)]
pub struct FgAbGroup {
    gens: usize,
    relations: IntMatrix,
    relation_hnf: IntMatrix,
    invariant_factors: Vec<BigInt>,
    free_rank: usize,
    /// `diag[i]` is the modulus of coordinate i after the change of basis (0 = free).
    diag: Vec<BigInt>,
    /// Element `x` has Smith coordinates `x^T * coord`.
    coord: IntMatrix,
    /// Row i is the ambient vector of the i-th Smith generator.
    coord_inv: IntMatrix,
}

impl fmt::Debug for FgAbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FgAbGroup({})", self)
    }
}

impl fmt::Display for FgAbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.invariant_factors.iter().map(|d| format!("Z/{d}")).collect();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" ⊕ "))
        }
    }
}

impl PartialEq for FgAbGroup {
    /// Presentation equality: same generator count and same relation lattice.
    fn eq(&self, other: &Self) -> bool {
        self.gens == other.gens && self.relation_hnf == other.relation_hnf
    }
}

impl Eq for FgAbGroup {}

#[derive(Serialize, Deserialize)]
struct GroupJson {
    #[serde(with = "crate::bignum::vec")]
    invariant_factors: Vec<BigInt>,
    free_rank: usize,
}

impl Serialize for FgAbGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GroupJson { invariant_factors: self.invariant_factors.clone(), free_rank: self.free_rank }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FgAbGroup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let g = GroupJson::deserialize(d)?;
        FgAbGroup::from_invariants(&g.invariant_factors, g.free_rank).map_err(serde::de::Error::custom)
    }
}

impl FgAbGroup {
    /// `Z^gens` modulo the row span of `relations` (which must have `gens` columns).
    pub fn from_presentation(gens: usize, relations: IntMatrix) -> Result<Self> {
        if relations.cols != gens {
            return Err(Error::Input(format!(
                "relation matrix has {} columns for {} generators",
                relations.cols, gens
            )));
        }
        let relation_hnf = lattice_basis(&relations);
        let s = snf_full(&relation_hnf);
        let mut diag = vec![BigInt::zero(); gens];
        for (i, d) in diag.iter_mut().enumerate().take(s.d.rows.min(gens)) {
            *d = s.d.get(i, i).clone();
        }
        let invariant_factors: Vec<BigInt> = diag.iter().filter(|d| !d.is_zero() && !d.is_one()).cloned().collect();
        let free_rank = diag.iter().filter(|d| d.is_zero()).count();
        Ok(FgAbGroup {
            gens,
            relations,
            relation_hnf,
            invariant_factors,
            free_rank,
            diag,
            coord: s.v,
            coord_inv: s.v_inv,
        })
    }

    /// The cokernel `Z^cols / rowspan(rel)`.
    pub fn cokernel(rel: &IntMatrix) -> Self {
        Self::from_presentation(rel.cols, rel.clone()).expect("columns match by construction")
    }

    /// The canonical group `Z/d_1 ⊕ ... ⊕ Z/d_k ⊕ Z^r`.
    pub fn from_invariants(factors: &[BigInt], free_rank: usize) -> Result<Self> {
        for d in factors {
            if *d < BigInt::from(2) {
                return Err(Error::Input(format!("invariant factor {d} is below 2")));
            }
        }
        for w in factors.windows(2) {
            if !w[1].is_multiple_of(&w[0]) {
                return Err(Error::Input(format!("invariant factors {} and {} break the divisibility chain", w[0], w[1])));
            }
        }
        let n = factors.len() + free_rank;
        let mut diag = factors.to_vec();
        diag.extend(std::iter::repeat_n(BigInt::zero(), free_rank));
        let rel = IntMatrix::diagonal(&diag);
        Self::from_presentation(n, rel)
    }

    pub fn trivial() -> Self {
        Self::free(0)
    }

    pub fn free(rank: usize) -> Self {
        Self::from_presentation(rank, IntMatrix::zeros(0, rank)).expect("shape")
    }

    pub fn cyclic(n: u64) -> Self {
        if n == 0 {
            return Self::free(1);
        }
        Self::from_presentation(1, IntMatrix::from_i64(&[vec![n as i64]])).expect("shape")
    }

    /// Direct sum of presentations; generators are concatenated.
    pub fn direct_sum(parts: &[FgAbGroup]) -> Self {
        let gens = parts.iter().map(|p| p.gens).sum();
        let rel = IntMatrix::block_diag(&parts.iter().map(|p| p.relations.clone()).collect::<Vec<_>>());
        Self::from_presentation(gens, rel).expect("shape")
    }

    pub fn gens(&self) -> usize {
        self.gens
    }

    pub fn relations(&self) -> &IntMatrix {
        &self.relations
    }

    pub fn invariant_factors(&self) -> &[BigInt] {
        &self.invariant_factors
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn order(&self) -> Order {
        if self.free_rank > 0 {
            Order::Infinite
        } else {
            Order::Finite(self.invariant_factors.iter().product())
        }
    }

    /// Order as u64 when finite and small enough.
    pub fn order_u64(&self) -> Option<u64> {
        match self.order() {
            Order::Finite(n) => n.to_u64(),
            Order::Infinite => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.invariant_factors.is_empty()
    }

    /// Same invariant factors and free rank.
    pub fn is_isomorphic(&self, other: &FgAbGroup) -> bool {
        self.invariant_factors == other.invariant_factors && self.free_rank == other.free_rank
    }

    pub fn invariants_string(&self) -> String {
        self.to_string()
    }

    pub fn zero_elem(&self) -> Vec<BigInt> {
        vec![BigInt::zero(); self.gens]
    }

    pub fn basis_elem(&self, i: usize) -> Vec<BigInt> {
        let mut v = self.zero_elem();
        v[i] = BigInt::one();
        v
    }

    /// Smith coordinates of an element, reduced modulo the torsion orders.
    /// Slots with modulus 1 are kept and are always zero.
    pub fn smith_coords(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.gens, "element length");
        let mut c = vec![BigInt::zero(); self.gens];
        for (j, cj) in c.iter_mut().enumerate() {
            for (i, xi) in x.iter().enumerate() {
                if !xi.is_zero() {
                    *cj += xi * self.coord.get(i, j);
                }
            }
        }
        for (cj, d) in c.iter_mut().zip(&self.diag) {
            if !d.is_zero() {
                *cj = cj.mod_floor(d);
            }
        }
        c
    }

    /// Coordinates in the canonical decomposition: one entry per invariant factor, then the free part.
    pub fn canonical_coords(&self, x: &[BigInt]) -> Vec<BigInt> {
        let c = self.smith_coords(x);
        let mut tors = Vec::new();
        let mut free = Vec::new();
        for (ci, d) in c.into_iter().zip(&self.diag) {
            if d.is_zero() {
                free.push(ci);
            } else if !d.is_one() {
                tors.push(ci);
            }
        }
        tors.extend(free);
        tors
    }

    /// Ambient vectors of generators realising the canonical decomposition, in the
    /// order used by `canonical_coords`.
    pub fn canonical_generators(&self) -> Vec<Vec<BigInt>> {
        let mut tors = Vec::new();
        let mut free = Vec::new();
        for (i, d) in self.diag.iter().enumerate() {
            let g = self.coord_inv.row_vec(i);
            if d.is_zero() {
                free.push(g);
            } else if !d.is_one() {
                tors.push(g);
            }
        }
        tors.extend(free);
        tors
    }

    /// Ambient vector with the given canonical coordinates.
    pub fn from_canonical(&self, c: &[BigInt]) -> Vec<BigInt> {
        let gens = self.canonical_generators();
        assert_eq!(c.len(), gens.len(), "canonical coordinate length");
        let mut x = self.zero_elem();
        for (ci, g) in c.iter().zip(gens) {
            for (xj, gj) in x.iter_mut().zip(g) {
                *xj += ci * gj;
            }
        }
        x
    }

    pub fn is_zero(&self, x: &[BigInt]) -> bool {
        self.smith_coords(x).iter().all(|c| c.is_zero())
    }

    pub fn elem_eq(&self, x: &[BigInt], y: &[BigInt]) -> bool {
        let d: Vec<BigInt> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.is_zero(&d)
    }

    /// Order of an element; `None` for infinite order.
    pub fn elem_order(&self, x: &[BigInt]) -> Option<BigInt> {
        let c = self.smith_coords(x);
        let mut ord = BigInt::one();
        for (ci, d) in c.iter().zip(&self.diag) {
            if ci.is_zero() {
                continue;
            }
            if d.is_zero() {
                return None;
            }
            let o = d / ci.gcd(d);
            ord = ord.lcm(&o);
        }
        Some(ord)
    }

    /// All elements in canonical form, for finite groups of order at most `limit`.
    pub fn elements(&self, limit: u64) -> Result<Vec<Vec<BigInt>>> {
        let n = self
            .order_u64()
            .ok_or_else(|| Error::Unsupported("cannot enumerate an infinite group".into()))?;
        if n > limit {
            return Err(Error::Budget(format!("group of order {n} exceeds enumeration limit {limit}")));
        }
        let mods: Vec<u64> = self.invariant_factors.iter().map(|d| d.to_u64().expect("small")).collect();
        let mut out = Vec::with_capacity(n as usize);
        let mut c = vec![0u64; mods.len()];
        loop {
            let big: Vec<BigInt> = c.iter().map(|&x| BigInt::from(x)).collect();
            out.push(self.from_canonical(&big));
            let mut k = 0;
            loop {
                if k == mods.len() {
                    return Ok(out);
                }
                c[k] += 1;
                if c[k] < mods[k] {
                    break;
                }
                c[k] = 0;
                k += 1;
            }
        }
    }

    /// Membership of `x` in the relation lattice (i.e. `x` is zero in the group).
    pub fn in_relations(&self, x: &[BigInt]) -> bool {
        reduce_against(&self.relation_hnf, x).iter().all(|c| c.is_zero())
    }

    /// Adds extra relations (rows) to the presentation, giving a quotient group.
    pub fn quotient(&self, extra: &[Vec<BigInt>]) -> FgAbGroup {
        let more = IntMatrix::from_rows(extra, self.gens);
        FgAbGroup::from_presentation(self.gens, self.relations.vstack(&more)).expect("shape")
    }

    /// The whole group as a subgroup of itself.
    pub fn whole(&self) -> SubgroupData {
        SubgroupData::new(self.clone(), IntMatrix::identity(self.gens))
    }

    pub fn zero_subgroup(&self) -> SubgroupData {
        SubgroupData::new(self.clone(), IntMatrix::zeros(self.gens, 0))
    }
}

/// A subgroup of `ambient`, generated by the columns of `generators`.
#[derive(Clone, Debug)]
pub struct SubgroupData {
    ambient: FgAbGroup,
    generators: IntMatrix,
    lattice: IntMatrix,
}

impl SubgroupData {
    pub fn new(ambient: FgAbGroup, generators: IntMatrix) -> Self {
        assert_eq!(generators.rows, ambient.gens, "generator length");
        let stacked = generators.transpose().vstack(&ambient.relations);
        let lattice = lattice_basis(&stacked);
        SubgroupData { ambient, generators, lattice }
    }

    pub fn from_vectors(ambient: FgAbGroup, gens: &[Vec<BigInt>]) -> Self {
        let n = ambient.gens;
        Self::new(ambient, IntMatrix::from_cols(gens, n))
    }

    pub fn ambient(&self) -> &FgAbGroup {
        &self.ambient
    }

    pub fn generators(&self) -> &IntMatrix {
        &self.generators
    }

    pub fn generator_vecs(&self) -> Vec<Vec<BigInt>> {
        self.generators.col_vecs()
    }

    pub fn contains(&self, x: &[BigInt]) -> bool {
        reduce_against(&self.lattice, x).iter().all(|c| c.is_zero())
    }

    pub fn is_subgroup_of(&self, other: &SubgroupData) -> bool {
        self.generators.col_vecs().iter().all(|g| other.contains(g))
    }

    /// Equality by mutual membership of generators.
    pub fn same_as(&self, other: &SubgroupData) -> bool {
        self.is_subgroup_of(other) && other.is_subgroup_of(self)
    }

    /// A generator of `self` outside `other`, if any.
    pub fn witness_outside(&self, other: &SubgroupData) -> Option<Vec<BigInt>> {
        self.generators.col_vecs().into_iter().find(|g| !other.contains(g))
    }

    /// The subgroup as an abstract group on its generators.
    pub fn as_group(&self) -> FgAbGroup {
        let g = self.generators.cols;
        let incl = AbHom::new_unchecked(FgAbGroup::free(g), self.ambient.clone(), self.generators.clone());
        let ker = integer_kernel_of_hom(&incl);
        FgAbGroup::from_presentation(g, IntMatrix::from_rows(&ker, g)).expect("shape")
    }

    /// Coefficients expressing `x` in the generators (modulo ambient relations).
    pub fn coords(&self, x: &[BigInt]) -> Option<Vec<BigInt>> {
        let rel_t = self.ambient.relations.transpose();
        let a = self.generators.hstack(&rel_t);
        let z = solve_int(&a, x)?;
        Some(z[..self.generators.cols].to_vec())
    }

    /// `self / other` for `other ⊆ self`, presented on the generators of `self`.
    pub fn quotient_by(&self, other: &SubgroupData) -> Result<FgAbGroup> {
        if !other.is_subgroup_of(self) {
            return Err(Error::Input("quotient by a non-subgroup".into()));
        }
        let q = self.ambient.quotient(&other.generators.col_vecs());
        let g = self.generators.cols;
        let map = AbHom::new_unchecked(FgAbGroup::free(g), q, self.generators.clone());
        let ker = integer_kernel_of_hom(&map);
        FgAbGroup::from_presentation(g, IntMatrix::from_rows(&ker, g))
    }

    pub fn order(&self) -> Order {
        self.as_group().order()
    }
}

/// Kernel vectors of a homomorphism, as vectors over the source generators.
fn integer_kernel_of_hom(f: &AbHom) -> Vec<Vec<BigInt>> {
    let n = f.source.gens;
    let rel_t = f.target.relations.transpose();
    let a = f.matrix.hstack(&rel_t);
    let mut out: Vec<Vec<BigInt>> = integer_kernel(&a).into_iter().map(|v| v[..n].to_vec()).collect();
    out.retain(|v| v.iter().any(|x| !x.is_zero()));
    out
}

/// A homomorphism `source -> target` given on generators (columns = images).
#[derive(Clone, Debug)]
pub struct AbHom {
    source: FgAbGroup,
    target: FgAbGroup,
    matrix: IntMatrix,
}

impl AbHom {
    /// Checks shape and that every source relation maps into the target relations.
    pub fn new(source: FgAbGroup, target: FgAbGroup, matrix: IntMatrix) -> Result<Self> {
        if matrix.rows != target.gens || matrix.cols != source.gens {
            return Err(Error::Input(format!(
                "map matrix is {}x{}, expected {}x{}",
                matrix.rows, matrix.cols, target.gens, source.gens
            )));
        }
        for r in source.relations.row_vecs() {
            let img = matrix.mul_vec(&r);
            if !target.in_relations(&img) {
                return Err(Error::Input(format!("map is not well defined: relation {r:?} maps to {img:?}")));
            }
        }
        Ok(AbHom { source, target, matrix })
    }

    fn new_unchecked(source: FgAbGroup, target: FgAbGroup, matrix: IntMatrix) -> Self {
        AbHom { source, target, matrix }
    }

    pub fn zero(source: FgAbGroup, target: FgAbGroup) -> Self {
        let m = IntMatrix::zeros(target.gens, source.gens);
        AbHom { source, target, matrix: m }
    }

    pub fn identity(g: FgAbGroup) -> Self {
        let m = IntMatrix::identity(g.gens);
        AbHom { source: g.clone(), target: g, matrix: m }
    }

    pub fn source(&self) -> &FgAbGroup {
        &self.source
    }

    pub fn target(&self) -> &FgAbGroup {
        &self.target
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &[BigInt]) -> Vec<BigInt> {
        self.matrix.mul_vec(x)
    }

    /// `g ∘ self`.
    pub fn then(&self, g: &AbHom) -> Result<AbHom> {
        if self.target != g.source {
            return Err(Error::Input("composition of non-composable maps".into()));
        }
        Ok(AbHom { source: self.source.clone(), target: g.target.clone(), matrix: g.matrix.mul(&self.matrix) })
    }

    pub fn kernel(&self) -> SubgroupData {
        let ker = integer_kernel_of_hom(self);
        SubgroupData::from_vectors(self.source.clone(), &ker)
    }

    pub fn image(&self) -> SubgroupData {
        SubgroupData::new(self.target.clone(), self.matrix.clone())
    }

    pub fn coker(&self) -> FgAbGroup {
        self.target.quotient(&self.matrix.col_vecs())
    }

    pub fn is_zero_map(&self) -> bool {
        self.matrix.col_vecs().iter().all(|c| self.target.is_zero(c))
    }

    pub fn is_injective(&self) -> bool {
        self.kernel().as_group().is_trivial()
    }

    pub fn is_surjective(&self) -> bool {
        self.coker().is_trivial()
    }
}

/// Verdict of an exactness test at one group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactnessCheck {
    pub exact: bool,
    /// On failure: an element lying in exactly one of image and kernel.
    #[serde(serialize_with = "crate::bignum::opt_vec::serialize")]
    pub witness: Option<Vec<BigInt>>,
    /// Which side the witness lies in: "image" or "kernel".
    pub witness_side: Option<String>,
}

/// Tests `image(f) = kernel(g)` inside `target(f) = source(g)`.
pub fn is_exact_at(f: &AbHom, g: &AbHom) -> Result<ExactnessCheck> {
    if f.target != g.source {
        return Err(Error::Input("maps are not composable".into()));
    }
    let im = f.image();
    let ker = g.kernel();
    if let Some(w) = im.witness_outside(&ker) {
        return Ok(ExactnessCheck { exact: false, witness: Some(w), witness_side: Some("image".into()) });
    }
    if let Some(w) = ker.witness_outside(&im) {
        return Ok(ExactnessCheck { exact: false, witness: Some(w), witness_side: Some("kernel".into()) });
    }
    Ok(ExactnessCheck { exact: true, witness: None, witness_side: None })
}

#[derive(Clone, Debug, Serialize)]
pub struct PositionVerdict {
    /// Index of the group in the chain `A_0 -> A_1 -> ... -> A_k`.
    pub position: usize,
    pub check: ExactnessCheck,
}

/// Result of checking a chain of maps.
#[derive(Clone, Debug, Serialize)]
pub struct ComplexReport {
    pub groups: Vec<FgAbGroup>,
    pub positions: Vec<PositionVerdict>,
    pub all_exact: bool,
    /// `∏ |A_even| = ∏ |A_odd|`, when every group is finite.
    pub order_identity: Option<bool>,
}

impl ComplexReport {
    pub fn failed_positions(&self) -> Vec<usize> {
        self.positions.iter().filter(|p| !p.check.exact).map(|p| p.position).collect()
    }
}

/// Checks exactness at every interior group of `chain` and the alternating
/// order identity when all groups are finite.
pub fn verify_complex(chain: &[AbHom]) -> Result<ComplexReport> {
    if chain.is_empty() {
        return Err(Error::Input("empty chain".into()));
    }
    for (i, w) in chain.windows(2).enumerate() {
        if w[0].target != w[1].source {
            return Err(Error::Input(format!("maps {} and {} are not composable", i, i + 1)));
        }
    }
    let mut groups = vec![chain[0].source.clone()];
    groups.extend(chain.iter().map(|f| f.target.clone()));
    let mut positions = Vec::new();
    for (i, w) in chain.windows(2).enumerate() {
        positions.push(PositionVerdict { position: i + 1, check: is_exact_at(&w[0], &w[1])? });
    }
    let all_exact = positions.iter().all(|p| p.check.exact);
    let order_identity = if groups.iter().all(|g| g.is_finite()) {
        let mut even = BigInt::one();
        let mut odd = BigInt::one();
        for (i, g) in groups.iter().enumerate() {
            let Order::Finite(n) = g.order() else { unreachable!() };
            if i % 2 == 0 {
                even *= n;
            } else {
                odd *= n;
            }
        }
        Some(even == odd)
    } else {
        None
    };
    Ok(ComplexReport { groups, positions, all_exact, order_identity })
}

/// Converts small integers into a vector of `BigInt`.
pub fn bigvec(xs: &[i64]) -> Vec<BigInt> {
    xs.iter().map(|&x| BigInt::from(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_i64(rows)
    }

    fn diag_entries(d: &IntMatrix) -> Vec<i64> {
        (0..d.rows().min(d.cols())).map(|i| d.get(i, i).to_i64().unwrap()).collect()
    }

    #[test]
    fn hnf_examples() {
        let (h, u) = hnf(&IntMatrix::identity(2));
        assert_eq!(h, IntMatrix::identity(2));
        assert_eq!(u, IntMatrix::identity(2));

        let a = m(&[vec![2, 4], vec![6, 8]]);
        let (h, u) = hnf(&a);
        // [[2,4],[0,4]] spans the same lattice; reducing 4 above the pivot 4 gives 0
        assert_eq!(h, m(&[vec![2, 0], vec![0, 4]]));
        assert_eq!(lattice_basis(&m(&[vec![2, 4], vec![0, 4]])), h);
        assert_eq!(u.mul(&a), h);
        assert!(u.is_unimodular());

        let (h, _) = hnf(&IntMatrix::zeros(2, 2));
        assert!(h.is_zero());
    }

    #[test]
    fn snf_examples() {
        let (d, _, _) = snf(&IntMatrix::identity(2));
        assert_eq!(diag_entries(&d), vec![1, 1]);
        let a = m(&[vec![2, 0], vec![0, 3]]);
        let (d, u, v) = snf(&a);
        assert_eq!(diag_entries(&d), vec![1, 6]);
        assert_eq!(u.mul(&a).mul(&v), d);
        let (d, _, _) = snf(&m(&[vec![4, 0], vec![0, 6]]));
        assert_eq!(diag_entries(&d), vec![2, 12]);
    }

    #[test]
    fn cokernel_examples() {
        assert_eq!(FgAbGroup::cokernel(&m(&[vec![2]])).to_string(), "Z/2");
        assert_eq!(FgAbGroup::cokernel(&IntMatrix::zeros(0, 3)).free_rank(), 3);
        assert_eq!(FgAbGroup::cokernel(&m(&[vec![2, 0], vec![0, 3]])).to_string(), "Z/6");
    }

    #[test]
    fn kernel_image_coker_examples() {
        let z = FgAbGroup::free(1);
        let two = AbHom::new(z.clone(), z.clone(), m(&[vec![2]])).unwrap();
        assert!(two.kernel().as_group().is_trivial());
        assert_eq!(two.coker().to_string(), "Z/2");

        let z4 = FgAbGroup::cyclic(4);
        let f = AbHom::new(z4.clone(), z4.clone(), m(&[vec![2]])).unwrap();
        assert_eq!(f.kernel().as_group().to_string(), "Z/2");
        assert_eq!(f.image().as_group().to_string(), "Z/2");
        assert_eq!(f.coker().to_string(), "Z/2");

        let a = FgAbGroup::cyclic(6);
        let b = FgAbGroup::free(2);
        let zero = AbHom::zero(a.clone(), b.clone());
        assert!(zero.kernel().as_group().is_isomorphic(&a));
        assert!(zero.coker().is_isomorphic(&b));
    }

    #[test]
    fn ill_defined_map_rejected() {
        let z2 = FgAbGroup::cyclic(2);
        let z = FgAbGroup::free(1);
        assert!(AbHom::new(z2, z, m(&[vec![1]])).is_err());
    }

    #[test]
    fn exactness_examples() {
        let z = FgAbGroup::free(1);
        let zero = FgAbGroup::trivial();
        let a = AbHom::zero(zero.clone(), z.clone());
        let id = AbHom::identity(z.clone());
        assert!(is_exact_at(&a, &id).unwrap().exact);

        let two = AbHom::new(z.clone(), z.clone(), m(&[vec![2]])).unwrap();
        let mod2 = AbHom::new(z.clone(), FgAbGroup::cyclic(2), m(&[vec![1]])).unwrap();
        assert!(is_exact_at(&two, &mod2).unwrap().exact);

        let mod4 = AbHom::new(z.clone(), FgAbGroup::cyclic(4), m(&[vec![1]])).unwrap();
        let c = is_exact_at(&two, &mod4).unwrap();
        assert!(!c.exact);
        assert_eq!(c.witness, Some(bigvec(&[2])));
    }

    #[test]
    fn complex_examples() {
        let t = FgAbGroup::trivial();
        let r = verify_complex(&[AbHom::zero(t.clone(), t.clone()), AbHom::zero(t.clone(), t.clone())]).unwrap();
        assert!(r.all_exact);

        let z2 = FgAbGroup::cyclic(2);
        let z4 = FgAbGroup::cyclic(4);
        let chain = vec![
            AbHom::zero(t.clone(), z2.clone()),
            AbHom::new(z2.clone(), z4.clone(), m(&[vec![2]])).unwrap(),
            AbHom::new(z4.clone(), z2.clone(), m(&[vec![1]])).unwrap(),
            AbHom::zero(z2.clone(), t.clone()),
        ];
        let r = verify_complex(&chain).unwrap();
        assert!(r.all_exact);
        assert_eq!(r.order_identity, Some(true));

        let chain = vec![
            AbHom::zero(t.clone(), z2.clone()),
            AbHom::zero(z2.clone(), z4.clone()),
            AbHom::zero(z4.clone(), t.clone()),
        ];
        let r = verify_complex(&chain).unwrap();
        assert!(!r.all_exact);
        assert!(r.failed_positions().contains(&2));
    }

    #[test]
    fn solve_and_coords() {
        let a = m(&[vec![2, 3], vec![4, 5]]);
        let z = solve_int(&a, &bigvec(&[1, 1])).unwrap();
        assert_eq!(a.mul_vec(&z), bigvec(&[1, 1]));
        assert!(solve_int(&m(&[vec![2]]), &bigvec(&[1])).is_none());

        let z6 = FgAbGroup::cyclic(6);
        let sub = SubgroupData::from_vectors(z6, &[bigvec(&[2])]);
        assert_eq!(sub.as_group().to_string(), "Z/3");
        let c = sub.coords(&bigvec(&[4])).unwrap();
        assert!(sub.ambient().elem_eq(&[&c[0] * BigInt::from(2)], &bigvec(&[4])));
        assert!(sub.coords(&bigvec(&[1])).is_none());
    }

    #[test]
    fn canonical_coordinates_round_trip() {
        let g = FgAbGroup::cokernel(&m(&[vec![2, 4, 0], vec![0, 6, 0]]));
        assert_eq!(g.to_string(), "Z/2 ⊕ Z/6 ⊕ Z");
        let x = bigvec(&[3, -1, 5]);
        let c = g.canonical_coords(&x);
        let y = g.from_canonical(&c);
        assert!(g.elem_eq(&x, &y));
    }

    #[test]
    fn group_json_shape() {
        let g = FgAbGroup::from_invariants(&bigvec(&[2, 4]), 1).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"invariant_factors":[2,4],"free_rank":1}"#);
        let back: FgAbGroup = serde_json::from_str(&s).unwrap();
        assert!(back.is_isomorphic(&g));
    }
}
