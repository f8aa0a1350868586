//! Fractional ideals in Hermite normal form over the integral basis, and
//! prime decomposition of rational primes.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{rat_big, Elem, Field};
use crate::abelian::{hnf, hnf_rank, IntMatrix};
use crate::error::{Error, Result};

/// The fractional ideal `(1/den) · rowspan(h)`, with `h` a full-rank row HNF in
/// integral-basis coordinates and `gcd(content(h), den) = 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Ideal {
    h: IntMatrix,
    den: BigInt,
}

impl fmt::Debug for Ideal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ideal({:?}", self.h)?;
        if !self.den.is_one() {
            write!(f, " / {}", self.den)?;
        }
        write!(f, ")")
    }
}

/// Serialized form: HNF rows and denominator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealRecord {
    #[serde(with = "crate::bignum::vecvec")]
    pub hnf: Vec<Vec<BigInt>>,
    #[serde(with = "crate::bignum")]
    pub den: BigInt,
}

impl Ideal {
    fn normalize(h: IntMatrix, den: BigInt) -> Self {
        let mut g = den.clone();
        for i in 0..h.rows() {
            for x in h.row(i) {
                g = g.gcd(x);
            }
        }
        if g.is_one() || g.is_zero() {
            return Ideal { h, den };
        }
        let h = IntMatrix::new(
            h.rows(),
            h.cols(),
            (0..h.rows()).flat_map(|i| h.row(i).iter().map(|x| x / &g).collect::<Vec<_>>()).collect(),
        )
        .expect("shape");
        Ideal { h, den: den / g }
    }

    /// The `O`-module generated by the given elements.
    pub fn from_elements(k: &Field, gens: &[Elem]) -> Result<Self> {
        let n = k.degree();
        let basis = k.integral_basis();
        let mut rows: Vec<Vec<BigRational>> = Vec::new();
        for g in gens {
            for w in &basis {
                rows.push(k.int_coords(&k.mul(g, w)));
            }
        }
        Self::from_rational_rows(n, &rows)
    }

    /// The Z-lattice spanned by rational coordinate rows, assumed to be an `O`-module.
    pub fn from_rational_rows(n: usize, rows: &[Vec<BigRational>]) -> Result<Self> {
        let den = rows.iter().flatten().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<Vec<BigInt>> =
            rows.iter().map(|r| r.iter().map(|x| (x * rat_big(&den)).to_integer()).collect()).collect();
        let (h, _) = hnf(&IntMatrix::from_rows(&ints, n));
        if hnf_rank(&h) != n {
            return Err(Error::Input("the zero ideal is not invertible".into()));
        }
        let h = h.select_rows(&(0..n).collect::<Vec<_>>());
        Ok(Self::normalize(h, den))
    }

    pub fn unit(k: &Field) -> Self {
        Ideal { h: IntMatrix::identity(k.degree()), den: BigInt::one() }
    }

    pub fn principal(k: &Field, x: &Elem) -> Result<Self> {
        Self::from_elements(k, std::slice::from_ref(x))
    }

    pub fn from_record(k: &Field, r: &IdealRecord) -> Result<Self> {
        let n = k.degree();
        let rows: Vec<Vec<BigRational>> = r
            .hnf
            .iter()
            .map(|row| row.iter().map(|x| BigRational::new(x.clone(), r.den.clone())).collect())
            .collect();
        if rows.len() != n || rows.iter().any(|x| x.len() != n) {
            return Err(Error::Input("ideal record has the wrong shape".into()));
        }
        Self::from_rational_rows(n, &rows)
    }

    pub fn record(&self) -> IdealRecord {
        IdealRecord { hnf: self.h.row_vecs(), den: self.den.clone() }
    }

    pub fn hnf(&self) -> &IntMatrix {
        &self.h
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    /// Z-basis of the ideal as field elements.
    pub fn basis(&self, k: &Field) -> Vec<Elem> {
        let d = BigRational::new(BigInt::one(), self.den.clone());
        self.h.row_vecs().iter().map(|r| k.scale(&k.from_int_coords(r), &d)).collect()
    }

    /// Absolute norm.
    pub fn norm(&self) -> BigRational {
        let n = self.h.rows() as u32;
        BigRational::new(self.h.det().abs(), self.den.pow(n))
    }

    /// Norm of an integral ideal as an integer.
    pub fn norm_int(&self) -> BigInt {
        self.norm().to_integer()
    }

    pub fn contains(&self, k: &Field, x: &Elem) -> bool {
        let c = k.int_coords(x);
        let scaled: Vec<BigRational> = c.iter().map(|q| q * rat_big(&self.den)).collect();
        if scaled.iter().any(|q| !q.is_integer()) {
            return false;
        }
        let v: Vec<BigInt> = scaled.into_iter().map(|q| q.to_integer()).collect();
        crate::abelian::lattice_contains(&self.h, &v)
    }

    /// `self ⊆ other`.
    pub fn is_subset(&self, k: &Field, other: &Ideal) -> bool {
        self.basis(k).iter().all(|x| other.contains(k, x))
    }

    pub fn mul(&self, k: &Field, other: &Ideal) -> Ideal {
        let a = self.basis(k);
        let b = other.basis(k);
        let mut rows = Vec::with_capacity(a.len() * b.len());
        for x in &a {
            for y in &b {
                rows.push(k.int_coords(&k.mul(x, y)));
            }
        }
        Self::from_rational_rows(k.degree(), &rows).expect("product of nonzero ideals")
    }

    pub fn add(&self, k: &Field, other: &Ideal) -> Ideal {
        let rows: Vec<Vec<BigRational>> =
            self.basis(k).iter().chain(other.basis(k).iter()).map(|x| k.int_coords(x)).collect();
        Self::from_rational_rows(k.degree(), &rows).expect("sum of nonzero ideals")
    }

    pub fn scale(&self, k: &Field, q: &BigRational) -> Ideal {
        let rows: Vec<Vec<BigRational>> =
            self.basis(k).iter().map(|x| k.int_coords(&k.scale(x, q))).collect();
        Self::from_rational_rows(k.degree(), &rows).expect("nonzero scale")
    }

    pub fn mul_elem(&self, k: &Field, x: &Elem) -> Ideal {
        let rows: Vec<Vec<BigRational>> = self.basis(k).iter().map(|b| k.int_coords(&k.mul(b, x))).collect();
        Self::from_rational_rows(k.degree(), &rows).expect("nonzero element")
    }

    /// Image under the Galois element `mask`.
    pub fn conj(&self, k: &Field, mask: usize) -> Ideal {
        let rows: Vec<Vec<BigRational>> =
            self.basis(k).iter().map(|x| k.int_coords(&k.conj(x, mask))).collect();
        Self::from_rational_rows(k.degree(), &rows).expect("conjugate ideal")
    }

    /// `∏_{σ≠1} σ(I) / N(I)`, valid because the extension over `Q` is Galois.
    pub fn inverse(&self, k: &Field) -> Ideal {
        let mut acc = Ideal::unit(k);
        for m in 1..k.degree() {
            acc = acc.mul(k, &self.conj(k, m));
        }
        acc.scale(k, &self.norm().recip())
    }

    pub fn pow(&self, k: &Field, e: i64) -> Ideal {
        let base = if e < 0 { self.inverse(k) } else { self.clone() };
        let mut acc = Ideal::unit(k);
        let mut b = base;
        let mut m = e.unsigned_abs();
        while m > 0 {
            if m & 1 == 1 {
                acc = acc.mul(k, &b);
            }
            m >>= 1;
            if m > 0 {
                b = b.mul(k, &b);
            }
        }
        acc
    }

    /// Integral ideal `den · I` together with `den`.
    pub fn integral_multiple(&self, k: &Field) -> (Ideal, BigInt) {
        if self.den.is_one() {
            (self.clone(), BigInt::one())
        } else {
            (self.scale(k, &rat_big(&self.den)), self.den.clone())
        }
    }

    /// Total order used to choose canonical primes: norm, then HNF entries.
    pub fn hnf_cmp(&self, other: &Ideal) -> Ordering {
        self.norm()
            .cmp(&other.norm())
            .then_with(|| self.h.row_vecs().cmp(&other.h.row_vecs()))
            .then_with(|| self.den.cmp(&other.den))
    }

    /// Compact label such as `(2, 1 + sqrt(-5))` listing a two-element generating set when found.
    pub fn describe(&self, k: &Field) -> String {
        let b = self.basis(k);
        format!("<{}>", b.iter().map(|x| k.format(x)).collect::<Vec<_>>().join(", "))
    }
}

impl Field {
    /// Extension `I·O_K` of an ideal of the subfield `sub`.
    pub fn embed_ideal(&self, sub: &Field, i: &Ideal) -> Result<Ideal> {
        let gens = i.basis(sub).iter().map(|x| self.embed(sub, x)).collect::<Result<Vec<_>>>()?;
        Ideal::from_elements(self, &gens)
    }

    /// Relative norm `N_{K/F}(A)`, computed as `(∏_σ σA) ∩ F`.
    pub fn relative_norm_ideal(&self, sub: &Field, a: &Ideal) -> Result<Ideal> {
        let masks = self.fixing_masks(sub)?;
        let mut prod = Ideal::unit(self);
        for &m in &masks {
            prod = prod.mul(self, &a.conj(self, m));
        }
        let basis = prod.basis(self);
        // power-basis indices hit by the subfield's monomials
        let mut inside = vec![false; self.degree()];
        for s in 0..sub.degree() {
            let img = self.embed(sub, &sub.power_basis(s))?;
            for (t, c) in img.0.iter().enumerate() {
                if !c.is_zero() {
                    inside[t] = true;
                }
            }
        }
        let rows: Vec<Vec<BigRational>> = basis.iter().map(|b| b.0.clone()).collect();
        let den = rows.iter().flatten().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let outside: Vec<usize> = (0..self.degree()).filter(|&t| !inside[t]).collect();
        let a_rows: Vec<Vec<BigInt>> = outside
            .iter()
            .map(|&t| rows.iter().map(|r| (&r[t] * rat_big(&den)).to_integer()).collect())
            .collect();
        let kernel = if outside.is_empty() {
            (0..basis.len())
                .map(|i| (0..basis.len()).map(|j| BigInt::from(u8::from(i == j))).collect())
                .collect()
        } else {
            crate::abelian::integer_kernel(&IntMatrix::from_rows(&a_rows, basis.len()))
        };
        let mut gens = Vec::new();
        for c in kernel {
            let mut x = self.zero();
            for (ci, b) in c.iter().zip(&basis) {
                x = self.add(&x, &self.scale(b, &rat_big(ci)));
            }
            gens.push(self.restrict(sub, &x)?);
        }
        Ideal::from_elements(sub, &gens)
    }
}

/// A nonzero prime ideal with its ramification data over `Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeIdeal {
    pub ideal: Ideal,
    pub p: u64,
    pub e: u32,
    pub f: u32,
    inverse: Ideal,
}

/// Serialized prime: residue characteristic, `e`, `f`, and the ideal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeRecord {
    pub p: u64,
    pub e: u32,
    pub f: u32,
    pub ideal: IdealRecord,
}

impl PrimeIdeal {
    pub fn record(&self) -> PrimeRecord {
        PrimeRecord { p: self.p, e: self.e, f: self.f, ideal: self.ideal.record() }
    }

    pub fn from_record(k: &Field, r: &PrimeRecord) -> Result<Self> {
        let ideal = Ideal::from_record(k, &r.ideal)?;
        if ideal.norm() != rat_big(&BigInt::from(r.p).pow(r.f)) {
            return Err(Error::Input(format!("prime record above {} has the wrong norm", r.p)));
        }
        Ok(PrimeIdeal::new(k, ideal, r.p, r.e, r.f))
    }

    fn new(k: &Field, ideal: Ideal, p: u64, e: u32, f: u32) -> Self {
        let inverse = ideal.inverse(k);
        PrimeIdeal { ideal, p, e, f, inverse }
    }

    pub fn norm(&self) -> BigInt {
        BigInt::from(self.p).pow(self.f)
    }

    pub fn inverse(&self) -> &Ideal {
        &self.inverse
    }

    /// `ord_P(I)` for a fractional ideal.
    pub fn valuation(&self, k: &Field, i: &Ideal) -> i64 {
        let (j, den) = i.integral_multiple(k);
        let mut d = den;
        let mut shift = 0i64;
        let pb = BigInt::from(self.p);
        while d.is_multiple_of(&pb) {
            d /= &pb;
            shift += self.e as i64;
        }
        let mut v = 0i64;
        let mut cur = j;
        loop {
            let next = cur.mul(k, &self.inverse);
            if !next.is_integral() {
                break;
            }
            cur = next;
            v += 1;
        }
        v - shift
    }

    pub fn elem_valuation(&self, k: &Field, x: &Elem) -> Result<i64> {
        Ok(self.valuation(k, &Ideal::principal(k, x)?))
    }
}

fn modp(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p)).to_u64().unwrap()
}

/// Multiplies integral-coordinate vectors modulo `p`.
fn mul_mod(k: &Field, x: &[u64], y: &[u64], p: u64) -> Vec<u64> {
    let n = k.degree();
    let mut out = vec![0u128; n];
    for i in 0..n {
        if x[i] == 0 {
            continue;
        }
        for j in 0..n {
            if y[j] == 0 {
                continue;
            }
            let c = (x[i] as u128 * y[j] as u128) % p as u128;
            for (t, s) in k.structure_constants(i, j).iter().enumerate() {
                let s = modp(s, p) as u128;
                out[t] = (out[t] + c * s) % p as u128;
            }
        }
    }
    out.into_iter().map(|v| v as u64).collect()
}

fn pow_mod(k: &Field, x: &[u64], e: u64, p: u64) -> Vec<u64> {
    let n = k.degree();
    let mut acc = vec![0u64; n];
    acc[0] = 1 % p; // ω_0 = 1
    let mut b = x.to_vec();
    let mut m = e;
    while m > 0 {
        if m & 1 == 1 {
            acc = mul_mod(k, &acc, &b, p);
        }
        m >>= 1;
        if m > 0 {
            b = mul_mod(k, &b, &b, p);
        }
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    BigInt::from(a).modpow(&BigInt::from(p - 2), &BigInt::from(p)).to_u64().unwrap()
}

/// Reduced row echelon form over `F_p`; returns the nonzero rows.
fn rref_mod(rows: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let mut a: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    let cols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..a.len()).find(|&i| a[i][c] != 0) else { continue };
        a.swap(r, piv);
        let inv = inv_mod(a[r][c], p);
        for x in a[r].iter_mut() {
            *x = (*x as u128 * inv as u128 % p as u128) as u64;
        }
        for i in 0..a.len() {
            if i != r && a[i][c] != 0 {
                let f = a[i][c];
                for j in 0..cols {
                    let t = (a[r][j] as u128 * f as u128 % p as u128) as u64;
                    a[i][j] = (a[i][j] + p - t) % p;
                }
            }
        }
        r += 1;
    }
    a.truncate(r);
    a
}

/// Basis of `{x ∈ F_p^n : x·M ∈ span(w)}` where `M` is given by its rows.
fn preimage_mod(m_rows: &[Vec<u64>], w: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let n = m_rows.len();
    let cols = m_rows.first().map_or(0, |r| r.len());
    // kernel of [M; W] acting on row vectors (x, y) ↦ xM - yW
    let mut stacked: Vec<Vec<u64>> = Vec::new();
    for (i, r) in m_rows.iter().enumerate() {
        let mut row = r.clone();
        row.extend((0..n + w.len()).map(|j| u64::from(j == i)));
        stacked.push(row);
    }
    for (i, r) in w.iter().enumerate() {
        let mut row: Vec<u64> = r.iter().map(|x| (p - x % p) % p).collect();
        row.extend((0..n + w.len()).map(|j| u64::from(j == n + i)));
        stacked.push(row);
    }
    // row-reduce on the first `cols` columns; rows that vanish there give kernel vectors
    let total = cols + n + w.len();
    let mut a = stacked;
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..a.len()).find(|&i| a[i][c] != 0) else { continue };
        a.swap(r, piv);
        let inv = inv_mod(a[r][c], p);
        for x in a[r].iter_mut() {
            *x = (*x as u128 * inv as u128 % p as u128) as u64;
        }
        for i in 0..a.len() {
            if i != r && a[i][c] != 0 {
                let f = a[i][c];
                for j in 0..total {
                    let t = (a[r][j] as u128 * f as u128 % p as u128) as u64;
                    a[i][j] = (a[i][j] + p - t) % p;
                }
            }
        }
        r += 1;
    }
    let kernel: Vec<Vec<u64>> = a[r..].iter().map(|row| row[cols..cols + n].to_vec()).collect();
    rref_mod(&kernel, p)
}

fn in_span_mod(span: &[Vec<u64>], x: &[u64], p: u64) -> bool {
    let mut rows = span.to_vec();
    let before = rref_mod(&rows, p).len();
    rows.push(x.to_vec());
    rref_mod(&rows, p).len() == before
}

/// Integral ideal generated by `p` and lifts of the given residue vectors.
fn ideal_from_residues(k: &Field, p: u64, res: &[Vec<u64>]) -> Ideal {
    let n = k.degree();
    let mut rows: Vec<Vec<BigRational>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { rat_big(&BigInt::from(p)) } else { BigRational::zero() }).collect())
        .collect();
    let basis = k.integral_basis();
    for r in res {
        let x = k.from_int_coords(&r.iter().map(|&v| BigInt::from(v)).collect::<Vec<_>>());
        for w in &basis {
            rows.push(k.int_coords(&k.mul(&x, w)));
        }
    }
    Ideal::from_rational_rows(n, &rows).expect("contains p")
}

fn residues(i: &Ideal, p: u64) -> Vec<Vec<u64>> {
    rref_mod(&i.hnf().row_vecs().iter().map(|r| r.iter().map(|x| modp(x, p)).collect()).collect::<Vec<_>>(), p)
}

/// Splits a radical ideal `I ⊇ pO` into the primes containing it.
fn split_radical(k: &Field, i: Ideal, p: u64, out: &mut Vec<Ideal>) -> Result<()> {
    let n = k.degree();
    let w = residues(&i, p);
    // x ↦ x^p - x modulo I
    let frob_minus_id: Vec<Vec<u64>> = (0..n)
        .map(|j| {
            let mut e = vec![0u64; n];
            e[j] = 1;
            let mut y = pow_mod(k, &e, p, p);
            y[j] = (y[j] + p - 1) % p;
            y
        })
        .collect();
    let fixed = preimage_mod(&frob_minus_id, &w, p);
    let dim_quotient_fixed = fixed.len() - w.len();
    if dim_quotient_fixed == 1 {
        out.push(i);
        return Ok(());
    }
    let mut one = vec![0u64; n];
    one[0] = 1;
    let mut span = w.clone();
    span.push(one);
    let x = fixed
        .iter()
        .find(|v| !in_span_mod(&span, v, p))
        .ok_or_else(|| Error::Inconsistent("no separating idempotent".into()))?
        .clone();
    let xe = k.from_int_coords(&x.iter().map(|&v| BigInt::from(v)).collect::<Vec<_>>());
    let cp = k.char_poly(&xe);
    let cp: Vec<u64> = cp.iter().map(|c| modp(&c.to_integer(), p)).collect();
    let mut pieces = 0;
    for c in 0..p {
        let val = cp.iter().rev().fold(0u128, |acc, &a| (acc * c as u128 + a as u128) % p as u128);
        if val != 0 {
            continue;
        }
        let mut shifted = x.clone();
        shifted[0] = (shifted[0] + p - c) % p;
        let mut gens = w.clone();
        gens.push(shifted);
        let j = ideal_from_residues(k, p, &gens);
        if j.norm_int() > i.norm_int() || j != i {
            if j.norm_int().is_one() {
                continue;
            }
            pieces += 1;
            split_radical(k, j, p, out)?;
        }
    }
    if pieces < 2 {
        return Err(Error::Inconsistent(format!("splitting above {p} did not separate primes")));
    }
    Ok(())
}

/// Primes of `O_K` above the rational prime `p`, sorted canonically.
pub fn primes_above(k: &Field, p: u64) -> Result<Vec<PrimeIdeal>> {
    if !super::is_prime(p) {
        return Err(Error::Input(format!("{p} is not prime")));
    }
    if let Some(v) = k.cached_primes(p) {
        return Ok(v);
    }
    let v = decompose(k, p)?;
    k.store_primes(p, &v);
    Ok(v)
}

fn decompose(k: &Field, p: u64) -> Result<Vec<PrimeIdeal>> {
    let n = k.degree();
    if n == 1 {
        let ideal = Ideal::principal(k, &k.from_int(p as i64))?;
        return Ok(vec![PrimeIdeal::new(k, ideal, p, 1, 1)]);
    }
    let mut pk = 1u64;
    let mut kk = 0u32;
    while pk < n as u64 {
        pk *= p;
        kk += 1;
    }
    // radical of pO: kernel of x ↦ x^(p^kk)
    let frob_k: Vec<Vec<u64>> = (0..n)
        .map(|j| {
            let mut e = vec![0u64; n];
            e[j] = 1;
            let mut y = e;
            for _ in 0..kk {
                y = pow_mod(k, &y, p, p);
            }
            y
        })
        .collect();
    let rad = preimage_mod(&frob_k, &[], p);
    let rad_ideal = ideal_from_residues(k, p, &rad);
    let mut found = Vec::new();
    split_radical(k, rad_ideal, p, &mut found)?;
    let g = found.len() as u32;
    let mut primes: Vec<PrimeIdeal> = found
        .into_iter()
        .map(|ideal| {
            let nn = ideal.norm_int();
            let mut f = 0u32;
            let mut m = nn;
            while m > BigInt::one() {
                m /= p;
                f += 1;
            }
            let e = n as u32 / (f * g);
            PrimeIdeal::new(k, ideal, p, e, f)
        })
        .collect();
    primes.sort_by(|a, b| a.ideal.hnf_cmp(&b.ideal));
    Ok(primes)
}

/// Factorization of a fractional ideal as `(prime, exponent)` pairs.
pub fn factor(k: &Field, i: &Ideal) -> Result<Vec<(PrimeIdeal, i64)>> {
    let nm = i.norm();
    let mut ps: Vec<BigInt> = super::prime_factors(nm.numer());
    ps.extend(super::prime_factors(nm.denom()));
    // primes dividing the denominator may cancel in the norm
    ps.extend(super::prime_factors(i.denominator()));
    ps.sort();
    ps.dedup();
    let mut out = Vec::new();
    for p in ps {
        let p = p.to_u64().ok_or_else(|| Error::Unsupported("prime too large".into()))?;
        for pr in primes_above(k, p)? {
            let v = pr.valuation(k, i);
            if v != 0 {
                out.push((pr, v));
            }
        }
    }
    Ok(out)
}
