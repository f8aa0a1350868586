//! Arithmetic in `Q`, quadratic fields and biquadratic fields.
//!
//! A field `Q(√g_1, ..., √g_k)` (k ≤ 2) is stored with its power basis
//! `e_T = ∏_{i∈T} √g_i` indexed by bit masks `T`. Elements are rational
//! coordinate vectors in that basis. The Galois group is `(Z/2)^k`, with the
//! element `m` flipping the sign of `√g_i` for each bit `i` set in `m`.

pub mod classgroup;
pub mod enumerate;
pub mod forms;
pub mod hilbert;
pub mod ideal;
pub mod places;
pub mod units;

use std::fmt;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::abelian::{hnf, IntMatrix};
use crate::error::{Error, Result};
use crate::gmodule::FiniteGroup;

pub use classgroup::{ClassGroup, ClassGroupRecord, SClassGroup};
pub use ideal::{Ideal, IdealRecord, PrimeIdeal, PrimeRecord};
pub use units::{SUnitGroup, UnitGroup, UnitGroupRecord};

/// Serialized description of a field: `"Q"`, `{"quadratic": d}` or `{"biquadratic": [a, b]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldSpec {
    #[serde(rename = "Q")]
    Rational,
    Quadratic(i64),
    Biquadratic([i64; 2]),
}

impl FieldSpec {
    pub fn build(&self) -> Result<Field> {
        match self {
            FieldSpec::Rational => Ok(Field::rational()),
            FieldSpec::Quadratic(d) => Field::quadratic(*d),
            FieldSpec::Biquadratic([a, b]) => Field::biquadratic(*a, *b),
        }
    }
}

/// A field element as power-basis coordinates.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Elem(pub Vec<BigRational>);

impl Elem {
    pub fn coords(&self) -> &[BigRational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    /// Power-basis coordinates as `"p/q"` strings.
    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(|c| c.to_string()).collect()
    }

    pub fn from_strings(v: &[String]) -> Result<Self> {
        v.iter()
            .map(|c| c.parse::<BigRational>().map_err(|_| Error::Input(format!("bad rational {c:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(Elem)
    }

    /// The rational value, if the element lies in `Q`.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.0[1..].iter().all(|c| c.is_zero()) {
            Some(self.0[0].clone())
        } else {
            None
        }
    }
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_big(n: &BigInt) -> BigRational {
    BigRational::from_integer(n.clone())
}

/// Largest square dividing `n` removed; sign kept.
pub fn squarefree_part(n: &BigInt) -> BigInt {
    let mut m = n.abs();
    let mut out = BigInt::one();
    let mut p = BigInt::from(2);
    while &p * &p <= m {
        let mut k = 0;
        while m.is_multiple_of(&p) {
            m /= &p;
            k += 1;
        }
        if k % 2 == 1 {
            out *= &p;
        }
        p += 1;
    }
    out *= m;
    if n.is_negative() {
        -out
    } else {
        out
    }
}

pub fn is_squarefree(n: i64) -> bool {
    if n == 0 {
        return false;
    }
    let m = n.unsigned_abs();
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p * p) {
            return false;
        }
        p += 1;
    }
    true
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return false;
        }
        p += 1;
    }
    true
}

/// Distinct prime factors of a nonzero integer.
pub fn prime_factors(n: &BigInt) -> Vec<BigInt> {
    let mut m = n.abs();
    let mut out = Vec::new();
    let mut p = BigInt::from(2);
    while &p * &p <= m {
        if m.is_multiple_of(&p) {
            out.push(p.clone());
            while m.is_multiple_of(&p) {
                m /= &p;
            }
        }
        p += 1;
    }
    if m > BigInt::one() {
        out.push(m);
    }
    out
}

/// Discriminant of `Q(√d)`.
pub fn quadratic_discriminant(d: i64) -> i64 {
    if d.rem_euclid(4) == 1 {
        d
    } else {
        4 * d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Rational,
    Quadratic,
    Biquadratic,
}

/// A multiquadratic number field of degree at most 4.
#[derive(Clone)]
pub struct Field {
    gens: Vec<i64>,
    /// `gen_products[T] = ∏_{i∈T} g_i`.
    gen_products: Vec<BigInt>,
    /// Row `i`: power-basis coordinates of the integral basis element `ω_i`.
    basis: Vec<Vec<BigRational>>,
    basis_inv: Vec<Vec<BigRational>>,
    /// `mult[i][j]`: integral coordinates of `ω_i ω_j`.
    mult: Vec<Vec<Vec<BigInt>>>,
    disc: BigInt,
    units: Arc<OnceLock<std::result::Result<UnitGroup, String>>>,
    class_group: Arc<OnceLock<std::result::Result<ClassGroup, String>>>,
    primes: Arc<Mutex<HashMap<u64, Vec<PrimeIdeal>>>>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.gens == other.gens
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

fn rat_matrix_inverse(m: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !a[i][c].is_zero())?;
        a.swap(c, p);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..2 * n {
                    let t = &a[c][j] * &f;
                    a[i][j] -= t;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn rat_det(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return BigRational::zero();
        };
        if p != c {
            a.swap(c, p);
            det = -det;
        }
        det *= &a[c][c];
        for i in c + 1..n {
            if !a[i][c].is_zero() {
                let f = &a[i][c] / &a[c][c];
                for j in c..n {
                    let t = &a[c][j] * &f;
                    a[i][j] -= t;
                }
            }
        }
    }
    det
}

fn lcm_denominators(rows: &[Vec<BigRational>]) -> BigInt {
    rows.iter().flatten().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Z-basis (rows, power coordinates) of the lattice spanned by `rows`, ordered so
/// that `ω_i` only involves `e_0 .. e_i` and `ω_0 = 1` whenever `1` is primitive.
fn triangular_basis(rows: &[Vec<BigRational>], n: usize) -> Vec<Vec<BigRational>> {
    let den = lcm_denominators(rows);
    // reverse columns so the HNF pivots on the highest power-basis index first
    let ints: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().rev().map(|x| (x * rat_big(&den)).to_integer()).collect())
        .collect();
    let (h, _) = hnf(&IntMatrix::from_rows(&ints, n));
    let mut out: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            h.row(i)
                .iter()
                .rev()
                .map(|x| BigRational::new(x.clone(), den.clone()))
                .collect()
        })
        .collect();
    out.reverse();
    out
}

impl Field {
    pub fn rational() -> Self {
        Self::build(vec![]).expect("Q")
    }

    /// `Q(√d)` for squarefree `d ∉ {0, 1}`.
    pub fn quadratic(d: i64) -> Result<Self> {
        if d == 1 || !is_squarefree(d) {
            return Err(Error::Input(format!("d must be squarefree and different from 1, got {d}")));
        }
        Self::build(vec![d])
    }

    /// `Q(√a, √b)` for distinct squarefree `a, b ∉ {0, 1}`.
    pub fn biquadratic(a: i64, b: i64) -> Result<Self> {
        for d in [a, b] {
            if d == 1 || !is_squarefree(d) {
                return Err(Error::Input(format!("d must be squarefree and different from 1, got {d}")));
            }
        }
        if a == b {
            return Err(Error::Input("biquadratic field needs two distinct radicands".into()));
        }
        Self::build(vec![a, b])
    }

    /// Parses `Q`, `d`, or `a,b`.
    pub fn from_radicands(r: &[i64]) -> Result<Self> {
        match r {
            [] => Ok(Self::rational()),
            [d] => Self::quadratic(*d),
            [a, b] => Self::biquadratic(*a, *b),
            _ => Err(Error::Unsupported("fields of degree above 4".into())),
        }
    }

    fn build(gens: Vec<i64>) -> Result<Self> {
        let k = gens.len();
        let n = 1usize << k;
        let gen_products: Vec<BigInt> = (0..n)
            .map(|t| (0..k).filter(|i| t >> i & 1 == 1).map(|i| BigInt::from(gens[i])).product())
            .collect();
        let mut field = Field {
            gens,
            gen_products,
            basis: vec![],
            basis_inv: vec![],
            mult: vec![],
            disc: BigInt::zero(),
            units: Arc::new(OnceLock::new()),
            class_group: Arc::new(OnceLock::new()),
            primes: Arc::new(Mutex::new(HashMap::new())),
        };
        let (basis, target) = field.find_integral_basis()?;
        field.set_basis(basis)?;
        if field.disc != target {
            return Err(Error::Inconsistent(format!(
                "integral basis discriminant {} differs from expected {}",
                field.disc, target
            )));
        }
        Ok(field)
    }

    fn unit_vec(&self, t: usize, c: BigRational) -> Elem {
        let mut v = vec![BigRational::zero(); self.degree()];
        v[t] = c;
        Elem(v)
    }

    /// Basis of the maximal order together with the expected discriminant.
    fn find_integral_basis(&self) -> Result<(Vec<Vec<BigRational>>, BigInt)> {
        let n = self.degree();
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let quad = |d: i64, t: usize| -> Vec<Elem> {
            let one = self.one();
            let s = self.unit_vec(t, BigRational::one());
            if d.rem_euclid(4) == 1 {
                vec![one.clone(), self.scale(&self.add(&one, &s), &half)]
            } else {
                vec![one, s]
            }
        };
        match self.gens.as_slice() {
            [] => Ok((vec![vec![BigRational::one()]], BigInt::one())),
            [d] => {
                let b = quad(*d, 1).into_iter().map(|e| e.0).collect();
                Ok((b, BigInt::from(quadratic_discriminant(*d))))
            }
            [a, b] => {
                let g = a.gcd(b);
                let c = a / g * (b / g);
                let target = BigInt::from(quadratic_discriminant(*a))
                    * quadratic_discriminant(*b)
                    * quadratic_discriminant(c);
                let qa = quad(*a, 1);
                let qb = quad(*b, 2);
                // √c = √a√b / g
                let sc = self.unit_vec(3, BigRational::new(BigInt::one(), BigInt::from(g)));
                let qc = if c.rem_euclid(4) == 1 {
                    self.scale(&self.add(&self.one(), &sc), &half)
                } else {
                    sc
                };
                let mut gens: Vec<Vec<BigRational>> = Vec::new();
                for x in &qa {
                    for y in &qb {
                        gens.push(self.mul(x, y).0);
                    }
                }
                gens.push(qc.0);
                let mut basis = triangular_basis(&gens, n);
                loop {
                    if self.trace_form_det(&basis) == rat_big(&target) {
                        return Ok((basis, target));
                    }
                    let mut grown = false;
                    for mask in 1u32..(1 << n) {
                        let mut x = self.zero();
                        for (i, b) in basis.iter().enumerate() {
                            if mask >> i & 1 == 1 {
                                x = self.add(&x, &Elem(b.clone()));
                            }
                        }
                        let x = self.scale(&x, &half);
                        if self.is_algebraic_integer(&x) {
                            let mut rows = basis.clone();
                            rows.push(x.0);
                            basis = triangular_basis(&rows, n);
                            grown = true;
                            break;
                        }
                    }
                    if !grown {
                        return Err(Error::Inconsistent("integral basis saturation stalled".into()));
                    }
                }
            }
            _ => Err(Error::Unsupported("degree above 4".into())),
        }
    }

    fn trace_form_det(&self, basis: &[Vec<BigRational>]) -> BigRational {
        let els: Vec<Elem> = basis.iter().map(|r| Elem(r.clone())).collect();
        let m: Vec<Vec<BigRational>> =
            els.iter().map(|x| els.iter().map(|y| self.trace(&self.mul(x, y))).collect()).collect();
        rat_det(&m)
    }

    fn set_basis(&mut self, basis: Vec<Vec<BigRational>>) -> Result<()> {
        let n = self.degree();
        let inv = rat_matrix_inverse(&basis).ok_or_else(|| Error::Inconsistent("singular integral basis".into()))?;
        self.basis_inv = inv;
        self.basis = basis;
        let els: Vec<Elem> = self.basis.iter().map(|r| Elem(r.clone())).collect();
        let mut mult = vec![vec![vec![]; n]; n];
        for i in 0..n {
            for j in 0..n {
                let c = self.int_coords(&self.mul(&els[i], &els[j]));
                if c.iter().any(|x| !x.is_integer()) {
                    return Err(Error::Inconsistent("integral basis is not closed under products".into()));
                }
                mult[i][j] = c.into_iter().map(|x| x.to_integer()).collect();
            }
        }
        self.mult = mult;
        self.disc = self.trace_form_det(&self.basis).to_integer();
        Ok(())
    }

    pub fn spec(&self) -> FieldSpec {
        match self.gens.as_slice() {
            [] => FieldSpec::Rational,
            [d] => FieldSpec::Quadratic(*d),
            [a, b] => FieldSpec::Biquadratic([*a, *b]),
            _ => unreachable!("degree at most 4"),
        }
    }

    pub fn gens(&self) -> &[i64] {
        &self.gens
    }

    pub fn kind(&self) -> FieldKind {
        match self.gens.len() {
            0 => FieldKind::Rational,
            1 => FieldKind::Quadratic,
            _ => FieldKind::Biquadratic,
        }
    }

    pub fn degree(&self) -> usize {
        1 << self.gens.len()
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.disc
    }

    pub fn name(&self) -> String {
        match self.gens.as_slice() {
            [] => "Q".to_string(),
            [d] => format!("Q(sqrt({d}))"),
            [a, b] => format!("Q(sqrt({a}),sqrt({b}))"),
            _ => unreachable!(),
        }
    }

    /// Stable identifier for caching.
    pub fn key(&self) -> String {
        match self.gens.as_slice() {
            [] => "Q".to_string(),
            g => g.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
        }
    }

    /// `(r1, r2)`.
    pub fn signature(&self) -> (usize, usize) {
        if self.gens.iter().all(|&g| g > 0) {
            (self.degree(), 0)
        } else {
            (0, self.degree() / 2)
        }
    }

    pub fn is_totally_real(&self) -> bool {
        self.signature().1 == 0
    }

    pub fn is_totally_imaginary(&self) -> bool {
        self.signature().0 == 0
    }

    /// Rank of the unit group.
    pub fn unit_rank(&self) -> usize {
        let (r1, r2) = self.signature();
        r1 + r2 - 1
    }

    pub fn minkowski_bound(&self) -> f64 {
        let n = self.degree();
        let (_, r2) = self.signature();
        let mut f = 1.0f64;
        for k in 1..=n {
            f *= k as f64 / n as f64;
        }
        f * (4.0 / std::f64::consts::PI).powi(r2 as i32) * self.disc.to_f64().unwrap().abs().sqrt()
    }

    pub fn galois_group(&self) -> FiniteGroup {
        match self.gens.len() {
            0 => FiniteGroup::trivial(),
            1 => FiniteGroup::cyclic(2),
            _ => FiniteGroup::klein(),
        }
    }

    /// Galois element restricting to complex conjugation (0 for real fields).
    pub fn complex_conjugation(&self) -> usize {
        (0..self.gens.len()).filter(|&i| self.gens[i] < 0).fold(0, |m, i| m | 1 << i)
    }

    pub fn zero(&self) -> Elem {
        Elem(vec![BigRational::zero(); self.degree()])
    }

    pub fn one(&self) -> Elem {
        self.from_rational(BigRational::one())
    }

    pub fn from_rational(&self, q: BigRational) -> Elem {
        self.unit_vec(0, q)
    }

    pub fn from_int(&self, n: i64) -> Elem {
        self.from_rational(rat(n))
    }

    /// `e_T = ∏_{i∈T} √g_i`.
    pub fn power_basis(&self, t: usize) -> Elem {
        self.unit_vec(t, BigRational::one())
    }

    /// `a + b·e_t` with integer `a`, `b`.
    pub fn elem(&self, coords: &[i64]) -> Elem {
        assert_eq!(coords.len(), self.degree());
        Elem(coords.iter().map(|&c| rat(c)).collect())
    }

    pub fn add(&self, x: &Elem, y: &Elem) -> Elem {
        Elem(x.0.iter().zip(&y.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, x: &Elem, y: &Elem) -> Elem {
        Elem(x.0.iter().zip(&y.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self, x: &Elem) -> Elem {
        Elem(x.0.iter().map(|a| -a).collect())
    }

    pub fn scale(&self, x: &Elem, q: &BigRational) -> Elem {
        Elem(x.0.iter().map(|a| a * q).collect())
    }

    pub fn mul(&self, x: &Elem, y: &Elem) -> Elem {
        let n = self.degree();
        let mut out = vec![BigRational::zero(); n];
        for s in 0..n {
            if x.0[s].is_zero() {
                continue;
            }
            for t in 0..n {
                if y.0[t].is_zero() {
                    continue;
                }
                let c = &x.0[s] * &y.0[t] * rat_big(&self.gen_products[s & t]);
                out[s ^ t] += c;
            }
        }
        Elem(out)
    }

    /// Image under the Galois element `mask`.
    pub fn conj(&self, x: &Elem, mask: usize) -> Elem {
        Elem(
            x.0.iter()
                .enumerate()
                .map(|(t, c)| if (t & mask).count_ones() % 2 == 1 { -c } else { c.clone() })
                .collect(),
        )
    }

    /// Product of `σ(x)` over Galois elements `σ ≠ 1`.
    pub fn conj_product(&self, x: &Elem) -> Elem {
        (1..self.degree()).fold(self.one(), |acc, m| self.mul(&acc, &self.conj(x, m)))
    }

    pub fn norm(&self, x: &Elem) -> BigRational {
        self.mul(x, &self.conj_product(x)).0[0].clone()
    }

    pub fn trace(&self, x: &Elem) -> BigRational {
        &x.0[0] * rat(self.degree() as i64)
    }

    pub fn inv(&self, x: &Elem) -> Result<Elem> {
        let n = self.norm(x);
        if n.is_zero() {
            return Err(Error::Input("inverse of zero".into()));
        }
        Ok(self.scale(&self.conj_product(x), &n.recip()))
    }

    pub fn div(&self, x: &Elem, y: &Elem) -> Result<Elem> {
        Ok(self.mul(x, &self.inv(y)?))
    }

    pub fn pow(&self, x: &Elem, k: &BigInt) -> Result<Elem> {
        let base = if k.is_negative() { self.inv(x)? } else { x.clone() };
        let mut e = k.abs();
        let mut acc = self.one();
        let mut b = base;
        while !e.is_zero() {
            if e.is_odd() {
                acc = self.mul(&acc, &b);
            }
            e >>= 1;
            if !e.is_zero() {
                b = self.mul(&b, &b);
            }
        }
        Ok(acc)
    }

    /// `T2(x) = Σ_σ |σ(x)|²`, diagonal in the power basis.
    pub fn t2(&self, x: &Elem) -> BigRational {
        let n = rat(self.degree() as i64);
        x.0.iter()
            .enumerate()
            .map(|(t, c)| c * c * rat_big(&self.gen_products[t].abs()))
            .fold(BigRational::zero(), |a, b| a + b)
            * n
    }

    /// Weights `n·|g_T|` of the T2 form in the power basis.
    pub fn t2_weights(&self) -> Vec<BigInt> {
        let n = BigInt::from(self.degree());
        self.gen_products.iter().map(|g| g.abs() * &n).collect()
    }

    /// Coordinates in the integral basis.
    pub fn int_coords(&self, x: &Elem) -> Vec<BigRational> {
        let n = self.degree();
        (0..n)
            .map(|j| (0..n).fold(BigRational::zero(), |acc, i| acc + &x.0[i] * &self.basis_inv[i][j]))
            .collect()
    }

    /// Integer coordinates in the integral basis, for integral elements.
    pub fn int_coords_z(&self, x: &Elem) -> Option<Vec<BigInt>> {
        let c = self.int_coords(x);
        if c.iter().all(|q| q.is_integer()) {
            Some(c.into_iter().map(|q| q.to_integer()).collect())
        } else {
            None
        }
    }

    pub fn from_int_coords(&self, c: &[BigInt]) -> Elem {
        let n = self.degree();
        Elem(
            (0..n)
                .map(|j| {
                    (0..n).fold(BigRational::zero(), |acc, i| {
                        if c[i].is_zero() {
                            acc
                        } else {
                            acc + rat_big(&c[i]) * &self.basis[i][j]
                        }
                    })
                })
                .collect(),
        )
    }

    pub fn integral_basis(&self) -> Vec<Elem> {
        self.basis.iter().map(|r| Elem(r.clone())).collect()
    }

    pub fn basis_matrix(&self) -> &[Vec<BigRational>] {
        &self.basis
    }

    /// Integral coordinates of `ω_i ω_j`.
    pub fn structure_constants(&self, i: usize, j: usize) -> &[BigInt] {
        &self.mult[i][j]
    }

    pub fn is_integral(&self, x: &Elem) -> bool {
        self.int_coords(x).iter().all(|q| q.is_integer())
    }

    /// Characteristic polynomial of multiplication by `x` (monic, low degree first).
    pub fn char_poly(&self, x: &Elem) -> Vec<BigRational> {
        let n = self.degree();
        // matrix of multiplication in the power basis, Faddeev–LeVerrier
        let cols: Vec<Vec<BigRational>> = (0..n).map(|t| self.mul(x, &self.power_basis(t)).0).collect();
        let a: Vec<Vec<BigRational>> = (0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect();
        let matmul = |p: &Vec<Vec<BigRational>>, q: &Vec<Vec<BigRational>>| -> Vec<Vec<BigRational>> {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (0..n).fold(BigRational::zero(), |acc, k| acc + &p[i][k] * &q[k][j]))
                        .collect()
                })
                .collect()
        };
        let mut coeffs = vec![BigRational::zero(); n + 1];
        coeffs[n] = BigRational::one();
        let mut m: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); n]; n];
        for k in 1..=n {
            let mut next = matmul(&a, &m);
            for (i, row) in next.iter_mut().enumerate() {
                row[i] += &coeffs[n - k + 1];
            }
            m = next;
            let am = matmul(&a, &m);
            let tr = (0..n).fold(BigRational::zero(), |acc, i| acc + &am[i][i]);
            coeffs[n - k] = -tr / rat(k as i64);
        }
        coeffs
    }

    pub fn is_algebraic_integer(&self, x: &Elem) -> bool {
        self.char_poly(x).iter().all(|c| c.is_integer())
    }

    /// Complex embeddings; embedding `s` sends `√g_i ↦ -√g_i` for bits set in `s`.
    pub fn embeddings(&self, x: &Elem) -> Vec<Complex64> {
        let n = self.degree();
        let roots: Vec<Complex64> = self
            .gens
            .iter()
            .map(|&g| {
                if g > 0 {
                    Complex64::new((g as f64).sqrt(), 0.0)
                } else {
                    Complex64::new(0.0, (-g as f64).sqrt())
                }
            })
            .collect();
        (0..n)
            .map(|s| {
                let mut z = Complex64::new(0.0, 0.0);
                for (t, c) in x.0.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let mut b = Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0);
                    for (i, r) in roots.iter().enumerate() {
                        if t >> i & 1 == 1 {
                            b *= if s >> i & 1 == 1 { -r } else { *r };
                        }
                    }
                    z += b;
                }
                z
            })
            .collect()
    }

    /// Approximate inverse of [`Field::embeddings`], rounded to denominators dividing `den`.
    pub fn from_embeddings(&self, z: &[Complex64], den: i64) -> Elem {
        let n = self.degree();
        Elem(
            (0..n)
                .map(|t| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (s, zs) in z.iter().enumerate() {
                        let sign = if (s & t).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                        acc += zs * sign;
                    }
                    let mut root = Complex64::new(1.0, 0.0);
                    for (i, &g) in self.gens.iter().enumerate() {
                        if t >> i & 1 == 1 {
                            root *= if g > 0 {
                                Complex64::new((g as f64).sqrt(), 0.0)
                            } else {
                                Complex64::new(0.0, (-g as f64).sqrt())
                            };
                        }
                    }
                    let v = (acc / (root * n as f64)).re * den as f64;
                    BigRational::new(BigInt::from(v.round() as i64), BigInt::from(den))
                })
                .collect(),
        )
    }

    /// Galois elements fixing the subfield generated by `√` of the given radicand.
    pub fn fixing_masks(&self, sub: &Field) -> Result<Vec<usize>> {
        let e = self.embedding_of(sub)?;
        Ok((0..self.degree()).filter(|&m| e.iter().all(|(t, _)| (t & m).count_ones() % 2 == 0)).collect())
    }

    /// For each generator of `sub`, the power-basis index `T` and scale `q` with `√g = q·e_T`.
    fn embedding_of(&self, sub: &Field) -> Result<Vec<(usize, BigRational)>> {
        let mut out = Vec::new();
        for &g in &sub.gens {
            let mut found = None;
            for t in 1..self.degree() {
                let p = &self.gen_products[t];
                // √g = q e_T  ⇔  g = q² p
                let ratio = BigRational::new(BigInt::from(g), p.clone());
                if ratio.is_positive() {
                    let (nu, de) = (ratio.numer().clone(), ratio.denom().clone());
                    let (sn, sd) = (nu.sqrt(), de.sqrt());
                    if &sn * &sn == nu && &sd * &sd == de {
                        found = Some((t, BigRational::new(sn, sd)));
                        break;
                    }
                }
            }
            match found {
                Some(f) => out.push(f),
                None => return Err(Error::Unsupported(format!("{} is not a subfield of {}", sub.name(), self.name()))),
            }
        }
        Ok(out)
    }

    /// Embeds an element of the subfield `sub`.
    pub fn embed(&self, sub: &Field, x: &Elem) -> Result<Elem> {
        let e = self.embedding_of(sub)?;
        let mut out = self.zero();
        for (s, c) in x.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut term = self.from_rational(c.clone());
            for (i, (t, q)) in e.iter().enumerate() {
                if s >> i & 1 == 1 {
                    term = self.mul(&term, &self.scale(&self.power_basis(*t), q));
                }
            }
            out = self.add(&out, &term);
        }
        Ok(out)
    }

    /// Inverse of [`Field::embed`] for elements lying in `sub`.
    pub fn restrict(&self, sub: &Field, x: &Elem) -> Result<Elem> {
        let mut out = sub.zero();
        let mut used = vec![false; self.degree()];
        for s in 0..sub.degree() {
            // each monomial of `sub` embeds as a multiple of a single e_T
            let image = self.embed(sub, &sub.power_basis(s))?;
            let (t, c) = image.0.iter().enumerate().find(|(_, c)| !c.is_zero()).expect("nonzero monomial");
            used[t] = true;
            out.0[s] = &x.0[t] / c;
        }
        if x.0.iter().enumerate().any(|(t, c)| !used[t] && !c.is_zero()) {
            return Err(Error::Input("element does not lie in the subfield".into()));
        }
        Ok(out)
    }

    /// Real quadratic subfield of a totally imaginary biquadratic field.
    pub fn real_quadratic_subfield(&self) -> Option<Field> {
        if let [a, b] = self.gens.as_slice() {
            let g = a.gcd(b);
            let c = a / g * (b / g);
            [*a, *b, c].into_iter().find(|&d| d > 1).and_then(|d| Field::quadratic(d).ok())
        } else {
            None
        }
    }

    /// The three quadratic subfields of a biquadratic field.
    pub fn quadratic_subfields(&self) -> Vec<Field> {
        if let [a, b] = self.gens.as_slice() {
            let g = a.gcd(b);
            let c = a / g * (b / g);
            [*a, *b, c].into_iter().filter_map(|d| Field::quadratic(d).ok()).collect()
        } else {
            vec![]
        }
    }

    /// Units of the field (torsion and a fundamental unit), computed once.
    pub fn units(&self) -> Result<&UnitGroup> {
        self.units
            .get_or_init(|| UnitGroup::compute(self).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Inconsistent(e.clone()))
    }

    /// Class group, computed once with the default budget.
    pub fn class_group(&self) -> Result<&ClassGroup> {
        self.class_group
            .get_or_init(|| ClassGroup::compute(self, enumerate::DEFAULT_BUDGET).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Inconsistent(e.clone()))
    }

    /// Installs a precomputed class group; returns false if one was already present.
    pub fn seed_class_group(&self, cg: ClassGroup) -> bool {
        self.class_group.set(Ok(cg)).is_ok()
    }

    /// Installs a precomputed unit group; returns false if one was already present.
    pub fn seed_units(&self, u: UnitGroup) -> bool {
        self.units.set(Ok(u)).is_ok()
    }

    /// Memoized prime decomposition of `p`.
    pub(crate) fn cached_primes(&self, p: u64) -> Option<Vec<PrimeIdeal>> {
        self.primes.lock().expect("prime cache").get(&p).cloned()
    }

    pub(crate) fn store_primes(&self, p: u64, v: &[PrimeIdeal]) {
        self.primes.lock().expect("prime cache").insert(p, v.to_vec());
    }

    /// Human-readable element.
    pub fn format(&self, x: &Elem) -> String {
        let names: Vec<String> = (0..self.degree())
            .map(|t| {
                (0..self.gens.len())
                    .filter(|i| t >> i & 1 == 1)
                    .map(|i| format!("sqrt({})", self.gens[i]))
                    .collect::<Vec<_>>()
                    .join("*")
            })
            .collect();
        let mut parts = Vec::new();
        for (t, c) in x.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if t == 0 {
                parts.push(c.to_string());
            } else if c.is_one() {
                parts.push(names[t].clone());
            } else if (-c).is_one() {
                parts.push(format!("-{}", names[t]));
            } else {
                parts.push(format!("{}*{}", c, names[t]));
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ").replace("+ -", "- ")
        }
    }
}
