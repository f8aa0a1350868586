//! Positive definite binary quadratic forms: reduction, composition, and the form
//! class group of a negative discriminant. Used as an independent oracle for
//! imaginary quadratic class groups.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::abelian::FgAbGroup;
use crate::error::{Error, Result};

/// The form `a x² + b xy + c y²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Form {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Form {
    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        self.b.abs() <= self.a && self.a <= self.c && !((self.b.abs() == self.a || self.a == self.c) && self.b < 0)
    }

    /// The equivalent reduced form.
    pub fn reduce(self) -> Form {
        let Form { mut a, mut b, mut c } = self;
        loop {
            // normalize b into (-a, a]
            if b <= -a || b > a {
                let two_a = 2 * a;
                let r = Integer::div_floor(&(a - b), &two_a);
                let b2 = b + two_a * r;
                c = (b2 * b2 - (b * b - 4 * a * c)) / (4 * a);
                b = b2;
            }
            if a > c {
                std::mem::swap(&mut a, &mut c);
                b = -b;
                continue;
            }
            if a == c && b < 0 {
                b = -b;
            }
            return Form { a, b, c };
        }
    }

    pub fn identity(d: i64) -> Form {
        let b = if d.rem_euclid(4) == 0 { 0 } else { 1 };
        Form { a: 1, b, c: (b * b - d) / 4 }
    }

    pub fn inverse(&self) -> Form {
        Form { a: self.a, b: -self.b, c: self.c }.reduce()
    }

    /// Dirichlet composition followed by reduction.
    pub fn compose(&self, other: &Form) -> Form {
        let d = self.discriminant();
        let (f1, f2) = if self.a > other.a { (other, self) } else { (self, other) };
        let (a1, b1) = (f1.a, f1.b);
        let (a2, b2, c2) = (f2.a, f2.b, f2.c);
        let s = (b1 + b2) / 2;
        let n = b2 - s;
        let (y1, dd) = if a2 % a1 == 0 {
            (0, a1)
        } else {
            let e = BigInt::from(a2).extended_gcd(&BigInt::from(a1));
            (i64::try_from(e.x).unwrap(), i64::try_from(e.gcd).unwrap())
        };
        let (x2, y2, d1) = if s % dd == 0 {
            (0, -1, dd)
        } else {
            let e = BigInt::from(s).extended_gcd(&BigInt::from(dd));
            (i64::try_from(e.x).unwrap(), -i64::try_from(e.y).unwrap(), i64::try_from(e.gcd).unwrap())
        };
        let v1 = a1 / d1;
        let v2 = a2 / d1;
        let r = (y1 as i128 * y2 as i128 * n as i128 - x2 as i128 * c2 as i128).rem_euclid(v1 as i128) as i64;
        let b3 = b2 + 2 * v2 * r;
        let a3 = v1 * v2;
        let c3 = (b3 * b3 - d) / (4 * a3);
        Form { a: a3, b: b3, c: c3 }.reduce()
    }

    pub fn pow(&self, mut k: u64) -> Form {
        let mut acc = Form::identity(self.discriminant());
        let mut base = *self;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            k >>= 1;
        }
        acc
    }
}

fn is_fundamental(d: i64) -> bool {
    if d >= 0 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => super::is_squarefree(d),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && super::is_squarefree(m)
        }
        _ => false,
    }
}

/// Negative fundamental discriminants `D` with `|D| ≤ bound`, in decreasing order.
pub fn fundamental_discriminants(bound: i64) -> Vec<i64> {
    (3..=bound).map(|x| -x).filter(|&d| is_fundamental(d)).collect()
}

/// All primitive reduced forms of discriminant `d < 0`, sorted.
pub fn reduced_forms(d: i64) -> Result<Vec<Form>> {
    if d >= 0 || !matches!(d.rem_euclid(4), 0 | 1) {
        return Err(Error::Input(format!("{d} is not a negative discriminant")));
    }
    let mut out = Vec::new();
    let mut a = 1;
    // reduced forms have a ≤ sqrt(|d|/3)
    while 3 * a * a <= -d {
        for b in -a + 1..=a {
            if (b * b - d) % (4 * a) != 0 {
                continue;
            }
            let c = (b * b - d) / (4 * a);
            let f = Form { a, b, c };
            if f.is_reduced() && a.gcd(&b).gcd(&c) == 1 {
                out.push(f);
            }
        }
        a += 1;
    }
    out.sort();
    Ok(out)
}

/// Number of primitive reduced forms of discriminant `d`.
pub fn class_number(d: i64) -> Result<usize> {
    Ok(reduced_forms(d)?.len())
}

/// The form class group, with structure read off from the `p`-torsion counts.
pub fn form_class_group(d: i64) -> Result<FgAbGroup> {
    let forms = reduced_forms(d)?;
    let h = forms.len() as u64;
    let id = Form::identity(d);
    let orders: Vec<u64> = forms
        .iter()
        .map(|f| {
            let mut k = 1;
            let mut g = *f;
            while g != id {
                g = g.compose(f);
                k += 1;
            }
            k
        })
        .collect();
    let mut factors: Vec<BigInt> = Vec::new();
    // p-primary parts: |A[p^j]| = p^{r_j}; there are (r_j - r_{j-1}) - (r_{j+1} - r_j)
    // cyclic factors of order exactly p^j
    let mut primary: Vec<Vec<u64>> = Vec::new();
    for p in super::prime_factors(&BigInt::from(h)) {
        let p: u64 = u64::try_from(p).unwrap();
        let top = orders
            .iter()
            .map(|&o| {
                let mut k = 0u32;
                let mut o = o;
                while o % p == 0 {
                    o /= p;
                    k += 1;
                }
                k
            })
            .max()
            .unwrap_or(0) as usize;
        let ranks: Vec<u32> = (0..=top + 1)
            .map(|j| {
                let pj = p.pow(j as u32);
                let mut count = orders.iter().filter(|&&o| pj.is_multiple_of(o)).count() as u64;
                let mut r = 0;
                while count > 1 {
                    count /= p;
                    r += 1;
                }
                r
            })
            .collect();
        let mut cyc = Vec::new();
        for j in 1..=top {
            let exact = (ranks[j] - ranks[j - 1]) - (ranks[j + 1] - ranks[j]);
            for _ in 0..exact {
                cyc.push(p.pow(j as u32));
            }
        }
        cyc.sort_unstable();
        primary.push(cyc);
    }
    // combine primary parts into invariant factors
    let width = primary.iter().map(|c| c.len()).max().unwrap_or(0);
    for i in 0..width {
        let mut f = BigInt::one();
        for cyc in &primary {
            let len = cyc.len();
            if i + len >= width {
                f *= cyc[i + len - width];
            }
        }
        factors.push(f);
    }
    let factors: Vec<BigInt> = factors.into_iter().filter(|f| !f.is_one() && !f.is_zero()).collect();
    let g = FgAbGroup::from_invariants(&factors, 0)?;
    if g.order_u64() != Some(h) {
        return Err(Error::Inconsistent(format!("form group structure for {d} has wrong order")));
    }
    Ok(g)
}
