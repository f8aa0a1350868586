//! Short vectors of ideal lattices under the quadratic form `T2`.
//!
//! The basis is LLL-reduced exactly over the rationals, then enumerated with
//! Fincke–Pohst in floating point with a small slack; every candidate is
//! re-checked against the exact Gram matrix.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{rat, rat_big, Elem, Field};
use crate::error::{Error, Result};

/// Default cap on enumeration nodes.
pub const DEFAULT_BUDGET: u64 = 5_000_000;

fn gram(k: &Field, basis: &[Elem]) -> Vec<Vec<BigRational>> {
    let w = k.t2_weights();
    let n = basis.len();
    let mut g = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut s = BigRational::zero();
            for (t, wt) in w.iter().enumerate() {
                let a = &basis[i].0[t];
                let b = &basis[j].0[t];
                if !a.is_zero() && !b.is_zero() {
                    s += a * b * rat_big(wt);
                }
            }
            g[i][j] = s.clone();
            g[j][i] = s;
        }
    }
    g
}

fn gram_schmidt(g: &[Vec<BigRational>]) -> (Vec<Vec<BigRational>>, Vec<BigRational>) {
    let n = g.len();
    let mut mu = vec![vec![BigRational::zero(); n]; n];
    let mut b = vec![BigRational::zero(); n];
    for i in 0..n {
        for j in 0..i {
            let mut s = g[i][j].clone();
            for k in 0..j {
                s -= &mu[j][k] * &mu[i][k] * &b[k];
            }
            mu[i][j] = s / &b[j];
        }
        let mut s = g[i][i].clone();
        for k in 0..i {
            s -= &mu[i][k] * &mu[i][k] * &b[k];
        }
        b[i] = s;
    }
    (mu, b)
}

fn round_rat(q: &BigRational) -> BigInt {
    (q + BigRational::new(BigInt::one(), BigInt::from(2))).floor().to_integer()
}

/// Replaces row/column `k` by `k - r·j` in the Gram matrix and transform.
fn reduce_step(g: &mut [Vec<BigRational>], u: &mut [Vec<BigInt>], k: usize, j: usize, r: &BigInt) {
    let n = g.len();
    let rq = rat_big(r);
    for c in 0..n {
        let t = &g[j][c] * &rq;
        g[k][c] -= t;
    }
    for c in 0..n {
        let t = &g[c][j] * &rq;
        g[c][k] -= t;
    }
    for c in 0..u[k].len() {
        let t = &u[j][c] * r;
        u[k][c] -= t;
    }
}

/// LLL (δ = 3/4) on a positive definite Gram matrix; returns the reduced Gram
/// matrix and the integer transform `U` with new basis `U·b`.
pub fn lll_gram(g0: &[Vec<BigRational>]) -> (Vec<Vec<BigRational>>, Vec<Vec<BigInt>>) {
    let n = g0.len();
    let mut g = g0.to_vec();
    let mut u: Vec<Vec<BigInt>> =
        (0..n).map(|i| (0..n).map(|j| BigInt::from(u8::from(i == j))).collect()).collect();
    let delta = BigRational::new(BigInt::from(3), BigInt::from(4));
    let mut k = 1;
    while k < n {
        for j in (0..k).rev() {
            let (mu, _) = gram_schmidt(&g);
            let r = round_rat(&mu[k][j]);
            if !r.is_zero() {
                reduce_step(&mut g, &mut u, k, j, &r);
            }
        }
        let (mu, b) = gram_schmidt(&g);
        if b[k] < (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * &b[k - 1] {
            g.swap(k, k - 1);
            for row in g.iter_mut() {
                row.swap(k, k - 1);
            }
            u.swap(k, k - 1);
            k = k.max(2) - 1;
        } else {
            k += 1;
        }
    }
    (g, u)
}

fn combine(k: &Field, basis: &[Elem], c: &[BigInt]) -> Elem {
    let mut x = k.zero();
    for (ci, b) in c.iter().zip(basis) {
        if !ci.is_zero() {
            x = k.add(&x, &k.scale(b, &rat_big(ci)));
        }
    }
    x
}

/// LLL-reduced basis of the lattice spanned by `basis` (a Z-basis) under `T2`.
pub fn lll_reduce(k: &Field, basis: &[Elem]) -> Vec<Elem> {
    let g = gram(k, basis);
    let (_, u) = lll_gram(&g);
    u.iter().map(|row| combine(k, basis, row)).collect()
}

struct Search<'a, F: FnMut(&Elem) -> bool> {
    q: Vec<Vec<f64>>,
    g: &'a [Vec<BigRational>],
    basis: &'a [Elem],
    k: &'a Field,
    bound: &'a BigRational,
    slack: f64,
    nodes: u64,
    budget: u64,
    x: Vec<i64>,
    visit: F,
    stopped: bool,
}

impl<F: FnMut(&Elem) -> bool> Search<'_, F> {
    fn run(&mut self, i: usize, remaining: f64) -> Result<()> {
        let n = self.x.len();
        let mut c = 0.0;
        for j in i + 1..n {
            c -= self.q[i][j] * self.x[j] as f64;
        }
        let r = (remaining.max(0.0) / self.q[i][i]).sqrt() + 1e-9;
        let lo = (c - r).ceil() as i64;
        let hi = (c + r).floor() as i64;
        for xi in lo..=hi {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::Budget(format!("short-vector enumeration exceeded {} nodes", self.budget)));
            }
            let d = xi as f64 - c;
            let t = self.q[i][i] * d * d;
            if t > remaining + self.slack {
                continue;
            }
            self.x[i] = xi;
            if i == 0 {
                self.leaf()?;
            } else {
                self.run(i - 1, remaining - t)?;
            }
            if self.stopped {
                return Ok(());
            }
        }
        self.x[i] = 0;
        Ok(())
    }

    fn leaf(&mut self) -> Result<()> {
        // one representative of each ±pair: last nonzero coordinate positive
        match self.x.iter().rev().find(|&&v| v != 0) {
            Some(&v) if v > 0 => {}
            _ => return Ok(()),
        }
        let c: Vec<BigInt> = self.x.iter().map(|&v| BigInt::from(v)).collect();
        let n = c.len();
        let mut val = BigRational::zero();
        for i in 0..n {
            for j in 0..n {
                if !c[i].is_zero() && !c[j].is_zero() {
                    val += &self.g[i][j] * rat_big(&(&c[i] * &c[j]));
                }
            }
        }
        if &val <= self.bound {
            let e = combine(self.k, self.basis, &c);
            if (self.visit)(&e) {
                self.stopped = true;
            }
        }
        Ok(())
    }
}

/// Calls `visit` on every nonzero element `x` of the lattice with `T2(x) ≤ bound`,
/// one from each pair `±x`. `visit` returns `true` to stop early; the return value
/// reports whether that happened.
pub fn for_each_short<F>(k: &Field, basis: &[Elem], bound: &BigRational, budget: u64, visit: F) -> Result<bool>
where
    F: FnMut(&Elem) -> bool,
{
    let n = basis.len();
    if n == 0 {
        return Ok(false);
    }
    let g0 = gram(k, basis);
    let (g, u) = lll_gram(&g0);
    let reduced: Vec<Elem> = u.iter().map(|row| combine(k, basis, row)).collect();
    let a: Vec<Vec<f64>> = g.iter().map(|r| r.iter().map(|x| x.to_f64().unwrap_or(f64::INFINITY)).collect()).collect();
    // Cholesky in the form Q(x) = Σ q_ii (x_i + Σ_{j>i} q_ij x_j)²
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut s = a[i][i];
        for k2 in 0..i {
            s -= q[k2][k2] * q[k2][i] * q[k2][i];
        }
        q[i][i] = s;
        for j in i + 1..n {
            let mut s = a[i][j];
            for k2 in 0..i {
                s -= q[k2][k2] * q[k2][i] * q[k2][j];
            }
            q[i][j] = s / q[i][i];
        }
    }
    if q.iter().enumerate().any(|(i, r)| r[i].partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::Inconsistent("T2 Gram matrix is not positive definite".into()));
    }
    let b = bound.to_f64().unwrap_or(f64::INFINITY);
    let mut s = Search {
        q,
        g: &g,
        basis: &reduced,
        k,
        bound,
        slack: 1e-7 * (1.0 + b.abs()),
        nodes: 0,
        budget,
        x: vec![0; n],
        visit,
        stopped: false,
    };
    s.run(n - 1, b + s.slack)?;
    Ok(s.stopped)
}

/// All elements (up to sign) with `T2 ≤ bound`.
pub fn short_vectors(k: &Field, basis: &[Elem], bound: &BigRational, budget: u64) -> Result<Vec<Elem>> {
    let mut out = Vec::new();
    for_each_short(k, basis, bound, budget, |x| {
        out.push(x.clone());
        false
    })?;
    Ok(out)
}

/// Upper bound on `T2` as a rational slightly above the float `x`.
pub fn bound_above(x: f64) -> BigRational {
    let scaled = (x * (1.0 + 1e-9) * 1e6).ceil() + 1.0;
    BigRational::new(BigInt::from(scaled as i128), BigInt::from(1_000_000)).max(rat(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_unity_by_t2() {
        // roots of unity are exactly the integral elements with T2 = degree
        for (radicands, count) in [(vec![-1], 2), (vec![-3], 3), (vec![-5], 1), (vec![-1, 2], 4), (vec![-1, -3], 6)] {
            let k = Field::from_radicands(&radicands).unwrap();
            let n = rat(k.degree() as i64);
            let v = short_vectors(&k, &k.integral_basis(), &n, DEFAULT_BUDGET).unwrap();
            assert_eq!(v.len(), count, "{}", k.name());
        }
    }

    #[test]
    fn lll_keeps_the_lattice() {
        let k = Field::biquadratic(-5, -1).unwrap();
        let b = k.integral_basis();
        let skew: Vec<Elem> = vec![
            b[0].clone(),
            k.add(&b[1], &k.scale(&b[0], &rat(17))),
            k.add(&b[2], &k.scale(&b[1], &rat(-9))),
            k.add(&b[3], &k.scale(&b[2], &rat(31))),
        ];
        let red = lll_reduce(&k, &skew);
        for x in &red {
            assert!(k.is_integral(x));
        }
        assert!(k.t2(&red[0]) <= rat(16));
    }
}
