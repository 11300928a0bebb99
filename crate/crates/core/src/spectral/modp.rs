//! Polynomial arithmetic over a prime field 𝔽ₚ (p < 2³¹) and Cantor–Zassenhaus
//! factorization of squarefree monic polynomials.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::Rng;

use super::poly::IntPoly;

/// Coefficients low degree first, reduced to `[0, p)`, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModPoly {
    pub p: u64,
    pub c: Vec<u64>,
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    a * b % p
}

pub fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

pub fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    pow_mod(a, p - 2, p)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2;
    while i * i <= n {
        if n % i == 0 {
            return false;
        }
        i += 1;
    }
    true
}

impl ModPoly {
    pub fn new(p: u64, mut c: Vec<u64>) -> Self {
        for x in c.iter_mut() {
            *x %= p;
        }
        while c.last() == Some(&0) {
            c.pop();
        }
        Self { p, c }
    }

    pub fn from_int(f: &IntPoly, p: u64) -> Self {
        let pb = BigInt::from(p);
        let c = f
            .coeffs()
            .iter()
            .map(|a| a.mod_floor(&pb).to_u64().expect("reduced coefficient fits"))
            .collect();
        Self::new(p, c)
    }

    pub fn zero(p: u64) -> Self {
        Self { p, c: Vec::new() }
    }

    pub fn one(p: u64) -> Self {
        Self::new(p, vec![1])
    }

    pub fn x(p: u64) -> Self {
        Self::new(p, vec![0, 1])
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.c == [1]
    }

    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn lead(&self) -> u64 {
        self.c.last().copied().unwrap_or(0)
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = inv_mod(self.lead(), self.p);
        Self::new(self.p, self.c.iter().map(|&a| mul_mod(a, inv, self.p)).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let c = (0..n)
            .map(|i| {
                (self.c.get(i).copied().unwrap_or(0) + o.c.get(i).copied().unwrap_or(0)) % self.p
            })
            .collect();
        Self::new(self.p, c)
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let p = self.p;
        let c = (0..n)
            .map(|i| (self.c.get(i).copied().unwrap_or(0) + p - o.c.get(i).copied().unwrap_or(0)) % p)
            .collect();
        Self::new(p, c)
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.p);
        }
        let p = self.p;
        let mut out = vec![0u64; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                out[i + j] = (out[i + j] + mul_mod(a, b, p)) % p;
            }
        }
        Self::new(p, out)
    }

    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by zero polynomial mod p");
        let p = self.p;
        if self.c.len() < d.c.len() {
            return (Self::zero(p), self.clone());
        }
        let inv = inv_mod(d.lead(), p);
        let dd = d.degree();
        let mut r = self.c.clone();
        let mut q = vec![0u64; r.len() - dd];
        for i in (0..q.len()).rev() {
            let t = mul_mod(r[i + dd], inv, p);
            if t == 0 {
                continue;
            }
            q[i] = t;
            for (j, &b) in d.c.iter().enumerate() {
                r[i + j] = (r[i + j] + p - mul_mod(t, b, p)) % p;
            }
        }
        r.truncate(dd);
        (Self::new(p, q), Self::new(p, r))
    }

    pub fn rem(&self, d: &Self) -> Self {
        self.div_rem(d).1
    }

    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Returns (g, s, t) with s·self + t·o = g = gcd, g monic.
    pub fn ext_gcd(&self, o: &Self) -> (Self, Self, Self) {
        let p = self.p;
        let (mut r0, mut r1) = (self.clone(), o.clone());
        let (mut s0, mut s1) = (Self::one(p), Self::zero(p));
        let (mut t0, mut t1) = (Self::zero(p), Self::one(p));
        while !r1.is_zero() {
            let (q, r) = r0.div_rem(&r1);
            r0 = std::mem::replace(&mut r1, r);
            let s = s0.sub(&q.mul(&s1));
            s0 = std::mem::replace(&mut s1, s);
            let t = t0.sub(&q.mul(&t1));
            t0 = std::mem::replace(&mut t1, t);
        }
        let inv = inv_mod(r0.lead(), p);
        let sc = Self::new(p, vec![inv]);
        (r0.mul(&sc), s0.mul(&sc), t0.mul(&sc))
    }

    pub fn derivative(&self) -> Self {
        let p = self.p;
        Self::new(
            p,
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &a)| mul_mod(a, i as u64 % p, p))
                .collect(),
        )
    }

    /// self^e mod m.
    pub fn pow_rem(&self, e: &BigUint, m: &Self) -> Self {
        let mut result = Self::one(self.p);
        let base = self.rem(m);
        let bits = e.bits();
        for i in (0..bits).rev() {
            result = result.mul(&result).rem(m);
            if e.bit(i) {
                result = result.mul(&base).rem(m);
            }
        }
        result
    }

    /// Lift to ℤ[x] with coefficients in [0, p).
    pub fn to_int(&self) -> IntPoly {
        IntPoly::new(self.c.iter().map(|&a| BigInt::from(a)).collect())
    }
}

/// Distinct-degree factorization of a squarefree monic polynomial:
/// returns (product of all irreducible factors of degree k, k).
pub fn distinct_degree(f: &ModPoly) -> Vec<(ModPoly, usize)> {
    let p = f.p;
    let mut out = Vec::new();
    let mut rest = f.clone();
    let mut h = ModPoly::x(p);
    let pe = BigUint::from(p);
    let mut k = 0;
    while rest.degree() >= 2 * (k + 1) {
        k += 1;
        h = h.pow_rem(&pe, &rest);
        let g = h.sub(&ModPoly::x(p)).gcd(&rest);
        if !g.is_one() {
            rest = rest.div_rem(&g).0;
            h = h.rem(&rest);
            out.push((g, k));
        }
    }
    if rest.degree() > 0 {
        let deg = rest.degree();
        out.push((rest.monic(), deg));
    }
    out
}

/// Equal-degree splitting (odd p) of a product of irreducibles of degree `k`.
pub fn equal_degree<R: Rng>(f: &ModPoly, k: usize, rng: &mut R) -> Vec<ModPoly> {
    let p = f.p;
    if f.degree() == k {
        return vec![f.monic()];
    }
    let exponent = (BigUint::from(p).pow(k as u32) - 1u32) / 2u32;
    loop {
        let a = ModPoly::new(p, (0..f.degree()).map(|_| rng.gen_range(0..p)).collect());
        if a.degree() == 0 {
            continue;
        }
        let g = a.gcd(f);
        let d = if g.degree() > 0 {
            g
        } else {
            a.pow_rem(&exponent, f).sub(&ModPoly::one(p)).gcd(f)
        };
        if d.degree() > 0 && d.degree() < f.degree() {
            let other = f.div_rem(&d).0.monic();
            let mut out = equal_degree(&d, k, rng);
            out.extend(equal_degree(&other, k, rng));
            return out;
        }
    }
}

/// Full factorization of a squarefree monic polynomial over 𝔽ₚ, p odd.
pub fn factor_squarefree<R: Rng>(f: &ModPoly, rng: &mut R) -> Vec<ModPoly> {
    let mut out = Vec::new();
    for (g, k) in distinct_degree(f) {
        out.extend(equal_degree(&g, k, rng));
    }
    out.sort_by(|a, b| a.degree().cmp(&b.degree()).then_with(|| a.c.cmp(&b.c)));
    out
}

pub fn is_squarefree(f: &ModPoly) -> bool {
    let d = f.derivative();
    !d.is_zero() && f.gcd(&d).is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn splits_product_of_linears() {
        let p = 7;
        // (x-1)(x-2)(x-3)
        let f = ModPoly::new(p, vec![p - 1, 1])
            .mul(&ModPoly::new(p, vec![p - 2, 1]))
            .mul(&ModPoly::new(p, vec![p - 3, 1]));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fs = factor_squarefree(&f, &mut rng);
        assert_eq!(fs.len(), 3);
        let prod = fs.iter().fold(ModPoly::one(p), |a, b| a.mul(b));
        assert_eq!(prod, f);
    }

    #[test]
    fn ext_gcd_bezout() {
        let p = 11;
        let a = ModPoly::new(p, vec![1, 2, 1, 3]);
        let b = ModPoly::new(p, vec![4, 0, 1]);
        let (g, s, t) = a.ext_gcd(&b);
        assert_eq!(s.mul(&a).add(&t.mul(&b)), g);
    }
}
