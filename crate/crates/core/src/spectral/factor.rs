//! Factorization of monic integer polynomials over ℚ: squarefree
//! decomposition, factorization modulo a small prime, Hensel lifting and
//! recombination of the lifted factors (Zassenhaus).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::modp::{factor_squarefree, is_prime, is_squarefree, ModPoly};
use super::poly::IntPoly;
use crate::error::{Error, Result};

/// Largest degree accepted by [`factor_over_q`].
pub const MAX_FACTOR_DEGREE: usize = 24;

/// An irreducible factor and its multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub poly: IntPoly,
    pub multiplicity: u32,
}

/// Factor `p` (monic up to sign) into monic irreducibles over ℚ.
///
/// Factors are sorted by degree and then coefficients so the output is
/// canonical. The product of `factor^multiplicity` equals `±p` exactly.
pub fn factor_over_q(p: &IntPoly) -> Result<Vec<Factor>> {
    if p.is_zero() {
        return Err(Error::InvalidInput("cannot factor the zero polynomial".into()));
    }
    let f = if p.leading().is_negative() { -p } else { p.clone() };
    if !f.is_monic() {
        return Err(Error::InvalidInput(format!("polynomial {p} is not monic up to sign")));
    }
    if f.degree() > MAX_FACTOR_DEGREE {
        return Err(Error::DegreeTooLarge { degree: f.degree(), bound: MAX_FACTOR_DEGREE });
    }
    let mut out = Vec::new();
    for (part, mult) in squarefree_decomposition(&f) {
        for g in factor_squarefree_monic(&part) {
            out.push(Factor { poly: g, multiplicity: mult });
        }
    }
    out.sort_by(|a, b| {
        a.poly
            .degree()
            .cmp(&b.poly.degree())
            .then_with(|| a.poly.coeffs().cmp(b.poly.coeffs()))
            .then_with(|| a.multiplicity.cmp(&b.multiplicity))
    });
    Ok(out)
}

/// Yun's algorithm for a monic polynomial: returns (aᵢ, i) with f = ∏ aᵢ^i,
/// every aᵢ squarefree, monic and pairwise coprime. Trivial parts are omitted.
pub fn squarefree_decomposition(f: &IntPoly) -> Vec<(IntPoly, u32)> {
    let mut out = Vec::new();
    if f.degree() == 0 {
        return out;
    }
    let df = f.derivative();
    let a0 = f.gcd(&df);
    let mut b = f.exact_div(&a0).expect("gcd divides f");
    let c = df.exact_div(&a0).expect("gcd divides f'");
    let mut d = &c - &b.derivative();
    let mut i = 1;
    while b.degree() > 0 {
        let a = b.gcd(&d);
        let nb = b.exact_div(&a).expect("a divides b");
        let nc = d.exact_div(&a).expect("a divides d");
        if a.degree() > 0 {
            out.push((a, i));
        }
        d = &nc - &nb.derivative();
        b = nb;
        i += 1;
    }
    out
}

fn symmetric_mod(x: &BigInt, m: &BigInt) -> BigInt {
    let r = x.mod_floor(m);
    if &r + &r > *m {
        r - m
    } else {
        r
    }
}

fn reduce(f: &IntPoly, m: &BigInt) -> IntPoly {
    IntPoly::new(f.coeffs().iter().map(|c| c.mod_floor(m)).collect())
}

fn reduce_symmetric(f: &IntPoly, m: &BigInt) -> IntPoly {
    IntPoly::new(f.coeffs().iter().map(|c| symmetric_mod(c, m)).collect())
}

/// Choose a prime for which `f` stays squarefree, preferring the one giving
/// the fewest modular factors among the first few candidates.
fn choose_prime(f: &IntPoly, rng: &mut ChaCha8Rng) -> (u64, Vec<ModPoly>) {
    let mut best: Option<(u64, Vec<ModPoly>)> = None;
    let mut tried = 0;
    let mut p = 3u64;
    while tried < 6 {
        if is_prime(p) {
            let fp = ModPoly::from_int(f, p);
            if fp.degree() == f.degree() && is_squarefree(&fp) {
                tried += 1;
                let factors = factor_squarefree(&fp, rng);
                if best.as_ref().is_none_or(|(_, b)| factors.len() < b.len()) {
                    best = Some((p, factors));
                }
                if best.as_ref().is_some_and(|(_, b)| b.len() == 1) {
                    break;
                }
            }
        }
        p += 2;
    }
    best.expect("some prime keeps a squarefree polynomial squarefree")
}

/// One linear Hensel step: from f ≡ g·h (mod pʲ) to mod pʲ⁺¹, given the
/// Bézout cofactor t of s·g + t·h ≡ 1 (mod p). g and h stay monic.
fn hensel_step(f: &IntPoly, g: &mut IntPoly, h: &mut IntPoly, t: &ModPoly, pj: &BigInt) {
    let p = t.p;
    let e = &(f - &(&*g * &*h));
    let e = IntPoly::new(e.coeffs().iter().map(|c| c / pj).collect());
    let ep = ModPoly::from_int(&e, p);
    let gp = ModPoly::from_int(g, p);
    let hp = ModPoly::from_int(h, p);
    let tau = t.mul(&ep).rem(&gp);
    let (sigma, r) = ep.sub(&tau.mul(&hp)).div_rem(&gp);
    debug_assert!(r.is_zero());
    *g = &*g + &tau.to_int().scale(pj);
    *h = &*h + &sigma.to_int().scale(pj);
}

/// Lift a modular factorization of the monic polynomial `f` to modulus `p^k`.
fn multifactor_lift(f: &IntPoly, factors: &[ModPoly], k: u32) -> Vec<IntPoly> {
    let p = factors[0].p;
    let pb = BigInt::from(p);
    let pk = pb.pow(k);
    if factors.len() == 1 {
        return vec![reduce(f, &pk)];
    }
    let mid = factors.len() / 2;
    let (left, right) = factors.split_at(mid);
    let gp = left.iter().fold(ModPoly::one(p), |a, b| a.mul(b));
    let hp = right.iter().fold(ModPoly::one(p), |a, b| a.mul(b));
    let (one, _s, t) = gp.ext_gcd(&hp);
    debug_assert!(one.is_one());
    let mut g = gp.to_int();
    let mut h = hp.to_int();
    let mut pj = pb.clone();
    for _ in 1..k {
        hensel_step(f, &mut g, &mut h, &t, &pj);
        pj *= &pb;
    }
    let g = reduce(&g, &pk);
    let h = reduce(&h, &pk);
    let mut out = multifactor_lift(&g, left, k);
    out.extend(multifactor_lift(&h, right, k));
    out
}

/// Zassenhaus factorization of a squarefree monic polynomial.
fn factor_squarefree_monic(f: &IntPoly) -> Vec<IntPoly> {
    if f.degree() <= 1 {
        return vec![f.clone()];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f00d);
    let (p, modular) = choose_prime(f, &mut rng);
    if modular.len() == 1 {
        return vec![f.clone()];
    }
    // Mignotte: every coefficient of a factor of degree ≤ n is at most 2ⁿ‖f‖₂.
    let bound = BigInt::from(2).pow(f.degree() as u32) * f.norm2_ceil();
    let pb = BigInt::from(p);
    let mut k = 1u32;
    let mut pk = pb.clone();
    while pk <= &bound * 2 {
        pk *= &pb;
        k += 1;
    }
    let lifted = multifactor_lift(f, &modular, k);
    recombine(f, lifted, &pk)
}

fn recombine(f: &IntPoly, mut lifted: Vec<IntPoly>, pk: &BigInt) -> Vec<IntPoly> {
    let mut found = Vec::new();
    let mut rest = f.clone();
    let mut size = 1;
    while 2 * size <= lifted.len() {
        let mut hit = None;
        for subset in Subsets::new(lifted.len(), size) {
            let prod = subset
                .iter()
                .fold(IntPoly::one(), |acc, &i| reduce(&(&acc * &lifted[i]), pk));
            let cand = reduce_symmetric(&prod, pk);
            let c0 = cand.coeff(0);
            let r0 = rest.coeff(0);
            if c0.is_zero() {
                if !r0.is_zero() {
                    continue;
                }
            } else if !(&r0 % &c0).is_zero() {
                continue;
            }
            if let Some(q) = rest.exact_div(&cand) {
                hit = Some((subset, cand, q));
                break;
            }
        }
        match hit {
            Some((subset, cand, q)) => {
                found.push(cand);
                rest = q;
                for &i in subset.iter().rev() {
                    lifted.remove(i);
                }
            }
            None => size += 1,
        }
    }
    if rest.degree() > 0 || found.is_empty() {
        found.push(rest);
    }
    found
}

/// Lexicographic k-subsets of 0..n.
struct Subsets {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Subsets {
    fn new(n: usize, k: usize) -> Self {
        Self { n, idx: (0..k).collect(), done: k > n }
    }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Product of `factor^multiplicity` over all factors.
pub fn expand(factors: &[Factor]) -> IntPoly {
    factors
        .iter()
        .fold(IntPoly::one(), |acc, f| &acc * &f.poly.pow(f.multiplicity))
}
