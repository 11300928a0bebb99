//! Integer matrices with determinant ±1 and exact arithmetic on them.

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::poly::IntPoly;
use crate::error::{Error, Result};

pub type IntMatrix = Vec<Vec<BigInt>>;

/// A toral automorphism given by a square integer matrix with |det| = 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntegerAutomorphism {
    entries: IntMatrix,
    det: i8,
}

impl IntegerAutomorphism {
    pub fn new(entries: IntMatrix) -> Result<Self> {
        let d = entries.len();
        if d == 0 || entries.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("matrix must be square and nonempty".into()));
        }
        let det = determinant(&entries);
        let det = match det.to_i64() {
            Some(1) => 1,
            Some(-1) => -1,
            _ => return Err(Error::NotUnimodular(det.to_string())),
        };
        Ok(Self { entries, det })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn identity(d: usize) -> Self {
        Self { entries: identity(d), det: 1 }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &IntMatrix {
        &self.entries
    }

    pub fn det(&self) -> i8 {
        self.det
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        to_f64(&self.entries)
    }

    /// Entries as machine integers, if they fit.
    pub fn to_i64(&self) -> Option<Vec<Vec<i64>>> {
        self.entries.iter().map(|r| r.iter().map(|x| x.to_i64()).collect()).collect()
    }

    /// Characteristic polynomial det(xI − M) by Faddeev–LeVerrier; every
    /// division is exact in ℤ.
    pub fn char_poly(&self) -> IntPoly {
        char_poly(&self.entries)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { entries: mat_mul(&self.entries, &other.entries), det: self.det * other.det }
    }

    /// Exact inverse from the Cayley–Hamilton identity.
    pub fn inverse(&self) -> Self {
        let d = self.dim();
        let cp = self.char_poly();
        // M (M^{d-1} + c_{d-1} M^{d-2} + ... + c_1) = -c_0 I, c_0 = ±1.
        let mut acc = identity(d);
        for k in (1..d).rev() {
            acc = mat_mul(&acc, &self.entries);
            for (i, row) in acc.iter_mut().enumerate() {
                row[i] += cp.coeff(k);
            }
        }
        let c0 = cp.coeff(0);
        let entries = acc
            .into_iter()
            .map(|r| r.into_iter().map(|x| -(x * &c0)).collect())
            .collect();
        Self { entries, det: self.det }
    }

    /// Mᵏ for any integer k.
    pub fn pow(&self, k: i64) -> Self {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::identity(self.dim());
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            sq = sq.mul(&sq);
            e >>= 1;
        }
        acc
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim();
        let entries = (0..d).map(|i| (0..d).map(|j| self.entries[j][i].clone()).collect()).collect();
        Self { entries, det: self.det }
    }

    /// Block diagonal matrix diag(self, other).
    pub fn block_diag(&self, other: &Self) -> Self {
        let (a, b) = (self.dim(), other.dim());
        let mut entries = vec![vec![BigInt::zero(); a + b]; a + b];
        for i in 0..a {
            entries[i][..a].clone_from_slice(&self.entries[i]);
        }
        for i in 0..b {
            entries[a + i][a..].clone_from_slice(&other.entries[i]);
        }
        Self { entries, det: self.det * other.det }
    }

    /// det(Mⁿ − I), exact.
    pub fn det_power_minus_identity(&self, n: i64) -> BigInt {
        let mut m = self.pow(n).entries;
        for (i, row) in m.iter_mut().enumerate() {
            row[i] -= 1;
        }
        determinant(&m)
    }

    /// Evaluate an integer polynomial at this matrix.
    pub fn eval_poly(&self, p: &IntPoly) -> IntMatrix {
        p.eval_matrix(&self.entries)
    }

    pub fn apply_i64(&self, v: &[i64]) -> Vec<BigInt> {
        self.entries
            .iter()
            .map(|r| r.iter().zip(v).map(|(a, &b)| a * b).sum())
            .collect()
    }
}

impl fmt::Display for IntegerAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            write!(f, "[{}]", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

/// JSON form: row-major arrays of integers; entries beyond 64 bits travel as
/// decimal strings.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Cell {
    Small(i64),
    Big(String),
}

impl Serialize for IntegerAutomorphism {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Cell>> = self
            .entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| x.to_i64().map(Cell::Small).unwrap_or_else(|| Cell::Big(x.to_string())))
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntegerAutomorphism {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<Cell>> = Vec::deserialize(d)?;
        let entries = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|c| match c {
                        Cell::Small(x) => Ok(BigInt::from(x)),
                        Cell::Big(s) => s.parse::<BigInt>().map_err(serde::de::Error::custom),
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        IntegerAutomorphism::new(entries).map_err(serde::de::Error::custom)
    }
}

pub fn identity(d: usize) -> IntMatrix {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn to_f64(m: &IntMatrix) -> DMatrix<f64> {
    let d = m.len();
    let c = if d == 0 { 0 } else { m[0].len() };
    DMatrix::from_fn(d, c, |i, j| m[i][j].to_f64().unwrap_or(f64::NAN))
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).fold(BigInt::zero(), |s, t| s + &a[i][t] * &b[t][j]))
                .collect()
        })
        .collect()
}

pub fn is_zero_matrix(m: &IntMatrix) -> bool {
    m.iter().all(|r| r.iter().all(Zero::is_zero))
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &IntMatrix) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v.div_floor(&prev);
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

pub fn char_poly(m: &IntMatrix) -> IntPoly {
    let d = m.len();
    let mut coeffs = vec![BigInt::zero(); d + 1];
    coeffs[d] = BigInt::one();
    let mut mk = vec![vec![BigInt::zero(); d]; d];
    for k in 1..=d {
        // M_k = A M_{k-1} + c_{d-k+1} I
        let mut next = mat_mul(m, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &coeffs[d - k + 1];
        }
        let am = mat_mul(m, &next);
        let trace: BigInt = (0..d).map(|i| am[i][i].clone()).sum();
        let (q, r) = trace.div_rem(&BigInt::from(k));
        debug_assert!(r.is_zero());
        coeffs[d - k] = -q;
        mk = next;
    }
    IntPoly::new(coeffs)
}

/// Largest absolute entry.
pub fn max_abs_entry(m: &IntMatrix) -> BigInt {
    m.iter().flatten().map(|x| x.abs()).max().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> IntegerAutomorphism {
        IntegerAutomorphism::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn cat_char_poly() {
        assert_eq!(cat().char_poly(), IntPoly::from_i64(&[1, -3, 1]));
        assert_eq!(IntegerAutomorphism::identity(2).char_poly(), IntPoly::from_i64(&[1, -2, 1]));
    }

    #[test]
    fn cayley_hamilton_block() {
        let b = IntegerAutomorphism::from_rows(&[vec![3, 1], vec![2, 1]]).unwrap();
        let m = cat().block_diag(&b);
        let cp = m.char_poly();
        assert_eq!(cp, &IntPoly::from_i64(&[1, -3, 1]) * &IntPoly::from_i64(&[1, -4, 1]));
        assert!(is_zero_matrix(&m.eval_poly(&cp)));
    }

    #[test]
    fn inverse_and_powers() {
        let m = cat();
        assert_eq!(m.mul(&m.inverse()), IntegerAutomorphism::identity(2));
        assert_eq!(m.pow(3).mul(&m.pow(-3)), IntegerAutomorphism::identity(2));
        assert_eq!(m.pow(2).to_i64().unwrap(), vec![vec![5, 3], vec![3, 2]]);
    }

    #[test]
    fn periodic_determinants() {
        let m = cat();
        let counts: Vec<i64> =
            (1..=3).map(|n| m.det_power_minus_identity(n).abs().to_i64().unwrap()).collect();
        assert_eq!(counts, vec![1, 5, 16]);
    }

    #[test]
    fn rejects_non_unimodular() {
        assert!(matches!(
            IntegerAutomorphism::from_rows(&[vec![2, 0], vec![0, 1]]),
            Err(Error::NotUnimodular(_))
        ));
    }

    #[test]
    fn json_round_trip_with_big_entries() {
        let m = cat().pow(100);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains('"'));
        let back: IntegerAutomorphism = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let small: IntegerAutomorphism = serde_json::from_str("[[2,1],[1,1]]").unwrap();
        assert_eq!(small, cat());
    }
}
