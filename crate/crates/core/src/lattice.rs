//! Integer lattice primitives: vectors of `N` and `M`, primitivity,
//! unimodular changes of basis and the Euclidean splitting of a primitive
//! planar vector into its two Stern–Brocot parents.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rational::{bigint_from_json, bigint_to_json, Q};

/// A point of a lattice `Z^n` with arbitrary-precision coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector(Vec<BigInt>);

impl LatticeVector {
    pub fn new(coords: Vec<BigInt>) -> Self {
        assert!(!coords.is_empty(), "lattice vectors have positive dimension");
        LatticeVector(coords)
    }

    pub fn from_i64(coords: &[i64]) -> Self {
        Self::new(coords.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(vec![BigInt::zero(); dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zero(dim);
        v.0[i] = BigInt::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn content(&self) -> BigInt {
        self.0.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    pub fn is_primitive(&self) -> bool {
        self.content().is_one()
    }

    pub fn sup_norm(&self) -> BigInt {
        self.0.iter().map(|c| c.abs()).max().unwrap_or_default()
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        LatticeVector(self.0.iter().map(|c| c * k).collect())
    }

    /// Integer pairing with another lattice vector (same dimension).
    pub fn dot(&self, other: &LatticeVector) -> BigInt {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Pairing `<m, self>` with a rational covector.
    pub fn pair(&self, m: &[Q]) -> Q {
        debug_assert_eq!(self.dim(), m.len());
        self.0
            .iter()
            .zip(m)
            .fold(Q::zero(), |acc, (c, x)| acc + x * c)
    }

    pub fn to_rational(&self) -> Vec<Q> {
        self.0.iter().map(|c| Q::from_integer(c.clone())).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.0.iter().map(|c| c.to_i64()).collect()
    }
}

impl fmt::Debug for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Add for &LatticeVector {
    type Output = LatticeVector;
    fn add(self, rhs: &LatticeVector) -> LatticeVector {
        LatticeVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LatticeVector {
    type Output = LatticeVector;
    fn sub(self, rhs: &LatticeVector) -> LatticeVector {
        LatticeVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &LatticeVector {
    type Output = LatticeVector;
    fn neg(self) -> LatticeVector {
        LatticeVector(self.0.iter().map(|a| -a).collect())
    }
}

impl Serialize for LatticeVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let arr: Vec<serde_json::Value> = self.0.iter().map(bigint_to_json).collect();
        arr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticeVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let vals = Vec::<serde_json::Value>::deserialize(d)?;
        if vals.is_empty() {
            return Err(D::Error::custom("lattice vector must be nonempty"));
        }
        let coords = vals
            .iter()
            .map(|v| bigint_from_json(v).ok_or_else(|| D::Error::custom(format!("not an integer: {v}"))))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(LatticeVector(coords))
    }
}

/// Returns `v / gcd(v)`, the primitive vector on the ray through `v`.
pub fn primitive_of(v: &LatticeVector) -> Result<LatticeVector> {
    if v.is_zero() {
        return Err(Error::ZeroVector);
    }
    let g = v.content();
    Ok(LatticeVector(v.0.iter().map(|c| c / &g).collect()))
}

/// `det(a, b)` for planar vectors.
pub fn det2(a: &LatticeVector, b: &LatticeVector) -> BigInt {
    &a.0[0] * &b.0[1] - &a.0[1] * &b.0[0]
}

/// Splits a primitive vector `v = (v1, v2)` with `v1, v2 >= 1` into the pair
/// `(v_alpha, v_beta)` with `v = v_alpha + v_beta` and `det(v_alpha, v_beta) = ±1`.
///
/// `x` is the representative of `v1^{-1} mod v2` in `1..=v2` and
/// `y = (1 - x v1) / v2`; then `v_alpha = (-y, x)` lies on the side of the
/// second axis and `v_beta = v - v_alpha` on the side of the first.
pub fn euclid_split(v: &LatticeVector) -> Result<(LatticeVector, LatticeVector)> {
    if v.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: v.dim() });
    }
    let (v1, v2) = (&v.0[0], &v.0[1]);
    if !v1.is_positive() || !v2.is_positive() || !v.is_primitive() {
        return Err(Error::NotInterior(v.to_string()));
    }
    let x = if v2.is_one() {
        BigInt::one()
    } else {
        let eg = v1.extended_gcd(v2);
        let r = eg.x.mod_floor(v2);
        if r.is_zero() {
            v2.clone()
        } else {
            r
        }
    };
    let y = (BigInt::one() - &x * v1) / v2;
    let alpha = LatticeVector(vec![-&y, x.clone()]);
    let beta = LatticeVector(vec![v1 + &y, v2 - &x]);
    Ok((alpha, beta))
}

/// Determinant of a square integer matrix (fraction-free elimination).
pub fn det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
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
                let t = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = t / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// gcd of all maximal minors of a `k x n` integer matrix (`k <= n`);
/// equals 1 exactly when the rows extend to a basis of `Z^n`.
pub fn maximal_minors_gcd(rows: &[LatticeVector]) -> BigInt {
    let k = rows.len();
    if k == 0 {
        return BigInt::one();
    }
    let n = rows[0].dim();
    if k > n {
        return BigInt::zero();
    }
    let mut g = BigInt::zero();
    for cols in combinations(n, k) {
        let sub: Vec<Vec<BigInt>> = rows
            .iter()
            .map(|r| cols.iter().map(|&c| r.0[c].clone()).collect())
            .collect();
        g = g.gcd(&det(&sub));
        if g.is_one() {
            break;
        }
    }
    g
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// A lattice automorphism given by an integer matrix of determinant ±1.
/// The matrix acts on column vectors: `apply(v) = A v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnimodularMap {
    matrix: Vec<Vec<BigInt>>,
}

impl UnimodularMap {
    pub fn new(matrix: Vec<Vec<BigInt>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("unimodular map must be square".into()));
        }
        if !det(&matrix).abs().is_one() {
            return Err(Error::InvalidInput("matrix is not unimodular".into()));
        }
        Ok(UnimodularMap { matrix })
    }

    pub fn identity(n: usize) -> Self {
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        UnimodularMap { matrix }
    }

    /// The map sending the standard basis vector `e_i` to `columns[i]`.
    pub fn from_columns(columns: &[LatticeVector]) -> Result<Self> {
        let n = columns.len();
        let matrix = (0..n)
            .map(|i| columns.iter().map(|c| c.coords()[i].clone()).collect())
            .collect();
        Self::new(matrix)
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<BigInt>] {
        &self.matrix
    }

    pub fn det(&self) -> BigInt {
        det(&self.matrix)
    }

    pub fn apply(&self, v: &LatticeVector) -> LatticeVector {
        LatticeVector(
            self.matrix
                .iter()
                .map(|row| row.iter().zip(v.coords()).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    pub fn compose(&self, other: &UnimodularMap) -> UnimodularMap {
        let n = self.dim();
        let matrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| &self.matrix[i][k] * &other.matrix[k][j]).sum())
                    .collect()
            })
            .collect();
        UnimodularMap { matrix }
    }

    pub fn inverse(&self) -> UnimodularMap {
        let q: Vec<Vec<Q>> = self
            .matrix
            .iter()
            .map(|r| r.iter().map(|c| Q::from_integer(c.clone())).collect())
            .collect();
        let inv = linalg::inverse(&q).expect("unimodular matrices are invertible");
        let matrix = inv
            .into_iter()
            .map(|r| r.into_iter().map(|x| x.to_integer()).collect())
            .collect();
        UnimodularMap { matrix }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(c: &[i64]) -> LatticeVector {
        LatticeVector::from_i64(c)
    }

    #[test]
    fn primitive_examples() {
        assert_eq!(primitive_of(&lv(&[4, 6])).unwrap(), lv(&[2, 3]));
        assert_eq!(primitive_of(&lv(&[1, 0, 0])).unwrap(), lv(&[1, 0, 0]));
        assert_eq!(primitive_of(&lv(&[-3, 9])).unwrap(), lv(&[-1, 3]));
        assert!(matches!(primitive_of(&lv(&[0, 0])), Err(Error::ZeroVector)));
    }

    #[test]
    fn split_examples() {
        assert_eq!(euclid_split(&lv(&[2, 3])).unwrap(), (lv(&[1, 2]), lv(&[1, 1])));
        assert_eq!(euclid_split(&lv(&[1, 1])).unwrap(), (lv(&[0, 1]), lv(&[1, 0])));
        assert_eq!(euclid_split(&lv(&[5, 2])).unwrap(), (lv(&[2, 1]), lv(&[3, 1])));
        // the (n, 1) family has v_alpha = (n - 1, 1), v_beta = (1, 0)
        assert_eq!(euclid_split(&lv(&[7, 1])).unwrap(), (lv(&[6, 1]), lv(&[1, 0])));
        assert_eq!(euclid_split(&lv(&[1, 7])).unwrap(), (lv(&[0, 1]), lv(&[1, 6])));
    }

    #[test]
    fn split_rejects_boundary_and_imprimitive() {
        for bad in [[1, 0], [0, 1], [-1, 2], [2, 4]] {
            assert!(matches!(euclid_split(&lv(&bad)), Err(Error::NotInterior(_))));
        }
    }

    #[test]
    fn determinants_and_minors() {
        let m = vec![
            vec![BigInt::from(2), BigInt::from(0), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(3), BigInt::from(2)],
            vec![BigInt::from(1), BigInt::from(1), BigInt::from(1)],
        ];
        // 2(3-2) - 0 + 1(1-3) = 0
        assert_eq!(det(&m), BigInt::zero());
        assert_eq!(maximal_minors_gcd(&[lv(&[1, 0, 0]), lv(&[1, 1, 0])]), BigInt::one());
        assert_eq!(maximal_minors_gcd(&[lv(&[1, 0]), lv(&[1, 2])]), BigInt::from(2));
    }

    #[test]
    fn unimodular_inverse_roundtrip() {
        let u = UnimodularMap::from_columns(&[lv(&[2, 1]), lv(&[1, 1])]).unwrap();
        let inv = u.inverse();
        assert!(inv.det().abs().is_one());
        for v in [lv(&[3, -4]), lv(&[0, 1]), lv(&[17, 5])] {
            assert_eq!(inv.apply(&u.apply(&v)), v);
        }
        assert!(UnimodularMap::from_columns(&[lv(&[1, 0]), lv(&[1, 2])]).is_err());
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }
}
