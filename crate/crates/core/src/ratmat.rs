//! Dense square matrices over arbitrary-precision rationals.
//!
//! Group closure at five-digit orders is intolerant of rounding, so group
//! elements, canonical measurement matrices, and their inverses are kept
//! exact. Entries in practice have small power-of-two denominators, but
//! nothing here assumes that.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::scalar::Real;

/// Row-major `n x n` matrix of exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    n: usize,
    entries: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![BigRational::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self {
            n,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_integer_rows(rows: &[Vec<i64>]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&v| BigRational::from_integer(BigInt::from(v)))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        let prod = a * b;
                        out[(i, j)] += prod;
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|e| e * q).collect(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|e| !e.is_negative())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn first_nonzero(&self) -> Option<&BigRational> {
        self.entries.iter().find(|e| !e.is_zero())
    }

    /// Exact determinant by Gaussian elimination.
    pub fn determinant(&self) -> BigRational {
        let n = self.n;
        let mut m = self.clone();
        let mut det = BigRational::one();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !m[(r, col)].is_zero());
            let Some(pivot) = pivot else {
                return BigRational::zero();
            };
            if pivot != col {
                for j in 0..n {
                    let tmp = m[(pivot, j)].clone();
                    m[(pivot, j)] = m[(col, j)].clone();
                    m[(col, j)] = tmp;
                }
                det = -det;
            }
            let p = m[(col, col)].clone();
            det *= p.clone();
            for r in col + 1..n {
                if m[(r, col)].is_zero() {
                    continue;
                }
                let factor = &m[(r, col)] / &p;
                for j in col..n {
                    let sub = &factor * &m[(col, j)];
                    m[(r, j)] -= sub;
                }
            }
        }
        det
    }

    /// Exact inverse by Gauss-Jordan; `None` for singular input.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut m = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| !m[(r, col)].is_zero())?;
            if pivot != col {
                for j in 0..n {
                    let tmp = m[(pivot, j)].clone();
                    m[(pivot, j)] = m[(col, j)].clone();
                    m[(col, j)] = tmp;
                    let tmp = inv[(pivot, j)].clone();
                    inv[(pivot, j)] = inv[(col, j)].clone();
                    inv[(col, j)] = tmp;
                }
            }
            let p = m[(col, col)].clone();
            for j in 0..n {
                m[(col, j)] /= p.clone();
                inv[(col, j)] /= p.clone();
            }
            for r in 0..n {
                if r == col || m[(r, col)].is_zero() {
                    continue;
                }
                let factor = m[(r, col)].clone();
                for j in 0..n {
                    let sub = &factor * &m[(col, j)];
                    m[(r, j)] -= sub;
                    let sub = &factor * &inv[(col, j)];
                    inv[(r, j)] -= sub;
                }
            }
        }
        Some(inv)
    }

    /// Lossy conversion for the floating-point pipeline.
    pub fn to_real<T: Real>(&self) -> nalgebra::DMatrix<T> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| {
            let e = &self[(i, j)];
            let num = big_to_f64(e.numer());
            let den = big_to_f64(e.denom());
            T::from_f64_lossy(num / den)
        })
    }
}

fn big_to_f64(b: &BigInt) -> f64 {
    // Entries in this crate are tiny; this path exists for generality.
    use num_traits::ToPrimitive;
    b.to_f64().unwrap_or(f64::NAN)
}

impl std::ops::Index<(usize, usize)> for RationalMatrix {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.entries[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.entries[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn inverse_round_trip() {
        let m = RationalMatrix::from_rows(vec![
            vec![rat(2, 1), rat(1, 1), rat(0, 1)],
            vec![rat(1, 2), rat(1, 1), rat(1, 3)],
            vec![rat(0, 1), rat(5, 1), rat(1, 1)],
        ]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), RationalMatrix::identity(3));
        assert_eq!(inv.mul(&m), RationalMatrix::identity(3));
    }

    #[test]
    fn determinant_of_singular_matrix() {
        let m = RationalMatrix::from_integer_rows(&[
            vec![1, 2, 3],
            vec![2, 4, 6],
            vec![0, 1, 1],
        ]);
        assert!(m.determinant().is_zero());
        assert!(m.inverse().is_none());
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let m = RationalMatrix::from_integer_rows(&[vec![3, 1], vec![4, 2]]);
        assert_eq!(m.determinant(), rat(2, 1));
    }
}
