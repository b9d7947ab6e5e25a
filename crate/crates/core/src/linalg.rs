//! Exact linear algebra.
//!
//! [`RationalMatrix`] works over `Q`: rank and determinants go through
//! fraction-free (Bareiss) elimination on a row-scaled integer copy, solving
//! goes through Gauss-Jordan on reduced fractions. [`ModMatrix`] works over
//! `Z/p` with plain elimination.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::rational;

/// `2^62 - 57`, the largest prime below `2^62`.
pub const DEFAULT_PRIME: u64 = 4_611_686_018_427_387_847;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("shape mismatch: matrix has {rows} rows, right-hand side has {rhs}")]
    ShapeMismatch { rows: usize, rhs: usize },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("ragged rows")]
    Ragged,
    #[error("bad matrix entry: {0}")]
    BadEntry(String),
}

/// Outcome of `Ax = b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution<T> {
    Unique(Vec<T>),
    Inconsistent,
    /// Consistent with a `nullity`-dimensional solution space; `particular`
    /// sets every free variable to zero.
    Underdetermined { particular: Vec<T>, nullity: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Ragged);
        }
        Ok(RationalMatrix {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Rows of small integers; `cols` is needed when `rows` is empty.
    pub fn from_i64_rows(rows: &[Vec<i64>], cols: usize) -> Result<Self, LinalgError> {
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Ragged);
        }
        Ok(RationalMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().map(|&x| rational::int(x)).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BigRational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: BigRational) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[BigRational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[BigRational]) -> Result<Vec<BigRational>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::ShapeMismatch {
                rows: self.cols,
                rhs: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .filter(|(a, _)| !a.is_zero())
                    .fold(BigRational::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect())
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        RationalMatrix {
            rows: rows.len(),
            cols: self.cols,
            data: rows.iter().flat_map(|&r| self.row(r).iter().cloned()).collect(),
        }
    }

    /// Each row multiplied through by the lcm of its denominators.
    fn integer_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect()
            })
            .collect()
    }

    pub fn rank(&self) -> usize {
        bareiss(self.integer_rows(), self.cols).0
    }

    /// Determinant of a square matrix, `None` otherwise.
    pub fn determinant(&self) -> Option<BigRational> {
        if self.rows != self.cols {
            return None;
        }
        let scale = (0..self.rows).fold(BigInt::one(), |acc, r| {
            acc * self.row(r).iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()))
        });
        let det = integer_determinant(self.integer_rows());
        Some(BigRational::new(det, scale))
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (RationalMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(p, row);
            let inv = m.get(row, col).recip();
            for c in col..m.cols {
                let v = m.get(row, c) * &inv;
                m.set(row, c, v);
            }
            for r in 0..m.rows {
                if r == row || m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col).clone();
                for c in col..m.cols {
                    let v = m.get(r, c) - &factor * m.get(row, c);
                    m.set(r, c, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    pub fn solve(&self, b: &[BigRational]) -> Result<Solution<BigRational>, LinalgError> {
        if b.len() != self.rows {
            return Err(LinalgError::ShapeMismatch {
                rows: self.rows,
                rhs: b.len(),
            });
        }
        let mut aug = RationalMatrix::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, self.cols, b[r].clone());
        }
        let (red, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Ok(Solution::Inconsistent);
        }
        let mut x = vec![BigRational::zero(); self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = red.get(r, self.cols).clone();
        }
        let nullity = self.cols - pivots.len();
        Ok(if nullity == 0 {
            Solution::Unique(x)
        } else {
            Solution::Underdetermined {
                particular: x,
                nullity,
            }
        })
    }

    /// Array of rows of `"num/den"` strings.
    pub fn to_json(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(rational::to_fraction_string).collect())
            .collect()
    }

    pub fn from_json(rows: &[Vec<String>]) -> Result<Self, LinalgError> {
        let parsed = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|s| rational::parse_fraction(s).map_err(|e| LinalgError::BadEntry(e.0)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(parsed)
    }
}

/// Fraction-free elimination. Returns the rank and the last pivot, which
/// for a full-rank square input is the determinant up to the row-swap sign.
fn bareiss(mut m: Vec<Vec<BigInt>>, cols: usize) -> (usize, BigInt, bool) {
    let rows = m.len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    let mut negate = false;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        if p != rank {
            m.swap(p, rank);
            negate = !negate;
        }
        let (top, rest) = m.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        for row in rest.iter_mut() {
            for c in col + 1..cols {
                let v = (&pivot_row[col] * &row[c] - &row[col] * &pivot_row[c]) / &prev;
                row[c] = v;
            }
            row[col] = BigInt::zero();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    (rank, prev, negate)
}

/// Exact determinant of a square integer matrix.
pub fn integer_determinant(m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let (rank, last, negate) = bareiss(m, n);
    if rank < n {
        BigInt::zero()
    } else if negate {
        -last
    } else {
        last
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Matrix over the prime field `Z/p`, entries kept in `0..p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModMatrix {
    prime: u64,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl ModMatrix {
    pub fn zeros(prime: u64, rows: usize, cols: usize) -> Result<Self, LinalgError> {
        if !is_prime_u64(prime) {
            return Err(LinalgError::NotPrime(prime));
        }
        Ok(ModMatrix {
            prime,
            rows,
            cols,
            data: vec![0; rows * cols],
        })
    }

    /// Reduces every rational entry mod `p`; `None` if a denominator vanishes.
    pub fn from_rational(m: &RationalMatrix, prime: u64) -> Result<Option<Self>, LinalgError> {
        let mut out = Self::zeros(prime, m.rows, m.cols)?;
        let p = BigInt::from(prime);
        for r in 0..m.rows {
            for c in 0..m.cols {
                let x = m.get(r, c);
                let num = x.numer().mod_floor(&p);
                let den = x.denom().mod_floor(&p);
                if den.is_zero() {
                    return Ok(None);
                }
                let num: u64 = num.try_into().expect("reduced below p");
                let den: u64 = den.try_into().expect("reduced below p");
                out.set(r, c, mul_mod(num, inv_mod(den, prime), prime));
            }
        }
        Ok(Some(out))
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: u64) {
        self.data[r * self.cols + c] = value % self.prime;
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn rref(&self) -> (ModMatrix, Vec<usize>) {
        let p = self.prime;
        let mut m = self.clone();
        let cols = m.cols;
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..cols {
            if row == m.rows {
                break;
            }
            let Some(piv) = (row..m.rows).find(|&r| m.get(r, col) != 0) else {
                continue;
            };
            if piv != row {
                for c in 0..cols {
                    m.data.swap(piv * cols + c, row * cols + c);
                }
            }
            let inv = inv_mod(m.get(row, col), p);
            for c in col..cols {
                let v = mul_mod(m.get(row, c), inv, p);
                m.set(row, c, v);
            }
            for r in 0..m.rows {
                let factor = m.get(r, col);
                if r == row || factor == 0 {
                    continue;
                }
                for c in col..cols {
                    let sub = mul_mod(factor, m.get(row, c), p);
                    let v = (m.get(r, c) + p - sub) % p;
                    m.set(r, c, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn solve(&self, b: &[u64]) -> Result<Solution<u64>, LinalgError> {
        if b.len() != self.rows {
            return Err(LinalgError::ShapeMismatch {
                rows: self.rows,
                rhs: b.len(),
            });
        }
        let mut aug = ModMatrix::zeros(self.prime, self.rows, self.cols + 1)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, self.cols, b[r]);
        }
        let (red, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Ok(Solution::Inconsistent);
        }
        let mut x = vec![0; self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = red.get(r, self.cols);
        }
        let nullity = self.cols - pivots.len();
        Ok(if nullity == 0 {
            Solution::Unique(x)
        } else {
            Solution::Underdetermined {
                particular: x,
                nullity,
            }
        })
    }
}

/// Rank of a 0/1 row set over `Q`, given as supports. The entries of such
/// matrices have minors far below [`DEFAULT_PRIME`] for the sizes used here,
/// but callers needing a proof should use [`RationalMatrix::rank`].
pub fn support_rank_mod_p(supports: &[&[usize]], cols: usize, prime: u64) -> usize {
    let mut m = ModMatrix::zeros(prime, supports.len(), cols).expect("prime modulus");
    for (r, s) in supports.iter().enumerate() {
        for &c in s.iter() {
            m.set(r, c, 1);
        }
    }
    m.rank()
}

pub fn support_matrix(supports: &[&[usize]], cols: usize) -> RationalMatrix {
    let mut m = RationalMatrix::zeros(supports.len(), cols);
    for (r, s) in supports.iter().enumerate() {
        for &c in s.iter() {
            m.set(r, c, BigRational::one());
        }
    }
    m
}
