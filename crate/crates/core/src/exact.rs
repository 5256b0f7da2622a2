//! Exact integer and rational linear algebra.
//!
//! Matrices are dense and row-major. Integer elimination is fraction-free
//! (Bareiss) so that intermediate entries are minors of the input rather than
//! rationals with exploding denominators. Rational rank reduces to the integer
//! case by clearing denominators row by row.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tag for the coefficient ring of a matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ring {
    Int,
    Rat,
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Int => f.write_str("Int"),
            Ring::Rat => f.write_str("Rat"),
        }
    }
}

/// Coefficient rings supported by [`Matrix`]: `BigInt` and `BigRational`.
pub trait Scalar:
    Clone
    + PartialEq
    + Eq
    + fmt::Debug
    + fmt::Display
    + Zero
    + One
    + std::ops::Neg<Output = Self>
    + std::ops::Sub<Output = Self>
    + Send
    + Sync
{
    const RING: Ring;

    /// Decimal text form: `"n"` for integers, `"p/q"` for non-integral rationals.
    fn encode(&self) -> String;
    fn decode(s: &str) -> Result<Self>;
    /// Multiplicative inverse if `self` is a unit of the ring.
    fn unit_inverse(&self) -> Option<Self>;
    fn to_rational(&self) -> BigRational;
    fn from_i64(v: i64) -> Self;
    /// Division by a nonzero integer, if the quotient lies in the ring.
    fn div_int(&self, d: &BigInt) -> Option<Self>;
    /// The rational as an element of the ring, if it lies in it.
    fn from_rational(q: &BigRational) -> Option<Self>;
}

impl Scalar for BigInt {
    const RING: Ring = Ring::Int;

    fn encode(&self) -> String {
        self.to_string()
    }

    fn decode(s: &str) -> Result<Self> {
        s.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("invalid integer {s:?}")))
    }

    fn unit_inverse(&self) -> Option<Self> {
        if self.is_one() || *self == -BigInt::one() {
            Some(self.clone())
        } else {
            None
        }
    }

    fn to_rational(&self) -> BigRational {
        BigRational::from_integer(self.clone())
    }

    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }

    fn div_int(&self, d: &BigInt) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        let (q, r) = self.div_rem(d);
        r.is_zero().then_some(q)
    }

    fn from_rational(q: &BigRational) -> Option<Self> {
        q.denom().is_one().then(|| q.numer().clone())
    }
}

impl Scalar for BigRational {
    const RING: Ring = Ring::Rat;

    fn encode(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn decode(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid rational {s:?}"));
        let mut parts = s.trim().splitn(2, '/');
        let num = parts
            .next()
            .ok_or_else(bad)?
            .trim()
            .parse::<BigInt>()
            .map_err(|_| bad())?;
        let den = match parts.next() {
            Some(d) => d.trim().parse::<BigInt>().map_err(|_| bad())?,
            None => BigInt::one(),
        };
        if den.is_zero() {
            return Err(bad());
        }
        Ok(BigRational::new(num, den))
    }

    fn unit_inverse(&self) -> Option<Self> {
        (!self.is_zero()).then(|| self.recip())
    }

    fn to_rational(&self) -> BigRational {
        self.clone()
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn div_int(&self, d: &BigInt) -> Option<Self> {
        (!d.is_zero()).then(|| self / BigRational::from_integer(d.clone()))
    }

    fn from_rational(q: &BigRational) -> Option<Self> {
        Some(q.clone())
    }
}

/// Dense row-major matrix over a [`Scalar`] ring.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

pub type MatZ = Matrix<BigInt>;
pub type MatQ = Matrix<BigRational>;

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            entries: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Matrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries given for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Matrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Self::from_fn(r, c, |i, j| T::from_i64(rows[i][j])))
    }

    /// The elementary matrix unit with a single one at `(i, j)`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = T::one();
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let e = &self[(i, j)];
                    if i == j {
                        e.is_one()
                    } else {
                        e.is_zero()
                    }
                })
            })
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn to_rational(&self) -> MatQ {
        self.map(Scalar::to_rational)
    }

    pub fn scale(&self, c: &T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| c.clone() * e.clone()).collect(),
        }
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                op,
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "mul",
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        let acc = std::mem::replace(&mut out[(i, j)], T::zero());
                        out[(i, j)] = acc + a.clone() * b.clone();
                    }
                }
            }
        }
        Ok(out)
    }

    /// `self += c * other`, entrywise.
    pub fn add_scaled_assign(&mut self, c: &T, other: &Self) -> Result<()> {
        self.check_same_shape(other, "add_scaled")?;
        if c.is_zero() {
            return Ok(());
        }
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            if !b.is_zero() {
                let acc = std::mem::replace(a, T::zero());
                *a = acc + c.clone() * b.clone();
            }
        }
        Ok(())
    }

    /// Lower-central style commutator `AB - BA`.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }
}

impl MatQ {
    /// Converts to an integer matrix if every entry is integral.
    pub fn to_integer(&self) -> Option<MatZ> {
        if self.entries.iter().all(|e| e.denom().is_one()) {
            Some(self.map(|e| e.numer().clone()))
        } else {
            None
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &self.entries[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &mut self.entries[i * self.cols + j]
    }
}

impl<T: Scalar> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(Scalar::encode).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<String>,
}

impl<T: Scalar> Serialize for Matrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(Scalar::encode).collect(),
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Matrix<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        let entries = repr
            .entries
            .iter()
            .map(|s| T::decode(s))
            .collect::<Result<Vec<T>>>()
            .map_err(serde::de::Error::custom)?;
        Matrix::from_vec(repr.rows, repr.cols, entries).map_err(serde::de::Error::custom)
    }
}

/// Scales a rational row to a primitive integer row with the same span.
fn clear_denominators(row: &[BigRational]) -> Vec<BigInt> {
    let lcm = row.iter().fold(BigInt::one(), |acc, e| acc.lcm(e.denom()));
    row.iter().map(|e| e.numer() * (&lcm / e.denom())).collect()
}

/// Rank over Q of an integer matrix by Bareiss fraction-free elimination.
pub fn rank_z(m: &MatZ) -> usize {
    let mut a: Vec<Vec<BigInt>> = (0..m.rows).map(|i| m.row(i).to_vec()).collect();
    bareiss_rank(&mut a, m.cols)
}

fn bareiss_rank(a: &mut [Vec<BigInt>], cols: usize) -> usize {
    let rows = a.len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let (top, bottom) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        let pivot = pivot_row[col].clone();
        for row in bottom.iter_mut() {
            let lead = row[col].clone();
            for j in col + 1..cols {
                let v = &pivot * &row[j] - &lead * &pivot_row[j];
                row[j] = if prev.is_one() { v } else { v / &prev };
            }
            row[col] = BigInt::zero();
        }
        prev = pivot;
        rank += 1;
    }
    rank
}

/// Dimension of the row space of a rational matrix.
pub fn rank_q(m: &MatQ) -> usize {
    let mut a: Vec<Vec<BigInt>> = (0..m.rows).map(|i| clear_denominators(m.row(i))).collect();
    bareiss_rank(&mut a, m.cols)
}

/// Reduced row echelon form over Q; returns the pivot columns.
fn rref(a: &mut [Vec<BigRational>], cols: usize) -> Vec<usize> {
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][col].recip();
        for e in a[r].iter_mut() {
            if !e.is_zero() {
                *e = &*e * &inv;
            }
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for j in col..cols {
                if !pivot_row[j].is_zero() {
                    row[j] = &row[j] - &f * &pivot_row[j];
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    pivots
}

/// Basis of the right null space, one `cols x 1` column per free variable.
pub fn kernel_q(m: &MatQ) -> Vec<MatQ> {
    let mut a: Vec<Vec<BigRational>> = (0..m.rows).map(|i| m.row(i).to_vec()).collect();
    let pivots = rref(&mut a, m.cols);
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = MatQ::zeros(m.cols, 1);
            v[(f, 0)] = BigRational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[(p, 0)] = -a[r][f].clone();
            }
            v
        })
        .collect()
}

/// Inverse of a square matrix, if it exists over the coefficient ring.
pub fn inverse<T: Scalar>(m: &Matrix<T>) -> Result<Option<Matrix<T>>> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "inverse of a {}x{} matrix",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> = m.row(i).iter().map(Scalar::to_rational).collect();
            row.extend((0..n).map(|j| {
                if i == j {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }));
            row
        })
        .collect();
    let pivots = rref(&mut a, 2 * n);
    if pivots.len() < n || pivots[n - 1] >= n {
        return Ok(None);
    }
    let mut entries = Vec::with_capacity(n * n);
    for row in &a {
        for e in &row[n..] {
            match T::from_rational(e) {
                Some(v) => entries.push(v),
                None => return Ok(None),
            }
        }
    }
    Matrix::from_vec(n, n, entries).map(Some)
}

/// Some solution `x` of `m x = b` (free variables set to zero), or `None`.
pub fn solve_q(m: &MatQ, b: &MatQ) -> Result<Option<MatQ>> {
    if b.rows != m.rows || b.cols != 1 {
        return Err(Error::DimensionMismatch {
            op: "solve",
            left: (m.rows, m.cols),
            right: (b.rows, b.cols),
        });
    }
    let mut a: Vec<Vec<BigRational>> = (0..m.rows)
        .map(|i| {
            let mut row = m.row(i).to_vec();
            row.push(b[(i, 0)].clone());
            row
        })
        .collect();
    let pivots = rref(&mut a, m.cols + 1);
    if pivots.last() == Some(&m.cols) {
        return Ok(None);
    }
    let mut x = MatQ::zeros(m.cols, 1);
    for (r, &p) in pivots.iter().enumerate() {
        x[(p, 0)] = a[r][m.cols].clone();
    }
    Ok(Some(x))
}

/// Incremental fraction-free echelon basis of sparse integer rows.
///
/// Each stored row is primitive (content 1) with a positive leading entry and
/// a distinct leading column. Rows are `(column, value)` pairs sorted by column
/// with no zero values.
#[derive(Default, Debug)]
pub struct SparseEchelon {
    pivots: std::collections::BTreeMap<usize, Vec<(usize, BigInt)>>,
}

impl SparseEchelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Reduces `row` against the basis; returns `true` if it was independent.
    pub fn insert(&mut self, mut row: Vec<(usize, BigInt)>) -> bool {
        row.retain(|(_, v)| !v.is_zero());
        loop {
            let Some(&(lead, _)) = row.first() else {
                return false;
            };
            match self.pivots.get(&lead) {
                None => {
                    make_primitive(&mut row);
                    self.pivots.insert(lead, row);
                    return true;
                }
                Some(p) => {
                    let a = &p[0].1;
                    let b = &row[0].1;
                    let g = a.gcd(b);
                    row = combine(&(a / &g), &row, &(b / &g), p);
                    make_primitive(&mut row);
                }
            }
        }
    }
}

/// `x * u - y * v` on sorted sparse rows, dropping zeros.
fn combine(
    x: &BigInt,
    u: &[(usize, BigInt)],
    y: &BigInt,
    v: &[(usize, BigInt)],
) -> Vec<(usize, BigInt)> {
    let mut out = Vec::with_capacity(u.len() + v.len());
    let (mut i, mut j) = (0, 0);
    while i < u.len() || j < v.len() {
        let cu = u.get(i).map(|e| e.0);
        let cv = v.get(j).map(|e| e.0);
        let (c, val) = match (cu, cv) {
            (Some(a), Some(b)) if a == b => {
                let r = x * &u[i].1 - y * &v[j].1;
                i += 1;
                j += 1;
                (a, r)
            }
            (Some(a), Some(b)) if a < b => {
                i += 1;
                (a, x * &u[i - 1].1)
            }
            (Some(a), None) => {
                i += 1;
                (a, x * &u[i - 1].1)
            }
            (_, Some(b)) => {
                j += 1;
                (b, -(y * &v[j - 1].1))
            }
            (None, None) => unreachable!(),
        };
        if !val.is_zero() {
            out.push((c, val));
        }
    }
    out
}

fn make_primitive(row: &mut [(usize, BigInt)]) {
    let Some(first) = row.first() else { return };
    let mut g = BigInt::zero();
    for (_, v) in row.iter() {
        g = g.gcd(v);
        if g.is_one() {
            break;
        }
    }
    if first.1.is_negative() {
        g = -g;
    }
    if !g.is_one() {
        for (_, v) in row.iter_mut() {
            *v = &*v / &g;
        }
    }
}

/// Rank over Q of a list of sparse integer rows.
pub fn sparse_rank(rows: impl IntoIterator<Item = Vec<(usize, BigInt)>>) -> usize {
    let mut ech = SparseEchelon::new();
    for row in rows {
        ech.insert(row);
    }
    ech.rank()
}

/// Smith normal form data: elementary divisors along the diagonal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnfResult {
    #[serde(with = "bigint_strings")]
    pub divisors: Vec<BigInt>,
    pub rank: usize,
}

impl SnfResult {
    /// Order of the torsion part of the cokernel (product of nonzero divisors).
    pub fn torsion_index(&self) -> BigInt {
        self.divisors.iter().filter(|d| !d.is_zero()).product()
    }

    pub fn all_units(&self) -> bool {
        self.divisors.iter().all(One::is_one)
    }
}

mod bigint_strings {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(ToString::to_string))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Smith normal form by unimodular row and column operations.
///
/// Pivot: smallest nonzero magnitude in the remaining submatrix, ties broken by
/// `(row, col)` order. Returns `min(rows, cols)` divisors with `d[k] | d[k+1]`.
#[allow(clippy::needless_range_loop)]
pub fn snf(m: &MatZ) -> SnfResult {
    let (rows, cols) = (m.rows, m.cols);
    let mut a: Vec<Vec<BigInt>> = (0..rows).map(|i| m.row(i).to_vec()).collect();
    let size = rows.min(cols);
    let mut divisors = Vec::with_capacity(size);
    for t in 0..size {
        let Some((pr, pc)) = smallest_entry(&a, t) else {
            divisors.resize(size, BigInt::zero());
            break;
        };
        a.swap(t, pr);
        for row in a.iter_mut() {
            row.swap(t, pc);
        }
        loop {
            let p = a[t][t].clone();
            let mut dirty = false;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&p);
                for j in t..cols {
                    let v = &q * &a[t][j];
                    a[i][j] -= v;
                }
                dirty |= !a[i][t].is_zero();
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&p);
                for row in a.iter_mut() {
                    let v = &q * &row[t];
                    row[j] -= v;
                }
                dirty |= !a[t][j].is_zero();
            }
            if !dirty {
                // Pivot row/column are clear; enforce divisibility of the rest.
                let bad =
                    (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a[i][j].is_multiple_of(&p)));
                match bad {
                    None => break,
                    Some(i) => {
                        for j in t..cols {
                            let v = a[i][j].clone();
                            a[t][j] += v;
                        }
                        continue;
                    }
                }
            }
            // A smaller remainder appeared: move it to the pivot position.
            let (pr, pc) = smallest_in_cross(&a, t).expect("nonzero remainder exists");
            a.swap(t, pr);
            for row in a.iter_mut() {
                row.swap(t, pc);
            }
        }
        divisors.push(a[t][t].abs());
    }
    let rank = divisors.iter().filter(|d| !d.is_zero()).count();
    SnfResult { divisors, rank }
}

fn smallest_entry(a: &[Vec<BigInt>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in a.iter().enumerate().skip(t) {
        for (j, v) in row.iter().enumerate().skip(t) {
            if v.is_zero() {
                continue;
            }
            if best.is_none_or(|(bi, bj)| v.magnitude() < a[bi][bj].magnitude()) {
                best = Some((i, j));
            }
        }
    }
    best
}

/// Smallest nonzero entry in pivot row `t` or pivot column `t`.
fn smallest_in_cross(a: &[Vec<BigInt>], t: usize) -> Option<(usize, usize)> {
    let cand = (t..a.len())
        .map(|i| (i, t))
        .chain((t + 1..a[t].len()).map(|j| (t, j)))
        .filter(|&(i, j)| !a[i][j].is_zero());
    let mut best: Option<(usize, usize)> = None;
    for (i, j) in cand {
        if best.is_none_or(|(bi, bj)| a[i][j].magnitude() < a[bi][bj].magnitude()) {
            best = Some((i, j));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    fn ints(d: &[i64]) -> Vec<BigInt> {
        d.iter().map(|&v| BigInt::from(v)).collect()
    }

    /// d_1 * ... * d_k = gcd of all k x k minors.
    fn minor_gcd_divisors(m: &MatZ) -> Vec<BigInt> {
        fn det(a: &[Vec<BigInt>]) -> BigInt {
            let n = a.len();
            if n == 0 {
                return BigInt::one();
            }
            let mut total = BigInt::zero();
            for c in 0..n {
                if a[0][c].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<BigInt>> = a[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|&(j, _)| j != c)
                            .map(|(_, v)| v.clone())
                            .collect()
                    })
                    .collect();
                let term = &a[0][c] * det(&minor);
                if c % 2 == 0 {
                    total += term
                } else {
                    total -= term
                }
            }
            total
        }
        fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            if n < k {
                return vec![];
            }
            let mut out = subsets(n - 1, k);
            for mut s in subsets(n - 1, k - 1) {
                s.push(n - 1);
                out.push(s);
            }
            out
        }
        let size = m.rows().min(m.cols());
        let mut prefix = vec![BigInt::one()];
        for k in 1..=size {
            let mut g = BigInt::zero();
            for rs in subsets(m.rows(), k) {
                for cs in subsets(m.cols(), k) {
                    let sub: Vec<Vec<BigInt>> = rs
                        .iter()
                        .map(|&i| cs.iter().map(|&j| m[(i, j)].clone()).collect())
                        .collect();
                    g = g.gcd(&det(&sub));
                }
            }
            prefix.push(g);
        }
        (1..=size)
            .map(|k| {
                if prefix[k].is_zero() {
                    BigInt::zero()
                } else {
                    &prefix[k] / &prefix[k - 1]
                }
            })
            .collect()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_q(&MatQ::identity(3)), 3);
        assert_eq!(rank_q(&MatQ::zeros(4, 7)), 0);
        assert_eq!(
            rank_q(&MatQ::from_i64_rows(&[vec![1, 2], vec![2, 4]]).unwrap()),
            1
        );
        assert_eq!(
            rank_z(&MatZ::from_i64_rows(&[vec![0, 2, 4], vec![0, 1, 2], vec![1, 0, 0]]).unwrap()),
            2
        );
    }

    #[test]
    fn rank_with_fractions() {
        let m = MatQ::from_vec(
            2,
            2,
            vec![
                BigRational::new(1.into(), 2.into()),
                BigRational::new(1.into(), 3.into()),
                q(3),
                q(2),
            ],
        )
        .unwrap();
        assert_eq!(rank_q(&m), 1);
    }

    #[test]
    fn kernel_examples() {
        assert!(kernel_q(&MatQ::identity(3)).is_empty());
        assert_eq!(kernel_q(&MatQ::zeros(2, 2)).len(), 2);
        let k = kernel_q(&MatQ::from_i64_rows(&[vec![1, 1]]).unwrap());
        assert_eq!(k.len(), 1);
        assert_eq!(k[0][(0, 0)], -k[0][(1, 0)].clone());
        assert!(!k[0][(0, 0)].is_zero());
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let a = MatQ::from_i64_rows(&[vec![1, 1], vec![1, -1]]).unwrap();
        let b = MatQ::from_i64_rows(&[vec![3], vec![1]]).unwrap();
        let x = solve_q(&a, &b).unwrap().unwrap();
        assert_eq!(x[(0, 0)], q(2));
        assert_eq!(x[(1, 0)], q(1));
        let a = MatQ::from_i64_rows(&[vec![1, 1], vec![2, 2]]).unwrap();
        let b = MatQ::from_i64_rows(&[vec![1], vec![3]]).unwrap();
        assert!(solve_q(&a, &b).unwrap().is_none());
    }

    #[test]
    fn snf_examples() {
        let d = snf(&MatZ::from_i64_rows(&[vec![2, 0], vec![0, 3]]).unwrap());
        assert_eq!(d.divisors, ints(&[1, 6]));
        assert_eq!(d.rank, 2);
        assert_eq!(snf(&MatZ::identity(4)).divisors, ints(&[1, 1, 1, 1]));
        let z = snf(&MatZ::zeros(3, 2));
        assert_eq!(z.divisors, ints(&[0, 0]));
        assert_eq!(z.rank, 0);
    }

    #[test]
    fn snf_oracle_agrees_on_diag() {
        let m = MatZ::from_i64_rows(&[vec![2, 0], vec![0, 3]]).unwrap();
        assert_eq!(minor_gcd_divisors(&m), ints(&[1, 6]));
    }

    #[test]
    fn snf_needs_divisibility_fix() {
        // diag(4, 6) -> (2, 12)
        let m = MatZ::from_i64_rows(&[vec![4, 0], vec![0, 6]]).unwrap();
        assert_eq!(snf(&m).divisors, ints(&[2, 12]));
    }

    #[test]
    fn sparse_rank_matches_dense() {
        let dense = MatZ::from_i64_rows(&[
            vec![2, 4, 0, 6],
            vec![1, 2, 0, 3],
            vec![0, 0, 5, 1],
            vec![3, 6, 5, 10],
        ])
        .unwrap();
        let rows = (0..dense.rows()).map(|i| {
            dense
                .row(i)
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.clone()))
                .collect::<Vec<_>>()
        });
        assert_eq!(sparse_rank(rows), rank_z(&dense));
        assert_eq!(rank_z(&dense), 2);
    }

    #[test]
    fn json_roundtrip_uses_strings() {
        let m = MatQ::from_vec(1, 2, vec![BigRational::new((-3).into(), 4.into()), q(5)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":1,"cols":2,"entries":["-3/4","5"]}"#);
        let back: MatQ = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<MatQ>(r#"{"rows":2,"cols":2,"entries":["1"]}"#).is_err());
        assert!(serde_json::from_str::<MatZ>(r#"{"rows":1,"cols":1,"entries":["1/2"]}"#).is_err());
    }

    #[test]
    fn rational_products_are_exact() {
        let a = BigRational::new(7.into(), 13.into());
        assert!((a.clone() * a.recip()).is_one());
    }

    fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = MatZ> {
        proptest::collection::vec(-5i64..=5, rows * cols).prop_map(move |v| {
            MatZ::from_vec(rows, cols, v.into_iter().map(BigInt::from).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn snf_matches_minor_gcd(m in small_matrix(4, 4)) {
            let res = snf(&m);
            prop_assert_eq!(&res.divisors, &minor_gcd_divisors(&m));
        }

        #[test]
        fn snf_divisibility_chain(rows in 1usize..5, cols in 1usize..6, seed in proptest::collection::vec(-9i64..=9, 30)) {
            let m = MatZ::from_fn(rows, cols, |i, j| BigInt::from(seed[(i * cols + j) % seed.len()] * (i as i64 + 1)));
            let res = snf(&m);
            for w in res.divisors.windows(2) {
                prop_assert!(w[1].is_multiple_of(&w[0]) || (w[0].is_zero() && w[1].is_zero()));
            }
            prop_assert_eq!(res.rank, rank_z(&m));
        }

        #[test]
        fn rank_plus_nullity(m in small_matrix(3, 5)) {
            let mq = m.to_rational();
            let ker = kernel_q(&mq);
            prop_assert_eq!(rank_q(&mq) + ker.len(), 5);
            for v in &ker {
                prop_assert!(mq.mul(v).unwrap().is_zero());
            }
        }

        #[test]
        fn sparse_and_dense_rank_agree(m in small_matrix(5, 4)) {
            let rows = (0..m.rows()).map(|i| {
                m.row(i).iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(j, v)| (j, v.clone())).collect::<Vec<_>>()
            });
            prop_assert_eq!(sparse_rank(rows), rank_z(&m));
        }
    }
}
