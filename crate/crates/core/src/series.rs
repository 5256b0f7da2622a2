//! Matrices over truncated power series rings `Z[T]/T^r` and `Q[T]/T^r`.
//!
//! A [`TruncMat`] is stored as its list of coefficient matrices
//! `X_0, X_1, ..., X_{r-1}` so that `X = X_0 + T X_1 + ... + T^{r-1} X_{r-1}`.
//! The congruence subgroup `K^i` consists of elements with `X_0 = I` and
//! `X_1 = ... = X_{i-1} = 0`; [`TruncMat::filtration_level`] reads off `i`.
//!
//! Laurent polynomial matrices over `Z[t, t^-1]` enter through
//! [`LaurentMat::embed`], the completion map at the ideal `(t - 1)` which
//! sends `t` to `1 + T`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{inverse, MatQ, MatZ, Matrix, Ring, Scalar};

/// Square matrix with entries in a power series ring truncated at `T^r`.
#[derive(Clone, PartialEq, Eq)]
pub struct TruncMat<T> {
    n: usize,
    coeffs: Vec<Matrix<T>>,
}

impl<T: Scalar> fmt::Debug for TruncMat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TruncMat")
            .field("n", &self.n)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

pub type TruncMatZ = TruncMat<BigInt>;
pub type TruncMatQ = TruncMat<BigRational>;

impl<T: Scalar> TruncMat<T> {
    pub fn identity(n: usize, r: usize) -> Self {
        assert!(r >= 1, "truncation order must be at least 1");
        let mut coeffs = vec![Matrix::zeros(n, n); r];
        coeffs[0] = Matrix::identity(n);
        TruncMat { n, coeffs }
    }

    pub fn from_coeffs(coeffs: Vec<Matrix<T>>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or(Error::OutOfRange("truncation order r >= 1".into()))?;
        let n = first.rows();
        if let Some(bad) = coeffs.iter().find(|c| c.rows() != n || c.cols() != n) {
            return Err(Error::DimensionMismatch {
                op: "from_coeffs",
                left: (n, n),
                right: (bad.rows(), bad.cols()),
            });
        }
        Ok(TruncMat { n, coeffs })
    }

    /// `I + c T^k E_ij`; the identity when `k >= r`.
    pub fn elementary(n: usize, r: usize, i: usize, j: usize, k: usize, c: T) -> Self {
        assert!(
            i != j && i < n && j < n,
            "elementary matrix needs distinct indices below n"
        );
        let mut x = Self::identity(n, r);
        if k < r {
            x.coeffs[k][(i, j)] = x.coeffs[k][(i, j)].clone() + c;
        }
        x
    }

    /// `I + T^k M`; the identity when `k >= r`.
    pub fn one_plus(m: &Matrix<T>, k: usize, r: usize) -> Result<Self> {
        let n = m.rows();
        if !m.is_square() {
            return Err(Error::Shape("one_plus needs a square matrix".into()));
        }
        let mut x = Self::identity(n, r);
        if k < r {
            x.coeffs[k] = x.coeffs[k].add(m)?;
        }
        Ok(x)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.coeffs.len()
    }

    pub fn ring(&self) -> Ring {
        T::RING
    }

    pub fn coeffs(&self) -> &[Matrix<T>] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &Matrix<T> {
        &self.coeffs[k]
    }

    pub fn is_identity(&self) -> bool {
        self.coeffs[0].is_identity() && self.coeffs[1..].iter().all(Matrix::is_zero)
    }

    /// The same element viewed modulo `T^r` for a smaller `r`.
    pub fn truncate(&self, r: usize) -> Self {
        assert!(r >= 1 && r <= self.r());
        TruncMat {
            n: self.n,
            coeffs: self.coeffs[..r].to_vec(),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                op: "tm_mul",
                left: (self.n, self.n),
                right: (other.n, other.n),
            });
        }
        if self.r() != other.r() {
            return Err(Error::OrderMismatch {
                left: self.r(),
                right: other.r(),
            });
        }
        Ok(())
    }

    /// Cauchy product truncated at `T^r`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let r = self.r();
        let mut out = vec![Matrix::zeros(self.n, self.n); r];
        for (a, ca) in self.coeffs.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (b, cb) in other.coeffs[..r - a].iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                let prod = ca.mul(cb)?;
                out[a + b] = out[a + b].add(&prod)?;
            }
        }
        Ok(TruncMat {
            n: self.n,
            coeffs: out,
        })
    }

    /// Inverse as `(I + N)^{-1} X_0^{-1}` with `N = X_0^{-1}(X - X_0)`
    /// nilpotent, expanded as a finite geometric series.
    pub fn inv(&self) -> Result<Self> {
        let a0_inv = inverse(&self.coeffs[0])?.ok_or(Error::NotInvertible)?;
        let r = self.r();
        let mut nil = Self::identity(self.n, r);
        nil.coeffs[0] = Matrix::zeros(self.n, self.n);
        for k in 1..r {
            nil.coeffs[k] = a0_inv.mul(&self.coeffs[k])?;
        }
        // sum_{k < r} (-N)^k
        let neg = nil.scale(&(-T::one()));
        let mut term = Self::identity(self.n, r);
        let mut sum = Self::identity(self.n, r);
        for _ in 1..r {
            term = term.mul(&neg)?;
            sum = sum.add(&term)?;
        }
        let mut a0_series = Self::identity(self.n, r);
        a0_series.coeffs[0] = a0_inv;
        sum.mul(&a0_series)
    }

    /// `X^m` by repeated squaring; negative `m` inverts first.
    pub fn pow(&self, m: i64) -> Result<Self> {
        let mut base = if m < 0 { self.inv()? } else { self.clone() };
        let mut e = m.unsigned_abs();
        let mut acc = Self::identity(self.n, self.r());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Group commutator `x y x^{-1} y^{-1}`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.mul(&self.inv()?)?.mul(&other.inv()?)
    }

    /// Largest `i <= r` with `X = I mod T^i`.
    pub fn filtration_level(&self) -> Result<usize> {
        if !self.coeffs[0].is_identity() {
            return Err(Error::NotUnipotent);
        }
        Ok((1..self.r())
            .find(|&k| !self.coeffs[k].is_zero())
            .unwrap_or(self.r()))
    }

    /// Leading-coefficient map on `K^i`: the coefficient of `T^i`.
    ///
    /// Requires `1 <= i < r`.
    pub fn rho(&self, i: usize) -> Result<Matrix<T>> {
        if i == 0 || i >= self.r() {
            return Err(Error::OutOfRange(format!(
                "degree {i} outside 1..{}",
                self.r()
            )));
        }
        let level = self.filtration_level()?;
        if level < i {
            return Err(Error::LevelTooSmall { level, degree: i });
        }
        Ok(self.coeffs[i].clone())
    }

    /// Determinant as a truncated power series (Leibniz expansion).
    pub fn det(&self) -> Vec<T> {
        let r = self.r();
        let entry = |i: usize, j: usize| -> Vec<T> {
            self.coeffs.iter().map(|c| c[(i, j)].clone()).collect()
        };
        let mut total = vec![T::zero(); r];
        for (perm, sign) in permutations(self.n) {
            let mut term = vec![T::zero(); r];
            term[0] = T::one();
            for (i, &j) in perm.iter().enumerate() {
                term = series_mul(&term, &entry(i, j));
                if term.iter().all(Zero::is_zero) {
                    break;
                }
            }
            for (t, v) in total.iter_mut().zip(term) {
                let acc = std::mem::replace(t, T::zero());
                *t = if sign > 0 { acc + v } else { acc - v };
            }
        }
        total
    }

    /// Whether the determinant is `1 mod T^r`.
    pub fn is_special_linear(&self) -> bool {
        let d = self.det();
        d[0].is_one() && d[1..].iter().all(Zero::is_zero)
    }

    pub fn to_rational(&self) -> TruncMatQ {
        TruncMat {
            n: self.n,
            coeffs: self.coeffs.iter().map(Matrix::to_rational).collect(),
        }
    }

    fn scale(&self, c: &T) -> Self {
        TruncMat {
            n: self.n,
            coeffs: self.coeffs.iter().map(|m| m.scale(c)).collect(),
        }
    }

    fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(TruncMat { n: self.n, coeffs })
    }
}

impl TruncMatQ {
    pub fn to_integer(&self) -> Option<TruncMatZ> {
        let coeffs = self
            .coeffs
            .iter()
            .map(MatQ::to_integer)
            .collect::<Option<Vec<_>>>()?;
        Some(TruncMat { n: self.n, coeffs })
    }

    /// Unique `m`-th root congruent to `I mod T`.
    ///
    /// Coefficients are solved in increasing degree: the `T^i` coefficient of
    /// `X^m` is `m X_i + p(X_1, ..., X_{i-1})`, so `X_i = (Y_i - p) / m`.
    pub fn nth_root(&self, m: i64) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroExponent);
        }
        if !self.coeffs[0].is_identity() {
            return Err(Error::NotUnipotent);
        }
        let r = self.r();
        let m_big = BigInt::from(m);
        let mut x = Self::identity(self.n, r);
        for i in 1..r {
            // X truncated at T^{i+1} with X_i still zero gives p in degree i.
            let partial = x.truncate(i + 1).pow(m)?;
            let diff = self.coeffs[i].sub(&partial.coeffs[i])?;
            x.coeffs[i] = diff.map(|e| e.div_int(&m_big).expect("nonzero divisor"));
        }
        Ok(x)
    }

    /// `log(X) = sum_{k>=1} (-1)^{k+1} N^k / k` with `N = X - I`.
    pub fn log_unipotent(&self) -> Result<Self> {
        if !self.coeffs[0].is_identity() {
            return Err(Error::NotUnipotent);
        }
        let r = self.r();
        let mut nil = self.clone();
        nil.coeffs[0] = MatQ::zeros(self.n, self.n);
        let mut out = nil.zero_like();
        let mut power = nil.clone();
        for k in 1..r {
            let c = BigRational::new(if k % 2 == 1 { 1 } else { -1 }.into(), BigInt::from(k));
            out = out.add(&power.scale(&c))?;
            power = power.mul(&nil)?;
        }
        Ok(out)
    }

    /// `exp(M) = sum_k M^k / k!` for `M` with zero constant term.
    pub fn exp_nilpotent(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::OutOfRange("exp needs a zero constant term".into()));
        }
        let r = self.r();
        let mut out = Self::identity(self.n, r);
        let mut term = Self::identity(self.n, r);
        for k in 1..r {
            term = term
                .mul(self)?
                .scale(&BigRational::new(BigInt::one(), BigInt::from(k)));
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Root computed independently as `exp(log(Y) / m)`.
    pub fn nth_root_via_log(&self, m: i64) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroExponent);
        }
        let l = self.log_unipotent()?;
        l.scale(&BigRational::new(BigInt::one(), BigInt::from(m)))
            .exp_nilpotent()
    }

    fn zero_like(&self) -> Self {
        TruncMat {
            n: self.n,
            coeffs: vec![MatQ::zeros(self.n, self.n); self.r()],
        }
    }
}

fn series_mul<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let r = a.len();
    let mut out = vec![T::zero(); r];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b[..r - i].iter().enumerate() {
            if !y.is_zero() {
                let acc = std::mem::replace(&mut out[i + j], T::zero());
                out[i + j] = acc + x.clone() * y.clone();
            }
        }
    }
    out
}

/// All permutations of `0..n` with their signs (Heap's algorithm).
fn permutations(n: usize) -> Vec<(Vec<usize>, i8)> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = vec![(perm.clone(), 1)];
    let mut c = vec![0usize; n];
    let mut sign = 1i8;
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            out.push((perm.clone(), sign));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct TruncMatRepr<T: Scalar> {
    n: usize,
    r: usize,
    ring: Ring,
    #[serde(bound = "T: Scalar")]
    coeffs: Vec<Matrix<T>>,
}

impl<T: Scalar> Serialize for TruncMat<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TruncMatRepr {
            n: self.n,
            r: self.r(),
            ring: T::RING,
            coeffs: self.coeffs.clone(),
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for TruncMat<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = TruncMatRepr::<T>::deserialize(d)?;
        if repr.ring != T::RING {
            return Err(D::Error::custom(format!(
                "expected ring {}, found {}",
                T::RING,
                repr.ring
            )));
        }
        if repr.coeffs.len() != repr.r {
            return Err(D::Error::custom("coefficient count differs from r"));
        }
        let x = TruncMat::from_coeffs(repr.coeffs).map_err(D::Error::custom)?;
        if x.n != repr.n {
            return Err(D::Error::custom("coefficient size differs from n"));
        }
        Ok(x)
    }
}

/// An element of `K^i(Z[T]/T^r)` with `rho_i = m`, for traceless integral `m`.
///
/// Off-diagonal entries come from elementary factors `I + m_ab T^i E_ab`.
/// For `H_k` we conjugate `I + T^i E_{k+1,k}` by the constant
/// `I + E_{k,k+1}`, whose leading term is `H_k - E_{k,k+1} + E_{k+1,k}`,
/// and cancel the off-diagonal part with two more elementary factors.
pub fn lift_traceless(m: &MatZ, i: usize, r: usize) -> Result<TruncMatZ> {
    let n = m.rows();
    if !m.is_square() || !m.trace().is_zero() {
        return Err(Error::OutOfRange(
            "lift needs a traceless square matrix".into(),
        ));
    }
    if i == 0 || i >= r {
        return Err(Error::OutOfRange(format!("degree {i} outside 1..{r}")));
    }
    let mut x = TruncMatZ::identity(n, r);
    for a in 0..n {
        for b in 0..n {
            if a != b && !m[(a, b)].is_zero() {
                x = x.mul(&TruncMat::elementary(n, r, a, b, i, m[(a, b)].clone()))?;
            }
        }
    }
    let coords = crate::lie::sln_coordinates(m)?;
    let h_coords = &coords[n * (n - 1)..];
    for (k, c) in h_coords.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let g = TruncMatZ::elementary(n, r, k, k + 1, 0, BigInt::one());
        let lower = TruncMatZ::elementary(n, r, k + 1, k, i, BigInt::one());
        let h = g
            .mul(&lower)?
            .mul(&g.inv()?)?
            .mul(&TruncMatZ::elementary(n, r, k, k + 1, i, BigInt::one()))?
            .mul(&TruncMatZ::elementary(n, r, k + 1, k, i, -BigInt::one()))?;
        let e: i64 = c
            .try_into()
            .map_err(|_| Error::OutOfRange("coefficient too large".into()))?;
        x = x.mul(&h.pow(e)?)?;
    }
    Ok(x)
}

/// Laurent polynomial in `t` with integer coefficients.
pub type LaurentPoly = BTreeMap<i64, BigInt>;

/// Square matrix over `Z[t, t^-1]`, stored as exponent -> coefficient matrix.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LaurentMat {
    n: usize,
    coeffs: BTreeMap<i64, MatZ>,
}

impl LaurentMat {
    pub fn identity(n: usize) -> Self {
        LaurentMat {
            n,
            coeffs: BTreeMap::from([(0, MatZ::identity(n))]),
        }
    }

    pub fn from_coeffs(n: usize, coeffs: BTreeMap<i64, MatZ>) -> Result<Self> {
        if let Some(bad) = coeffs.values().find(|c| c.rows() != n || c.cols() != n) {
            return Err(Error::DimensionMismatch {
                op: "laurent",
                left: (n, n),
                right: (bad.rows(), bad.cols()),
            });
        }
        let mut m = LaurentMat { n, coeffs };
        m.prune();
        Ok(m)
    }

    /// `I + c t^e E_ij`.
    pub fn elementary(n: usize, i: usize, j: usize, e: i64, c: i64) -> Self {
        assert!(i != j && i < n && j < n);
        let mut m = Self::identity(n);
        let slot = m.coeffs.entry(e).or_insert_with(|| MatZ::zeros(n, n));
        slot[(i, j)] += BigInt::from(c);
        m.prune();
        m
    }

    /// Diagonal matrix with `t` at `i`, `t^-1` at `j`, and 1 elsewhere.
    pub fn diag_t(n: usize, i: usize, j: usize) -> Self {
        assert!(i != j && i < n && j < n);
        let mut coeffs = BTreeMap::new();
        let mut c0 = MatZ::identity(n);
        c0[(i, i)] = BigInt::zero();
        c0[(j, j)] = BigInt::zero();
        coeffs.insert(0, c0);
        coeffs.insert(1, MatZ::unit(n, i, i));
        coeffs.insert(-1, MatZ::unit(n, j, j));
        LaurentMat { n, coeffs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, MatZ> {
        &self.coeffs
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, m| !m.is_zero());
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                op: "laurent_mul",
                left: (self.n, self.n),
                right: (other.n, other.n),
            });
        }
        let mut out: BTreeMap<i64, MatZ> = BTreeMap::new();
        for (ea, a) in &self.coeffs {
            for (eb, b) in &other.coeffs {
                let p = a.mul(b)?;
                let slot = out
                    .entry(ea + eb)
                    .or_insert_with(|| MatZ::zeros(self.n, self.n));
                *slot = slot.add(&p)?;
            }
        }
        let mut m = LaurentMat {
            n: self.n,
            coeffs: out,
        };
        m.prune();
        Ok(m)
    }

    pub fn det(&self) -> LaurentPoly {
        let entry = |i: usize, j: usize| -> LaurentPoly {
            self.coeffs
                .iter()
                .filter(|(_, m)| !m[(i, j)].is_zero())
                .map(|(&e, m)| (e, m[(i, j)].clone()))
                .collect()
        };
        let mut total = LaurentPoly::new();
        for (perm, sign) in permutations(self.n) {
            let mut term = LaurentPoly::from([(0, BigInt::one())]);
            for (i, &j) in perm.iter().enumerate() {
                let f = entry(i, j);
                let mut next = LaurentPoly::new();
                for (ea, a) in &term {
                    for (eb, b) in &f {
                        *next.entry(ea + eb).or_insert_with(BigInt::zero) += a * b;
                    }
                }
                term = next;
            }
            for (e, v) in term {
                let slot = total.entry(e).or_insert_with(BigInt::zero);
                if sign > 0 {
                    *slot += v
                } else {
                    *slot -= v
                }
            }
        }
        total.retain(|_, v| !v.is_zero());
        total
    }

    pub fn is_special_linear(&self) -> bool {
        let d = self.det();
        d.len() == 1 && d.get(&0).is_some_and(One::is_one)
    }

    /// Image in `SL_n(Z[T]/T^r)` under `t -> 1 + T`.
    pub fn embed(&self, r: usize) -> TruncMatZ {
        let mut coeffs = vec![MatZ::zeros(self.n, self.n); r];
        for (&e, m) in &self.coeffs {
            for (k, b) in one_plus_t_power(e, r).into_iter().enumerate() {
                if !b.is_zero() {
                    coeffs[k].add_scaled_assign(&b, m).expect("same shape");
                }
            }
        }
        TruncMat { n: self.n, coeffs }
    }

    /// `sigma_i`: the coefficient of `(t - 1)^i` for an element of `K^i`.
    pub fn sigma(&self, i: usize) -> Result<MatZ> {
        self.embed(i + 1).rho(i)
    }
}

/// Coefficients of `(1 + T)^e mod T^r` for any integer `e`:
/// the generalized binomial `C(e, k) = e (e-1) ... (e-k+1) / k!`.
pub fn one_plus_t_power(e: i64, r: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(r);
    let mut c = BigInt::one();
    for k in 0..r {
        out.push(c.clone());
        c = c * BigInt::from(e - k as i64) / BigInt::from(k as i64 + 1);
    }
    out
}

/// Seeded source of test elements built from elementary matrices.
pub struct ElementSampler {
    rng: ChaCha8Rng,
    n: usize,
    r: usize,
}

impl ElementSampler {
    pub fn new(seed: u64, n: usize, r: usize) -> Self {
        assert!(n >= 2 && r >= 1);
        ElementSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n,
            r,
        }
    }

    fn index_pair(&mut self) -> (usize, usize) {
        let i = self.rng.gen_range(0..self.n);
        let mut j = self.rng.gen_range(0..self.n - 1);
        if j >= i {
            j += 1;
        }
        (i, j)
    }

    fn nonzero_small(&mut self, bound: i64) -> i64 {
        let v = self.rng.gen_range(1..=bound);
        if self.rng.gen_bool(0.5) {
            v
        } else {
            -v
        }
    }

    /// Conjugates by a random constant elementary matrix from `SL_n(Z)`.
    fn conjugate<T: Scalar>(&mut self, x: TruncMat<T>) -> TruncMat<T> {
        let (i, j) = self.index_pair();
        let c = T::from_i64(self.nonzero_small(2));
        let g = TruncMat::elementary(self.n, self.r, i, j, 0, c);
        g.mul(&x)
            .and_then(|y| y.mul(&g.inv()?))
            .expect("compatible shapes")
    }

    /// Element of `K^level(Z[T]/T^r)`; exactly at `level` when `level < r`.
    pub fn integral(&mut self, level: usize) -> TruncMatZ {
        assert!(level >= 1);
        let mut x = TruncMatZ::identity(self.n, self.r);
        if level >= self.r {
            return x;
        }
        loop {
            let factors = self.rng.gen_range(2..=5);
            for f in 0..factors {
                let (i, j) = self.index_pair();
                let k = if f == 0 {
                    level
                } else {
                    self.rng.gen_range(level..self.r)
                };
                let c = BigInt::from(self.nonzero_small(2));
                x = x
                    .mul(&TruncMat::elementary(self.n, self.r, i, j, k, c))
                    .expect("same shape");
            }
            if self.rng.gen_bool(0.5) {
                x = self.conjugate(x);
            }
            if x.filtration_level().expect("unipotent") == level {
                return x;
            }
        }
    }

    /// Random element with a level drawn uniformly from `1..r`.
    pub fn integral_any(&mut self) -> (TruncMatZ, usize) {
        let level = self.rng.gen_range(1..self.r.max(2));
        (self.integral(level.min(self.r)), level)
    }

    /// Unipotent element over Q with small denominators.
    pub fn rational_unipotent(&mut self) -> TruncMatQ {
        let mut x = TruncMatQ::identity(self.n, self.r);
        if self.r == 1 {
            return x;
        }
        let factors = self.rng.gen_range(2..=5);
        for _ in 0..factors {
            let (i, j) = self.index_pair();
            let k = self.rng.gen_range(1..self.r);
            let num = self.nonzero_small(3);
            let den = self.rng.gen_range(1..=4);
            let c = BigRational::new(num.into(), BigInt::from(den));
            x = x
                .mul(&TruncMat::elementary(self.n, self.r, i, j, k, c))
                .expect("same shape");
        }
        if self.rng.gen_bool(0.5) {
            x = self.conjugate(x);
        }
        x
    }

    /// Product of elementary Laurent matrices and `diag(t, t^-1)` factors.
    pub fn laurent(&mut self) -> LaurentMat {
        let mut y = LaurentMat::identity(self.n);
        let factors = self.rng.gen_range(1..=4);
        for _ in 0..factors {
            let (i, j) = self.index_pair();
            let g = if self.rng.gen_bool(0.25) {
                LaurentMat::diag_t(self.n, i, j)
            } else {
                let e = self.rng.gen_range(-2..=2);
                let c = self.nonzero_small(2);
                LaurentMat::elementary(self.n, i, j, e, c)
            };
            y = y.mul(&g).expect("same shape");
        }
        y
    }

    pub fn exponent(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn e<T: Scalar>(n: usize, i: usize, j: usize) -> Matrix<T> {
        Matrix::unit(n, i, j)
    }

    fn series<T: Scalar>(n: usize, terms: &[Matrix<T>]) -> TruncMat<T> {
        let _ = n;
        TruncMat::from_coeffs(terms.to_vec()).unwrap()
    }

    #[test]
    fn mul_of_two_elementaries() {
        let n = 3;
        let a = TruncMatZ::elementary(n, 3, 0, 1, 1, z(1));
        let b = TruncMatZ::elementary(n, 3, 1, 0, 1, z(1));
        let got = a.mul(&b).unwrap();
        let e12: MatZ = e(n, 0, 1);
        let e21: MatZ = e(n, 1, 0);
        let want = series(
            n,
            &[
                MatZ::identity(n),
                e12.add(&e21).unwrap(),
                e12.mul(&e21).unwrap(),
            ],
        );
        assert_eq!(got, want);
    }

    #[test]
    fn mul_identity_and_cancellation() {
        let x = TruncMatZ::elementary(3, 4, 0, 2, 1, z(5));
        assert_eq!(x.mul(&TruncMatZ::identity(3, 4)).unwrap(), x);
        for r in 1..6 {
            let a = TruncMatZ::elementary(3, r, 0, 1, 1, z(1));
            let b = TruncMatZ::elementary(3, r, 0, 1, 1, z(-1));
            assert!(a.mul(&b).unwrap().is_identity());
        }
    }

    #[test]
    fn mul_rejects_mismatch() {
        let a = TruncMatZ::identity(3, 3);
        assert!(matches!(
            a.mul(&TruncMatZ::identity(3, 4)),
            Err(Error::OrderMismatch { .. })
        ));
        assert!(matches!(
            a.mul(&TruncMatZ::identity(2, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inverse_examples() {
        let x = TruncMatZ::elementary(3, 3, 0, 1, 1, z(1));
        assert_eq!(
            x.inv().unwrap(),
            TruncMatZ::elementary(3, 3, 0, 1, 1, z(-1))
        );
        assert!(TruncMatZ::identity(3, 4).inv().unwrap().is_identity());

        let h = MatZ::from_i64_rows(&[vec![1, 0, 0], vec![0, -1, 0], vec![0, 0, 0]]).unwrap();
        let x = TruncMatZ::one_plus(&h, 1, 3).unwrap();
        let want = series(3, &[MatZ::identity(3), h.scale(&z(-1)), h.mul(&h).unwrap()]);
        assert_eq!(x.inv().unwrap(), want);
    }

    #[test]
    fn inverse_needs_unit_constant_term() {
        let mut c0 = MatZ::identity(2);
        c0[(0, 0)] = z(2);
        let x = TruncMatZ::from_coeffs(vec![c0, MatZ::zeros(2, 2)]).unwrap();
        assert_eq!(x.inv(), Err(Error::NotInvertible));
        // Over Q the same constant term is fine.
        assert!(x.to_rational().inv().is_ok());
    }

    #[test]
    fn inverse_with_nonidentity_constant_term() {
        let g = TruncMatZ::elementary(3, 4, 1, 2, 0, z(3));
        let x = g.mul(&TruncMatZ::elementary(3, 4, 0, 2, 1, z(2))).unwrap();
        assert!(x.mul(&x.inv().unwrap()).unwrap().is_identity());
        assert!(x.inv().unwrap().mul(&x).unwrap().is_identity());
    }

    #[test]
    fn filtration_level_examples() {
        let x = TruncMatZ::elementary(3, 4, 0, 2, 2, z(1));
        assert_eq!(x.filtration_level().unwrap(), 2);
        assert_eq!(TruncMatZ::identity(3, 5).filtration_level().unwrap(), 5);
        let g = TruncMatZ::elementary(3, 4, 0, 2, 0, z(1));
        assert_eq!(g.filtration_level(), Err(Error::NotUnipotent));
    }

    #[test]
    fn commutator_of_level_one_elements() {
        let a = TruncMatZ::elementary(3, 4, 0, 1, 1, z(1));
        let b = TruncMatZ::elementary(3, 4, 1, 2, 1, z(1));
        let c = a.commutator(&b).unwrap();
        assert!(c.filtration_level().unwrap() >= 2);
        // [I + T E12, I + T E23] = I + T^2 E13 exactly.
        assert_eq!(c, TruncMatZ::elementary(3, 4, 0, 2, 2, z(1)));
    }

    #[test]
    fn rho_examples() {
        let x = TruncMatZ::elementary(3, 3, 0, 1, 1, z(1));
        assert_eq!(x.rho(1).unwrap(), e(3, 0, 1));
        let y = TruncMatZ::elementary(3, 3, 1, 0, 1, z(1));
        let xy = x.mul(&y).unwrap();
        assert_eq!(
            xy.rho(1).unwrap(),
            e::<BigInt>(3, 0, 1).add(&e(3, 1, 0)).unwrap()
        );

        let h = MatZ::from_i64_rows(&[vec![1, 0, 0], vec![0, -1, 0], vec![0, 0, 0]]).unwrap();
        let m = MatZ::from_i64_rows(&[vec![0, 4, 1], vec![2, 0, 0], vec![7, 0, 0]]).unwrap();
        let x = series(3, &[MatZ::identity(3), MatZ::zeros(3, 3), h.clone(), m]);
        assert_eq!(x.rho(2).unwrap(), h);
        assert_eq!(
            x.rho(3),
            Err(Error::LevelTooSmall {
                level: 2,
                degree: 3
            })
        );
        assert!(matches!(x.rho(4), Err(Error::OutOfRange(_))));
        assert_eq!(x.rho(1).unwrap(), MatZ::zeros(3, 3));
        let lvl3 = TruncMatZ::elementary(3, 5, 0, 1, 3, z(1));
        assert_eq!(lvl3.filtration_level().unwrap(), 3);
        let lvl2 = TruncMatZ::elementary(3, 5, 0, 1, 2, z(1));
        assert_eq!(
            lvl2.rho(3),
            Err(Error::LevelTooSmall {
                level: 2,
                degree: 3
            })
        );
    }

    #[test]
    fn laurent_diag_embedding() {
        let y = LaurentMat::diag_t(3, 0, 1);
        assert!(y.is_special_linear());
        let img = y.embed(3);
        let want = series(
            3,
            &[
                MatZ::identity(3),
                MatZ::from_i64_rows(&[vec![1, 0, 0], vec![0, -1, 0], vec![0, 0, 0]]).unwrap(),
                MatZ::from_i64_rows(&[vec![0, 0, 0], vec![0, 1, 0], vec![0, 0, 0]]).unwrap(),
            ],
        );
        assert_eq!(img, want);
        assert!(LaurentMat::identity(3).embed(4).is_identity());
    }

    #[test]
    fn laurent_sigma_matches_rho() {
        // I + (t - 1) E12
        let mut coeffs = BTreeMap::new();
        let mut c0 = MatZ::identity(3);
        c0[(0, 1)] = z(-1);
        coeffs.insert(0, c0);
        coeffs.insert(1, MatZ::unit(3, 0, 1));
        let y = LaurentMat::from_coeffs(3, coeffs).unwrap();
        let img = y.embed(3);
        assert_eq!(img, TruncMatZ::elementary(3, 3, 0, 1, 1, z(1)));
        assert_eq!(y.sigma(1).unwrap(), MatZ::unit(3, 0, 1));
        assert_eq!(img.rho(1).unwrap(), y.sigma(1).unwrap());
    }

    #[test]
    fn one_plus_t_powers() {
        assert_eq!(one_plus_t_power(-1, 4), vec![z(1), z(-1), z(1), z(-1)]);
        assert_eq!(one_plus_t_power(3, 5), vec![z(1), z(3), z(3), z(1), z(0)]);
        assert_eq!(one_plus_t_power(-2, 4), vec![z(1), z(-2), z(3), z(-4)]);
    }

    #[test]
    fn nth_root_examples() {
        let y = TruncMatQ::elementary(3, 4, 0, 1, 1, q(1, 1));
        assert_eq!(
            y.nth_root(2).unwrap(),
            TruncMatQ::elementary(3, 4, 0, 1, 1, q(1, 2))
        );

        let h = MatQ::from_i64_rows(&[vec![1, 0, 0], vec![0, -1, 0], vec![0, 0, 0]]).unwrap();
        let y = TruncMatQ::one_plus(&h, 1, 3).unwrap();
        let h2 = h.mul(&h).unwrap();
        let want = series(
            3,
            &[MatQ::identity(3), h.scale(&q(1, 2)), h2.scale(&q(-1, 8))],
        );
        let root = y.nth_root(2).unwrap();
        assert_eq!(root, want);
        assert_eq!(root.pow(2).unwrap(), y);
        assert_eq!(y.nth_root(1).unwrap(), y);
        assert_eq!(y.nth_root(0), Err(Error::ZeroExponent));
    }

    #[test]
    fn negative_root() {
        let mut s = ElementSampler::new(3, 3, 4);
        let y = s.rational_unipotent();
        let x = y.nth_root(-3).unwrap();
        assert_eq!(x.pow(-3).unwrap(), y);
    }

    #[test]
    fn pow_examples() {
        let x = TruncMatZ::elementary(3, 4, 0, 1, 1, z(1));
        assert_eq!(
            x.pow(3).unwrap(),
            TruncMatZ::elementary(3, 4, 0, 1, 1, z(3))
        );
        assert!(x.pow(0).unwrap().is_identity());
        assert_eq!(
            x.pow(-2).unwrap(),
            TruncMatZ::elementary(3, 4, 0, 1, 1, z(-2))
        );
    }

    #[test]
    fn det_of_generators() {
        let mut s = ElementSampler::new(11, 3, 4);
        for _ in 0..10 {
            assert!(s.integral(1).is_special_linear());
            assert!(s.laurent().is_special_linear());
        }
        let mut c0 = MatZ::identity(2);
        c0[(0, 0)] = z(2);
        let x = TruncMatZ::from_coeffs(vec![c0, MatZ::zeros(2, 2)]).unwrap();
        assert!(!x.is_special_linear());
    }

    #[test]
    fn json_shape() {
        let x = TruncMatZ::elementary(2, 2, 0, 1, 1, z(-3));
        let v = serde_json::to_value(&x).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["r"], 2);
        assert_eq!(v["ring"], "Int");
        assert_eq!(v["coeffs"][1]["entries"][1], "-3");
        let back: TruncMatZ = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_value::<TruncMatQ>(v).is_err());

        let y = LaurentMat::diag_t(2, 0, 1);
        let v = serde_json::to_value(&y).unwrap();
        assert!(v["coeffs"]["-1"].is_object());
        let back: LaurentMat = serde_json::from_value(v).unwrap();
        assert_eq!(back, y);
    }

    #[test]
    fn lift_hits_every_traceless_matrix() {
        let m = MatZ::from_i64_rows(&[vec![2, -1, 3], vec![0, -5, 1], vec![4, 2, 3]]).unwrap();
        for i in 1..4 {
            let x = lift_traceless(&m, i, 4).unwrap();
            assert!(x.is_special_linear());
            assert_eq!(x.filtration_level().unwrap(), i);
            assert_eq!(x.rho(i).unwrap(), m);
        }
        assert!(lift_traceless(&MatZ::identity(3), 1, 4).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn power_composition(seed in any::<u64>()) {
            let mut s = ElementSampler::new(seed, 3, 4);
            let x = s.integral(1);
            prop_assert_eq!(x.pow(2).unwrap().pow(3).unwrap(), x.pow(6).unwrap());
        }

        #[test]
        fn commutator_levels_add(seed in any::<u64>()) {
            let mut s = ElementSampler::new(seed, 3, 5);
            let (x, i) = s.integral_any();
            let (y, j) = s.integral_any();
            let c = x.commutator(&y).unwrap();
            prop_assert!(c.filtration_level().unwrap() >= (i + j).min(5));
        }

        #[test]
        fn rho_is_additive_and_traceless(seed in any::<u64>(), i in 1usize..4) {
            let mut s = ElementSampler::new(seed, 3, 4);
            let x = s.integral(i);
            let y = s.integral(i);
            let sum = x.rho(i).unwrap().add(&y.rho(i).unwrap()).unwrap();
            prop_assert_eq!(x.mul(&y).unwrap().rho(i).unwrap(), sum);
            prop_assert!(x.rho(i).unwrap().trace().is_zero());
        }

        #[test]
        fn roots_agree_across_methods(seed in any::<u64>(), m in 2i64..7) {
            let mut s = ElementSampler::new(seed, 3, 5);
            let y = s.rational_unipotent();
            let a = y.nth_root(m).unwrap();
            prop_assert_eq!(&a, &y.nth_root_via_log(m).unwrap());
            prop_assert_eq!(a.pow(m).unwrap(), y);
        }

        #[test]
        fn embed_is_multiplicative(seed in any::<u64>()) {
            let mut s = ElementSampler::new(seed, 3, 4);
            let a = s.laurent();
            let b = s.laurent();
            let lhs = a.mul(&b).unwrap().embed(4);
            prop_assert_eq!(lhs, a.embed(4).mul(&b.embed(4)).unwrap());
        }
    }
}
