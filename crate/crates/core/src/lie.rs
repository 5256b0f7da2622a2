//! Lie algebras given by structure constants.
//!
//! `sl_n` uses the basis `E_ij` (`i != j`, lexicographic) followed by
//! `H_i = E_ii - E_{i+1,i+1}`; its structure constants are integers. The graded
//! nilpotent algebra `u_l` has basis `b ⊗ T^d` for `b` in that basis and
//! `1 <= d < l`, with `[X ⊗ T^i, Y ⊗ T^j] = [X, Y] ⊗ T^{i+j}` when `i + j < l`
//! and zero otherwise. This is the bracket forced by the group law on
//! `I + T^i X + ...`: the commutator of `I + T^i X` and `I + T^j Y` is
//! `I + T^{i+j}[X, Y]` modulo higher order.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{rank_q, snf, MatQ, MatZ, SnfResult};
use crate::rep::Weight;

/// Sparse coordinate vector: `(basis index, coefficient)` sorted by index.
pub type SparseVec = Vec<(usize, BigRational)>;

/// Basis vector `sl_n[mat_index] ⊗ T^degree` of `u_l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedBasisVector {
    pub mat_index: usize,
    pub degree: usize,
    pub weight: Weight,
}

/// Failure of antisymmetry or the Jacobi identity on specific basis vectors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StructureViolation {
    pub identity: &'static str,
    pub basis: Vec<usize>,
    pub labels: Vec<String>,
}

/// Finite-dimensional Lie algebra over Q presented by structure constants.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    labels: Vec<String>,
    /// `brackets[i][j]` holds `[b_i, b_j]`.
    brackets: Vec<Vec<SparseVec>>,
    weights: Option<Vec<Weight>>,
    grading: Option<Vec<GradedBasisVector>>,
    sl_rank: Option<usize>,
}

impl LieAlgebra {
    /// Builds from triples `(i, j, k, c)` meaning `[b_i, b_j] += c b_k`, given
    /// for `i < j`; the `j > i` half is filled in by antisymmetry.
    pub fn from_triples(
        labels: Vec<String>,
        triples: impl IntoIterator<Item = (usize, usize, usize, BigRational)>,
    ) -> Result<Self> {
        let dim = labels.len();
        let mut acc: Vec<Vec<BTreeMap<usize, BigRational>>> = vec![vec![BTreeMap::new(); dim]; dim];
        for (i, j, k, c) in triples {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::OutOfRange(format!(
                    "triple ({i}, {j}, {k}) in dim {dim}"
                )));
            }
            if i >= j {
                return Err(Error::OutOfRange(format!(
                    "triple ({i}, {j}, {k}) needs i < j"
                )));
            }
            *acc[i][j].entry(k).or_insert_with(BigRational::zero) += c.clone();
            *acc[j][i].entry(k).or_insert_with(BigRational::zero) -= c;
        }
        let brackets = acc
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|m| m.into_iter().filter(|(_, c)| !c.is_zero()).collect())
                    .collect()
            })
            .collect();
        Ok(LieAlgebra {
            labels,
            brackets,
            weights: None,
            grading: None,
            sl_rank: None,
        })
    }

    pub fn abelian(dim: usize) -> Self {
        let labels = (0..dim).map(|i| format!("x{i}")).collect();
        LieAlgebra::from_triples(labels, []).expect("no triples")
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn bracket_basis(&self, i: usize, j: usize) -> &SparseVec {
        &self.brackets[i][j]
    }

    pub fn weights(&self) -> Option<&[Weight]> {
        self.weights.as_deref()
    }

    pub fn grading(&self) -> Option<&[GradedBasisVector]> {
        self.grading.as_deref()
    }

    /// `n` when this algebra is `sl_n` or some `u_l` over `sl_n`.
    pub fn sl_rank(&self) -> Option<usize> {
        self.sl_rank
    }

    /// T-degree of each basis vector (all zero without a grading).
    pub fn degrees(&self) -> Vec<usize> {
        match &self.grading {
            Some(g) => g.iter().map(|b| b.degree).collect(),
            None => vec![0; self.dim()],
        }
    }

    pub fn is_abelian(&self) -> bool {
        self.brackets
            .iter()
            .all(|row| row.iter().all(Vec::is_empty))
    }

    /// Bracket of two coordinate vectors.
    pub fn bracket(&self, x: &[BigRational], y: &[BigRational]) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.dim()];
        for (i, xi) in x.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
            for (j, yj) in y.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                for (k, c) in &self.brackets[i][j] {
                    out[k.to_owned()] += xi * yj * c;
                }
            }
        }
        out
    }

    fn unit_vector(&self, i: usize) -> Vec<BigRational> {
        let mut v = vec![BigRational::zero(); self.dim()];
        v[i] = BigRational::one();
        v
    }

    pub fn check_antisymmetry(&self) -> std::result::Result<(), StructureViolation> {
        let dim = self.dim();
        for i in 0..dim {
            if !self.brackets[i][i].is_empty() {
                return Err(self.violation("antisymmetry", vec![i, i]));
            }
            for j in i + 1..dim {
                let neg: SparseVec = self.brackets[j][i]
                    .iter()
                    .map(|(k, c)| (*k, -c.clone()))
                    .collect();
                if neg != self.brackets[i][j] {
                    return Err(self.violation("antisymmetry", vec![i, j]));
                }
            }
        }
        Ok(())
    }

    /// `[a,[b,c]] + [b,[c,a]] + [c,[a,b]] = 0` on all basis triples `a < b < c`.
    pub fn check_jacobi(&self) -> std::result::Result<(), StructureViolation> {
        let dim = self.dim();
        for a in 0..dim {
            for b in a + 1..dim {
                for c in b + 1..dim {
                    let ea = self.unit_vector(a);
                    let eb = self.unit_vector(b);
                    let ec = self.unit_vector(c);
                    let t1 = self.bracket(&ea, &self.bracket(&eb, &ec));
                    let t2 = self.bracket(&eb, &self.bracket(&ec, &ea));
                    let t3 = self.bracket(&ec, &self.bracket(&ea, &eb));
                    if t1
                        .iter()
                        .zip(&t2)
                        .zip(&t3)
                        .any(|((x, y), z)| !(x + y + z).is_zero())
                    {
                        return Err(self.violation("jacobi", vec![a, b, c]));
                    }
                }
            }
        }
        Ok(())
    }

    fn violation(&self, identity: &'static str, basis: Vec<usize>) -> StructureViolation {
        let labels = basis.iter().map(|&i| self.labels[i].clone()).collect();
        StructureViolation {
            identity,
            basis,
            labels,
        }
    }

    /// Matrix over Q whose columns are `[b_i, b_j]` for `i < j`.
    pub fn bracket_span_matrix(&self) -> MatQ {
        let dim = self.dim();
        let pairs: Vec<(usize, usize)> = (0..dim)
            .flat_map(|i| (i + 1..dim).map(move |j| (i, j)))
            .collect();
        let mut m = MatQ::zeros(dim, pairs.len());
        for (col, &(i, j)) in pairs.iter().enumerate() {
            for (k, c) in &self.brackets[i][j] {
                m[(*k, col)] = c.clone();
            }
        }
        m
    }

    /// Returns a copy with one structure constant shifted, keeping antisymmetry.
    /// Used to exercise the failure paths of the structural checks.
    pub fn with_perturbed_constant(
        &self,
        i: usize,
        j: usize,
        k: usize,
        delta: BigRational,
    ) -> Self {
        let mut out = self.clone();
        let mut bump = |a: usize, b: usize, d: BigRational| {
            let mut m: BTreeMap<usize, BigRational> = out.brackets[a][b].iter().cloned().collect();
            *m.entry(k).or_insert_with(BigRational::zero) += d;
            out.brackets[a][b] = m.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        };
        bump(i, j, delta.clone());
        bump(j, i, -delta);
        out
    }

    /// Sparse `(i, j, k, value)` triples with `i < j`.
    pub fn triples(&self) -> Vec<(usize, usize, usize, BigRational)> {
        let dim = self.dim();
        let mut out = Vec::new();
        for i in 0..dim {
            for j in i + 1..dim {
                for (k, c) in &self.brackets[i][j] {
                    out.push((i, j, *k, c.clone()));
                }
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct PresentationRepr {
    dim: usize,
    labels: Vec<String>,
    sc: Vec<(usize, usize, usize, String)>,
}

impl Serialize for LieAlgebra {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use crate::exact::Scalar;
        PresentationRepr {
            dim: self.dim(),
            labels: self.labels.clone(),
            sc: self
                .triples()
                .into_iter()
                .map(|(i, j, k, c)| (i, j, k, c.encode()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LieAlgebra {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use crate::exact::Scalar;
        use serde::de::Error as _;
        let repr = PresentationRepr::deserialize(d)?;
        if repr.labels.len() != repr.dim {
            return Err(D::Error::custom("label count differs from dim"));
        }
        let triples = repr
            .sc
            .iter()
            .map(|(i, j, k, v)| BigRational::decode(v).map(|c| (*i, *j, *k, c)))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        LieAlgebra::from_triples(repr.labels, triples).map_err(D::Error::custom)
    }
}

/// Basis of `sl_n` as integer matrices, in the fixed order.
pub fn sln_matrices(n: usize) -> Vec<(String, MatZ)> {
    let mut out = Vec::with_capacity(n * n - 1);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.push((format!("E{}{}", i + 1, j + 1), MatZ::unit(n, i, j)));
            }
        }
    }
    for i in 0..n - 1 {
        let mut h = MatZ::zeros(n, n);
        h[(i, i)] = BigInt::one();
        h[(i + 1, i + 1)] = -BigInt::one();
        out.push((format!("H{}", i + 1), h));
    }
    out
}

/// Integer coordinates of a traceless matrix in the `sl_n` basis.
pub fn sln_coordinates(m: &MatZ) -> Result<Vec<BigInt>> {
    let n = m.rows();
    if !m.is_square() || !m.trace().is_zero() {
        return Err(Error::OutOfRange(
            "sl_n coordinates need a traceless square matrix".into(),
        ));
    }
    let mut coords = Vec::with_capacity(n * n - 1);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                coords.push(m[(i, j)].clone());
            }
        }
    }
    // diag(d) = sum c_i H_i with c_i = d_1 + ... + d_i.
    let mut c = BigInt::zero();
    for i in 0..n - 1 {
        c += &m[(i, i)];
        coords.push(c.clone());
    }
    Ok(coords)
}

fn sln_weights(n: usize) -> Vec<Weight> {
    let mut w = Vec::with_capacity(n * n - 1);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w.push(Weight::root(n, i, j));
            }
        }
    }
    w.extend(std::iter::repeat_n(Weight::zero(n), n - 1));
    w
}

/// `sl_n` over Z (integral structure constants), with adjoint weights attached.
pub fn sln_basis(n: usize) -> Result<LieAlgebra> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("sl_n needs n >= 2, got {n}")));
    }
    let basis = sln_matrices(n);
    let dim = basis.len();
    let mut triples = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            let br = basis[i].1.bracket(&basis[j].1)?;
            for (k, c) in sln_coordinates(&br)?.into_iter().enumerate() {
                if !c.is_zero() {
                    triples.push((i, j, k, BigRational::from_integer(c)));
                }
            }
        }
    }
    let labels = basis.into_iter().map(|(l, _)| l).collect();
    let mut g = LieAlgebra::from_triples(labels, triples)?;
    g.weights = Some(sln_weights(n));
    g.sl_rank = Some(n);
    Ok(g)
}

/// The truncated algebra `u_l = u / u^l` over `sl_n`, of dimension `(n^2-1)(l-1)`.
pub fn build_u(n: usize, l: usize) -> Result<LieAlgebra> {
    if l < 2 {
        return Err(Error::OutOfRange(format!("u_l needs l >= 2, got {l}")));
    }
    let sl = sln_basis(n)?;
    let base = sl.dim();
    let index = |v: usize, d: usize| (d - 1) * base + v;
    let mut labels = Vec::with_capacity(base * (l - 1));
    let mut grading = Vec::with_capacity(base * (l - 1));
    let sl_weights = sl.weights.clone().expect("sl_n carries weights");
    for d in 1..l {
        for (v, w) in sl_weights.iter().enumerate() {
            labels.push(format!("{}T{}", sl.labels[v], d));
            grading.push(GradedBasisVector {
                mat_index: v,
                degree: d,
                weight: w.clone(),
            });
        }
    }
    let mut triples = Vec::new();
    for di in 1..l {
        for dj in 1..l {
            if di + dj >= l {
                continue;
            }
            for a in 0..base {
                for b in 0..base {
                    let (x, y) = (index(a, di), index(b, dj));
                    if x >= y {
                        continue;
                    }
                    for (k, c) in &sl.brackets[a][b] {
                        triples.push((x, y, index(*k, di + dj), c.clone()));
                    }
                }
            }
        }
    }
    let mut u = LieAlgebra::from_triples(labels, triples)?;
    u.weights = Some(grading.iter().map(|g| g.weight.clone()).collect());
    u.grading = Some(grading);
    u.sl_rank = Some(n);
    Ok(u)
}

/// Smith normal form of the integer bracket-span matrix of `sl_n(Z)`.
pub fn commutator_divisors(n: usize) -> Result<SnfResult> {
    let g = sln_basis(n)?;
    let m = g
        .bracket_span_matrix()
        .to_integer()
        .ok_or_else(|| Error::Inconsistent("sl_n structure constants not integral".into()))?;
    Ok(snf(&m))
}

/// Whether the brackets of `sl_n(Z)` span the full integral lattice.
pub fn bracket_surjective_over_z(n: usize) -> Result<bool> {
    let d = commutator_divisors(n)?;
    Ok(d.rank == n * n - 1 && d.all_units())
}

/// `dim g - rank_Q [g, g]`.
pub fn abelianization_dim(g: &LieAlgebra) -> usize {
    g.dim() - rank_q(&g.bracket_span_matrix())
}

/// For graded `u_l`: does `[u_1, u_s]` span all of degree `s + 1` over Q?
pub fn degree_one_generates(u: &LieAlgebra) -> Result<bool> {
    let grading = u.grading().ok_or(Error::MissingWeights)?;
    let max_deg = grading.iter().map(|b| b.degree).max().unwrap_or(0);
    for s in 1..max_deg {
        let target: Vec<usize> = (0..u.dim())
            .filter(|&i| grading[i].degree == s + 1)
            .collect();
        let mut cols = Vec::new();
        for a in (0..u.dim()).filter(|&i| grading[i].degree == 1) {
            for b in (0..u.dim()).filter(|&i| grading[i].degree == s) {
                cols.push(u.bracket_basis(a, b).clone());
            }
        }
        let m = MatQ::from_fn(target.len(), cols.len(), |r, c| {
            cols[c]
                .iter()
                .find(|(k, _)| *k == target[r])
                .map_or_else(BigRational::zero, |(_, v)| v.clone())
        });
        if rank_q(&m) != target.len() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    fn coeff(g: &LieAlgebra, i: usize, j: usize, k: usize) -> BigRational {
        g.bracket_basis(i, j)
            .iter()
            .find(|(idx, _)| *idx == k)
            .map_or_else(BigRational::zero, |(_, c)| c.clone())
    }

    fn idx(g: &LieAlgebra, label: &str) -> usize {
        g.labels().iter().position(|l| l == label).unwrap()
    }

    #[test]
    fn sl2_structure() {
        let g = sln_basis(2).unwrap();
        assert_eq!(g.dim(), 3);
        let (e, f, h) = (idx(&g, "E12"), idx(&g, "E21"), idx(&g, "H1"));
        assert_eq!(g.bracket_basis(e, f), &vec![(h, q(1))]);
        assert_eq!(coeff(&g, h, e, e), q(2));
        assert_eq!(coeff(&g, h, f, f), q(-2));
    }

    #[test]
    fn sl_dims_and_identities() {
        assert_eq!(sln_basis(3).unwrap().dim(), 8);
        let g4 = sln_basis(4).unwrap();
        assert_eq!(g4.dim(), 15);
        assert!(g4.check_antisymmetry().is_ok());
        assert!(g4.check_jacobi().is_ok());
        assert!(sln_basis(1).is_err());
    }

    #[test]
    fn basis_order() {
        let g = sln_basis(3).unwrap();
        let want = ["E12", "E13", "E21", "E23", "E31", "E32", "H1", "H2"];
        assert_eq!(g.labels(), want);
    }

    #[test]
    fn coordinates_roundtrip() {
        let basis = sln_matrices(4);
        for (k, (_, m)) in basis.iter().enumerate() {
            let c = sln_coordinates(m).unwrap();
            for (i, v) in c.iter().enumerate() {
                assert_eq!(*v, BigInt::from(u8::from(i == k)));
            }
        }
        assert!(sln_coordinates(&MatZ::identity(3)).is_err());
    }

    #[test]
    fn commutator_divisor_examples() {
        let d2 = commutator_divisors(2).unwrap();
        let two = BigInt::from(2);
        assert_eq!(d2.divisors, vec![BigInt::one(), two.clone(), two]);
        assert_eq!(d2.torsion_index(), BigInt::from(4));
        for n in [3, 4] {
            let d = commutator_divisors(n).unwrap();
            assert!(d.all_units(), "n = {n}: {:?}", d.divisors);
            assert_eq!(d.rank, n * n - 1);
        }
    }

    #[test]
    fn surjectivity() {
        assert!(!bracket_surjective_over_z(2).unwrap());
        assert!(bracket_surjective_over_z(3).unwrap());
        assert!(bracket_surjective_over_z(5).unwrap());
    }

    #[test]
    fn u_examples() {
        let u = build_u(3, 2).unwrap();
        assert_eq!(u.dim(), 8);
        assert!(u.is_abelian());
        let u = build_u(3, 3).unwrap();
        assert_eq!(u.dim(), 16);
        let (a, b, h) = (idx(&u, "E12T1"), idx(&u, "E21T1"), idx(&u, "H1T2"));
        assert_eq!(u.bracket_basis(a, b), &vec![(h, q(1))]);
        // Degree 2 is central in u_3.
        assert!(u.bracket_basis(h, a).is_empty());
        assert_eq!(build_u(4, 3).unwrap().dim(), 30);
        assert!(build_u(3, 1).is_err());
        assert!(build_u(1, 3).is_err());
    }

    #[test]
    fn u_is_a_lie_algebra() {
        for (n, l) in [(2, 3), (3, 3), (3, 4)] {
            let u = build_u(n, l).unwrap();
            assert!(u.check_antisymmetry().is_ok());
            assert!(u.check_jacobi().is_ok(), "(n, l) = ({n}, {l})");
        }
    }

    #[test]
    fn u_weights_match_sl_weights() {
        let u = build_u(3, 4).unwrap();
        let sl = sln_basis(3).unwrap();
        for g in u.grading().unwrap() {
            assert_eq!(g.weight, sl.weights().unwrap()[g.mat_index]);
        }
    }

    #[test]
    fn abelianization_examples() {
        for l in 2..=4 {
            assert_eq!(abelianization_dim(&build_u(3, l).unwrap()), 8);
        }
        assert_eq!(abelianization_dim(&LieAlgebra::abelian(5)), 5);
        assert_eq!(abelianization_dim(&build_u(4, 3).unwrap()), 15);
        // Over Q the n = 2 defect disappears.
        assert_eq!(abelianization_dim(&build_u(2, 3).unwrap()), 3);
        assert_eq!(abelianization_dim(&sln_basis(2).unwrap()), 0);
    }

    #[test]
    fn lower_central_series_matches_grading() {
        for (n, l) in [(3, 4), (4, 3), (2, 4)] {
            assert!(degree_one_generates(&build_u(n, l).unwrap()).unwrap());
        }
    }

    #[test]
    fn perturbation_breaks_jacobi() {
        let u = build_u(3, 3).unwrap();
        let (a, b, h) = (idx(&u, "E12T1"), idx(&u, "E21T1"), idx(&u, "H1T2"));
        let bad = u.with_perturbed_constant(a, h, b, q(1));
        assert!(bad.check_antisymmetry().is_ok());
        let err = bad.check_jacobi().unwrap_err();
        assert_eq!(err.identity, "jacobi");
    }

    #[test]
    fn presentation_json() {
        let g = sln_basis(2).unwrap();
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(v["dim"], 3);
        assert_eq!(v["labels"][2], "H1");
        let back: LieAlgebra = serde_json::from_value(v).unwrap();
        assert_eq!(back.triples(), g.triples());
    }
}
