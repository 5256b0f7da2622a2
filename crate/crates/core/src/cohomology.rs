//! Chevalley–Eilenberg cohomology with trivial rational coefficients.
//!
//! Cochains `Λ^k g*` have the basis `e_S*` for `k`-subsets `S`, indexed in
//! colex order, which is the combinatorial number system
//! `rank(s_0 < ... < s_{k-1}) = sum_i C(s_i, i + 1)`. The differential is
//!
//! ```text
//! (dφ)(x_0, ..., x_k) = sum_{a<b} (-1)^{a+b} φ([x_a, x_b], x_0, ..., x̂_a, ..., x̂_b, ..., x_k).
//! ```
//!
//! When the algebra carries torus weights (and optionally a T-degree), `d`
//! preserves both, so the complex splits into independent blocks keyed by
//! `(weight, degree)`; ranks are computed block by block.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{rank_q, MatQ, SparseEchelon};
use crate::lie::{build_u, LieAlgebra};
use crate::rep::{decompose, Character, Decomposition, HighestWeight, Weight};

/// Binomial coefficients up to a fixed size.
struct Binomials(Vec<Vec<usize>>);

impl Binomials {
    fn new(max: usize) -> Self {
        let mut t = vec![vec![0usize; max + 2]; max + 2];
        for n in 0..=max + 1 {
            t[n][0] = 1;
            for k in 1..=n {
                t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            }
        }
        Binomials(t)
    }

    fn get(&self, n: usize, k: usize) -> usize {
        if k > n {
            0
        } else {
            self.0[n][k]
        }
    }

    fn colex_rank(&self, s: &[usize]) -> usize {
        s.iter().enumerate().map(|(i, &v)| self.get(v, i + 1)).sum()
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All `k`-subsets of `0..dim` in colex order.
pub fn subsets_colex(dim: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(dim, k));
    if k > dim {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // Colex successor: bump the first entry that can move.
        let mut i = 0;
        while i < k {
            let limit = if i + 1 < k { cur[i + 1] } else { dim };
            if cur[i] + 1 < limit {
                break;
            }
            i += 1;
        }
        if i == k {
            return out;
        }
        cur[i] += 1;
        for (j, slot) in cur.iter_mut().enumerate().take(i) {
            *slot = j;
        }
    }
}

/// Block label: total cochain weight and total T-degree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BlockKey {
    pub weight: Weight,
    pub degree: usize,
}

/// One weight-homogeneous block of the complex around degree `k`.
#[derive(Clone, Debug)]
pub struct CochainBlock {
    pub key: BlockKey,
    pub k: usize,
    pub basis: Vec<Vec<usize>>,
    /// `d_{k-1}` restricted to this block: rows index `basis`.
    pub d_in: MatQ,
    /// `d_k` restricted to this block: columns index `basis`.
    pub d_out: MatQ,
}

/// Cochain weight of `e_S*`: minus the sum of the basis weights.
fn cochain_key(weights: &[Weight], degrees: &[usize], s: &[usize]) -> BlockKey {
    let n = weights[0].n();
    let mut acc = vec![0i64; n];
    for &i in s {
        for (a, w) in acc.iter_mut().zip(weights[i].eps()) {
            *a -= w;
        }
    }
    BlockKey {
        weight: Weight::new(acc),
        degree: s.iter().map(|&i| degrees[i]).sum(),
    }
}

/// Row of `d_k` at the target `(k+1)`-subset `target`, as (source subset, coefficient).
fn differential_row(u: &LieAlgebra, target: &[usize]) -> Vec<(Vec<usize>, BigRational)> {
    let mut acc: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
    let len = target.len();
    let mut rest = Vec::with_capacity(len.saturating_sub(2));
    for a in 0..len {
        for b in a + 1..len {
            let br = u.bracket_basis(target[a], target[b]);
            if br.is_empty() {
                continue;
            }
            rest.clear();
            rest.extend((0..len).filter(|&i| i != a && i != b).map(|i| target[i]));
            let pair_sign = if (a + b) % 2 == 0 { 1 } else { -1 };
            for (m, c) in br {
                if rest.contains(m) {
                    continue;
                }
                let pos = rest.iter().filter(|&&x| x < *m).count();
                let sign = if pos % 2 == 0 { pair_sign } else { -pair_sign };
                let mut src = rest.clone();
                src.insert(pos, *m);
                let slot = acc.entry(src).or_insert_with(BigRational::zero);
                if sign > 0 {
                    *slot += c
                } else {
                    *slot -= c
                }
            }
        }
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

/// Full matrix of `d_k : Λ^k g* -> Λ^{k+1} g*` in colex bases.
pub fn ce_differential(u: &LieAlgebra, k: usize) -> Result<MatQ> {
    let dim = u.dim();
    if k > dim {
        return Err(Error::OutOfRange(format!(
            "cochain degree {k} exceeds dimension {dim}"
        )));
    }
    let bin = Binomials::new(dim);
    let targets = subsets_colex(dim, k + 1);
    let mut m = MatQ::zeros(targets.len(), bin.get(dim, k));
    for (row, t) in targets.iter().enumerate() {
        for (src, c) in differential_row(u, t) {
            m[(row, bin.colex_rank(&src))] = c;
        }
    }
    Ok(m)
}

/// Groups the `k`-subsets by block key, preserving colex order inside a block.
fn partition_blocks(
    u: &LieAlgebra,
    weights: &[Weight],
    degrees: &[usize],
    k: usize,
) -> BTreeMap<BlockKey, Vec<Vec<usize>>> {
    let mut blocks: BTreeMap<BlockKey, Vec<Vec<usize>>> = BTreeMap::new();
    for s in subsets_colex(u.dim(), k) {
        blocks
            .entry(cochain_key(weights, degrees, &s))
            .or_default()
            .push(s);
    }
    blocks
}

/// Rank of `d` restricted to rows `targets`, with columns looked up in `col_of`.
fn block_rank(
    u: &LieAlgebra,
    targets: &[Vec<usize>],
    col_of: &dyn Fn(&[usize]) -> Option<usize>,
    max_rank: usize,
) -> usize {
    if max_rank == 0 {
        return 0;
    }
    let mut ech = SparseEchelon::new();
    for t in targets {
        let row = differential_row(u, t);
        if row.is_empty() {
            continue;
        }
        let mut ints = integer_row(
            row.into_iter()
                .map(|(s, c)| (col_of(&s).expect("differential preserves the block"), c)),
        );
        ints.sort_by_key(|e| e.0);
        ech.insert(ints);
        if ech.rank() == max_rank {
            break;
        }
    }
    ech.rank()
}

/// Clears denominators of a rational sparse row.
fn integer_row(row: impl Iterator<Item = (usize, BigRational)>) -> Vec<(usize, BigInt)> {
    let row: Vec<(usize, BigRational)> = row.collect();
    let lcm = row
        .iter()
        .fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()));
    row.into_iter()
        .map(|(i, c)| (i, c.numer() * (&lcm / c.denom())))
        .collect()
}

/// Per-block dimensions and ranks of `d_{k-1}` and `d_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockBetti {
    pub key: BlockKey,
    pub dim: usize,
    pub rank_in: usize,
    pub rank_out: usize,
}

impl BlockBetti {
    pub fn betti(&self) -> usize {
        self.dim - self.rank_in - self.rank_out
    }
}

/// Blocked computation of `H^k`; blocks are processed largest first in
/// parallel and returned in key order.
pub fn blocked_betti(u: &LieAlgebra, k: usize) -> Result<Vec<BlockBetti>> {
    let dim = u.dim();
    if k > dim {
        return Err(Error::OutOfRange(format!(
            "cochain degree {k} exceeds dimension {dim}"
        )));
    }
    let weights = u.weights().ok_or(Error::MissingWeights)?;
    let degrees = u.degrees();
    let prev = if k > 0 {
        partition_blocks(u, weights, &degrees, k - 1)
    } else {
        BTreeMap::new()
    };
    let here = partition_blocks(u, weights, &degrees, k);
    let next = partition_blocks(u, weights, &degrees, k + 1);
    let bin = Binomials::new(dim);

    let mut jobs: Vec<(&BlockKey, &Vec<Vec<usize>>)> = here.iter().collect();
    jobs.sort_by_key(|(key, basis)| (std::cmp::Reverse(basis.len()), (*key).clone()));

    let mut results: Vec<BlockBetti> = jobs
        .par_iter()
        .map(|(key, basis)| {
            // Local column index for subsets of this block and the one below.
            let local_here: BTreeMap<usize, usize> = basis
                .iter()
                .enumerate()
                .map(|(i, s)| (bin.colex_rank(s), i))
                .collect();
            let rank_out = match next.get(key) {
                Some(targets) => block_rank(
                    u,
                    targets,
                    &|s| local_here.get(&bin.colex_rank(s)).copied(),
                    basis.len(),
                ),
                None => 0,
            };
            let rank_in = match prev.get(key) {
                Some(sources) => {
                    let local_prev: BTreeMap<usize, usize> = sources
                        .iter()
                        .enumerate()
                        .map(|(i, s)| (bin.colex_rank(s), i))
                        .collect();
                    block_rank(
                        u,
                        basis,
                        &|s| local_prev.get(&bin.colex_rank(s)).copied(),
                        sources.len(),
                    )
                }
                None => 0,
            };
            BlockBetti {
                key: (*key).clone(),
                dim: basis.len(),
                rank_in,
                rank_out,
            }
        })
        .collect();
    results.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(results)
}

/// Betti numbers computed from the full, unblocked differentials.
pub fn betti_unblocked(u: &LieAlgebra, k: usize) -> Result<usize> {
    let dim = u.dim();
    if k > dim {
        return Err(Error::OutOfRange(format!(
            "cochain degree {k} exceeds dimension {dim}"
        )));
    }
    let rank_out = if k < dim {
        rank_q(&ce_differential(u, k)?)
    } else {
        0
    };
    let rank_in = if k > 0 {
        rank_q(&ce_differential(u, k - 1)?)
    } else {
        0
    };
    Ok(binomial(dim, k) - rank_out - rank_in)
}

/// `dim H^k(g, Q)`; blocked when weights are attached.
pub fn betti(u: &LieAlgebra, k: usize) -> Result<usize> {
    if u.weights().is_some() {
        Ok(blocked_betti(u, k)?.iter().map(BlockBetti::betti).sum())
    } else {
        betti_unblocked(u, k)
    }
}

/// Weight character of `H^k`.
pub fn cohomology_character(u: &LieAlgebra, k: usize) -> Result<Character> {
    let n = u.sl_rank().ok_or(Error::MissingWeights)?;
    let mut c = Character::empty(n);
    for b in blocked_betti(u, k)? {
        c.insert(b.key.weight.clone(), b.betti() as u64);
    }
    Ok(c)
}

/// Multiplicity of the trivial module in `H^k`.
pub fn invariant_dim(u: &LieAlgebra, k: usize) -> Result<usize> {
    let c = cohomology_character(u, k)?;
    let n = c.n();
    Ok(decompose(&c)?.mult(&HighestWeight::trivial(n)) as usize)
}

/// `H^k(u_l, Q)` summary.
#[derive(Clone, Debug, Serialize)]
pub struct CohomologyReport {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub betti: usize,
    pub character: Character,
    pub invariant_dim: usize,
    pub decomposition: Decomposition,
}

pub fn cohomology_report(n: usize, l: usize, k: usize) -> Result<CohomologyReport> {
    let u = build_u(n, l)?;
    report_for(&u, l, k)
}

pub fn report_for(u: &LieAlgebra, l: usize, k: usize) -> Result<CohomologyReport> {
    let n = u.sl_rank().ok_or(Error::MissingWeights)?;
    let character = cohomology_character(u, k)?;
    let decomposition = decompose(&character)?;
    let betti = character.mass() as usize;
    if decomposition.dimension() as usize != betti {
        return Err(Error::Inconsistent(
            "decomposition dimension differs from betti".into(),
        ));
    }
    Ok(CohomologyReport {
        n,
        l,
        k,
        betti,
        invariant_dim: decomposition.mult(&HighestWeight::trivial(n)) as usize,
        character,
        decomposition,
    })
}

/// Result of comparing `b_2` with `b_1^2 / 4`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BettiBound {
    pub b1: usize,
    pub b2: usize,
    /// `4 b_2 >= b_1^2`.
    pub holds: bool,
    /// `4 b_2 >= (n^2 - 1)^2`.
    pub holds_adjoint_bound: bool,
}

pub fn betti_bound_check(n: usize, l: usize) -> Result<BettiBound> {
    if n < 3 {
        return Err(Error::OutOfRange(format!(
            "bound check needs n >= 3, got {n}"
        )));
    }
    let u = build_u(n, l)?;
    let b1 = betti(&u, 1)?;
    let b2 = betti(&u, 2)?;
    let adj = n * n - 1;
    Ok(BettiBound {
        b1,
        b2,
        holds: 4 * b2 >= b1 * b1,
        holds_adjoint_bound: 4 * b2 >= adj * adj,
    })
}

/// Dense block matrices around degree `k` for one block key.
pub fn cochain_block(u: &LieAlgebra, k: usize, key: &BlockKey) -> Result<CochainBlock> {
    let weights = u.weights().ok_or(Error::MissingWeights)?;
    let degrees = u.degrees();
    let collect = |deg: usize| -> Vec<Vec<usize>> {
        if deg > u.dim() {
            return Vec::new();
        }
        subsets_colex(u.dim(), deg)
            .into_iter()
            .filter(|s| cochain_key(weights, &degrees, s) == *key)
            .collect()
    };
    let basis = collect(k);
    let below = if k > 0 { collect(k - 1) } else { Vec::new() };
    let above = collect(k + 1);
    let dense = |rows: &[Vec<usize>], cols: &[Vec<usize>]| -> MatQ {
        let mut m = MatQ::zeros(rows.len(), cols.len());
        for (r, t) in rows.iter().enumerate() {
            for (src, c) in differential_row(u, t) {
                let col = cols
                    .iter()
                    .position(|s| *s == src)
                    .expect("block is closed under d");
                m[(r, col)] = c;
            }
        }
        m
    };
    let d_in = dense(&basis, &below);
    let d_out = dense(&above, &basis);
    Ok(CochainBlock {
        key: key.clone(),
        k,
        basis,
        d_in,
        d_out,
    })
}

/// Keys of all blocks in degree `k`.
pub fn block_keys(u: &LieAlgebra, k: usize) -> Result<Vec<(BlockKey, usize)>> {
    let weights = u.weights().ok_or(Error::MissingWeights)?;
    let degrees = u.degrees();
    Ok(partition_blocks(u, weights, &degrees, k)
        .into_iter()
        .map(|(k, v)| (k, v.len()))
        .collect())
}

/// Checks `d_{k+1} d_k = 0` row by row without forming either matrix.
///
/// Returns the first `(k+2)`-subset whose row of the composite is nonzero.
pub fn d_squared_witness(u: &LieAlgebra, k: usize) -> Result<Option<Vec<usize>>> {
    let dim = u.dim();
    if k + 2 > dim {
        return Ok(None);
    }
    let mut rows: BTreeMap<Vec<usize>, Vec<(Vec<usize>, BigRational)>> = BTreeMap::new();
    for target in subsets_colex(dim, k + 2) {
        let mut acc: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
        for (mid, c) in differential_row(u, &target) {
            let inner = rows
                .entry(mid.clone())
                .or_insert_with(|| differential_row(u, &mid));
            for (src, e) in inner.iter() {
                *acc.entry(src.clone()).or_insert_with(BigRational::zero) += &c * e;
            }
        }
        if acc.values().any(|v| !v.is_zero()) {
            return Ok(Some(target));
        }
    }
    Ok(None)
}

/// Checks `d_{k+1} d_k = 0` with full matrices.
pub fn d_squared_vanishes(u: &LieAlgebra, k: usize) -> Result<bool> {
    if k + 1 > u.dim() {
        return Ok(true);
    }
    let d0 = ce_differential(u, k)?;
    let d1 = ce_differential(u, k + 1)?;
    Ok(d1.mul(&d0)?.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::sln_basis;
    use crate::rep::{adjoint_character, wedge_character};

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    #[test]
    fn colex_order_and_rank() {
        let s = subsets_colex(4, 2);
        assert_eq!(
            s,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![1, 2],
                vec![0, 3],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        let bin = Binomials::new(10);
        for (i, sub) in subsets_colex(10, 3).iter().enumerate() {
            assert_eq!(bin.colex_rank(sub), i);
        }
        assert_eq!(subsets_colex(3, 0), vec![Vec::<usize>::new()]);
        assert!(subsets_colex(2, 3).is_empty());
    }

    #[test]
    fn abelian_differential_is_zero() {
        let u = LieAlgebra::abelian(4);
        for k in 0..=4 {
            assert!(ce_differential(&u, k).unwrap().is_zero());
        }
        assert!(ce_differential(&u, 5).is_err());
    }

    #[test]
    fn sl2_first_differential() {
        let g = sln_basis(2).unwrap();
        // Basis e = E12 (0), f = E21 (1), h = H1 (2); 2-subsets in colex:
        // {e,f}, {e,h}, {f,h}.
        let d = ce_differential(&g, 1).unwrap();
        assert_eq!((d.rows(), d.cols()), (3, 3));
        // d(e*)(e, h) = -e*([e, h]) = -e*(-2e) = 2, so d(e*)(h, e) = -2.
        assert_eq!(d[(1, 0)], q(2));
        assert_eq!(d[(0, 0)], q(0));
        assert_eq!(d[(2, 0)], q(0));
        // d(h*)(e, f) = -h*([e, f]) = -1.
        assert_eq!(d[(0, 2)], q(-1));
    }

    #[test]
    fn d_squared_zero() {
        let u = build_u(3, 3).unwrap();
        assert!(d_squared_vanishes(&u, 1).unwrap());
        let g = sln_basis(3).unwrap();
        for k in 0..7 {
            assert!(d_squared_vanishes(&g, k).unwrap());
            assert_eq!(d_squared_witness(&g, k).unwrap(), None);
        }
        assert_eq!(d_squared_witness(&u, 1).unwrap(), None);
    }

    #[test]
    fn sparse_d_squared_sees_a_broken_bracket() {
        let g = sln_basis(2).unwrap();
        let bad = g.with_perturbed_constant(0, 2, 0, q(1));
        assert!(bad.check_jacobi().is_err());
        assert!(!d_squared_vanishes(&bad, 1).unwrap());
        assert!(d_squared_witness(&bad, 1).unwrap().is_some());
    }

    #[test]
    fn betti_abelian_case() {
        let u = build_u(3, 2).unwrap();
        assert_eq!(betti(&u, 0).unwrap(), 1);
        assert_eq!(betti(&u, 1).unwrap(), 8);
        assert_eq!(betti(&u, 2).unwrap(), 28);
        for k in 0..=8 {
            assert_eq!(betti(&u, k).unwrap(), binomial(8, k));
            assert_eq!(betti(&u, k).unwrap(), betti(&u, 8 - k).unwrap());
        }
    }

    #[test]
    fn sl3_cohomology() {
        // H*(sl_3) is an exterior algebra on classes of degree 3 and 5.
        let g = sln_basis(3).unwrap();
        let got: Vec<usize> = (0..=8).map(|k| betti_unblocked(&g, k).unwrap()).collect();
        assert_eq!(got, vec![1, 0, 0, 1, 0, 1, 0, 0, 1]);
        let blocked: Vec<usize> = (0..=8).map(|k| betti(&g, k).unwrap()).collect();
        assert_eq!(blocked, got);
    }

    #[test]
    fn characters_in_low_degree() {
        let u2 = build_u(3, 2).unwrap();
        let h1 = cohomology_character(&u2, 1).unwrap();
        assert_eq!(h1, adjoint_character(3).dual());
        assert_eq!(h1.mult(&Weight::zero(3)), 2);
        let h2 = cohomology_character(&u2, 2).unwrap();
        assert_eq!(h2, wedge_character(&adjoint_character(3), 2).unwrap());
        let u3 = build_u(3, 3).unwrap();
        assert_eq!(cohomology_character(&u3, 1).unwrap(), adjoint_character(3));
    }

    #[test]
    fn invariant_dims() {
        assert_eq!(invariant_dim(&build_u(3, 2).unwrap(), 2).unwrap(), 0);
        assert_eq!(invariant_dim(&build_u(3, 2).unwrap(), 1).unwrap(), 0);
        assert_eq!(invariant_dim(&build_u(3, 3).unwrap(), 2).unwrap(), 0);
        assert!(cohomology_character(&LieAlgebra::abelian(3), 1).is_err());
    }

    #[test]
    fn blocked_matches_unblocked() {
        for l in [2, 3] {
            let u = build_u(3, l).unwrap();
            for k in 0..=3 {
                assert_eq!(
                    betti(&u, k).unwrap(),
                    betti_unblocked(&u, k).unwrap(),
                    "l={l} k={k}"
                );
            }
        }
    }

    #[test]
    fn block_partition_covers_basis() {
        let u = build_u(3, 3).unwrap();
        for k in 0..=4 {
            let total: usize = block_keys(&u, k).unwrap().iter().map(|(_, s)| s).sum();
            assert_eq!(total, binomial(16, k));
        }
    }

    #[test]
    fn cochain_blocks_compose_to_zero() {
        let u = build_u(3, 3).unwrap();
        for (key, _) in block_keys(&u, 2).unwrap().into_iter().take(12) {
            let b = cochain_block(&u, 2, &key).unwrap();
            assert!(b.d_out.mul(&b.d_in).unwrap().is_zero());
            assert!(!b.basis.is_empty());
        }
    }

    #[test]
    fn euler_characteristic() {
        let u = build_u(3, 3).unwrap();
        let mut chi: i64 = 0;
        for k in 0..=u.dim() {
            let b = betti(&u, k).unwrap() as i64;
            chi += if k % 2 == 0 { b } else { -b };
        }
        assert_eq!(chi, 0);
    }

    #[test]
    fn betti_bound_small() {
        let m = betti_bound_check(3, 2).unwrap();
        assert_eq!(
            m,
            BettiBound {
                b1: 8,
                b2: 28,
                holds: true,
                holds_adjoint_bound: true
            }
        );
        assert!(betti_bound_check(2, 2).is_err());
    }

    #[test]
    fn report_json_shape() {
        let r = cohomology_report(3, 2, 1).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "n",
            "l",
            "k",
            "betti",
            "character",
            "invariant_dim",
            "decomposition",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(
            v["decomposition"],
            serde_json::json!([{"hw": [1, 1], "mult": 1}])
        );
    }
}
