//! Formal characters of `SL_n(Q)`-modules.
//!
//! Weights are integer vectors in the `eps` coordinates modulo the all-ones
//! vector, stored with minimum coordinate zero. A highest weight
//! `(a_1, ..., a_{n-1})` is the dominant weight `sum_i a_i (eps_1 + ... + eps_i)`.
//! Irreducible characters come from Freudenthal's recursion on dominant
//! weights, extended to all weights by the `S_n` symmetry.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight of the diagonal torus of `SL_n`, normalized to minimum coordinate 0.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weight(Vec<i64>);

impl Weight {
    pub fn new(mut eps: Vec<i64>) -> Self {
        let min = eps.iter().copied().min().unwrap_or(0);
        if min != 0 {
            eps.iter_mut().for_each(|e| *e -= min);
        }
        Weight(eps)
    }

    pub fn zero(n: usize) -> Self {
        Weight(vec![0; n])
    }

    /// `eps_i - eps_j`.
    pub fn root(n: usize, i: usize, j: usize) -> Self {
        let mut v = vec![0; n];
        v[i] += 1;
        v[j] -= 1;
        Weight::new(v)
    }

    pub fn eps(&self) -> &[i64] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &Weight) -> Weight {
        debug_assert_eq!(self.n(), other.n());
        Weight::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn neg(&self) -> Weight {
        Weight::new(self.0.iter().map(|a| -a).collect())
    }

    pub fn is_dominant(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }

    /// The dominant element of the Weyl orbit.
    pub fn dominant_rep(&self) -> Weight {
        let mut v = self.0.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        Weight(v)
    }

    /// Whether `self - other` is a nonnegative combination of positive roots.
    pub fn dominates(&self, other: &Weight) -> bool {
        let n = self.n() as i64;
        let diff: Vec<i64> = self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect();
        let total: i64 = diff.iter().sum();
        if total % n != 0 {
            return false;
        }
        let shift = total / n;
        let mut partial = 0;
        for d in &diff[..diff.len() - 1] {
            partial += d - shift;
            if partial < 0 {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Highest weight label `Gamma_{a_1, ..., a_{n-1}}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HighestWeight(Vec<u32>);

impl HighestWeight {
    pub fn new(a: Vec<u32>) -> Self {
        HighestWeight(a)
    }

    pub fn trivial(n: usize) -> Self {
        HighestWeight(vec![0; n - 1])
    }

    pub fn labels(&self) -> &[u32] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len() + 1
    }

    pub fn is_trivial(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Partition form `lambda_k = a_k + ... + a_{n-1}`, `lambda_n = 0`.
    pub fn partition(&self) -> Vec<i64> {
        let n = self.n();
        let mut lambda = vec![0i64; n];
        for k in (0..n - 1).rev() {
            lambda[k] = lambda[k + 1] + i64::from(self.0[k]);
        }
        lambda
    }

    pub fn to_weight(&self) -> Weight {
        Weight(self.partition())
    }

    pub fn from_dominant(w: &Weight) -> Option<Self> {
        if !w.is_dominant() {
            return None;
        }
        let eps = w.eps();
        Some(HighestWeight(
            eps.windows(2).map(|p| (p[0] - p[1]) as u32).collect(),
        ))
    }
}

impl fmt::Display for HighestWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "Gamma_{{{}}}", parts.join(","))
    }
}

/// Formal character: weights with positive multiplicities.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Character {
    n: usize,
    mults: BTreeMap<Weight, u64>,
}

#[derive(Serialize, Deserialize)]
struct WeightMult {
    weight: Vec<i64>,
    mult: u64,
}

impl Serialize for Character {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.mults.iter().map(|(w, &m)| WeightMult {
            weight: w.eps().to_vec(),
            mult: m,
        }))
    }
}

impl<'de> Deserialize<'de> for Character {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let items = Vec::<WeightMult>::deserialize(d)?;
        let n = items.first().map_or(0, |i| i.weight.len());
        let mut c = Character::empty(n);
        for it in items {
            if it.weight.len() != n {
                return Err(D::Error::custom("weights of different rank"));
            }
            c.insert(Weight::new(it.weight), it.mult);
        }
        Ok(c)
    }
}

impl Character {
    pub fn empty(n: usize) -> Self {
        Character {
            n,
            mults: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, w: Weight, mult: u64) {
        if mult > 0 {
            *self.mults.entry(w).or_insert(0) += mult;
        }
    }

    pub fn mult(&self, w: &Weight) -> u64 {
        self.mults.get(w).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Weight, u64)> {
        self.mults.iter().map(|(w, &m)| (w, m))
    }

    pub fn mass(&self) -> u64 {
        self.mults.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.mults.is_empty()
    }

    /// Invariance under permutations of the `eps` coordinates.
    pub fn is_weyl_symmetric(&self) -> bool {
        self.mults.iter().all(|(w, &m)| {
            let mut v = w.eps().to_vec();
            (0..self.n.saturating_sub(1)).all(|i| {
                v.swap(i, i + 1);
                let ok = self.mult(&Weight::new(v.clone())) == m;
                v.swap(i, i + 1);
                ok
            })
        })
    }

    pub fn dual(&self) -> Character {
        let mut c = Character::empty(self.n);
        for (w, m) in self.iter() {
            c.insert(w.neg(), m);
        }
        c
    }

    pub fn sum(&self, other: &Character) -> Character {
        let mut c = self.clone();
        for (w, m) in other.iter() {
            c.insert(w.clone(), m);
        }
        c
    }
}

/// Roots `eps_i - eps_j` with multiplicity one and the zero weight `n - 1` times.
pub fn adjoint_character(n: usize) -> Character {
    let mut c = Character::empty(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                c.insert(Weight::root(n, i, j), 1);
            }
        }
    }
    c.insert(Weight::zero(n), n as u64 - 1);
    c
}

/// Weyl dimension formula `prod_{i<j} (lambda_i - lambda_j + j - i) / (j - i)`.
pub fn weyl_dim(hw: &HighestWeight) -> u64 {
    let lambda = hw.partition();
    let n = lambda.len();
    let mut num = BigInt::from(1);
    let mut den = BigInt::from(1);
    for i in 0..n {
        for j in i + 1..n {
            num *= lambda[i] - lambda[j] + (j - i) as i64;
            den *= (j - i) as i64;
        }
    }
    (num / den).to_u64().expect("dimension fits in u64")
}

/// Partitions of `total` into exactly `parts` nonnegative non-increasing
/// entries bounded by `cap`, dominated by `lambda` (prefix sums).
fn dominated_partitions(lambda: &[i64]) -> Vec<Vec<i64>> {
    fn rec(
        lambda: &[i64],
        prefix_lambda: &[i64],
        cur: &mut Vec<i64>,
        sum: i64,
        total: i64,
        cap: i64,
        out: &mut Vec<Vec<i64>>,
    ) {
        let k = cur.len();
        let n = lambda.len();
        if k == n {
            if sum == total {
                out.push(cur.clone());
            }
            return;
        }
        let remaining = (n - k) as i64;
        for v in (0..=cap).rev() {
            let s = sum + v;
            if s > prefix_lambda[k] || s + v * (remaining - 1) < total {
                continue;
            }
            cur.push(v);
            rec(lambda, prefix_lambda, cur, s, total, v, out);
            cur.pop();
        }
    }
    let mut prefix = Vec::with_capacity(lambda.len());
    let mut acc = 0;
    for &l in lambda {
        acc += l;
        prefix.push(acc);
    }
    let total = acc;
    let mut out = Vec::new();
    rec(
        lambda,
        &prefix,
        &mut Vec::new(),
        0,
        total,
        lambda[0],
        &mut out,
    );
    out
}

/// Multiplicities of the dominant weights of `Gamma_hw`, in partition form.
pub fn dominant_multiplicities(hw: &HighestWeight) -> BTreeMap<Vec<i64>, u64> {
    let lambda = hw.partition();
    let n = lambda.len();
    let rho: Vec<i64> = (0..n).map(|i| (n - 1 - i) as i64).collect();
    let mut doms = dominated_partitions(&lambda);
    let height = |mu: &[i64]| -> i64 {
        let (mut pl, mut pm, mut h) = (0, 0, 0);
        for k in 0..n {
            pl += lambda[k];
            pm += mu[k];
            h += pl - pm;
        }
        h
    };
    doms.sort_by_key(|mu| (height(mu), std::cmp::Reverse(mu.clone())));
    let norm = |v: &[i64]| -> i64 { v.iter().zip(&rho).map(|(a, r)| (a + r) * (a + r)).sum() };
    let top = norm(&lambda);
    let mut mults: HashMap<Vec<i64>, u64> = HashMap::new();
    for mu in &doms {
        if *mu == lambda {
            mults.insert(mu.clone(), 1);
            continue;
        }
        let mut numer: i64 = 0;
        for i in 0..n {
            for j in i + 1..n {
                let mut v = mu.clone();
                loop {
                    v[i] += 1;
                    v[j] -= 1;
                    let mut rep = v.clone();
                    rep.sort_unstable_by(|a, b| b.cmp(a));
                    let Some(&m) = mults.get(&rep) else { break };
                    numer += 2 * (m as i64) * (v[i] - v[j]);
                }
            }
        }
        let denom = top - norm(mu);
        debug_assert!(
            denom > 0 && numer % denom == 0,
            "Freudenthal quotient must be exact"
        );
        let m = numer / denom;
        if m > 0 {
            mults.insert(mu.clone(), m as u64);
        }
    }
    doms.into_iter()
        .filter_map(|mu| mults.get(&mu).map(|&m| (mu, m)))
        .collect()
}

/// Distinct permutations of `v`.
fn distinct_permutations(v: &[i64]) -> Vec<Vec<i64>> {
    let mut cur = v.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (0..cur.len().saturating_sub(1))
            .rev()
            .find(|&i| cur[i] < cur[i + 1])
        else {
            return out;
        };
        let j = (i + 1..cur.len())
            .rev()
            .find(|&j| cur[j] > cur[i])
            .expect("successor exists");
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
}

/// Character of the irreducible module with highest weight `hw`.
pub fn irreducible_character(hw: &HighestWeight) -> Character {
    let n = hw.n();
    let mut c = Character::empty(n);
    for (mu, m) in dominant_multiplicities(hw) {
        for p in distinct_permutations(&mu) {
            c.insert(Weight::new(p), m);
        }
    }
    c
}

/// Weight-wise convolution.
pub fn tensor_character(a: &Character, b: &Character) -> Result<Character> {
    if a.n != b.n {
        return Err(Error::OutOfRange(format!(
            "tensor of SL_{} and SL_{} characters",
            a.n, b.n
        )));
    }
    let mut c = Character::empty(a.n);
    for (wa, ma) in a.iter() {
        for (wb, mb) in b.iter() {
            c.insert(wa.add(wb), ma * mb);
        }
    }
    Ok(c)
}

/// `k`-th exterior power via the generating function `prod_w (1 + x e^w)^{m_w}`.
pub fn wedge_character(c: &Character, k: usize) -> Result<Character> {
    if k as u64 > c.mass() {
        return Err(Error::OutOfRange(format!(
            "wedge power {k} exceeds dimension {}",
            c.mass()
        )));
    }
    let n = c.n;
    let mut layers: Vec<BTreeMap<Weight, u64>> = vec![BTreeMap::new(); k + 1];
    layers[0].insert(Weight::zero(n), 1);
    for (w, m) in c.iter() {
        let mut next: Vec<BTreeMap<Weight, u64>> = vec![BTreeMap::new(); k + 1];
        // Multiples j * w for j = 0..=min(k, m).
        let mut shifts = vec![Weight::zero(n)];
        for j in 1..=k.min(m as usize) {
            shifts.push(shifts[j - 1].add(w));
        }
        for t in 0..=k {
            for (j, shift) in shifts.iter().enumerate().take(t + 1) {
                let binom = binomial(m, j as u64);
                if binom == 0 {
                    continue;
                }
                for (base, bm) in &layers[t - j] {
                    *next[t].entry(base.add(shift)).or_insert(0) += binom * bm;
                }
            }
        }
        layers = next;
    }
    let mut out = Character::empty(n);
    for (w, m) in std::mem::take(&mut layers[k]) {
        out.insert(w, m);
    }
    Ok(out)
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Multiset of irreducible summands.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Decomposition(BTreeMap<HighestWeight, u64>);

#[derive(Serialize, Deserialize)]
struct HwMult {
    hw: Vec<u32>,
    mult: u64,
}

impl Serialize for Decomposition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|(h, &m)| HwMult {
            hw: h.labels().to_vec(),
            mult: m,
        }))
    }
}

impl<'de> Deserialize<'de> for Decomposition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let items = Vec::<HwMult>::deserialize(d)?;
        Ok(Decomposition(
            items
                .into_iter()
                .map(|i| (HighestWeight(i.hw), i.mult))
                .collect(),
        ))
    }
}

impl Decomposition {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Vec<u32>, u64)>) -> Self {
        let mut map = BTreeMap::new();
        for (a, m) in pairs {
            if m > 0 {
                *map.entry(HighestWeight(a)).or_insert(0) += m;
            }
        }
        Decomposition(map)
    }

    pub fn mult(&self, hw: &HighestWeight) -> u64 {
        self.0.get(hw).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&HighestWeight, u64)> {
        self.0.iter().map(|(h, &m)| (h, m))
    }

    pub fn dimension(&self) -> u64 {
        self.iter().map(|(h, m)| m * weyl_dim(h)).sum()
    }

    pub fn character(&self, n: usize) -> Character {
        let mut c = Character::empty(n);
        for (h, m) in self.iter() {
            for (w, wm) in irreducible_character(h).iter() {
                c.insert(w.clone(), m * wm);
            }
        }
        c
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        let terms: Vec<String> = self
            .0
            .iter()
            .rev()
            .map(|(h, &m)| {
                if m == 1 {
                    h.to_string()
                } else {
                    format!("{m}*{h}")
                }
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

/// Greedy peeling of highest weights.
///
/// Repeatedly takes a dominant weight present that no other present dominant
/// weight strictly dominates (ties broken lexicographically, largest first)
/// and subtracts its irreducible character with its current multiplicity.
pub fn decompose(c: &Character) -> Result<Decomposition> {
    let n = c.n;
    let mut rest: BTreeMap<Weight, i64> = c.iter().map(|(w, m)| (w.clone(), m as i64)).collect();
    let mut out = BTreeMap::new();
    while !rest.is_empty() {
        let dominant: Vec<&Weight> = rest.keys().filter(|w| w.is_dominant()).collect();
        let top = dominant
            .iter()
            .rev()
            .find(|w| !dominant.iter().any(|o| o != *w && o.dominates(w)))
            .map(|w| (*w).clone());
        let Some(top) = top else {
            let (w, _) = rest.iter().next().expect("nonempty");
            return Err(Error::NotACharacter {
                weight: w.eps().to_vec(),
                highest: vec![],
            });
        };
        let mult = rest[&top];
        let hw = HighestWeight::from_dominant(&top).expect("dominant");
        for (w, m) in irreducible_character(&hw).iter() {
            let slot = rest.entry(w.clone()).or_insert(0);
            *slot -= mult * m as i64;
            if *slot < 0 {
                return Err(Error::NotACharacter {
                    weight: w.eps().to_vec(),
                    highest: hw.labels().to_vec(),
                });
            }
        }
        rest.retain(|_, m| *m != 0);
        *out.entry(hw).or_insert(0) += mult as u64;
    }
    let dec = Decomposition(out);
    if dec.character(n) != *c {
        return Err(Error::Inconsistent(format!(
            "decomposition {dec} does not recompose"
        )));
    }
    Ok(dec)
}

/// Multiplicity of the trivial module in `c`.
pub fn trivial_multiplicity(c: &Character) -> Result<u64> {
    Ok(decompose(c)?.mult(&HighestWeight::trivial(c.n)))
}
