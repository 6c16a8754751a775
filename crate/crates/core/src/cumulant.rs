//! Classical and free moment/cumulant transforms, the product-cumulant
//! expansion, and the empirical estimators used by the Monte Carlo
//! verifications.
//!
//! Classical transforms run Möbius sums over the full partition lattice; free
//! transforms run over noncrossing partitions (Möbius sum with the Kreweras
//! complement up to order 8, triangular recursion above).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::partition::{
    self, for_each_noncrossing, for_each_partition, interval_partition, join, NoncrossingPartition,
    SetPartition,
};

/// Order cap for classical transforms (Bell numbers explode past this).
pub const MAX_CLASSICAL_ORDER: usize = 12;
/// Order cap for free transforms.
pub const MAX_FREE_ORDER: usize = 16;
/// Orders up to this bound use the noncrossing Möbius sum directly.
const FREE_MOEBIUS_ORDER: usize = 8;
/// Arity cap for the empirical joint-cumulant estimator.
pub const MAX_JOINT_ARITY: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum CumulantError {
    #[error("order {0} exceeds the cap {1} for this transform")]
    OrderCap(usize, usize),
    #[error("joint cumulant table has no entry for block {0:?}")]
    MissingEntry(Vec<usize>),
    #[error("need at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Partition(#[from] partition::PartitionError),
}

/// Raw moments m_1..m_K.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MomentVector {
    values: Vec<f64>,
}

impl MomentVector {
    pub fn new(values: Vec<f64>) -> Result<Self, CumulantError> {
        if values.is_empty() {
            return Err(CumulantError::EmptyInput("moment vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CumulantError::Inconsistent("non-finite moment".into()));
        }
        Ok(MomentVector { values })
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// k-th raw moment, 1-based; order 0 returns 1.
    pub fn m(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CumulantKind {
    Classical,
    Free,
}

/// Cumulants c_1..c_K (classical) or kappa_1..kappa_K (free).
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CumulantVector {
    kind: CumulantKind,
    values: Vec<f64>,
}

impl CumulantVector {
    pub fn new(kind: CumulantKind, values: Vec<f64>) -> Result<Self, CumulantError> {
        if values.is_empty() {
            return Err(CumulantError::EmptyInput("cumulant vector"));
        }
        Ok(CumulantVector { kind, values })
    }

    pub fn kind(&self) -> CumulantKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// k-th cumulant, 1-based.
    pub fn c(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Classical cumulants from raw moments via the Möbius sum over all
/// partitions: c_n = sum_pi Möb(pi, 1_n) prod_B m_|B|.
pub fn classical_cumulants_from_moments(
    moments: &MomentVector,
) -> Result<CumulantVector, CumulantError> {
    let k = moments.order();
    if k > MAX_CLASSICAL_ORDER {
        return Err(CumulantError::OrderCap(k, MAX_CLASSICAL_ORDER));
    }
    let mut out = Vec::with_capacity(k);
    for n in 1..=k {
        let mut acc = 0.0;
        for_each_partition(n, |p| {
            let mu = partition::full_interval_mobius(p.block_count()) as f64;
            let prod: f64 = p.block_sizes().iter().map(|&s| moments.m(s)).product();
            acc += mu * prod;
        });
        out.push(acc);
    }
    CumulantVector::new(CumulantKind::Classical, out)
}

/// Raw moments from classical cumulants: m_n = sum over partitions of
/// prod_B c_|B|. Exact inverse of the Möbius extraction.
pub fn moments_from_classical_cumulants(
    cumulants: &CumulantVector,
) -> Result<MomentVector, CumulantError> {
    if cumulants.kind() != CumulantKind::Classical {
        return Err(CumulantError::Inconsistent(
            "expected classical cumulants".into(),
        ));
    }
    let k = cumulants.order();
    if k > MAX_CLASSICAL_ORDER {
        return Err(CumulantError::OrderCap(k, MAX_CLASSICAL_ORDER));
    }
    let mut out = Vec::with_capacity(k);
    for n in 1..=k {
        let mut acc = 0.0;
        for_each_partition(n, |p| {
            acc += p
                .block_sizes()
                .iter()
                .map(|&s| cumulants.c(s))
                .product::<f64>();
        });
        out.push(acc);
    }
    MomentVector::new(out)
}

/// Möbius value of the interval [pi, 1_n] in the noncrossing lattice: the
/// interval factors over the blocks of the Kreweras complement, each factor
/// contributing a signed Catalan number.
pub fn noncrossing_full_mobius(p: &NoncrossingPartition) -> i64 {
    kreweras_complement(p)
        .block_sizes()
        .iter()
        .map(|&s| signed_catalan(s))
        .product()
}

fn signed_catalan(block_size: usize) -> i64 {
    let c = catalan(block_size - 1) as i64;
    if block_size % 2 == 1 {
        c
    } else {
        -c
    }
}

pub(crate) fn catalan(n: usize) -> u64 {
    let mut c: u128 = 1;
    for i in 0..n as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c as u64
}

/// Kreweras complement of a noncrossing partition: on the interleaved circle
/// 1, 1', 2, 2', ..., the coarsest noncrossing partition of the primed points
/// compatible with `p`. Points i' and j' (i < j) share a block exactly when
/// the element range (i, j] is a union of blocks of `p`.
pub fn kreweras_complement(p: &NoncrossingPartition) -> SetPartition {
    let part = p.as_partition();
    let n = part.n();
    let mut raw = vec![u8::MAX; n];
    let mut next = 0u8;
    for i in 0..n {
        if raw[i] != u8::MAX {
            continue;
        }
        raw[i] = next;
        for j in i + 1..n {
            if raw[j] == u8::MAX && interval_saturated(part, i + 1, j + 1) {
                raw[j] = next;
            }
        }
        next += 1;
    }
    canonical_from_labels(&raw)
}

fn canonical_from_labels(raw: &[u8]) -> SetPartition {
    let mut map = [u8::MAX; 256];
    let mut fresh = 0u8;
    let rgs: Vec<u8> = raw
        .iter()
        .map(|&v| {
            if map[v as usize] == u8::MAX {
                map[v as usize] = fresh;
                fresh += 1;
            }
            map[v as usize]
        })
        .collect();
    SetPartition::from_rgs(rgs).expect("labels by first appearance form an rgs")
}

// True when every block of `p` lies entirely inside or entirely outside the
// 1-based element range {lo+1, ..., hi}.
fn interval_saturated(p: &SetPartition, lo: usize, hi: usize) -> bool {
    let rgs = p.rgs();
    let mut state = vec![0u8; p.block_count()]; // 1 = seen inside, 2 = outside, 3 = both
    for (idx, &lbl) in rgs.iter().enumerate() {
        let e = idx + 1;
        let bit = if e > lo && e <= hi { 1 } else { 2 };
        state[lbl as usize] |= bit;
        if state[lbl as usize] == 3 {
            return false;
        }
    }
    true
}

/// Free cumulants from moments. Orders up to 8 run the noncrossing Möbius
/// sum; higher orders use the triangular recursion on the first block. The
/// two routes agree wherever both apply (see tests).
pub fn free_cumulants_from_moments(
    moments: &MomentVector,
) -> Result<CumulantVector, CumulantError> {
    let k = moments.order();
    if k > MAX_FREE_ORDER {
        return Err(CumulantError::OrderCap(k, MAX_FREE_ORDER));
    }
    let mut out: Vec<f64> = Vec::with_capacity(k);
    for n in 1..=k {
        if n <= FREE_MOEBIUS_ORDER {
            let mut acc = 0.0;
            for_each_noncrossing(n, &mut |p| {
                let nc = NoncrossingPartition::new(p.clone()).expect("enumerator emits nc");
                let mu = noncrossing_full_mobius(&nc) as f64;
                let prod: f64 = p.block_sizes().iter().map(|&s| moments.m(s)).product();
                acc += mu * prod;
            });
            out.push(acc);
        } else {
            // m_n = sum_{b=1}^{n} kappa_b S(b, n-b) with S the composition sum
            // over lower moments; solve for kappa_n
            let s = composition_sums(moments, n);
            let mut rest = 0.0;
            for b in 1..n {
                rest += out[b - 1] * s[b][n - b];
            }
            out.push(moments.m(n) - rest);
        }
    }
    CumulantVector::new(CumulantKind::Free, out)
}

/// Moments from free cumulants via the first-block recursion of the
/// noncrossing moment-cumulant formula.
pub fn moments_from_free_cumulants(
    cumulants: &CumulantVector,
) -> Result<MomentVector, CumulantError> {
    if cumulants.kind() != CumulantKind::Free {
        return Err(CumulantError::Inconsistent("expected free cumulants".into()));
    }
    let k = cumulants.order();
    if k > MAX_FREE_ORDER {
        return Err(CumulantError::OrderCap(k, MAX_FREE_ORDER));
    }
    let mut m = vec![0.0f64; k + 1];
    m[0] = 1.0;
    for n in 1..=k {
        // the block containing position 1 has size b; the b gaps it leaves
        // carry independent noncrossing partitions of total size n - b
        let mut total = 0.0;
        for b in 1..=n {
            let r = n - b;
            let mut s = vec![0.0f64; r + 1];
            s[0] = 1.0;
            for _ in 0..b {
                let mut nxt = vec![0.0f64; r + 1];
                for have in 0..=r {
                    if s[have] == 0.0 {
                        continue;
                    }
                    for add in 0..=r - have {
                        nxt[have + add] += s[have] * m[add];
                    }
                }
                s = nxt;
            }
            total += cumulants.c(b) * s[r];
        }
        m[n] = total;
    }
    MomentVector::new(m[1..].to_vec())
}

// s[b][r] = sum over compositions of r into b nonnegative parts of products
// of moments, for all b <= n and r <= n. m_0 = 1.
fn composition_sums(moments: &MomentVector, n: usize) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0f64; n + 1]; n + 1];
    s[0][0] = 1.0;
    for b in 1..=n {
        for r in 0..=n {
            let mut acc = 0.0;
            for add in 0..=r {
                if s[b - 1][r - add] != 0.0 {
                    acc += s[b - 1][r - add] * moments.m(add);
                }
            }
            s[b][r] = acc;
        }
    }
    s
}

/// Joint cumulants of a fixed n-tuple of random variables, keyed by sorted
/// 1-based argument positions.
#[derive(Clone, Debug, Default)]
pub struct JointCumulantTable {
    arity: usize,
    entries: BTreeMap<Vec<usize>, f64>,
}

impl JointCumulantTable {
    pub fn new(arity: usize) -> Self {
        JointCumulantTable {
            arity,
            entries: BTreeMap::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Records the joint cumulant of the argument positions in `block`
    /// (order-insensitive).
    pub fn insert(&mut self, block: &[usize], value: f64) {
        let mut key = block.to_vec();
        key.sort_unstable();
        self.entries.insert(key, value);
    }

    pub fn get(&self, block: &[usize]) -> Option<f64> {
        let mut key = block.to_vec();
        key.sort_unstable();
        self.entries.get(&key).copied()
    }

    /// Fills every block up to the arity using a closure; the closure sees
    /// sorted position lists.
    pub fn fill_with(arity: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = JointCumulantTable::new(arity);
        for mask in 1u32..(1 << arity) {
            let block: Vec<usize> = (0..arity)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| i + 1)
                .collect();
            let v = f(&block);
            t.insert(&block, v);
        }
        t
    }
}

/// Cumulant of products via the connecting-partition expansion: the cumulant
/// of grouped products equals the sum, over all partitions whose join with
/// the grouping is the full partition, of blockwise joint-cumulant products.
/// With `centered`, partitions containing singletons are skipped (their
/// first-order factors vanish).
pub fn leonov_shiryaev_expand(
    group_sizes: &[usize],
    table: &JointCumulantTable,
    centered: bool,
) -> Result<f64, CumulantError> {
    let n: usize = group_sizes.iter().sum();
    if n == 0 {
        return Err(CumulantError::EmptyInput("group sizes"));
    }
    if n > MAX_CLASSICAL_ORDER {
        return Err(CumulantError::OrderCap(n, MAX_CLASSICAL_ORDER));
    }
    if n != table.arity() {
        return Err(CumulantError::Inconsistent(format!(
            "group sizes sum to {n} but table arity is {}",
            table.arity()
        )));
    }
    let tau = interval_partition(group_sizes);
    let full = SetPartition::full(n);
    let mut acc = 0.0;
    let mut missing: Option<Vec<usize>> = None;
    for_each_partition(n, |p| {
        if missing.is_some() {
            return;
        }
        if centered && p.has_singleton() {
            return;
        }
        if join(p, &tau).expect("same ground set") != full {
            return;
        }
        let mut prod = 1.0;
        for block in p.blocks() {
            match table.get(&block) {
                Some(v) => prod *= v,
                None => {
                    missing = Some(block);
                    return;
                }
            }
        }
        acc += prod;
    });
    if let Some(block) = missing {
        return Err(CumulantError::MissingEntry(block));
    }
    Ok(acc)
}

/// Average spectral moments over realizations: m_k = mean over samples of
/// (1/N) sum_i lambda_i^k.
pub fn empirical_moments(
    samples: &[Vec<f64>],
    order: usize,
) -> Result<MomentVector, CumulantError> {
    if samples.is_empty() || samples.iter().any(|s| s.is_empty()) {
        return Err(CumulantError::EmptyInput("samples"));
    }
    if order == 0 {
        return Err(CumulantError::EmptyInput("order"));
    }
    let mut acc = vec![0.0f64; order];
    for sample in samples {
        let inv = 1.0 / sample.len() as f64;
        let mut powers = vec![1.0f64; sample.len()];
        for m in acc.iter_mut() {
            let mut sum = 0.0;
            for (p, &x) in powers.iter_mut().zip(sample.iter()) {
                *p *= x;
                sum += *p;
            }
            *m += sum * inv;
        }
    }
    let r = samples.len() as f64;
    for m in acc.iter_mut() {
        *m /= r;
    }
    MomentVector::new(acc)
}

/// Plug-in estimator of the joint cumulant of an n-tuple from M observations:
/// sample product-moments combined by the Möbius sum. Bias is O(1/M).
pub fn empirical_joint_cumulant(observations: &[Vec<f64>]) -> Result<f64, CumulantError> {
    if observations.len() < 2 {
        return Err(CumulantError::TooFewObservations {
            need: 2,
            got: observations.len(),
        });
    }
    let n = observations[0].len();
    if n == 0 || n > MAX_JOINT_ARITY {
        return Err(CumulantError::OrderCap(n, MAX_JOINT_ARITY));
    }
    if observations.iter().any(|o| o.len() != n) {
        return Err(CumulantError::Inconsistent(
            "observations have mixed arity".into(),
        ));
    }
    let m = observations.len() as f64;
    let mut subset_moment = vec![0.0f64; 1 << n];
    for obs in observations {
        for mask in 1usize..(1 << n) {
            let mut prod = 1.0;
            for (i, &v) in obs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    prod *= v;
                }
            }
            subset_moment[mask] += prod;
        }
    }
    for v in subset_moment.iter_mut() {
        *v /= m;
    }
    Ok(joint_cumulant_from_subset_moments(n, &subset_moment))
}

/// Möbius combination of subset product-moments into the full joint cumulant.
/// `subset_moment[mask]` is E[prod of slots in mask]; slot i is bit i.
pub fn joint_cumulant_from_subset_moments(n: usize, subset_moment: &[f64]) -> f64 {
    let mut acc = 0.0;
    for_each_partition(n, |p| {
        let mu = partition::full_interval_mobius(p.block_count()) as f64;
        let mut prod = 1.0;
        for block in p.blocks() {
            let mask = block.iter().fold(0usize, |a, &e| a | (1 << (e - 1)));
            prod *= subset_moment[mask];
        }
        acc += mu * prod;
    });
    acc
}

/// Mixed free cumulants kappa_n^{(r_1..r_n)} of a matrix family, stored under
/// cyclic-rotation-canonical label tuples (trace cyclicity).
#[derive(Clone, Debug, Default)]
pub struct MixedFreeCumulants {
    entries: BTreeMap<Vec<u8>, f64>,
}

impl MixedFreeCumulants {
    pub fn new() -> Self {
        Self::default()
    }

    fn canonical(labels: &[u8]) -> Vec<u8> {
        let n = labels.len();
        (0..n)
            .map(|r| {
                let mut rot = Vec::with_capacity(n);
                rot.extend_from_slice(&labels[r..]);
                rot.extend_from_slice(&labels[..r]);
                rot
            })
            .min()
            .expect("nonempty labels")
    }

    pub fn insert(&mut self, labels: &[u8], value: f64) {
        self.entries.insert(Self::canonical(labels), value);
    }

    pub fn get(&self, labels: &[u8]) -> Option<f64> {
        self.entries.get(&Self::canonical(labels)).copied()
    }

    /// True when every label tuple of the given order over `l` matrices has
    /// an entry.
    pub fn complete_at_order(&self, n: usize, l: usize) -> bool {
        all_label_tuples(n, l).iter().all(|t| self.get(t).is_some())
    }
}

pub(crate) fn all_label_tuples(n: usize, l: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t| {
                (1..=l as u8).map(move |r| {
                    let mut t2 = t.clone();
                    t2.push(r);
                    t2
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn first_cumulant_is_the_mean() {
        let m = MomentVector::new(vec![0.7]).unwrap();
        let c = classical_cumulants_from_moments(&m).unwrap();
        assert_abs_diff_eq!(c.c(1), 0.7, epsilon = TOL);
    }

    #[test]
    fn second_classical_cumulant_is_the_variance() {
        let m = MomentVector::new(vec![0.0, 1.8]).unwrap();
        let c = classical_cumulants_from_moments(&m).unwrap();
        assert_abs_diff_eq!(c.c(2), 1.8, epsilon = TOL);
    }

    #[test]
    fn third_classical_cumulant_example() {
        // oracle: direct Möbius sum over the 5 partitions of [3]:
        // c3 = m3 - 3 m1 m2 + 2 m1^3 = 6 - 6 + 2 = 2
        let m = MomentVector::new(vec![1.0, 2.0, 6.0]).unwrap();
        let c = classical_cumulants_from_moments(&m).unwrap();
        assert_abs_diff_eq!(c.c(3), 2.0, epsilon = TOL);
    }

    #[test]
    fn standard_normal_moments_from_cumulants() {
        let mut cv = vec![0.0; 6];
        cv[1] = 1.0;
        let c = CumulantVector::new(CumulantKind::Classical, cv).unwrap();
        let m = moments_from_classical_cumulants(&c).unwrap();
        for (k, expect) in [(1, 0.0), (2, 1.0), (3, 0.0), (4, 3.0), (5, 0.0), (6, 15.0)] {
            assert_abs_diff_eq!(m.m(k), expect, epsilon = TOL);
        }
    }

    #[test]
    fn constant_cumulant_mean_only() {
        let c = CumulantVector::new(CumulantKind::Classical, vec![2.5]).unwrap();
        let m = moments_from_classical_cumulants(&c).unwrap();
        assert_abs_diff_eq!(m.m(1), 2.5, epsilon = TOL);
    }

    #[test]
    fn fourth_moment_from_sparse_cumulants() {
        // kappa = (0,1,0,1): m4 = 3 pairings + kappa4 = 3 + 1 = 4
        let c = CumulantVector::new(CumulantKind::Classical, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let m = moments_from_classical_cumulants(&c).unwrap();
        assert_abs_diff_eq!(m.m(4), 4.0, epsilon = TOL);
    }

    #[test]
    fn semicircle_free_cumulants() {
        let m = MomentVector::new(vec![0.0, 1.0, 0.0, 2.0, 0.0, 5.0]).unwrap();
        let k = free_cumulants_from_moments(&m).unwrap();
        let expect = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        for (i, &e) in expect.iter().enumerate() {
            assert_abs_diff_eq!(k.c(i + 1), e, epsilon = TOL);
        }
    }

    #[test]
    fn free_poisson_free_cumulants() {
        // moments of the square of a standard semicircular element
        let m = MomentVector::new(vec![1.0, 2.0, 5.0, 14.0]).unwrap();
        let k = free_cumulants_from_moments(&m).unwrap();
        for i in 1..=4 {
            assert_abs_diff_eq!(k.c(i), 1.0, epsilon = TOL);
        }
    }

    #[test]
    fn first_free_cumulant_is_the_mean() {
        let m = MomentVector::new(vec![0.3]).unwrap();
        let k = free_cumulants_from_moments(&m).unwrap();
        assert_abs_diff_eq!(k.c(1), 0.3, epsilon = TOL);
    }

    #[test]
    fn semicircle_moments_are_catalan() {
        let k =
            CumulantVector::new(CumulantKind::Free, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
                .unwrap();
        let m = moments_from_free_cumulants(&k).unwrap();
        for (n, expect) in [(2usize, 1.0), (4, 2.0), (6, 5.0), (8, 14.0)] {
            assert_abs_diff_eq!(m.m(n), expect, epsilon = TOL);
            assert_abs_diff_eq!(m.m(n - 1), 0.0, epsilon = TOL);
        }
    }

    #[test]
    fn zero_free_cumulants_zero_moments() {
        let k = CumulantVector::new(CumulantKind::Free, vec![0.0; 5]).unwrap();
        let m = moments_from_free_cumulants(&k).unwrap();
        for n in 1..=5 {
            assert_abs_diff_eq!(m.m(n), 0.0, epsilon = TOL);
        }
    }

    #[test]
    fn all_ones_free_cumulants_give_free_poisson_moments() {
        let k = CumulantVector::new(CumulantKind::Free, vec![1.0; 4]).unwrap();
        let m = moments_from_free_cumulants(&k).unwrap();
        assert_abs_diff_eq!(m.m(1), 1.0, epsilon = TOL);
        assert_abs_diff_eq!(m.m(2), 2.0, epsilon = TOL);
        assert_abs_diff_eq!(m.m(3), 5.0, epsilon = TOL);
        assert_abs_diff_eq!(m.m(4), 14.0, epsilon = TOL);
    }

    #[test]
    fn moments_from_free_matches_explicit_noncrossing_sum() {
        let k = CumulantVector::new(
            CumulantKind::Free,
            vec![0.4, 1.3, -0.2, 0.7, 0.1, -0.5, 0.9, 0.3],
        )
        .unwrap();
        let m = moments_from_free_cumulants(&k).unwrap();
        for n in 1..=8 {
            let mut acc = 0.0;
            for_each_noncrossing(n, &mut |p| {
                acc += p.block_sizes().iter().map(|&s| k.c(s)).product::<f64>();
            });
            assert_abs_diff_eq!(m.m(n), acc, epsilon = 1e-10);
        }
    }

    #[test]
    fn order_caps_error() {
        let m = MomentVector::new(vec![0.0; 13]).unwrap();
        assert!(matches!(
            classical_cumulants_from_moments(&m),
            Err(CumulantError::OrderCap(13, MAX_CLASSICAL_ORDER))
        ));
        let m = MomentVector::new(vec![0.0; 17]).unwrap();
        assert!(matches!(
            free_cumulants_from_moments(&m),
            Err(CumulantError::OrderCap(17, MAX_FREE_ORDER))
        ));
    }

    #[test]
    fn kreweras_complement_extremes() {
        let zero = NoncrossingPartition::new(SetPartition::singletons(5)).unwrap();
        assert_eq!(kreweras_complement(&zero), SetPartition::full(5));
        let one = NoncrossingPartition::new(SetPartition::full(5)).unwrap();
        assert_eq!(kreweras_complement(&one), SetPartition::singletons(5));
    }

    #[test]
    fn kreweras_complement_small_example() {
        // p = {1,2}{3}: complement pairs 2' with 3' (interval (2,3] is the
        // block {3}) and leaves 1' alone... on the circle, 1' joins {3'}?
        // direct check against the defining saturation rule instead:
        let p = NoncrossingPartition::new("{1,2}{3}".parse().unwrap()).unwrap();
        let k = kreweras_complement(&p);
        // intervals: (1,2] = {2} not a union of blocks; (2,3] = {3} is;
        // (1,3] = {2,3} not. So 2' ~ 3' only.
        assert_eq!(k, "{1}{2,3}".parse().unwrap());
    }

    #[test]
    fn noncrossing_mobius_full_interval_is_signed_catalan() {
        for n in 1..=8usize {
            let zero = NoncrossingPartition::new(SetPartition::singletons(n)).unwrap();
            assert_eq!(noncrossing_full_mobius(&zero), signed_catalan(n), "n={n}");
        }
    }

    #[test]
    fn leonov_shiryaev_pair_of_pairs_symbolic() {
        // c2(a1 a2, a3 a4) with centered arguments: the closed form is
        // c4 + c2(a1,a4) c2(a2,a3) + c2(a1,a3) c2(a2,a4)
        let pair_value = |block: &[usize]| match block {
            [1, 2] => 2.0,
            [1, 3] => 3.0,
            [1, 4] => 5.0,
            [2, 3] => 7.0,
            [2, 4] => 11.0,
            [3, 4] => 13.0,
            _ => 0.0,
        };
        let table = JointCumulantTable::fill_with(4, |block| match block.len() {
            1 => 0.0,
            2 => pair_value(block),
            3 => 19.0, // never connects both groups on its own with no singletons
            _ => 17.0,
        });
        let got = leonov_shiryaev_expand(&[2, 2], &table, true).unwrap();
        let expect = 17.0 + 5.0 * 7.0 + 3.0 * 11.0;
        assert_abs_diff_eq!(got, expect, epsilon = TOL);
    }

    #[test]
    fn leonov_shiryaev_trivial_grouping_is_plain_cumulant() {
        // with groups of size one the grouping partition is discrete and the
        // join condition selects connected partitions; on a table whose
        // values are multiplicative over blocks of an underlying cumulant
        // this reproduces the plain joint cumulant. Simplest check: a table
        // where only the full block is nonzero.
        let table = JointCumulantTable::fill_with(3, |block| {
            if block.len() == 3 {
                42.0
            } else {
                0.0
            }
        });
        let got = leonov_shiryaev_expand(&[1, 1, 1], &table, false).unwrap();
        assert_abs_diff_eq!(got, 42.0, epsilon = TOL);
    }

    #[test]
    fn leonov_shiryaev_independent_groups_vanish() {
        // exact discrete three-point laws: pair (a, a^2 - 1/2) with
        // a in {-1, 0, 1} at probs {1/4, 1/2, 1/4}; two independent copies.
        let e_pair = |pa: u32, pb: u32| -> f64 {
            let xs = [-1.0f64, 0.0, 1.0];
            let ps = [0.25f64, 0.5, 0.25];
            xs.iter()
                .zip(ps)
                .map(|(&x, p)| x.powi(pa as i32) * (x * x - 0.5).powi(pb as i32) * p)
                .sum()
        };
        // the slots are (a1, a2, a3, a4) = (x, x^2-1/2, y, y^2-1/2)
        let powers_of = |slot: usize| -> (u32, u32) {
            if slot % 2 == 1 {
                (1, 0)
            } else {
                (0, 1)
            }
        };
        // exact joint cumulants inside one pair via the Möbius sum on
        // exact moments; cross-group cumulants vanish by independence
        let exact_within = |slots: &[usize]| -> f64 {
            // moments of subsets
            let moment = |subset: &[usize]| -> f64 {
                let (mut pa, mut pb) = (0u32, 0u32);
                for &s in subset {
                    let (a, b) = powers_of(s);
                    pa += a;
                    pb += b;
                }
                e_pair(pa, pb)
            };
            let n = slots.len();
            let mut acc = 0.0;
            for_each_partition(n, |p| {
                let mu = partition::full_interval_mobius(p.block_count()) as f64;
                let mut prod = 1.0;
                for block in p.blocks() {
                    let subset: Vec<usize> = block.iter().map(|&e| slots[e - 1]).collect();
                    prod *= moment(&subset);
                }
                acc += mu * prod;
            });
            acc
        };
        let table = JointCumulantTable::fill_with(4, |block| {
            let groups: std::collections::HashSet<bool> =
                block.iter().map(|&e| e > 2).collect();
            if groups.len() > 1 {
                0.0
            } else {
                exact_within(block)
            }
        });
        let got = leonov_shiryaev_expand(&[2, 2], &table, true).unwrap();
        assert_abs_diff_eq!(got, 0.0, epsilon = TOL);
        // cross-check: exact covariance of the two independent products
        let prod_mean = e_pair(1, 1);
        let cov = prod_mean * prod_mean - prod_mean * prod_mean;
        assert_abs_diff_eq!(got, cov, epsilon = TOL);
    }

    #[test]
    fn leonov_shiryaev_missing_entry_errors() {
        let mut table = JointCumulantTable::new(4);
        table.insert(&[1, 2, 3, 4], 1.0);
        let err = leonov_shiryaev_expand(&[2, 2], &table, true).unwrap_err();
        assert!(matches!(err, CumulantError::MissingEntry(_)));
    }

    #[test]
    fn empirical_moments_examples() {
        let m = empirical_moments(&[vec![1.0, 1.0]], 5).unwrap();
        for k in 1..=5 {
            assert_abs_diff_eq!(m.m(k), 1.0, epsilon = TOL);
        }
        let m = empirical_moments(&[vec![-1.0, 1.0]], 4).unwrap();
        assert_abs_diff_eq!(m.m(1), 0.0, epsilon = TOL);
        assert_abs_diff_eq!(m.m(2), 1.0, epsilon = TOL);
        assert_abs_diff_eq!(m.m(3), 0.0, epsilon = TOL);
        assert_abs_diff_eq!(m.m(4), 1.0, epsilon = TOL);
    }

    #[test]
    fn empirical_second_moment_of_normal_draws() {
        use rand::prelude::*;
        use rand_distr::StandardNormal;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(91);
        let n = 10_000;
        let sample: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let m = empirical_moments(&[sample], 2).unwrap();
        // standard error of the m2 estimator: sqrt(Var(x^2)/n) = sqrt(2/n)
        let se = (2.0f64 / n as f64).sqrt();
        assert!(
            (m.m(2) - 1.0).abs() < 5.0 * se,
            "m2 = {} outside the 5-sigma band {se}",
            m.m(2)
        );
    }

    #[test]
    fn empirical_joint_cumulants_of_constants_vanish() {
        let obs: Vec<Vec<f64>> = (0..100).map(|_| vec![2.0, 3.0]).collect();
        let c = empirical_joint_cumulant(&obs).unwrap();
        assert_abs_diff_eq!(c, 0.0, epsilon = TOL);
    }

    #[test]
    fn empirical_joint_cumulants_of_gaussian_pairs() {
        use rand::prelude::*;
        use rand_distr::StandardNormal;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let m = 200_000;
        let pairs: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let a: f64 = rng.sample(StandardNormal);
                vec![a, a]
            })
            .collect();
        let c2 = empirical_joint_cumulant(&pairs).unwrap();
        assert!((c2 - 1.0).abs() < 0.02, "c2 = {c2}");
        let quads: Vec<Vec<f64>> = pairs.iter().map(|p| vec![p[0], p[0], p[0], p[0]]).collect();
        let c4 = empirical_joint_cumulant(&quads).unwrap();
        assert!(c4.abs() < 0.2, "c4 = {c4}");
    }

    #[test]
    fn mixed_free_cumulants_cyclic_keys() {
        let mut t = MixedFreeCumulants::new();
        t.insert(&[1, 2, 2], 0.5);
        assert_eq!(t.get(&[2, 2, 1]), Some(0.5));
        assert_eq!(t.get(&[2, 1, 2]), Some(0.5));
        assert_eq!(t.get(&[1, 1, 2]), None);
        assert!(!t.complete_at_order(2, 2));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn classical_round_trip(values in proptest::collection::vec(-2.0f64..2.0, 1..10)) {
            let m = MomentVector::new(values).unwrap();
            let c = classical_cumulants_from_moments(&m).unwrap();
            let back = moments_from_classical_cumulants(&c).unwrap();
            // tolerance at the scale of the intermediate cumulants, which can
            // dwarf the moments and set the cancellation level
            let scale = 1.0 + c.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for k in 1..=m.order() {
                prop_assert!((m.m(k) - back.m(k)).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn free_round_trip(values in proptest::collection::vec(-2.0f64..2.0, 1..10)) {
            let m = MomentVector::new(values).unwrap();
            let k = free_cumulants_from_moments(&m).unwrap();
            let back = moments_from_free_cumulants(&k).unwrap();
            let scale = 1.0 + k.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 1..=m.order() {
                prop_assert!((m.m(i) - back.m(i)).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn classical_and_free_agree_at_low_order(values in proptest::collection::vec(-2.0f64..2.0, 2..6)) {
            let m = MomentVector::new(values).unwrap();
            let c = classical_cumulants_from_moments(&m).unwrap();
            let k = free_cumulants_from_moments(&m).unwrap();
            prop_assert!((c.c(1) - k.c(1)).abs() < 1e-12);
            prop_assert!((c.c(2) - k.c(2)).abs() < 1e-12);
        }

        #[test]
        fn free_moebius_sum_matches_triangular_solve(values in proptest::collection::vec(-1.5f64..1.5, 8..9)) {
            // the two extraction routes must agree where both run
            let m = MomentVector::new(values).unwrap();
            let k = free_cumulants_from_moments(&m).unwrap(); // order 8: Möbius route
            let s = composition_sums(&m, 8);
            let mut rest = 0.0;
            for b in 1..8 {
                rest += k.c(b) * s[b][8 - b];
            }
            let solve = m.m(8) - rest;
            prop_assert!((k.c(8) - solve).abs() < 1e-9 * (1.0 + solve.abs()));
        }

        #[test]
        fn estimator_is_multilinear(scale in 0.2f64..5.0) {
            use rand::prelude::*;
            use rand_distr::StandardNormal;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            let obs: Vec<Vec<f64>> = (0..500)
                .map(|_| (0..3).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
                .collect();
            let base = empirical_joint_cumulant(&obs).unwrap();
            let scaled: Vec<Vec<f64>> = obs
                .iter()
                .map(|o| vec![o[0] * scale, o[1], o[2]])
                .collect();
            let got = empirical_joint_cumulant(&scaled).unwrap();
            prop_assert!((got - scale * base).abs() < 1e-10 * (1.0 + base.abs()) * scale.max(1.0));
        }
    }
}
