//! Set partitions of `[1..n]`, pairings, noncrossing partitions, and the
//! lattice operations (join, Möbius function) that drive every cumulant
//! computation in this crate.
//!
//! Partitions are stored canonically as restricted-growth strings: element
//! `i+1` lives in block `rgs[i]`, blocks are numbered by order of first
//! appearance. This makes equality, hashing and deduplication trivial.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use thiserror::Error;

/// Enumeration cap for general partitions (Bell(12) is ~4.2e6).
pub const MAX_PARTITION_N: usize = 12;
/// Enumeration cap for pairings; 15!! is ~2e6 pairings of 16 points.
pub const MAX_PAIRING_N: usize = 16;
/// Enumeration cap for noncrossing partitions (Catalan(16) is ~3.5e7).
pub const MAX_NONCROSSING_N: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("{what} enumeration limited to n <= {max}, got n = {n}")]
    SizeLimit {
        what: &'static str,
        n: usize,
        max: usize,
    },
    #[error("partitions live on different ground sets ({0} vs {1})")]
    GroundSetMismatch(usize, usize),
    #[error("Möbius function needs comparable arguments: first must refine second")]
    Incomparable,
    #[error("invalid partition: {0}")]
    Invalid(String),
    #[error("ground set must be nonempty")]
    EmptyGroundSet,
}

/// A partition of `{1, ..., n}` into disjoint nonempty blocks.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    rgs: Vec<u8>,
}

impl SetPartition {
    /// Builds a partition from explicit blocks (1-based elements). The blocks
    /// must be disjoint, nonempty, and cover `1..=n` for some `n`.
    pub fn from_blocks(blocks: &[Vec<usize>]) -> Result<Self, PartitionError> {
        let n: usize = blocks.iter().map(|b| b.len()).sum();
        if n == 0 {
            return Err(PartitionError::EmptyGroundSet);
        }
        if n > u8::MAX as usize {
            return Err(PartitionError::Invalid(format!("ground set too large: {n}")));
        }
        let mut owner = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(PartitionError::Invalid("empty block".into()));
            }
            for &e in block {
                if e == 0 || e > n {
                    return Err(PartitionError::Invalid(format!(
                        "element {e} outside 1..={n}"
                    )));
                }
                if owner[e - 1] != usize::MAX {
                    return Err(PartitionError::Invalid(format!("element {e} repeated")));
                }
                owner[e - 1] = b;
            }
        }
        // relabel blocks by first appearance
        let mut relabel = vec![u8::MAX; blocks.len()];
        let mut next = 0u8;
        let mut rgs = Vec::with_capacity(n);
        for &b in &owner {
            if relabel[b] == u8::MAX {
                relabel[b] = next;
                next += 1;
            }
            rgs.push(relabel[b]);
        }
        Ok(SetPartition { rgs })
    }

    /// Builds a partition from a restricted-growth string (`rgs[i]` = block of
    /// element `i+1`, `rgs[0] == 0`, each value at most one more than the max
    /// seen so far).
    pub fn from_rgs(rgs: Vec<u8>) -> Result<Self, PartitionError> {
        if rgs.is_empty() {
            return Err(PartitionError::EmptyGroundSet);
        }
        let mut max_seen = -1i32;
        for &v in &rgs {
            if i32::from(v) > max_seen + 1 {
                return Err(PartitionError::Invalid(
                    "not a restricted-growth string".into(),
                ));
            }
            max_seen = max_seen.max(i32::from(v));
        }
        Ok(SetPartition { rgs })
    }

    /// The discrete partition: every element in its own block.
    pub fn singletons(n: usize) -> Self {
        SetPartition {
            rgs: (0..n as u8).collect(),
        }
    }

    /// The full partition `1_n` with a single block.
    pub fn full(n: usize) -> Self {
        SetPartition { rgs: vec![0; n] }
    }

    pub fn n(&self) -> usize {
        self.rgs.len()
    }

    pub fn block_count(&self) -> usize {
        self.rgs.iter().map(|&v| v as usize).max().unwrap_or(0) + 1
    }

    pub fn rgs(&self) -> &[u8] {
        &self.rgs
    }

    /// Block index (0-based) of a 1-based element.
    pub fn block_of(&self, element: usize) -> usize {
        self.rgs[element - 1] as usize
    }

    /// Blocks in canonical order (sorted by least element, elements ascending).
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.block_count()];
        for (i, &b) in self.rgs.iter().enumerate() {
            blocks[b as usize].push(i + 1);
        }
        blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.block_count()];
        for &b in &self.rgs {
            sizes[b as usize] += 1;
        }
        sizes
    }

    pub fn has_singleton(&self) -> bool {
        self.block_sizes().iter().any(|&s| s == 1)
    }

    pub fn is_pairing(&self) -> bool {
        self.block_sizes().iter().all(|&s| s == 2)
    }

    /// Crossing test: indices a < b < c < d with {a,c} and {b,d} in two
    /// distinct blocks.
    pub fn is_noncrossing(&self) -> bool {
        let n = self.n();
        for a in 0..n {
            for b in a + 1..n {
                if self.rgs[b] == self.rgs[a] {
                    continue;
                }
                for c in b + 1..n {
                    if self.rgs[c] != self.rgs[a] {
                        continue;
                    }
                    for d in c + 1..n {
                        if self.rgs[d] == self.rgs[b] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Refinement order: `self <= other` iff every block of `self` sits inside
    /// a block of `other`.
    pub fn refines(&self, other: &SetPartition) -> Result<bool, PartitionError> {
        if self.n() != other.n() {
            return Err(PartitionError::GroundSetMismatch(self.n(), other.n()));
        }
        let mut image = vec![u8::MAX; self.block_count()];
        for (i, &b) in self.rgs.iter().enumerate() {
            let target = other.rgs[i];
            if image[b as usize] == u8::MAX {
                image[b as usize] = target;
            } else if image[b as usize] != target {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in self.blocks() {
            write!(f, "{{")?;
            for (k, e) in block.iter().enumerate() {
                if k > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SetPartition({self})")
    }
}

impl FromStr for SetPartition {
    type Err = PartitionError;

    /// Parses block notation like `{1,3}{2}`.
    fn from_str(s: &str) -> Result<Self, PartitionError> {
        let s = s.trim();
        if !s.starts_with('{') || !s.ends_with('}') {
            return Err(PartitionError::Invalid(format!("cannot parse `{s}`")));
        }
        let mut blocks = Vec::new();
        for chunk in s[1..s.len() - 1].split("}{") {
            let mut block = Vec::new();
            for tok in chunk.split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    continue;
                }
                block.push(
                    tok.parse::<usize>()
                        .map_err(|_| PartitionError::Invalid(format!("bad element `{tok}`")))?,
                );
            }
            blocks.push(block);
        }
        SetPartition::from_blocks(&blocks)
    }
}

/// A partition with all blocks of size 2.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PairPartition(SetPartition);

impl PairPartition {
    pub fn new(p: SetPartition) -> Result<Self, PartitionError> {
        if !p.is_pairing() {
            return Err(PartitionError::Invalid(format!("{p} is not a pairing")));
        }
        Ok(PairPartition(p))
    }

    pub fn as_partition(&self) -> &SetPartition {
        &self.0
    }

    /// The pairs as (smaller, larger) 1-based tuples, sorted by first element.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.0.blocks().iter().map(|b| (b[0], b[1])).collect()
    }
}

/// A partition without crossings.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NoncrossingPartition(SetPartition);

impl NoncrossingPartition {
    pub fn new(p: SetPartition) -> Result<Self, PartitionError> {
        if !p.is_noncrossing() {
            return Err(PartitionError::Invalid(format!("{p} has a crossing")));
        }
        Ok(NoncrossingPartition(p))
    }

    pub fn as_partition(&self) -> &SetPartition {
        &self.0
    }
}

/// Visits every partition of `[1..n]` in restricted-growth (lexicographic)
/// order without materializing the whole list.
pub fn for_each_partition<F: FnMut(&SetPartition)>(n: usize, mut f: F) {
    assert!(n >= 1 && n <= u8::MAX as usize);
    let mut rgs = vec![0u8; n];
    // max[i] = max(rgs[0..=i]); invariant rgs[i] <= max[i-1] + 1
    let mut max = vec![0u8; n];
    let part = |rgs: &[u8]| SetPartition { rgs: rgs.to_vec() };
    loop {
        f(&part(&rgs));
        // next restricted-growth string
        let mut i = n;
        loop {
            if i == 1 {
                return;
            }
            i -= 1;
            if rgs[i] <= max[i - 1] {
                break;
            }
        }
        rgs[i] += 1;
        max[i] = max[i - 1].max(rgs[i]);
        for k in i + 1..n {
            rgs[k] = 0;
            max[k] = max[k - 1];
        }
    }
}

/// All partitions of `[1..n]`, `n <= 12`. Exhaustive, duplicate-free,
/// canonical order.
pub fn enumerate_partitions(n: usize) -> Result<Vec<SetPartition>, PartitionError> {
    if n == 0 || n > MAX_PARTITION_N {
        return Err(PartitionError::SizeLimit {
            what: "partition",
            n,
            max: MAX_PARTITION_N,
        });
    }
    let mut out = Vec::new();
    for_each_partition(n, |p| out.push(p.clone()));
    Ok(out)
}

fn pairings_rec(free: &mut Vec<usize>, current: &mut Vec<(usize, usize)>, out: &mut Vec<PairPartition>) {
    if free.is_empty() {
        let blocks: Vec<Vec<usize>> = current.iter().map(|&(a, b)| vec![a, b]).collect();
        let p = SetPartition::from_blocks(&blocks).expect("pairs form a partition");
        out.push(PairPartition(p));
        return;
    }
    let first = free[0];
    for k in 1..free.len() {
        let partner = free[k];
        let mut rest: Vec<usize> = Vec::with_capacity(free.len() - 2);
        rest.extend(free.iter().enumerate().filter_map(|(i, &v)| {
            if i == 0 || i == k {
                None
            } else {
                Some(v)
            }
        }));
        current.push((first, partner));
        pairings_rec(&mut rest, current, out);
        current.pop();
    }
}

/// All pairings of `[1..n]`: empty for odd `n`, `(n-1)!!` pairings otherwise.
/// `n <= 16`; larger even n would mean billions of pairings.
pub fn enumerate_pairings(n: usize) -> Result<Vec<PairPartition>, PartitionError> {
    if n == 0 || n > MAX_PAIRING_N {
        return Err(PartitionError::SizeLimit {
            what: "pairing",
            n,
            max: MAX_PAIRING_N,
        });
    }
    if n % 2 == 1 {
        return Ok(Vec::new());
    }
    let mut free: Vec<usize> = (1..=n).collect();
    let mut out = Vec::new();
    pairings_rec(&mut free, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Visits every noncrossing partition of `[1..n]` exactly once.
///
/// Recursion: the block of a segment's first element is an arbitrary subset of
/// the segment containing that element; the gaps it cuts out are independent
/// segments partitioned among themselves. Labels are handed out monotonically
/// along each emission path and canonicalized on emission.
pub fn for_each_noncrossing<F: FnMut(&SetPartition)>(n: usize, f: &mut F) {
    assert!(n >= 1 && n <= u8::MAX as usize);
    let mut rgs = vec![0u8; n];
    let mut stack: Vec<Vec<usize>> = vec![(0..n).collect()];
    nc_next_segment(&mut rgs, &mut stack, 0, f);
}

// Pops and fills the next pending segment; emits when none remain.
fn nc_next_segment<F: FnMut(&SetPartition)>(
    rgs: &mut Vec<u8>,
    stack: &mut Vec<Vec<usize>>,
    next_label: u8,
    f: &mut F,
) {
    match stack.pop() {
        None => {
            f(&canonicalize_labels(rgs));
        }
        Some(seg) if seg.is_empty() => {
            nc_next_segment(rgs, stack, next_label, f);
            stack.push(seg);
        }
        Some(seg) => {
            rgs[seg[0]] = next_label;
            nc_extend_block(rgs, &seg, 1, next_label, next_label + 1, stack, f);
            stack.push(seg);
        }
    }
}

// The block labeled `label` currently ends before seg[from..]. Either stop
// (tail becomes an independent segment) or pick the next member seg[m], the
// skipped gap becoming an independent segment.
fn nc_extend_block<F: FnMut(&SetPartition)>(
    rgs: &mut Vec<u8>,
    seg: &[usize],
    from: usize,
    label: u8,
    next_free: u8,
    stack: &mut Vec<Vec<usize>>,
    f: &mut F,
) {
    stack.push(seg[from..].to_vec());
    nc_next_segment(rgs, stack, next_free, f);
    stack.pop();
    for m in from..seg.len() {
        rgs[seg[m]] = label;
        stack.push(seg[from..m].to_vec());
        nc_extend_block(rgs, seg, m + 1, label, next_free, stack, f);
        stack.pop();
    }
}

fn canonicalize_labels(raw: &[u8]) -> SetPartition {
    let mut map = [u8::MAX; 256];
    let mut next = 0u8;
    let rgs = raw
        .iter()
        .map(|&v| {
            if map[v as usize] == u8::MAX {
                map[v as usize] = next;
                next += 1;
            }
            map[v as usize]
        })
        .collect();
    SetPartition { rgs }
}

/// All noncrossing partitions of `[1..n]` (Catalan(n) of them), `n <= 16`.
pub fn enumerate_noncrossing(n: usize) -> Result<Vec<NoncrossingPartition>, PartitionError> {
    if n == 0 || n > MAX_NONCROSSING_N {
        return Err(PartitionError::SizeLimit {
            what: "noncrossing partition",
            n,
            max: MAX_NONCROSSING_N,
        });
    }
    let mut out = Vec::new();
    for_each_noncrossing(n, &mut |p| out.push(NoncrossingPartition(p.clone())));
    Ok(out)
}

/// Least upper bound of two partitions in the refinement order (union-find on
/// blocks).
pub fn join(p: &SetPartition, q: &SetPartition) -> Result<SetPartition, PartitionError> {
    if p.n() != q.n() {
        return Err(PartitionError::GroundSetMismatch(p.n(), q.n()));
    }
    let n = p.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = x;
        while parent[c] != r {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let ra = find(parent, a);
        let rb = find(parent, b);
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    for part in [p, q] {
        let mut first_of_block: HashMap<u8, usize> = HashMap::new();
        for (i, &b) in part.rgs.iter().enumerate() {
            match first_of_block.get(&b) {
                Some(&f) => union(&mut parent, f, i),
                None => {
                    first_of_block.insert(b, i);
                }
            }
        }
    }
    let mut label: HashMap<usize, u8> = HashMap::new();
    let mut rgs = Vec::with_capacity(n);
    let mut next = 0u8;
    for i in 0..n {
        let r = find(&mut parent, i);
        let l = *label.entry(r).or_insert_with(|| {
            let l = next;
            next += 1;
            l
        });
        rgs.push(l);
    }
    Ok(SetPartition { rgs })
}

// Möbius value of the full interval [0_k, 1_k], computed by the defining
// recursion mu(0,1_k) = -sum_{t < 1_k} mu(0,t) with mu(0,t) multiplicative
// over the blocks of t. Memoized per process. The closed form
// (-1)^{k-1} (k-1)! is used only as a test oracle.
fn mobius_full(k: usize) -> i64 {
    static CACHE: OnceLock<Mutex<HashMap<usize, i64>>> = OnceLock::new();
    if k <= 1 {
        return 1;
    }
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().unwrap().get(&k) {
        return v;
    }
    let mut acc: i64 = 0;
    for_each_partition(k, |t| {
        if t.block_count() == 1 {
            return; // exclude the top itself
        }
        let mut prod: i64 = 1;
        for s in t.block_sizes() {
            prod *= mobius_full(s);
        }
        acc += prod;
    });
    let v = -acc;
    cache.lock().unwrap().insert(k, v);
    v
}

/// Möbius value of the full interval on `k` blocks, for internal reuse by the
/// cumulant transforms.
pub(crate) fn full_interval_mobius(k: usize) -> i64 {
    mobius_full(k)
}

/// Möbius function of the interval `[s, p]` in the partition lattice.
/// Requires `s <= p` in refinement order.
pub fn mobius(s: &SetPartition, p: &SetPartition) -> Result<i64, PartitionError> {
    if !s.refines(p)? {
        return Err(PartitionError::Incomparable);
    }
    // the interval factors over blocks of p; each factor is a full interval on
    // the s-blocks inside that p-block
    let mut counts = vec![0usize; p.block_count()];
    let mut seen = vec![false; s.block_count()];
    for (i, &sb) in s.rgs.iter().enumerate() {
        if !seen[sb as usize] {
            seen[sb as usize] = true;
            counts[p.rgs[i] as usize] += 1;
        }
    }
    Ok(counts.into_iter().map(mobius_full).product())
}

/// A finite word of positive letters, used as a multi-index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexWord {
    letters: Vec<u32>,
}

impl MultiIndexWord {
    pub fn new(letters: Vec<u32>) -> Result<Self, PartitionError> {
        if letters.is_empty() {
            return Err(PartitionError::EmptyGroundSet);
        }
        if letters.iter().any(|&l| l == 0) {
            return Err(PartitionError::Invalid("letters must be >= 1".into()));
        }
        Ok(MultiIndexWord { letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    /// Number of distinct letters.
    pub fn weight(&self) -> usize {
        let mut ls: Vec<u32> = self.letters.clone();
        ls.sort_unstable();
        ls.dedup();
        ls.len()
    }

    /// The kernel partition: positions k, l share a block iff the letters
    /// agree.
    pub fn kernel(&self) -> SetPartition {
        let mut label_of: HashMap<u32, u8> = HashMap::new();
        let mut next = 0u8;
        let rgs = self
            .letters
            .iter()
            .map(|&l| {
                *label_of.entry(l).or_insert_with(|| {
                    let v = next;
                    next += 1;
                    v
                })
            })
            .collect();
        SetPartition { rgs }
    }
}

/// Undirected multigraph walked by a word; self edges split from connecting
/// edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordGraph {
    pub vertices: Vec<u32>,
    /// Every edge of the walk, in walk order, as unordered (min, max) pairs.
    pub edges: Vec<(u32, u32)>,
    pub self_edges: Vec<(u32, u32)>,
    pub connecting_edges: Vec<(u32, u32)>,
    /// The walk as the sequence of traversed (from, to) steps.
    pub walk: Vec<(u32, u32)>,
}

/// Graph of a word: vertices are the distinct letters, edges connect
/// consecutive letters. With `cyclic` the closing step from the last letter
/// back to the first is included, which is the convention needed for cyclic
/// cumulants.
pub fn word_graph(w: &MultiIndexWord, cyclic: bool) -> WordGraph {
    let ls = w.letters();
    let mut vertices: Vec<u32> = ls.to_vec();
    vertices.sort_unstable();
    vertices.dedup();
    let steps = if cyclic { ls.len() } else { ls.len().saturating_sub(1) };
    let mut edges = Vec::with_capacity(steps);
    let mut walk = Vec::with_capacity(steps);
    for k in 0..steps {
        let a = ls[k];
        let b = ls[(k + 1) % ls.len()];
        walk.push((a, b));
        edges.push((a.min(b), a.max(b)));
    }
    let (self_edges, connecting_edges): (Vec<_>, Vec<_>) =
        edges.iter().partition(|&&(a, b)| a == b);
    WordGraph {
        vertices,
        edges,
        self_edges,
        connecting_edges,
        walk,
    }
}

/// Outcome of arranging index pairs into cycles. `cycle_count == 0` means the
/// pairs cannot be arranged into cycles at all (such joint cumulants vanish
/// for invariant ensembles); `diagnostic` then says why.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleStructure {
    pub cycle_count: usize,
    pub lengths: Vec<usize>,
    pub has_subcycles: bool,
    pub shared_edges: bool,
    pub diagnostic: Option<String>,
}

/// Determines whether entry pairs `(i_k, j_k)` can be arranged — permuting
/// arguments and swapping each pair's orientation, as the symmetry
/// `x_ij = x_ji` allows — into disjoint closed cycles.
///
/// Cycles are forced to coincide with the connected components of the
/// underlying multigraph (cycles with shared indices are a single connected
/// cycle with subcycles), so the arrangement search runs per component.
pub fn cycle_structure(pairs: &[(usize, usize)]) -> CycleStructure {
    assert!(!pairs.is_empty(), "cycle_structure needs at least one pair");
    // connected components via union-find over vertices
    let mut verts: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
    verts.sort_unstable();
    verts.dedup();
    let vid: HashMap<usize, usize> = verts.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut parent: Vec<usize> = (0..verts.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = x;
        while parent[c] != r {
            let nx = parent[c];
            parent[c] = r;
            c = nx;
        }
        r
    }
    for &(i, j) in pairs {
        let a = find(&mut parent, vid[&i]);
        let b = find(&mut parent, vid[&j]);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut comp_edges: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for &(i, j) in pairs {
        let root = find(&mut parent, vid[&i]);
        comp_edges.entry(root).or_default().push((i, j));
    }
    let mut roots: Vec<usize> = comp_edges.keys().copied().collect();
    roots.sort_unstable();

    let mut lengths = Vec::new();
    let mut has_subcycles = false;
    let mut shared_edges = false;
    for root in roots {
        let edges = &comp_edges[&root];
        if !component_is_cyclic(edges) {
            return CycleStructure {
                cycle_count: 0,
                lengths: Vec::new(),
                has_subcycles: false,
                shared_edges: false,
                diagnostic: Some(format!(
                    "component containing index {} cannot be closed into a cycle",
                    verts[root]
                )),
            };
        }
        lengths.push(edges.len());
        let mut vs: Vec<usize> = edges.iter().flat_map(|&(i, j)| [i, j]).collect();
        vs.sort_unstable();
        vs.dedup();
        // a closed walk revisits a vertex exactly when it has more edges than
        // vertices
        if edges.len() > vs.len() {
            has_subcycles = true;
        }
        if component_shares_edges(edges) {
            shared_edges = true;
        }
    }
    lengths.sort_unstable();
    lengths.reverse();
    CycleStructure {
        cycle_count: lengths.len(),
        lengths,
        has_subcycles,
        shared_edges,
        diagnostic: None,
    }
}

// Can all edges of one connected component be arranged into a single closed
// walk? Brute-force arrangement search (each edge used once, orientation
// free) for small components; even-degree test for larger ones, where an
// Eulerian circuit is guaranteed to exist.
fn component_is_cyclic(edges: &[(usize, usize)]) -> bool {
    if edges.len() > 10 {
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for &(i, j) in edges {
            *degree.entry(i).or_default() += 1;
            *degree.entry(j).or_default() += 1;
        }
        return degree.values().all(|d| d % 2 == 0);
    }
    let m = edges.len();
    let mut used = vec![false; m];
    let start = edges[0].0;

    fn rec(
        edges: &[(usize, usize)],
        used: &mut Vec<bool>,
        placed: usize,
        at: usize,
        start: usize,
    ) -> bool {
        if placed == edges.len() {
            return at == start;
        }
        for (k, &(i, j)) in edges.iter().enumerate() {
            if used[k] {
                continue;
            }
            for (a, b) in [(i, j), (j, i)] {
                if a != at {
                    continue;
                }
                used[k] = true;
                if rec(edges, used, placed + 1, b, start) {
                    return true;
                }
                used[k] = false;
                if i == j {
                    break; // self loop: both orientations identical
                }
            }
        }
        false
    }

    rec(edges, &mut used, 0, start, start)
}

// Detects whether a maximal decomposition of the component into edge-disjoint
// minimal loops reuses an unordered index pair in two different loops (the
// situation where pair blocks can bridge subcycle passes).
fn component_shares_edges(edges: &[(usize, usize)]) -> bool {
    let m = edges.len();
    let mut used = vec![false; m];
    let mut loops: Vec<Vec<(usize, usize)>> = Vec::new();
    loop {
        let Some(first) = (0..m).find(|&k| !used[k]) else {
            break;
        };
        // walk from the first unused edge, peeling a minimal loop whenever a
        // vertex repeats on the current path
        let mut path_vertices = vec![edges[first].0];
        let mut path_edges: Vec<usize> = Vec::new();
        let mut at = edges[first].0;
        loop {
            let Some((k, next)) = (0..m).find_map(|k| {
                if used[k] {
                    return None;
                }
                let (i, j) = edges[k];
                if i == at {
                    Some((k, j))
                } else if j == at {
                    Some((k, i))
                } else {
                    None
                }
            }) else {
                break; // stranded (non-cyclic component); nothing more to peel
            };
            used[k] = true;
            path_edges.push(k);
            at = next;
            if let Some(pos) = path_vertices.iter().position(|&v| v == at) {
                let lp: Vec<(usize, usize)> = path_edges
                    .drain(pos..)
                    .map(|e| {
                        let (i, j) = edges[e];
                        (i.min(j), i.max(j))
                    })
                    .collect();
                loops.push(lp);
                path_vertices.truncate(pos + 1);
                if path_edges.is_empty() && (0..m).all(|k| used[k]) {
                    break;
                }
            } else {
                path_vertices.push(at);
            }
        }
    }
    for a in 0..loops.len() {
        for b in a + 1..loops.len() {
            if loops[a].iter().any(|e| loops[b].contains(e)) {
                return true;
            }
        }
    }
    false
}

/// All partitions `pi` of `[1..n]` with `join(pi, tau) = 1_n`, where `tau` is
/// the interval partition given by consecutive group sizes. With
/// `require_no_singletons`, partitions containing singleton blocks are
/// dropped (the right filter when all arguments are centered).
pub fn leonov_shiryaev_partitions(
    group_sizes: &[usize],
    require_no_singletons: bool,
) -> Result<Vec<SetPartition>, PartitionError> {
    let n: usize = group_sizes.iter().sum();
    if n == 0 || n > MAX_PARTITION_N {
        return Err(PartitionError::SizeLimit {
            what: "connecting-partition",
            n,
            max: MAX_PARTITION_N,
        });
    }
    if group_sizes.iter().any(|&g| g == 0) {
        return Err(PartitionError::Invalid("empty group".into()));
    }
    let tau = interval_partition(group_sizes);
    let full = SetPartition::full(n);
    let mut out = Vec::new();
    for_each_partition(n, |p| {
        if require_no_singletons && p.has_singleton() {
            return;
        }
        if join(p, &tau).expect("same ground set") == full {
            out.push(p.clone());
        }
    });
    Ok(out)
}

/// The interval partition with consecutive blocks of the given sizes.
pub fn interval_partition(group_sizes: &[usize]) -> SetPartition {
    let mut rgs = Vec::new();
    for (g, &size) in group_sizes.iter().enumerate() {
        rgs.extend(std::iter::repeat(g as u8).take(size));
    }
    SetPartition { rgs }
}
