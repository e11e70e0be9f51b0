//! Finite and lazily enumerated posets: intervals, ranks, the streaming
//! cofinal 2-coloring and the rank-minimizer antichain.

mod canon;
mod lazy;
mod text;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use canon::{canonical_code, posets_up_to_iso};
pub use lazy::{builtin, Chain, Grid, Tree2};
pub use text::{parse_poset, parse_relation, Relation};

pub type Elem = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("{lo} is not below {hi}")]
    NotComparable { lo: Elem, hi: Elem },
    #[error("element {elem} needs indices up to {needed}, beyond the window of {window}")]
    WindowExceeded { elem: Elem, needed: usize, window: usize },
    #[error("element {0} has no strict successor")]
    MaximalElement(Elem),
    #[error("relation cycle through {0} and {1}")]
    Cycle(Elem, Elem),
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error(transparent)]
    Parse(#[from] crate::text::ParseError),
}

/// A poset on enumeration indices, finite or lazily enumerated.
pub trait Order {
    fn name(&self) -> String;
    /// Number of elements; `None` for an infinite enumeration.
    fn size(&self) -> Option<usize>;
    fn le(&self, a: Elem, b: Elem) -> bool;
    /// Some strict successor of `a`, if one exists.
    fn succ(&self, a: Elem) -> Option<Elem>;
    fn label(&self, a: Elem) -> String;
    /// Every `b <= a` has an index below the returned bound.
    fn down_bound(&self, a: Elem) -> Option<usize>;

    fn lt(&self, a: Elem, b: Elem) -> bool {
        a != b && self.le(a, b)
    }
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

fn bit(row: &[u64], b: usize) -> bool {
    row[b / 64] >> (b % 64) & 1 == 1
}

fn set_bit(row: &mut [u64], b: usize) {
    row[b / 64] |= 1 << (b % 64);
}

fn bits_of(row: &[u64]) -> impl Iterator<Item = usize> + '_ {
    row.iter().enumerate().flat_map(|(w, &word)| {
        (0..64).filter(move |i| word >> i & 1 == 1).map(move |i| w * 64 + i)
    })
}

/// A finite poset stored as reflexive up-set bit rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePoset {
    name: String,
    labels: Vec<String>,
    up: Vec<Vec<u64>>,
}

impl FinitePoset {
    /// Builds the reflexive-transitive closure of `pairs` and checks antisymmetry.
    pub fn from_pairs(
        name: impl Into<String>,
        labels: Vec<String>,
        pairs: &[(Elem, Elem)],
    ) -> Result<Self, OrderError> {
        let n = labels.len();
        let w = words(n);
        let mut up = vec![vec![0u64; w]; n];
        for (a, row) in up.iter_mut().enumerate() {
            set_bit(row, a);
        }
        for &(a, b) in pairs {
            set_bit(&mut up[a], b);
        }
        for k in 0..n {
            let row_k = up[k].clone();
            for i in 0..n {
                if i != k && bit(&up[i], k) {
                    for (dst, src) in up[i].iter_mut().zip(&row_k) {
                        *dst |= src;
                    }
                }
            }
        }
        for a in 0..n {
            for b in bits_of(&up[a]) {
                if b != a && bit(&up[b], a) {
                    return Err(OrderError::Cycle(a.min(b), a.max(b)));
                }
            }
        }
        Ok(FinitePoset { name: name.into(), labels, up })
    }

    /// Materialises the first `n` enumerated elements of any order.
    pub fn from_window(p: &dyn Order, n: usize) -> Self {
        let n = p.size().map_or(n, |s| s.min(n));
        let labels = (0..n).map(|a| p.label(a)).collect();
        let w = words(n);
        let mut up = vec![vec![0u64; w]; n];
        for (a, row) in up.iter_mut().enumerate() {
            for b in 0..n {
                if p.le(a, b) {
                    set_bit(row, b);
                }
            }
        }
        FinitePoset { name: p.name(), labels, up }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<Elem> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn elem(&self, label: &str) -> Result<Elem, OrderError> {
        self.index_of(label).ok_or_else(|| OrderError::UnknownElement(label.to_string()))
    }

    pub fn up_set(&self, a: Elem) -> impl Iterator<Item = Elem> + '_ {
        bits_of(&self.up[a])
    }

    pub fn down_set(&self, a: Elem) -> impl Iterator<Item = Elem> + '_ {
        (0..self.len()).filter(move |&b| bit(&self.up[b], a))
    }

    /// Cover pairs `a < b` with nothing strictly between, in index order.
    pub fn covers(&self) -> Vec<(Elem, Elem)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for b in self.up_set(a) {
                if b == a {
                    continue;
                }
                let between = self.up_set(a).any(|c| c != a && c != b && self.le(c, b));
                if !between {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn is_maximal(&self, a: Elem) -> bool {
        self.up_set(a).all(|b| b == a)
    }

    pub fn is_minimal(&self, a: Elem) -> bool {
        self.down_set(a).all(|b| b == a)
    }

    pub fn is_antichain(&self, set: &[Elem]) -> bool {
        set.iter().enumerate().all(|(i, &a)| set[i + 1..].iter().all(|&b| !self.le(a, b) && !self.le(b, a)))
    }

    /// Sub-poset on `keep` (in that order), labels carried over.
    pub fn restrict(&self, keep: &[Elem]) -> FinitePoset {
        let labels = keep.iter().map(|&a| self.labels[a].clone()).collect();
        let n = keep.len();
        let mut up = vec![vec![0u64; words(n)]; n];
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate() {
                if self.le(a, b) {
                    set_bit(&mut up[i], j);
                }
            }
        }
        FinitePoset { name: self.name.clone(), labels, up }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn to_text(&self) -> String {
        text::write_poset(self)
    }
}

impl Order for FinitePoset {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn size(&self) -> Option<usize> {
        Some(self.len())
    }
    fn le(&self, a: Elem, b: Elem) -> bool {
        bit(&self.up[a], b)
    }
    fn succ(&self, a: Elem) -> Option<Elem> {
        self.up_set(a).find(|&b| b != a)
    }
    fn label(&self, a: Elem) -> String {
        self.labels[a].clone()
    }
    fn down_bound(&self, a: Elem) -> Option<usize> {
        Some(self.down_set(a).max().map_or(0, |m| m + 1))
    }
}

fn scan_limit(p: &dyn Order, window: usize) -> usize {
    p.size().map_or(window, |s| s.min(window))
}

/// Certifies that the down-set of `a` lies inside the window.
fn check_closed(p: &dyn Order, a: Elem, window: usize) -> Result<(), OrderError> {
    match p.down_bound(a) {
        Some(b) if b <= scan_limit(p, window) => Ok(()),
        Some(b) => Err(OrderError::WindowExceeded { elem: a, needed: b, window }),
        None => Err(OrderError::WindowExceeded { elem: a, needed: usize::MAX, window }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub lo: Elem,
    pub hi: Elem,
    pub members: Vec<Elem>,
}

/// `[lo, hi]`, certified complete inside the window.
pub fn interval(p: &dyn Order, lo: Elem, hi: Elem, window: usize) -> Result<Interval, OrderError> {
    if !p.le(lo, hi) {
        return Err(OrderError::NotComparable { lo, hi });
    }
    check_closed(p, hi, window)?;
    let bound = p.down_bound(hi).unwrap_or(0);
    let members = (0..bound).filter(|&r| p.le(lo, r) && p.le(r, hi)).collect();
    Ok(Interval { lo, hi, members })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WellFoundedness {
    pub well_founded: bool,
    /// A pair of distinct elements each below the other.
    pub cycle: Option<(Elem, Elem)>,
    /// Minimal elements of the window when no cycle exists.
    pub minimal: Vec<Elem>,
}

/// On a finite window well-foundedness can only fail through a relation cycle.
pub fn is_well_founded(p: &dyn Order, window: usize) -> WellFoundedness {
    let n = scan_limit(p, window);
    for a in 0..n {
        for b in a + 1..n {
            if p.le(a, b) && p.le(b, a) {
                return WellFoundedness { well_founded: false, cycle: Some((a, b)), minimal: vec![] };
            }
        }
    }
    let minimal = (0..n).filter(|&a| (0..n).all(|b| b == a || !p.le(b, a))).collect();
    WellFoundedness { well_founded: true, cycle: None, minimal }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankTable {
    pub base: Elem,
    pub ranks: BTreeMap<Elem, usize>,
}

impl RankTable {
    pub fn get(&self, e: Elem) -> Option<usize> {
        self.ranks.get(&e).copied()
    }
}

/// Rank from `base` over every `q >= base` in the window whose interval
/// `[base, q]` has no chain with more than `chain_limit` elements.
pub fn rank_with(
    p: &dyn Order,
    base: Elem,
    window: usize,
    chain_limit: usize,
) -> Result<RankTable, OrderError> {
    let n = scan_limit(p, window);
    let mut above: Vec<Elem> = (0..n).filter(|&q| p.le(base, q)).collect();
    for &q in &above {
        check_closed(p, q, window)?;
    }
    // Strictly smaller intervals come first, which is a linear extension.
    let size_of = |q: Elem| above.iter().filter(|&&s| p.le(s, q)).count();
    let mut keyed: Vec<(usize, Elem)> = above.iter().map(|&q| (size_of(q), q)).collect();
    keyed.sort_unstable();
    above = keyed.into_iter().map(|(_, q)| q).collect();
    let mut ranks: BTreeMap<Elem, usize> = BTreeMap::new();
    for &t in &above {
        let rk = above
            .iter()
            .filter(|&&s| s != t && p.le(s, t))
            .filter_map(|s| ranks.get(s).map(|r| r + 1))
            .max()
            .unwrap_or(0);
        let below_all_ranked = above.iter().filter(|&&s| s != t && p.le(s, t)).all(|s| ranks.contains_key(s));
        if below_all_ranked && rk < chain_limit {
            ranks.insert(t, rk);
        }
    }
    Ok(RankTable { base, ranks })
}

pub fn rank(p: &dyn Order, base: Elem, window: usize) -> Result<RankTable, OrderError> {
    rank_with(p, base, window, window)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StonePartition {
    pub processed: usize,
    pub colors: BTreeMap<Elem, u8>,
}

/// Streaming cofinal 2-coloring: each processed element receives upper bounds
/// of both colors, pulling fresh successors when one is missing.
pub fn stone_partition(p: &dyn Order, steps: usize, seed: u64) -> Result<StonePartition, OrderError> {
    if let Some(n) = p.size() {
        if let Some(top) = (0..n).find(|&a| p.succ(a).is_none()) {
            return Err(OrderError::MaximalElement(top));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut colors: BTreeMap<Elem, u8> = BTreeMap::new();
    let steps = p.size().map_or(steps, |s| s.min(steps));
    for e in 0..steps {
        colors.entry(e).or_insert_with(|| rng.gen_range(0..2));
        let mut have = [false; 2];
        for (&q, &c) in &colors {
            if p.le(e, q) {
                have[c as usize] = true;
            }
        }
        let mut cur = e;
        let mut next_color = rng.gen_range(0..2u8);
        while !(have[0] && have[1]) {
            cur = p.succ(cur).ok_or(OrderError::MaximalElement(cur))?;
            match colors.get(&cur) {
                Some(&c) => have[c as usize] = true,
                None => {
                    let c = if !have[0] && !have[1] {
                        next_color ^= 1;
                        next_color
                    } else if have[0] {
                        1
                    } else {
                        0
                    };
                    colors.insert(cur, c);
                    have[c as usize] = true;
                }
            }
        }
    }
    Ok(StonePartition { processed: steps, colors })
}

/// First processed element lacking an upper bound of some color among the
/// colored elements, with that color.
pub fn stone_violation(p: &dyn Order, part: &StonePartition) -> Option<(Elem, u8)> {
    (0..part.processed).find_map(|e| {
        (0..2u8).find(|&c| !part.colors.iter().any(|(&q, &qc)| qc == c && p.le(e, q))).map(|c| (e, c))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hitter {
    /// Elements above `p` with short intervals from `p`.
    pub region: Vec<Elem>,
    /// `region` minus the avoided set.
    pub targets: Vec<Elem>,
    /// The rank minimizers, one per target (deduplicated).
    pub hitter: Vec<Elem>,
    /// Number of antichains in the rank-level cover of the avoided set.
    pub avoided_antichains: usize,
}

/// The antichain `{q- : q in Q}` where `q-` minimizes rank on `[p,q]` minus `avoid`.
pub fn antichain_hitter(
    p: &dyn Order,
    base: Elem,
    avoid: &BTreeSet<Elem>,
    window: usize,
    chain_limit: usize,
) -> Result<Hitter, OrderError> {
    check_closed(p, base, window)?;
    let table = rank_with(p, base, window, chain_limit)?;
    let region: Vec<Elem> = table.ranks.keys().copied().collect();
    let targets: Vec<Elem> = region.iter().copied().filter(|q| !avoid.contains(q)).collect();
    let mut hitter = BTreeSet::new();
    for &q in &targets {
        let best = region
            .iter()
            .copied()
            .filter(|&r| p.le(r, q) && !avoid.contains(&r))
            .min_by_key(|&r| (table.ranks[&r], r))
            .expect("q itself qualifies");
        hitter.insert(best);
    }
    Ok(Hitter {
        region,
        targets,
        hitter: hitter.into_iter().collect(),
        avoided_antichains: antichain_cover_size(p, avoid),
    })
}

/// Size of the height-level antichain cover of a finite set: the longest chain inside it.
pub fn antichain_cover_size(p: &dyn Order, set: &BTreeSet<Elem>) -> usize {
    let items: Vec<Elem> = set.iter().copied().collect();
    let mut order = items.clone();
    order.sort_by_key(|&a| items.iter().filter(|&&b| p.le(b, a)).count());
    let mut height: BTreeMap<Elem, usize> = BTreeMap::new();
    for &a in &order {
        let h = order
            .iter()
            .filter(|&&b| b != a && p.le(b, a))
            .filter_map(|b| height.get(b))
            .max()
            .map_or(1, |h| h + 1);
        height.insert(a, h);
    }
    height.values().copied().max().unwrap_or(0)
}
