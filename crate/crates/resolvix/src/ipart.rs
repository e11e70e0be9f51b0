//! Homogeneous interval chains and partitions that avoid them.
//!
//! A chain `p0 < p1 < ... < p(k-1)` is homogeneous for a 2-coloring when every
//! initial interval `[p0, pj]` is monochromatic. "Contains an infinite chain"
//! is replaced throughout by "contains a chain of at least `threshold`
//! elements".

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::order::{antichain_cover_size, antichain_hitter, Elem, FinitePoset, Interval, Order, OrderError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IpartError {
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("coloring covers {given} elements, window needs {needed}")]
    ShortColoring { given: usize, needed: usize },
    #[error("element {elem} has color {color}, expected 0 or 1")]
    BadColor { elem: Elem, color: u8 },
    #[error("induction stuck at step {step}: {reason}")]
    InductionStuck { step: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntervalChainWitness {
    pub color: u8,
    pub chain: Vec<Elem>,
    pub certified_intervals: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainSearch {
    pub k: usize,
    pub window: usize,
    pub witness: Option<IntervalChainWitness>,
    /// Start elements examined before the search stopped.
    pub starts: usize,
    /// Longest homogeneous chain found over the examined starts, and its start.
    pub longest: usize,
    pub longest_start: Option<Elem>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IMaximalInterval {
    pub color: u8,
    pub lo: Elem,
    pub hi: Elem,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IMaximalSearch {
    pub found: Option<IMaximalInterval>,
    /// Maximal candidates with an uncertified element above them in the window.
    pub open: Vec<Elem>,
}

fn limit(p: &dyn Order, window: usize) -> usize {
    p.size().map_or(window, |s| s.min(window))
}

fn certified(p: &dyn Order, t: Elem, n: usize) -> bool {
    p.down_bound(t).is_some_and(|b| b <= n)
}

fn check_colors(colors: &[u8], n: usize) -> Result<(), IpartError> {
    if colors.len() < n {
        return Err(IpartError::ShortColoring { given: colors.len(), needed: n });
    }
    match colors[..n].iter().position(|&c| c > 1) {
        Some(e) => Err(IpartError::BadColor { elem: e, color: colors[e] }),
        None => Ok(()),
    }
}

/// The certified `t >= s` with `[s, t]` inside the color class of `s`, in index order.
fn homogeneous_tops(p: &dyn Order, colors: &[u8], s: Elem, n: usize) -> Vec<Elem> {
    let c = colors[s];
    (0..n)
        .filter(|&t| p.le(s, t) && certified(p, t, n))
        .filter(|&t| {
            let bound = p.down_bound(t).unwrap_or(0);
            (0..bound).all(|r| !(p.le(s, r) && p.le(r, t)) || colors[r] == c)
        })
        .collect()
}

/// Longest chain starting at each member of `set`, going up inside `set`.
fn heights(p: &dyn Order, set: &[Elem]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..set.len()).collect();
    let above = |i: usize| set.iter().filter(|&&b| p.lt(set[i], b)).count();
    order.sort_by_key(|&i| above(i));
    let mut h = vec![0; set.len()];
    for &i in &order {
        h[i] = 1 + (0..set.len()).filter(|&j| p.lt(set[i], set[j])).map(|j| h[j]).max().unwrap_or(0);
    }
    h
}

/// Searches starts in index order for a homogeneous chain with `k` elements,
/// returning the lexicographically first one.
pub fn find_homogeneous_chain(
    p: &dyn Order,
    colors: &[u8],
    k: usize,
    window: usize,
) -> Result<ChainSearch, IpartError> {
    let n = limit(p, window);
    check_colors(colors, n)?;
    let mut search = ChainSearch { k, window: n, witness: None, starts: 0, longest: 0, longest_start: None };
    let mut uncertified = None;
    for s in 0..n {
        search.starts += 1;
        if uncertified.is_none() {
            uncertified = (0..n).find(|&t| p.le(s, t) && !certified(p, t, n));
        }
        if !certified(p, s, n) {
            continue;
        }
        let tops = homogeneous_tops(p, colors, s, n);
        let h = heights(p, &tops);
        let at = tops.iter().position(|&t| t == s).expect("s is its own top");
        if h[at] > search.longest {
            search.longest = h[at];
            search.longest_start = Some(s);
        }
        if h[at] < k || k == 0 {
            continue;
        }
        let mut chain = vec![s];
        let mut cur = at;
        while chain.len() < k {
            let need = k - chain.len();
            cur = (0..tops.len())
                .find(|&j| p.lt(tops[cur], tops[j]) && h[j] >= need)
                .expect("height guarantees a continuation");
            chain.push(tops[cur]);
        }
        let certified_intervals = chain
            .iter()
            .map(|&t| crate::order::interval(p, s, t, n))
            .collect::<Result<Vec<_>, _>>()?;
        search.witness = Some(IntervalChainWitness { color: colors[s], chain, certified_intervals });
        return Ok(search);
    }
    if let Some(t) = uncertified {
        return Err(OrderError::WindowExceeded {
            elem: t,
            needed: p.down_bound(t).unwrap_or(usize::MAX),
            window: n,
        }
        .into());
    }
    Ok(search)
}

/// Every maximal `t` among the tops whose `[s, t]` stays in the class of `s`,
/// in index order; uncertified elements are ignored.
pub fn i_maximal_tops(p: &dyn Order, colors: &[u8], s: Elem, window: usize) -> Result<Vec<Elem>, IpartError> {
    let n = limit(p, window);
    check_colors(colors, n)?;
    let tops = homogeneous_tops(p, colors, s, n);
    Ok(tops.iter().copied().filter(|&t| !tops.iter().any(|&u| p.lt(t, u))).collect())
}

/// Least-index `t >= s` such that `[s, t]` stays in the class of `s` and no
/// strictly larger top in the window does.
pub fn i_maximal_extension(p: &dyn Order, colors: &[u8], s: Elem, window: usize) -> Result<IMaximalSearch, IpartError> {
    let n = limit(p, window);
    check_colors(colors, n)?;
    let tops = homogeneous_tops(p, colors, s, n);
    let mut open = Vec::new();
    for &t in &tops {
        if tops.iter().any(|&u| p.lt(t, u)) {
            continue;
        }
        if (0..n).any(|u| p.lt(t, u) && !certified(p, u, n)) {
            open.push(t);
            continue;
        }
        return Ok(IMaximalSearch { found: Some(IMaximalInterval { color: colors[s], lo: s, hi: t }), open });
    }
    Ok(IMaximalSearch { found: None, open })
}

/// Number of elements in the longest chain of `[lo, hi]`.
pub fn interval_height(p: &FinitePoset, lo: Elem, hi: Elem) -> usize {
    if !p.le(lo, hi) {
        return 0;
    }
    let members: Vec<Elem> = p.up_set(lo).filter(|&r| p.le(r, hi)).collect();
    heights(p, &members).into_iter().max().unwrap_or(0)
}

/// Every `[lo, hi]` whose longest chain has at least `threshold` elements, in
/// lexicographic `(lo, hi)` order.
pub fn long_intervals(p: &FinitePoset, threshold: usize) -> Vec<(Elem, Elem)> {
    let n = p.len();
    let mut out = Vec::new();
    for lo in 0..n {
        for hi in 0..n {
            if p.le(lo, hi) && interval_height(p, lo, hi) >= threshold {
                out.push((lo, hi));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InductionStep {
    pub step: usize,
    pub interval: Option<(Elem, Elem)>,
    pub element: Option<Elem>,
    /// Elements colored to make the interval meet both classes.
    pub interval_fill: Vec<(Elem, u8)>,
    pub element_color: Option<u8>,
    /// The two hitting antichains above the element, indexed by the class they joined.
    pub blocks: [Vec<Elem>; 2],
    /// Which block was computed first; the second avoids it.
    pub first_block: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AvoidingPartition {
    pub threshold: usize,
    pub window: usize,
    pub labels: Vec<String>,
    pub colors: Vec<u8>,
    pub intervals: Vec<(Elem, Elem)>,
    pub steps: Vec<InductionStep>,
    /// Per element: the step that colored it and the phase (0 interval, 1 element, 2 hitters).
    pub colored_at: Vec<(usize, u8)>,
}

impl AvoidingPartition {
    /// Antichains added to each class: one per singleton fill or element color, one per block.
    pub fn antichains_added(&self) -> [usize; 2] {
        let mut out = [0; 2];
        for s in &self.steps {
            for &(_, c) in &s.interval_fill {
                out[c as usize] += 1;
            }
            if let Some(c) = s.element_color {
                out[c as usize] += 1;
            }
            for c in 0..2 {
                if !s.blocks[c].is_empty() {
                    out[c] += 1;
                }
            }
        }
        out
    }

    pub fn class(&self, c: u8) -> BTreeSet<Elem> {
        (0..self.colors.len()).filter(|&e| self.colors[e] == c).collect()
    }
}

struct DeadWatch {
    long: Vec<(Elem, Elem, Vec<Elem>)>,
    touching: Vec<Vec<usize>>,
}

impl DeadWatch {
    fn new(p: &FinitePoset, long: &[(Elem, Elem)]) -> Self {
        let mut touching = vec![Vec::new(); p.len()];
        let long: Vec<(Elem, Elem, Vec<Elem>)> = long
            .iter()
            .map(|&(lo, hi)| (lo, hi, p.up_set(lo).filter(|&r| p.le(r, hi)).collect()))
            .collect();
        for (i, (_, _, members)) in long.iter().enumerate() {
            for &m in members {
                touching[m].push(i);
            }
        }
        DeadWatch { long, touching }
    }

    /// A long interval that the tentative assignment leaves fully colored with one color.
    fn dead_after(&self, colors: &[Option<u8>], extra: &[(Elem, u8)]) -> Option<(Elem, Elem)> {
        let color_of = |e: Elem| extra.iter().find(|&&(x, _)| x == e).map(|&(_, c)| c).or(colors[e]);
        let touched: BTreeSet<usize> = extra.iter().flat_map(|&(e, _)| self.touching[e].iter().copied()).collect();
        touched.into_iter().find_map(|i| {
            let (lo, hi, members) = &self.long[i];
            let cs: Option<Vec<u8>> = members.iter().map(|&m| color_of(m)).collect();
            match cs {
                Some(cs) if cs.iter().all(|&c| c == cs[0]) => Some((*lo, *hi)),
                _ => None,
            }
        })
    }
}

/// Runs the interleaved induction: at step `m` the `m`-th long interval is made
/// to meet both classes, the `m`-th element is colored, and two disjoint
/// rank-minimizer antichains above it join opposite classes.
pub fn build_avoiding_partition(
    p: &dyn Order,
    window: usize,
    threshold: usize,
    seed: u64,
) -> Result<AvoidingPartition, IpartError> {
    let n = limit(p, window);
    let fp = FinitePoset::from_window(p, n);
    let long = long_intervals(&fp, threshold);
    let watch = DeadWatch::new(&fp, &long);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut colors: Vec<Option<u8>> = vec![None; n];
    let mut colored_at = vec![(usize::MAX, 0u8); n];
    let mut steps = Vec::new();
    let chain_limit = threshold.saturating_sub(1);

    for m in 0..long.len().max(n) {
        let stuck = |reason: String| IpartError::InductionStuck { step: m, reason };
        let mut step = InductionStep {
            step: m,
            interval: long.get(m).map(|&(lo, hi)| (lo, hi)),
            element: (m < n).then_some(m),
            interval_fill: Vec::new(),
            element_color: None,
            blocks: [Vec::new(), Vec::new()],
            first_block: 0,
        };

        if let Some((_, _, members)) = watch.long.get(m) {
            for c in 0..2u8 {
                if members.iter().any(|&r| colors[r] == Some(c)) {
                    continue;
                }
                let pick = members
                    .iter()
                    .copied()
                    .find(|&r| colors[r].is_none() && watch.dead_after(&colors, &[(r, c)]).is_none())
                    .ok_or_else(|| stuck(format!("no free element of {:?} can take color {c}", long[m])))?;
                colors[pick] = Some(c);
                colored_at[pick] = (m, 0);
                step.interval_fill.push((pick, c));
            }
        }

        if m < n {
            if colors[m].is_none() {
                let first: u8 = rng.gen_range(0..2);
                let c = [first, first ^ 1]
                    .into_iter()
                    .find(|&c| watch.dead_after(&colors, &[(m, c)]).is_none())
                    .ok_or_else(|| stuck(format!("element {m} completes a monochrome long interval either way")))?;
                colors[m] = Some(c);
                colored_at[m] = (m, 1);
                step.element_color = Some(c);
            }

            let mut avoid: BTreeSet<Elem> = (0..n).filter(|&e| colors[e].is_some()).collect();
            let b0 = antichain_hitter(&fp, m, &avoid, n, chain_limit)?.hitter;
            avoid.extend(b0.iter().copied());
            let b1 = antichain_hitter(&fp, m, &avoid, n, chain_limit)?.hitter;
            let first: u8 = rng.gen_range(0..2);
            let orient = [first, first ^ 1]
                .into_iter()
                .find(|&c| {
                    let extra: Vec<(Elem, u8)> =
                        b0.iter().map(|&e| (e, c)).chain(b1.iter().map(|&e| (e, c ^ 1))).collect();
                    watch.dead_after(&colors, &extra).is_none()
                })
                .ok_or_else(|| stuck(format!("hitters above {m} complete a monochrome long interval")))?;
            for &e in &b0 {
                colors[e] = Some(orient);
                colored_at[e] = (m, 2);
            }
            for &e in &b1 {
                colors[e] = Some(orient ^ 1);
                colored_at[e] = (m, 2);
            }
            step.first_block = orient;
            step.blocks[orient as usize] = b0;
            step.blocks[orient as usize ^ 1] = b1;
        }
        steps.push(step);
    }

    Ok(AvoidingPartition {
        threshold,
        window: n,
        labels: fp.labels().to_vec(),
        colors: colors.into_iter().map(|c| c.expect("every element is colored at its own step")).collect(),
        intervals: long,
        steps,
        colored_at,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum AvoidViolation {
    IntervalMonochrome { lo: Elem, hi: Elem, color: u8 },
    BlockNotAntichain { step: usize, color: u8 },
    TooManyAntichains { color: u8, cover: usize, added: usize },
    Unhit { step: usize, color: u8, target: Elem },
}

/// Re-checks a built partition against the window: long intervals meet both
/// classes, classes are covered by the antichains added, and each hitter meets
/// `[p, q]` for every target `q` that was free when it was computed.
pub fn validate_avoiding(p: &dyn Order, part: &AvoidingPartition) -> Vec<AvoidViolation> {
    let fp = FinitePoset::from_window(p, part.window);
    let mut out = Vec::new();
    for lo in 0..fp.len() {
        for hi in 0..fp.len() {
            if interval_height(&fp, lo, hi) < part.threshold {
                continue;
            }
            let first = part.colors[lo];
            if fp.up_set(lo).filter(|&r| fp.le(r, hi)).all(|r| part.colors[r] == first) {
                out.push(AvoidViolation::IntervalMonochrome { lo, hi, color: first });
            }
        }
    }
    let added = part.antichains_added();
    for c in 0..2u8 {
        let cover = antichain_cover_size(&fp, &part.class(c));
        if cover > added[c as usize] {
            out.push(AvoidViolation::TooManyAntichains { color: c, cover, added: added[c as usize] });
        }
    }
    let chain_limit = part.threshold.saturating_sub(1);
    for s in &part.steps {
        let Some(base) = s.element else { continue };
        for c in 0..2u8 {
            if !fp.is_antichain(&s.blocks[c as usize]) {
                out.push(AvoidViolation::BlockNotAntichain { step: s.step, color: c });
            }
        }
        // Short region above the base: intervals from it with no chain of `threshold` elements.
        let region: Vec<Elem> = fp
            .up_set(base)
            .filter(|&q| interval_height(&fp, base, q) <= chain_limit)
            .collect();
        let mut taken: BTreeSet<Elem> =
            (0..fp.len()).filter(|&e| part.colored_at[e] < (s.step, 2)).collect();
        for c in [s.first_block, s.first_block ^ 1] {
            let block = &s.blocks[c as usize];
            for &q in region.iter().filter(|q| !taken.contains(q)) {
                if !block.iter().any(|&b| fp.le(base, b) && fp.le(b, q)) {
                    out.push(AvoidViolation::Unhit { step: s.step, color: c, target: q });
                }
            }
            taken.extend(block.iter().copied());
        }
    }
    out
}
