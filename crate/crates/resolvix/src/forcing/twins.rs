//! Twins, isomorphism types, amalgamation of twins and nice Δ-systems.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{leq, pair_key, validate, Condition, ForcingError};
use crate::grid::GridElem;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwinFailure {
    pub clause: &'static str,
    pub detail: String,
}

fn fail(clause: &'static str, detail: impl Into<String>) -> TwinFailure {
    TwinFailure { clause, detail: detail.into() }
}

/// Renames every column and index through `map`. Columns missing from
/// `map` are kept.
pub fn map_columns(p: &Condition, map: &BTreeMap<usize, usize>) -> Condition {
    let m = |a: usize| map.get(&a).copied().unwrap_or(a);
    let me = |x: GridElem| GridElem::new(m(x.alpha), x.n);
    let mut c = Condition {
        points: p.points.iter().map(|&x| me(x)).collect(),
        order: p.order.iter().map(|&(x, y)| (me(x), me(y))).collect(),
        indices: p.indices.iter().map(|&a| m(a)).collect(),
        trees: p.trees.iter().map(|(&a, t)| (m(a), t.iter().map(|&x| me(x)).collect())).collect(),
        f: p.f.iter().map(|(&(a, b), &v)| (pair_key(m(a), m(b)), v)).collect(),
        g: p.g.iter().map(|(&(x, a), &v)| ((me(x), m(a)), v)).collect(),
    };
    c.normalize();
    c
}

/// Checks (T1)–(T7) and returns the order-preserving support bijection.
pub fn twins(p: &Condition, q: &Condition) -> Result<BTreeMap<usize, usize>, TwinFailure> {
    let (sp, sq) = (p.support(), q.support());
    if sp.len() != sq.len() {
        return Err(fail("T1", format!("supports have sizes {} and {}", sp.len(), sq.len())));
    }
    let common = sp.intersection(&sq).max();
    let diff = sp.symmetric_difference(&sq).min();
    if let (Some(&c), Some(&d)) = (common, diff) {
        if c >= d {
            return Err(fail("T1", format!("common index {c} is not below differing index {d}")));
        }
    }
    let rho: BTreeMap<usize, usize> = sp.iter().copied().zip(sq.iter().copied()).collect();
    let img = map_columns(p, &rho);
    if img.points != q.points {
        return Err(fail("T2", "points do not correspond"));
    }
    if img.order != q.order {
        return Err(fail("T3", "orders do not correspond"));
    }
    if img.indices != q.indices {
        return Err(fail("T4", "indices do not correspond"));
    }
    if img.trees != q.trees {
        return Err(fail("T5", "trees do not correspond"));
    }
    if img.f != q.f {
        return Err(fail("T6", "f does not correspond"));
    }
    if img.g != q.g {
        return Err(fail("T7", "g does not correspond"));
    }
    Ok(rho)
}

/// The condition with its support collapsed onto `0..k` in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsoType(pub Condition);

impl Serialize for IsoType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_text())
    }
}

pub fn iso_type(p: &Condition) -> IsoType {
    let collapse: BTreeMap<usize, usize> = p.support().into_iter().enumerate().map(|(i, a)| (a, i)).collect();
    IsoType(map_columns(p, &collapse))
}

/// The common extension of two twins: the component-wise union.
pub fn oplus(p: &Condition, q: &Condition) -> Result<Condition, ForcingError> {
    if p.is_empty() {
        return Ok(q.clone());
    }
    if q.is_empty() {
        return Ok(p.clone());
    }
    twins(p, q).map_err(ForcingError::NotTwins)?;
    let mut r = p.clone();
    r.points.extend(&q.points);
    r.order.extend(&q.order);
    r.indices.extend(&q.indices);
    for (&a, t) in &q.trees {
        r.trees.entry(a).or_default().extend(t);
    }
    r.f.extend(&q.f);
    r.g.extend(&q.g);
    let v = validate(&r);
    if !v.is_empty() {
        return Err(ForcingError::Invalid(v));
    }
    for side in [p, q] {
        let l = leq(&r, side);
        if !l.is_empty() {
            return Err(ForcingError::NotExtension(l));
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaSystem {
    /// Positions in the sample, in increasing order of their blocks.
    pub members: Vec<usize>,
    pub kernel: BTreeSet<usize>,
    pub blocks: Vec<BTreeSet<usize>>,
    /// Some member's support equals the kernel.
    pub degenerate: bool,
}

/// A largest sub-family whose supports share one kernel lying below all the
/// differences, with the differences pairwise ordered. `None` if no two
/// samples qualify.
pub fn nice_delta_system(samples: &[Condition]) -> Option<DeltaSystem> {
    let supports: Vec<BTreeSet<usize>> = samples.iter().map(|c| c.support()).collect();
    let mut kernels: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    for i in 0..supports.len() {
        for j in i + 1..supports.len() {
            kernels.insert(supports[i].intersection(&supports[j]).copied().collect());
        }
    }
    let mut best: Option<DeltaSystem> = None;
    for kernel in kernels {
        let top = kernel.iter().max().copied();
        let mut empty = Vec::new();
        let mut ranged = Vec::new();
        for (i, s) in supports.iter().enumerate() {
            if !kernel.is_subset(s) {
                continue;
            }
            let block: BTreeSet<usize> = s.difference(&kernel).copied().collect();
            match (block.first(), block.last()) {
                (None, _) => empty.push(i),
                (Some(&lo), Some(&hi)) if top.is_none_or(|t| t < lo) => ranged.push((hi, lo, i)),
                _ => {}
            }
        }
        // Interval scheduling: earliest right end first maximizes the count.
        ranged.sort();
        let mut chosen: Vec<(usize, usize)> = Vec::new();
        let mut last_hi: Option<usize> = None;
        for (hi, lo, i) in ranged {
            if last_hi.is_none_or(|h| h < lo) {
                chosen.push((lo, i));
                last_hi = Some(hi);
            }
        }
        let size = empty.len() + chosen.len();
        if size < 2 || best.as_ref().is_some_and(|b| b.members.len() >= size) {
            continue;
        }
        let mut members = empty.clone();
        members.extend(chosen.iter().map(|&(_, i)| i));
        let blocks = members
            .iter()
            .map(|&i| supports[i].difference(&kernel).copied().collect())
            .collect();
        best = Some(DeltaSystem { members, kernel, blocks, degenerate: !empty.is_empty() });
    }
    best
}
