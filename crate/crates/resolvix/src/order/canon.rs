//! Canonical codes and isomorphism-free enumeration of small posets.

use std::collections::{BTreeMap, BTreeSet};

use super::{FinitePoset, Order};

/// Largest size whose relation matrix fits in a `u128` code.
pub const MAX_CANON: usize = 11;

fn code_for(p: &FinitePoset, perm: &[usize]) -> u128 {
    let mut code = 0u128;
    for &a in perm {
        for &b in perm {
            code = code << 1 | p.le(a, b) as u128;
        }
    }
    code
}

/// Refined vertex classes: initial signature is (down-degree, up-degree),
/// then each round adds the sorted multisets of neighbour classes.
fn refine(p: &FinitePoset) -> Vec<usize> {
    let n = p.len();
    let mut class: Vec<usize> = {
        let sig: Vec<(usize, usize)> = (0..n).map(|a| (p.down_set(a).count(), p.up_set(a).count())).collect();
        rank_keys(&sig)
    };
    loop {
        let sig: Vec<(usize, Vec<usize>, Vec<usize>)> = (0..n)
            .map(|a| {
                let mut down: Vec<usize> = p.down_set(a).filter(|&b| b != a).map(|b| class[b]).collect();
                let mut up: Vec<usize> = p.up_set(a).filter(|&b| b != a).map(|b| class[b]).collect();
                down.sort_unstable();
                up.sort_unstable();
                (class[a], down, up)
            })
            .collect();
        let next = rank_keys(&sig);
        let before = class.iter().collect::<BTreeSet<_>>().len();
        let after = next.iter().collect::<BTreeSet<_>>().len();
        class = next;
        if after == before {
            return class;
        }
    }
}

fn rank_keys<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let distinct: BTreeMap<K, usize> =
        keys.iter().cloned().collect::<BTreeSet<_>>().into_iter().enumerate().map(|(i, k)| (k, i)).collect();
    keys.iter().map(|k| distinct[k]).collect()
}

/// Canonical code: minimum relation-matrix code over class-respecting
/// orderings of the refined classes. Two posets are isomorphic iff their
/// sizes and codes agree.
pub fn canonical_code(p: &FinitePoset) -> (usize, u128) {
    let n = p.len();
    assert!(n <= MAX_CANON, "canonical codes need at most {MAX_CANON} elements");
    let class = refine(p);
    let k = class.iter().max().map_or(0, |m| m + 1);
    let groups: Vec<Vec<usize>> = (0..k).map(|c| (0..n).filter(|&a| class[a] == c).collect()).collect();
    let mut best = None;
    let mut perm = Vec::with_capacity(n);
    search(p, &groups, 0, &mut perm, &mut best);
    (n, best.unwrap_or(0))
}

fn search(p: &FinitePoset, groups: &[Vec<usize>], g: usize, perm: &mut Vec<usize>, best: &mut Option<u128>) {
    if g == groups.len() {
        let c = code_for(p, perm);
        if best.is_none_or(|b| c < b) {
            *best = Some(c);
        }
        return;
    }
    let mut items = groups[g].clone();
    permute(&mut items, 0, &mut |order| {
        let base = perm.len();
        perm.extend_from_slice(order);
        search(p, groups, g + 1, perm, best);
        perm.truncate(base);
    });
}

fn permute(items: &mut [usize], k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, f);
        items.swap(k, i);
    }
}

/// One representative per isomorphism class of posets with exactly `n` elements.
pub fn posets_up_to_iso(n: usize) -> Vec<FinitePoset> {
    let mut level = vec![FinitePoset::from_pairs("p0", vec![], &[]).expect("empty poset")];
    for m in 1..=n {
        let mut seen = BTreeMap::new();
        for q in &level {
            // Every poset arises by adding a maximal element over a down-closed set.
            for mask in 0u32..1 << (m - 1) {
                let set: Vec<usize> = (0..m - 1).filter(|&i| mask >> i & 1 == 1).collect();
                let closed = set.iter().all(|&a| q.down_set(a).all(|b| mask >> b & 1 == 1));
                if !closed {
                    continue;
                }
                let mut pairs: Vec<(usize, usize)> = q.covers();
                pairs.extend(set.iter().map(|&a| (a, m - 1)));
                let labels = (0..m).map(|i| i.to_string()).collect();
                let p = FinitePoset::from_pairs(format!("p{m}"), labels, &pairs).expect("acyclic by construction");
                seen.entry(canonical_code(&p)).or_insert(p);
            }
        }
        level = seen.into_values().collect();
    }
    level
}
