//! Negligible subfamilies, minimal cover counts, weakly separated splits and
//! the neighbourhood-base dichotomy.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    fills, fills_member, is_weakly_increasing, largest_first, union_trace, weakly_increasing_subfamily, FamilyError,
    FillFailure, SetFamily, Sub,
};

/// A weakly increasing `U ⊆ b` with at least `target` members such that
/// `b ∖ U` still fills `b`; members are tried in index order with
/// backtracking, and the result is listed smallest first.
pub fn extract_negligible(fam: &SetFamily, b: &Sub, target: usize) -> Result<Vec<usize>, FamilyError> {
    fills(fam, b, b)?;
    let members: Vec<usize> = b.iter().copied().collect();
    let mut chosen = Sub::new();
    let mut best = 0;
    if negl_search(fam, b, &members, 0, target, &mut chosen, &mut best) {
        let mut out: Vec<usize> = chosen.into_iter().collect();
        out.sort_by_key(|&v| (fam.measure(v), v));
        debug_assert!(is_weakly_increasing(fam, &out));
        Ok(out)
    } else {
        Err(FamilyError::TooSmall { found: best, wanted: target })
    }
}

fn negl_search(
    fam: &SetFamily,
    b: &Sub,
    members: &[usize],
    k: usize,
    target: usize,
    chosen: &mut Sub,
    best: &mut usize,
) -> bool {
    *best = (*best).max(chosen.len());
    if chosen.len() >= target {
        return true;
    }
    if chosen.len() + members.len() - k < target {
        return false;
    }
    for (j, &v) in members.iter().enumerate().skip(k) {
        if chosen.len() + members.len() - j < target {
            return false;
        }
        // Equal extents would break weak increase in the size order.
        if chosen.iter().any(|&c| fam.subset(c, v) && fam.subset(v, c)) {
            continue;
        }
        chosen.insert(v);
        let rest: Sub = b.difference(chosen).copied().collect();
        if b.iter().all(|&u| fills_member(fam, &rest, u))
            && negl_search(fam, b, members, j + 1, target, chosen, best)
        {
            return true;
        }
        chosen.remove(&v);
    }
    false
}

/// Least number of members of `b ∖ {u}` inside `u` covering its window points.
pub fn l_value(fam: &SetFamily, b: &Sub, u: usize) -> Result<usize, FamilyError> {
    let need = fam.demand(u);
    let cands: Vec<u128> = largest_first(fam, b)
        .into_iter()
        .filter(|&v| fam.proper_subset(v, u))
        .map(|v| fam.member(v).trace & need)
        .filter(|&t| t != 0)
        .collect();
    if cands.iter().fold(0, |t, &c| t | c) & need != need {
        return Err(FamilyError::NoCertificate { member: fam.name_of(u).to_string() });
    }
    let mut best = cands.len();
    cover_bb(&cands, need, 0, &mut best);
    Ok(best)
}

fn cover_bb(cands: &[u128], need: u128, used: usize, best: &mut usize) {
    if need == 0 {
        *best = (*best).min(used);
        return;
    }
    if used + 1 >= *best {
        return;
    }
    // Branch on the lowest uncovered point: some chosen set must contain it.
    let x = need & need.wrapping_neg();
    for &c in cands.iter().filter(|&&c| c & x != 0) {
        cover_bb(cands, need & !c, used + 1, best);
    }
}

/// `{U ∈ b : x ∈ U ⊆ U_x}` for each window point `x` of the assignment,
/// after checking `x ∉ U_y` or `y ∉ U_x` for all pairs.
pub fn weak_separation_partition(
    fam: &SetFamily,
    b: &Sub,
    assignment: &BTreeMap<usize, usize>,
) -> Result<BTreeMap<usize, Sub>, FamilyError> {
    let has = |m: usize, x: usize| fam.member(m).trace >> x & 1 == 1;
    for (&x, &ux) in assignment {
        if !has(ux, x) {
            return Err(FamilyError::Precondition(format!(
                "{} does not contain its point {}",
                fam.name_of(ux),
                fam.ground()[x]
            )));
        }
    }
    for (&x, &ux) in assignment {
        for (&y, &uy) in assignment.range(x + 1..) {
            if has(uy, x) && has(ux, y) {
                return Err(FamilyError::NotWeaklySeparated(fam.ground()[x].clone(), fam.ground()[y].clone()));
            }
        }
    }
    let out: BTreeMap<usize, Sub> = assignment
        .iter()
        .map(|(&x, &ux)| (x, b.iter().copied().filter(|&u| has(u, x) && fam.subset(u, ux)).collect()))
        .collect();
    let parts: Vec<&Sub> = out.values().collect();
    for (k, p) in parts.iter().enumerate() {
        for q in &parts[k + 1..] {
            assert!(p.is_disjoint(q), "weak separation makes the families disjoint");
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverAndBase {
    /// Weakly increasing cover of the window, largest first.
    pub cover: Vec<usize>,
    pub base: Sub,
}

/// Splits off a weakly increasing cover of the window; the remainder must
/// still fill `b`.
pub fn split_cover_and_base(fam: &SetFamily, b: &Sub) -> Result<CoverAndBase, FamilyError> {
    fills(fam, b, b)?;
    if fam.window() & !union_trace(fam, b) != 0 {
        let k = (fam.window() & !union_trace(fam, b)).trailing_zeros() as usize;
        return Err(FamilyError::NotFilled(FillFailure { target: fam.name.clone(), point: fam.ground()[k].clone() }));
    }
    // Drop members that add no new window point, so the cover stays small.
    let mut covered = 0u128;
    let mut cover = Vec::new();
    for v in weakly_increasing_subfamily(fam, &largest_first(fam, b)) {
        let t = fam.member(v).trace & fam.window();
        if t & !covered != 0 {
            covered |= t;
            cover.push(v);
        }
    }
    let base: Sub = b.iter().copied().filter(|v| !cover.contains(v)).collect();
    fills(fam, &base, b)?;
    Ok(CoverAndBase { cover, base })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dichotomy {
    Side(u8),
    Both,
    Unknown,
}

/// Which sides of a 2-coloring still reach depth `resolution` in the chain
/// of members containing `x`. Members containing `x` must be nested.
pub fn neighborhood_base_dichotomy(
    fam: &SetFamily,
    b: &Sub,
    x: usize,
    color: &dyn Fn(usize) -> u8,
    resolution: usize,
) -> Result<Dichotomy, FamilyError> {
    let mut chain: Vec<usize> = largest_first(fam, b).into_iter().filter(|&v| fam.member(v).trace >> x & 1 == 1).collect();
    chain.dedup();
    for w in chain.windows(2) {
        if !fam.subset(w[1], w[0]) {
            return Err(FamilyError::Precondition(format!(
                "members {:?} and {:?} at {} are not nested",
                fam.name_of(w[0]),
                fam.name_of(w[1]),
                fam.ground()[x]
            )));
        }
    }
    if chain.len() <= resolution {
        return Ok(Dichotomy::Unknown);
    }
    let reach: Vec<bool> = (0..2u8).map(|c| chain[resolution..].iter().any(|&v| color(v) == c)).collect();
    Ok(match (reach[0], reach[1]) {
        (true, true) => Dichotomy::Both,
        (true, false) => Dichotomy::Side(0),
        _ => Dichotomy::Side(1),
    })
}
