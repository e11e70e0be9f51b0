//! Resolution algorithms: local good pairs and their greedy merge, the staged
//! filler, level-by-level resolution of disjoint levels, the union-closed
//! construction and the dense-requirement coloring.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    certify_pair, extend_fill, fill_target, fills, fills_member, is_good_pair, largest_first, union_trace,
    weakly_increasing_subfamily, Extent, FamilyError, FillCertificate, FillFailure, GoodPair, SetFamily, Span, Sub,
    Target,
};

/// A good pair inside `{V ∈ b : V ⊊ u}` whose sides both fill `u`, found by
/// exhaustive three-way coloring (side 0, side 1, unused), smallest members first.
pub fn find_local_pair(fam: &SetFamily, b: &Sub, u: usize) -> Option<GoodPair> {
    let mut cands: Vec<usize> = b.iter().copied().filter(|&v| fam.proper_subset(v, u)).collect();
    cands.sort_by_key(|&v| (fam.measure(v), v));
    let need = fam.demand(u);
    // suffix[k]: points coverable by candidates k.. .
    let mut suffix = vec![0u128; cands.len() + 1];
    for k in (0..cands.len()).rev() {
        suffix[k] = suffix[k + 1] | fam.member(cands[k]).trace;
    }
    let mut sides = [Sub::new(), Sub::new()];
    let mut cover = [0u128; 2];
    if local_search(fam, &cands, &suffix, need, 0, &mut sides, &mut cover) {
        let [left, right] = sides;
        certify_pair(fam, left, right).ok()
    } else {
        None
    }
}

fn local_search(
    fam: &SetFamily,
    cands: &[usize],
    suffix: &[u128],
    need: u128,
    k: usize,
    sides: &mut [Sub; 2],
    cover: &mut [u128; 2],
) -> bool {
    if (0..2).any(|c| need & !(cover[c] | suffix[k]) != 0) {
        return false;
    }
    if k == cands.len() {
        return true;
    }
    let v = cands[k];
    for c in 0..2 {
        // Proper subsets of v come earlier, so its filling is already decided.
        if fills_member(fam, &sides[1 - c], v) {
            sides[c].insert(v);
            let saved = cover[c];
            cover[c] |= fam.member(v).trace;
            if local_search(fam, cands, suffix, need, k + 1, sides, cover) {
                return true;
            }
            cover[c] = saved;
            sides[c].remove(&v);
        }
    }
    local_search(fam, cands, suffix, need, k + 1, sides, cover)
}

/// A local pair for every member of `b`.
pub fn local_pairs(fam: &SetFamily, b: &Sub) -> Result<BTreeMap<usize, GoodPair>, FamilyError> {
    b.iter()
        .map(|&u| {
            find_local_pair(fam, b, u)
                .map(|p| (u, p))
                .ok_or_else(|| FamilyError::Unresolvable { member: fam.name_of(u).to_string() })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GreedyResolution {
    pub left: Sub,
    pub right: Sub,
    /// True when plain merging of the local pairs already resolved the family.
    pub merged: bool,
    /// Members whose local pairs were merged before the first conflict.
    pub merged_members: usize,
    pub left_fills: Vec<FillCertificate>,
    pub right_fills: Vec<FillCertificate>,
}

/// Merges the local pairs with [`extend_fill`], largest member first, and puts
/// untouched members on the left.
///
/// A merge can break at window scale when frontier members collide; the
/// remaining members are then resolved by extending the partial coloring
/// with local colorings compatible with it, backtracking as needed.
pub fn resolve_good_pair_greedy(
    fam: &SetFamily,
    b: &Sub,
    local: &BTreeMap<usize, GoodPair>,
) -> Result<GreedyResolution, FamilyError> {
    if let Some(&u) = b.iter().find(|u| !local.contains_key(u)) {
        return Err(FamilyError::Unresolvable { member: fam.name_of(u).to_string() });
    }
    let order = largest_first(fam, b);
    let (mut left, mut right) = (Sub::new(), Sub::new());
    let mut merged_members = 0;
    for &u in &order {
        let p = &local[&u];
        match extend_fill(fam, (&left, &right), (&p.left, &p.right)) {
            Ok(ext) => {
                left = ext.pair.left;
                right = ext.pair.right;
                merged_members += 1;
            }
            Err(_) => break,
        }
    }
    let finish = |left: &Sub, right: &Sub| -> (Sub, Sub) {
        let l: Sub = b.iter().copied().filter(|v| !right.contains(v)).chain(left.iter().copied()).collect();
        (l, right.clone())
    };
    let (fl, fr) = finish(&left, &right);
    let merged = merged_members == order.len() && b.iter().all(|&u| fills_member(fam, &fl, u) && fills_member(fam, &fr, u));
    let (left, right) = if merged {
        (fl, fr)
    } else {
        let mut color: BTreeMap<usize, u8> = BTreeMap::new();
        for &v in &left {
            color.insert(v, 0);
        }
        for &v in &right {
            color.insert(v, 1);
        }
        let found = extend_search(fam, &order, 0, &mut color)
            .or_else(|| extend_search(fam, &order, 0, &mut BTreeMap::new()))
            .ok_or_else(|| FamilyError::Unresolvable { member: fam.name_of(order[0]).to_string() })?;
        let right: Sub = found.iter().filter(|(_, &c)| c == 1).map(|(&v, _)| v).collect();
        finish(&Sub::new(), &right)
    };
    let left_fills = fills(fam, &left, b)?;
    let right_fills = fills(fam, &right, b)?;
    Ok(GreedyResolution { left, right, merged, merged_members, left_fills, right_fills })
}

fn side(color: &BTreeMap<usize, u8>, c: u8) -> Sub {
    color.iter().filter(|(_, &x)| x == c).map(|(&v, _)| v).collect()
}

fn extend_search(
    fam: &SetFamily,
    order: &[usize],
    k: usize,
    color: &mut BTreeMap<usize, u8>,
) -> Option<BTreeMap<usize, u8>> {
    let Some(&u) = order.get(k) else {
        return Some(color.clone());
    };
    if fills_member(fam, &side(color, 0), u) && fills_member(fam, &side(color, 1), u) {
        return extend_search(fam, order, k + 1, color);
    }
    let need = fam.demand(u);
    let free: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&v| !color.contains_key(&v) && fam.proper_subset(v, u) && fam.member(v).trace & need != 0)
        .collect();
    if free.len() >= 64 {
        return None;
    }
    for mask in 0u64..1 << free.len() {
        for (i, &v) in free.iter().enumerate() {
            color.insert(v, (mask >> i & 1) as u8);
        }
        if fills_member(fam, &side(color, 0), u) && fills_member(fam, &side(color, 1), u) {
            if let Some(done) = extend_search(fam, order, k + 1, color) {
                return Some(done);
            }
        }
    }
    for v in &free {
        color.remove(v);
    }
    None
}

/// A weakly increasing subfamily of `b ∖ a` made of proper subsets of `w`
/// whose union covers `w` on the window. The members of `b` inside `w`
/// must fill themselves.
pub fn b_of(fam: &SetFamily, w: usize, a: &Sub, b: &Sub) -> Result<Vec<usize>, FamilyError> {
    let down: Sub = b.iter().copied().filter(|&v| fam.subset(v, w)).collect();
    let no_cert = || FamilyError::NoCertificate { member: fam.name_of(w).to_string() };
    if !down.iter().all(|&v| fills_member(fam, &down, v)) {
        return Err(no_cert());
    }
    let candidates: Sub = down.iter().copied().filter(|&v| !a.contains(&v) && fam.proper_subset(v, w)).collect();
    let out = weakly_increasing_subfamily(fam, &largest_first(fam, &candidates));
    let covered = out.iter().fold(0u128, |t, &v| t | fam.member(v).trace);
    if fam.demand(w) & !covered != 0 {
        return Err(no_cert());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stage {
    pub step: usize,
    pub block: usize,
    pub schedule: usize,
    pub target: String,
    /// Additions to each side, in their weakly increasing order.
    pub added: [Vec<usize>; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StagedFill {
    pub left: Sub,
    pub right: Sub,
    pub stages: Vec<Stage>,
    pub steps_run: usize,
    pub converged: bool,
    /// Certificates that each side fills the other and the top set; absent for depth 0.
    pub pair: Option<GoodPair>,
    pub top: Option<[FillCertificate; 2]>,
}

struct Schedule {
    created_at: usize,
    targets: Vec<(usize, Option<u8>)>,
    pos: usize,
}

/// Grows two disjoint sides from the seeds so that `u` and every member placed
/// on one side gets covered by the other side through [`b_of`].
///
/// A schedule is opened at every step whose sides differ from the last
/// schedule's snapshot; it cycles over `u` and the members of that snapshot.
/// Steps come in blocks of `width`, dealt round-robin to the schedules open
/// when the round starts, and a schedule only acts at steps after its opening.
pub fn staged_filler(
    fam: &SetFamily,
    b: &Sub,
    u: usize,
    seeds: (Sub, Sub),
    depth: usize,
    width: usize,
) -> Result<StagedFill, FamilyError> {
    let (mut left, mut right) = seeds;
    if !left.is_disjoint(&right) {
        return Err(FamilyError::Precondition("seed sides overlap".into()));
    }
    if depth == 0 {
        return Ok(StagedFill { left, right, stages: vec![], steps_run: 0, converged: false, pair: None, top: None });
    }
    let width = width.max(1);
    let mut schedules: Vec<Schedule> = Vec::new();
    let mut last_snapshot: Option<(Sub, Sub)> = None;
    let mut round: std::collections::VecDeque<usize> = Default::default();
    let (mut current, mut block_left, mut block) = (0usize, 0usize, 0usize);
    let mut stages = Vec::new();
    let mut converged = false;
    let mut steps_run = 0;
    let filled_all = |l: &Sub, r: &Sub| {
        fills_member(fam, l, u)
            && fills_member(fam, r, u)
            && l.iter().all(|&v| fills_member(fam, r, v))
            && r.iter().all(|&v| fills_member(fam, l, v))
    };
    for m in 0..depth {
        if filled_all(&left, &right) {
            converged = true;
            break;
        }
        steps_run = m + 1;
        if last_snapshot.as_ref() != Some(&(left.clone(), right.clone())) {
            let targets = std::iter::once((u, None))
                .chain(left.iter().map(|&v| (v, Some(0))))
                .chain(right.iter().map(|&v| (v, Some(1))))
                .collect();
            schedules.push(Schedule { created_at: m, targets, pos: 0 });
            last_snapshot = Some((left.clone(), right.clone()));
        }
        if block_left == 0 {
            if round.is_empty() {
                round.extend(0..schedules.len());
            }
            current = round.pop_front().expect("at least one schedule");
            block_left = width;
            block += 1;
        }
        block_left -= 1;
        let sched = &mut schedules[current];
        if m <= sched.created_at {
            continue;
        }
        let (v, side) = sched.targets[sched.pos % sched.targets.len()];
        sched.pos += 1;
        let mut added = [Vec::new(), Vec::new()];
        match side {
            None => {
                if !fills_member(fam, &left, v) {
                    added[0] = extend_side(&mut left, b_of(fam, v, &right, b)?);
                }
                if !fills_member(fam, &right, v) {
                    added[1] = extend_side(&mut right, b_of(fam, v, &left, b)?);
                }
            }
            Some(i) => {
                // Only the opposite side needs to cover v.
                let (own, other) = if i == 0 { (&left, &mut right) } else { (&right, &mut left) };
                if !fills_member(fam, other, v) {
                    added[1 - i as usize] = extend_side(other, b_of(fam, v, own, b)?);
                }
            }
        }
        if added.iter().any(|a| !a.is_empty()) {
            stages.push(Stage { step: m, block: block - 1, schedule: current, target: fam.name_of(v).to_string(), added });
        }
    }
    if !converged && filled_all(&left, &right) {
        converged = true;
    }
    let mut pending: Vec<String> = Vec::new();
    for (own, other) in [(&left, &right), (&right, &left)] {
        pending.extend(own.iter().filter(|&&v| !fills_member(fam, other, v)).map(|&v| fam.name_of(v).to_string()));
    }
    if !(fills_member(fam, &left, u) && fills_member(fam, &right, u)) {
        pending.insert(0, fam.name_of(u).to_string());
    }
    if !pending.is_empty() {
        return Err(FamilyError::ScheduleExhausted { pending });
    }
    let top = [fill_target(fam, &left, &fam.member_target(u))?, fill_target(fam, &right, &fam.member_target(u))?];
    let pair = certify_pair(fam, left.clone(), right.clone())?;
    Ok(StagedFill { left, right, stages, steps_run, converged, pair: Some(pair), top: Some(top) })
}

fn extend_side(side: &mut Sub, more: Vec<usize>) -> Vec<usize> {
    more.into_iter().filter(|&v| side.insert(v)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SigmaResolution {
    /// `blocks[n][i]`: the members chosen for side `i` at level `n`.
    pub blocks: Vec<[Vec<usize>; 2]>,
    pub left: Sub,
    pub right: Sub,
    /// Members not used by any block; they join the left side of the partition.
    pub rest: Sub,
    pub certificates: Vec<FillCertificate>,
}

fn extents_disjoint(fam: &SetFamily, a: usize, b: usize) -> bool {
    let (x, y) = (fam.member(a), fam.member(b));
    match (&x.extent, &y.extent) {
        (Extent::Spans(s), Extent::Spans(t)) => s.union(t).measure() == s.measure() + t.measure(),
        _ => x.trace & y.trace == 0,
    }
}

/// For each level in turn and each side, covers every level member by a
/// weakly increasing family of its proper subsets drawn from members not used
/// so far.
pub fn resolve_sigma_disjoint(fam: &SetFamily, b: &Sub, levels: &[Vec<usize>]) -> Result<SigmaResolution, FamilyError> {
    for level in levels {
        for (k, &e) in level.iter().enumerate() {
            if let Some(&f) = level[k + 1..].iter().find(|&&f| !extents_disjoint(fam, e, f)) {
                return Err(FamilyError::Precondition(format!(
                    "level members {:?} and {:?} overlap",
                    fam.name_of(e),
                    fam.name_of(f)
                )));
            }
        }
    }
    let mut used = Sub::new();
    let mut blocks = Vec::new();
    let mut certificates = Vec::new();
    for level in levels {
        let mut pair: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for block in pair.iter_mut() {
            for &e in level {
                let cands: Sub = b.iter().copied().filter(|&v| !used.contains(&v) && fam.proper_subset(v, e)).collect();
                let cover = weakly_increasing_subfamily(fam, &largest_first(fam, &cands));
                let chosen: Sub = cover.iter().copied().collect();
                certificates.push(fill_target(fam, &chosen, &fam.member_target(e))?);
                block.extend(cover);
            }
            used.extend(block.iter().copied());
        }
        blocks.push(pair);
    }
    let left: Sub = blocks.iter().flat_map(|p| p[0].iter().copied()).collect();
    let right: Sub = blocks.iter().flat_map(|p| p[1].iter().copied()).collect();
    let rest: Sub = b.difference(&used).copied().collect();
    Ok(SigmaResolution { blocks, left, right, rest, certificates })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Synthesis {
    pub target: String,
    pub point: String,
    /// Chain index of the tail joined to the synthesized witness.
    pub tail: usize,
    pub joined: String,
    pub witness: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FinUnion {
    pub left: Sub,
    pub right: Sub,
    /// Members whose threshold lies too close to the end of the chain for
    /// their own covers to exist; their demand is deferred like a frontier.
    pub deep: Sub,
    pub syntheses: Vec<Synthesis>,
    pub left_fills_right: Vec<FillCertificate>,
    pub right_fills_left: Vec<FillCertificate>,
    pub left_union: Vec<String>,
    pub right_union: Vec<String>,
}

fn extent_key(fam: &SetFamily, i: usize) -> (u128, Option<Span>) {
    match &fam.member(i).extent {
        Extent::Spans(s) => (0, Some(s.clone())),
        Extent::Points => (fam.member(i).trace, None),
    }
}

fn union_key(fam: &SetFamily, a: usize, b: usize) -> (u128, Option<Span>) {
    match (&fam.member(a).extent, &fam.member(b).extent) {
        (Extent::Spans(s), Extent::Spans(t)) => (0, Some(s.union(t))),
        _ => (fam.member(a).trace | fam.member(b).trace, None),
    }
}

/// The two sides `{V ⊆ U : chain[t] ⊆ V ⊉ chain[t-1]}` split by the parity of
/// the threshold `t ≥ 2`, with each cover `V' = chain[s] ∪ W` synthesized by
/// exhaustive search for `W`.
pub fn resolve_finite_union_closed(
    fam: &SetFamily,
    b: &Sub,
    u: usize,
    chain: &[usize],
    points: &[usize],
) -> Result<FinUnion, FamilyError> {
    const NEED: usize = 7;
    if chain.len() < NEED {
        return Err(FamilyError::ChainTooShort { len: chain.len(), need: NEED });
    }
    let last = chain.len() - 1;
    let pre = |m: String| Err(FamilyError::Precondition(m));
    if !fam.subset(chain[0], u) {
        return pre("chain must start inside the target".into());
    }
    for n in 0..last {
        if !fam.proper_subset(chain[n + 1], chain[n]) {
            return pre(format!("chain is not strictly decreasing at position {}", n + 1));
        }
    }
    if points.len() != last {
        return pre(format!("need {last} chain points, got {}", points.len()));
    }
    for (n, &y) in points.iter().enumerate() {
        let bit = 1u128 << y;
        if fam.member(chain[n]).trace & bit == 0 || fam.member(chain[n + 1]).trace & bit != 0 {
            return pre(format!("point {} does not separate chain positions {n} and {}", fam.ground()[y], n + 1));
        }
    }
    let index: HashMap<(u128, Option<Span>), usize> = b.iter().map(|&i| (extent_key(fam, i), i)).collect();
    let members: Vec<usize> = b.iter().copied().collect();
    for (k, &x) in members.iter().enumerate() {
        for &y in &members[k + 1..] {
            if !index.contains_key(&union_key(fam, x, y)) {
                return Err(FamilyError::NotUnionClosed(fam.name_of(x).into(), fam.name_of(y).into()));
            }
        }
    }
    let inside = fam.member(u).trace & fam.window();
    for x in 0..fam.ground().len() {
        for y in 0..fam.ground().len() {
            if x != y && inside >> x & 1 == 1 && inside >> y & 1 == 1 {
                let sep = members.iter().any(|&m| {
                    let t = fam.member(m).trace;
                    t >> x & 1 == 1 && t >> y & 1 == 0
                });
                if !sep {
                    return pre(format!("no member separates {} from {}", fam.ground()[x], fam.ground()[y]));
                }
            }
        }
    }
    let threshold = |v: usize| (0..chain.len()).find(|&n| fam.subset(chain[n], v));
    let mut sides = [Sub::new(), Sub::new()];
    let mut deep = Sub::new();
    let mut thr = BTreeMap::new();
    for &v in b {
        if !fam.subset(v, u) {
            continue;
        }
        if let Some(t) = threshold(v).filter(|&t| t >= 2) {
            sides[t % 2].insert(v);
            thr.insert(v, t);
            if t + 3 > last {
                deep.insert(v);
            }
        }
    }
    let demand_of = |v: usize| if deep.contains(&v) { 0 } else { fam.demand(v) };
    let mut syntheses = Vec::new();
    for (&v, &t) in &thr {
        let need = demand_of(v);
        for z in (0..fam.ground().len()).filter(|z| need >> z & 1 == 1) {
            let found = (t + 1..=last).step_by(2).filter(|&s| points[s - 1] != z).find_map(|s| {
                let y = points[s - 1];
                members.iter().find_map(|&w| {
                    let tw = fam.member(w).trace;
                    if tw >> z & 1 == 0 || tw >> y & 1 == 1 || !fam.subset(w, v) {
                        return None;
                    }
                    let joined = *index.get(&union_key(fam, chain[s], w))?;
                    (thr.get(&joined) == Some(&s) && fam.proper_subset(joined, v)).then_some((s, w, joined))
                })
            });
            let Some((s, w, joined)) = found else {
                return Err(FamilyError::NotFilled(FillFailure {
                    target: fam.name_of(v).to_string(),
                    point: fam.ground()[z].clone(),
                }));
            };
            syntheses.push(Synthesis {
                target: fam.name_of(v).to_string(),
                point: fam.ground()[z].clone(),
                tail: s,
                joined: fam.name_of(w).to_string(),
                witness: fam.name_of(joined).to_string(),
            });
        }
    }
    let certify = |a: &Sub, targets: &Sub| -> Result<Vec<FillCertificate>, FamilyError> {
        targets
            .iter()
            .map(|&v| {
                let t = Target { demand: demand_of(v), ..fam.member_target(v) };
                fill_target(fam, a, &t).map_err(FamilyError::from)
            })
            .collect()
    };
    let [left, right] = sides;
    let left_fills_right = certify(&left, &right)?;
    let right_fills_left = certify(&right, &left)?;
    for side in [&left, &right] {
        if inside & !union_trace(fam, side) != 0 {
            let k = (inside & !union_trace(fam, side)).trailing_zeros() as usize;
            return Err(FamilyError::NotFilled(FillFailure {
                target: fam.name_of(u).to_string(),
                point: fam.ground()[k].clone(),
            }));
        }
    }
    Ok(FinUnion {
        left_union: fam.point_labels(union_trace(fam, &left) & fam.window()),
        right_union: fam.point_labels(union_trace(fam, &right) & fam.window()),
        left,
        right,
        deep,
        syntheses,
        left_fills_right,
        right_fills_left,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CohenPair {
    pub pair: GoodPair,
    pub requirements: usize,
    /// Members colored to meet a requirement; the rest were colored at random.
    pub forced: usize,
}

/// Meets every requirement "some `W` colored `i` with `x ∈ W ⊊ V`" in turn by
/// coloring the smallest uncolored candidate, seeded ties.
pub fn cohen_good_pair(fam: &SetFamily, b: &Sub, seed: u64) -> Result<CohenPair, FamilyError> {
    fills(fam, b, b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut color: BTreeMap<usize, u8> = BTreeMap::new();
    let mut requirements = 0;
    for &v in b {
        let need = fam.demand(v);
        for x in (0..fam.ground().len()).filter(|x| need >> x & 1 == 1) {
            let cands: Vec<usize> =
                b.iter().copied().filter(|&w| fam.member(w).trace >> x & 1 == 1 && fam.proper_subset(w, v)).collect();
            for i in 0..2u8 {
                requirements += 1;
                if cands.iter().any(|w| color.get(w) == Some(&i)) {
                    continue;
                }
                let free: Vec<usize> = cands.iter().copied().filter(|w| !color.contains_key(w)).collect();
                let Some(min) = free.iter().map(|&w| fam.measure(w)).min() else {
                    return Err(FamilyError::RequirementUnmeetable {
                        point: fam.ground()[x].clone(),
                        member: fam.name_of(v).to_string(),
                        color: i,
                    });
                };
                let smallest: Vec<usize> = free.into_iter().filter(|&w| fam.measure(w) == min).collect();
                color.insert(smallest[rng.gen_range(0..smallest.len())], i);
            }
        }
    }
    let forced = color.len();
    for &v in b {
        color.entry(v).or_insert_with(|| rng.gen_range(0..2));
    }
    let left = side(&color, 0);
    let right = side(&color, 1);
    debug_assert!(is_good_pair(fam, &left, &right));
    Ok(CohenPair { pair: certify_pair(fam, left, right)?, requirements, forced })
}
