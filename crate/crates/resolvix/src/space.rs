//! Finite fragments of the branch space of a candidate.
//!
//! A point of the space is a branch through some tree `T_α`; inside a window
//! only its stem is visible. Membership of a branch in `V(x)` is therefore
//! tri-valued: `In` once some stem element lies above `x`, `Out` only when
//! an axiom certifies that no later stem element can, `Unknown` otherwise.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::family::{Dichotomy, FamilyError, NamedSet, SetFamily};
use crate::forcing::{CandidateFragment, Condition};
use crate::grid::GridElem;
use crate::partition::Partition;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("{0} is not in the fragment")]
    UnknownPoint(GridElem),
    #[error("no branch {0}")]
    UnknownBranch(usize),
    #[error("the two branches are equal")]
    SameBranch,
    #[error("branch {branch} lies in V({x})")]
    NotOut { x: GridElem, branch: usize },
    #[error("g is undefined on ({x},{alpha})")]
    GUndefined { x: GridElem, alpha: usize },
    #[error("partition leaves {0} uncolored")]
    PartialPartition(GridElem),
    #[error("more than {0} window branches")]
    TooManyBranches(usize),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Determination {
    In,
    Out,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeBranch {
    pub alpha: usize,
    pub stem: Vec<GridElem>,
    /// The stem runs from a root through consecutive levels to a leaf of
    /// the window tree.
    pub maximal: bool,
}

/// Why a cell is determined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evidence {
    /// `x ⪯ y` for the stem element `y`.
    Above { y: GridElem },
    /// `x` sits in the same tree at the level of a different stem element.
    SameLevel { y: GridElem, level: usize },
    /// `z ⪯ x` with `z` at level `n = f(α,β)` of `T_β`, and `y` the stem
    /// element at that level.
    FLevel { beta: usize, n: usize, z: GridElem, y: GridElem },
    /// `y` is the stem element at level `g(x,α)` and lies outside `U(x)`.
    GLevel { level: usize, y: GridElem },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub value: Determination,
    pub evidence: Option<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpaceFragment {
    pub candidate: CandidateFragment,
    pub branches: Vec<TreeBranch>,
}

pub const MAX_BRANCHES: usize = 100_000;

impl SpaceFragment {
    /// All root-to-leaf stems of every window tree.
    pub fn new(candidate: CandidateFragment) -> Result<Self, SpaceError> {
        let c = &candidate.condition;
        let mut branches = Vec::new();
        for &a in c.trees.keys() {
            let levels = c.levels(a);
            let children = |x: GridElem, l: usize| -> Vec<GridElem> {
                levels.iter().filter(|&(&y, &m)| m == l + 1 && c.lt(x, y)).map(|(&y, _)| y).collect()
            };
            let mut stack: Vec<Vec<GridElem>> =
                levels.iter().filter(|&(_, &l)| l == 0).map(|(&x, _)| vec![x]).rev().collect();
            while let Some(stem) = stack.pop() {
                let last = *stem.last().unwrap();
                let kids = children(last, stem.len() - 1);
                if kids.is_empty() {
                    branches.push(TreeBranch { alpha: a, stem, maximal: true });
                    if branches.len() > MAX_BRANCHES {
                        return Err(SpaceError::TooManyBranches(MAX_BRANCHES));
                    }
                } else {
                    for k in kids.into_iter().rev() {
                        let mut s = stem.clone();
                        s.push(k);
                        stack.push(s);
                    }
                }
            }
        }
        Ok(SpaceFragment { candidate, branches })
    }

    /// Uses the given stems; `maximal` is recomputed.
    pub fn with_branches(candidate: CandidateFragment, stems: Vec<(usize, Vec<GridElem>)>) -> Self {
        let branches = stems
            .into_iter()
            .map(|(alpha, stem)| {
                let maximal = certify_stem(&candidate.condition, alpha, &stem);
                TreeBranch { alpha, stem, maximal }
            })
            .collect();
        SpaceFragment { candidate, branches }
    }

    pub fn condition(&self) -> &Condition {
        &self.candidate.condition
    }

    fn branch(&self, b: usize) -> Result<&TreeBranch, SpaceError> {
        self.branches.get(b).ok_or(SpaceError::UnknownBranch(b))
    }
}

/// A stem is certified when it starts at a root, climbs one level at a time
/// and ends at a leaf of the window tree.
pub fn certify_stem(c: &Condition, alpha: usize, stem: &[GridElem]) -> bool {
    let tree = c.tree(alpha);
    if stem.is_empty() || stem.iter().any(|x| !tree.contains(x)) {
        return false;
    }
    let climbs = stem.iter().enumerate().all(|(i, &x)| c.level(alpha, x) == i)
        && stem.windows(2).all(|w| c.lt(w[0], w[1]));
    let last = *stem.last().unwrap();
    climbs && !tree.iter().any(|&y| c.lt(last, y))
}

fn determine(c: &Condition, b: &TreeBranch, x: GridElem) -> Cell {
    let cell = |value, evidence| Cell { value, evidence: Some(evidence) };
    if let Some(&y) = b.stem.iter().find(|&&y| c.le(x, y)) {
        return cell(Determination::In, Evidence::Above { y });
    }
    if b.maximal {
        let a = b.alpha;
        if c.tree(a).contains(&x) {
            let level = c.level(a, x);
            if let Some(&y) = b.stem.get(level) {
                return cell(Determination::Out, Evidence::SameLevel { y, level });
            }
        }
        for (&(p, q), &n) in &c.f {
            let beta = match (p == a, q == a) {
                (true, _) => q,
                (_, true) => p,
                _ => continue,
            };
            if let Some(&y) = b.stem.get(n) {
                if let Some(z) = c.tree_level(beta, n).into_iter().find(|&z| c.le(z, x)) {
                    return cell(Determination::Out, Evidence::FLevel { beta, n, z, y });
                }
            }
        }
        if let Some(&level) = c.g.get(&(x, a)) {
            if let Some(&y) = b.stem.get(level) {
                return cell(Determination::Out, Evidence::GLevel { level, y });
            }
        }
    }
    Cell { value: Determination::Unknown, evidence: None }
}

/// Membership of every branch in `V(x)`.
pub fn vset(frag: &SpaceFragment, x: GridElem) -> Result<Vec<Cell>, SpaceError> {
    let c = frag.condition();
    if !c.points.contains(&x) {
        return Err(SpaceError::UnknownPoint(x));
    }
    Ok(frag.branches.iter().map(|b| determine(c, b, x)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum G1Result {
    /// For `u ⪯ v`: containment on every determined branch. For `u ⋠ v`: a
    /// branch in `V(v)` certified outside `V(u)`.
    Holds { separating: Option<usize> },
    Counterexample { branch: usize },
    Unknown,
}

/// `V(u) ⊇ V(v)` iff `u ⪯ v`, on determined branches.
pub fn check_g1(frag: &SpaceFragment, u: GridElem, v: GridElem) -> Result<G1Result, SpaceError> {
    let (vu, vv) = (vset(frag, u)?, vset(frag, v)?);
    let pairs = vu.iter().zip(&vv).map(|(a, b)| (a.value, b.value));
    if frag.condition().le(u, v) {
        for (i, (a, b)) in pairs.enumerate() {
            if b == Determination::In && a == Determination::Out {
                return Ok(G1Result::Counterexample { branch: i });
            }
        }
        return Ok(G1Result::Holds { separating: None });
    }
    Ok(pairs
        .enumerate()
        .find(|&(_, (a, b))| b == Determination::In && a == Determination::Out)
        .map_or(G1Result::Unknown, |(i, _)| G1Result::Holds { separating: Some(i) }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum Hausdorff {
    Witness { x: GridElem, y: GridElem },
    Unknown,
}

/// Stem elements `x ∈ b`, `y ∈ c` with disjoint cones.
pub fn check_hausdorff(frag: &SpaceFragment, b: usize, c: usize) -> Result<Hausdorff, SpaceError> {
    if b == c {
        return Err(SpaceError::SameBranch);
    }
    let (bb, cc) = (frag.branch(b)?, frag.branch(c)?);
    let cond = frag.condition();
    let level = if bb.alpha == cc.alpha {
        bb.stem.iter().zip(&cc.stem).position(|(x, y)| x != y)
    } else {
        cond.get_f(bb.alpha, cc.alpha)
    };
    Ok(match level.and_then(|n| Some((*bb.stem.get(n)?, *cc.stem.get(n)?))) {
        Some((x, y)) if cond.common_above(x, y).is_none() => Hausdorff::Witness { x, y },
        _ => Hausdorff::Unknown,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum Clopen {
    /// `V(y)` contains `b` and misses `V(x)`.
    Separator { y: GridElem },
    Unknown,
}

pub fn check_clopen(frag: &SpaceFragment, x: GridElem, b: usize) -> Result<Clopen, SpaceError> {
    let cell = &vset(frag, x)?[b];
    if cell.value == Determination::In {
        return Err(SpaceError::NotOut { x, branch: b });
    }
    let bb = frag.branch(b)?;
    let cond = frag.condition();
    let m = *cond.g.get(&(x, bb.alpha)).ok_or(SpaceError::GUndefined { x, alpha: bb.alpha })?;
    Ok(match bb.stem.get(m) {
        Some(&y) if cond.common_above(x, y).is_none() => Clopen::Separator { y },
        _ => Clopen::Unknown,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameQuadruple {
    pub alpha: usize,
    /// Least column the recipe's start point must reach.
    pub zeta: usize,
    pub s: GridElem,
    pub x: GridElem,
    pub y: GridElem,
    pub z: GridElem,
    pub w: GridElem,
    /// No color-0 point above `s` in the tree, so `x = y = s`.
    pub low_degenerate: bool,
    /// No color-1 point above `y` in the tree, so `z = w = y`.
    pub high_degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Contradiction {
    /// `t` has color 0 and extends the 0-maximal `[x,y]`.
    LowNotMaximal,
    /// `t` has color 0 above `s` where the recipe saw no color-0 point.
    LowSideEmpty,
    /// `t` has color 1 and extends the 1-maximal `[z,w]`.
    HighNotMaximal,
    /// `t` has color 1 above `y` where the recipe saw no color-1 point.
    HighSideEmpty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameWitness {
    pub low: GameQuadruple,
    pub high: GameQuadruple,
    pub t: GridElem,
    pub color: u8,
    pub contradiction: Contradiction,
    /// The contradicted claim fails when re-checked in the full fragment.
    pub refuted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameReport {
    /// Points hidden from the quadruple recipe (witness points and later).
    pub hidden: usize,
    pub quadruples: Vec<GameQuadruple>,
    pub witness: Option<GameWitness>,
    /// Colors that no point of the fragment carries.
    pub empty_sides: Vec<u8>,
}

fn colors_of(c: &Condition, part: &Partition) -> Result<std::collections::BTreeMap<GridElem, u8>, SpaceError> {
    c.points
        .iter()
        .map(|&x| part.color(&x.to_string()).map(|k| (x, k)).ok_or(SpaceError::PartialPartition(x)))
        .collect()
}

fn by_level(c: &Condition, alpha: usize, set: impl IntoIterator<Item = GridElem>) -> Option<GridElem> {
    set.into_iter().min_by_key(|&x| (c.level(alpha, x), x))
}

/// Builds the proof's quadruples on the fragment without its late points,
/// then looks in the full fragment for `t ∈ T_α ∩ T_β` extending the low
/// interval of one quadruple and the high interval of another.
pub fn irresolvability_game(frag: &CandidateFragment, part: &Partition) -> Result<GameReport, SpaceError> {
    let full = &frag.condition;
    let color = colors_of(full, part)?;
    let early = frag.early();
    let in_color = |x: &GridElem, i: u8| color[x] == i;
    let top = |alpha: usize, x: GridElem, i: u8| -> GridElem {
        let tree = early.tree(alpha);
        let mono = |y: GridElem| early.interval(x, y).iter().all(|p| in_color(p, i));
        let tops = tree.iter().copied().filter(|&y| early.le(x, y) && mono(y));
        let maximal: Vec<GridElem> =
            tops.filter(|&y| !tree.iter().any(|&z| early.lt(y, z) && mono(z))).collect();
        by_level(&early, alpha, maximal).expect("x itself is a monochrome top")
    };
    let mut quadruples = Vec::new();
    for (&alpha, tree) in &early.trees {
        let mut zetas: BTreeSet<usize> = tree.iter().map(|x| x.alpha + 1).collect();
        zetas.insert(0);
        let mut seen = BTreeSet::new();
        for zeta in zetas {
            let Some(s) = by_level(&early, alpha, tree.iter().copied().filter(|x| x.alpha >= zeta)) else { continue };
            if !seen.insert(s) {
                continue;
            }
            let above = |base: GridElem, i: u8| {
                by_level(&early, alpha, tree.iter().copied().filter(|&p| early.le(base, p) && in_color(&p, i)))
            };
            let (x, y, low_degenerate) = match above(s, 0) {
                None => (s, s, true),
                Some(x) => (x, top(alpha, x, 0), false),
            };
            let (z, w, high_degenerate) = match above(y, 1) {
                None => (y, y, true),
                Some(z) => (z, top(alpha, z, 1), false),
            };
            quadruples.push(GameQuadruple { alpha, zeta, s, x, y, z, w, low_degenerate, high_degenerate });
        }
    }
    let extends = |lo: GridElem, hi: GridElem, t: GridElem| {
        let mut want = full.interval(lo, hi);
        want.insert(t);
        full.lt(hi, t) && full.interval(lo, t) == want
    };
    let mut witness = None;
    'search: for qa in &quadruples {
        for qb in quadruples.iter().filter(|q| q.alpha != qa.alpha) {
            let common = full.tree(qa.alpha).intersection(full.tree(qb.alpha));
            for &t in common {
                if !(extends(qa.x, qa.y, t) && extends(qb.z, qb.w, t)) {
                    continue;
                }
                let c = color[&t];
                let (contradiction, refuted) = if c == 0 {
                    if qa.low_degenerate {
                        (Contradiction::LowSideEmpty, full.le(qa.s, t))
                    } else {
                        (Contradiction::LowNotMaximal, full.interval(qa.x, t).iter().all(|p| in_color(p, 0)))
                    }
                } else if qb.high_degenerate {
                    (Contradiction::HighSideEmpty, full.le(qb.y, t))
                } else {
                    (Contradiction::HighNotMaximal, full.interval(qb.z, t).iter().all(|p| in_color(p, 1)))
                };
                witness = Some(GameWitness { low: qa.clone(), high: qb.clone(), t, color: c, contradiction, refuted });
                break 'search;
            }
        }
    }
    let empty_sides = (0..2u8).filter(|&i| !color.values().any(|&k| k == i)).collect();
    Ok(GameReport { hidden: full.points.len() - early.points.len(), quadruples, witness, empty_sides })
}

/// Colors each point by its level in the tree of least index containing it:
/// levels `0,1` mod 4 get color 0, levels `2,3` color 1. Points outside
/// every tree get color 0.
pub fn level_partition(frag: &CandidateFragment) -> Partition {
    let c = &frag.condition;
    let mut part = Partition::new("levels");
    for &x in &c.points {
        let level = c.trees.iter().find(|(_, t)| t.contains(&x)).map_or(0, |(&a, _)| c.level(a, x));
        part.set(x.to_string(), (level % 4 >= 2) as u8);
    }
    part
}

/// Which colors still reach depth `resolution` along the stem of `b`, the
/// base of neighborhoods `V(y)` for `y` on the stem.
pub fn neighborhood_base_dichotomy(
    frag: &SpaceFragment,
    b: usize,
    part: &Partition,
    resolution: usize,
) -> Result<Dichotomy, SpaceError> {
    let stem = &frag.branch(b)?.stem;
    let mut reach = [false; 2];
    for &y in stem.iter().skip(resolution) {
        let c = part.color(&y.to_string()).ok_or(SpaceError::PartialPartition(y))?;
        reach[c as usize] = true;
    }
    Ok(match reach {
        [true, true] => Dichotomy::Both,
        [true, false] => Dichotomy::Side(0),
        [false, true] => Dichotomy::Side(1),
        [false, false] => Dichotomy::Unknown,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quotient {
    pub family: SetFamily,
    /// Class of each original ground point.
    pub point_map: Vec<usize>,
    pub classes: Vec<Vec<String>>,
}

/// Identifies points with the same member traces. Classes are labelled by
/// their points joined with `+`; members keep names and flags and become
/// point sets.
pub fn kolmogorov_quotient(fam: &SetFamily) -> Result<Quotient, SpaceError> {
    let n = fam.ground().len();
    let signature = |k: usize| -> Vec<bool> { fam.members().iter().map(|m| m.trace >> k & 1 == 1).collect() };
    let mut reps: Vec<Vec<bool>> = Vec::new();
    let mut point_map = Vec::with_capacity(n);
    let mut classes: Vec<Vec<String>> = Vec::new();
    for k in 0..n {
        let sig = signature(k);
        let class = match reps.iter().position(|r| *r == sig) {
            Some(c) => c,
            None => {
                reps.push(sig);
                classes.push(Vec::new());
                reps.len() - 1
            }
        };
        point_map.push(class);
        classes[class].push(fam.ground()[k].clone());
    }
    let labels: Vec<String> = classes.iter().map(|c| c.join("+")).collect();
    let mut family = SetFamily::new(format!("{}-t0", fam.name), labels);
    for m in fam.members() {
        let trace = (0..n).filter(|&k| m.trace >> k & 1 == 1).fold(0u128, |t, k| t | 1 << point_map[k]);
        let mut s = NamedSet::points(m.name.clone(), trace);
        s.frontier = m.frontier;
        s.allow_empty = m.allow_empty || trace == 0;
        family.push(s)?;
    }
    Ok(Quotient { family, point_map, classes })
}

/// Checks, over all points and member pairs: `[x] ∈ [U]` iff `x ∈ U`,
/// `[U] = [V]` iff `U = V`, and `[U] ⊆ [V]` iff `U ⊆ V` (on traces).
pub fn quotient_violations(fam: &SetFamily, q: &Quotient) -> Vec<String> {
    let mut out = Vec::new();
    let (orig, quot) = (fam.members(), q.family.members());
    for (u, qu) in orig.iter().zip(quot) {
        for (k, &c) in q.point_map.iter().enumerate() {
            if (u.trace >> k & 1) != (qu.trace >> c & 1) {
                out.push(format!("(1) point {} and member {}", fam.ground()[k], u.name));
            }
        }
    }
    for (i, (u, qu)) in orig.iter().zip(quot).enumerate() {
        for (v, qv) in orig.iter().zip(quot).skip(i) {
            if (u.trace == v.trace) != (qu.trace == qv.trace) {
                out.push(format!("(2) members {} and {}", u.name, v.name));
            }
        }
        for (v, qv) in orig.iter().zip(quot) {
            if (u.trace & !v.trace == 0) != (qu.trace & !qv.trace == 0) {
                out.push(format!("(3) members {} and {}", u.name, v.name));
            }
        }
    }
    out
}
