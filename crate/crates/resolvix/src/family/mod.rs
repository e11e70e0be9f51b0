//! Set families over a finite ground window and the fills calculus.
//!
//! Coverage is only demanded on window points. A member flagged `frontier`
//! stands in for the part of an infinite family below the truncation: its own
//! fill demand is deferred, but it still serves as a witness for larger sets.

mod dyadic;
mod resolve;
mod text;
mod thin;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::text::ParseError;

pub use dyadic::{builtin_family, dyadic_family, dyadic_unions, Dyadic, Span};
pub use resolve::{
    b_of, cohen_good_pair, find_local_pair, local_pairs, resolve_finite_union_closed, resolve_good_pair_greedy,
    resolve_sigma_disjoint, staged_filler, FinUnion, GreedyResolution, SigmaResolution, StagedFill,
};
pub use text::parse_family;
pub use thin::{
    extract_negligible, l_value, neighborhood_base_dichotomy, split_cover_and_base, weak_separation_partition,
    Dichotomy,
};

/// Subfamilies are index sets into one ambient [`SetFamily`].
pub type Sub = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("duplicate member name {0:?}")]
    DuplicateName(String),
    #[error("member {0:?} is empty but not flagged `empty`")]
    EmptySet(String),
    #[error("unknown member {0:?}")]
    UnknownMember(String),
    #[error("unknown point {0:?}")]
    UnknownPoint(String),
    #[error("point sets and dyadic spans cannot be mixed in one family")]
    MixedExtents,
    #[error(transparent)]
    NotFilled(#[from] FillFailure),
    #[error("{member:?} has no local good pair")]
    Unresolvable { member: String },
    #[error("{member:?} has no finite self-filling witness family")]
    NoCertificate { member: String },
    #[error("schedule exhausted with {} members still unfilled", pending.len())]
    ScheduleExhausted { pending: Vec<String> },
    #[error("chain of length {len} is too short (need at least {need})")]
    ChainTooShort { len: usize, need: usize },
    #[error("union of {0:?} and {1:?} is not a member")]
    NotUnionClosed(String, String),
    #[error("requirement ({point}, {member}, {color}) has no candidate")]
    RequirementUnmeetable { point: String, member: String, color: u8 },
    #[error("largest negligible subfamily found has {found} members, wanted {wanted}")]
    TooSmall { found: usize, wanted: usize },
    #[error("points {0} and {1} are not weakly separated")]
    NotWeaklySeparated(String, String),
    #[error("frontier member {0:?} sits on opposite sides of the two pairs")]
    FrontierConflict(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

/// The extent a member occupies beyond its window trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extent {
    /// A subset of the ground, given by its trace.
    Points,
    /// A union of half-open dyadic intervals of the reals.
    Spans(Span),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedSet {
    pub name: String,
    /// Bit `k` is set iff ground point `k` belongs to the set.
    pub trace: u128,
    pub extent: Extent,
    pub frontier: bool,
    pub allow_empty: bool,
}

impl NamedSet {
    pub fn points(name: impl Into<String>, trace: u128) -> Self {
        NamedSet { name: name.into(), trace, extent: Extent::Points, frontier: false, allow_empty: false }
    }

    pub fn frontier(mut self) -> Self {
        self.frontier = true;
        self
    }

    pub fn allow_empty(mut self) -> Self {
        self.allow_empty = true;
        self
    }
}

/// Decides `a ⊊ b` for two extents of the same kind.
fn proper(a_trace: u128, a: &Extent, b_trace: u128, b: &Extent) -> bool {
    match (a, b) {
        (Extent::Spans(x), Extent::Spans(y)) => x != y && x.is_subset(y),
        _ => a_trace != b_trace && a_trace & !b_trace == 0,
    }
}

fn subset(a_trace: u128, a: &Extent, b_trace: u128, b: &Extent) -> bool {
    match (a, b) {
        (Extent::Spans(x), Extent::Spans(y)) => x.is_subset(y),
        _ => a_trace & !b_trace == 0,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetFamily {
    pub name: String,
    ground: Vec<String>,
    window: u128,
    members: Vec<NamedSet>,
    below: Vec<Vec<bool>>,
}

impl SetFamily {
    pub fn new(name: impl Into<String>, ground: Vec<String>) -> Self {
        assert!(ground.len() <= 128, "ground is limited to 128 points");
        let window = if ground.len() == 128 { u128::MAX } else { (1u128 << ground.len()) - 1 };
        SetFamily { name: name.into(), ground, window, members: Vec::new(), below: Vec::new() }
    }

    pub fn with_window(mut self, window: u128) -> Self {
        self.window = window & self.full();
        self
    }

    fn full(&self) -> u128 {
        if self.ground.len() == 128 {
            u128::MAX
        } else {
            (1u128 << self.ground.len()) - 1
        }
    }

    pub fn push(&mut self, set: NamedSet) -> Result<usize, FamilyError> {
        if self.members.iter().any(|m| m.name == set.name) {
            return Err(FamilyError::DuplicateName(set.name));
        }
        if set.trace == 0 && !set.allow_empty {
            if let Extent::Points = set.extent {
                return Err(FamilyError::EmptySet(set.name));
            }
            if let Extent::Spans(s) = &set.extent {
                if s.is_empty() {
                    return Err(FamilyError::EmptySet(set.name));
                }
            }
        }
        if let Some(first) = self.members.first() {
            if matches!(first.extent, Extent::Spans(_)) != matches!(set.extent, Extent::Spans(_)) {
                return Err(FamilyError::MixedExtents);
            }
        }
        let trace = set.trace & self.full();
        let set = NamedSet { trace, ..set };
        let idx = self.members.len();
        // below[j][i] holds `i ⊊ j`.
        for (j, row) in self.below.iter_mut().enumerate() {
            let other = &self.members[j];
            row.push(proper(set.trace, &set.extent, other.trace, &other.extent));
        }
        self.members.push(set);
        let s = &self.members[idx];
        let row = self.members.iter().map(|m| proper(m.trace, &m.extent, s.trace, &s.extent)).collect();
        self.below.push(row);
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[NamedSet] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &NamedSet {
        &self.members[i]
    }

    pub fn ground(&self) -> &[String] {
        &self.ground
    }

    pub fn window(&self) -> u128 {
        self.window
    }

    pub fn all(&self) -> Sub {
        (0..self.len()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, FamilyError> {
        self.members
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| FamilyError::UnknownMember(name.to_string()))
    }

    pub fn point(&self, label: &str) -> Result<usize, FamilyError> {
        self.ground.iter().position(|g| g == label).ok_or_else(|| FamilyError::UnknownPoint(label.to_string()))
    }

    pub fn name_of(&self, i: usize) -> &str {
        &self.members[i].name
    }

    pub fn names(&self, sub: &Sub) -> Vec<String> {
        sub.iter().map(|&i| self.members[i].name.clone()).collect()
    }

    pub fn point_labels(&self, trace: u128) -> Vec<String> {
        (0..self.ground.len()).filter(|k| trace >> k & 1 == 1).map(|k| self.ground[k].clone()).collect()
    }

    /// Window points that must be covered when this member is a fill target.
    pub fn demand(&self, i: usize) -> u128 {
        let m = &self.members[i];
        if m.frontier {
            0
        } else {
            m.trace & self.window
        }
    }

    /// `i ⊊ j`.
    pub fn proper_subset(&self, i: usize, j: usize) -> bool {
        self.below[j][i]
    }

    /// `i ⊆ j`.
    pub fn subset(&self, i: usize, j: usize) -> bool {
        let (a, b) = (&self.members[i], &self.members[j]);
        subset(a.trace, &a.extent, b.trace, &b.extent)
    }

    /// The union of a subfamily as an anonymous fill target whose demand
    /// is the union of the members' demands.
    pub fn union_target(&self, name: impl Into<String>, sub: &Sub) -> Target {
        let trace = sub.iter().fold(0, |t, &i| t | self.members[i].trace);
        let demand = sub.iter().fold(0, |t, &i| t | self.demand(i));
        let extent = match self.members.first().map(|m| &m.extent) {
            Some(Extent::Spans(_)) => {
                let mut span = Span::default();
                for &i in sub {
                    if let Extent::Spans(s) = &self.members[i].extent {
                        span = span.union(s);
                    }
                }
                Extent::Spans(span)
            }
            _ => Extent::Points,
        };
        Target { name: name.into(), trace, extent, demand, member: None }
    }

    pub fn member_target(&self, i: usize) -> Target {
        let m = &self.members[i];
        Target { name: m.name.clone(), trace: m.trace, extent: m.extent.clone(), demand: self.demand(i), member: Some(i) }
    }

    /// Whether the target's extent strictly contains member `i`.
    fn below_target(&self, i: usize, t: &Target) -> bool {
        match t.member {
            Some(j) => self.proper_subset(i, j),
            None => {
                let m = &self.members[i];
                proper(m.trace, &m.extent, t.trace, &t.extent)
            }
        }
    }

    /// Size key: strictly increases along proper inclusion.
    pub fn measure(&self, i: usize) -> u64 {
        match &self.members[i].extent {
            Extent::Spans(s) => s.measure(),
            Extent::Points => self.members[i].trace.count_ones() as u64,
        }
    }

    pub fn to_text(&self) -> String {
        text::write_family(self)
    }
}

/// A set to be filled: a member, or an anonymous union with its own demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    pub name: String,
    pub trace: u128,
    pub extent: Extent,
    pub demand: u128,
    pub member: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FillCertificate {
    pub target: String,
    pub witnesses: Vec<String>,
    pub coverage: Vec<String>,
    #[serde(skip)]
    pub witness_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{target:?} is not covered at point {point} by proper subsets")]
pub struct FillFailure {
    pub target: String,
    pub point: String,
}

/// Greedy lexicographic cover of the target's demand by members of `a`
/// strictly inside it.
pub fn fill_target(fam: &SetFamily, a: &Sub, t: &Target) -> Result<FillCertificate, FillFailure> {
    let mut need = t.demand;
    let mut ids = Vec::new();
    for &v in a {
        if need == 0 {
            break;
        }
        if fam.members[v].trace & need != 0 && fam.below_target(v, t) {
            need &= !fam.members[v].trace;
            ids.push(v);
        }
    }
    if need != 0 {
        let k = need.trailing_zeros() as usize;
        return Err(FillFailure { target: t.name.clone(), point: fam.ground[k].clone() });
    }
    Ok(FillCertificate {
        target: t.name.clone(),
        witnesses: ids.iter().map(|&i| fam.members[i].name.clone()).collect(),
        coverage: fam.point_labels(t.demand),
        witness_ids: ids,
    })
}

/// Whether `a` fills member `u`, without building a certificate.
pub fn fills_member(fam: &SetFamily, a: &Sub, u: usize) -> bool {
    let mut need = fam.demand(u);
    for &v in a {
        if need == 0 {
            return true;
        }
        if fam.below[u][v] {
            need &= !fam.members[v].trace;
        }
    }
    need == 0
}

/// A certificate for every member of `b`, or the first uncovered point.
pub fn fills(fam: &SetFamily, a: &Sub, b: &Sub) -> Result<Vec<FillCertificate>, FillFailure> {
    b.iter().map(|&u| fill_target(fam, a, &fam.member_target(u))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoodPair {
    pub left: Sub,
    pub right: Sub,
    pub left_fills_right: Vec<FillCertificate>,
    pub right_fills_left: Vec<FillCertificate>,
}

/// Checks disjointness and mutual filling.
pub fn certify_pair(fam: &SetFamily, left: Sub, right: Sub) -> Result<GoodPair, FamilyError> {
    if let Some(&x) = left.intersection(&right).next() {
        return Err(FamilyError::Precondition(format!("{:?} lies on both sides", fam.name_of(x))));
    }
    let left_fills_right = fills(fam, &left, &right)?;
    let right_fills_left = fills(fam, &right, &left)?;
    Ok(GoodPair { left, right, left_fills_right, right_fills_left })
}

pub fn is_good_pair(fam: &SetFamily, left: &Sub, right: &Sub) -> bool {
    left.is_disjoint(right)
        && right.iter().all(|&u| fills_member(fam, left, u))
        && left.iter().all(|&u| fills_member(fam, right, u))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtendedPair {
    pub pair: GoodPair,
    /// The new left side fills the union of the second right side.
    pub fills_right_union: FillCertificate,
    /// The new right side fills the union of the second left side.
    pub fills_left_union: FillCertificate,
}

/// `(A ∪ (A'∖B), B ∪ (B'∖A))`, re-certified as a good pair that fills `∪B'`
/// and `∪A'`.
///
/// At window scale the argument needs every member moved across sides to
/// carry its own demand, so a frontier member placed on opposite sides by the
/// two pairs is rejected up front.
pub fn extend_fill(
    fam: &SetFamily,
    first: (&Sub, &Sub),
    second: (&Sub, &Sub),
) -> Result<ExtendedPair, FamilyError> {
    let (a, b) = first;
    let (a2, b2) = second;
    for (x, y) in [(a, b), (a2, b2)] {
        if !is_good_pair(fam, x, y) {
            return Err(FamilyError::Precondition("extend_fill needs two good pairs".into()));
        }
    }
    if let Some(&f) = a2.intersection(b).chain(b2.intersection(a)).find(|&&i| fam.members[i].frontier) {
        return Err(FamilyError::FrontierConflict(fam.name_of(f).to_string()));
    }
    let left: Sub = a.iter().chain(a2.difference(b)).copied().collect();
    let right: Sub = b.iter().chain(b2.difference(a)).copied().collect();
    let pair = certify_pair(fam, left, right)?;
    let fills_right_union = fill_target(fam, &pair.left, &fam.union_target("∪right", b2))?;
    let fills_left_union = fill_target(fam, &pair.right, &fam.union_target("∪left", a2))?;
    Ok(ExtendedPair { pair, fills_right_union, fills_left_union })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeakCertificate {
    pub lower: String,
    pub upper: String,
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum WeakFailure {
    #[error("closure is not extensive at {0:?}")]
    NotExtensive(String),
    #[error("closure is not monotone on {0:?} and {1:?}")]
    NotMonotone(String, String),
    #[error("no cover between closure of {lower:?} and {upper:?} at point {point}")]
    Uncovered { lower: String, upper: String, point: String },
}

/// For every ordered pair `U, V` of `b` with `closure(U) ⊆ V`, members of `a`
/// inside `V` whose union contains the closure of `U` on the window.
pub fn weakly_fills(
    fam: &SetFamily,
    a: &Sub,
    b: &Sub,
    closure: &dyn Fn(usize) -> u128,
) -> Result<Vec<WeakCertificate>, WeakFailure> {
    let cl: BTreeMap<usize, u128> = b.iter().map(|&u| (u, closure(u))).collect();
    for (&u, &c) in &cl {
        if fam.members[u].trace & !c != 0 {
            return Err(WeakFailure::NotExtensive(fam.name_of(u).into()));
        }
    }
    for (&u, &cu) in &cl {
        for (&v, &cv) in &cl {
            if fam.subset(u, v) && cu & !cv != 0 {
                return Err(WeakFailure::NotMonotone(fam.name_of(u).into(), fam.name_of(v).into()));
            }
        }
    }
    let mut out = Vec::new();
    for &u in b {
        for &v in b {
            let upper = fam.members[v].trace;
            if cl[&u] & !upper != 0 {
                continue;
            }
            let mut need = cl[&u] & fam.window;
            let mut wit = Vec::new();
            for &w in a {
                let t = fam.members[w].trace;
                if t & need != 0 && fam.subset(w, v) {
                    need &= !t;
                    wit.push(fam.name_of(w).to_string());
                }
            }
            if need != 0 {
                return Err(WeakFailure::Uncovered {
                    lower: fam.name_of(u).into(),
                    upper: fam.name_of(v).into(),
                    point: fam.ground[need.trailing_zeros() as usize].clone(),
                });
            }
            out.push(WeakCertificate { lower: fam.name_of(u).into(), upper: fam.name_of(v).into(), witnesses: wit });
        }
    }
    Ok(out)
}

/// Keeps each member that is not contained in any member listed before it.
pub fn weakly_increasing_subfamily(fam: &SetFamily, order: &[usize]) -> Vec<usize> {
    order
        .iter()
        .enumerate()
        .filter(|&(k, &b)| order[..k].iter().all(|&a| !fam.subset(b, a)))
        .map(|(_, &b)| b)
        .collect()
}

/// Whether the listed order witnesses weak increase: no member lies inside an earlier one.
pub fn is_weakly_increasing(fam: &SetFamily, order: &[usize]) -> bool {
    order.iter().enumerate().all(|(k, &b)| order[..k].iter().all(|&a| !fam.subset(b, a)))
}

/// Members sorted largest first, index breaking ties.
pub fn largest_first(fam: &SetFamily, sub: &Sub) -> Vec<usize> {
    let mut v: Vec<usize> = sub.iter().copied().collect();
    v.sort_by_key(|&i| (std::cmp::Reverse(fam.measure(i)), i));
    v
}

pub fn union_trace(fam: &SetFamily, sub: &Sub) -> u128 {
    sub.iter().fold(0, |t, &i| t | fam.members[i].trace)
}
