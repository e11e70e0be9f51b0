//! Finite conditions approximating a good candidate on the grid.
//!
//! A condition carries a finite set of grid points `A` with a strict order
//! below the grid relation, a finite set of limit indices `I`, a tree `T_α`
//! for each index, and the partial maps `f` (on index pairs) and `g` (on
//! point/index pairs). `U(x)` is always the up-set of `x` inside `A`.

mod extend;
mod run;
mod text;
mod twins;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::grid::GridElem;
use crate::text::ParseError;

pub use extend::{
    amalgamate_r, extend_add_point, extend_define_f, extend_define_g, extend_uplus, Amalgamation, Side,
};
pub use run::{
    generic_run, twin_schedule, CandidateFragment, DenseSpec, GenericLog, GenericRun, LogEntry, WitnessStep,
};
pub use text::{parse_condition, parse_fragment, parse_schedule, write_schedule};
pub use twins::{iso_type, map_columns, nice_delta_system, oplus, twins, DeltaSystem, IsoType, TwinFailure};

/// Limit indices are the positive multiples of this step.
pub const LIMIT_STEP: usize = 4;

pub fn is_limit(alpha: usize) -> bool {
    alpha > 0 && alpha.is_multiple_of(LIMIT_STEP)
}

/// The grid relation: equal, or strictly smaller in both coordinates.
pub fn grid_le(x: GridElem, y: GridElem) -> bool {
    x == y || (x.alpha < y.alpha && x.n < y.n)
}

pub fn pair_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

static NO_POINTS: BTreeSet<GridElem> = BTreeSet::new();

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Condition {
    pub points: BTreeSet<GridElem>,
    /// Strict pairs `x ≺ y`.
    pub order: BTreeSet<(GridElem, GridElem)>,
    pub indices: BTreeSet<usize>,
    /// Only non-empty trees are stored.
    pub trees: BTreeMap<usize, BTreeSet<GridElem>>,
    /// Keyed by the sorted index pair.
    pub f: BTreeMap<(usize, usize), usize>,
    pub g: BTreeMap<(GridElem, usize), usize>,
}

impl Condition {
    pub fn empty() -> Self {
        Condition::default()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.indices.is_empty() && self.f.is_empty() && self.g.is_empty()
    }

    pub fn lt(&self, x: GridElem, y: GridElem) -> bool {
        self.order.contains(&(x, y))
    }

    pub fn le(&self, x: GridElem, y: GridElem) -> bool {
        x == y || self.lt(x, y)
    }

    fn strictly_above(&self, x: GridElem) -> impl Iterator<Item = GridElem> + '_ {
        let lo = GridElem::new(0, 0);
        let hi = GridElem::new(usize::MAX, usize::MAX);
        self.order.range((x, lo)..=(x, hi)).map(|&(_, y)| y)
    }

    /// `U(x)`: the points of `A` above or equal to `x`.
    pub fn up(&self, x: GridElem) -> BTreeSet<GridElem> {
        let mut u: BTreeSet<GridElem> = self.strictly_above(x).filter(|y| self.points.contains(y)).collect();
        if self.points.contains(&x) {
            u.insert(x);
        }
        u
    }

    pub fn down(&self, x: GridElem) -> BTreeSet<GridElem> {
        if !self.points.contains(&x) {
            return BTreeSet::new();
        }
        self.points.iter().copied().filter(|&y| self.le(y, x)).collect()
    }

    /// Some point of `U(x) ∩ U(y)`, if the cones meet.
    pub fn common_above(&self, x: GridElem, y: GridElem) -> Option<GridElem> {
        let ux = self.up(x);
        self.up(y).into_iter().find(|z| ux.contains(z))
    }

    /// `[lo, hi]` inside `A`.
    pub fn interval(&self, lo: GridElem, hi: GridElem) -> BTreeSet<GridElem> {
        self.up(lo).into_iter().filter(|&s| self.le(s, hi)).collect()
    }

    pub fn tree(&self, alpha: usize) -> &BTreeSet<GridElem> {
        self.trees.get(&alpha).unwrap_or(&NO_POINTS)
    }

    /// Number of strict predecessors of `x` inside `T_α`.
    pub fn level(&self, alpha: usize, x: GridElem) -> usize {
        self.tree(alpha).iter().filter(|&&y| self.lt(y, x)).count()
    }

    pub fn levels(&self, alpha: usize) -> BTreeMap<GridElem, usize> {
        self.tree(alpha).iter().map(|&x| (x, self.level(alpha, x))).collect()
    }

    /// `T_α(n)`.
    pub fn tree_level(&self, alpha: usize, n: usize) -> BTreeSet<GridElem> {
        self.levels(alpha).into_iter().filter(|&(_, l)| l == n).map(|(x, _)| x).collect()
    }

    /// Least `n` with `T_α(n)` empty.
    pub fn height(&self, alpha: usize) -> usize {
        self.levels(alpha).values().map(|&l| l + 1).max().unwrap_or(0)
    }

    pub fn get_f(&self, a: usize, b: usize) -> Option<usize> {
        self.f.get(&pair_key(a, b)).copied()
    }

    /// `supp(p)`: the indices together with the columns of `A`.
    pub fn support(&self) -> BTreeSet<usize> {
        let mut s = self.indices.clone();
        s.extend(self.points.iter().map(|x| x.alpha));
        s
    }

    /// The part of the condition living on the columns `cols`, plus the
    /// points `extra` (which must already be in `A`).
    pub fn restrict(&self, cols: &BTreeSet<usize>, extra: &BTreeSet<GridElem>) -> Condition {
        let points: BTreeSet<GridElem> = self
            .points
            .iter()
            .copied()
            .filter(|x| cols.contains(&x.alpha) || extra.contains(x))
            .collect();
        self.restrict_points(&points, &self.indices.intersection(cols).copied().collect())
    }

    /// The part of the condition on the given points and indices.
    pub fn restrict_points(&self, points: &BTreeSet<GridElem>, indices: &BTreeSet<usize>) -> Condition {
        let points: BTreeSet<GridElem> = self.points.intersection(points).copied().collect();
        let indices: BTreeSet<usize> = self.indices.intersection(indices).copied().collect();
        let mut c = Condition {
            order: self
                .order
                .iter()
                .copied()
                .filter(|(x, y)| points.contains(x) && points.contains(y))
                .collect(),
            trees: indices
                .iter()
                .map(|&a| (a, self.tree(a).intersection(&points).copied().collect()))
                .collect(),
            f: self
                .f
                .iter()
                .filter(|((a, b), _)| indices.contains(a) && indices.contains(b))
                .map(|(&k, &v)| (k, v))
                .collect(),
            g: self
                .g
                .iter()
                .filter(|((x, a), _)| points.contains(x) && indices.contains(a))
                .map(|(&k, &v)| (k, v))
                .collect(),
            points,
            indices,
        };
        c.normalize();
        c
    }

    pub(crate) fn normalize(&mut self) {
        self.trees.retain(|_, t| !t.is_empty());
    }

    pub fn to_text(&self) -> String {
        text::write_condition(self)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// JSON view: points as `(a,n)` strings.
impl Serialize for Condition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View {
            points: Vec<String>,
            order: Vec<(String, String)>,
            indices: Vec<usize>,
            trees: BTreeMap<usize, Vec<String>>,
            f: Vec<((usize, usize), usize)>,
            g: Vec<((String, usize), usize)>,
        }
        View {
            points: self.points.iter().map(|x| x.to_string()).collect(),
            order: self.order.iter().map(|(x, y)| (x.to_string(), y.to_string())).collect(),
            indices: self.indices.iter().copied().collect(),
            trees: self
                .trees
                .iter()
                .map(|(&a, t)| (a, t.iter().map(|x| x.to_string()).collect()))
                .collect(),
            f: self.f.iter().map(|(&k, &v)| (k, v)).collect(),
            g: self.g.iter().map(|(&(x, a), &v)| ((x.to_string(), a), v)).collect(),
        }
        .serialize(s)
    }
}

/// Transitive closure of `pairs` (strict pairs, no reflexive entries added).
pub fn transitive_closure(pairs: &BTreeSet<(GridElem, GridElem)>) -> BTreeSet<(GridElem, GridElem)> {
    let mut succ: BTreeMap<GridElem, BTreeSet<GridElem>> = BTreeMap::new();
    for &(x, y) in pairs {
        succ.entry(x).or_default().insert(y);
    }
    let mut out = BTreeSet::new();
    for &start in succ.keys() {
        let mut stack: Vec<GridElem> = succ[&start].iter().copied().collect();
        let mut seen = BTreeSet::new();
        while let Some(y) = stack.pop() {
            if seen.insert(y) {
                out.insert((start, y));
                if let Some(next) = succ.get(&y) {
                    stack.extend(next.iter().copied());
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    OrderOutside { x: GridElem, y: GridElem },
    Reflexive { x: GridElem },
    NotTransitive { x: GridElem, y: GridElem, z: GridElem },
    NotAntisymmetric { x: GridElem, y: GridElem },
    NotGridBelow { x: GridElem, y: GridElem },
    NotLimit { alpha: usize },
    TreeNotIndexed { alpha: usize },
    TreePointOutside { alpha: usize, x: GridElem },
    NotATree { alpha: usize, x: GridElem, y: GridElem, z: GridElem },
    FPairOutside { alpha: usize, beta: usize },
    GOutside { x: GridElem, alpha: usize },
    TreeConesMeet { alpha: usize, x: GridElem, y: GridElem, common: GridElem },
    LevelConesMeet { alpha: usize, beta: usize, n: usize, x: GridElem, y: GridElem, common: GridElem },
    ConeReachesLowerLevel { alpha: usize, beta: usize, n: usize, x: GridElem, low: GridElem },
    SplitFails { x: GridElem, alpha: usize, level: usize, y: GridElem },
}

impl Violation {
    pub fn clause(&self) -> &'static str {
        use Violation::*;
        match self {
            OrderOutside { .. } | Reflexive { .. } | NotTransitive { .. } | NotAntisymmetric { .. }
            | NotGridBelow { .. } | NotLimit { .. } => "P1",
            TreeNotIndexed { .. } | TreePointOutside { .. } | NotATree { .. } => "P2",
            FPairOutside { .. } | GOutside { .. } => "P3",
            TreeConesMeet { .. } => "P4a",
            LevelConesMeet { .. } | ConeReachesLowerLevel { .. } => "P4b",
            SplitFails { .. } => "P5",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        let c = self.clause();
        match self {
            OrderOutside { x, y } => write!(f, "{c}: order pair {x}<{y} leaves A"),
            Reflexive { x } => write!(f, "{c}: {x}<{x}"),
            NotTransitive { x, y, z } => write!(f, "{c}: {x}<{y}<{z} but not {x}<{z}"),
            NotAntisymmetric { x, y } => write!(f, "{c}: {x}<{y} and {y}<{x}"),
            NotGridBelow { x, y } => write!(f, "{c}: {x}<{y} is not below the grid relation"),
            NotLimit { alpha } => write!(f, "{c}: index {alpha} is not a limit"),
            TreeNotIndexed { alpha } => write!(f, "{c}: tree {alpha} has no index"),
            TreePointOutside { alpha, x } => write!(f, "{c}: {x} in tree {alpha} is not in A below column {alpha}"),
            NotATree { alpha, x, y, z } => write!(f, "{c}: {y} and {z} below {x} in tree {alpha} are incomparable"),
            FPairOutside { alpha, beta } => write!(f, "{c}: f defined on {{{alpha},{beta}}} outside I"),
            GOutside { x, alpha } => write!(f, "{c}: g defined on ({x},{alpha}) outside A x I"),
            TreeConesMeet { alpha, x, y, common } => {
                write!(f, "{c}: incomparable {x},{y} in tree {alpha} share {common}")
            }
            LevelConesMeet { alpha, beta, n, x, y, common } => {
                write!(f, "{c}: level {n} of trees {alpha},{beta}: {x},{y} share {common}")
            }
            ConeReachesLowerLevel { alpha, beta, n, x, low } => {
                write!(f, "{c}: {x} at level {n} of tree {alpha} lies below {low} in tree {beta} under level {n}")
            }
            SplitFails { x, alpha, level, y } => {
                write!(f, "{c}: {y} at level {level} of tree {alpha} neither inside nor apart from U({x})")
            }
        }
    }
}

/// Every violated clause, with witnesses. Empty means valid.
pub fn validate(p: &Condition) -> Vec<Violation> {
    use Violation::*;
    let mut out = Vec::new();
    // (P1)
    for &(x, y) in &p.order {
        if !p.points.contains(&x) || !p.points.contains(&y) {
            out.push(OrderOutside { x, y });
        } else if x == y {
            out.push(Reflexive { x });
        } else if !grid_le(x, y) {
            out.push(NotGridBelow { x, y });
        }
        if x != y && p.lt(y, x) && x < y {
            out.push(NotAntisymmetric { x, y });
        }
        for z in p.strictly_above(y) {
            if !p.lt(x, z) && x != z {
                out.push(NotTransitive { x, y, z });
            }
        }
    }
    for &a in &p.indices {
        if !is_limit(a) {
            out.push(NotLimit { alpha: a });
        }
    }
    // (P2)
    for (&a, t) in &p.trees {
        if !p.indices.contains(&a) {
            out.push(TreeNotIndexed { alpha: a });
        }
        for &x in t {
            if !p.points.contains(&x) || x.alpha >= a {
                out.push(TreePointOutside { alpha: a, x });
            }
        }
        for &x in t {
            let below: Vec<GridElem> = t.iter().copied().filter(|&y| p.lt(y, x)).collect();
            'pairs: for (i, &y) in below.iter().enumerate() {
                for &z in &below[i + 1..] {
                    if !p.le(y, z) && !p.le(z, y) {
                        out.push(NotATree { alpha: a, x, y, z });
                        break 'pairs;
                    }
                }
            }
        }
    }
    // (P3)
    for &(a, b) in p.f.keys() {
        if a == b || !p.indices.contains(&a) || !p.indices.contains(&b) {
            out.push(FPairOutside { alpha: a, beta: b });
        }
    }
    for &(x, a) in p.g.keys() {
        if !p.points.contains(&x) || !p.indices.contains(&a) {
            out.push(GOutside { x, alpha: a });
        }
    }
    // (P4)(a)
    for (&a, t) in &p.trees {
        let elems: Vec<GridElem> = t.iter().copied().collect();
        for (i, &x) in elems.iter().enumerate() {
            for &y in &elems[i + 1..] {
                if !p.le(x, y) && !p.le(y, x) {
                    if let Some(common) = p.common_above(x, y) {
                        out.push(TreeConesMeet { alpha: a, x, y, common });
                    }
                }
            }
        }
    }
    // (P4)(b), both directions of the lower-level clause.
    for (&(a, b), &n) in &p.f {
        if a == b {
            continue;
        }
        let (la, lb) = (p.levels(a), p.levels(b));
        let at = |l: &BTreeMap<GridElem, usize>| -> Vec<GridElem> {
            l.iter().filter(|&(_, &k)| k == n).map(|(&x, _)| x).collect()
        };
        let (na, nb) = (at(&la), at(&lb));
        for &x in &na {
            for &y in &nb {
                if let Some(common) = p.common_above(x, y) {
                    out.push(LevelConesMeet { alpha: a, beta: b, n, x, y, common });
                }
            }
        }
        for (top, lower, ta, tb) in [(&na, &lb, a, b), (&nb, &la, b, a)] {
            for &x in top {
                for (&low, _) in lower.iter().filter(|&(_, &k)| k < n) {
                    if p.le(x, low) {
                        out.push(ConeReachesLowerLevel { alpha: ta, beta: tb, n, x, low });
                    }
                }
            }
        }
    }
    // (P5)
    for (&(x, a), &m) in &p.g {
        let ux = p.up(x);
        for y in p.tree_level(a, m) {
            let uy = p.up(y);
            if !uy.is_subset(&ux) && !uy.is_disjoint(&ux) {
                out.push(SplitFails { x, alpha: a, level: m, y });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LeqViolation {
    MissingPoint { x: GridElem },
    OrderChanged { x: GridElem, y: GridElem },
    MissingIndex { alpha: usize },
    TreeChanged { alpha: usize, x: GridElem },
    NewPointBelowOld { x: GridElem, y: GridElem },
    FChanged { alpha: usize, beta: usize },
    GChanged { x: GridElem, alpha: usize },
    ConesMeetLater { x: GridElem, y: GridElem, common: GridElem },
}

impl LeqViolation {
    pub fn clause(&self) -> &'static str {
        use LeqViolation::*;
        match self {
            MissingPoint { .. } | OrderChanged { .. } => "O1",
            MissingIndex { .. } | TreeChanged { .. } => "O2",
            NewPointBelowOld { .. } => "O3",
            FChanged { .. } | GChanged { .. } => "O4",
            ConesMeetLater { .. } => "O5",
        }
    }
}

impl fmt::Display for LeqViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use LeqViolation::*;
        let c = self.clause();
        match self {
            MissingPoint { x } => write!(f, "{c}: {x} dropped"),
            OrderChanged { x, y } => write!(f, "{c}: relation between {x} and {y} changed"),
            MissingIndex { alpha } => write!(f, "{c}: index {alpha} dropped"),
            TreeChanged { alpha, x } => write!(f, "{c}: membership of {x} in tree {alpha} changed"),
            NewPointBelowOld { x, y } => write!(f, "{c}: new point {x} below old point {y}"),
            FChanged { alpha, beta } => write!(f, "{c}: f on {{{alpha},{beta}}} not kept"),
            GChanged { x, alpha } => write!(f, "{c}: g on ({x},{alpha}) not kept"),
            ConesMeetLater { x, y, common } => write!(f, "{c}: disjoint cones of {x},{y} meet at {common}"),
        }
    }
}

/// Decides `p ≤ q` (p extends q). Empty means it holds.
pub fn leq(p: &Condition, q: &Condition) -> Vec<LeqViolation> {
    use LeqViolation::*;
    let mut out = Vec::new();
    for &x in &q.points {
        if !p.points.contains(&x) {
            out.push(MissingPoint { x });
        }
    }
    for &x in &q.points {
        for &y in &q.points {
            if x != y && q.lt(x, y) != p.lt(x, y) {
                out.push(OrderChanged { x, y });
            }
        }
    }
    for &a in &q.indices {
        if !p.indices.contains(&a) {
            out.push(MissingIndex { alpha: a });
            continue;
        }
        let (tp, tq) = (p.tree(a), q.tree(a));
        for &x in tp.iter().filter(|x| q.points.contains(x)).chain(tq) {
            if tp.contains(&x) != tq.contains(&x) {
                out.push(TreeChanged { alpha: a, x });
            }
        }
    }
    for &x in p.points.difference(&q.points) {
        for y in p.strictly_above(x) {
            if q.points.contains(&y) {
                out.push(NewPointBelowOld { x, y });
            }
        }
    }
    for (&(a, b), &m) in &q.f {
        if p.f.get(&(a, b)) != Some(&m) {
            out.push(FChanged { alpha: a, beta: b });
        }
    }
    for (&(x, a), &m) in &q.g {
        if p.g.get(&(x, a)) != Some(&m) {
            out.push(GChanged { x, alpha: a });
        }
    }
    let qp: Vec<GridElem> = q.points.iter().copied().collect();
    for (i, &x) in qp.iter().enumerate() {
        for &y in &qp[i + 1..] {
            if q.common_above(x, y).is_none() {
                if let Some(common) = p.common_above(x, y) {
                    out.push(ConesMeetLater { x, y, common });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForcingError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0} is already in A")]
    AlreadyPresent(GridElem),
    #[error("{0} is not in A")]
    UnknownPoint(GridElem),
    #[error("index {alpha} is unusable: {reason}")]
    BadIndex { alpha: usize, reason: String },
    #[error("index {0} is not in I")]
    UnknownIndex(usize),
    #[error("{x} is not in tree {alpha}")]
    NotInTree { x: GridElem, alpha: usize },
    #[error("{x} lies outside the columns below {alpha}")]
    OutsideColumn { x: GridElem, alpha: usize },
    #[error("{a} is not strictly below {b} in the grid relation")]
    NotGridBelow { a: GridElem, b: GridElem },
    #[error("f is already defined on {{{alpha},{beta}}}")]
    AlreadyDefinedF { alpha: usize, beta: usize },
    #[error("g is already defined on ({x},{alpha})")]
    AlreadyDefinedG { x: GridElem, alpha: usize },
    #[error("not twins: ({}) {}", .0.clause, .0.detail)]
    NotTwins(TwinFailure),
    #[error("result violates {}", fmt_list(.0))]
    Invalid(Vec<Violation>),
    #[error("result is not an extension: {}", fmt_list(.0))]
    NotExtension(Vec<LeqViolation>),
    #[error("bad quadruple: {0}")]
    Quadruple(String),
    #[error("witness point {0} is not fresh")]
    NotFresh(GridElem),
    #[error("cannot split into twin components: {0}")]
    NoSplit(String),
    #[error("no free grid point: {0}")]
    NoRoom(String),
    #[error("budget exhausted after {done} steps; pending: {}", .pending.join("; "))]
    BudgetExhausted { done: usize, pending: Vec<String> },
}

fn fmt_list<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
