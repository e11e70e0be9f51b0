//! A finite generic run: a descending chain of conditions meeting an
//! explicit schedule of dense requirements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::extend::{amalgamate_r, extend_add_point, extend_define_f, extend_define_g, extend_uplus, Side};
use super::{is_limit, leq, map_columns, oplus, twins, Condition, ForcingError, LIMIT_STEP};
use crate::grid::GridElem;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DenseSpec {
    /// A new point in `T_γ`, isolated or directly above `above`.
    AddPoint { gamma: usize, point: Option<GridElem>, above: Option<GridElem> },
    /// `T_γ(0)` has an element outside the columns below `zeta`.
    AddTreeRoot { gamma: usize, zeta: usize },
    DefineF { alpha: usize, beta: usize },
    DefineG { x: GridElem, alpha: usize },
    /// A point in `T_α ∩ T_β` witnessing the quadruple axiom, obtained by
    /// amalgamating the condition with a twin copy whose tree index is `β`.
    G5Witness { alpha: usize, beta: usize },
}

impl fmt::Display for DenseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DenseSpec::AddPoint { gamma, point, above } => {
                write!(f, "add-point {gamma}")?;
                if let Some(p) = point {
                    write!(f, " {p}")?;
                }
                if let Some(a) = above {
                    write!(f, " above {a}")?;
                }
                Ok(())
            }
            DenseSpec::AddTreeRoot { gamma, zeta } => write!(f, "add-tree-root {gamma} {zeta}"),
            DenseSpec::DefineF { alpha, beta } => write!(f, "define-f {alpha} {beta}"),
            DenseSpec::DefineG { x, alpha } => write!(f, "define-g {x} {alpha}"),
            DenseSpec::G5Witness { alpha, beta } => write!(f, "g5 {alpha} {beta}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogEntry {
    pub spec: Option<String>,
    pub condition: Condition,
    /// Set when the requirement already held and nothing was added.
    pub already_met: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessStep {
    pub entry: usize,
    pub kernel: BTreeSet<usize>,
    /// The side twin, a column-shifted copy of the condition the step started from.
    pub twin: Condition,
    pub low: Side,
    pub high: Side,
    pub t: GridElem,
    pub key_low: bool,
    pub key_high: bool,
    pub low_identity: bool,
    pub high_identity: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenericLog {
    /// `entries[0]` is the empty condition.
    pub entries: Vec<LogEntry>,
    pub met: Vec<String>,
    pub witnesses: Vec<WitnessStep>,
}

impl GenericLog {
    /// Member-wise union of all logged conditions.
    pub fn unions(&self) -> Condition {
        let mut u = Condition::empty();
        for e in &self.entries {
            let c = &e.condition;
            u.points.extend(&c.points);
            u.order.extend(&c.order);
            u.indices.extend(&c.indices);
            for (&a, t) in &c.trees {
                u.trees.entry(a).or_default().extend(t);
            }
            u.f.extend(&c.f);
            u.g.extend(&c.g);
        }
        u
    }
}

/// The accumulated candidate at window scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateFragment {
    pub condition: Condition,
    /// Witness points, and every point added after the first witness step.
    pub late: BTreeSet<GridElem>,
    /// Required number of children per tree node for the branching surrogate.
    pub branching: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchingNote {
    pub alpha: usize,
    pub node: GridElem,
    pub children: usize,
}

impl CandidateFragment {
    pub const DEFAULT_BRANCHING: usize = 2;

    pub fn from_condition(condition: Condition) -> Self {
        CandidateFragment { condition, late: BTreeSet::new(), branching: Self::DEFAULT_BRANCHING }
    }

    /// Tree nodes with fewer than `branching` children inside the window.
    /// Each is an open requirement of the everywhere-branching axiom that
    /// only a larger window could meet.
    pub fn branching_shortfall(&self) -> Vec<BranchingNote> {
        let c = &self.condition;
        let mut out = Vec::new();
        for &a in c.trees.keys() {
            let levels = c.levels(a);
            for (&x, &l) in &levels {
                let children = levels.iter().filter(|&(&y, &m)| m == l + 1 && c.lt(x, y)).count();
                if children < self.branching {
                    out.push(BranchingNote { alpha: a, node: x, children });
                }
            }
        }
        out
    }

    /// The fragment as it stood before the first witness step.
    pub fn early(&self) -> Condition {
        let keep: BTreeSet<GridElem> = self.condition.points.difference(&self.late).copied().collect();
        self.condition.restrict_points(&keep, &self.condition.indices)
    }

    pub fn to_text(&self) -> String {
        super::text::write_fragment(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenericRun {
    pub log: GenericLog,
    pub fragment: CandidateFragment,
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, v: &[T]) -> T {
    v[rng.gen_range(0..v.len())]
}

/// A seeded pick among the free points of columns `lo..gamma` at the least
/// level `>= level` that has one.
fn fresh_point(p: &Condition, lo: usize, gamma: usize, level: usize, rng: &mut ChaCha8Rng) -> Option<GridElem> {
    if lo >= gamma {
        return None;
    }
    let top = p.points.iter().map(|x| x.n + 1).max().unwrap_or(0).max(level);
    (level..=top).find_map(|n| {
        let free: Vec<GridElem> = (lo..gamma).map(|c| GridElem::new(c, n)).filter(|x| !p.points.contains(x)).collect();
        (!free.is_empty()).then(|| pick(rng, &free))
    })
}

/// Components of the support: columns and indices linked by the order,
/// tree membership, `f` and `g`.
fn support_components(p: &Condition) -> BTreeMap<usize, usize> {
    let supp: Vec<usize> = p.support().into_iter().collect();
    let mut parent: BTreeMap<usize, usize> = supp.iter().map(|&a| (a, a)).collect();
    fn find(parent: &mut BTreeMap<usize, usize>, a: usize) -> usize {
        let up = parent[&a];
        if up == a {
            return a;
        }
        let root = find(parent, up);
        parent.insert(a, root);
        root
    }
    let mut link = |a: usize, b: usize| {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent.insert(ra.max(rb), ra.min(rb));
        }
    };
    for &(x, y) in &p.order {
        link(x.alpha, y.alpha);
    }
    for (&a, t) in &p.trees {
        for x in t {
            link(a, x.alpha);
        }
    }
    for &(a, b) in p.f.keys() {
        link(a, b);
    }
    for &(x, a) in p.g.keys() {
        link(x.alpha, a);
    }
    supp.iter().map(|&a| (a, find(&mut parent, a))).collect()
}

/// The lowest path of length four from the least root of `T_α`.
fn lowest_quadruple(p: &Condition, alpha: usize) -> Result<[GridElem; 4], ForcingError> {
    let levels = p.levels(alpha);
    let mut path: Vec<GridElem> = Vec::new();
    for l in 0..4 {
        let next = levels
            .iter()
            .filter(|&(&x, &m)| m == l && path.last().is_none_or(|&prev| p.lt(prev, x)))
            .map(|(&x, _)| x)
            .next();
        match next {
            Some(x) => path.push(x),
            None => return Err(ForcingError::Quadruple(format!("tree {alpha} has no path of length 4"))),
        }
    }
    Ok([path[0], path[1], path[2], path[3]])
}

/// Splits the condition into a kernel and the component of `alpha` sitting
/// above it, copies that component onto fresh columns (just below `alpha`,
/// with `alpha` going to `beta`) to get a twin, and amalgamates the two.
/// The copy is a side condition: the run continues from the result, which
/// extends both twins.
fn g5_step(p: &Condition, alpha: usize, beta: usize, rng: &mut ChaCha8Rng) -> Result<(Condition, WitnessStep), ForcingError> {
    if !p.indices.contains(&alpha) {
        return Err(ForcingError::UnknownIndex(alpha));
    }
    let supp = p.support();
    if beta <= alpha || !is_limit(beta) || supp.contains(&beta) {
        return Err(ForcingError::BadIndex { alpha: beta, reason: format!("needs a fresh limit index above {alpha}") });
    }
    let comp = support_components(p);
    let block: BTreeSet<usize> = comp.iter().filter(|&(_, &c)| c == comp[&alpha]).map(|(&a, _)| a).collect();
    let kernel: BTreeSet<usize> = supp.difference(&block).copied().collect();
    if let (Some(&k), Some(&b)) = (kernel.last(), block.first()) {
        if k >= b {
            return Err(ForcingError::NoSplit(format!("kernel column {k} is not below the component of {alpha}")));
        }
    }
    if block.last() != Some(&alpha) {
        return Err(ForcingError::NoSplit(format!("the component of {alpha} reaches past it")));
    }
    let low_cols: Vec<usize> = block.iter().copied().filter(|&a| a != alpha).collect();
    let start = low_cols.last().map_or(0, |&c| c + 1);
    if start + low_cols.len() >= alpha {
        return Err(ForcingError::NoRoom(format!("no room for a copy between {start} and {alpha}")));
    }
    let mut rho: BTreeMap<usize, usize> = low_cols.iter().enumerate().map(|(i, &c)| (c, start + i)).collect();
    rho.insert(alpha, beta);
    let twin = map_columns(p, &rho);
    twins(p, &twin).map_err(ForcingError::NotTwins)?;
    let quad_low = lowest_quadruple(p, alpha)?;
    let quad_high = quad_low.map(|x| GridElem::new(rho.get(&x.alpha).copied().unwrap_or(x.alpha), x.n));
    let (y, w) = (quad_low[1], quad_high[3]);
    let lo = y.alpha.max(w.alpha) + 1;
    let both = oplus(p, &twin)?;
    let t = fresh_point(&both, lo, alpha, y.n.max(w.n) + 1, rng)
        .ok_or_else(|| ForcingError::NoRoom(format!("no column between {lo} and {alpha}")))?;
    let low = Side { alpha, quad: quad_low };
    let high = Side { alpha: beta, quad: quad_high };
    let a = amalgamate_r(p, low, &twin, high, t)?;
    let step = WitnessStep {
        entry: 0,
        kernel,
        twin,
        low,
        high,
        t,
        key_low: a.key_low,
        key_high: a.key_high,
        low_identity: a.low_identity,
        high_identity: a.high_identity,
    };
    Ok((a.r, step))
}

fn realize(p: &Condition, spec: &DenseSpec, rng: &mut ChaCha8Rng) -> Result<(Condition, Option<WitnessStep>), ForcingError> {
    let next = match *spec {
        DenseSpec::AddPoint { gamma, point, above } => {
            if !is_limit(gamma) {
                return Err(ForcingError::BadIndex { alpha: gamma, reason: "not a limit index".into() });
            }
            let (lo, level) = above.map_or((0, 0), |a| (a.alpha + 1, a.n + 1));
            let y = match point {
                Some(y) => y,
                None => fresh_point(p, lo, gamma, level, rng)
                    .ok_or_else(|| ForcingError::NoRoom(format!("no column in {lo}..{gamma}")))?,
            };
            match above {
                Some(a) => extend_uplus(p, a, y, gamma)?,
                None => extend_add_point(p, y, gamma)?,
            }
        }
        DenseSpec::AddTreeRoot { gamma, zeta } => {
            let met = p.levels(gamma).iter().any(|(x, &l)| l == 0 && x.alpha >= zeta);
            if met {
                p.clone()
            } else {
                let y = fresh_point(p, zeta, gamma, 0, rng)
                    .ok_or_else(|| ForcingError::NoRoom(format!("no column in {zeta}..{gamma}")))?;
                extend_add_point(p, y, gamma)?
            }
        }
        DenseSpec::DefineF { alpha, beta } => {
            if p.get_f(alpha, beta).is_some() {
                p.clone()
            } else {
                extend_define_f(p, alpha, beta)?
            }
        }
        DenseSpec::DefineG { x, alpha } => {
            if p.g.contains_key(&(x, alpha)) {
                p.clone()
            } else {
                extend_define_g(p, x, alpha)?
            }
        }
        DenseSpec::G5Witness { alpha, beta } => {
            let (r, step) = g5_step(p, alpha, beta, rng)?;
            return Ok((r, Some(step)));
        }
    };
    Ok((next, None))
}

/// Meets each scheduled requirement in turn, one log entry per requirement.
/// Each requirement costs one unit of `budget`.
pub fn generic_run(schedule: &[DenseSpec], budget: usize, seed: u64) -> Result<GenericRun, ForcingError> {
    if schedule.len() > budget {
        return Err(ForcingError::BudgetExhausted {
            done: 0,
            pending: schedule[budget..].iter().map(|s| s.to_string()).collect(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = GenericLog {
        entries: vec![LogEntry { spec: None, condition: Condition::empty(), already_met: false }],
        met: Vec::new(),
        witnesses: Vec::new(),
    };
    let mut late = BTreeSet::new();
    for spec in schedule {
        let p = &log.entries.last().unwrap().condition;
        let (next, witness) = realize(p, spec, &mut rng)?;
        let l = leq(&next, p);
        if !l.is_empty() {
            return Err(ForcingError::NotExtension(l));
        }
        let already_met = &next == p;
        if let Some(w) = &witness {
            late.insert(w.t);
        } else if !log.witnesses.is_empty() {
            late.extend(next.points.difference(&p.points).copied());
        }
        if let Some(mut w) = witness {
            w.entry = log.entries.len();
            log.witnesses.push(w);
        }
        log.met.push(spec.to_string());
        log.entries.push(LogEntry { spec: Some(spec.to_string()), condition: next, already_met });
    }
    let condition = log.entries.last().unwrap().condition.clone();
    let fragment = CandidateFragment { condition, late, branching: CandidateFragment::DEFAULT_BRANCHING };
    Ok(GenericRun { log, fragment })
}

/// A schedule building a kernel tree and one chain tree, followed by a
/// witness step against a twin copy and `f` on the two chain trees.
///
/// Columns: kernel below 4 with index 4, then the chain, then room for the
/// copy and the witness, then the chain index `α`; the copy gets `β > α`.
pub fn twin_schedule(seed: u64) -> Vec<DenseSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Vec::new();
    let kernel_len = rng.gen_range(0..=3usize);
    let mut prev = None;
    for i in 0..kernel_len {
        let x = GridElem::new(i, i);
        s.push(DenseSpec::AddPoint { gamma: LIMIT_STEP, point: Some(x), above: prev });
        prev = Some(x);
    }
    let len = rng.gen_range(4..=6usize);
    let base_level = rng.gen_range(0..3usize);
    let col = LIMIT_STEP + 1 + rng.gen_range(0..3usize);
    let room = col + 2 * len + 1 + rng.gen_range(0..3usize);
    let alpha = (room / LIMIT_STEP + 1) * LIMIT_STEP;
    let beta = alpha + LIMIT_STEP * rng.gen_range(1..=3usize);
    let mut prev = None;
    for i in 0..len {
        let x = GridElem::new(col + i, base_level + i);
        s.push(DenseSpec::AddPoint { gamma: alpha, point: Some(x), above: prev });
        prev = Some(x);
    }
    if rng.gen_bool(0.5) {
        s.push(DenseSpec::DefineG { x: GridElem::new(col, base_level), alpha });
    }
    s.push(DenseSpec::G5Witness { alpha, beta });
    s.push(DenseSpec::DefineF { alpha, beta });
    s
}
