//! Finite stages of the grid poset on columns × levels.
//!
//! Columns stand in for countable ordinals; the positive multiples of the
//! block size are the limit columns. Column 0 holds a root with a binary graft.
//! Each limit column α gets one element t_α = (α, k) whose strict lower cone
//! is the union of the lower cones of the scheduled pair (y_α, w_α), followed
//! by a binary graft in the next `graft` columns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ipart::i_maximal_tops;
use crate::order::{Elem, FinitePoset, Order};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GridElem {
    pub alpha: usize,
    pub n: usize,
}

impl GridElem {
    pub fn new(alpha: usize, n: usize) -> Self {
        GridElem { alpha, n }
    }

    /// Parses `(alpha,n)`.
    pub fn parse(s: &str) -> Option<Self> {
        let inner = s.strip_prefix('(')?.strip_suffix(')')?;
        let (a, n) = inner.split_once(',')?;
        Some(GridElem { alpha: a.trim().parse().ok()?, n: n.trim().parse().ok()? })
    }
}

impl fmt::Display for GridElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.alpha, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColoringKind {
    Identity,
    Seeded,
}

/// `c(xi, zeta)` for `xi < zeta`, injective in `xi` for each `zeta`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Coloring {
    pub kind: ColoringKind,
    pub seed: u64,
    #[serde(skip)]
    columns: Vec<Vec<usize>>,
}

fn seeded_column(seed: u64, zeta: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(zeta as u64);
    let mut col: Vec<usize> = (0..zeta).collect();
    col.shuffle(&mut rng);
    col
}

pub fn make_coloring(kind: ColoringKind, bound: usize, seed: u64) -> Coloring {
    let columns = match kind {
        ColoringKind::Identity => Vec::new(),
        ColoringKind::Seeded => (0..bound).map(|z| seeded_column(seed, z)).collect(),
    };
    Coloring { kind, seed, columns }
}

impl Coloring {
    pub fn get(&self, xi: usize, zeta: usize) -> usize {
        assert!(xi < zeta, "c({xi},{zeta}) needs xi < zeta");
        match self.kind {
            ColoringKind::Identity => xi,
            ColoringKind::Seeded => match self.columns.get(zeta) {
                Some(col) => col[xi],
                None => seeded_column(self.seed, zeta)[xi],
            },
        }
    }

    /// A column `zeta < bound` with two arguments sharing a value.
    pub fn injectivity_failure(&self, bound: usize) -> Option<(usize, usize, usize)> {
        (1..bound).find_map(|zeta| {
            let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
            (0..zeta).find_map(|xi| seen.insert(self.get(xi, zeta), xi).map(|prev| (zeta, prev, xi)))
        })
    }
}

fn cross_exceeds(c: &Coloring, a: &[usize], b: &[usize], bound: usize) -> bool {
    a.iter().all(|&xi| b.iter().all(|&zeta| xi < zeta && c.get(xi, zeta) > bound))
}

/// First pair of blocks `a < b` (every index of `a` below every index of `b`)
/// with all cross values above `bound`.
pub fn check_unbound_fact(c: &Coloring, blocks: &[Vec<usize>], bound: usize) -> Option<(usize, usize)> {
    for i in 0..blocks.len() {
        for j in 0..blocks.len() {
            if i == j || blocks[i].is_empty() || blocks[j].is_empty() {
                continue;
            }
            if cross_exceeds(c, &blocks[i], &blocks[j], bound) {
                return Some((i, j));
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("bad grid config: {0}")]
    Config(String),
    #[error("{what} needs level {level}, beyond the window of {levels}")]
    WindowExceeded { what: String, level: usize, levels: usize },
    #[error("column {0} is not a free limit column")]
    NotLimit(usize),
    #[error("unknown grid element {0}")]
    UnknownElem(GridElem),
    #[error("scheduled element {elem} is not below column {alpha}")]
    PairOutOfRange { elem: GridElem, alpha: usize },
    #[error("{p} is below {q}")]
    Comparable { p: GridElem, q: GridElem },
    #[error("{0} has no strict successor in the window")]
    MaximalInWindow(GridElem),
    #[error("the graft above {0} is cut off by the window")]
    GraftEdge(GridElem),
    #[error("every successor of {q} is above {p}")]
    NoSeparation { p: GridElem, q: GridElem },
    #[error("not a strictly increasing stem")]
    NotABranch,
    #[error("coloring has {0} entries for {1} elements")]
    ColoringSize(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridConfig {
    pub stages: usize,
    pub block: usize,
    pub graft: usize,
    pub coloring: ColoringKind,
    pub seed: u64,
    pub levels: usize,
    /// Pairs used for the first stages instead of seeded picks.
    pub schedule: Vec<(GridElem, GridElem)>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            stages: 5,
            block: 4,
            graft: 3,
            coloring: ColoringKind::Identity,
            seed: 0,
            levels: 512,
            schedule: Vec::new(),
        }
    }
}

impl GridConfig {
    /// Parses `key=value` pairs separated by commas, e.g.
    /// `stages=5,block=4,graft=3,coloring=seeded,seed=7`.
    pub fn from_spec(spec: &str) -> Result<GridConfig, String> {
        let mut cfg = GridConfig::default();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, got {part:?}"))?;
            let num = || v.parse::<usize>().map_err(|_| format!("{k}: not a number: {v:?}"));
            match k {
                "stages" => cfg.stages = num()?,
                "block" => cfg.block = num()?,
                "graft" => cfg.graft = num()?,
                "levels" => cfg.levels = num()?,
                "seed" => cfg.seed = v.parse().map_err(|_| format!("seed: not a number: {v:?}"))?,
                "coloring" => {
                    cfg.coloring = match v {
                        "identity" => ColoringKind::Identity,
                        "seeded" => ColoringKind::Seeded,
                        _ => return Err(format!("coloring must be identity or seeded, got {v:?}")),
                    }
                }
                _ => return Err(format!("unknown key {k:?}")),
            }
        }
        cfg.check().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), GridError> {
        if self.block < 2 {
            return Err(GridError::Config("block must be at least 2".into()));
        }
        if self.graft == 0 || self.graft >= self.block {
            return Err(GridError::Config(format!("graft must be in 1..{}", self.block)));
        }
        Ok(())
    }

    pub fn columns(&self) -> usize {
        (self.stages + 1) * self.block
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageRecord {
    pub alpha: usize,
    pub y: GridElem,
    pub w: GridElem,
    /// Columns of everything below `y` or `w`.
    pub gamma: Vec<usize>,
    pub k: usize,
    pub t: GridElem,
    pub graft: Vec<GridElem>,
}

#[derive(Debug, Clone)]
pub struct GridBuild {
    pub config: GridConfig,
    pub coloring: Coloring,
    elems: Vec<GridElem>,
    index: BTreeMap<GridElem, Elem>,
    below: Vec<BTreeSet<Elem>>,
    pub base: Vec<GridElem>,
    pub stages: Vec<StageRecord>,
}

impl GridBuild {
    /// The root `(0,0)` with its graft.
    pub fn new(config: &GridConfig) -> Result<GridBuild, GridError> {
        config.check()?;
        let mut b = GridBuild {
            config: config.clone(),
            coloring: make_coloring(config.coloring, config.columns(), config.seed),
            elems: Vec::new(),
            index: BTreeMap::new(),
            below: Vec::new(),
            base: Vec::new(),
            stages: Vec::new(),
        };
        let root = b.insert(GridElem::new(0, 0), BTreeSet::new());
        let mut base = vec![GridElem::new(0, 0)];
        base.extend(b.graft_above(root)?);
        b.base = base;
        Ok(b)
    }

    fn insert(&mut self, e: GridElem, below: BTreeSet<Elem>) -> Elem {
        let i = self.elems.len();
        self.elems.push(e);
        self.index.insert(e, i);
        self.below.push(below);
        i
    }

    fn graft_above(&mut self, root: Elem) -> Result<Vec<GridElem>, GridError> {
        let mut added = Vec::new();
        let mut frontier = vec![root];
        let base_col = self.elems[root].alpha;
        for d in 1..=self.config.graft {
            let col = base_col + d;
            let mut next = Vec::new();
            for &parent in &frontier {
                for _ in 0..2 {
                    let mut cone = self.below[parent].clone();
                    cone.insert(parent);
                    let mut level = cone
                        .iter()
                        .map(|&s| self.elems[s].n.max(self.coloring.get(self.elems[s].alpha, col)))
                        .max()
                        .expect("cone contains the parent")
                        + 1;
                    while self.index.contains_key(&GridElem::new(col, level)) {
                        level += 1;
                    }
                    if level >= self.config.levels {
                        return Err(GridError::WindowExceeded {
                            what: format!("graft node in column {col}"),
                            level,
                            levels: self.config.levels,
                        });
                    }
                    let e = GridElem::new(col, level);
                    next.push(self.insert(e, cone));
                    added.push(e);
                }
            }
            frontier = next;
        }
        Ok(added)
    }

    pub fn limit_set(&self) -> Vec<usize> {
        (1..=self.config.stages).map(|i| i * self.config.block).collect()
    }

    /// The next limit column after every built stage.
    pub fn next_limit(&self) -> usize {
        self.stages.last().map_or(self.config.block, |s| s.alpha + self.config.block)
    }

    /// Adds t_α above the pair and grafts a binary tree above it.
    pub fn build_stage(&mut self, alpha: usize, y: GridElem, w: GridElem) -> Result<&StageRecord, GridError> {
        if alpha == 0 || !alpha.is_multiple_of(self.config.block) || alpha < self.next_limit() {
            return Err(GridError::NotLimit(alpha));
        }
        let mut cone = BTreeSet::new();
        for e in [y, w] {
            let i = self.index_of(e).ok_or(GridError::UnknownElem(e))?;
            if e.alpha >= alpha {
                return Err(GridError::PairOutOfRange { elem: e, alpha });
            }
            cone.insert(i);
            cone.extend(self.below[i].iter().copied());
        }
        let gamma: BTreeSet<usize> = cone.iter().map(|&s| self.elems[s].alpha).collect();
        let k = gamma
            .iter()
            .map(|&nu| self.coloring.get(nu, alpha))
            .chain([y.n, w.n])
            .max()
            .expect("pair is non-empty")
            + 1;
        if k >= self.config.levels {
            return Err(GridError::WindowExceeded { what: format!("t at column {alpha}"), level: k, levels: self.config.levels });
        }
        let t = GridElem::new(alpha, k);
        let ti = self.insert(t, cone);
        let graft = self.graft_above(ti)?;
        self.stages.push(StageRecord { alpha, y, w, gamma: gamma.into_iter().collect(), k, t, graft });
        Ok(self.stages.last().expect("just pushed"))
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elems(&self) -> &[GridElem] {
        &self.elems
    }

    pub fn index_of(&self, e: GridElem) -> Option<Elem> {
        self.index.get(&e).copied()
    }

    pub fn lt(&self, a: Elem, b: Elem) -> bool {
        self.below[b].contains(&a)
    }

    pub fn le(&self, a: Elem, b: Elem) -> bool {
        a == b || self.lt(a, b)
    }

    /// Strict predecessors of an element.
    pub fn predecessors(&self, a: Elem) -> &BTreeSet<Elem> {
        &self.below[a]
    }

    pub fn poset(&self) -> FinitePoset {
        let labels = self.elems.iter().map(|e| e.to_string()).collect();
        let pairs: Vec<(Elem, Elem)> =
            (0..self.len()).flat_map(|b| self.below[b].iter().map(move |&a| (a, b))).collect();
        FinitePoset::from_pairs(format!("grid-s{}", self.stages.len()), labels, &pairs)
            .expect("stages only add elements above existing ones")
    }

    /// Deepest nodes of every graft; their subtrees lie beyond the window.
    pub fn graft_leaves(&self) -> BTreeSet<GridElem> {
        let depth = self.config.graft;
        let mut out: BTreeSet<GridElem> = self.base.iter().copied().filter(|e| e.alpha == depth).collect();
        for s in &self.stages {
            out.extend(s.graft.iter().copied().filter(|e| e.alpha == s.alpha + depth));
        }
        out
    }

    /// Private part of each block: the base tree and each t_α with its graft.
    pub fn blocks(&self) -> Vec<(usize, Vec<GridElem>)> {
        let mut out = vec![(0, self.base.clone())];
        for s in &self.stages {
            let mut part = vec![s.t];
            part.extend(s.graft.iter().copied());
            out.push((s.alpha, part));
        }
        out
    }
}

fn seeded_pair(rng: &mut ChaCha8Rng, b: &GridBuild, alpha: usize) -> (GridElem, GridElem) {
    let pool: Vec<GridElem> = b.elems.iter().copied().filter(|e| e.alpha < alpha).collect();
    let y = pool[rng.gen_range(0..pool.len())];
    let w = if pool.len() > 1 {
        loop {
            let w = pool[rng.gen_range(0..pool.len())];
            if w != y {
                break w;
            }
        }
    } else {
        y
    };
    (y, w)
}

/// Runs every configured stage; pairs come from `config.schedule` first, then
/// from a seeded pick among elements in earlier columns.
pub fn build_grid(config: &GridConfig) -> Result<GridBuild, GridError> {
    let mut b = GridBuild::new(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for i in 0..config.stages {
        let alpha = (i + 1) * config.block;
        let (y, w) = match config.schedule.get(i) {
            Some(&pair) => pair,
            None => seeded_pair(&mut rng, &b, alpha),
        };
        b.build_stage(alpha, y, w)?;
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum GridViolation {
    NotInjective { zeta: usize, xi: usize, other: usize },
    LevelBound { lo: GridElem, hi: GridElem },
    PredecessorMismatch { elem: GridElem },
    ConeMismatch { alpha: usize, elem: GridElem },
    KMismatch { alpha: usize, recorded: usize, recomputed: usize },
}

/// Re-derives the invariants from the closed poset rather than the stored cones.
pub fn verify_build(b: &GridBuild) -> Vec<GridViolation> {
    let mut out = Vec::new();
    let fp = b.poset();
    let e = &b.elems;
    if let Some((zeta, xi, other)) = b.coloring.injectivity_failure(b.next_limit() + 1) {
        out.push(GridViolation::NotInjective { zeta, xi, other });
    }
    for lo in 0..fp.len() {
        for hi in fp.up_set(lo).filter(|&h| h != lo) {
            let ok = e[lo].alpha < e[hi].alpha && e[lo].n.max(b.coloring.get(e[lo].alpha, e[hi].alpha)) < e[hi].n;
            if !ok {
                out.push(GridViolation::LevelBound { lo: e[lo], hi: e[hi] });
            }
        }
    }
    // Backward scan: walk down through covers only.
    let covers = fp.covers();
    for a in 0..fp.len() {
        let mut seen = BTreeSet::new();
        let mut stack = vec![a];
        while let Some(x) = stack.pop() {
            for &(lo, hi) in &covers {
                if hi == x && seen.insert(lo) {
                    stack.push(lo);
                }
            }
        }
        let forward: BTreeSet<Elem> = fp.down_set(a).filter(|&d| d != a).collect();
        if seen != forward || forward != b.below[a] {
            out.push(GridViolation::PredecessorMismatch { elem: e[a] });
        }
    }
    for s in &b.stages {
        let t = b.index[&s.t];
        let (y, w) = (b.index[&s.y], b.index[&s.w]);
        for x in 0..fp.len() {
            if fp.lt(x, t) != (fp.le(x, y) || fp.le(x, w)) {
                out.push(GridViolation::ConeMismatch { alpha: s.alpha, elem: e[x] });
            }
        }
        let recomputed = (0..fp.len())
            .filter(|&x| fp.le(x, y) || fp.le(x, w))
            .map(|x| b.coloring.get(e[x].alpha, s.alpha))
            .chain([s.y.n, s.w.n])
            .max()
            .unwrap_or(0)
            + 1;
        if recomputed != s.t.n {
            out.push(GridViolation::KMismatch { alpha: s.alpha, recorded: s.t.n, recomputed });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Branch {
    pub stem: Vec<GridElem>,
    pub maximal: bool,
}

impl Branch {
    pub fn new(stem: Vec<GridElem>) -> Self {
        Branch { stem, maximal: false }
    }
}

fn lower_covers(b: &GridBuild, x: Elem) -> Vec<Elem> {
    b.below[x].iter().copied().filter(|&c| !b.below[x].iter().any(|&m| b.lt(c, m))).collect()
}

fn upper_covers(b: &GridBuild, x: Elem) -> Vec<Elem> {
    let above: Vec<Elem> = (0..b.len()).filter(|&u| b.lt(x, u)).collect();
    above.iter().copied().filter(|&u| !above.iter().any(|&m| b.lt(m, u))).collect()
}

/// Starts at a minimal element and moves by covers.
pub fn is_maximal_chain(b: &GridBuild, stem: &[GridElem]) -> bool {
    let Some(idx) = stem.iter().map(|&e| b.index_of(e)).collect::<Option<Vec<_>>>() else { return false };
    !idx.is_empty()
        && b.below[idx[0]].is_empty()
        && idx.windows(2).all(|w| lower_covers(b, w[1]).contains(&w[0]))
}

/// The longest cover path from `q` avoiding the up-set of `p`, first in index order.
pub fn branch_separation_witness(b: &GridBuild, p: GridElem, q: GridElem) -> Result<Branch, GridError> {
    let pi = b.index_of(p).ok_or(GridError::UnknownElem(p))?;
    let qi = b.index_of(q).ok_or(GridError::UnknownElem(q))?;
    if b.le(pi, qi) {
        return Err(GridError::Comparable { p, q });
    }
    let ups = upper_covers(b, qi);
    if ups.is_empty() {
        return Err(GridError::MaximalInWindow(q));
    }
    fn longest(b: &GridBuild, x: Elem, avoid: Elem, memo: &mut BTreeMap<Elem, Vec<Elem>>) -> Vec<Elem> {
        if let Some(v) = memo.get(&x) {
            return v.clone();
        }
        let mut best: Vec<Elem> = Vec::new();
        for u in upper_covers(b, x) {
            if b.le(avoid, u) {
                continue;
            }
            let tail = longest(b, u, avoid, memo);
            if tail.len() > best.len() {
                best = tail;
            }
        }
        best.insert(0, x);
        memo.insert(x, best.clone());
        best
    }
    let path = longest(b, qi, pi, &mut BTreeMap::new());
    if path.len() < 2 {
        if b.graft_leaves().contains(&q) {
            return Err(GridError::GraftEdge(q));
        }
        return Err(GridError::NoSeparation { p, q });
    }
    Ok(Branch { stem: path.into_iter().map(|i| b.elems[i]).collect(), maximal: false })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaximalExtension {
    pub branch: Branch,
    /// Position of the original first element in the extension.
    pub n0: usize,
}

/// Prepends a cover path down to a minimal element and refines every gap of
/// the stem into covers.
pub fn extend_to_maximal_chain(b: &GridBuild, y: &Branch) -> Result<MaximalExtension, GridError> {
    let idx: Vec<Elem> = y
        .stem
        .iter()
        .map(|&e| b.index_of(e).ok_or(GridError::UnknownElem(e)))
        .collect::<Result<_, _>>()?;
    if idx.is_empty() || idx.windows(2).any(|w| !b.lt(w[0], w[1])) {
        return Err(GridError::NotABranch);
    }
    let mut prefix = Vec::new();
    let mut cur = idx[0];
    while let Some(&down) = lower_covers(b, cur).first() {
        prefix.push(down);
        cur = down;
    }
    prefix.reverse();
    let n0 = prefix.len();
    let mut out = prefix;
    out.push(idx[0]);
    for w in idx.windows(2) {
        let mut cur = w[0];
        while cur != w[1] {
            cur = upper_covers(b, cur)
                .into_iter()
                .find(|&u| b.le(u, w[1]))
                .expect("some cover lies in a non-trivial interval");
            out.push(cur);
        }
    }
    let stem: Vec<GridElem> = out.iter().map(|&i| b.elems[i]).collect();
    let ext = MaximalExtension { branch: Branch { maximal: is_maximal_chain(b, &stem), stem }, n0 };
    debug_assert!(tail_contained(b, y, &ext));
    Ok(ext)
}

/// `[ext(n0), ext(n)]` for `n >= n0` lies in the union of `[y(0), y(n)]`.
pub fn tail_contained(b: &GridBuild, y: &Branch, ext: &MaximalExtension) -> bool {
    let yi: Vec<Elem> = y.stem.iter().map(|&e| b.index[&e]).collect();
    let ei: Vec<Elem> = ext.branch.stem.iter().map(|&e| b.index[&e]).collect();
    let in_union = |r: Elem| yi.iter().any(|&top| b.le(yi[0], r) && b.le(r, top));
    ei[ext.n0..].iter().all(|&top| (0..b.len()).filter(|&r| b.le(ei[ext.n0], r) && b.le(r, top)).all(in_union))
}

/// Every cover path from a minimal element to a maximal one, up to `cap` paths.
pub fn window_branches(b: &GridBuild, cap: usize) -> Option<Vec<Vec<Elem>>> {
    let ups: Vec<Vec<Elem>> = (0..b.len()).map(|x| upper_covers(b, x)).collect();
    let mut out = Vec::new();
    let mut stack: Vec<Vec<Elem>> = (0..b.len()).filter(|&x| b.below[x].is_empty()).map(|x| vec![x]).collect();
    while let Some(path) = stack.pop() {
        let last = *path.last().expect("paths are non-empty");
        if ups[last].is_empty() {
            out.push(path);
            if out.len() > cap {
                return None;
            }
            continue;
        }
        for &u in ups[last].iter().rev() {
            let mut next = path.clone();
            next.push(u);
            stack.push(next);
        }
    }
    Some(out)
}

/// Indices of the branches passing above `p`.
pub fn branch_set(b: &GridBuild, branches: &[Vec<Elem>], p: Elem) -> BTreeSet<usize> {
    (0..branches.len()).filter(|&i| branches[i].iter().any(|&x| b.le(p, x))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Quadruple {
    pub alpha: usize,
    pub x: GridElem,
    pub y: GridElem,
    pub z: GridElem,
    pub w: GridElem,
    /// Whether `y <= z`; false when `y` sits at the window edge.
    pub chained: bool,
}

impl Quadruple {
    fn columns(&self) -> Vec<usize> {
        let cols: BTreeSet<usize> = [self.x, self.y, self.z, self.w].iter().map(|e| e.alpha).collect();
        cols.into_iter().collect()
    }

    fn top_level(&self) -> usize {
        [self.x, self.y, self.z, self.w].iter().map(|e| e.n).max().expect("four elements")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameWitness {
    pub low: usize,
    pub high: usize,
    pub bound: usize,
    /// All cross values of the coloring between the two quadruples exceed `bound`.
    pub unbound: bool,
    pub gamma: usize,
    pub t: GridElem,
    pub low_identity: bool,
    pub high_identity: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameReport {
    pub cofinal: bool,
    pub quadruples: Vec<Quadruple>,
    /// Blocks whose private part starts no quadruple.
    pub degenerate: Vec<usize>,
    pub witnesses: Vec<GameWitness>,
}

/// Builds a quadruple in each block's private part with `[x,y]` 0-maximal and
/// `[z,w]` 1-maximal, chained `x <= y <= z <= w` when the window allows, then for each pair of blocks
/// whose quadruples sit in increasing columns with `x_low` not below `w_high`
/// schedules `(y_low, w_high)` as a new stage and
/// checks that its t only adds itself to both intervals.
pub fn quadruple_game(b: &GridBuild, colors: &[u8]) -> Result<GameReport, GridError> {
    if colors.len() != b.len() {
        return Err(GridError::ColoringSize(colors.len(), b.len()));
    }
    let fp = b.poset();
    let n = fp.len();
    let cofinal = (0..n).all(|x| (0..2).all(|c| fp.up_set(x).any(|u| colors[u] == c)));
    let mut quadruples = Vec::new();
    let mut degenerate = Vec::new();
    for (alpha, part) in b.blocks() {
        let private: BTreeSet<Elem> = part.iter().map(|e| b.index[e]).collect();
        let tops = |s: Elem| i_maximal_tops(&fp, colors, s, n).unwrap_or_default();
        let prefer_open = |ts: Vec<Elem>| ts.iter().copied().find(|&h| !fp.is_maximal(h)).or(ts.first().copied());
        let quad = |x: Elem, y: Elem, z: Elem| {
            let w = prefer_open(tops(z))?;
            Some(Quadruple { alpha, x: b.elems[x], y: b.elems[y], z: b.elems[z], w: b.elems[w], chained: fp.le(y, z) })
        };
        let lows: Vec<(Elem, Elem)> = private
            .iter()
            .filter(|&&x| colors[x] == 0)
            .filter_map(|&x| Some((x, prefer_open(tops(x))?)))
            .collect();
        // A window-maximal y leaves no room above it; z then comes from the same private part.
        let chained = lows.iter().find_map(|&(x, y)| fp.up_set(y).filter(|&z| colors[z] == 1).find_map(|z| quad(x, y, z)));
        let found = chained.or_else(|| {
            lows.iter().find_map(|&(x, y)| private.iter().filter(|&&z| colors[z] == 1).find_map(|&z| quad(x, y, z)))
        });
        match found {
            Some(q) => quadruples.push(q),
            None => degenerate.push(alpha),
        }
    }
    let mut witnesses = Vec::new();
    for i in 0..quadruples.len() {
        for j in i + 1..quadruples.len() {
            let (lo, hi) = (&quadruples[i], &quadruples[j]);
            if lo.columns().last() >= hi.columns().first() || b.le(b.index[&lo.x], b.index[&hi.w]) {
                continue;
            }
            let bound = lo.top_level().max(hi.top_level());
            let unbound = cross_exceeds(&b.coloring, &lo.columns(), &hi.columns(), bound);
            let mut ext = b.clone();
            let gamma = ext.next_limit();
            let t = ext.build_stage(gamma, lo.y, hi.w)?.t;
            let interval = |from: GridElem, to: GridElem| -> BTreeSet<GridElem> {
                let (f, t) = (ext.index[&from], ext.index[&to]);
                (0..ext.len()).filter(|&r| ext.le(f, r) && ext.le(r, t)).map(|r| ext.elems[r]).collect()
            };
            let with_t = |mut s: BTreeSet<GridElem>| {
                s.insert(t);
                s
            };
            witnesses.push(GameWitness {
                low: lo.alpha,
                high: hi.alpha,
                bound,
                unbound,
                gamma,
                t,
                low_identity: interval(lo.x, t) == with_t(interval(lo.x, lo.y)),
                high_identity: interval(hi.z, t) == with_t(interval(hi.z, hi.w)),
            });
        }
    }
    Ok(GameReport { cofinal, quadruples, degenerate, witnesses })
}
