//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. `cargo test --test acceptance -- C6`
//! runs a single criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resolvix::family::{
    builtin_family, extend_fill, fills, find_local_pair, local_pairs, parse_family, resolve_finite_union_closed,
    resolve_good_pair_greedy, staged_filler, NamedSet, SetFamily, Sub,
};
use resolvix::forcing::{
    amalgamate_r, extend_add_point, extend_define_f, extend_define_g, extend_uplus, generic_run, leq, map_columns,
    oplus, parse_condition, parse_fragment, parse_schedule, twin_schedule, validate, write_schedule, Condition,
    LIMIT_STEP,
};
use resolvix::grid::{verify_build, ColoringKind, GridBuild, GridConfig, GridElem};
use resolvix::order::{antichain_hitter, parse_poset, posets_up_to_iso, rank_with, stone_partition, Elem};
use resolvix::partition::parse_partition;
use resolvix::sample::{random_condition, random_family, random_poset};
use resolvix::space::{irresolvability_game, kolmogorov_quotient, level_partition, Contradiction};
use resolvix::{FinitePoset, Order};

type Check = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.1?}, limit {limit:?}"))
}

// ---------------------------------------------------------------- families

fn random_fam(seed: u64) -> SetFamily {
    let mut r = rng(seed);
    let ground = r.gen_range(2..=8);
    let members = r.gen_range(1..=12);
    random_family(&mut r, ground, members)
}

fn strictly_inside(t: u128, outer: u128) -> bool {
    t != outer && t & !outer == 0
}

/// Members of `a` strictly inside `u` jointly cover `u`'s window demand.
fn oracle_fills_one(f: &SetFamily, a: &[usize], u: usize) -> bool {
    let m = f.member(u);
    if m.frontier {
        return true;
    }
    let cover = a.iter().map(|&v| f.member(v).trace).filter(|&t| strictly_inside(t, m.trace)).fold(0, |x, t| x | t);
    m.trace & f.window() & !cover == 0
}

fn oracle_fills(f: &SetFamily, a: &[usize], b: &[usize]) -> bool {
    b.iter().all(|&u| oracle_fills_one(f, a, u))
}

fn oracle_good(f: &SetFamily, l: &[usize], r: &[usize]) -> bool {
    l.iter().all(|x| !r.contains(x)) && oracle_fills(f, l, r) && oracle_fills(f, r, l)
}

/// Fills the union of `b` as a single target: demand is the union of demands.
fn oracle_fills_union(f: &SetFamily, a: &[usize], b: &[usize]) -> bool {
    let trace = b.iter().fold(0, |t, &i| t | f.member(i).trace);
    let need = b.iter().filter(|&&i| !f.member(i).frontier).fold(0, |t, &i| t | f.member(i).trace) & f.window();
    let cover = a.iter().map(|&v| f.member(v).trace).filter(|&t| strictly_inside(t, trace)).fold(0, |x, t| x | t);
    need & !cover == 0
}

fn exhaustive_resolvable(f: &SetFamily) -> bool {
    let n = f.len();
    let all: Vec<usize> = (0..n).collect();
    (0u32..1 << n).any(|mask| {
        let l: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
        let r: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 0).collect();
        oracle_fills(f, &l, &all) && oracle_fills(f, &r, &all)
    })
}

fn vec_of(s: &Sub) -> Vec<usize> {
    s.iter().copied().collect()
}

fn c1() -> Check {
    let start = Instant::now();
    let (mut fill_checks, mut resolvable) = (0usize, 0usize);
    for seed in 0..500u64 {
        let f = random_fam(seed);
        let all: Vec<usize> = (0..f.len()).collect();
        let mut r = rng(seed ^ 0xf111);
        let mut masks = vec![0u32, 0x555, 0xaaa, 0xfff];
        masks.extend((0..4).map(|_| r.gen_range(0..4096u32)));
        for mask in masks {
            let a: Sub = all.iter().copied().filter(|k| mask >> k & 1 == 1).collect();
            let av = vec_of(&a);
            for &u in &all {
                let got = fills(&f, &a, &[u].into()).is_ok();
                ensure(got == oracle_fills_one(&f, &av, u), || format!("seed {seed} mask {mask:#x}: fills on member {u} is {got}"))?;
                fill_checks += 1;
            }
            ensure(fills(&f, &a, &f.all()).is_ok() == oracle_fills(&f, &av, &all), || {
                format!("seed {seed} mask {mask:#x}: fills on the whole family")
            })?;
        }
        let b = f.all();
        let greedy = local_pairs(&f, &b).and_then(|lp| resolve_good_pair_greedy(&f, &b, &lp));
        let oracle = exhaustive_resolvable(&f);
        ensure(greedy.is_ok() == oracle, || format!("seed {seed}: greedy {} vs exhaustive {oracle}", greedy.is_ok()))?;
        if let Ok(g) = greedy {
            let (l, rr) = (vec_of(&g.left), vec_of(&g.right));
            ensure(l.len() + rr.len() == f.len() && oracle_good(&f, &l, &rr), || format!("seed {seed}: greedy output is not a good pair"))?;
            resolvable += 1;
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("500 families, {fill_checks} fills checks, {resolvable} resolvable, 0 disagreements"))
}

fn c2() -> Check {
    let mut scenarios = 0usize;
    let mut seed = 0u64;
    while scenarios < 200 {
        ensure(seed < 5000, || format!("only {scenarios} scenarios from 5000 families"))?;
        let f = random_fam(seed);
        let b = f.all();
        let pairs: Vec<_> = b.iter().filter_map(|&u| find_local_pair(&f, &b, u)).collect();
        for (i, p) in pairs.iter().enumerate() {
            for q in pairs.iter().skip(i + 1) {
                if scenarios == 200 {
                    break;
                }
                let (a, bb, a2, b2) = (vec_of(&p.left), vec_of(&p.right), vec_of(&q.left), vec_of(&q.right));
                ensure(oracle_good(&f, &a, &bb) && oracle_good(&f, &a2, &b2), || format!("seed {seed}: local pair is not good"))?;
                let conflict = a2.iter().filter(|x| bb.contains(x)).chain(b2.iter().filter(|x| a.contains(x))).any(|&x| f.member(x).frontier);
                if conflict {
                    continue;
                }
                scenarios += 1;
                let ext = extend_fill(&f, (&p.left, &p.right), (&q.left, &q.right)).map_err(|e| format!("seed {seed}: {e}"))?;
                let left: BTreeSet<usize> = a.iter().chain(a2.iter().filter(|x| !bb.contains(x))).copied().collect();
                let right: BTreeSet<usize> = bb.iter().chain(b2.iter().filter(|x| !a.contains(x))).copied().collect();
                ensure(ext.pair.left == left && ext.pair.right == right, || format!("seed {seed}: sides differ from A∪(A'∖B), B∪(B'∖A)"))?;
                let (l, r) = (vec_of(&left), vec_of(&right));
                ensure(oracle_good(&f, &l, &r), || format!("seed {seed}: extension is not a good pair"))?;
                ensure(oracle_fills_union(&f, &l, &b2) && oracle_fills_union(&f, &r, &a2), || {
                    format!("seed {seed}: extension does not fill the second pair's unions")
                })?;
            }
        }
        seed += 1;
    }
    Ok(format!("{scenarios} pair extensions re-certified over {seed} families"))
}

// ---------------------------------------------------------------- orders

fn c3() -> Check {
    let start = Instant::now();
    let mut notes = Vec::new();
    for name in ["chain", "tree2", "grid"] {
        let p = resolvix::order::builtin(name).map_err(|e| e.to_string())?;
        let part = stone_partition(p.as_ref(), 1000, 7).map_err(|e| format!("{name}: {e}"))?;
        ensure(part.processed == 1000, || format!("{name}: processed {}", part.processed))?;
        let window = part.colors.keys().max().map_or(0, |m| m + 1);
        for e in 0..part.processed {
            let mut seen = [false; 2];
            for (&q, &c) in &part.colors {
                if q < window && p.le(e, q) {
                    seen[c as usize] = true;
                }
            }
            ensure(seen[0] && seen[1], || format!("{name}: element {e} lacks a color above it"))?;
        }
        notes.push(format!("{name} window {window}"));
    }
    within(start, Duration::from_secs(5))?;
    Ok(notes.join(", "))
}

/// Longest chain length from `base` up to each element above it.
fn oracle_ranks(p: &FinitePoset, base: Elem) -> BTreeMap<Elem, usize> {
    let n = p.len();
    let mut up: Vec<Elem> = (0..n).filter(|&q| p.le(base, q)).collect();
    up.sort_by_key(|&q| (0..n).filter(|&s| p.le(s, q)).count());
    let mut rank = BTreeMap::new();
    for &q in &up {
        let r = up.iter().filter(|&&s| s != q && p.le(s, q)).map(|s| rank[s] + 1).max().unwrap_or(0);
        rank.insert(q, r);
    }
    rank
}

/// Every chain `base = c0 < c1 < ... < ck`.
fn chains_from(p: &FinitePoset, base: Elem) -> Vec<Vec<Elem>> {
    fn go(p: &FinitePoset, cur: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
        out.push(cur.clone());
        let last = *cur.last().unwrap();
        for next in 0..p.len() {
            if p.lt(last, next) {
                cur.push(next);
                go(p, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(p, &mut vec![base], &mut out);
    out
}

fn check_hitter(p: &FinitePoset, base: Elem, avoid: &BTreeSet<Elem>, chains: &[Vec<Elem>], what: &str) -> Result<(), String> {
    let n = p.len();
    let h = antichain_hitter(p, base, avoid, n, n).map_err(|e| format!("{what}: {e}"))?;
    let ranks = oracle_ranks(p, base);
    let lib = rank_with(p, base, n, n).map_err(|e| format!("{what}: {e}"))?;
    ensure(lib.ranks == ranks, || format!("{what}: ranks differ"))?;
    let targets: Vec<Elem> = ranks.keys().copied().filter(|q| !avoid.contains(q)).collect();
    ensure(h.targets == targets, || format!("{what}: targets differ"))?;
    let expected: BTreeSet<Elem> = targets
        .iter()
        .map(|&q| *ranks.keys().filter(|&&r| p.le(r, q) && !avoid.contains(&r)).min_by_key(|&&r| (ranks[&r], r)).unwrap())
        .collect();
    let got: BTreeSet<Elem> = h.hitter.iter().copied().collect();
    ensure(got == expected, || format!("{what}: hitter {got:?}, expected {expected:?}"))?;
    ensure(got.iter().all(|&x| got.iter().all(|&y| !p.lt(x, y))), || format!("{what}: hitter {got:?} is not an antichain"))?;
    ensure(got.is_disjoint(avoid), || format!("{what}: hitter meets the avoided set"))?;
    for c in chains {
        if c.iter().any(|q| targets.contains(q)) {
            let top = *c.last().unwrap();
            ensure(got.iter().any(|&x| p.le(base, x) && p.le(x, top)), || format!("{what}: chain {c:?} missed"))?;
        }
    }
    Ok(())
}

fn c6() -> Check {
    let start = Instant::now();
    let (mut posets, mut cases) = (0usize, 0usize);
    for n in 1..=7usize {
        for (i, p) in posets_up_to_iso(n).iter().enumerate() {
            posets += 1;
            for base in 0..n {
                let up: Vec<Elem> = (0..n).filter(|&q| p.le(base, q)).collect();
                let chains = chains_from(p, base);
                let avoids: Vec<BTreeSet<Elem>> = if n <= 5 {
                    (0u32..1 << up.len()).map(|m| (0..up.len()).filter(|k| m >> k & 1 == 1).map(|k| up[k]).collect()).collect()
                } else {
                    let mut r = rng((n as u64) << 32 | (i as u64) << 8 | base as u64);
                    (0..8).map(|_| up.iter().copied().filter(|_| r.gen_bool(0.5)).collect()).collect()
                };
                for a in &avoids {
                    check_hitter(p, base, a, &chains, &format!("n={n} poset {i} base {base} A={a:?}"))?;
                    cases += 1;
                }
            }
        }
    }
    // Sampled beyond the exhaustive range.
    for seed in 0..200u64 {
        let mut r = rng(seed);
        let n = r.gen_range(8..=10);
        let p = random_poset(&mut r, n, 0.4);
        let base = r.gen_range(0..n);
        let chains = chains_from(&p, base);
        for _ in 0..4 {
            let a: BTreeSet<Elem> = (0..n).filter(|&q| p.le(base, q) && r.gen_bool(0.5)).collect();
            check_hitter(&p, base, &a, &chains, &format!("sample {seed} A={a:?}"))?;
            cases += 1;
        }
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("{posets} posets up to iso (n ≤ 7) plus 200 sampled, {cases} avoided sets"))
}

// ---------------------------------------------------------------- grid

/// The order rebuilt from the stage records alone: each `t` sits above the
/// cones of its pair, and each graft is a binary tree stored level by level.
fn rebuilt_below(b: &GridBuild) -> BTreeMap<GridElem, BTreeSet<GridElem>> {
    fn graft(below: &mut BTreeMap<GridElem, BTreeSet<GridElem>>, root: GridElem, added: &[GridElem], depth: usize) {
        let (mut frontier, mut next_ix) = (vec![root], 0);
        for _ in 0..depth {
            let mut next = Vec::new();
            for parent in frontier {
                for _ in 0..2 {
                    let child = added[next_ix];
                    next_ix += 1;
                    let mut cone = below[&parent].clone();
                    cone.insert(parent);
                    below.insert(child, cone);
                    next.push(child);
                }
            }
            frontier = next;
        }
    }
    let depth = b.config.graft;
    let root = GridElem::new(0, 0);
    let mut below = BTreeMap::from([(root, BTreeSet::new())]);
    graft(&mut below, root, &b.base[1..], depth);
    for s in &b.stages {
        let mut cone: BTreeSet<GridElem> = [s.y, s.w].into();
        cone.extend(below[&s.y].iter().copied());
        cone.extend(below[&s.w].iter().copied());
        below.insert(s.t, cone);
        graft(&mut below, s.t, &s.graft, depth);
    }
    below
}

fn check_grid(b: &GridBuild, what: &str) -> Result<(), String> {
    let below = rebuilt_below(b);
    ensure(below.len() == b.len(), || format!("{what}: {} rebuilt vs {} built", below.len(), b.len()))?;
    for (i, &e) in b.elems().iter().enumerate() {
        let preds: BTreeSet<GridElem> = b.predecessors(i).iter().map(|&j| b.elems()[j]).collect();
        ensure(below.get(&e) == Some(&preds), || format!("{what}: predecessors of {e}"))?;
    }
    let c = |xi: usize, zeta: usize| b.coloring.get(xi, zeta);
    for (hi, lows) in &below {
        for lo in lows {
            ensure(lo.alpha < hi.alpha && lo.n.max(c(lo.alpha, hi.alpha)) < hi.n, || format!("{what}: level bound {lo} < {hi}"))?;
        }
    }
    for s in &b.stages {
        let cone: BTreeSet<GridElem> =
            below.keys().copied().filter(|x| *x == s.y || *x == s.w || below[&s.y].contains(x) || below[&s.w].contains(x)).collect();
        ensure(below[&s.t] == cone, || format!("{what}: cone of t at {}", s.alpha))?;
        let columns: BTreeSet<usize> = cone.iter().map(|x| x.alpha).collect();
        let k = columns.iter().map(|&nu| c(nu, s.alpha)).chain([s.y.n, s.w.n]).max().unwrap() + 1;
        ensure(s.k == k && s.t == GridElem::new(s.alpha, k), || format!("{what}: k at {} is {} vs {k}", s.alpha, s.k))?;
        ensure(s.gamma == columns.iter().copied().collect::<Vec<_>>(), || format!("{what}: columns at {}", s.alpha))?;
    }
    let v = verify_build(b);
    ensure(v.is_empty(), || format!("{what}: {v:?}"))
}

fn c7() -> Check {
    let mut stages = 0;
    for seed in 0..100u64 {
        let coloring = if seed % 2 == 1 { ColoringKind::Seeded } else { ColoringKind::Identity };
        let cfg = GridConfig { stages: 6, seed, coloring, ..GridConfig::default() };
        let mut b = GridBuild::new(&cfg).map_err(|e| e.to_string())?;
        check_grid(&b, &format!("seed {seed} base"))?;
        let mut r = rng(seed ^ 0x9e1d);
        for s in 1..=cfg.stages {
            let alpha = s * cfg.block;
            let pool: Vec<GridElem> = b.elems().iter().copied().filter(|e| e.alpha < alpha).collect();
            let y = *pool.choose(&mut r).unwrap();
            let w = *pool.choose(&mut r).unwrap();
            b.build_stage(alpha, y, w).map_err(|e| format!("seed {seed} stage {s}: {e}"))?;
            check_grid(&b, &format!("seed {seed} stage {s}"))?;
            stages += 1;
        }
    }
    Ok(format!("100 runs, {stages} stages checked after each build"))
}

// ---------------------------------------------------------------- forcing

fn below_ok(r: &Condition, p: &Condition) -> bool {
    validate(r).is_empty() && leq(r, p).is_empty()
}

fn c8() -> Check {
    let mut counts = [0usize; 5];
    let names = ["add-point", "uplus", "define-f", "define-g", "oplus"];
    let mut seed = 0u64;
    while counts.iter().any(|&c| c < 200) {
        ensure(seed < 3000, || format!("scenario counts {counts:?} after 3000 seeds"))?;
        let mut r = rng(seed);
        let p = random_condition(&mut r, 8, 24);
        ensure(validate(&p).is_empty(), || format!("seed {seed}: sampled condition invalid"))?;
        let fail = |k: usize| format!("seed {seed}: {} output fails validate or leq", names[k]);

        let gamma = LIMIT_STEP * r.gen_range(1..=6);
        let y = GridElem::new(r.gen_range(0..gamma), r.gen_range(0..6));
        if !p.points.contains(&y) {
            let out = extend_add_point(&p, y, gamma).map_err(|e| format!("seed {seed}: {e}"))?;
            ensure(below_ok(&out, &p), || fail(0))?;
            counts[0] += 1;
        }

        let tree_elems: Vec<(usize, GridElem)> = p.trees.iter().flat_map(|(&a, t)| t.iter().map(move |&x| (a, x))).collect();
        if let Some(&(a, x)) = tree_elems.choose(&mut r) {
            let free: Vec<GridElem> = (x.alpha + 1..a)
                .flat_map(|c| (x.n + 1..x.n + 3).map(move |n| GridElem::new(c, n)))
                .filter(|b| !p.points.contains(b))
                .collect();
            if let Some(&b) = free.choose(&mut r) {
                let out = extend_uplus(&p, x, b, a).map_err(|e| format!("seed {seed}: {e}"))?;
                ensure(below_ok(&out, &p), || fail(1))?;
                counts[1] += 1;
            }
        }

        let idx: Vec<usize> = p.indices.iter().copied().collect();
        let open: Vec<(usize, usize)> =
            idx.iter().flat_map(|&a| idx.iter().map(move |&b| (a, b))).filter(|&(a, b)| a < b && p.get_f(a, b).is_none()).collect();
        if let Some(&(a, b)) = open.choose(&mut r) {
            let out = extend_define_f(&p, a, b).map_err(|e| format!("seed {seed}: {e}"))?;
            ensure(below_ok(&out, &p), || fail(2))?;
            counts[2] += 1;
        }

        let pts: Vec<GridElem> = p.points.iter().copied().collect();
        if let (Some(&x), Some(&a)) = (pts.choose(&mut r), idx.choose(&mut r)) {
            if !p.g.contains_key(&(x, a)) {
                let out = extend_define_g(&p, x, a).map_err(|e| format!("seed {seed}: {e}"))?;
                ensure(below_ok(&out, &p), || fail(3))?;
                counts[3] += 1;
            }
        }

        if !p.is_empty() {
            let top = *p.support().last().unwrap();
            let d = (top / LIMIT_STEP + 1 + r.gen_range(0..3)) * LIMIT_STEP;
            let q = map_columns(&p, &p.support().into_iter().map(|a| (a, a + d)).collect());
            let out = oplus(&p, &q).map_err(|e| format!("seed {seed}: {e}"))?;
            ensure(below_ok(&out, &p) && below_ok(&out, &q), || fail(4))?;
            counts[4] += 1;
        }
        seed += 1;
    }

    let interval = |c: &Condition, lo: GridElem, hi: GridElem| -> BTreeSet<GridElem> {
        c.points.iter().copied().filter(|&z| c.le(lo, z) && c.le(z, hi)).collect()
    };
    for seed in 0..200u64 {
        let run = generic_run(&twin_schedule(seed), 64, seed).map_err(|e| format!("run {seed}: {e}"))?;
        let w = run.log.witnesses.first().ok_or_else(|| format!("run {seed}: no amalgamation"))?;
        let before = &run.log.entries[w.entry - 1].condition;
        let a = amalgamate_r(before, w.low, &w.twin, w.high, w.t).map_err(|e| format!("run {seed}: {e}"))?;
        ensure(below_ok(&a.r, before) && below_ok(&a.r, &w.twin), || format!("run {seed}: r fails validate or leq"))?;
        let [x, y, _, _] = w.low.quad;
        let [_, _, z, wq] = w.high.quad;
        let mut lo = interval(&a.r, x, y);
        lo.insert(w.t);
        let mut hi = interval(&a.r, z, wq);
        hi.insert(w.t);
        ensure(interval(&a.r, x, w.t) == lo, || format!("run {seed}: [x,t] ≠ [x,y]∪{{t}}"))?;
        ensure(interval(&a.r, z, w.t) == hi, || format!("run {seed}: [z,t] ≠ [z,w]∪{{t}}"))?;
    }
    Ok(format!("one-step scenarios {counts:?} over {seed} seeds, 200 amalgamations with both identities"))
}

fn c9() -> Check {
    for seed in 0..50u64 {
        let run = generic_run(&twin_schedule(seed), 64, seed).map_err(|e| format!("run {seed}: {e}"))?;
        let part = level_partition(&run.fragment);
        let report = irresolvability_game(&run.fragment, &part).map_err(|e| format!("run {seed}: {e}"))?;
        let w = report.witness.ok_or_else(|| format!("run {seed}: no witness"))?;
        ensure(w.refuted, || format!("run {seed}: witness not refuted"))?;
        let amalgamated = run.log.witnesses.first().map(|a| a.t);
        ensure(amalgamated == Some(w.t), || format!("run {seed}: t = {} but the run amalgamated at {amalgamated:?}", w.t))?;
        let c = &run.fragment.condition;
        ensure(c.tree(w.low.alpha).contains(&w.t) && c.tree(w.high.alpha).contains(&w.t), || format!("run {seed}: t outside a tree"))?;
        let color = |e: GridElem| part.color(&e.to_string()).unwrap_or(0);
        let mono = |lo: GridElem, k: u8| c.points.iter().filter(|&&z| c.le(lo, z) && c.le(z, w.t)).all(|&z| color(z) == k);
        let holds = match w.contradiction {
            Contradiction::LowNotMaximal => color(w.t) == 0 && c.lt(w.low.y, w.t) && mono(w.low.x, 0),
            Contradiction::HighNotMaximal => color(w.t) == 1 && c.lt(w.high.w, w.t) && mono(w.high.z, 1),
            Contradiction::LowSideEmpty => color(w.t) == 0 && c.lt(w.low.s, w.t),
            Contradiction::HighSideEmpty => color(w.t) == 1 && c.lt(w.high.y, w.t),
        };
        ensure(holds, || format!("run {seed}: {:?} at {} does not re-check", w.contradiction, w.t))?;
    }
    Ok("50 runs, contradiction witness t found and re-checked in each".into())
}

// ---------------------------------------------------------------- dyadic

/// Members of `a` strictly inside `target` cover `need` on the window.
fn covers_inside(f: &SetFamily, a: &Sub, target: usize, need: u128) -> bool {
    let cover = a.iter().filter(|&&v| f.proper_subset(v, target)).fold(0, |t, &v| t | f.member(v).trace);
    need & f.window() & !cover == 0
}

fn c4() -> Check {
    let f = builtin_family("dyadic").ok_or("no dyadic family")?;
    ensure(f.window().count_ones() == 16, || format!("window has {} points", f.window().count_ones()))?;
    let top = f.index_of("I0.0").map_err(|e| e.to_string())?;
    let out = staged_filler(&f, &f.all(), top, (Sub::new(), Sub::new()), 20_000, 4).map_err(|e| e.to_string())?;
    ensure(out.left.is_disjoint(&out.right), || "sides overlap".into())?;
    for (k, st) in out.stages.iter().enumerate() {
        for added in &st.added {
            let later_inside = added.iter().enumerate().any(|(j, &b)| added[..j].iter().any(|&a| f.subset(b, a)));
            ensure(!later_inside, || format!("stage {k}: additions not weakly increasing"))?;
        }
    }
    let need = f.demand(top);
    ensure(covers_inside(&f, &out.left, top, need) && covers_inside(&f, &out.right, top, need), || "a side misses the top set".into())?;
    Ok(format!("{} stages, sides of {} and {} members", out.stages.len(), out.left.len(), out.right.len()))
}

fn c5() -> Check {
    let f = builtin_family("dyadic-unions").ok_or("no dyadic-unions family")?;
    let u = f.index_of("U11111111").map_err(|e| e.to_string())?;
    let tails: Vec<usize> = (0..8)
        .map(|k| f.index_of(&format!("U{}{}", "0".repeat(k), "1".repeat(8 - k))))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let points: Vec<usize> = (0..7).collect();
    let res = resolve_finite_union_closed(&f, &f.all(), u, &tails, &points).map_err(|e| e.to_string())?;
    ensure(res.left.is_disjoint(&res.right), || "sides overlap".into())?;
    ensure(res.left.iter().chain(&res.right).all(|&v| f.subset(v, u)), || "a member lies outside U".into())?;
    let need = |v: usize| if res.deep.contains(&v) { 0 } else { f.demand(v) };
    for (a, b, side) in [(&res.left, &res.right, "left fills right"), (&res.right, &res.left, "right fills left")] {
        for &v in b {
            ensure(covers_inside(&f, a, v, need(v)), || format!("{side}: {} uncovered", f.name_of(v)))?;
        }
    }
    let u_points = f.point_labels(f.member(u).trace & f.window());
    for (side, labels) in [(&res.left, &res.left_union), (&res.right, &res.right_union)] {
        let union = side.iter().fold(0, |t, &v| t | f.member(v).trace) & f.window();
        ensure(f.point_labels(union) == u_points && *labels == u_points, || "a side's union differs from U".into())?;
    }
    Ok(format!("sides of {} and {} members, {} deep targets deferred", res.left.len(), res.right.len(), res.deep.len()))
}

// ---------------------------------------------------------------- quotient

const NAMES: [&str; 6] = ["m0", "m1", "m2", "m3", "m4", "m5"];

fn check_quotient(f: &SetFamily, traces: &[u128]) -> Result<(), String> {
    let q = kolmogorov_quotient(f).map_err(|e| format!("{traces:?}: {e}"))?;
    let n = f.ground().len();
    let sig = |k: usize| traces.iter().map(|t| t >> k & 1).collect::<Vec<_>>();
    for a in 0..n {
        for b in 0..n {
            ensure((q.point_map[a] == q.point_map[b]) == (sig(a) == sig(b)), || format!("{traces:?}: classes of {a},{b}"))?;
        }
    }
    let classes = (0..n).filter(|&a| (0..a).all(|b| sig(a) != sig(b))).count();
    ensure(q.classes.len() == classes, || format!("{traces:?}: {} classes, expected {classes}", q.classes.len()))?;
    let qt: Vec<u128> = q.family.members().iter().map(|m| m.trace).collect();
    ensure(qt.len() == traces.len(), || format!("{traces:?}: member count"))?;
    for (i, &t) in traces.iter().enumerate() {
        for k in 0..n {
            ensure((t >> k & 1) == (qt[i] >> q.point_map[k] & 1), || format!("{traces:?}: (1) fails at {k}"))?;
        }
        for (j, &s) in traces.iter().enumerate() {
            ensure((t == s) == (qt[i] == qt[j]), || format!("{traces:?}: (2) fails at {i},{j}"))?;
            ensure((t & !s == 0) == (qt[i] & !qt[j] == 0), || format!("{traces:?}: (3) fails at {i},{j}"))?;
        }
    }
    Ok(())
}

fn c10() -> Check {
    fn walk(n: usize, ground: &[String], from: u128, chosen: &mut Vec<u128>, count: &mut usize) -> Result<(), String> {
        let mut f = SetFamily::new("f", ground.to_vec());
        for (i, &t) in chosen.iter().enumerate() {
            f.push(NamedSet::points(NAMES[i], t).allow_empty()).map_err(|e| e.to_string())?;
        }
        check_quotient(&f, chosen)?;
        *count += 1;
        if chosen.len() == 6 {
            return Ok(());
        }
        for t in from..1u128 << n {
            chosen.push(t);
            walk(n, ground, t + 1, chosen, count)?;
            chosen.pop();
        }
        Ok(())
    }
    let start = Instant::now();
    let mut count = 0;
    for n in 1..=5usize {
        let ground: Vec<String> = (0..n).map(|k| format!("p{k}")).collect();
        walk(n, &ground, 0, &mut Vec::new(), &mut count)?;
    }
    Ok(format!("{count} families over 1..5 points checked in {:.1?}", start.elapsed()))
}

// ---------------------------------------------------------------- cli

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resolvix"))
        .current_dir(dir)
        .env_remove("RESOLVIX_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

const SMALL_FAMILY: &str = "\
family small
ground a b c d
set A: a b c d
set B: a b c d
set a1 frontier: a
set b1 frontier: b
set c1 frontier: c
set d1 frontier: d
set a2 frontier: a
set b2 frontier: b
set c2 frontier: c
set d2 frontier: d
";

fn c11() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let write = |name: &str, text: &str| std::fs::write(dir.join(name), text).map_err(|e| e.to_string());
    write("small.fam", SMALL_FAMILY)?;
    let p = random_condition(&mut rng(11), 8, 24);
    let d = (*p.support().last().unwrap() / LIMIT_STEP + 1) * LIMIT_STEP;
    let q = map_columns(&p, &p.support().into_iter().map(|a| (a, a + d)).collect());
    write("p.cond", &p.to_text())?;
    write("q.cond", &q.to_text())?;
    let fresh = (0..).map(|n| GridElem::new(1, n)).find(|y| !p.points.contains(y)).unwrap();
    let step = format!("add-point {fresh} {LIMIT_STEP}");
    write("twin.sched", &write_schedule(&twin_schedule(5)))?;

    let runs: Vec<Vec<&str>> = vec![
        vec!["--seed", "3", "stone", "--poset", "tree2", "--steps", "300", "--partition-out", "stone.part"],
        vec!["resolve", "--family", "small.fam", "--partition-out", "resolve.part"],
        vec!["negligible", "--family", "dyadic", "--target", "2"],
        vec!["finunion", "--family", "dyadic-unions", "--member", "U11111111"],
        vec!["--seed", "4", "cohen", "--family", "small.fam", "--partition-out", "cohen.part"],
        vec!["--seed", "2", "ik-check", "--poset", "chain", "--window", "24", "--k", "3"],
        vec!["--seed", "6", "build-grid", "--stages", "3", "--coloring", "seeded", "--poset-out", "grid.poset"],
        vec!["forcing", "validate", "--condition", "p.cond"],
        vec!["forcing", "oplus", "--p", "p.cond", "--q", "q.cond", "--condition-out", "oplus.cond"],
        vec!["forcing", "extend", "--condition", "p.cond", "--step", &step, "--condition-out", "ext.cond"],
        vec!["--seed", "7", "forcing", "run", "--schedule", "twin.sched", "--budget", "64", "--fragment-out", "run.frag"],
        vec!["--jobs", "2", "space", "check", "--fragment", "run.frag"],
        vec!["forcing", "leq", "--p", "oplus.cond", "--q", "p.cond"],
        vec!["quotient", "--family", "small.fam", "--family-out", "quot.fam"],
    ];
    let outputs = [
        "stone.part", "resolve.part", "cohen.part", "grid.poset", "oplus.cond", "ext.cond", "run.frag", "quot.fam",
    ];
    let mut verbs = BTreeSet::new();
    for args in &runs {
        let first = cli(dir, args);
        let files: Vec<Option<Vec<u8>>> = outputs.iter().map(|o| std::fs::read(dir.join(o)).ok()).collect();
        let second = cli(dir, args);
        let files2: Vec<Option<Vec<u8>>> = outputs.iter().map(|o| std::fs::read(dir.join(o)).ok()).collect();
        let shown = args.join(" ");
        ensure(first.status.code() == Some(0), || {
            format!("`{shown}` exited {:?}: {}", first.status.code(), String::from_utf8_lossy(&first.stderr))
        })?;
        ensure(first.stdout == second.stdout && first.status == second.status, || format!("`{shown}` differs between runs"))?;
        ensure(files == files2, || format!("`{shown}` wrote different files on the second run"))?;
        let report: serde_json::Value = serde_json::from_slice(&first.stdout).map_err(|e| format!("`{shown}`: {e}"))?;
        verbs.insert(report["verb"].as_str().unwrap_or_default().to_string());
    }
    ensure(verbs.len() == 14, || format!("only {} verbs covered: {verbs:?}", verbs.len()))?;

    let env_run = Command::new(env!("CARGO_BIN_EXE_resolvix"))
        .current_dir(dir)
        .env("RESOLVIX_SEED", "3")
        .args(["--seed", "99", "stone", "--poset", "tree2", "--steps", "300"])
        .output()
        .map_err(|e| e.to_string())?;
    let plain = cli(dir, &["--seed", "3", "stone", "--poset", "tree2", "--steps", "300"]);
    ensure(env_run.stdout == plain.stdout, || "RESOLVIX_SEED does not override --seed".into())?;

    let read = |name: &str| std::fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"));
    let same = |name: &str, back: String, text: &str| ensure(back == text, || format!("{name} does not round-trip"));
    for name in ["stone.part", "resolve.part", "cohen.part"] {
        let text = read(name)?;
        same(name, parse_partition(&text).map_err(|e| e.to_string())?.to_text(), &text)?;
    }
    let text = read("grid.poset")?;
    same("grid.poset", parse_poset(&text).map_err(|e| e.to_string())?.to_text(), &text)?;
    for name in ["oplus.cond", "ext.cond", "p.cond"] {
        let text = read(name)?;
        same(name, parse_condition(&text).map_err(|e| e.to_string())?.to_text(), &text)?;
    }
    let text = read("run.frag")?;
    same("run.frag", parse_fragment(&text).map_err(|e| e.to_string())?.to_text(), &text)?;
    for name in ["quot.fam", "small.fam"] {
        let text = read(name)?;
        same(name, parse_family(&text).map_err(|e| e.to_string())?.to_text(), &text)?;
    }
    for name in ["dyadic", "dyadic-unions"] {
        let text = builtin_family(name).unwrap().to_text();
        same(name, parse_family(&text).map_err(|e| e.to_string())?.to_text(), &text)?;
    }
    for seed in 0..50 {
        let text = write_schedule(&twin_schedule(seed));
        same("schedule", write_schedule(&parse_schedule(&text).map_err(|e| e.to_string())?), &text)?;
    }
    for seed in 0..50 {
        let mut r = rng(seed);
        let n = r.gen_range(1..=12);
        let text = random_poset(&mut r, n, 0.4).to_text();
        same("poset", parse_poset(&text).map_err(|e| e.to_string())?.to_text(), &text)?;
        let text = random_condition(&mut r, 10, 24).to_text();
        same("condition", parse_condition(&text).map_err(|e| e.to_string())?.to_text(), &text)?;
    }
    Ok(format!("{} invocations byte-stable over {} verbs, 6 formats round-trip", runs.len() * 2, verbs.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("C1", c1),
        ("C2", c2),
        ("C3", c3),
        ("C4", c4),
        ("C5", c5),
        ("C6", c6),
        ("C7", c7),
        ("C8", c8),
        ("C9", c9),
        ("C10", c10),
        ("C11", c11),
    ];
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| criteria.iter().any(|(id, _)| id == a)).collect();
    let mut failed = 0;
    for (id, run) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        match result {
            Ok(detail) => println!("PASS {id:<3} {detail} ({took:.1?})"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id:<3} {why} ({took:.1?})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
