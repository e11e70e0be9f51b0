use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resolvix::forcing::{
    amalgamate_r, extend_add_point, extend_define_f, extend_define_g, extend_uplus, generic_run, grid_le, iso_type,
    leq, map_columns, nice_delta_system, oplus, parse_condition, twin_schedule, validate, Condition, DenseSpec,
    LIMIT_STEP,
};
use resolvix::grid::GridElem;
use resolvix::sample::{random_condition, random_extension};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn assert_extends(r: &Condition, p: &Condition, what: &str) {
    assert_eq!(validate(r), vec![], "{what}: invalid\n{r}");
    assert_eq!(leq(r, p), vec![], "{what}: not below\n{r}\n{p}");
}

#[test]
fn extensions_stay_valid_and_below() {
    let mut counts = [0usize; 5];
    for seed in 0..200u64 {
        let mut rng = rng(seed);
        let p = random_condition(&mut rng, 8, 24);
        assert!(validate(&p).is_empty());

        let gamma = LIMIT_STEP * rng.gen_range(1..=6);
        let y = GridElem::new(rng.gen_range(0..gamma), rng.gen_range(0..6));
        if !p.points.contains(&y) {
            let r = extend_add_point(&p, y, gamma).unwrap();
            assert_extends(&r, &p, "add-point");
            assert_eq!(r.level(gamma, y), 0);
            counts[0] += 1;
        }

        let tree_elems: Vec<(usize, GridElem)> =
            p.trees.iter().flat_map(|(&a, t)| t.iter().map(move |&x| (a, x))).collect();
        if let Some(&(a, x)) = tree_elems.choose(&mut rng) {
            let free: Vec<GridElem> = (x.alpha + 1..a)
                .flat_map(|c| (x.n + 1..x.n + 3).map(move |n| GridElem::new(c, n)))
                .filter(|b| !p.points.contains(b))
                .collect();
            if let Some(&b) = free.choose(&mut rng) {
                let r = extend_uplus(&p, x, b, a).unwrap();
                assert_extends(&r, &p, "uplus");
                assert_eq!(r.level(a, b), p.level(a, x) + 1);
                counts[1] += 1;
            }
        }

        let idx: Vec<usize> = p.indices.iter().copied().collect();
        let open: Vec<(usize, usize)> = idx
            .iter()
            .flat_map(|&a| idx.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| a < b && p.get_f(a, b).is_none())
            .collect();
        if let Some(&(a, b)) = open.choose(&mut rng) {
            let r = extend_define_f(&p, a, b).unwrap();
            assert_extends(&r, &p, "define-f");
            let m = r.get_f(a, b).unwrap();
            assert!(r.tree_level(a, m).is_empty() && r.tree_level(b, m).is_empty());
            assert!(m == 0 || !r.tree_level(a, m - 1).is_empty() || !r.tree_level(b, m - 1).is_empty());
            counts[2] += 1;
        }

        let pts: Vec<GridElem> = p.points.iter().copied().collect();
        if let (Some(&x), Some(&a)) = (pts.choose(&mut rng), idx.choose(&mut rng)) {
            if !p.g.contains_key(&(x, a)) {
                let r = extend_define_g(&p, x, a).unwrap();
                assert_extends(&r, &p, "define-g");
                assert_eq!(r.g[&(x, a)], p.height(a));
                counts[3] += 1;
            }
        }

        // A twin beyond the whole support.
        if !p.is_empty() {
            let top = *p.support().last().unwrap();
            let d = (top / LIMIT_STEP + 1 + rng.gen_range(0..3)) * LIMIT_STEP;
            let q = map_columns(&p, &p.support().into_iter().map(|a| (a, a + d)).collect());
            let r = oplus(&p, &q).unwrap();
            assert_extends(&r, &p, "oplus");
            assert_extends(&r, &q, "oplus");
            counts[4] += 1;
        }
    }
    assert!(counts.iter().all(|&c| c >= 60), "{counts:?}");
}

#[test]
fn amalgamation_replays() {
    for seed in 0..200u64 {
        let run = generic_run(&twin_schedule(seed), 64, seed).unwrap();
        let w = &run.log.witnesses[0];
        let before = &run.log.entries[w.entry - 1].condition;
        let a = amalgamate_r(before, w.low, &w.twin, w.high, w.t).unwrap();
        assert_extends(&a.r, before, "r below the chain twin");
        assert_extends(&a.r, &w.twin, "r below the side twin");
        let [x, y, _, _] = w.low.quad;
        let [_, _, z, wq] = w.high.quad;
        let mut lo = a.r.interval(x, y);
        lo.insert(w.t);
        let mut hi = a.r.interval(z, wq);
        hi.insert(w.t);
        assert_eq!(a.r.interval(x, w.t), lo, "seed {seed}");
        assert_eq!(a.r.interval(z, w.t), hi, "seed {seed}");
        assert!(a.key_low && a.key_high, "seed {seed}");
        assert!(a.r.tree(w.low.alpha).contains(&w.t) && a.r.tree(w.high.alpha).contains(&w.t));
    }
}

/// Exhaustive search over all bijections of the supports for an
/// order-preserving one carrying every component of `p` onto `q`.
fn oracle_isomorphic(p: &Condition, q: &Condition) -> bool {
    let sp: Vec<usize> = p.support().into_iter().collect();
    let sq: Vec<usize> = q.support().into_iter().collect();
    if sp.len() != sq.len() {
        return false;
    }
    fn perms(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(k - 1) {
            for pos in 0..=p.len() {
                let mut v = p.clone();
                v.insert(pos, k - 1);
                out.push(v);
            }
        }
        out
    }
    for perm in perms(sp.len()) {
        let sigma: BTreeMap<usize, usize> = (0..sp.len()).map(|i| (sp[i], sq[perm[i]])).collect();
        if sp.windows(2).any(|w| sigma[&w[0]] > sigma[&w[1]]) {
            continue;
        }
        let e = |x: &GridElem| GridElem::new(sigma[&x.alpha], x.n);
        let points: BTreeSet<GridElem> = p.points.iter().map(e).collect();
        let order: BTreeSet<(GridElem, GridElem)> = p.order.iter().map(|(x, y)| (e(x), e(y))).collect();
        let indices: BTreeSet<usize> = p.indices.iter().map(|a| sigma[a]).collect();
        let trees: BTreeMap<usize, BTreeSet<GridElem>> =
            p.trees.iter().map(|(a, t)| (sigma[a], t.iter().map(e).collect())).collect();
        let f: BTreeMap<(usize, usize), usize> = p
            .f
            .iter()
            .map(|(&(a, b), &m)| {
                let (x, y) = (sigma[&a], sigma[&b]);
                ((x.min(y), x.max(y)), m)
            })
            .collect();
        let g: BTreeMap<(GridElem, usize), usize> = p.g.iter().map(|((x, a), &m)| ((e(x), sigma[a]), m)).collect();
        if points == q.points && order == q.order && indices == q.indices && trees == q.trees && f == q.f && g == q.g {
            return true;
        }
    }
    false
}

#[test]
fn iso_type_matches_exhaustive_search() {
    let (mut same, mut checked) = (0, 0);
    for seed in 0..400u64 {
        let mut rng = rng(seed);
        let steps = rng.gen_range(2..6);
        let p = random_condition(&mut rng, steps, 12);
        if p.support().len() > 6 {
            continue;
        }
        let mut q = match rng.gen_range(0..3) {
            0 => {
                let steps = rng.gen_range(2..6);
                random_condition(&mut rng, steps, 12)
            }
            _ => {
                let mut cols: Vec<usize> = (0..60).collect();
                cols.shuffle(&mut rng);
                let mut cols: Vec<usize> = cols[..p.support().len()].to_vec();
                cols.sort();
                map_columns(&p, &p.support().into_iter().zip(cols).collect())
            }
        };
        if rng.gen_bool(0.3) {
            if let Some(&pair) = q.order.iter().next() {
                q.order.remove(&pair);
            }
        }
        let expected = oracle_isomorphic(&p, &q);
        assert_eq!(iso_type(&p) == iso_type(&q), expected, "seed {seed}\n{p}\n{q}");
        checked += 1;
        same += expected as usize;
    }
    assert!(checked > 200 && same > 50 && checked - same > 50, "{checked} {same}");
}

#[test]
fn leq_is_a_partial_order() {
    for seed in 0..100u64 {
        let mut rng = rng(seed);
        let p0 = random_condition(&mut rng, 5, 16);
        let p1 = random_extension(&mut rng, &p0, 4, 16);
        let p2 = random_extension(&mut rng, &p1, 4, 16);
        let other = random_condition(&mut rng, 5, 16);
        let suite = [&p0, &p1, &p2, &other];
        for a in suite {
            assert!(leq(a, a).is_empty());
            for b in suite {
                if leq(a, b).is_empty() && leq(b, a).is_empty() {
                    assert_eq!(a, b);
                }
                for c in suite {
                    if leq(a, b).is_empty() && leq(b, c).is_empty() {
                        assert!(leq(a, c).is_empty(), "seed {seed}");
                    }
                }
            }
        }
        assert!(leq(&p2, &p0).is_empty());
    }
}

fn oracle_nice(sets: &[&BTreeSet<usize>]) -> bool {
    if sets.len() < 2 {
        return false;
    }
    let kernel: BTreeSet<usize> = sets[0].intersection(sets[1]).copied().collect();
    let blocks: Vec<BTreeSet<usize>> = sets.iter().map(|s| s.difference(&kernel).copied().collect()).collect();
    for i in 0..sets.len() {
        if !kernel.is_subset(sets[i]) {
            return false;
        }
        for &b in &blocks[i] {
            if kernel.iter().any(|&k| k >= b) {
                return false;
            }
        }
        for j in i + 1..sets.len() {
            let inter: BTreeSet<usize> = sets[i].intersection(sets[j]).copied().collect();
            let ordered = blocks[i].iter().all(|a| blocks[j].iter().all(|b| a < b))
                || blocks[i].iter().all(|a| blocks[j].iter().all(|b| a > b));
            if inter != kernel || !ordered {
                return false;
            }
        }
    }
    true
}

fn oracle_largest(supports: &[BTreeSet<usize>]) -> usize {
    fn go(supports: &[BTreeSet<usize>], chosen: &mut Vec<usize>, from: usize, best: &mut usize) {
        if chosen.len() >= 2 {
            *best = (*best).max(chosen.len());
        }
        for j in from..supports.len() {
            chosen.push(j);
            let sets: Vec<&BTreeSet<usize>> = chosen.iter().map(|&i| &supports[i]).collect();
            if chosen.len() < 2 || oracle_nice(&sets) {
                go(supports, chosen, j + 1, best);
            }
            chosen.pop();
        }
    }
    let mut best = 0;
    go(supports, &mut Vec::new(), 0, &mut best);
    best
}

#[test]
fn delta_systems_match_subfamily_search() {
    let mut found = 0;
    for seed in 0..40u64 {
        let mut rng = rng(seed);
        let mut samples: Vec<Condition> = (0..20).map(|_| random_condition(&mut rng, 2, 40)).collect();
        // Shifted copies make larger systems likely.
        let base = random_condition(&mut rng, 2, 8);
        for k in 1..rng.gen_range(2..6) {
            let d = 8 * k;
            if let Some(slot) = samples.choose_mut(&mut rng) {
                *slot = map_columns(&base, &base.support().into_iter().map(|a| (a, a + d)).collect());
            }
        }
        let supports: Vec<BTreeSet<usize>> = samples.iter().map(|c| c.support()).collect();
        let best = oracle_largest(&supports);
        match nice_delta_system(&samples) {
            Some(ds) => {
                let sets: Vec<&BTreeSet<usize>> = ds.members.iter().map(|&i| &supports[i]).collect();
                assert!(oracle_nice(&sets), "seed {seed}");
                assert_eq!(ds.members.len(), best, "seed {seed}");
                found += 1;
            }
            None => assert!(best < 2, "seed {seed}"),
        }
    }
    assert!(found > 20);
}

#[test]
fn generic_runs_descend_and_cohere() {
    for seed in 0..30u64 {
        let run = generic_run(&twin_schedule(seed), 64, seed).unwrap();
        let frag = &run.fragment.condition;
        assert_eq!(run.log.unions(), *frag);
        for pair in run.log.entries.windows(2) {
            assert!(leq(&pair[1].condition, &pair[0].condition).is_empty());
        }
        for e in &run.log.entries {
            let c = &e.condition;
            let r = frag.restrict_points(&c.points, &c.indices);
            assert_eq!((&r.points, &r.order, &r.indices, &r.trees), (&c.points, &c.order, &c.indices, &c.trees));
        }
    }
}

#[test]
fn f_on_every_pair_of_a_two_tree_fragment() {
    let s = [
        DenseSpec::AddPoint { gamma: 8, point: Some(GridElem::new(0, 0)), above: None },
        DenseSpec::AddPoint { gamma: 8, point: None, above: Some(GridElem::new(0, 0)) },
        DenseSpec::AddPoint { gamma: 12, point: None, above: None },
        DenseSpec::AddTreeRoot { gamma: 12, zeta: 9 },
        DenseSpec::DefineF { alpha: 8, beta: 12 },
        DenseSpec::AddPoint { gamma: 8, point: None, above: Some(GridElem::new(0, 0)) },
    ];
    let run = generic_run(&s, 10, 3).unwrap();
    let c = &run.fragment.condition;
    assert_eq!(c.f.len(), 1);
    assert_eq!(c.get_f(8, 12), Some(2));
    assert!(validate(c).is_empty());
    assert!(c.tree_level(12, 0).iter().any(|x| x.alpha >= 9));
}

#[test]
fn validator_names_violations() {
    let bad = parse_condition("A: (0,0) (1,0)\nLE: (0,0)<(1,0)\nI: 5\nT 5: (0,0)\n").unwrap();
    let clauses: BTreeSet<&str> = validate(&bad).iter().map(|v| v.clause()).collect();
    assert_eq!(clauses, ["P1"].into());
    assert!(!grid_le(GridElem::new(0, 0), GridElem::new(1, 0)));
}
