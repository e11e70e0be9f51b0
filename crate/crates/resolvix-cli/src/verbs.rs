//! One function per verb: load, run, and shape the JSON result.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::{json, Value};

use resolvix::family::{
    cohen_good_pair, extract_negligible, fills, is_good_pair, is_weakly_increasing, local_pairs,
    resolve_finite_union_closed, resolve_good_pair_greedy, split_cover_and_base, SetFamily, Sub,
};
use resolvix::forcing::{
    extend_add_point, extend_define_f, extend_define_g, extend_uplus, generic_run, leq, oplus, twins, validate,
    Condition,
};
use resolvix::grid::{build_grid as build, verify_build, ColoringKind, GridConfig, GridElem};
use resolvix::ipart::{build_avoiding_partition, find_homogeneous_chain, validate_avoiding};
use resolvix::order::{stone_partition, stone_violation};
use resolvix::partition::Partition;
use resolvix::space::{
    check_clopen, check_g1, check_hausdorff, irresolvability_game, kolmogorov_quotient, level_partition,
    quotient_violations, vset, Clopen, Determination, G1Result, Hausdorff, SpaceFragment,
};

use crate::input::{self, pre, Failure};
use crate::{Ctx, Outcome};

fn outcome(config: Value, result: Value, violated: bool) -> Outcome {
    Outcome { config, result, violated }
}

fn write_opt(path: &Option<PathBuf>, text: impl FnOnce() -> String) -> Result<(), Failure> {
    match path {
        Some(p) => input::write(p, &text()),
        None => Ok(()),
    }
}

fn side_partition(fam: &SetFamily, name: &str, left: &Sub, right: &Sub) -> Partition {
    let mut part = Partition::new(name);
    for (side, sub) in [left, right].into_iter().enumerate() {
        for &v in sub {
            part.set(fam.name_of(v), side as u8);
        }
    }
    part
}

pub fn stone(ctx: &Ctx, poset: &str, steps: usize, out: Option<PathBuf>) -> Result<Outcome, Failure> {
    let p = input::order(poset)?;
    let part = stone_partition(p.as_ref(), steps, ctx.seed)?;
    let violation = stone_violation(p.as_ref(), &part);
    let colors: Vec<(String, u8)> = part.colors.iter().map(|(&e, &c)| (p.label(e), c)).collect();
    write_opt(&out, || {
        let mut pt = Partition::new("stone");
        for (l, c) in &colors {
            pt.set(l.clone(), *c);
        }
        pt.to_text()
    })?;
    let result = json!({
        "order": p.name(),
        "processed": part.processed,
        "colored": colors.len(),
        "colors": colors,
        "violation": violation.map(|(e, c)| json!({ "elem": p.label(e), "missing_color": c })),
    });
    Ok(outcome(json!({ "poset": poset, "steps": steps }), result, violation.is_some()))
}

pub fn resolve(family: &str, window: Option<usize>, out: Option<PathBuf>) -> Result<Outcome, Failure> {
    let mut fam = input::family(family)?;
    if let Some(w) = window {
        let n = w.min(fam.ground().len());
        let mask = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
        fam = fam.with_window(mask);
    }
    let all = fam.all();
    let local = local_pairs(&fam, &all)?;
    let res = resolve_good_pair_greedy(&fam, &all, &local)?;
    let good = is_good_pair(&fam, &res.left, &res.right);
    write_opt(&out, || side_partition(&fam, "resolve", &res.left, &res.right).to_text())?;
    let result = json!({
        "members": fam.len(),
        "left": fam.names(&res.left),
        "right": fam.names(&res.right),
        "merged": res.merged,
        "merged_members": res.merged_members,
        "good_pair": good,
        "left_fills": res.left_fills,
        "right_fills": res.right_fills,
    });
    Ok(outcome(json!({ "family": family, "window": window }), result, !good))
}

pub fn negligible(family: &str, target: usize) -> Result<Outcome, Failure> {
    let fam = input::family(family)?;
    let all = fam.all();
    let found = extract_negligible(&fam, &all, target)?;
    let rest: Sub = all.iter().copied().filter(|v| !found.contains(v)).collect();
    let ok = is_weakly_increasing(&fam, &found) && fills(&fam, &rest, &all).is_ok();
    let split = split_cover_and_base(&fam, &all).ok();
    let result = json!({
        "negligible": found.iter().map(|&v| fam.name_of(v)).collect::<Vec<_>>(),
        "rest_fills_family": ok,
        "cover_and_base": split.map(|s| json!({
            "cover": s.cover.iter().map(|&v| fam.name_of(v)).collect::<Vec<_>>(),
            "base": fam.names(&s.base),
        })),
    });
    Ok(outcome(json!({ "family": family, "target": target }), result, !ok))
}

/// Largest proper subset at each step, ties to the lower index, each with a
/// separating window point.
fn greedy_chain(fam: &SetFamily, u: usize) -> (Vec<usize>, Vec<usize>) {
    let (mut chain, mut points) = (vec![u], Vec::new());
    loop {
        let cur = *chain.last().unwrap();
        let next = (0..fam.len())
            .filter(|&v| fam.proper_subset(v, cur) && fam.member(cur).trace & !fam.member(v).trace != 0)
            .max_by_key(|&v| (fam.measure(v), std::cmp::Reverse(v)));
        let Some(v) = next else { break };
        points.push((fam.member(cur).trace & !fam.member(v).trace).trailing_zeros() as usize);
        chain.push(v);
    }
    (chain, points)
}

pub fn finunion(family: &str, member: &str, chain: &[String], points: &[String]) -> Result<Outcome, Failure> {
    let fam = input::family(family)?;
    let u = fam.index_of(member)?;
    let (chain_ix, point_ix) = if chain.is_empty() {
        greedy_chain(&fam, u)
    } else {
        let c = chain.iter().map(|n| fam.index_of(n)).collect::<Result<Vec<_>, _>>()?;
        let p = points.iter().map(|n| fam.point(n)).collect::<Result<Vec<_>, _>>()?;
        (c, p)
    };
    let res = resolve_finite_union_closed(&fam, &fam.all(), u, &chain_ix, &point_ix)?;
    let disjoint = res.left.is_disjoint(&res.right);
    let result = json!({
        "chain": chain_ix.iter().map(|&v| fam.name_of(v)).collect::<Vec<_>>(),
        "points": point_ix.iter().map(|&k| &fam.ground()[k]).collect::<Vec<_>>(),
        "left": fam.names(&res.left),
        "right": fam.names(&res.right),
        "deep": fam.names(&res.deep),
        "left_union": res.left_union,
        "right_union": res.right_union,
        "syntheses": res.syntheses,
        "left_fills_right": res.left_fills_right,
        "right_fills_left": res.right_fills_left,
    });
    let config = json!({ "family": family, "member": member, "chain": chain, "points": points });
    Ok(outcome(config, result, !disjoint))
}

pub fn cohen(ctx: &Ctx, family: &str, out: Option<PathBuf>) -> Result<Outcome, Failure> {
    let fam = input::family(family)?;
    let res = cohen_good_pair(&fam, &fam.all(), ctx.seed)?;
    let good = is_good_pair(&fam, &res.pair.left, &res.pair.right);
    write_opt(&out, || side_partition(&fam, "cohen", &res.pair.left, &res.pair.right).to_text())?;
    let result = json!({
        "left": fam.names(&res.pair.left),
        "right": fam.names(&res.pair.right),
        "requirements": res.requirements,
        "forced": res.forced,
        "good_pair": good,
    });
    Ok(outcome(json!({ "family": family }), result, !good))
}

pub fn ik_check(
    ctx: &Ctx,
    poset: &str,
    partition: Option<&str>,
    k: usize,
    window: usize,
    threshold: usize,
) -> Result<Outcome, Failure> {
    let p = input::order(poset)?;
    let n = p.size().map_or(window, |s| s.min(window));
    let labels: Vec<String> = (0..n).map(|e| p.label(e)).collect();
    let (colors, built) = match partition {
        Some(path) => {
            let part = input::partition(path)?;
            let colors = part.colors_for(&labels).map_err(|l| pre(format!("partition leaves {l} uncolored")))?;
            (colors, None)
        }
        None => {
            let a = build_avoiding_partition(p.as_ref(), n, threshold, ctx.seed)?;
            let v = validate_avoiding(p.as_ref(), &a);
            (a.colors.clone(), Some((a, v)))
        }
    };
    let search = find_homogeneous_chain(p.as_ref(), &colors, k, n)?;
    let violated = built.as_ref().is_some_and(|(_, v)| !v.is_empty());
    let result = json!({
        "window": search.window,
        "witness": search.witness.as_ref().map(|w| json!({
            "color": w.color,
            "chain": w.chain.iter().map(|&e| p.label(e)).collect::<Vec<_>>(),
        })),
        "exhaustive": search.witness.is_none(),
        "starts": search.starts,
        "longest": search.longest,
        "longest_start": search.longest_start.map(|e| p.label(e)),
        "avoiding": built.map(|(a, v)| json!({
            "intervals": a.intervals.len(),
            "antichains_added": a.antichains_added(),
            "violations": v,
        })),
    });
    let config = json!({ "poset": poset, "partition": partition, "k": k, "window": window, "threshold": threshold });
    Ok(outcome(config, result, violated))
}

pub fn build_grid(
    ctx: &Ctx,
    stages: usize,
    block: usize,
    graft: usize,
    coloring: &str,
    levels: usize,
    out: Option<PathBuf>,
) -> Result<Outcome, Failure> {
    let cfg = GridConfig {
        stages,
        block,
        graft,
        coloring: if coloring == "seeded" { ColoringKind::Seeded } else { ColoringKind::Identity },
        seed: ctx.seed,
        levels,
        schedule: Vec::new(),
    };
    let b = build(&cfg).map_err(pre)?;
    let violations = verify_build(&b);
    let poset = b.poset().to_text();
    write_opt(&out, || poset.clone())?;
    let result = json!({
        "elements": b.elems().len(),
        "stages": b.stages,
        "violations": violations,
        "poset": poset,
    });
    let config = json!({ "stages": stages, "block": block, "graft": graft, "coloring": coloring, "levels": levels });
    Ok(outcome(config, result, !violations.is_empty()))
}

pub fn forcing_validate(path: &str) -> Result<Outcome, Failure> {
    let c = input::condition(path)?;
    let v = validate(&c);
    let listed: Vec<Value> = v.iter().map(|x| json!({ "clause": x.clause(), "violation": x })).collect();
    let result = json!({ "points": c.points.len(), "indices": c.indices.len(), "valid": v.is_empty(), "violations": listed });
    Ok(outcome(json!({ "condition": path }), result, !v.is_empty()))
}

pub fn forcing_leq(p: &str, q: &str) -> Result<Outcome, Failure> {
    let (cp, cq) = (input::condition(p)?, input::condition(q)?);
    let v = leq(&cp, &cq);
    let listed: Vec<Value> = v.iter().map(|x| json!({ "clause": x.clause(), "violation": x })).collect();
    let result = json!({ "extends": v.is_empty(), "violations": listed });
    Ok(outcome(json!({ "p": p, "q": q }), result, !v.is_empty()))
}

pub fn forcing_oplus(p: &str, q: &str, out: Option<PathBuf>) -> Result<Outcome, Failure> {
    let (cp, cq) = (input::condition(p)?, input::condition(q)?);
    let r = oplus(&cp, &cq)?;
    write_opt(&out, || r.to_text())?;
    let rho = if cp.is_empty() || cq.is_empty() { BTreeMap::new() } else { twins(&cp, &cq).unwrap_or_default() };
    let result = json!({ "support_map": rho, "condition": r.to_text() });
    Ok(outcome(json!({ "p": p, "q": q }), result, false))
}

fn elem(tok: &str) -> Result<GridElem, Failure> {
    GridElem::parse(tok).ok_or_else(|| Failure::Input(format!("expected a grid point `(a,n)`, got {tok:?}")))
}

fn index(tok: &str) -> Result<usize, Failure> {
    tok.parse().map_err(|_| Failure::Input(format!("expected an index, got {tok:?}")))
}

fn apply_step(c: &Condition, step: &str) -> Result<Condition, Failure> {
    let toks: Vec<&str> = step.split_whitespace().collect();
    Ok(match toks.as_slice() {
        ["add-point", y, g] => extend_add_point(c, elem(y)?, index(g)?)?,
        ["uplus", a, b, g] => extend_uplus(c, elem(a)?, elem(b)?, index(g)?)?,
        ["define-f", a, b] => extend_define_f(c, index(a)?, index(b)?)?,
        ["define-g", x, a] => extend_define_g(c, elem(x)?, index(a)?)?,
        _ => return Err(Failure::Input(format!("unrecognised step {step:?}"))),
    })
}

pub fn forcing_extend(path: &str, steps: &[String], out: Option<PathBuf>) -> Result<Outcome, Failure> {
    let mut c = input::condition(path)?;
    let start = c.clone();
    for s in steps {
        c = apply_step(&c, s)?;
    }
    write_opt(&out, || c.to_text())?;
    let below = leq(&c, &start);
    let result = json!({ "steps": steps.len(), "extends_input": below.is_empty(), "condition": c.to_text() });
    Ok(outcome(json!({ "condition": path, "steps": steps }), result, !below.is_empty()))
}

pub fn forcing_run(ctx: &Ctx, schedule: &str, budget: usize, out: Option<PathBuf>) -> Result<Outcome, Failure> {
    let specs = input::schedule(schedule)?;
    let run = generic_run(&specs, budget, ctx.seed)?;
    let fragment = run.fragment.to_text();
    write_opt(&out, || fragment.clone())?;
    let descends = run.log.entries.windows(2).all(|w| leq(&w[1].condition, &w[0].condition).is_empty());
    let witnesses: Vec<Value> = run
        .log
        .witnesses
        .iter()
        .map(|w| {
            json!({
                "entry": w.entry,
                "kernel": w.kernel,
                "low": w.low,
                "high": w.high,
                "t": w.t,
                "key_low": w.key_low,
                "key_high": w.key_high,
                "low_identity": w.low_identity,
                "high_identity": w.high_identity,
            })
        })
        .collect();
    let certified = run.log.witnesses.iter().all(|w| w.key_low && w.key_high && w.low_identity && w.high_identity);
    let result = json!({
        "entries": run.log.entries.len() - 1,
        "met": run.log.met,
        "descending": descends,
        "witnesses": witnesses,
        "late": run.fragment.late,
        "branching_shortfall": run.fragment.branching_shortfall().len(),
        "fragment": fragment,
    });
    let config = json!({ "schedule": schedule, "budget": budget });
    Ok(outcome(config, result, !(descends && certified)))
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn space_check(ctx: &Ctx, path: &str, checks: &[String], partition: Option<&str>) -> Result<Outcome, Failure> {
    let cand = input::fragment(path)?;
    let frag = SpaceFragment::new(cand).map_err(pre)?;
    let c = frag.condition();
    let pts: Vec<GridElem> = c.points.iter().copied().collect();
    let has = |k: &str| checks.iter().any(|c| c == k);
    let mut result = serde_json::Map::new();
    let mut violated = false;
    let mut vsets = BTreeMap::new();
    for &x in &pts {
        let cells = vset(&frag, x).map_err(pre)?;
        let count = |d: Determination| cells.iter().filter(|c| c.value == d).count();
        vsets.insert(x.to_string(), [count(Determination::In), count(Determination::Out), count(Determination::Unknown)]);
    }
    result.insert("branches".into(), json!(frag.branches));
    result.insert("vsets_in_out_unknown".into(), json!(vsets));
    if has("g1") {
        let pairs: Vec<(GridElem, GridElem)> = pts.iter().flat_map(|&u| pts.iter().map(move |&v| (u, v))).collect();
        let got: Vec<G1Result> = in_pool(ctx.jobs, || {
            pairs.par_iter().map(|&(u, v)| check_g1(&frag, u, v).expect("points of the fragment")).collect()
        });
        let mut tally = BTreeMap::from([("holds", 0), ("separated", 0), ("unknown", 0)]);
        let mut counterexamples = Vec::new();
        for (&(u, v), r) in pairs.iter().zip(&got) {
            match r {
                G1Result::Holds { separating: None } => *tally.get_mut("holds").unwrap() += 1,
                G1Result::Holds { separating: Some(_) } => *tally.get_mut("separated").unwrap() += 1,
                G1Result::Unknown => *tally.get_mut("unknown").unwrap() += 1,
                G1Result::Counterexample { branch } => counterexamples.push(json!({ "u": u, "v": v, "branch": branch })),
            }
        }
        violated |= !counterexamples.is_empty();
        result.insert("g1".into(), json!({ "pairs": pairs.len(), "tally": tally, "counterexamples": counterexamples }));
    }
    if has("g3") {
        let n = frag.branches.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|b| (b + 1..n).map(move |c| (b, c))).collect();
        let got: Vec<Hausdorff> = in_pool(ctx.jobs, || {
            pairs.par_iter().map(|&(b, c)| check_hausdorff(&frag, b, c).expect("distinct branches")).collect()
        });
        let witnesses: Vec<Value> = pairs
            .iter()
            .zip(&got)
            .filter_map(|(&(b, c), h)| match h {
                Hausdorff::Witness { x, y } => Some(json!([b, c, x, y])),
                Hausdorff::Unknown => None,
            })
            .collect();
        let unknown = pairs.len() - witnesses.len();
        result.insert("g3".into(), json!({ "pairs": pairs.len(), "unknown": unknown, "witnesses": witnesses }));
    }
    if has("g4") {
        let (mut separators, mut unknown, mut skipped) = (Vec::new(), 0, 0);
        for &x in &pts {
            for (b, br) in frag.branches.iter().enumerate() {
                if !c.g.contains_key(&(x, br.alpha)) {
                    skipped += 1;
                    continue;
                }
                match check_clopen(&frag, x, b) {
                    Ok(Clopen::Separator { y }) => separators.push(json!([x, b, y])),
                    Ok(Clopen::Unknown) => unknown += 1,
                    Err(_) => skipped += 1,
                }
            }
        }
        result.insert("g4".into(), json!({ "separators": separators, "unknown": unknown, "not_applicable": skipped }));
    }
    if has("g5") {
        let part = match partition {
            Some(p) => input::partition(p)?,
            None => level_partition(&frag.candidate),
        };
        let report = irresolvability_game(&frag.candidate, &part).map_err(pre)?;
        violated |= report.witness.as_ref().is_some_and(|w| !w.refuted);
        result.insert("g5".into(), json!({ "partition": part.name, "game": report }));
    }
    let config = json!({ "fragment": path, "checks": checks, "partition": partition });
    Ok(outcome(config, Value::Object(result), violated))
}

pub fn quotient(family: &str, out: Option<PathBuf>) -> Result<Outcome, Failure> {
    let fam = input::family(family)?;
    let q = kolmogorov_quotient(&fam).map_err(pre)?;
    let v = quotient_violations(&fam, &q);
    let text = q.family.to_text();
    write_opt(&out, || text.clone())?;
    let map: BTreeMap<&str, &str> = fam
        .ground()
        .iter()
        .zip(&q.point_map)
        .map(|(p, &c)| (p.as_str(), q.family.ground()[c].as_str()))
        .collect();
    let result = json!({
        "points": fam.ground().len(),
        "classes": q.classes,
        "point_map": map,
        "violations": v,
        "family": text,
    });
    Ok(outcome(json!({ "family": family }), result, !v.is_empty()))
}
