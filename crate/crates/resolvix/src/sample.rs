//! Seeded random instances for experiments and property checks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::family::{NamedSet, SetFamily};
use crate::forcing::{self, Condition, LIMIT_STEP};
use crate::grid::GridElem;
use crate::order::FinitePoset;

/// A family of at most `members` nonempty point sets over `ground` points.
/// Singletons are frontier and usually come with a frontier twin; larger
/// sets are occasionally frontier. This keeps a fair share of instances
/// resolvable.
pub fn random_family<R: Rng>(rng: &mut R, ground: usize, members: usize) -> SetFamily {
    assert!((1..=16).contains(&ground));
    let mut fam = SetFamily::new("random", (0..ground).map(|k| format!("p{k}")).collect());
    let full = (1u128 << ground) - 1;
    let mut sets: Vec<(u128, bool)> = Vec::new();
    let mut tries = 0;
    while sets.len() < members && tries < 64 * members {
        tries += 1;
        let t = if rng.gen_bool(0.4) { 1u128 << rng.gen_range(0..ground) } else { rng.gen_range(1..=full) };
        let singles = sets.iter().filter(|(s, _)| *s == t).count();
        if t.count_ones() == 1 && singles < 2 {
            sets.push((t, true));
        } else if singles == 0 {
            sets.push((t, rng.gen_bool(0.15)));
        }
    }
    for (i, (t, frontier)) in sets.into_iter().enumerate() {
        let mut s = NamedSet::points(format!("s{i}"), t);
        s.frontier = frontier;
        fam.push(s).expect("distinct names and nonempty traces");
    }
    fam
}

/// A random poset on `n` elements: each pair `i < j` of a random linear
/// order is related with probability `p` before closure.
pub fn random_poset<R: Rng>(rng: &mut R, n: usize, p: f64) -> FinitePoset {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                pairs.push((perm[i], perm[j]));
            }
        }
    }
    FinitePoset::from_pairs("random", (0..n).map(|k| format!("e{k}")).collect(), &pairs)
        .expect("pairs follow a linear order")
}

/// A valid condition grown by `steps` random extension attempts over the
/// columns below `max_index` (rounded down to a limit). Failed attempts are
/// skipped.
pub fn random_condition<R: Rng>(rng: &mut R, steps: usize, max_index: usize) -> Condition {
    random_extension(rng, &Condition::empty(), steps, max_index)
}

/// Like [`random_condition`], starting from `start`.
pub fn random_extension<R: Rng>(rng: &mut R, start: &Condition, steps: usize, max_index: usize) -> Condition {
    let limits: Vec<usize> = (1..=max_index / LIMIT_STEP).map(|k| k * LIMIT_STEP).collect();
    assert!(!limits.is_empty(), "max_index must reach a limit index");
    let mut p = start.clone();
    for _ in 0..steps {
        let gamma = *limits.choose(rng).unwrap();
        let next = match rng.gen_range(0..10) {
            0..=3 => {
                let y = GridElem::new(rng.gen_range(0..gamma), rng.gen_range(0..4));
                forcing::extend_add_point(&p, y, gamma)
            }
            4..=7 => {
                let tree: Vec<GridElem> = p.tree(gamma).iter().copied().collect();
                match tree.choose(rng) {
                    Some(&a) if a.alpha + 1 < gamma => {
                        let b = GridElem::new(rng.gen_range(a.alpha + 1..gamma), a.n + rng.gen_range(1..3));
                        forcing::extend_uplus(&p, a, b, gamma)
                    }
                    _ => continue,
                }
            }
            8 => {
                let idx: Vec<usize> = p.indices.iter().copied().collect();
                if idx.len() < 2 {
                    continue;
                }
                let pair: Vec<usize> = idx.choose_multiple(rng, 2).copied().collect();
                forcing::extend_define_f(&p, pair[0], pair[1])
            }
            _ => {
                let pts: Vec<GridElem> = p.points.iter().copied().collect();
                let idx: Vec<usize> = p.indices.iter().copied().collect();
                match (pts.choose(rng), idx.choose(rng)) {
                    (Some(&x), Some(&a)) => forcing::extend_define_g(&p, x, a),
                    _ => continue,
                }
            }
        };
        if let Ok(next) = next {
            p = next;
        }
    }
    p
}
