use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resolvix::family::{
    extend_fill, fills, find_local_pair, is_good_pair, local_pairs, resolve_good_pair_greedy, weakly_increasing_subfamily,
    SetFamily, Sub,
};
use resolvix::sample::random_family;

/// Some subfamily of `a`, all strictly inside `u`, covers `u`'s window demand.
fn oracle_fills_one(f: &SetFamily, a: &[usize], u: usize) -> bool {
    let m = f.member(u);
    if m.frontier {
        return true;
    }
    let need = m.trace & f.window();
    (0u32..1 << a.len()).any(|mask| {
        let chosen: Vec<usize> = (0..a.len()).filter(|k| mask >> k & 1 == 1).map(|k| a[k]).collect();
        let inside = chosen.iter().all(|&v| {
            let t = f.member(v).trace;
            t != m.trace && t & !m.trace == 0
        });
        inside && need & !chosen.iter().fold(0, |t, &v| t | f.member(v).trace) == 0
    })
}

fn oracle_fills(f: &SetFamily, a: &[usize], b: &[usize]) -> bool {
    b.iter().all(|&u| oracle_fills_one(f, a, u))
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

fn family(seed: u64) -> SetFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ground = rand::Rng::gen_range(&mut rng, 2..=8);
    let members = rand::Rng::gen_range(&mut rng, 1..=12);
    random_family(&mut rng, ground, members)
}

#[test]
fn fills_matches_subfamily_oracle() {
    for seed in 0..150 {
        let f = family(seed);
        let all: Vec<usize> = (0..f.len()).collect();
        for mask in [0u32, 0x555, 0xaaa, 0xfff] {
            let a: Sub = all.iter().copied().filter(|k| mask >> k & 1 == 1).collect();
            let av: Vec<usize> = a.iter().copied().collect();
            for &u in &all {
                let single: Sub = [u].into();
                assert_eq!(fills(&f, &a, &single).is_ok(), oracle_fills_one(&f, &av, u), "seed {seed} mask {mask} u {u}");
            }
        }
    }
}

#[test]
fn greedy_matches_exhaustive_partition_search() {
    let mut resolvable = 0;
    for seed in 0..150 {
        let f = family(seed);
        let b = f.all();
        let greedy = local_pairs(&f, &b).and_then(|lp| resolve_good_pair_greedy(&f, &b, &lp));
        let oracle = exhaustive_resolvable(&f);
        assert_eq!(greedy.is_ok(), oracle, "seed {seed}");
        resolvable += oracle as usize;
    }
    assert!(resolvable > 10, "only {resolvable} resolvable instances");
}

#[test]
fn extend_fill_recertifies_compatible_pairs() {
    let mut checked = 0;
    for seed in 0..300 {
        let f = family(seed);
        let b = f.all();
        let pairs: Vec<_> = b.iter().filter_map(|&u| find_local_pair(&f, &b, u)).collect();
        for p in &pairs {
            for q in &pairs {
                match extend_fill(&f, (&p.left, &p.right), (&q.left, &q.right)) {
                    Ok(ext) => {
                        assert!(is_good_pair(&f, &ext.pair.left, &ext.pair.right));
                        checked += 1;
                    }
                    Err(resolvix::family::FamilyError::FrontierConflict(_)) => {}
                    Err(e) => panic!("seed {seed}: {e}"),
                }
            }
        }
    }
    assert!(checked > 100);
}

proptest! {
    #[test]
    fn weakly_increasing_keeps_union(seed in 0u64..10_000) {
        let f = family(seed);
        let order: Vec<usize> = (0..f.len()).collect();
        let kept = weakly_increasing_subfamily(&f, &order);
        let union = |v: &[usize]| v.iter().fold(0u128, |t, &i| t | f.member(i).trace);
        prop_assert_eq!(union(&kept), union(&order));
        for (k, &b) in kept.iter().enumerate() {
            for &a in &order[..order.iter().position(|&x| x == b).unwrap()] {
                prop_assert!(f.member(b).trace & !f.member(a).trace != 0, "{} inside earlier {}", b, a);
            }
            let _ = k;
        }
    }

    #[test]
    fn fills_is_monotone_in_the_filling_family(seed in 0u64..10_000, mask in 0u32..4096) {
        let f = family(seed);
        let all: Sub = f.all();
        let a: Sub = all.iter().copied().filter(|k| mask >> k & 1 == 1).collect();
        let bigger: BTreeSet<usize> = all.clone();
        if fills(&f, &a, &all).is_ok() {
            prop_assert!(fills(&f, &bigger, &all).is_ok());
        }
    }
}
