use resolvix::family::{
    builtin_family, cohen_good_pair, extract_negligible, fills, is_good_pair, is_weakly_increasing, split_cover_and_base,
    staged_filler, Sub,
};

#[test]
fn staged_filler_resolves_the_top_interval() {
    let f = builtin_family("dyadic").unwrap();
    let top = f.index_of("I0.0").unwrap();
    let out = staged_filler(&f, &f.all(), top, (Sub::new(), Sub::new()), 20_000, 4).unwrap();
    assert!(out.left.is_disjoint(&out.right));
    for st in &out.stages {
        for added in &st.added {
            assert!(is_weakly_increasing(&f, added));
        }
    }
    let top_only: Sub = [top].into();
    assert!(fills(&f, &out.left, &top_only).is_ok());
    assert!(fills(&f, &out.right, &top_only).is_ok());
    assert!(is_good_pair(&f, &out.left, &out.right));
    println!("steps {} stages {}", out.steps_run, out.stages.len());
}

#[test]
fn cohen_meets_every_requirement() {
    let f = builtin_family("dyadic").unwrap();
    for seed in 0..5 {
        let res = cohen_good_pair(&f, &f.all(), seed).unwrap();
        assert!(is_good_pair(&f, &res.pair.left, &res.pair.right));
    }
}

#[test]
fn left_halves_are_negligible() {
    let f = builtin_family("dyadic").unwrap();
    let chain: Sub = (1..=4).map(|l| f.index_of(&format!("I{l}.0")).unwrap()).collect();
    let rest: Sub = f.all().difference(&chain).copied().collect();
    assert!(fills(&f, &rest, &f.all()).is_ok());
    let found = extract_negligible(&f, &f.all(), 4).unwrap();
    assert_eq!(found.len(), 4);
    let rest: Sub = f.all().difference(&found.iter().copied().collect()).copied().collect();
    assert!(fills(&f, &rest, &f.all()).is_ok());
}

#[test]
fn cover_and_base_split() {
    let f = builtin_family("dyadic").unwrap();
    let split = split_cover_and_base(&f, &f.all()).unwrap();
    let union = split.cover.iter().fold(0u128, |t, &v| t | f.member(v).trace);
    assert_eq!(union, f.window());
}
