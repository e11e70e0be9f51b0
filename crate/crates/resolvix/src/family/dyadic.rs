//! Dyadic rationals in [0,1], unions of half-open dyadic intervals, and the
//! builtin dyadic families.

use std::fmt;

use super::{Extent, NamedSet, SetFamily};

const BITS: u32 = 32;
const ONE: u64 = 1 << BITS;

/// A dyadic rational `num / 2^32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dyadic(pub u64);

impl Dyadic {
    pub fn new(num: u64, level: u32) -> Self {
        assert!(level <= BITS);
        Dyadic(num << (BITS - level))
    }

    /// Accepts `0`, `1`, `a/b` with `b` a power of two up to `2^32`.
    pub fn parse(s: &str) -> Option<Self> {
        let (num, den) = match s.split_once('/') {
            Some((a, b)) => (a.parse::<u64>().ok()?, b.parse::<u64>().ok()?),
            None => (s.parse::<u64>().ok()?, 1),
        };
        if den == 0 || !den.is_power_of_two() || den > ONE {
            return None;
        }
        let level = den.trailing_zeros();
        let v = num.checked_shl(BITS - level)?;
        (v <= ONE && num <= den).then_some(Dyadic(v))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 || self.0 == ONE {
            return write!(f, "{}", self.0 >> BITS);
        }
        let tz = self.0.trailing_zeros().min(BITS);
        write!(f, "{}/{}", self.0 >> tz, 1u64 << (BITS - tz))
    }
}

/// A finite union of half-open intervals, kept sorted with touching pieces merged.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Span(Vec<(Dyadic, Dyadic)>);

impl Span {
    pub fn new(mut pieces: Vec<(Dyadic, Dyadic)>) -> Self {
        pieces.retain(|(a, b)| a < b);
        pieces.sort();
        let mut out: Vec<(Dyadic, Dyadic)> = Vec::new();
        for (a, b) in pieces {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Span(out)
    }

    pub fn interval(lo: Dyadic, hi: Dyadic) -> Self {
        Span::new(vec![(lo, hi)])
    }

    pub fn pieces(&self) -> &[(Dyadic, Dyadic)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: Dyadic) -> bool {
        self.0.iter().any(|&(a, b)| a <= x && x < b)
    }

    pub fn is_subset(&self, other: &Span) -> bool {
        self.0.iter().all(|&(a, b)| other.0.iter().any(|&(c, d)| c <= a && b <= d))
    }

    pub fn union(&self, other: &Span) -> Span {
        Span::new(self.0.iter().chain(&other.0).copied().collect())
    }

    pub fn measure(&self) -> u64 {
        self.0.iter().map(|(a, b)| b.0 - a.0).sum()
    }
}

fn ground_points(level: u32) -> Vec<Dyadic> {
    (0..1u64 << level).map(|k| Dyadic::new(k, level)).collect()
}

fn span_member(name: String, span: Span, points: &[Dyadic]) -> NamedSet {
    let trace = points.iter().enumerate().filter(|(_, &p)| span.contains(p)).fold(0u128, |t, (k, _)| t | 1 << k);
    NamedSet { name, trace, extent: Extent::Spans(span), frontier: false, allow_empty: false }
}

/// Dyadic intervals `[k/2^l, (k+1)/2^l)` for levels `0..=max_level` over the
/// window `{k/2^point_level}`; the deepest `frontier_levels` levels are frontier.
pub fn dyadic_family(point_level: u32, max_level: u32, frontier_levels: u32) -> SetFamily {
    assert!(point_level <= 7, "window is limited to 128 points");
    let points = ground_points(point_level);
    let mut fam = SetFamily::new(format!("dyadic{}", 1u64 << point_level), points.iter().map(|p| p.to_string()).collect());
    for level in 0..=max_level {
        for k in 0..1u64 << level {
            let span = Span::interval(Dyadic::new(k, level), Dyadic::new(k + 1, level));
            let mut m = span_member(format!("I{level}.{k}"), span, &points);
            m.frontier = level + frontier_levels > max_level;
            fam.push(m).expect("dyadic members are distinct and nonempty");
        }
    }
    fam
}

/// Every nonempty union of the `2^level` atoms `[k/2^level, (k+1)/2^level)`,
/// over the window of their left endpoints. Atoms are frontier.
pub fn dyadic_unions(level: u32) -> SetFamily {
    assert!(level <= 4, "at most 16 atoms");
    let points = ground_points(level);
    let n = points.len();
    let mut fam = SetFamily::new(format!("dyadic-unions{n}"), points.iter().map(|p| p.to_string()).collect());
    let mut masks: Vec<u32> = (1..1u32 << n).collect();
    masks.sort_by_key(|m| (std::cmp::Reverse(m.count_ones()), *m));
    for mask in masks {
        let pieces = (0..n as u64)
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| (Dyadic::new(k, level), Dyadic::new(k + 1, level)))
            .collect();
        let bits: String = (0..n).map(|k| if mask >> k & 1 == 1 { '1' } else { '0' }).collect();
        let mut m = span_member(format!("U{bits}"), Span::new(pieces), &points);
        m.frontier = mask.count_ones() == 1;
        fam.push(m).expect("unions are distinct and nonempty");
    }
    fam
}

/// Builtin families by name: `dyadic` (16-point window, levels 0..=6, two
/// frontier levels) and `dyadic-unions` (all unions of 8 atoms).
pub fn builtin_family(name: &str) -> Option<SetFamily> {
    match name {
        "dyadic" => Some(dyadic_family(4, 6, 2)),
        "dyadic-unions" => Some(dyadic_unions(3)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_parse_and_print() {
        for s in ["0", "1", "1/2", "3/16", "5/64"] {
            assert_eq!(Dyadic::parse(s).unwrap().to_string(), s);
        }
        assert_eq!(Dyadic::parse("2/4").unwrap().to_string(), "1/2");
        assert!(Dyadic::parse("1/3").is_none());
        assert!(Dyadic::parse("3/2").is_none());
    }

    #[test]
    fn spans_merge_and_compare() {
        let h = |a: u64, b: u64| (Dyadic::new(a, 2), Dyadic::new(b, 2));
        let s = Span::new(vec![h(0, 1), h(1, 2)]);
        assert_eq!(s.pieces().len(), 1);
        assert!(Span::new(vec![h(0, 1)]).is_subset(&s));
        assert!(!Span::new(vec![h(0, 1), h(3, 4)]).is_subset(&s));
    }

    #[test]
    fn dyadic_family_shape() {
        let f = dyadic_family(4, 6, 2);
        assert_eq!(f.len(), 127);
        let deep = f.index_of("I6.0").unwrap();
        let mid = f.index_of("I5.0").unwrap();
        // Equal traces, but the spans still order them.
        assert_eq!(f.member(deep).trace, f.member(mid).trace);
        assert!(f.proper_subset(deep, mid));
        assert!(f.member(deep).frontier && !f.member(f.index_of("I4.0").unwrap()).frontier);
    }

    #[test]
    fn unions_are_closed() {
        let f = dyadic_unions(3);
        assert_eq!(f.len(), 255);
        let traces: std::collections::BTreeSet<u128> = f.members().iter().map(|m| m.trace).collect();
        for a in f.members() {
            for b in f.members() {
                assert!(traces.contains(&(a.trace | b.trace)));
            }
        }
    }
}
