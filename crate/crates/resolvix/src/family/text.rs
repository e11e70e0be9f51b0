//! `family` text format.
//!
//! ```text
//! family <name>
//! ground <p> <p> ...
//! window <p> ...              # optional, defaults to the whole ground
//! set <name> [frontier] [empty]: <p> <p> ...
//! span <name> [frontier] [empty]: <lo>..<hi> ...   # dyadic ground labels only
//! ```

use super::dyadic::{Dyadic, Span};
use super::{Extent, FamilyError, NamedSet, SetFamily};
use crate::text::{check_ident, content_lines, ParseError};

fn perr(line: usize, msg: impl Into<String>) -> FamilyError {
    FamilyError::Parse(ParseError::new(line, msg))
}

pub fn parse_family(src: &str) -> Result<SetFamily, FamilyError> {
    let mut lines = content_lines(src).peekable();
    let name = match lines.next() {
        Some((ln, l)) => match l.split_whitespace().collect::<Vec<_>>()[..] {
            ["family", name] => {
                check_ident(ln, name)?;
                name.to_string()
            }
            _ => return Err(perr(ln, "expected `family <name>`")),
        },
        None => return Err(perr(1, "empty input")),
    };
    let ground: Vec<String> = match lines.next() {
        Some((ln, l)) => {
            let mut toks = l.split_whitespace();
            if toks.next() != Some("ground") {
                return Err(perr(ln, "expected `ground <points>`"));
            }
            let pts: Vec<String> = toks.map(str::to_string).collect();
            for p in &pts {
                check_ident(ln, p)?;
            }
            if pts.len() > 128 {
                return Err(perr(ln, "at most 128 ground points"));
            }
            let mut sorted = pts.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != pts.len() {
                return Err(perr(ln, "duplicate ground point"));
            }
            pts
        }
        None => return Err(perr(1, "missing `ground` line")),
    };
    let lookup = |ln: usize, p: &str| {
        ground.iter().position(|g| g == p).ok_or_else(|| perr(ln, format!("unknown point {p:?}")))
    };
    let mut fam = SetFamily::new(name, ground.clone());
    if let Some(&(ln, l)) = lines.peek() {
        if let Some(rest) = l.strip_prefix("window") {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                lines.next();
                let mut w = 0u128;
                for p in rest.split_whitespace() {
                    w |= 1 << lookup(ln, p)?;
                }
                fam = fam.with_window(w);
            }
        }
    }
    let dyadic_points: Option<Vec<Dyadic>> = ground.iter().map(|g| Dyadic::parse(g)).collect();
    for (ln, l) in lines {
        let (head, body) = l.split_once(':').ok_or_else(|| perr(ln, "expected `<kind> <name>: ...`"))?;
        let head: Vec<&str> = head.split_whitespace().collect();
        let (kind, mname, flags) = match &head[..] {
            [kind, mname, flags @ ..] => (*kind, *mname, flags),
            _ => return Err(perr(ln, "missing member name")),
        };
        check_ident(ln, mname)?;
        let mut frontier = false;
        let mut empty = false;
        for f in flags {
            match *f {
                "frontier" => frontier = true,
                "empty" => empty = true,
                other => return Err(perr(ln, format!("unknown flag {other:?}"))),
            }
        }
        let mut set = match kind {
            "set" => {
                let mut trace = 0u128;
                for p in body.split_whitespace() {
                    trace |= 1 << lookup(ln, p)?;
                }
                NamedSet::points(mname, trace)
            }
            "span" => {
                let pts = dyadic_points.as_ref().ok_or_else(|| perr(ln, "spans need dyadic ground labels"))?;
                let mut pieces = Vec::new();
                for tok in body.split_whitespace() {
                    let (a, b) = tok.split_once("..").ok_or_else(|| perr(ln, format!("bad interval {tok:?}")))?;
                    let a = Dyadic::parse(a).ok_or_else(|| perr(ln, format!("bad dyadic {a:?}")))?;
                    let b = Dyadic::parse(b).ok_or_else(|| perr(ln, format!("bad dyadic {b:?}")))?;
                    if a >= b {
                        return Err(perr(ln, format!("empty interval {tok:?}")));
                    }
                    pieces.push((a, b));
                }
                let span = Span::new(pieces);
                let trace = pts.iter().enumerate().filter(|(_, &p)| span.contains(p)).fold(0u128, |t, (k, _)| t | 1 << k);
                NamedSet { name: mname.to_string(), trace, extent: Extent::Spans(span), frontier: false, allow_empty: false }
            }
            other => return Err(perr(ln, format!("unknown line kind {other:?}"))),
        };
        set.frontier = frontier;
        set.allow_empty = empty;
        fam.push(set).map_err(|e| match e {
            FamilyError::Parse(p) => FamilyError::Parse(p),
            other => perr(ln, other.to_string()),
        })?;
    }
    Ok(fam)
}

pub(super) fn write_family(fam: &SetFamily) -> String {
    let mut out = format!("family {}\nground {}\n", fam.name, fam.ground().join(" "));
    let full = fam.ground().iter().enumerate().fold(0u128, |t, (k, _)| t | 1 << k);
    if fam.window() != full {
        out.push_str(format!("window {}", fam.point_labels(fam.window()).join(" ")).trim_end());
        out.push('\n');
    }
    for m in fam.members() {
        let mut head = m.name.clone();
        if m.frontier {
            head.push_str(" frontier");
        }
        if m.allow_empty {
            head.push_str(" empty");
        }
        match &m.extent {
            Extent::Points => {
                let pts = fam.point_labels(m.trace);
                out.push_str(&format!("set {head}:"));
                for p in pts {
                    out.push(' ');
                    out.push_str(&p);
                }
            }
            Extent::Spans(s) => {
                out.push_str(&format!("span {head}:"));
                for (a, b) in s.pieces() {
                    out.push_str(&format!(" {a}..{b}"));
                }
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::builtin_family;

    const SRC: &str = "family f\nground 1 2 3\nwindow 1 2\nset a: 1 2\nset b frontier: 2 3\nset e empty:\n";

    #[test]
    fn parses_flags_and_window() {
        let f = parse_family(SRC).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.window(), 0b011);
        assert!(f.member(1).frontier);
        assert_eq!(f.member(2).trace, 0);
        assert_eq!(parse_family(&f.to_text()).unwrap(), f);
    }

    #[test]
    fn builtins_round_trip() {
        for name in ["dyadic", "dyadic-unions"] {
            let f = builtin_family(name).unwrap();
            assert_eq!(parse_family(&f.to_text()).unwrap(), f);
        }
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "family f\nground 1\nset a: 2\n",
            "family f\nground 1\nset a:\n",
            "family f\nground 1\nset a: 1\nset a: 1\n",
            "family f\nground x\nspan a: 0..1\n",
            "family f\nground 0 1/2\nset a: 0\nspan b: 0..1/2\n",
            "family f\nground 1\nset a odd: 1\n",
            "ground 1\n",
        ] {
            assert!(matches!(parse_family(bad), Err(FamilyError::Parse(_))), "{bad:?}");
        }
    }
}
