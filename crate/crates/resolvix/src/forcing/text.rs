//! Text formats for conditions, candidate fragments and dense-set schedules.
//!
//! ```text
//! A: (0,0) (1,1)
//! LE: (0,0)<(1,1)
//! I: 4
//! T 4: (0,0) (1,1)
//! F: {4,8}=2
//! G: ((0,0),4)=2
//! ```
//!
//! Sections may repeat; their contents accumulate. The order is taken as
//! written (no closure), so invalid inputs stay visible to the validator.
//! Fragments add `LATE:` (points that entered at or after the first witness
//! step) and `BRANCHING: <k>`.

use std::collections::BTreeSet;

use super::run::{CandidateFragment, DenseSpec};
use super::{pair_key, Condition};
use crate::grid::GridElem;
use crate::text::{content_lines, ParseError};

fn elem(ln: usize, tok: &str) -> Result<GridElem, ParseError> {
    GridElem::parse(tok).ok_or_else(|| ParseError::new(ln, format!("expected a grid point `(a,n)`, got {tok:?}")))
}

fn num(ln: usize, tok: &str) -> Result<usize, ParseError> {
    tok.parse::<usize>()
        .map_err(|_| ParseError::new(ln, format!("expected a natural number, got {tok:?}")))
}

fn index_list(ln: usize, rest: &str) -> Result<Vec<usize>, ParseError> {
    rest.split_whitespace().map(|t| num(ln, t)).collect()
}

/// Applies one condition line; returns `false` if the line is not a
/// condition section.
fn condition_line(c: &mut Condition, ln: usize, line: &str) -> Result<bool, ParseError> {
    if let Some(rest) = line.strip_prefix("A:") {
        for t in rest.split_whitespace() {
            c.points.insert(elem(ln, t)?);
        }
    } else if let Some(rest) = line.strip_prefix("LE:") {
        for t in rest.split_whitespace() {
            let (x, y) = t
                .split_once('<')
                .ok_or_else(|| ParseError::new(ln, format!("expected `(a,n)<(b,m)`, got {t:?}")))?;
            c.order.insert((elem(ln, x)?, elem(ln, y)?));
        }
    } else if let Some(rest) = line.strip_prefix("I:") {
        c.indices.extend(index_list(ln, rest)?);
    } else if let Some(rest) = line.strip_prefix("T ") {
        let (a, pts) = rest
            .split_once(':')
            .ok_or_else(|| ParseError::new(ln, "expected `T <index>: <points>`"))?;
        let a = num(ln, a.trim())?;
        let tree = c.trees.entry(a).or_default();
        for t in pts.split_whitespace() {
            tree.insert(elem(ln, t)?);
        }
    } else if let Some(rest) = line.strip_prefix("F:") {
        for t in rest.split_whitespace() {
            let bad = || ParseError::new(ln, format!("expected `{{a,b}}=m`, got {t:?}"));
            let (pair, m) = t.strip_prefix('{').and_then(|s| s.split_once("}=")).ok_or_else(bad)?;
            let (a, b) = pair.split_once(',').ok_or_else(bad)?;
            let (a, b) = (num(ln, a)?, num(ln, b)?);
            if a == b {
                return Err(ParseError::new(ln, format!("f needs two distinct indices, got {t:?}")));
            }
            if c.f.insert(pair_key(a, b), num(ln, m)?).is_some() {
                return Err(ParseError::new(ln, format!("f defined twice on {{{a},{b}}}")));
            }
        }
    } else if let Some(rest) = line.strip_prefix("G:") {
        for t in rest.split_whitespace() {
            let bad = || ParseError::new(ln, format!("expected `((a,n),b)=m`, got {t:?}"));
            let (inner, m) = t.strip_prefix('(').and_then(|s| s.rsplit_once(")=")).ok_or_else(bad)?;
            let (x, a) = inner.rsplit_once(',').ok_or_else(bad)?;
            let key = (elem(ln, x)?, num(ln, a)?);
            if c.g.insert(key, num(ln, m)?).is_some() {
                return Err(ParseError::new(ln, format!("g defined twice on ({},{})", key.0, key.1)));
            }
        }
    } else {
        return Ok(false);
    }
    Ok(true)
}

pub fn parse_condition(src: &str) -> Result<Condition, ParseError> {
    let mut c = Condition::empty();
    for (ln, line) in content_lines(src) {
        if !condition_line(&mut c, ln, line)? {
            return Err(ParseError::new(ln, format!("unrecognised line {line:?}")));
        }
    }
    c.normalize();
    Ok(c)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| format!(" {}", x.to_string())).collect()
}

pub(super) fn write_condition(c: &Condition) -> String {
    let mut out = format!("A:{}\n", join(&c.points));
    out.push_str(&format!("LE:{}\n", join(c.order.iter().map(|(x, y)| format!("{x}<{y}")))));
    out.push_str(&format!("I:{}\n", join(&c.indices)));
    for (a, t) in &c.trees {
        out.push_str(&format!("T {a}:{}\n", join(t)));
    }
    if !c.f.is_empty() {
        out.push_str(&format!("F:{}\n", join(c.f.iter().map(|((a, b), m)| format!("{{{a},{b}}}={m}")))));
    }
    if !c.g.is_empty() {
        out.push_str(&format!("G:{}\n", join(c.g.iter().map(|((x, a), m)| format!("({x},{a})={m}")))));
    }
    out
}

pub fn parse_fragment(src: &str) -> Result<CandidateFragment, ParseError> {
    let mut c = Condition::empty();
    let mut late = BTreeSet::new();
    let mut branching = None;
    for (ln, line) in content_lines(src) {
        if condition_line(&mut c, ln, line)? {
            continue;
        }
        if let Some(rest) = line.strip_prefix("LATE:") {
            for t in rest.split_whitespace() {
                late.insert(elem(ln, t)?);
            }
        } else if let Some(rest) = line.strip_prefix("BRANCHING:") {
            if branching.replace(num(ln, rest.trim())?).is_some() {
                return Err(ParseError::new(ln, "BRANCHING given twice"));
            }
        } else {
            return Err(ParseError::new(ln, format!("unrecognised line {line:?}")));
        }
    }
    c.normalize();
    Ok(CandidateFragment { condition: c, late, branching: branching.unwrap_or(CandidateFragment::DEFAULT_BRANCHING) })
}

pub(super) fn write_fragment(f: &CandidateFragment) -> String {
    let mut out = write_condition(&f.condition);
    out.push_str(&format!("LATE:{}\n", join(&f.late)));
    out.push_str(&format!("BRANCHING: {}\n", f.branching));
    out
}

/// Schedule lines:
///
/// ```text
/// add-point <γ> [(a,n)] [above (a,n)]
/// add-tree-root <γ> <ζ>
/// define-f <α> <β>
/// define-g (a,n) <α>
/// g5 <α> <β>
/// ```
pub fn parse_schedule(src: &str) -> Result<Vec<DenseSpec>, ParseError> {
    let mut out = Vec::new();
    for (ln, line) in content_lines(src) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let spec = match toks.as_slice() {
            ["add-point", g, rest @ ..] => {
                let gamma = num(ln, g)?;
                let (point, above) = match rest {
                    [] => (None, None),
                    [p] => (Some(elem(ln, p)?), None),
                    ["above", a] => (None, Some(elem(ln, a)?)),
                    [p, "above", a] => (Some(elem(ln, p)?), Some(elem(ln, a)?)),
                    _ => return Err(ParseError::new(ln, "expected `add-point <γ> [(a,n)] [above (a,n)]`")),
                };
                DenseSpec::AddPoint { gamma, point, above }
            }
            ["add-tree-root", g, z] => DenseSpec::AddTreeRoot { gamma: num(ln, g)?, zeta: num(ln, z)? },
            ["define-f", a, b] => DenseSpec::DefineF { alpha: num(ln, a)?, beta: num(ln, b)? },
            ["define-g", x, a] => DenseSpec::DefineG { x: elem(ln, x)?, alpha: num(ln, a)? },
            ["g5", a, b] => DenseSpec::G5Witness { alpha: num(ln, a)?, beta: num(ln, b)? },
            _ => return Err(ParseError::new(ln, format!("unrecognised schedule line {line:?}"))),
        };
        out.push(spec);
    }
    Ok(out)
}

pub fn write_schedule(specs: &[DenseSpec]) -> String {
    specs.iter().map(|s| format!("{s}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "A: (0,0) (1,1) (5,0)\nLE: (0,0)<(1,1)\nI: 4 8\nT 4: (0,0) (1,1)\nT 8: (5,0)\nF: {4,8}=2\nG: ((0,0),8)=1\n";

    #[test]
    fn condition_round_trip() {
        let c = parse_condition(SAMPLE).unwrap();
        assert_eq!(c.points.len(), 3);
        assert_eq!(c.get_f(8, 4), Some(2));
        assert_eq!(c.g[&(GridElem::new(0, 0), 8)], 1);
        assert_eq!(c.to_text(), SAMPLE);
        assert_eq!(parse_condition(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn condition_errors() {
        assert!(parse_condition("A: (0,0\n").is_err());
        assert!(parse_condition("F: {4,4}=1\n").is_err());
        assert!(parse_condition("F: {4,8}=1 {8,4}=2\n").is_err());
        assert!(parse_condition("LE: (0,0)(1,1)\n").is_err());
        assert!(parse_condition("B: 1\n").is_err());
        assert_eq!(parse_condition("# nothing\n").unwrap(), Condition::empty());
    }

    #[test]
    fn schedule_round_trip() {
        let src = "add-point 4\nadd-point 4 (0,0)\nadd-point 4 above (0,0)\nadd-point 4 (1,1) above (0,0)\n\
                   add-tree-root 8 2\ndefine-f 4 8\ndefine-g (0,0) 4\ng5 4 8\n";
        let s = parse_schedule(src).unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(write_schedule(&s), src);
        assert!(parse_schedule("add-point x\n").is_err());
        assert!(parse_schedule("jump 4\n").is_err());
    }
}
