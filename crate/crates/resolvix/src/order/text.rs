//! `poset` text format: `poset <name>`, `elem <id>` lines, `le <id> <id>` lines.

use std::collections::BTreeMap;

use super::{FinitePoset, OrderError};
use crate::text::{check_ident, content_lines, ParseError};

/// A parsed but unchecked relation: pairs are neither closed nor checked
/// for antisymmetry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub labels: Vec<String>,
    pub pairs: Vec<(usize, usize)>,
}

impl Relation {
    pub fn into_poset(self) -> Result<FinitePoset, OrderError> {
        FinitePoset::from_pairs(self.name, self.labels, &self.pairs)
    }
}

pub fn parse_relation(src: &str) -> Result<Relation, ParseError> {
    let mut lines = content_lines(src);
    let name = match lines.next() {
        Some((ln, l)) => match l.split_whitespace().collect::<Vec<_>>()[..] {
            ["poset", name] => {
                check_ident(ln, name)?;
                name.to_string()
            }
            _ => return Err(ParseError::new(ln, "expected `poset <name>`")),
        },
        None => return Err(ParseError::new(1, "empty input")),
    };
    let mut labels = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut pairs = Vec::new();
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks[..] {
            ["elem", id] => {
                check_ident(ln, id)?;
                if !pairs.is_empty() {
                    return Err(ParseError::new(ln, "`elem` after `le` lines"));
                }
                if index.insert(id.to_string(), labels.len()).is_some() {
                    return Err(ParseError::new(ln, format!("duplicate element {id:?}")));
                }
                labels.push(id.to_string());
            }
            ["le", a, b] => {
                let look = |id: &str| {
                    index.get(id).copied().ok_or_else(|| ParseError::new(ln, format!("unknown element {id:?}")))
                };
                pairs.push((look(a)?, look(b)?));
            }
            _ => return Err(ParseError::new(ln, format!("unrecognised line {l:?}"))),
        }
    }
    Ok(Relation { name, labels, pairs })
}

pub fn parse_poset(src: &str) -> Result<FinitePoset, OrderError> {
    parse_relation(src)?.into_poset()
}

pub(super) fn write_poset(p: &FinitePoset) -> String {
    let mut out = format!("poset {}\n", p.name);
    for l in &p.labels {
        out.push_str(&format!("elem {l}\n"));
    }
    for (a, b) in p.covers() {
        out.push_str(&format!("le {} {}\n", p.labels[a], p.labels[b]));
    }
    out
}
