//! One-step extensions of a condition and the amalgamation that produces a
//! witness for the quadruple axiom.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{grid_le, is_limit, leq, oplus, pair_key, transitive_closure, twins, validate, Condition, ForcingError};
use crate::grid::GridElem;

/// Validates `r` and checks that it extends each of `olds`.
fn certify(r: Condition, olds: &[&Condition]) -> Result<Condition, ForcingError> {
    let v = validate(&r);
    if !v.is_empty() {
        return Err(ForcingError::Invalid(v));
    }
    for q in olds {
        let l = leq(&r, q);
        if !l.is_empty() {
            return Err(ForcingError::NotExtension(l));
        }
    }
    Ok(r)
}

fn check_index(gamma: usize) -> Result<(), ForcingError> {
    if !is_limit(gamma) {
        return Err(ForcingError::BadIndex { alpha: gamma, reason: "not a limit index".into() });
    }
    Ok(())
}

/// Adds `y` as an isolated element of `T_γ`.
pub fn extend_add_point(p: &Condition, y: GridElem, gamma: usize) -> Result<Condition, ForcingError> {
    if p.points.contains(&y) {
        return Err(ForcingError::AlreadyPresent(y));
    }
    check_index(gamma)?;
    if y.alpha >= gamma {
        return Err(ForcingError::OutsideColumn { x: y, alpha: gamma });
    }
    let mut r = p.clone();
    r.points.insert(y);
    r.indices.insert(gamma);
    r.trees.entry(gamma).or_default().insert(y);
    certify(r, &[p])
}

/// Adds `b` directly above `a` in `T_γ`; the order becomes the one
/// generated by the old order and `a ≺ b`.
pub fn extend_uplus(p: &Condition, a: GridElem, b: GridElem, gamma: usize) -> Result<Condition, ForcingError> {
    if !p.tree(gamma).contains(&a) {
        return Err(ForcingError::NotInTree { x: a, alpha: gamma });
    }
    if p.points.contains(&b) {
        return Err(ForcingError::AlreadyPresent(b));
    }
    if a == b || !grid_le(a, b) {
        return Err(ForcingError::NotGridBelow { a, b });
    }
    if b.alpha >= gamma {
        return Err(ForcingError::OutsideColumn { x: b, alpha: gamma });
    }
    let mut r = p.clone();
    r.points.insert(b);
    r.order.insert((a, b));
    r.order = transitive_closure(&r.order);
    r.trees.entry(gamma).or_default().insert(b);
    certify(r, &[p])
}

/// Defines `f` on `{α,β}` as the least level empty in both trees.
pub fn extend_define_f(p: &Condition, alpha: usize, beta: usize) -> Result<Condition, ForcingError> {
    if alpha == beta {
        return Err(ForcingError::BadIndex { alpha, reason: "f needs two distinct indices".into() });
    }
    for a in [alpha, beta] {
        if !p.indices.contains(&a) {
            return Err(ForcingError::UnknownIndex(a));
        }
    }
    if p.get_f(alpha, beta).is_some() {
        return Err(ForcingError::AlreadyDefinedF { alpha, beta });
    }
    let mut r = p.clone();
    r.f.insert(pair_key(alpha, beta), p.height(alpha).max(p.height(beta)));
    certify(r, &[p])
}

/// Defines `g` on `(x,α)` as the least empty level of `T_α`.
pub fn extend_define_g(p: &Condition, x: GridElem, alpha: usize) -> Result<Condition, ForcingError> {
    if !p.points.contains(&x) {
        return Err(ForcingError::UnknownPoint(x));
    }
    if !p.indices.contains(&alpha) {
        return Err(ForcingError::UnknownIndex(alpha));
    }
    if p.g.contains_key(&(x, alpha)) {
        return Err(ForcingError::AlreadyDefinedG { x, alpha });
    }
    let mut r = p.clone();
    r.g.insert((x, alpha), p.height(alpha));
    certify(r, &[p])
}

/// A tree index of one twin with an increasing quadruple inside its tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Side {
    pub alpha: usize,
    /// `x ≺ y ≺ z ≺ w`.
    pub quad: [GridElem; 4],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Amalgamation {
    pub r: Condition,
    pub low: Side,
    pub high: Side,
    pub t: GridElem,
    /// `r` restricted to the first twin's support and `t` equals the
    /// one-point extension of the first twin by `t` above its `y`.
    pub key_low: bool,
    /// Same for the second twin with `t` above its `w`.
    pub key_high: bool,
    /// `[x,t] = [x,y] ∪ {t}` on the first side.
    pub low_identity: bool,
    /// `[z,t] = [z,w] ∪ {t}` on the second side.
    pub high_identity: bool,
}

fn check_side(p: &Condition, side: &Side, other: &Condition) -> Result<(), ForcingError> {
    if !p.indices.contains(&side.alpha) || other.support().contains(&side.alpha) {
        return Err(ForcingError::Quadruple(format!("index {} is not private to its twin", side.alpha)));
    }
    let tree = p.tree(side.alpha);
    for (i, &x) in side.quad.iter().enumerate() {
        if !tree.contains(&x) {
            return Err(ForcingError::NotInTree { x, alpha: side.alpha });
        }
        if i > 0 && !p.lt(side.quad[i - 1], x) {
            return Err(ForcingError::Quadruple(format!("{} is not below {x}", side.quad[i - 1])));
        }
    }
    Ok(())
}

/// Amalgamates twins `p_low ⊕ p_high` and adds a fresh `t` above the low
/// side's `y` and the high side's `w`, in both trees.
pub fn amalgamate_r(
    p_low: &Condition,
    low: Side,
    p_high: &Condition,
    high: Side,
    t: GridElem,
) -> Result<Amalgamation, ForcingError> {
    twins(p_low, p_high).map_err(ForcingError::NotTwins)?;
    check_side(p_low, &low, p_high)?;
    check_side(p_high, &high, p_low)?;
    let q = oplus(p_low, p_high)?;
    if q.points.contains(&t) {
        return Err(ForcingError::NotFresh(t));
    }
    let (y, w) = (low.quad[1], high.quad[3]);
    for a in [y, w] {
        if a == t || !grid_le(a, t) {
            return Err(ForcingError::NotGridBelow { a, b: t });
        }
    }
    for alpha in [low.alpha, high.alpha] {
        if t.alpha >= alpha {
            return Err(ForcingError::OutsideColumn { x: t, alpha });
        }
    }
    let mut r = q.clone();
    r.points.insert(t);
    r.order.insert((y, t));
    r.order.insert((w, t));
    r.order = transitive_closure(&r.order);
    r.trees.entry(low.alpha).or_default().insert(t);
    r.trees.entry(high.alpha).or_default().insert(t);
    // r extends each twin but not q: cones disjoint in q meet at t.
    let r = certify(r, &[p_low, p_high])?;
    let tset: BTreeSet<GridElem> = [t].into();
    let key = |p: &Condition, a: GridElem, alpha: usize| {
        extend_uplus(p, a, t, alpha).is_ok_and(|e| r.restrict(&p.support(), &tset) == e)
    };
    let with_t = |mut s: BTreeSet<GridElem>| {
        s.insert(t);
        s
    };
    let (x, z) = (low.quad[0], high.quad[2]);
    Ok(Amalgamation {
        key_low: key(p_low, y, low.alpha),
        key_high: key(p_high, w, high.alpha),
        low_identity: r.interval(x, t) == with_t(r.interval(x, y)),
        high_identity: r.interval(z, t) == with_t(r.interval(z, w)),
        r,
        low,
        high,
        t,
    })
}
