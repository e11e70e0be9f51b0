//! Infinite orders enumerated by index.

use super::{Elem, FinitePoset, Order};

/// The naturals under their usual order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Chain;

impl Order for Chain {
    fn name(&self) -> String {
        "chain".into()
    }
    fn size(&self) -> Option<usize> {
        None
    }
    fn le(&self, a: Elem, b: Elem) -> bool {
        a <= b
    }
    fn succ(&self, a: Elem) -> Option<Elem> {
        Some(a + 1)
    }
    fn label(&self, a: Elem) -> String {
        a.to_string()
    }
    fn down_bound(&self, a: Elem) -> Option<usize> {
        Some(a + 1)
    }
}

/// The full binary tree in heap order: root 0, children `2i+1` and `2i+2`,
/// ordered by the ancestor relation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Tree2;

impl Order for Tree2 {
    fn name(&self) -> String {
        "tree2".into()
    }
    fn size(&self) -> Option<usize> {
        None
    }
    fn le(&self, a: Elem, mut b: Elem) -> bool {
        while b > a {
            b = (b - 1) / 2;
        }
        a == b
    }
    fn succ(&self, a: Elem) -> Option<Elem> {
        Some(2 * a + 1)
    }
    fn label(&self, a: Elem) -> String {
        let mut path = Vec::new();
        let mut x = a;
        while x > 0 {
            path.push(if x % 2 == 1 { '0' } else { '1' });
            x = (x - 1) / 2;
        }
        path.push('r');
        path.iter().rev().collect()
    }
    fn down_bound(&self, a: Elem) -> Option<usize> {
        Some(a + 1)
    }
}

/// Pairs `(column, level)` of naturals enumerated along diagonals, with
/// `x < y` iff both coordinates increase strictly.
#[derive(Debug, Clone, Copy, Default)]
pub struct Grid;

impl Grid {
    pub fn index(alpha: usize, n: usize) -> Elem {
        let d = alpha + n;
        d * (d + 1) / 2 + alpha
    }

    pub fn coords(e: Elem) -> (usize, usize) {
        let mut d = 0;
        while (d + 1) * (d + 2) / 2 <= e {
            d += 1;
        }
        let alpha = e - d * (d + 1) / 2;
        (alpha, d - alpha)
    }
}

impl Order for Grid {
    fn name(&self) -> String {
        "grid".into()
    }
    fn size(&self) -> Option<usize> {
        None
    }
    fn le(&self, a: Elem, b: Elem) -> bool {
        let (xa, na) = Grid::coords(a);
        let (xb, nb) = Grid::coords(b);
        a == b || (xa < xb && na < nb)
    }
    fn succ(&self, a: Elem) -> Option<Elem> {
        let (x, n) = Grid::coords(a);
        Some(Grid::index(x + 1, n + 1))
    }
    fn label(&self, a: Elem) -> String {
        let (x, n) = Grid::coords(a);
        format!("({x},{n})")
    }
    fn down_bound(&self, a: Elem) -> Option<usize> {
        let (x, n) = Grid::coords(a);
        let d = x + n;
        Some((d + 1) * (d + 2) / 2)
    }
}

/// Resolves a builtin order by name: `chain`, `tree2`, `grid` or
/// `grid-builder:<config>` (see [`crate::grid::GridConfig::from_spec`]).
pub fn builtin(name: &str) -> Result<Box<dyn Order + Send + Sync>, String> {
    match name {
        "chain" => Ok(Box::new(Chain)),
        "tree2" => Ok(Box::new(Tree2)),
        "grid" => Ok(Box::new(Grid)),
        _ => match name.strip_prefix("grid-builder:") {
            Some(cfg) => {
                let cfg = crate::grid::GridConfig::from_spec(cfg)?;
                let built = crate::grid::build_grid(&cfg).map_err(|e| e.to_string())?;
                let poset: FinitePoset = built.poset();
                Ok(Box::new(poset))
            }
            None => Err(format!("unknown builtin order {name:?}")),
        },
    }
}
