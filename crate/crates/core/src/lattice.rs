//! Geometry of the truncated, laterally periodic even sublattice.
//!
//! Nodes are addressed by `(row, col)` with `row` the depth (1 at the top)
//! and `col` in `[0, width)`. The lattice coordinate is
//! `y = 1 - row`, `x = 2 col + (row - 1) mod 2`, taken modulo `2 width`,
//! so `x + y` is always even. Parents sit at `(x ± 1, y + 1)` and children
//! at `(x ± 1, y - 1)`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    pub row: usize,
    pub col: usize,
}

impl NodeId {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Lateral boundary handling. Only periodic wrap is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridGeometry {
    width: usize,
    depth: usize,
    boundary: Boundary,
}

impl GridGeometry {
    /// Width must be even and at least 4 so that the diagonal relation wraps
    /// consistently and no node is its own double parent.
    pub fn new(width: usize, depth: usize) -> Result<Self> {
        if width < 4 || width % 2 != 0 {
            return Err(Error::Config {
                key: "width",
                reason: format!("must be even and >= 4 (got {width})"),
            });
        }
        if depth == 0 {
            return Err(Error::Config {
                key: "depth",
                reason: "must be >= 1".into(),
            });
        }
        Ok(Self {
            width,
            depth,
            boundary: Boundary::Periodic,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn node_count(&self) -> usize {
        self.width * self.depth
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.row >= 1 && v.row <= self.depth && v.col < self.width
    }

    pub fn check(&self, v: NodeId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::Address {
                row: v.row,
                col: v.col,
                width: self.width,
                depth: self.depth,
            })
        }
    }

    /// Dense row-major index, rows starting at 1.
    #[inline]
    pub fn index(&self, v: NodeId) -> usize {
        (v.row - 1) * self.width + v.col
    }

    #[inline]
    pub fn node(&self, index: usize) -> NodeId {
        NodeId::new(index / self.width + 1, index % self.width)
    }

    /// Lattice coordinate `(x, y)` with `x` reduced modulo `2 width`.
    pub fn coords(&self, v: NodeId) -> (i64, i64) {
        let x = 2 * v.col as i64 + ((v.row as i64 - 1) & 1);
        (x, 1 - v.row as i64)
    }

    /// Inverse of [`coords`](Self::coords); `x` may be any integer of the
    /// right parity and is wrapped laterally.
    pub fn from_coords(&self, x: i64, y: i64) -> Result<NodeId> {
        let row = 1 - y;
        let period = 2 * self.width as i64;
        if row < 1 || row > self.depth as i64 || (x + y).rem_euclid(2) != 0 {
            return Err(Error::Argument(format!(
                "({x}, {y}) is not an even-sublattice point of the grid"
            )));
        }
        let xr = x.rem_euclid(period);
        Ok(NodeId::new(row as usize, (xr / 2) as usize))
    }

    /// Column of the left parent of a node in `row`, which may be 1: row 0
    /// then denotes the virtual row directly above the lattice (used by the
    /// dual web, whose paths terminate there).
    #[inline]
    pub(crate) fn left_parent_col(&self, row: usize, col: usize) -> usize {
        if row % 2 == 1 {
            (col + self.width - 1) % self.width
        } else {
            col
        }
    }

    #[inline]
    pub(crate) fn left_child_col(&self, row: usize, col: usize) -> usize {
        if row % 2 == 1 {
            (col + self.width - 1) % self.width
        } else {
            col
        }
    }

    /// Left then right parent; empty for the top row.
    pub fn parents(&self, v: NodeId) -> Result<Vec<NodeId>> {
        self.check(v)?;
        if v.row == 1 {
            return Ok(vec![]);
        }
        let left = self.left_parent_col(v.row, v.col);
        Ok(vec![
            NodeId::new(v.row - 1, left),
            NodeId::new(v.row - 1, (left + 1) % self.width),
        ])
    }

    /// Left then right child; empty for the bottom (sink) row.
    pub fn children(&self, v: NodeId) -> Result<Vec<NodeId>> {
        self.check(v)?;
        if v.row == self.depth {
            return Ok(vec![]);
        }
        let left = self.left_child_col(v.row, v.col);
        Ok(vec![
            NodeId::new(v.row + 1, left),
            NodeId::new(v.row + 1, (left + 1) % self.width),
        ])
    }

    /// `v` together with every ancestor whose output reaches `v` within
    /// `steps` seconds (one row per second).
    pub fn influence_cone(&self, v: NodeId, steps: usize) -> Result<BTreeSet<NodeId>> {
        self.check(v)?;
        let mut cone = BTreeSet::from([v]);
        let mut frontier = vec![v];
        for _ in 0..steps {
            let mut next = BTreeSet::new();
            for w in &frontier {
                for p in self.parents(*w)? {
                    next.insert(p);
                }
            }
            if next.is_empty() {
                break;
            }
            cone.extend(next.iter().copied());
            frontier = next.into_iter().collect();
        }
        Ok(cone)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(w: usize, k: usize) -> GridGeometry {
        GridGeometry::new(w, k).unwrap()
    }

    #[test]
    fn rejects_bad_widths() {
        for w in [0, 1, 2, 3, 5, 7] {
            assert!(GridGeometry::new(w, 3).is_err(), "width {w}");
        }
        assert!(GridGeometry::new(4, 0).is_err());
        assert!(GridGeometry::new(4, 1).is_ok());
    }

    #[test]
    fn parents_of_row_two() {
        let g = g(6, 3);
        let ps = g.parents(NodeId::new(2, 2)).unwrap();
        assert_eq!(ps, vec![NodeId::new(1, 2), NodeId::new(1, 3)]);
        assert!(g.parents(NodeId::new(1, 0)).unwrap().is_empty());
    }

    #[test]
    fn parents_wrap() {
        let g = g(6, 3);
        let ps = g.parents(NodeId::new(2, 5)).unwrap();
        assert!(ps.iter().any(|p| p.col == 0));
        let ps = g.parents(NodeId::new(3, 0)).unwrap();
        assert_eq!(ps, vec![NodeId::new(2, 5), NodeId::new(2, 0)]);
    }

    #[test]
    fn children_and_sink() {
        let g = g(6, 3);
        let cs = g.children(NodeId::new(1, 0)).unwrap();
        assert_eq!(cs.len(), 2);
        assert!(cs.iter().all(|c| c.row == 2));
        assert!(g.children(NodeId::new(3, 4)).unwrap().is_empty());
    }

    #[test]
    fn invalid_nodes_are_address_errors() {
        let g = g(6, 3);
        for v in [NodeId::new(0, 0), NodeId::new(4, 0), NodeId::new(1, 6)] {
            assert!(matches!(g.parents(v), Err(Error::Address { .. })));
            assert!(matches!(g.children(v), Err(Error::Address { .. })));
        }
    }

    #[test]
    fn adjacency_duality_exhaustive() {
        for (w, k) in [(4, 4), (6, 5), (8, 3), (10, 7)] {
            let g = g(w, k);
            for i in 0..g.node_count() {
                let v = g.node(i);
                for c in g.children(v).unwrap() {
                    assert!(g.parents(c).unwrap().contains(&v));
                }
                let ps = g.parents(v).unwrap();
                if v.row >= 2 {
                    assert_eq!(ps.len(), 2);
                    assert_ne!(ps[0], ps[1]);
                }
                for p in ps {
                    assert!(g.children(p).unwrap().contains(&v));
                }
            }
        }
    }

    #[test]
    fn coordinates_match_diagonal_relation() {
        let g = g(8, 6);
        let period = 16;
        for i in 0..g.node_count() {
            let v = g.node(i);
            let (x, y) = g.coords(v);
            assert_eq!((x + y).rem_euclid(2), 0);
            assert_eq!(g.from_coords(x, y).unwrap(), v);
            let ps = g.parents(v).unwrap();
            if !ps.is_empty() {
                let (lx, ly) = g.coords(ps[0]);
                let (rx, ry) = g.coords(ps[1]);
                assert_eq!(ly, y + 1);
                assert_eq!(ry, y + 1);
                assert_eq!(lx, (x - 1).rem_euclid(period));
                assert_eq!(rx, (x + 1).rem_euclid(period));
            }
        }
    }

    #[test]
    fn cone_sizes() {
        let g = g(20, 8);
        assert_eq!(g.influence_cone(NodeId::new(1, 3), 5).unwrap().len(), 1);
        let c = g.influence_cone(NodeId::new(3, 3), 1).unwrap();
        assert_eq!(c.len(), 3);
        for k in 1..=8usize {
            let v = NodeId::new(k, 7);
            for s in 0..12usize {
                let expect = if s < k { (s + 1) * (s + 2) / 2 } else { k * (k + 1) / 2 };
                assert_eq!(g.influence_cone(v, s).unwrap().len(), expect, "k={k} s={s}");
            }
        }
    }
}
