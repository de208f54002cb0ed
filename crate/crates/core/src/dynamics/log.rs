use std::collections::VecDeque;

use bitvec::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{GridGeometry, NodeId};

/// Direction bits `d_v(n)` (set = left), one bit per node per step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionLog {
    geometry: GridGeometry,
    first: u64,
    window: Option<usize>,
    steps: VecDeque<BitVec>,
}

impl DirectionLog {
    pub(crate) fn new(geometry: GridGeometry, first: u64, window: Option<usize>) -> Self {
        Self {
            geometry,
            first,
            window,
            steps: VecDeque::new(),
        }
    }

    pub(crate) fn push(&mut self, time: u64, went_left: &[bool]) {
        debug_assert_eq!(time, self.first + self.steps.len() as u64);
        self.steps.push_back(went_left.iter().collect());
        if let Some(cap) = self.window {
            while self.steps.len() > cap {
                self.steps.pop_front();
                self.first += 1;
            }
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// Earliest and latest recorded times, if any.
    pub fn span(&self) -> Option<(u64, u64)> {
        (!self.steps.is_empty()).then(|| (self.first, self.first + self.steps.len() as u64 - 1))
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    fn bits(&self, n: u64) -> Result<&BitSlice> {
        let range = || match self.span() {
            Some((a, b)) => format!("[{a}, {b}]"),
            None => "(empty log)".into(),
        };
        if n < self.first || n >= self.first + self.steps.len() as u64 {
            return Err(Error::Range {
                what: "time",
                value: n as i64,
                range: range(),
            });
        }
        Ok(&self.steps[(n - self.first) as usize])
    }

    pub fn went_left(&self, v: NodeId, n: u64) -> Result<bool> {
        self.geometry.check(v)?;
        Ok(self.bits(n)?[self.geometry.index(v)])
    }

    /// The configuration `ω_n`, defined for recorded `n >= 1`.
    pub fn edge_configuration(&self, n: u64) -> Result<EdgeConfiguration> {
        Ok(EdgeConfiguration {
            geometry: self.geometry,
            time: n,
            left: self.bits(n)?.to_bitvec(),
        })
    }
}

/// `ω_n`: each node's edge to its chosen child is occupied, the other vacant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeConfiguration {
    geometry: GridGeometry,
    time: u64,
    left: BitVec,
}

impl EdgeConfiguration {
    pub fn from_directions(geometry: GridGeometry, time: u64, went_left: &[bool]) -> Result<Self> {
        if went_left.len() != geometry.node_count() {
            return Err(Error::Argument(format!(
                "expected {} directions, got {}",
                geometry.node_count(),
                went_left.len()
            )));
        }
        Ok(Self {
            geometry,
            time,
            left: went_left.iter().collect(),
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    #[inline]
    pub fn went_left(&self, v: NodeId) -> bool {
        self.left[self.geometry.index(v)]
    }

    #[inline]
    pub(crate) fn went_left_at(&self, index: usize) -> bool {
        self.left[index]
    }

    /// Occupancy of the edge from `v` to `child`; `None` if `child` is not a
    /// child of `v` (the sink row has no child edges).
    pub fn occupied(&self, v: NodeId, child: NodeId) -> Option<bool> {
        let cs = self.geometry.children(v).ok()?;
        let pos = cs.iter().position(|c| *c == child)?;
        Some((pos == 0) == self.went_left(v))
    }

    /// The child `v` routes to, or `None` in the sink row.
    pub fn target(&self, v: NodeId) -> Option<NodeId> {
        let cs = self.geometry.children(v).ok()?;
        cs.get(if self.went_left(v) { 0 } else { 1 }).copied()
    }

    /// Occupied edges `(parent, child)` of every non-sink node.
    pub fn occupied_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.geometry.node_count()).filter_map(move |i| {
            let v = self.geometry.node(i);
            self.target(v).map(|c| (v, c))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::init;

    #[test]
    fn edge_rule() {
        let g = GridGeometry::new(6, 3).unwrap();
        let mut dirs = vec![false; 18];
        dirs[1] = true;
        let om = EdgeConfiguration::from_directions(g, 1, &dirs).unwrap();
        let v = NodeId::new(1, 1);
        let [lc, rc] = g.children(v).unwrap()[..] else { panic!() };
        assert_eq!(om.occupied(v, lc), Some(true));
        assert_eq!(om.occupied(v, rc), Some(false));
        let u = NodeId::new(1, 2);
        let [lc, rc] = g.children(u).unwrap()[..] else { panic!() };
        assert_eq!(om.occupied(u, lc), Some(false));
        assert_eq!(om.occupied(u, rc), Some(true));
        assert_eq!(om.occupied_edges().count(), 12);
    }

    #[test]
    fn log_range_errors() {
        let g = GridGeometry::new(8, 3).unwrap();
        let mut s = init::<u64>(g, 1.0, 1, 3).unwrap();
        s.enable_log(None);
        s.run(5, &mut []).unwrap();
        let log = s.log().unwrap();
        assert_eq!(log.span(), Some((1, 5)));
        assert!(log.edge_configuration(0).is_err());
        assert!(log.edge_configuration(6).is_err());
        let om = log.edge_configuration(5).unwrap();
        for i in 0..g.node_count() {
            assert_eq!(om.went_left(g.node(i)), s.went_left()[i]);
        }
    }

    #[test]
    fn windowed_log() {
        let g = GridGeometry::new(4, 2).unwrap();
        let mut s = init::<u64>(g, 1.0, 1, 3).unwrap();
        s.enable_log(Some(3));
        s.run(10, &mut []).unwrap();
        let log = s.log().unwrap();
        assert_eq!(log.span(), Some((8, 10)));
        assert!(log.went_left(NodeId::new(1, 0), 7).is_err());
        assert!(log.went_left(NodeId::new(1, 0), 9).is_ok());
    }

    #[test]
    fn fixed_time_directions_are_fair() {
        // Every fixed-time direction is a fair coin whatever the history.
        let g = GridGeometry::new(1000, 6).unwrap();
        let mut s = init::<u64>(g, 0.5, 1, 21).unwrap();
        s.enable_log(None);
        s.run(200, &mut []).unwrap();
        let log = s.log().unwrap();
        for n in [1u64, 50, 200] {
            let om = log.edge_configuration(n).unwrap();
            let lefts = (0..g.node_count()).filter(|&i| om.went_left_at(i)).count();
            let frac = lefts as f64 / g.node_count() as f64;
            // SE is ~0.0065 for 6000 i.i.d fair bits.
            assert!((frac - 0.5).abs() < 0.03, "n={n} frac={frac}");
        }
    }
}
