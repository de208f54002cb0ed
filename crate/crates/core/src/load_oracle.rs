//! Independent oracles for the load law.
//!
//! Two routes to the law of `I_v(n)`:
//!
//! * geometric: the backward cluster of `v` in a single configuration,
//!   extracted either by walking the two dual paths that bound it or by a
//!   plain graph search, and a brute-force enumeration of every direction
//!   assignment in the ancestor cone;
//! * analytic: the width of the cluster is a lazy symmetric walk started at
//!   1 and killed at 0, the load is its running sum stopped at
//!   `min(τ, n, k)`, and its law is computed exactly by dynamic programming.
//!
//! Time indexing: `n` counts the rows the walk may climb, which is the law of
//! the load dispatched at flip `n`, i.e. `I_v(n-1)` in the engine's
//! convention (`I_v(0) = r`).

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::io::{self, Write};

use bitvec::prelude::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use crate::dynamics::EdgeConfiguration;
use crate::error::{Error, Result};
use crate::lattice::{GridGeometry, NodeId};

/// Largest walk horizon the u128 dynamic program supports (`4^59 < 2^128`).
pub const MAX_DP_HORIZON: usize = 60;
/// Largest ancestor cone the brute-force enumeration accepts.
pub const MAX_BRUTEFORCE_CONE: usize = 25;

/// Node of the odd (dual) sublattice. Dual row `d` sits at `y = -d`, just
/// below primal row `d`; dual row 0 is the top edge where dual paths end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DualNodeId {
    pub row: usize,
    pub col: usize,
}

/// The dual web `ω*_n`: every dual node below the top steps up-right when
/// the primal node above it routes left, and up-left otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualConfiguration {
    geometry: GridGeometry,
    time: u64,
    up_right: BitVec,
}

pub fn dual_configuration(omega: &EdgeConfiguration) -> DualConfiguration {
    let g = *omega.geometry();
    DualConfiguration {
        geometry: g,
        time: omega.time(),
        up_right: (0..g.node_count()).map(|i| omega.went_left_at(i)).collect(),
    }
}

impl DualConfiguration {
    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Lattice coordinate, `x` reduced modulo `2 width`.
    pub fn coords(&self, d: DualNodeId) -> (i64, i64) {
        let x = 2 * d.col as i64 + (d.row as i64 - 1).rem_euclid(2);
        (x, -(d.row as i64))
    }

    pub fn steps_up_right(&self, d: DualNodeId) -> Option<bool> {
        (d.row >= 1 && d.row <= self.geometry.depth())
            .then(|| self.up_right[self.geometry.index(NodeId::new(d.row, d.col))])
    }

    /// The dual node one row up along the occupied edge.
    pub fn up_target(&self, d: DualNodeId) -> Option<DualNodeId> {
        let right = self.steps_up_right(d)?;
        let lp = self.geometry.left_parent_col(d.row, d.col);
        let col = if right { (lp + 1) % self.geometry.width() } else { lp };
        Some(DualNodeId { row: d.row - 1, col })
    }

    pub fn occupied_edges(&self) -> impl Iterator<Item = (DualNodeId, DualNodeId)> + '_ {
        let g = self.geometry;
        (1..=g.depth())
            .flat_map(move |row| (0..g.width()).map(move |col| DualNodeId { row, col }))
            .filter_map(move |d| self.up_target(d).map(|t| (d, t)))
    }

    /// True if no occupied dual edge shares its midpoint with an occupied
    /// primal edge. Checked from coordinates alone.
    pub fn no_crossings(&self, omega: &EdgeConfiguration) -> bool {
        let g = self.geometry;
        let period = 4 * g.width() as i64;
        let midpoint = |(x1, y1): (i64, i64), (x2, y2): (i64, i64)| {
            // Doubled coordinates; unwrap the lateral step before reducing.
            let dx = (x2 - x1 + g.width() as i64).rem_euclid(2 * g.width() as i64) - g.width() as i64;
            ((2 * x1 + dx).rem_euclid(period), y1 + y2)
        };
        let primal: HashSet<(i64, i64)> = omega
            .occupied_edges()
            .map(|(a, b)| midpoint(g.coords(a), g.coords(b)))
            .collect();
        self.occupied_edges()
            .all(|(a, b)| !primal.contains(&midpoint(self.coords(a), self.coords(b))))
    }
}

fn check_cluster_args(omega: &EdgeConfiguration, v: NodeId) -> Result<()> {
    omega.geometry().check(v)?;
    if omega.geometry().width() < 2 * v.row {
        return Err(Error::Argument(format!(
            "cluster extraction needs width >= 2 * depth ({} < {})",
            omega.geometry().width(),
            2 * v.row
        )));
    }
    Ok(())
}

/// `C⁺_{v,n}`: `v` and every node weakly above it whose downhill path in
/// `ω_n` passes through `v`, read off as the nodes strictly between the two
/// dual paths started beside `v`.
pub fn backward_cluster(omega: &EdgeConfiguration, v: NodeId) -> Result<BTreeSet<NodeId>> {
    check_cluster_args(omega, v)?;
    let g = omega.geometry();
    let (xv, _) = g.coords(v);
    let (mut xl, mut xr) = (xv - 1, xv + 1);
    let mut dual_row = v.row - 1;
    let mut cluster = BTreeSet::new();
    let climb = |x: i64, row: usize| -> Result<i64> {
        let above = g.from_coords(x, 1 - row as i64)?;
        Ok(if omega.went_left(above) { x + 1 } else { x - 1 })
    };
    while xl < xr {
        let primal_row = dual_row + 1;
        let y = 1 - primal_row as i64;
        for x in (xl + 1..xr).step_by(2) {
            cluster.insert(g.from_coords(x, y)?);
        }
        if dual_row == 0 {
            break;
        }
        xl = climb(xl, dual_row)?;
        xr = climb(xr, dual_row)?;
        dual_row -= 1;
    }
    Ok(cluster)
}

/// Same set by breadth-first search over occupied edges restricted to rows
/// at or above `v`.
pub fn backward_cluster_search(omega: &EdgeConfiguration, v: NodeId) -> Result<BTreeSet<NodeId>> {
    check_cluster_args(omega, v)?;
    let g = omega.geometry();
    let mut seen = BTreeSet::from([v]);
    let mut queue = VecDeque::from([v]);
    while let Some(u) = queue.pop_front() {
        let mut neighbours = Vec::with_capacity(3);
        if u.row < v.row {
            neighbours.extend(omega.target(u));
        }
        for p in g.parents(u)? {
            if omega.target(p) == Some(u) {
                neighbours.push(p);
            }
        }
        for w in neighbours {
            if w.row <= v.row && seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    Ok(seen)
}

/// Exact law of a load value, keyed by load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadPmf {
    pub depth: usize,
    pub time: usize,
    pub probs: BTreeMap<u64, BigRational>,
}

impl LoadPmf {
    pub fn prob(&self, load: u64) -> BigRational {
        self.probs.get(&load).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn prob_f64(&self, load: u64) -> f64 {
        self.prob(load).to_f64().unwrap_or(0.0)
    }

    pub fn total(&self) -> BigRational {
        self.probs.values().fold(BigRational::zero(), |a, p| a + p)
    }

    pub fn mean(&self) -> BigRational {
        self.probs
            .iter()
            .fold(BigRational::zero(), |a, (l, p)| a + p * BigInt::from(*l))
    }

    pub fn max_load(&self) -> u64 {
        self.probs.keys().next_back().copied().unwrap_or(0)
    }

    /// Dense floating-point view indexed by load (index 0 unused).
    pub fn to_f64_vec(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.max_load() as usize + 1];
        for (l, p) in &self.probs {
            out[*l as usize] = p.to_f64().unwrap_or(0.0);
        }
        out
    }

    /// CSV with header `load,prob_num,prob_den,prob_float`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "load,prob_num,prob_den,prob_float")?;
        for (l, p) in &self.probs {
            writeln!(
                out,
                "{},{},{},{}",
                l,
                p.numer(),
                p.denom(),
                crate::fmt::sig9(p.to_f64().unwrap_or(f64::NAN))
            )?;
        }
        Ok(())
    }
}

/// Draws `L_{min(τ, n, k)}` from the dual-walk representation.
pub fn sample_load<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Result<u64> {
    if k == 0 || n == 0 {
        return Err(Error::Argument("sample_load needs k >= 1 and n >= 1".into()));
    }
    let horizon = k.min(n);
    let (mut width, mut load) = (1i64, 1u64);
    for _ in 2..=horizon {
        let right: bool = rng.random();
        let left: bool = rng.random();
        width += right as i64 - left as i64;
        if width == 0 {
            break;
        }
        load += width as u64;
    }
    Ok(load)
}

/// Exact law split by whether the cluster reaches the top edge of the
/// horizon (`τ > min(n, k)`) or closes below it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadSplit {
    pub pmf: LoadPmf,
    /// Sub-probabilities for clusters still open at the horizon.
    pub from_top: BTreeMap<u64, BigRational>,
    /// Sub-probabilities for clusters whose bounding dual paths met.
    pub closed_below: BTreeMap<u64, BigRational>,
}

/// Law of `L_{min(τ, n, k)}` by dynamic programming over
/// `(width, accumulated load)` with weights `1/4, 1/2, 1/4`.
pub fn load_pmf_exact(k: usize, n: usize) -> Result<LoadPmf> {
    Ok(load_pmf_split(k, n)?.pmf)
}

pub fn load_pmf_split(k: usize, n: usize) -> Result<LoadSplit> {
    if k == 0 || n == 0 {
        return Err(Error::Argument("load_pmf_exact needs k >= 1 and n >= 1".into()));
    }
    let horizon = k.min(n);
    if horizon > MAX_DP_HORIZON {
        return Err(Error::Resource(format!(
            "load DP horizon {horizon} exceeds {MAX_DP_HORIZON}"
        )));
    }
    let max_load = horizon * (horizon + 1) / 2;
    // live[w][l]: weight of width w, load l, in units of 4^-(i-1) at step i.
    let mut live = vec![vec![0u128; max_load + 1]; horizon + 2];
    live[1][1] = 1;
    let mut closed = vec![0u128; max_load + 1];
    for i in 2..=horizon {
        let mut next = vec![vec![0u128; max_load + 1]; horizon + 2];
        for w in 1..i {
            for l in 0..=max_load {
                let c = live[w][l];
                if c == 0 {
                    continue;
                }
                next[w - 1][l + w - 1] += c;
                next[w][l + w] += 2 * c;
                next[w + 1][l + w + 1] += c;
            }
        }
        for c in closed.iter_mut() {
            *c <<= 2;
        }
        for (c, x) in closed.iter_mut().zip(std::mem::take(&mut next[0])) {
            *c += x;
        }
        next[0] = vec![0; max_load + 1];
        live = next;
    }
    let den = BigInt::from(1u128 << (2 * (horizon - 1)));
    let to_map = |v: &[u128]| -> BTreeMap<u64, BigRational> {
        v.iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(l, c)| (l as u64, BigRational::new(BigInt::from(*c), den.clone())))
            .collect()
    };
    let mut open = vec![0u128; max_load + 1];
    for row in &live {
        for (o, c) in open.iter_mut().zip(row) {
            *o += c;
        }
    }
    let total: Vec<u128> = open.iter().zip(&closed).map(|(a, b)| a + b).collect();
    Ok(LoadSplit {
        pmf: LoadPmf {
            depth: k,
            time: n,
            probs: to_map(&total),
        },
        from_top: to_map(&open),
        closed_below: to_map(&closed),
    })
}

/// Law of `|C⁺_v|` for a depth-`k` node when every direction in its
/// ancestor cone is an independent fair coin, by enumerating all
/// `2^(cone size)` assignments.
pub fn cluster_pmf_bruteforce(k: usize) -> Result<LoadPmf> {
    if k == 0 {
        return Err(Error::Argument("cluster_pmf_bruteforce needs k >= 1".into()));
    }
    let cone_size = k * (k + 1) / 2;
    if cone_size > MAX_BRUTEFORCE_CONE {
        return Err(Error::Resource(format!(
            "ancestor cone of {cone_size} nodes exceeds {MAX_BRUTEFORCE_CONE}"
        )));
    }
    let width = (2 * k).max(4);
    let g = GridGeometry::new(width, k)?;
    let v = NodeId::new(k, k.min(width - 1));
    // Bottom-up order so a node's children are resolved before it.
    let mut cone: Vec<NodeId> = g.influence_cone(v, k - 1)?.into_iter().collect();
    cone.sort_by(|a, b| b.row.cmp(&a.row).then(a.col.cmp(&b.col)));
    debug_assert_eq!(cone.len(), cone_size);
    let pos = |u: NodeId| cone.iter().position(|c| *c == u);
    let children: Vec<[Option<usize>; 2]> = cone
        .iter()
        .map(|u| match g.children(*u).unwrap_or_default()[..] {
            [l, r] if u.row < k => [pos(l), pos(r)],
            _ => [None, None],
        })
        .collect();

    let mut counts = vec![0u64; cone_size + 1];
    let mut reach = vec![false; cone_size];
    for mask in 0u64..(1u64 << cone_size) {
        let mut size = 0;
        for (i, u) in cone.iter().enumerate() {
            reach[i] = if *u == v {
                true
            } else {
                let side = ((mask >> i) & 1 == 0) as usize; // bit set = left
                children[i][side].is_some_and(|c| reach[c])
            };
            size += reach[i] as usize;
        }
        counts[size] += 1;
    }
    let den = BigInt::from(1u64 << cone_size);
    Ok(LoadPmf {
        depth: k,
        time: k,
        probs: counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(l, c)| (l as u64, BigRational::new(BigInt::from(*c), den.clone())))
            .collect(),
    })
}

/// Total-variation distance between an empirical histogram indexed by load
/// and an exact law.
pub fn total_variation(counts: &BTreeMap<u64, u64>, pmf: &LoadPmf) -> f64 {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return 1.0;
    }
    let keys: BTreeSet<u64> = counts.keys().chain(pmf.probs.keys()).copied().collect();
    0.5 * keys
        .into_iter()
        .map(|l| {
            let emp = *counts.get(&l).unwrap_or(&0) as f64 / total as f64;
            (emp - pmf.prob_f64(l)).abs()
        })
        .sum::<f64>()
}
