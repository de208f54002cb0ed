//! Exact enumeration of the dynamics on a small cone of nodes.
//!
//! The cone must be closed under taking parents, so every node's input is
//! determined by nodes inside it and the law restricted to the cone is
//! exact. Rain is one unit; `η` is rational and all probabilities are exact
//! rationals.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{GridGeometry, NodeId};

/// Default and maximum number of coin flips (`|cone| * steps`).
pub const MAX_FLIPS: usize = 24;

/// One outcome of every coin in the cone over `steps` seconds. Bit
/// `step * |cone| + i` (step from 0) is set when cone node `i` went left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryAtom {
    pub flips: u32,
    pub prob: BigRational,
}

impl TrajectoryAtom {
    pub fn went_left(&self, cone_len: usize, time: usize, node: usize) -> bool {
        (self.flips >> ((time - 1) * cone_len + node)) & 1 == 1
    }
}

#[derive(Debug, Clone)]
pub struct ExactLaw {
    pub cone: Vec<NodeId>,
    pub steps: usize,
    pub eta: BigRational,
    pub atoms: Vec<TrajectoryAtom>,
    parents: Vec<Option<[usize; 2]>>,
}

/// Accumulators of one cone node in exact arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactNode {
    pub t_left: u64,
    pub t_total: u64,
    pub input: u64,
}

impl ExactNode {
    pub fn left_probability(&self, eta: &BigRational) -> BigRational {
        (BigRational::from_integer(self.t_left.into()) + eta)
            / (BigRational::from_integer(self.t_total.into()) + eta * BigInt::from(2))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExactReport {
    pub checks: usize,
    pub failures: Vec<String>,
}

impl ExactReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }

    fn expect(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(msg());
        }
    }
}

struct Cone {
    nodes: Vec<NodeId>,
    parents: Vec<Option<[usize; 2]>>,
}

fn prepare(g: &GridGeometry, cone: &BTreeSet<NodeId>, steps: usize, max_flips: usize) -> Result<Cone> {
    if cone.is_empty() {
        return Err(Error::Argument("empty cone".into()));
    }
    let flips = cone.len() * steps;
    if flips > max_flips.min(MAX_FLIPS) {
        return Err(Error::Resource(format!(
            "{} nodes x {steps} steps = {flips} flips exceeds {}",
            cone.len(),
            max_flips.min(MAX_FLIPS)
        )));
    }
    let nodes: Vec<NodeId> = cone.iter().copied().collect();
    let mut parents = Vec::with_capacity(nodes.len());
    for v in &nodes {
        let ps = g.parents(*v)?;
        if ps.is_empty() {
            parents.push(None);
            continue;
        }
        let idx: Vec<usize> = ps
            .iter()
            .map(|p| {
                nodes.iter().position(|c| c == p).ok_or_else(|| {
                    Error::Argument(format!("cone is not closed under parents: {p:?} missing"))
                })
            })
            .collect::<Result<_>>()?;
        parents.push(Some([idx[0], idx[1]]));
    }
    Ok(Cone { nodes, parents })
}

fn advance(states: &[ExactNode], parents: &[Option<[usize; 2]>], mask: u32) -> Vec<ExactNode> {
    let left = |i: usize| (mask >> i) & 1 == 1;
    states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let input = match parents[i] {
                None => 1,
                Some([lp, rp]) => {
                    1 + if left(lp) { 0 } else { states[lp].input }
                        + if left(rp) { states[rp].input } else { 0 }
                }
            };
            ExactNode {
                t_left: s.t_left + if left(i) { s.input } else { 0 },
                t_total: s.t_total + s.input,
                input,
            }
        })
        .collect()
}

/// Depth-first walk over the joint outcomes of each second. The visitor sees
/// each prefix state, its time, and every `(mask, conditional probability,
/// successor)` triple.
fn walk<F>(cone: &Cone, steps: usize, eta: &BigRational, visit: &mut F)
where
    F: FnMut(usize, &[ExactNode], &[(u32, BigRational, Vec<ExactNode>)], u32, &BigRational),
{
    let init = vec![
        ExactNode {
            t_left: 0,
            t_total: 0,
            input: 1,
        };
        cone.nodes.len()
    ];
    recurse(cone, steps, eta, 0, &init, 0, &BigRational::one(), visit);
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    cone: &Cone,
    steps: usize,
    eta: &BigRational,
    time: usize,
    states: &[ExactNode],
    flips: u32,
    prob: &BigRational,
    visit: &mut F,
) where
    F: FnMut(usize, &[ExactNode], &[(u32, BigRational, Vec<ExactNode>)], u32, &BigRational),
{
    let c = states.len();
    let probs: Vec<BigRational> = states.iter().map(|s| s.left_probability(eta)).collect();
    let children: Vec<(u32, BigRational, Vec<ExactNode>)> = if time < steps {
        (0u32..1 << c)
            .map(|mask| {
                let p = probs.iter().enumerate().fold(BigRational::one(), |acc, (i, p)| {
                    if (mask >> i) & 1 == 1 {
                        acc * p
                    } else {
                        acc * (BigRational::one() - p)
                    }
                });
                (mask, p, advance(states, &cone.parents, mask))
            })
            .collect()
    } else {
        Vec::new()
    };
    visit(time, states, &children, flips, prob);
    for (mask, p, next) in &children {
        let joint = prob * p;
        if joint.is_zero() {
            continue;
        }
        recurse(cone, steps, eta, time + 1, next, flips | (mask << (time * c)), &joint, visit);
    }
}

/// Every trajectory of the cone over `steps` seconds with its exact
/// probability.
pub fn exact_distribution(
    g: &GridGeometry,
    cone: &BTreeSet<NodeId>,
    steps: usize,
    eta: &BigRational,
) -> Result<ExactLaw> {
    exact_distribution_capped(g, cone, steps, eta, MAX_FLIPS)
}

pub fn exact_distribution_capped(
    g: &GridGeometry,
    cone: &BTreeSet<NodeId>,
    steps: usize,
    eta: &BigRational,
    max_flips: usize,
) -> Result<ExactLaw> {
    check_eta(eta)?;
    let c = prepare(g, cone, steps, max_flips)?;
    let mut atoms = Vec::new();
    walk(&c, steps, eta, &mut |time, _, _, flips, prob| {
        if time == steps {
            atoms.push(TrajectoryAtom {
                flips,
                prob: prob.clone(),
            });
        }
    });
    Ok(ExactLaw {
        cone: c.nodes,
        steps,
        eta: eta.clone(),
        atoms,
        parents: c.parents,
    })
}

fn check_eta(eta: &BigRational) -> Result<()> {
    if *eta <= BigRational::zero() {
        return Err(Error::Argument("eta must be positive".into()));
    }
    Ok(())
}

impl ExactLaw {
    pub fn total_probability(&self) -> BigRational {
        self.atoms.iter().fold(BigRational::zero(), |a, x| a + &x.prob)
    }

    pub fn position(&self, v: NodeId) -> Option<usize> {
        self.cone.iter().position(|c| *c == v)
    }

    /// States after each second `0..=steps` along an atom.
    pub fn replay(&self, atom: &TrajectoryAtom) -> Vec<Vec<ExactNode>> {
        let c = self.cone.len();
        let mut states = vec![
            ExactNode {
                t_left: 0,
                t_total: 0,
                input: 1,
            };
            c
        ];
        let mut out = vec![states.clone()];
        for step in 0..self.steps {
            let mask = (atom.flips >> (step * c)) & ((1u32 << c) - 1);
            states = advance(&states, &self.parents, mask);
            out.push(states.clone());
        }
        out
    }

    /// Law of the direction sequence of one cone node, keyed by its bits
    /// (bit `i` = left at second `i + 1`).
    pub fn direction_marginal(&self, v: NodeId) -> Option<BTreeMap<u32, BigRational>> {
        let pos = self.position(v)?;
        let c = self.cone.len();
        let mut out = BTreeMap::new();
        for a in &self.atoms {
            let key = (0..self.steps).fold(0u32, |k, t| k | ((a.went_left(c, t + 1, pos) as u32) << t));
            *out.entry(key).or_insert_with(BigRational::zero) += &a.prob;
        }
        Some(out)
    }
}

/// Checks `E[P^L(i+1) | F_i] = P^L(i)` and `E[D^L(i+1) | F_i] = P^L(i)` for
/// every cone node and every prefix of length `i < steps`, exactly.
pub fn verify_martingale(
    g: &GridGeometry,
    cone: &BTreeSet<NodeId>,
    steps: usize,
    eta: &BigRational,
) -> Result<ExactReport> {
    check_eta(eta)?;
    let c = prepare(g, cone, steps, MAX_FLIPS)?;
    let mut report = ExactReport::default();
    let nodes = c.nodes.clone();
    walk(&c, steps, eta, &mut |time, states, children, _, _| {
        if children.is_empty() {
            return;
        }
        let total = children.iter().fold(BigRational::zero(), |a, (_, p, _)| a + p);
        report.expect(total.is_one(), || format!("t={time}: conditional law sums to {total}"));
        for (i, s) in states.iter().enumerate() {
            let now = s.left_probability(eta);
            let mut next_p = BigRational::zero();
            let mut next_d = BigRational::zero();
            for (mask, p, succ) in children {
                next_p += p * succ[i].left_probability(eta);
                if (mask >> i) & 1 == 1 {
                    next_d += p;
                }
            }
            report.expect(next_p == now, || {
                format!("t={time} {:?}: E[P(t+1)|F_t] = {next_p} != P(t) = {now}", nodes[i])
            });
            report.expect(next_d == now, || {
                format!("t={time} {:?}: E[D(t+1)|F_t] = {next_d} != P(t) = {now}", nodes[i])
            });
        }
    });
    Ok(report)
}

/// Checks that at every second `1..=steps` the joint law of the cone's
/// directions is that of independent fair coins, and that the load
/// dispatched at flip `i` has mean `min(i, depth)`.
pub fn verify_fixed_time_iid(
    g: &GridGeometry,
    cone: &BTreeSet<NodeId>,
    steps: usize,
    eta: &BigRational,
) -> Result<ExactReport> {
    let law = exact_distribution(g, cone, steps, eta)?;
    verify_fixed_time_iid_law(&law)
}

pub fn verify_fixed_time_iid_law(law: &ExactLaw) -> Result<ExactReport> {
    let c = law.cone.len();
    let mut report = ExactReport::default();
    let total = law.total_probability();
    report.expect(total.is_one(), || format!("total probability {total}"));
    let fair = BigRational::new(BigInt::one(), BigInt::from(1u64 << c));
    let replays: Vec<_> = law.atoms.iter().map(|a| law.replay(a)).collect();
    for t in 1..=law.steps {
        let mut joint: BTreeMap<u32, BigRational> = BTreeMap::new();
        for a in &law.atoms {
            let mask = (a.flips >> ((t - 1) * c)) & ((1u32 << c) - 1);
            *joint.entry(mask).or_insert_with(BigRational::zero) += &a.prob;
        }
        for mask in 0u32..1 << c {
            let p = joint.get(&mask).cloned().unwrap_or_else(BigRational::zero);
            report.expect(p == fair, || format!("t={t} pattern {mask:0c$b}: {p} != {fair}"));
        }
        for (i, v) in law.cone.iter().enumerate() {
            let mean = law
                .atoms
                .iter()
                .zip(&replays)
                .fold(BigRational::zero(), |acc, (a, states)| {
                    acc + &a.prob * BigInt::from(states[t - 1][i].input)
                });
            let expect = BigRational::from_integer(t.min(v.row).into());
            report.expect(mean == expect, || {
                format!("t={t} {v:?}: mean dispatched load {mean} != {expect}")
            });
        }
    }
    Ok(report)
}
