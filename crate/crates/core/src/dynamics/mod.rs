//! The synchronous reinforced update engine.
//!
//! Each second every node flips a coin biased by its own dispatch history,
//! sends its current load to the chosen child, and then collects rain plus
//! whatever its parents routed to it. A step reads only the pre-step state
//! and each coin is a pure function of `(seed, row, col, time)`, so
//! realizations do not depend on scheduling.

mod log;
pub mod snapshot;

use std::fmt::Debug;
use std::ops::{Add, Sub};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{GridGeometry, NodeId};
use crate::rng::{CoinRng, RowStream};

pub use log::{DirectionLog, EdgeConfiguration};

/// Sediment quantity. Integer accumulators are exact for integer rain;
/// real accumulators cover general rain rates.
pub trait Sediment:
    Copy + Debug + Default + PartialOrd + Send + Sync + Add<Output = Self> + Sub<Output = Self> + 'static
{
    fn to_f64(self) -> f64;
    fn checked_add(self, rhs: Self) -> Option<Self>;
    /// Sum and an overflow flag, for loops that should not branch.
    fn overflowing_add(self, rhs: Self) -> (Self, bool);
    /// `self` if `keep`, else zero, without a branch.
    fn masked(self, keep: bool) -> Self;
    /// CSV rendering (exact for integers, nine significant digits for reals).
    fn to_csv(self) -> String;
    /// Little-endian 8-byte encoding used by binary snapshots.
    fn to_le_bytes(self) -> [u8; 8];
    const KIND: u8;
}

impl Sediment for u64 {
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline(always)]
    fn checked_add(self, rhs: Self) -> Option<Self> {
        u64::checked_add(self, rhs)
    }
    #[inline(always)]
    fn overflowing_add(self, rhs: Self) -> (Self, bool) {
        u64::overflowing_add(self, rhs)
    }
    #[inline(always)]
    fn masked(self, keep: bool) -> Self {
        self & (keep as u64).wrapping_neg()
    }
    fn to_csv(self) -> String {
        self.to_string()
    }
    fn to_le_bytes(self) -> [u8; 8] {
        u64::to_le_bytes(self)
    }
    const KIND: u8 = 0;
}

impl Sediment for f64 {
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline(always)]
    fn checked_add(self, rhs: Self) -> Option<Self> {
        let s = self + rhs;
        s.is_finite().then_some(s)
    }
    #[inline(always)]
    fn overflowing_add(self, rhs: Self) -> (Self, bool) {
        let s = self + rhs;
        (s, !s.is_finite())
    }
    #[inline(always)]
    fn masked(self, keep: bool) -> Self {
        f64::from_bits(self.to_bits() & (keep as u64).wrapping_neg())
    }
    fn to_csv(self) -> String {
        crate::fmt::sig9(self)
    }
    fn to_le_bytes(self) -> [u8; 8] {
        f64::to_le_bytes(self)
    }
    const KIND: u8 = 1;
}

/// Per-node accumulators: load sent left `T^L`, total load sent `T`, and
/// the load to dispatch next second `I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState<S> {
    pub t_left: S,
    pub t_total: S,
    pub input: S,
}

impl<S: Sediment> NodeState<S> {
    pub fn t_right(&self) -> S {
        self.t_total - self.t_left
    }

    /// Left probability for unit rain.
    pub fn left_probability(&self, eta: f64) -> f64 {
        left_probability(self.t_left.to_f64(), self.t_total.to_f64(), eta)
    }

    /// Left probability with accumulators normalized by the rain rate.
    pub fn left_probability_with_rain(&self, eta: f64, rain: f64) -> f64 {
        left_probability(self.t_left.to_f64() / rain, self.t_total.to_f64() / rain, eta)
    }
}

/// `(T^L + η) / (T + 2η)`.
#[inline(always)]
pub fn left_probability(t_left: f64, t_total: f64, eta: f64) -> f64 {
    (t_left + eta) / (t_total + 2.0 * eta)
}

/// Hook invoked once per completed step with read-only access to the state.
pub trait Observer<S: Sediment> {
    fn observe(&mut self, state: &SimState<S>);
}

impl<S: Sediment, F: FnMut(&SimState<S>)> Observer<S> for F {
    fn observe(&mut self, state: &SimState<S>) {
        self(state)
    }
}

#[derive(Debug, Clone)]
pub struct SimState<S: Sediment> {
    geometry: GridGeometry,
    eta: f64,
    rain: S,
    seed: u64,
    coins: CoinRng,
    time: u64,
    t_left: Vec<S>,
    t_total: Vec<S>,
    /// `I(n)`: load assembled at the end of the current second.
    input: Vec<S>,
    /// `I(n-1)`: load dispatched during the current second.
    dispatched: Vec<S>,
    /// `D^L(n)`.
    went_left: Vec<bool>,
    log: Option<DirectionLog>,
}

impl<S: Sediment> PartialEq for SimState<S> {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry
            && self.eta.to_bits() == other.eta.to_bits()
            && self.rain == other.rain
            && self.seed == other.seed
            && self.time == other.time
            && self.t_left == other.t_left
            && self.t_total == other.t_total
            && self.input == other.input
            && self.dispatched == other.dispatched
            && self.went_left == other.went_left
            && self.log == other.log
    }
}

/// Fresh state at time 0: empty accumulators and `I(0) = r` everywhere.
pub fn init<S: Sediment>(geometry: GridGeometry, eta: f64, rain: S, seed: u64) -> Result<SimState<S>> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Config {
            key: "eta",
            reason: format!("must be a positive finite number (got {eta})"),
        });
    }
    let r = rain.to_f64();
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Config {
            key: "r",
            reason: format!("must be a positive finite number (got {r})"),
        });
    }
    let n = geometry.node_count();
    Ok(SimState {
        geometry,
        eta,
        rain,
        seed,
        coins: CoinRng::new(seed),
        time: 0,
        t_left: vec![S::default(); n],
        t_total: vec![S::default(); n],
        input: vec![rain; n],
        dispatched: vec![S::default(); n],
        went_left: vec![false; n],
        log: None,
    })
}

/// Grids below this many nodes step on the calling thread; handing two
/// jobs per step to the pool costs more than the work itself.
pub const PARALLEL_MIN_NODES: usize = 1 << 14;

/// Row index with that row's `T^L`, `T`, direction and load slices.
type FlipRow<'a, S> = (usize, (((&'a mut [S], &'a mut [S]), &'a mut [bool]), &'a [S]));

/// One row of coin flips. `Err` on overflow of any total.
fn flip_row<S: Sediment>(
    stream: RowStream,
    alpha: f64,
    tl: &mut [S],
    tt: &mut [S],
    left: &mut [bool],
    load: &[S],
) -> std::result::Result<(), ()> {
    let mut overflow = false;
    for (j, (((tl, tt), left), &load)) in tl.iter_mut().zip(tt).zip(left).zip(load).enumerate() {
        let heads = stream.uniform(j) * (tt.to_f64() + 2.0 * alpha) < tl.to_f64() + alpha;
        *left = heads;
        // Branch-free: coins defeat the predictor. T^L <= T, so checking
        // the total covers both.
        let (t, o) = tt.overflowing_add(load);
        *tt = t;
        overflow |= o;
        *tl = *tl + load.masked(heads);
    }
    if overflow { Err(()) } else { Ok(()) }
}

/// Inputs of one row from the row above. Node `j` has parents `(j-1, j)`
/// when `shifted`, else `(j, j+1)`, wrapping at the edge.
fn gather_row<S: Sediment>(
    rain: S,
    shifted: bool,
    dirs: &[bool],
    load: &[S],
    next: &mut [S],
) -> std::result::Result<(), ()> {
    let w = next.len();
    let mut overflow = false;
    let mut cell = |lp: usize, rp: usize| {
        let (a, o1) = rain.overflowing_add(load[lp].masked(!dirs[lp]));
        let (b, o2) = a.overflowing_add(load[rp].masked(dirs[rp]));
        overflow |= o1 | o2;
        b
    };
    if shifted {
        next[0] = cell(w - 1, 0);
        for j in 1..w {
            next[j] = cell(j - 1, j);
        }
    } else {
        for j in 0..w - 1 {
            next[j] = cell(j, j + 1);
        }
        next[w - 1] = cell(w - 1, 0);
    }
    if overflow { Err(()) } else { Ok(()) }
}

impl<S: Sediment> SimState<S> {
    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn rain(&self) -> S {
        self.rain
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of completed seconds.
    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn node(&self, v: NodeId) -> NodeState<S> {
        let i = self.geometry.index(v);
        NodeState {
            t_left: self.t_left[i],
            t_total: self.t_total[i],
            input: self.input[i],
        }
    }

    pub fn t_left(&self) -> &[S] {
        &self.t_left
    }

    pub fn t_total(&self) -> &[S] {
        &self.t_total
    }

    /// `I(n)` for every node, row-major.
    pub fn input(&self) -> &[S] {
        &self.input
    }

    /// `I(n-1)`, the loads dispatched during the last step. Only meaningful
    /// once `time() >= 1`.
    pub fn dispatched(&self) -> &[S] {
        &self.dispatched
    }

    /// `D^L(n)` for every node. Only meaningful once `time() >= 1`.
    pub fn went_left(&self) -> &[bool] {
        &self.went_left
    }

    pub fn row<'a, T>(&self, data: &'a [T], row: usize) -> &'a [T] {
        let w = self.geometry.width();
        &data[(row - 1) * w..row * w]
    }

    /// `P^L(n)` of the node at a dense index.
    pub fn left_probability_at(&self, index: usize) -> f64 {
        let alpha = self.eta * self.rain.to_f64();
        left_probability(self.t_left[index].to_f64(), self.t_total[index].to_f64(), alpha)
    }

    /// Start recording directions. `window = None` keeps every step.
    pub fn enable_log(&mut self, window: Option<usize>) {
        self.log = Some(DirectionLog::new(self.geometry, self.time + 1, window));
    }

    pub fn log(&self) -> Option<&DirectionLog> {
        self.log.as_ref()
    }

    pub fn take_log(&mut self) -> Option<DirectionLog> {
        self.log.take()
    }

    /// One second, applied to every node against the pre-step snapshot.
    pub fn step(&mut self, observers: &mut [&mut dyn Observer<S>]) -> Result<()> {
        let n = self.time + 1;
        let w = self.geometry.width();
        // (T^L + eta r) / (T + 2 eta r) is the same bias as with T/r.
        let alpha = self.eta * self.rain.to_f64();
        let coins = self.coins;

        let overflow = Error::Arithmetic { time: n };

        #[cfg(feature = "parallel")]
        let parallel = self.geometry.node_count() >= PARALLEL_MIN_NODES;

        // Coin flips and dispatch bookkeeping; each node touches only itself.
        {
            let (tt, left, load) = (&mut self.t_total, &mut self.went_left, &self.input);
            let flip = |(r, (((tl, tt), left), load)): FlipRow<'_, S>| {
                flip_row(coins.row_stream(r + 1, n), alpha, tl, tt, left, load)
            };
            #[cfg(feature = "parallel")]
            let result = if parallel {
                self.t_left
                    .par_chunks_mut(w)
                    .zip(tt.par_chunks_mut(w))
                    .zip(left.par_chunks_mut(w))
                    .zip(load.par_chunks(w))
                    .enumerate()
                    .try_for_each(flip)
            } else {
                self.t_left
                    .chunks_mut(w)
                    .zip(tt.chunks_mut(w))
                    .zip(left.chunks_mut(w))
                    .zip(load.chunks(w))
                    .enumerate()
                    .try_for_each(flip)
            };
            #[cfg(not(feature = "parallel"))]
            let result = self
                .t_left
                .chunks_mut(w)
                .zip(tt.chunks_mut(w))
                .zip(left.chunks_mut(w))
                .zip(load.chunks(w))
                .enumerate()
                .try_for_each(flip);
            result.map_err(|_| overflow.clone())?;
        }

        std::mem::swap(&mut self.input, &mut self.dispatched);

        let geometry = self.geometry;
        let rain = self.rain;
        let sent = &self.dispatched;
        let went_left = &self.went_left;
        let gather = |(r, next): (usize, &mut [S])| {
            let row = r + 1;
            if row == 1 {
                next.fill(rain);
                return Ok(());
            }
            let above = (row - 2) * w;
            let shifted = geometry.left_parent_col(row, 1) == 0;
            gather_row(
                rain,
                shifted,
                &went_left[above..above + w],
                &sent[above..above + w],
                next,
            )
        };
        #[cfg(feature = "parallel")]
        let result = if parallel {
            self.input.par_chunks_mut(w).enumerate().try_for_each(gather)
        } else {
            self.input.chunks_mut(w).enumerate().try_for_each(gather)
        };
        #[cfg(not(feature = "parallel"))]
        let result = self.input.chunks_mut(w).enumerate().try_for_each(gather);
        result.map_err(|_| overflow)?;

        self.time = n;
        if let Some(log) = self.log.as_mut() {
            log.push(n, &self.went_left);
        }
        for obs in observers.iter_mut() {
            obs.observe(self);
        }
        Ok(())
    }

    /// Applies [`step`](Self::step) `steps` times.
    pub fn run(&mut self, steps: u64, observers: &mut [&mut dyn Observer<S>]) -> Result<()> {
        for _ in 0..steps {
            self.step(observers)?;
        }
        Ok(())
    }

    /// Sum of `I(n)` across a row.
    pub fn row_input_sum(&self, row: usize) -> f64 {
        self.row(&self.input, row).iter().map(|x| x.to_f64()).sum()
    }
}

impl SimState<u64> {
    /// Exact row sums of `I(n)`.
    pub fn row_input_sums(&self) -> Vec<u64> {
        let w = self.geometry.width();
        self.input.chunks(w).map(|r| r.iter().sum()).collect()
    }
}

/// Checks `sum_{row k} I(n) = min(n+1, k) * W * r` after every step.
#[derive(Debug, Clone, Default)]
pub struct ConservationCheck {
    pub steps_checked: u64,
    pub violations: Vec<(u64, usize, u64, u64)>,
}

impl ConservationCheck {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn expected(time: u64, row: usize, width: usize, rain: u64) -> u64 {
        (time + 1).min(row as u64) * width as u64 * rain
    }

    pub fn check(&mut self, state: &SimState<u64>) {
        let g = state.geometry();
        for (r, sum) in state.row_input_sums().into_iter().enumerate() {
            let expect = Self::expected(state.time(), r + 1, g.width(), state.rain());
            if sum != expect {
                self.violations.push((state.time(), r + 1, sum, expect));
            }
        }
        self.steps_checked += 1;
    }

    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Observer<u64> for ConservationCheck {
    fn observe(&mut self, state: &SimState<u64>) {
        self.check(state);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(w: usize, k: usize) -> GridGeometry {
        GridGeometry::new(w, k).unwrap()
    }

    #[test]
    fn init_state() {
        let s = init::<u64>(geom(6, 3), 1.0, 1, 0).unwrap();
        assert_eq!(s.time(), 0);
        for i in 0..s.geometry().node_count() {
            let v = s.geometry().node(i);
            let n = s.node(v);
            assert_eq!((n.t_left, n.t_total, n.input), (0, 0, 1));
            assert_eq!(n.left_probability(1.0), 0.5);
            assert_eq!(n.left_probability(0.25), 0.5);
        }
        assert!(init::<u64>(geom(6, 3), 0.0, 1, 0).is_err());
        assert!(init::<u64>(geom(6, 3), -1.0, 1, 0).is_err());
        assert!(init::<f64>(geom(6, 3), 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn left_probability_values() {
        assert_eq!(left_probability(0.0, 0.0, 1.0), 0.5);
        assert_eq!(left_probability(1.0, 1.0, 1.0), 2.0 / 3.0);
        assert!((left_probability(3.0, 4.0, 0.5) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn top_row_after_one_step() {
        let mut s = init::<u64>(geom(8, 3), 0.7, 1, 3).unwrap();
        s.step(&mut []).unwrap();
        for c in 0..8 {
            let n = s.node(NodeId::new(1, c));
            assert_eq!(n.t_total, 1);
            assert_eq!(n.input, 1);
        }
    }

    #[test]
    fn input_assembly_matches_recursion() {
        let g = geom(8, 4);
        let mut s = init::<u64>(g, 1.0, 1, 11).unwrap();
        for _ in 0..20 {
            let before = s.clone();
            s.step(&mut []).unwrap();
            for i in 0..g.node_count() {
                let v = g.node(i);
                let mut expect = 1;
                if let [lp, rp] = g.parents(v).unwrap()[..] {
                    let (li, ri) = (g.index(lp), g.index(rp));
                    if !s.went_left()[li] {
                        expect += before.input()[li];
                    }
                    if s.went_left()[ri] {
                        expect += before.input()[ri];
                    }
                }
                assert_eq!(s.input()[i], expect);
                assert_eq!(s.dispatched()[i], before.input()[i]);
                assert_eq!(s.t_total()[i], before.t_total()[i] + before.input()[i]);
                let dl = if s.went_left()[i] { before.input()[i] } else { 0 };
                assert_eq!(s.t_left()[i], before.t_left()[i] + dl);
            }
        }
    }

    #[test]
    fn conservation_small_grid() {
        let mut s = init::<u64>(geom(4, 3), 1.0, 1, 99).unwrap();
        let mut check = ConservationCheck::new();
        check.check(&s);
        s.run(50, &mut [&mut check]).unwrap();
        assert!(check.ok(), "{:?}", check.violations);
        assert_eq!(check.steps_checked, 51);
        assert_eq!(s.row_input_sums()[2], 12);
    }

    #[test]
    fn run_zero_is_identity() {
        let s = init::<u64>(geom(6, 3), 1.0, 1, 5).unwrap();
        let mut t = s.clone();
        t.run(0, &mut []).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn same_seed_same_log() {
        let mk = || {
            let mut s = init::<u64>(geom(10, 5), 0.5, 1, 1234).unwrap();
            s.enable_log(None);
            s.run(40, &mut []).unwrap();
            s.take_log().unwrap()
        };
        assert_eq!(mk(), mk());
        let mut other = init::<u64>(geom(10, 5), 0.5, 1, 1235).unwrap();
        other.enable_log(None);
        other.run(40, &mut []).unwrap();
        assert_ne!(mk(), other.take_log().unwrap());
    }

    #[test]
    fn real_rain_matches_integer_rain() {
        let g = geom(12, 5);
        let mut a = init::<u64>(g, 0.8, 1, 77).unwrap();
        let mut b = init::<f64>(g, 0.8, 1.0, 77).unwrap();
        a.run(60, &mut []).unwrap();
        b.run(60, &mut []).unwrap();
        assert_eq!(a.went_left(), b.went_left());
        for (x, y) in a.input().iter().zip(b.input()) {
            assert_eq!(*x as f64, *y);
        }
    }

    #[test]
    fn rain_rate_only_rescales() {
        // At fixed eta the rain rate rescales every accumulator and leaves
        // the direction sequence untouched.
        let g = geom(8, 4);
        let mut unit = init::<f64>(g, 1.3, 1.0, 4).unwrap();
        let mut wet = init::<f64>(g, 1.3, 2.0, 4).unwrap();
        unit.run(30, &mut []).unwrap();
        wet.run(30, &mut []).unwrap();
        assert_eq!(unit.went_left(), wet.went_left());
        assert!((wet.row_input_sum(4) - 2.0 * 4.0 * 8.0).abs() < 1e-9);
        let v = NodeId::new(3, 2);
        let p = wet.node(v).left_probability_with_rain(1.3, 2.0);
        assert!((p - unit.node(v).left_probability(1.3)).abs() < 1e-12);
        assert!((p - wet.left_probability_at(g.index(v))).abs() < 1e-12);
    }

    #[test]
    fn observers_fire_each_step() {
        let mut s = init::<u64>(geom(6, 2), 1.0, 1, 0).unwrap();
        let mut seen = Vec::new();
        let mut obs = |st: &SimState<u64>| seen.push(st.time());
        s.run(5, &mut [&mut obs]).unwrap();
        assert_eq!(seen, vec![1, 2, 3, 4, 5]);
    }
}
