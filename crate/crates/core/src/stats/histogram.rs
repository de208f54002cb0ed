use crate::dynamics::{Sediment, SimState};
use crate::error::{Error, Result};
use crate::load_oracle::{total_variation, LoadPmf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Binning {
    Uniform { lo: f64, hi: f64, bins: usize },
    Log { lo: f64, hi: f64, bins: usize },
}

impl Binning {
    fn check(self) -> Result<Self> {
        let (lo, hi, bins, log) = match self {
            Binning::Uniform { lo, hi, bins } => (lo, hi, bins, false),
            Binning::Log { lo, hi, bins } => (lo, hi, bins, true),
        };
        if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() || (log && lo <= 0.0) {
            return Err(Error::Argument(format!("bad binning {self:?}")));
        }
        Ok(self)
    }

    pub fn bins(&self) -> usize {
        match *self {
            Binning::Uniform { bins, .. } | Binning::Log { bins, .. } => bins,
        }
    }

    /// Bin of `x`; `hi` itself lands in the last bin.
    fn locate(&self, x: f64) -> Option<usize> {
        let (u, bins) = match *self {
            Binning::Uniform { lo, hi, bins } => ((x - lo) / (hi - lo), bins),
            Binning::Log { lo, hi, bins } => {
                if x <= 0.0 {
                    return None;
                }
                ((x / lo).ln() / (hi / lo).ln(), bins)
            }
        };
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        Some(((u * bins as f64) as usize).min(bins - 1))
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        match *self {
            Binning::Uniform { lo, hi, bins } => {
                let step = (hi - lo) / bins as f64;
                (lo + step * i as f64, if i + 1 == bins { hi } else { lo + step * (i + 1) as f64 })
            }
            Binning::Log { lo, hi, bins } => {
                let r = (hi / lo).ln() / bins as f64;
                let at = |k: usize| if k == bins { hi } else { lo * (r * k as f64).exp() };
                (at(i), at(i + 1))
            }
        }
    }
}

/// Fixed-bin histogram with out-of-range tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    binning: Binning,
    counts: Vec<u64>,
    below: u64,
    above: u64,
}

impl Histogram {
    pub fn new(binning: Binning) -> Result<Self> {
        let binning = binning.check()?;
        Ok(Self {
            binning,
            counts: vec![0; binning.bins()],
            below: 0,
            above: 0,
        })
    }

    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        Self::new(Binning::Uniform { lo, hi, bins })
    }

    pub fn log(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        Self::new(Binning::Log { lo, hi, bins })
    }

    pub fn add(&mut self, x: f64) {
        match self.binning.locate(x) {
            Some(i) => self.counts[i] += 1,
            None if x.is_nan() => self.above += 1,
            None => {
                let (lo, _) = self.binning.bounds(0);
                if x < lo {
                    self.below += 1
                } else {
                    self.above += 1
                }
            }
        }
    }

    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.binning != other.binning {
            return Err(Error::Argument("histogram binnings differ".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.below += other.below;
        self.above += other.above;
        Ok(())
    }

    pub fn binning(&self) -> Binning {
        self.binning
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn out_of_range(&self) -> (u64, u64) {
        (self.below, self.above)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.below + self.above
    }

    /// Fraction of all samples in bin `i` (out-of-range samples count in
    /// the denominator).
    pub fn mass(&self, i: usize) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.counts[i] as f64 / t as f64,
        }
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        self.binning.bounds(i)
    }
}

/// Counts of integer loads (in units of the rain) across one row.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LoadHistogram {
    pub row: usize,
    /// `counts[l]` is the number of nodes with load `l`.
    pub counts: Vec<u64>,
}

impl LoadHistogram {
    pub fn new(row: usize) -> Self {
        Self { row, counts: Vec::new() }
    }

    pub fn add(&mut self, load: u64) {
        let l = load as usize;
        if self.counts.len() <= l {
            self.counts.resize(l + 1, 0);
        }
        self.counts[l] += 1;
    }

    pub fn merge(&mut self, other: &LoadHistogram) {
        if self.counts.len() < other.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequency(&self, load: u64) -> f64 {
        let t = self.total();
        match self.counts.get(load as usize) {
            Some(&c) if t > 0 => c as f64 / t as f64,
            _ => 0.0,
        }
    }

    pub fn total_variation(&self, pmf: &LoadPmf) -> f64 {
        let counts = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(l, &c)| (l as u64, c))
            .collect();
        total_variation(&counts, pmf)
    }
}

/// Empirical law of the current load `I_v(n)` across row `row`. Loads are
/// expressed in units of the rain rate and rounded to integers.
pub fn load_histogram<S: Sediment>(state: &SimState<S>, row: usize) -> Result<LoadHistogram> {
    let g = state.geometry();
    if row == 0 || row > g.depth() {
        return Err(Error::Range {
            what: "row",
            value: row as i64,
            range: format!("1..={}", g.depth()),
        });
    }
    if state.time() == 0 {
        return Err(Error::Argument("load histogram needs n >= 1".into()));
    }
    let rain = state.rain().to_f64();
    let mut hist = LoadHistogram::new(row);
    for &x in state.row(state.input(), row) {
        hist.add((x.to_f64() / rain).round() as u64);
    }
    Ok(hist)
}
