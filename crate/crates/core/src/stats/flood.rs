use crate::dynamics::{Observer, Sediment, SimState};
use crate::error::{Error, Result};

use super::histogram::Histogram;

/// `F_v(n) = I_v(n) / A_v(n)` with `A_v(n) = T_v(n-1) / n`, where `T_v(n-1)`
/// is the load dispatched by flips `1..n-1`. Needs `n >= 2`.
#[inline]
pub fn flood_ratio(load: f64, dispatched_before: f64, n: u64) -> Option<f64> {
    (n >= 2 && dispatched_before > 0.0).then(|| load * n as f64 / dispatched_before)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloodConfig {
    /// Large-flood order `c`.
    pub threshold: f64,
    /// Histogram and large-flood counts use times `n > burn_in`.
    pub burn_in: u64,
    /// Log bins per row; 0 disables the histograms.
    pub bins: usize,
}

impl Default for FloodConfig {
    fn default() -> Self {
        Self {
            threshold: 5.0,
            burn_in: 0,
            bins: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloodRow {
    pub hist: Option<Histogram>,
    pub samples: u64,
    pub large: u64,
    /// Samples outside `[2/(k(k+1)), n/(n-1) k(k+1)/2]`.
    pub violations: u64,
    pub checked: u64,
}

impl FloodRow {
    pub fn large_fraction(&self) -> f64 {
        match self.samples {
            0 => 0.0,
            s => self.large as f64 / s as f64,
        }
    }
}

/// Flood ratios of every node at every step, summarised by row.
#[derive(Debug, Clone, PartialEq)]
pub struct FloodAccumulator {
    width: usize,
    config: FloodConfig,
    pub rows: Vec<FloodRow>,
    /// Per-node `Σ F_v(i)` over all `i >= 2`, for time averages.
    node_sum: Vec<f64>,
    node_steps: u64,
}

impl FloodAccumulator {
    pub fn new(width: usize, depth: usize, config: FloodConfig) -> Result<Self> {
        if !(config.threshold >= 1.0) {
            return Err(Error::Argument("flood order must be >= 1".into()));
        }
        let rows = (1..=depth)
            .map(|k| {
                let cap = (k * (k + 1) / 2) as f64;
                let hist = match config.bins {
                    0 => None,
                    b => Some(Histogram::log(1.0 / cap, 2.0 * cap, b)?),
                };
                Ok(FloodRow {
                    hist,
                    samples: 0,
                    large: 0,
                    violations: 0,
                    checked: 0,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            width,
            config,
            rows,
            node_sum: vec![0.0; width * depth],
            node_steps: 0,
        })
    }

    pub fn config(&self) -> FloodConfig {
        self.config
    }

    pub fn row(&self, k: usize) -> Option<&FloodRow> {
        k.checked_sub(1).and_then(|i| self.rows.get(i))
    }

    pub fn violations(&self) -> u64 {
        self.rows.iter().map(|r| r.violations).sum()
    }

    pub fn checked(&self) -> u64 {
        self.rows.iter().map(|r| r.checked).sum()
    }

    /// `(1/(n-1)) Σ_{i=2}^n F_v(i)` for node `index`.
    pub fn time_average(&self, index: usize) -> Option<f64> {
        (self.node_steps > 0).then(|| self.node_sum[index] / self.node_steps as f64)
    }

    pub fn merge(&mut self, other: &FloodAccumulator) -> Result<()> {
        if self.config != other.config || self.node_sum.len() != other.node_sum.len() {
            return Err(Error::Argument("flood accumulators are not compatible".into()));
        }
        for (a, b) in self.rows.iter_mut().zip(&other.rows) {
            if let (Some(ha), Some(hb)) = (a.hist.as_mut(), b.hist.as_ref()) {
                ha.merge(hb)?;
            }
            a.samples += b.samples;
            a.large += b.large;
            a.violations += b.violations;
            a.checked += b.checked;
        }
        for (a, b) in self.node_sum.iter_mut().zip(&other.node_sum) {
            *a += b;
        }
        self.node_steps += other.node_steps;
        Ok(())
    }
}

impl<S: Sediment> Observer<S> for FloodAccumulator {
    fn observe(&mut self, state: &SimState<S>) {
        let n = state.time();
        if n < 2 {
            return;
        }
        let rain = state.rain().to_f64();
        // Integer sediment keeps every product below exact-f64 range, so
        // the bound check is exact; real rain gets rounding slack.
        let slack = if S::KIND == 0 { 0.0 } else { 1e-9 };
        let w = self.width;
        let in_window = n > self.config.burn_in;
        let (input, total, sent) = (state.input(), state.t_total(), state.dispatched());
        for (r, row) in self.rows.iter_mut().enumerate() {
            let k = r + 1;
            let cap = (k * (k + 1) / 2) as f64;
            for i in r * w..(r + 1) * w {
                let load = input[i].to_f64() / rain;
                let before = (total[i].to_f64() - sent[i].to_f64()) / rain;
                let Some(f) = flood_ratio(load, before, n) else {
                    continue;
                };
                row.checked += 1;
                let lo = load * n as f64 * cap;
                let hi = load * (n - 1) as f64;
                if lo < before * (1.0 - slack) || hi > cap * before * (1.0 + slack) {
                    row.violations += 1;
                }
                self.node_sum[i] += f;
                if in_window {
                    row.samples += 1;
                    row.large += (f >= self.config.threshold) as u64;
                    if let Some(h) = row.hist.as_mut() {
                        h.add(f);
                    }
                }
            }
        }
        self.node_steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{init, GridGeometry};

    #[test]
    fn top_row_ratio_is_n_over_n_minus_one() {
        let g = GridGeometry::new(8, 1).unwrap();
        let mut s = init::<u64>(g, 1.0, 1, 1).unwrap();
        s.run(2, &mut []).unwrap();
        let before = (s.t_total()[0] - s.dispatched()[0]) as f64;
        assert_eq!(flood_ratio(s.input()[0] as f64, before, 2), Some(2.0));
        assert_eq!(flood_ratio(1.0, 0.0, 1), None);
    }

    #[test]
    fn bounds_hold_and_average_tends_to_one() {
        let g = GridGeometry::new(20, 6).unwrap();
        let mut s = init::<u64>(g, 1.0, 1, 4).unwrap();
        let mut acc = FloodAccumulator::new(20, 6, FloodConfig { burn_in: 10, ..Default::default() }).unwrap();
        s.run(400, &mut [&mut acc]).unwrap();
        assert_eq!(acc.violations(), 0);
        assert_eq!(acc.checked(), 399 * 120);
        assert_eq!(acc.row(1).unwrap().samples, 390 * 20);
        assert_eq!(acc.row(1).unwrap().large, 0);
        let top = acc.time_average(0).unwrap();
        let exact: f64 = (2..=400).map(|n| n as f64 / (n - 1) as f64).sum::<f64>() / 399.0;
        assert!((top - exact).abs() < 1e-12);
        for i in 0..120 {
            assert!((acc.time_average(i).unwrap() - 1.0).abs() < 0.5);
        }
    }

    #[test]
    fn merging_time_segments_matches() {
        let g = GridGeometry::new(8, 3).unwrap();
        let cfg = FloodConfig { burn_in: 5, bins: 10, ..Default::default() };
        let mut whole = FloodAccumulator::new(8, 3, cfg).unwrap();
        let mut s = init::<u64>(g, 0.5, 1, 8).unwrap();
        s.run(40, &mut [&mut whole]).unwrap();

        let mut a = FloodAccumulator::new(8, 3, cfg).unwrap();
        let mut b = FloodAccumulator::new(8, 3, cfg).unwrap();
        let mut s = init::<u64>(g, 0.5, 1, 8).unwrap();
        s.run(17, &mut [&mut a]).unwrap();
        s.run(23, &mut [&mut b]).unwrap();
        a.merge(&b).unwrap();
        assert_eq!(a.rows, whole.rows);
        for i in 0..24 {
            assert!((a.time_average(i).unwrap() - whole.time_average(i).unwrap()).abs() < 1e-9);
        }
    }
}
