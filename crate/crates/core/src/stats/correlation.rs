use crate::dynamics::{init, Observer, Sediment, SimState};
use crate::error::{Error, Result};
use crate::lattice::GridGeometry;

/// Load correlation `K_{M,N}(n)` between the load vector of the box of
/// columns `0..M` and rows `1..=N` at time `N` and the same box at each
/// later time. Loads are centred by their stationary mean, the depth (in
/// units of the rain).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadCorrelationAccumulator {
    geometry: GridGeometry,
    cols: usize,
    rows: usize,
    reference: Option<Vec<f64>>,
    reference_sq: f64,
    /// `(n, K(n))` for every observed `n >= N`.
    pub series: Vec<(u64, f64)>,
}

impl LoadCorrelationAccumulator {
    pub fn new(geometry: GridGeometry, cols: usize, rows: usize) -> Result<Self> {
        if cols == 0 || cols > geometry.width() || rows == 0 || rows > geometry.depth() {
            return Err(Error::Argument(format!(
                "box {cols}x{rows} does not fit a {}x{} grid",
                geometry.width(),
                geometry.depth()
            )));
        }
        Ok(Self {
            geometry,
            cols,
            rows,
            reference: None,
            reference_sq: 0.0,
            series: Vec::new(),
        })
    }

    /// Reference time `N`, the depth of the box.
    pub fn reference_time(&self) -> u64 {
        self.rows as u64
    }

    fn centred<S: Sediment>(&self, state: &SimState<S>) -> Vec<f64> {
        let rain = state.rain().to_f64();
        let input = state.input();
        let w = self.geometry.width();
        (1..=self.rows)
            .flat_map(|row| {
                let base = (row - 1) * w;
                input[base..base + self.cols]
                    .iter()
                    .map(move |x| x.to_f64() / rain - row as f64)
            })
            .collect()
    }

    /// `K(n)` for the current state.
    pub fn correlation<S: Sediment>(&self, state: &SimState<S>) -> Result<f64> {
        let n = state.time();
        if n < self.reference_time() {
            return Err(Error::Range {
                what: "time",
                value: n as i64,
                range: format!(">= {}", self.reference_time()),
            });
        }
        let reference = self
            .reference
            .as_ref()
            .ok_or_else(|| Error::Argument("reference load vector not recorded".into()))?;
        let now = self.centred(state);
        let cross: f64 = reference.iter().zip(&now).map(|(a, b)| a * b).sum();
        let now_sq: f64 = now.iter().map(|b| b * b).sum();
        let denom = (self.reference_sq * now_sq).sqrt();
        if denom == 0.0 {
            return Err(Error::Argument("degenerate load vector".into()));
        }
        Ok((cross / denom).clamp(-1.0, 1.0))
    }

    /// `(1/(N'-N)) Σ_{n=N}^{N'} K(n)`, taken literally.
    pub fn time_average(&self, end: u64) -> Result<f64> {
        let start = self.reference_time();
        if end <= start {
            return Err(Error::Argument(format!("N' = {end} must exceed N = {start}")));
        }
        let mut sum = 0.0;
        let mut seen = 0;
        for &(n, k) in &self.series {
            if n <= end {
                sum += k;
                seen += 1;
            }
        }
        if seen != (end - start + 1) as usize {
            return Err(Error::Argument(format!(
                "K observed at {seen} of the times {start}..={end}"
            )));
        }
        Ok(sum / (end - start) as f64)
    }
}

impl<S: Sediment> Observer<S> for LoadCorrelationAccumulator {
    fn observe(&mut self, state: &SimState<S>) {
        let n = state.time();
        if n == self.reference_time() {
            let r = self.centred(state);
            self.reference_sq = r.iter().map(|x| x * x).sum();
            self.reference = Some(r);
        }
        if n >= self.reference_time() {
            if let Ok(k) = self.correlation(state) {
                self.series.push((n, k));
            }
        }
    }
}

/// Time-averaged `K_{M,N}` over `N..=N'`, averaged over one trial per seed.
pub fn time_avg_correlation(
    geometry: GridGeometry,
    eta: f64,
    cols: usize,
    rows: usize,
    end: u64,
    seeds: &[u64],
) -> Result<f64> {
    if seeds.is_empty() {
        return Err(Error::Argument("no trials".into()));
    }
    let mut total = 0.0;
    for &seed in seeds {
        let mut acc = LoadCorrelationAccumulator::new(geometry, cols, rows)?;
        let mut state = init::<u64>(geometry, eta, 1, seed)?;
        state.run(end, &mut [&mut acc])?;
        total += acc.time_average(end)?;
    }
    Ok(total / seeds.len() as f64)
}
