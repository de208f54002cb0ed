use crate::dynamics::{Observer, Sediment, SimState};
use crate::error::{Error, Result};

/// Per-node direction history: switches `s_v(i)` for `i >= 2`, left counts,
/// and the first and last directions so that consecutive time segments
/// merge exactly.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SwitchAccumulator {
    width: usize,
    steps: u64,
    first: Vec<bool>,
    last: Vec<bool>,
    switches: Vec<u32>,
    lefts: Vec<u32>,
}

impl SwitchAccumulator {
    pub fn new(width: usize, nodes: usize) -> Self {
        Self {
            width,
            steps: 0,
            first: vec![false; nodes],
            last: vec![false; nodes],
            switches: vec![0; nodes],
            lefts: vec![0; nodes],
        }
    }

    /// Feed the directions chosen at one step.
    pub fn push(&mut self, went_left: &[bool]) {
        assert_eq!(went_left.len(), self.last.len(), "direction vector length");
        if self.steps == 0 {
            self.first.copy_from_slice(went_left);
        } else {
            for ((s, last), &d) in self.switches.iter_mut().zip(&self.last).zip(went_left) {
                *s += (*last != d) as u32;
            }
        }
        for (l, &d) in self.lefts.iter_mut().zip(went_left) {
            *l += d as u32;
        }
        self.last.copy_from_slice(went_left);
        self.steps += 1;
    }

    /// Append a later segment of the same nodes' history.
    pub fn merge(&mut self, later: &SwitchAccumulator) -> Result<()> {
        if later.last.len() != self.last.len() {
            return Err(Error::Argument("switch accumulators cover different nodes".into()));
        }
        if later.steps == 0 {
            return Ok(());
        }
        if self.steps == 0 {
            *self = later.clone();
            return Ok(());
        }
        for i in 0..self.last.len() {
            self.switches[i] += later.switches[i] + (self.last[i] != later.first[i]) as u32;
            self.lefts[i] += later.lefts[i];
        }
        self.last.copy_from_slice(&later.last);
        self.steps += later.steps;
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// `S_v(n) = (1/(n-1)) Σ_{i=2}^n s_v(i)`.
    pub fn rate(&self, index: usize) -> Result<f64> {
        if self.steps < 2 {
            return Err(Error::Argument("switching rate needs n >= 2".into()));
        }
        Ok(self.switches[index] as f64 / (self.steps - 1) as f64)
    }

    pub fn rates(&self) -> Result<Vec<f64>> {
        (0..self.switches.len()).map(|i| self.rate(i)).collect()
    }

    /// Mean of `S_v(n)` across the nodes of `row`.
    pub fn row_average(&self, row: usize) -> Result<f64> {
        let w = self.width;
        let nodes = self.switches.len() / w.max(1);
        if row == 0 || row > nodes {
            return Err(Error::Range {
                what: "row",
                value: row as i64,
                range: format!("1..={nodes}"),
            });
        }
        let sum: f64 = ((row - 1) * w..row * w).map(|i| self.rate(i)).sum::<Result<f64>>()?;
        Ok(sum / w as f64)
    }

    /// Fraction of steps node `index` sent left, the frequency estimate of
    /// its limiting left probability.
    pub fn left_frequency(&self, index: usize) -> f64 {
        match self.steps {
            0 => 0.5,
            n => self.lefts[index] as f64 / n as f64,
        }
    }
}

impl<S: Sediment> Observer<S> for SwitchAccumulator {
    fn observe(&mut self, state: &SimState<S>) {
        self.push(state.went_left());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feed(seq: &[bool]) -> SwitchAccumulator {
        let mut acc = SwitchAccumulator::new(1, 1);
        for &d in seq {
            acc.push(&[d]);
        }
        acc
    }

    #[test]
    fn alternating_switches_every_step() {
        let seq: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        assert_eq!(feed(&seq).rate(0).unwrap(), 1.0);
    }

    #[test]
    fn constant_never_switches() {
        assert_eq!(feed(&[true; 9]).rate(0).unwrap(), 0.0);
        assert!(feed(&[true]).rate(0).is_err());
    }

    #[test]
    fn segments_merge_exactly() {
        let seq = [true, false, false, true, true, true, false, true];
        for cut in 0..=seq.len() {
            let mut a = feed(&seq[..cut]);
            a.merge(&feed(&seq[cut..])).unwrap();
            assert_eq!(a, feed(&seq), "cut at {cut}");
        }
    }

    #[test]
    fn frequencies_and_row_average() {
        let mut acc = SwitchAccumulator::new(2, 4);
        acc.push(&[true, false, true, true]);
        acc.push(&[false, false, true, true]);
        acc.push(&[true, false, true, false]);
        assert_eq!(acc.row_average(1).unwrap(), 0.5);
        assert_eq!(acc.row_average(2).unwrap(), 0.25);
        assert!(acc.row_average(3).is_err());
        assert!((acc.left_frequency(0) - 2.0 / 3.0).abs() < 1e-12);
    }
}
