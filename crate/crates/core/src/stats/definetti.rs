use crate::dynamics::{Sediment, SimState};
use crate::error::{Error, Result};

use super::histogram::Histogram;
use super::switching::SwitchAccumulator;

pub const DEFAULT_BINS: usize = 100;

/// Per-row histograms of estimated limiting left probabilities `p̂_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeFinettiHistogram {
    /// `rows[k - 1]` is the histogram for row `k`.
    pub rows: Vec<Histogram>,
}

impl DeFinettiHistogram {
    pub fn from_estimates(per_row: &[Vec<f64>], bins: usize) -> Result<Self> {
        let rows = per_row
            .iter()
            .map(|values| {
                let mut h = Histogram::uniform(0.0, 1.0, bins)?;
                values.iter().for_each(|&p| h.add(p));
                Ok(h)
            })
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    pub fn row(&self, k: usize) -> Option<&Histogram> {
        k.checked_sub(1).and_then(|i| self.rows.get(i))
    }

    pub fn merge(&mut self, other: &DeFinettiHistogram) -> Result<()> {
        if self.rows.len() != other.rows.len() {
            return Err(Error::Argument("row counts differ".into()));
        }
        for (a, b) in self.rows.iter_mut().zip(&other.rows) {
            a.merge(b)?;
        }
        Ok(())
    }
}

fn check_row<S: Sediment>(state: &SimState<S>, row: usize) -> Result<()> {
    let depth = state.geometry().depth();
    if row == 0 || row > depth {
        return Err(Error::Range {
            what: "row",
            value: row as i64,
            range: format!("1..={depth}"),
        });
    }
    Ok(())
}

/// `p̂_v = P_v^L(n)` for every node of `row`.
pub fn left_probability_estimates<S: Sediment>(state: &SimState<S>, row: usize) -> Result<Vec<f64>> {
    check_row(state, row)?;
    let w = state.geometry().width();
    Ok(((row - 1) * w..row * w).map(|i| state.left_probability_at(i)).collect())
}

/// Direction frequencies for every node of `row`, the cross-check
/// estimator.
pub fn frequency_estimates(acc: &SwitchAccumulator, width: usize, row: usize) -> Vec<f64> {
    ((row - 1) * width..row * width).map(|i| acc.left_frequency(i)).collect()
}

/// De Finetti histograms of every row from the final state.
pub fn definetti_estimate<S: Sediment>(state: &SimState<S>, bins: usize) -> Result<DeFinettiHistogram> {
    let rows = (1..=state.geometry().depth())
        .map(|k| left_probability_estimates(state, k))
        .collect::<Result<Vec<_>>>()?;
    DeFinettiHistogram::from_estimates(&rows, bins)
}

/// Fraction of estimates within `eps` of 0 or 1.
pub fn endpoint_fraction(values: &[f64], eps: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|&&p| p <= eps || p >= 1.0 - eps).count() as f64 / values.len() as f64
}

/// One-sample Kolmogorov–Smirnov distance between `values` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{init, GridGeometry};

    #[test]
    fn histogram_mass_sums_to_one() {
        let g = GridGeometry::new(40, 3).unwrap();
        let mut s = init::<u64>(g, 1.0, 1, 2).unwrap();
        s.run(50, &mut []).unwrap();
        let h = definetti_estimate(&s, DEFAULT_BINS).unwrap();
        for k in 1..=3 {
            let row = h.row(k).unwrap();
            let mass: f64 = (0..DEFAULT_BINS).map(|i| row.mass(i)).sum();
            assert!((mass - 1.0).abs() < 1e-12);
            assert_eq!(row.total(), 40);
        }
        assert!(h.row(0).is_none());
        assert!(left_probability_estimates(&s, 4).is_err());
    }

    #[test]
    fn fresh_state_estimates_one_half() {
        let g = GridGeometry::new(8, 2).unwrap();
        let s = init::<u64>(g, 0.3, 1, 2).unwrap();
        assert!(left_probability_estimates(&s, 2).unwrap().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn ks_of_perfect_grid() {
        let n = 1000;
        let values: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&values, |x| x);
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
        assert!((ks_distance(&[0.5], |x| x) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn endpoint_mass() {
        assert_eq!(endpoint_fraction(&[0.0, 0.5, 0.9995, 0.3], 1e-3), 0.5);
    }
}
