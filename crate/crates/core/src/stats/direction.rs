use crate::dynamics::{Observer, Sediment, SimState};
use crate::error::{Error, Result};

/// Pearson correlation with its plain standard error `1/sqrt(m)` under
/// independence of the `m` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub pairs: usize,
}

impl Correlation {
    pub fn standard_error(&self) -> f64 {
        1.0 / (self.pairs as f64).sqrt()
    }
}

pub fn pearson(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Correlation> {
    let (mut n, mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0usize, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in pairs {
        n += 1;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    if n < 2 {
        return Err(Error::Argument("correlation needs two pairs".into()));
    }
    let nf = n as f64;
    let cov = sxy - sx * sy / nf;
    let vx = sxx - sx * sx / nf;
    let vy = syy - sy * sy / nf;
    if vx <= 0.0 || vy <= 0.0 {
        return Err(Error::Argument("constant sample".into()));
    }
    Ok(Correlation {
        r: (cov / (vx * vy).sqrt()).clamp(-1.0, 1.0),
        pairs: n,
    })
}

/// Correlation of per-node values between columns `j` and `j + distance`
/// of one row, over disjoint pairs spaced so that no node is reused and
/// consecutive pairs are `distance` apart.
pub fn same_row_pair_correlation(row_values: &[f64], distance: usize) -> Result<Correlation> {
    let w = row_values.len();
    if distance == 0 || 2 * distance > w {
        return Err(Error::Argument(format!("distance {distance} on a row of {w}")));
    }
    pearson(
        (0..w / (2 * distance))
            .map(|b| 2 * distance * b)
            .map(|j| (row_values[j], row_values[j + distance])),
    )
}

/// Pooled lag-1 autocorrelation of direction indicators across all nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lag1Autocorrelation {
    previous: Vec<bool>,
    // counts of (prev, now) pairs: [LL, LR, RL, RR] with L = 1
    table: [u64; 4],
}

impl Lag1Autocorrelation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, went_left: &[bool]) {
        if self.previous.len() == went_left.len() {
            for (&a, &b) in self.previous.iter().zip(went_left) {
                self.table[((!a) as usize) * 2 + (!b) as usize] += 1;
            }
        }
        self.previous.clear();
        self.previous.extend_from_slice(went_left);
    }

    pub fn merge(&mut self, other: &Lag1Autocorrelation) {
        for (a, b) in self.table.iter_mut().zip(other.table) {
            *a += b;
        }
    }

    pub fn pairs(&self) -> u64 {
        self.table.iter().sum()
    }

    pub fn value(&self) -> Result<f64> {
        let [ll, lr, rl, rr] = self.table.map(|c| c as f64);
        let n = ll + lr + rl + rr;
        if n == 0.0 {
            return Err(Error::Argument("no direction pairs".into()));
        }
        let (px, py) = ((ll + lr) / n, (ll + rl) / n);
        let denom = (px * (1.0 - px) * py * (1.0 - py)).sqrt();
        if denom == 0.0 {
            return Err(Error::Argument("constant directions".into()));
        }
        Ok((ll / n - px * py) / denom)
    }
}

impl<S: Sediment> Observer<S> for Lag1Autocorrelation {
    fn observe(&mut self, state: &SimState<S>) {
        self.push(state.went_left());
    }
}

/// Compares the configuration at time `from` with the one at time `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreezeTracker {
    from: u64,
    to: u64,
    initial: Option<Vec<bool>>,
    changed: Option<(usize, usize)>,
}

impl FreezeTracker {
    pub fn new(from: u64, to: u64) -> Self {
        Self {
            from,
            to,
            initial: None,
            changed: None,
        }
    }

    /// Fraction of nodes whose direction differs between the two times.
    pub fn changed_fraction(&self) -> Option<f64> {
        self.changed.map(|(c, n)| c as f64 / n as f64)
    }
}

impl<S: Sediment> Observer<S> for FreezeTracker {
    fn observe(&mut self, state: &SimState<S>) {
        let n = state.time();
        if n == self.from {
            self.initial = Some(state.went_left().to_vec());
        }
        if n == self.to {
            if let Some(init) = &self.initial {
                let c = init.iter().zip(state.went_left()).filter(|(a, b)| a != b).count();
                self.changed = Some((c, init.len()));
            }
        }
    }
}
