//! Pólya urns with constant and time-dependent reinforcement.
//!
//! A top-row node is exactly an urn started from `η` red and `η` black
//! balls with constant input `r`: red mass is `T^L + η`, black mass is
//! `T^R + η`.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct UrnState {
    pub red: f64,
    pub black: f64,
    /// Reinforcement `I_0, I_1, ...`; the last entry repeats forever.
    pub inputs: Vec<f64>,
}

impl UrnState {
    pub fn new(red: f64, black: f64, inputs: Vec<f64>) -> Result<Self> {
        if !(red > 0.0 && black > 0.0) {
            return Err(Error::Argument(format!(
                "urn needs positive contents (red {red}, black {black})"
            )));
        }
        if inputs.is_empty() || inputs.iter().any(|&i| !(i > 0.0)) {
            return Err(Error::Argument("urn inputs must be non-empty and positive".into()));
        }
        Ok(Self { red, black, inputs })
    }

    /// Classical urn: one ball of the drawn colour added per draw.
    pub fn polya(red: f64, black: f64) -> Result<Self> {
        Self::new(red, black, vec![1.0])
    }

    pub fn input(&self, n: usize) -> f64 {
        self.inputs[n.min(self.inputs.len() - 1)]
    }

    pub fn red_fraction(&self) -> f64 {
        self.red / (self.red + self.black)
    }

    /// Draw `n` with a supplied uniform on `[0, 1)`; returns `true` on red.
    pub fn draw_with(&mut self, n: usize, uniform: f64) -> bool {
        let add = self.input(n);
        let red = uniform * (self.red + self.black) < self.red;
        if red {
            self.red += add;
        } else {
            self.black += add;
        }
        red
    }
}

/// One draw: red with probability `red / (red + black)`, then `I_n` balls of
/// the drawn colour are added.
pub fn urn_step<R: Rng + ?Sized>(u: &mut UrnState, n: usize, rng: &mut R) -> bool {
    let x: f64 = rng.random();
    u.draw_with(n, x)
}

/// Red fraction after `steps` draws.
pub fn limit_fraction<R: Rng + ?Sized>(u: &UrnState, steps: usize, rng: &mut R) -> Result<f64> {
    if steps == 0 {
        return Err(Error::Argument("limit_fraction needs at least one draw".into()));
    }
    let mut u = u.clone();
    for n in 0..steps {
        urn_step(&mut u, n, rng);
    }
    Ok(u.red_fraction())
}

/// Regularized incomplete beta `I_x(a, b)`, the Beta(a, b) CDF.
pub fn beta_cdf(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::Argument(format!("beta parameters must be positive (a {a}, b {b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Argument(format!("beta_cdf needs x in [0, 1] (got {x})")));
    }
    statrs::function::beta::checked_beta_reg(a, b, x).map_err(|e| Error::Argument(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_draw_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let reds = (0..n)
            .filter(|_| urn_step(&mut UrnState::polya(1.0, 1.0).unwrap(), 0, &mut rng))
            .count();
        assert!((reds as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn update_after_red() {
        let mut u = UrnState::polya(1.0, 1.0).unwrap();
        assert!(u.draw_with(0, 0.1));
        assert_eq!((u.red, u.black), (2.0, 1.0));
        assert!((u.red_fraction() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn one_step_fraction_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = UrnState::polya(1.0, 1.0).unwrap();
        let mut thirds = 0;
        for _ in 0..20_000 {
            let f = limit_fraction(&u, 1, &mut rng).unwrap();
            if (f - 1.0 / 3.0).abs() < 1e-12 {
                thirds += 1;
            } else {
                assert!((f - 2.0 / 3.0).abs() < 1e-12);
            }
        }
        assert!((thirds as f64 / 20_000.0 - 0.5).abs() < 0.02);
        assert!(limit_fraction(&u, 0, &mut rng).is_err());
    }

    #[test]
    fn time_dependent_input_used() {
        let mut u = UrnState::new(1.0, 1.0, vec![1.0, 5.0, 2.0]).unwrap();
        u.draw_with(0, 0.0);
        u.draw_with(1, 0.0);
        u.draw_with(2, 0.99);
        u.draw_with(7, 0.99);
        assert_eq!((u.red, u.black), (7.0, 5.0));
        assert!(UrnState::new(0.0, 1.0, vec![1.0]).is_err());
        assert!(UrnState::new(1.0, 1.0, vec![]).is_err());
    }

    #[test]
    fn beta_closed_forms() {
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((beta_cdf(1.0, 1.0, x).unwrap() - x).abs() < 1e-10);
            // Beta(2, 2): 3x^2 - 2x^3.
            let p = 3.0 * x * x - 2.0 * x * x * x;
            assert!((beta_cdf(2.0, 2.0, x).unwrap() - p).abs() < 1e-10);
            // Beta(1/2, 1/2): arcsine law.
            let p = 2.0 / std::f64::consts::PI * x.sqrt().asin();
            assert!((beta_cdf(0.5, 0.5, x).unwrap() - p).abs() < 1e-10, "x={x}");
            // Beta(2, 1) = x^2 and Beta(1, 2) = 1 - (1-x)^2.
            assert!((beta_cdf(2.0, 1.0, x).unwrap() - x * x).abs() < 1e-10);
            assert!((beta_cdf(1.0, 2.0, x).unwrap() - (1.0 - (1.0 - x).powi(2))).abs() < 1e-10);
        }
        assert!((beta_cdf(2.0, 2.0, 0.25).unwrap() - 0.15625).abs() < 1e-12);
        for a in [0.5, 1.0, 2.0, 7.3] {
            assert!((beta_cdf(a, a, 0.5).unwrap() - 0.5).abs() < 1e-10);
            assert_eq!(beta_cdf(a, 1.5, 0.0).unwrap(), 0.0);
            assert!((beta_cdf(a, 1.5, 1.0).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn beta_domain_errors() {
        assert!(beta_cdf(0.0, 1.0, 0.5).is_err());
        assert!(beta_cdf(1.0, -1.0, 0.5).is_err());
        assert!(beta_cdf(1.0, 1.0, 1.5).is_err());
        assert!(beta_cdf(1.0, 1.0, -0.1).is_err());
        assert!(beta_cdf(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn beta_monotone() {
        for (a, b) in [(0.5, 0.5), (2.0, 5.0), (0.1, 3.0)] {
            let mut prev = 0.0;
            for i in 0..=1000 {
                let c = beta_cdf(a, b, i as f64 / 1000.0).unwrap();
                assert!(c >= prev - 1e-15);
                prev = c;
            }
        }
    }
}
