//! Browser bindings: a live lattice, the urn limit law, and the exact
//! load law. The plain functions carry the logic so they test natively.

use rill_core::load_oracle::load_pmf_exact;
use rill_core::rng::CoinRng;
use rill_core::urns::{beta_cdf, UrnState};
use rill_core::{init, GridGeometry, SimState};
use wasm_bindgen::prelude::*;

const MAX_NODES: usize = 1 << 20;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

pub struct Lattice {
    state: SimState<u64>,
}

impl Lattice {
    pub fn new(width: usize, depth: usize, eta: f64, seed: u64) -> Result<Self, String> {
        let g = GridGeometry::new(width, depth).map_err(|e| e.to_string())?;
        if g.node_count() > MAX_NODES {
            return Err(format!("{} nodes is too many for the page", g.node_count()));
        }
        let state = init(g, eta, 1, seed).map_err(|e| e.to_string())?;
        Ok(Self { state })
    }

    pub fn advance(&mut self, steps: u32) -> Result<(), String> {
        self.state.run(steps as u64, &mut []).map_err(|e| e.to_string())
    }

    /// Row-major directions, 1 for left.
    pub fn directions(&self) -> Vec<u8> {
        self.state.went_left().iter().map(|&l| l as u8).collect()
    }

    pub fn loads(&self) -> Vec<u32> {
        self.state.input().iter().map(|&l| l.min(u32::MAX as u64) as u32).collect()
    }
}

/// `urns` independent urns from `η` red and `η` black, one ball added per
/// draw; the histogram of red fractions after `draws` draws over `bins`
/// equal bins of `[0, 1]`, as masses.
pub fn urn_limit_histogram(eta: f64, draws: u32, urns: u32, bins: usize, seed: u64) -> Result<Vec<f64>, String> {
    if bins == 0 || urns == 0 {
        return Err("need at least one bin and one urn".into());
    }
    let coins = CoinRng::new(seed);
    let mut hist = vec![0.0; bins];
    for i in 0..urns as usize {
        let mut u = UrnState::polya(eta, eta).map_err(|e| e.to_string())?;
        for n in 0..draws as usize {
            u.draw_with(n, coins.uniform(1, i, n as u64 + 1));
        }
        let b = ((u.red_fraction() * bins as f64) as usize).min(bins - 1);
        hist[b] += 1.0 / urns as f64;
    }
    Ok(hist)
}

/// Mass of Beta(η, η) in each of `bins` equal bins of `[0, 1]`.
pub fn beta_bin_masses(eta: f64, bins: usize) -> Result<Vec<f64>, String> {
    let cdf = |x: f64| beta_cdf(eta, eta, x).map_err(|e| e.to_string());
    (0..bins)
        .map(|i| Ok(cdf((i + 1) as f64 / bins as f64)? - cdf(i as f64 / bins as f64)?))
        .collect()
}

/// Long-run law of the load at depth `k`: entry `l - 1` is `P(I = l)`.
pub fn stationary_load_pmf(depth: usize) -> Result<Vec<f64>, String> {
    let pmf = load_pmf_exact(depth, depth).map_err(|e| e.to_string())?;
    let cap = depth * (depth + 1) / 2;
    Ok((1..=cap as u64).map(|l| pmf.prob_f64(l)).collect())
}

#[wasm_bindgen]
pub struct Simulation(Lattice);

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(width: usize, depth: usize, eta: f64, seed: u32) -> Result<Simulation, JsError> {
        Lattice::new(width, depth, eta, seed as u64).map(Simulation).map_err(js)
    }

    pub fn step(&mut self, steps: u32) -> Result<(), JsError> {
        self.0.advance(steps).map_err(js)
    }

    pub fn time(&self) -> f64 {
        self.0.state.time() as f64
    }

    pub fn directions(&self) -> Vec<u8> {
        self.0.directions()
    }

    pub fn loads(&self) -> Vec<u32> {
        self.0.loads()
    }
}

#[wasm_bindgen(js_name = urnHistogram)]
pub fn urn_histogram_js(eta: f64, draws: u32, urns: u32, bins: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    urn_limit_histogram(eta, draws, urns, bins, seed as u64).map_err(js)
}

#[wasm_bindgen(js_name = betaMasses)]
pub fn beta_masses_js(eta: f64, bins: usize) -> Result<Vec<f64>, JsError> {
    beta_bin_masses(eta, bins).map_err(js)
}

#[wasm_bindgen(js_name = loadPmf)]
pub fn load_pmf_js(depth: usize) -> Result<Vec<f64>, JsError> {
    stationary_load_pmf(depth).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_steps_and_conserves() {
        let mut l = Lattice::new(8, 3, 1.0, 4).unwrap();
        l.advance(5).unwrap();
        assert_eq!(l.directions().len(), 24);
        let row3: u32 = l.loads()[16..].iter().sum();
        assert_eq!(row3, 3 * 8);
        assert!(Lattice::new(7, 3, 1.0, 0).is_err());
    }

    #[test]
    fn urns_approach_beta() {
        let h = urn_limit_histogram(1.0, 400, 4000, 10, 1).unwrap();
        let b = beta_bin_masses(1.0, 10).unwrap();
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (x, y) in h.iter().zip(&b) {
            assert!((x - y).abs() < 0.03, "{x} vs {y}");
        }
    }

    #[test]
    fn load_law_of_depth_two() {
        assert_eq!(stationary_load_pmf(2).unwrap(), vec![0.25, 0.5, 0.25]);
        assert!(stationary_load_pmf(0).is_err());
    }
}
