//! Preset experiments, each a fixed data set. `scale` shrinks widths and
//! durations, never depths or η grids.

use std::collections::BTreeMap;

use clap::ValueEnum;
use rill_core::dynamics::ConservationCheck;
use rill_core::fmt::sig9;
use rill_core::load_oracle::load_pmf_exact;
use rill_core::stats::csv::{
    write_binned, write_catastrophe, write_correlation, write_large_flood, write_load_histograms, write_switch_rates,
};
use rill_core::stats::{
    definetti_estimate, load_histogram, CatastropheAccumulator, CatastropheConfig, FloodAccumulator, FloodConfig,
    LoadCorrelationAccumulator, LoadHistogram, SwitchAccumulator,
};
use rill_core::{init, GridGeometry, Observer, SimState};
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig3,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Table1,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Fig3,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
        Preset::Fig8,
        Preset::Fig9,
        Preset::Table1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
            Preset::Fig9 => "fig9",
            Preset::Table1 => "table1",
        }
    }
}

/// Fraction of the duration discarded before flood statistics (9000 of
/// 10⁵ seconds in the reference runs).
pub const BURN_IN_FRACTION: f64 = 0.09;

pub fn check_scale(scale: f64) -> Result<f64, CliError> {
    if scale > 0.0 && scale <= 1.0 {
        Ok(scale)
    } else {
        Err(CliError::config("scale", format!("{scale} is not in (0, 1]")))
    }
}

/// `ceil(width * scale)` rounded up to even, at least 4.
pub fn scale_width(width: usize, scale: f64) -> usize {
    let w = (width as f64 * scale).ceil() as usize;
    (w + w % 2).max(4)
}

/// Width under the scale policy; unscaled widths are taken as given so that
/// they are validated rather than rounded.
pub fn scale_width_exact(width: usize, scale: f64) -> usize {
    if scale == 1.0 {
        width
    } else {
        scale_width(width, scale)
    }
}

pub fn scale_duration(steps: u64, scale: f64) -> u64 {
    ((steps as f64 * scale).ceil() as u64).max(1)
}

pub fn burn_in(steps: u64) -> u64 {
    (steps as f64 * BURN_IN_FRACTION).floor() as u64
}

/// Files produced by a preset, keyed by name, plus the parameters used.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetOutput {
    pub files: BTreeMap<String, Vec<u8>>,
    pub parameters: serde_json::Value,
}

/// Shared simulation plumbing. Every integer-rain run is checked for row
/// conservation at every step when a checker is attached.
#[derive(Default)]
pub struct Runner {
    pub conservation: Option<ConservationCheck>,
}

impl Runner {
    pub fn checked() -> Self {
        Self {
            conservation: Some(ConservationCheck::new()),
        }
    }

    pub fn simulate(
        &mut self,
        geometry: GridGeometry,
        eta: f64,
        seed: u64,
        steps: u64,
        observers: &mut [&mut dyn Observer<u64>],
    ) -> Result<SimState<u64>, CliError> {
        let mut state = init::<u64>(geometry, eta, 1, seed)?;
        let mut all: Vec<&mut dyn Observer<u64>> = observers.iter_mut().map(|o| -> &mut dyn Observer<u64> { &mut **o }).collect();
        if let Some(c) = self.conservation.as_mut() {
            all.push(c);
        }
        state.run(steps, &mut all)?;
        Ok(state)
    }
}

fn csv(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory");
    buf
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}

pub fn run_preset(preset: Preset, scale: f64, seed: u64, runner: &mut Runner) -> Result<PresetOutput, CliError> {
    let scale = check_scale(scale)?;
    match preset {
        Preset::Fig3 => fig3(scale, seed, runner),
        Preset::Fig5 => fig5(seed, runner),
        Preset::Fig6 => fig6(scale, seed, runner),
        Preset::Fig7 => fig7(scale, seed, runner),
        Preset::Fig8 => fig8(scale, seed, runner),
        Preset::Fig9 => fig9(scale, seed, runner),
        Preset::Table1 => table1(scale, seed, runner),
    }
}

/// Per-row load histograms at a fixed time.
pub fn load_histograms(
    width: usize,
    depth: usize,
    steps: u64,
    eta: f64,
    seed: u64,
    runner: &mut Runner,
) -> Result<Vec<LoadHistogram>, CliError> {
    let g = GridGeometry::new(width, depth)?;
    let state = runner.simulate(g, eta, seed, steps, &mut [])?;
    Ok((1..=depth).map(|k| load_histogram(&state, k)).collect::<Result<_, _>>()?)
}

fn fig3(scale: f64, seed: u64, runner: &mut Runner) -> Result<PresetOutput, CliError> {
    let (width, depth, steps, eta) = (scale_width(1_000_000, scale), 10, 300, 1.0);
    let hists = load_histograms(width, depth, steps, eta, seed, runner)?;
    let mut pmf = String::from("row,load,prob\n");
    let mut tv = String::from("row,total_variation\n");
    for h in &hists {
        // The state after `steps` flips holds the load the next flip sends.
        let exact = load_pmf_exact(h.row, steps as usize + 1)?;
        for (load, _) in &exact.probs {
            pmf += &format!("{},{load},{}\n", h.row, sig9(exact.prob_f64(*load)));
        }
        tv += &format!("{},{}\n", h.row, sig9(h.total_variation(&exact)));
    }
    let files = BTreeMap::from([
        ("load_histogram.csv".into(), csv(|b| write_load_histograms(b, &hists))),
        ("load_pmf_exact.csv".into(), pmf.into_bytes()),
        ("load_total_variation.csv".into(), tv.into_bytes()),
    ]);
    Ok(PresetOutput {
        files,
        parameters: json!({"width": width, "depth": depth, "steps": steps, "eta": eta, "seed": seed}),
    })
}

pub const FIG5_WIDTH: usize = 50;
pub const FIG5_BOX: usize = 49;
pub const FIG5_END: u64 = 200;
pub const FIG5_TRIALS: usize = 6;

/// η grid of the load-correlation preset: 0.1 to 2 by 0.1, then 3, 4, 5,
/// then 10, 100, 1000 and 10000.
pub fn fig5_etas() -> Vec<f64> {
    let mut etas: Vec<f64> = (1..=20).map(|i| i as f64 / 10.0).collect();
    etas.extend([3.0, 4.0, 5.0, 10.0, 100.0, 1000.0, 10000.0]);
    etas
}

/// Trial-averaged `K(n)` series and its literal time average.
pub fn averaged_correlation(eta: f64, seed: u64, runner: &mut Runner) -> Result<(Vec<(u64, f64)>, f64), CliError> {
    let g = GridGeometry::new(FIG5_WIDTH, FIG5_BOX)?;
    let mut series: Vec<(u64, f64)> = Vec::new();
    let mut avg = 0.0;
    for t in 0..FIG5_TRIALS {
        let mut acc = LoadCorrelationAccumulator::new(g, FIG5_BOX, FIG5_BOX)?;
        runner.simulate(g, eta, trial_seed(seed, t), FIG5_END, &mut [&mut acc])?;
        avg += acc.time_average(FIG5_END)?;
        if series.is_empty() {
            series = acc.series.iter().map(|&(n, _)| (n, 0.0)).collect();
        }
        for (s, (_, k)) in series.iter_mut().zip(&acc.series) {
            s.1 += k / FIG5_TRIALS as f64;
        }
    }
    Ok((series, avg / FIG5_TRIALS as f64))
}

fn fig5(seed: u64, runner: &mut Runner) -> Result<PresetOutput, CliError> {
    let mut series = Vec::new();
    let mut avg = String::from("eta,K_avg\n");
    for eta in fig5_etas() {
        let (s, a) = averaged_correlation(eta, seed, runner)?;
        series.extend(s.into_iter().map(|(n, k)| (eta, n, k)));
        avg += &format!("{},{}\n", sig9(eta), sig9(a));
    }
    let files = BTreeMap::from([
        ("load_correlation.csv".into(), csv(|b| write_correlation(b, &series))),
        ("load_correlation_avg.csv".into(), avg.into_bytes()),
    ]);
    Ok(PresetOutput {
        files,
        parameters: json!({
            "width": FIG5_WIDTH, "depth": FIG5_BOX, "box": [FIG5_BOX, FIG5_BOX],
            "end": FIG5_END, "trials": FIG5_TRIALS, "etas": fig5_etas(), "seed": seed,
        }),
    })
}

fn fig6(scale: f64, seed: u64, runner: &mut Runner) -> Result<PresetOutput, CliError> {
    let (width, depth, steps) = (scale_width(100_000, scale), 9, scale_duration(10_000, scale));
    let g = GridGeometry::new(width, depth)?;
    let rows = [2usize, 5, 9];
    let etas = [0.5, 1.0, 2.0];
    let mut files = BTreeMap::new();
    for eta in etas {
        let state = runner.simulate(g, eta, seed, steps, &mut [])?;
        let h = definetti_estimate(&state, 100)?;
        let labelled: Vec<_> = rows.iter().map(|&k| (k.to_string(), h.row(k).expect("row"))).collect();
        files.insert(format!("definetti_eta{}.csv", sig9(eta)), csv(|b| write_binned(b, &labelled)));
    }
    Ok(PresetOutput {
        files,
        parameters: json!({"width": width, "depth": depth, "steps": steps, "etas": etas, "rows": rows, "bins": 100, "seed": seed}),
    })
}

pub const SWITCH_ETAS: [f64; 3] = [0.1, 1.0, 10.0];

/// Row-averaged switching rates, averaged over trials.
pub fn switch_rates(
    width: usize,
    depth: usize,
    steps: u64,
    eta: f64,
    trials: usize,
    seed: u64,
    runner: &mut Runner,
) -> Result<Vec<f64>, CliError> {
    let g = GridGeometry::new(width, depth)?;
    let mut rates = vec![0.0; depth];
    for t in 0..trials {
        let mut acc = SwitchAccumulator::new(width, g.node_count());
        runner.simulate(g, eta, trial_seed(seed, t), steps, &mut [&mut acc])?;
        for (k, r) in rates.iter_mut().enumerate() {
            *r += acc.row_average(k + 1)? / trials as f64;
        }
    }
    Ok(rates)
}

fn fig7(scale: f64, seed: u64, runner: &mut Runner) -> Result<PresetOutput, CliError> {
    let (width, depth, steps, trials) = (scale_width(100_000, scale), 50, scale_duration(1000, scale).max(2), 3);
    let mut rows = Vec::new();
    for eta in SWITCH_ETAS {
        let rates = switch_rates(width, depth, steps, eta, trials, seed, runner)?;
        rows.extend(rates.into_iter().enumerate().map(|(k, r)| (eta, k + 1, r)));
    }
    Ok(PresetOutput {
        files: BTreeMap::from([("switch_rates.csv".into(), csv(|b| write_switch_rates(b, &rows)))]),
        parameters: json!({"width": width, "depth": depth, "steps": steps, "trials": trials, "etas": SWITCH_ETAS, "seed": seed}),
    })
}

pub const FLOOD_ETAS: [f64; 3] = [0.1, 1.0, 10.0];
pub const FLOOD_ROWS: [usize; 3] = [5, 20, 50];

/// Flood statistics over `steps` seconds with the standard burn-in.
pub fn flood_run(
    width: usize,
    depth: usize,
    steps: u64,
    eta: f64,
    seed: u64,
    bins: usize,
    runner: &mut Runner,
) -> Result<FloodAccumulator, CliError> {
    let g = GridGeometry::new(width, depth)?;
    let cfg = FloodConfig {
        burn_in: burn_in(steps),
        bins,
        ..FloodConfig::default()
    };
    let mut acc = FloodAccumulator::new(width, depth, cfg)?;
    runner.simulate(g, eta, seed, steps, &mut [&mut acc])?;
    Ok(acc)
}

fn fig8(scale: f64, seed: u64, runner: &mut Runner) -> Result<PresetOutput, CliError> {
    let (width, depth, steps) = (scale_width(10_000, scale), 50, scale_duration(100_000, scale).max(2));
    let mut files = BTreeMap::new();
    let mut large = Vec::new();
    for eta in FLOOD_ETAS {
        let acc = flood_run(width, depth, steps, eta, seed, 60, runner)?;
        let labelled: Vec<_> = FLOOD_ROWS
            .iter()
            .map(|&k| (k.to_string(), acc.row(k).and_then(|r| r.hist.as_ref()).expect("row")))
            .collect();
        files.insert(format!("flood_hist_eta{}.csv", sig9(eta)), csv(|b| write_binned(b, &labelled)));
        large.extend(FLOOD_ROWS.iter().map(|&k| (eta, k, acc.row(k).expect("row").large_fraction())));
    }
    files.insert("large_flood.csv".into(), csv(|b| write_large_flood(b, &large)));
    Ok(PresetOutput {
        files,
        parameters: json!({
            "width": width, "depth": depth, "steps": steps, "burn_in": burn_in(steps),
            "etas": FLOOD_ETAS, "rows": FLOOD_ROWS, "threshold": 5.0, "trials": TABLE1_TRIALS, "seed": seed,
        }),
    })
}

fn fig9(scale: f64, seed: u64, runner: &mut Runner) -> Result<PresetOutput, CliError> {
    let (width, depth) = (scale_width(1000, scale), 50);
    let (start, end) = (scale_duration(9000, scale), scale_duration(10_000, scale));
    // Pairing resolves one step after a catastrophe; later seconds cannot
    // change the counts.
    let steps = end + 1;
    let g = GridGeometry::new(width, depth)?;
    let mut rows = Vec::new();
    for eta in FLOOD_ETAS {
        let cfg = CatastropheConfig {
            start,
            end,
            ..CatastropheConfig::default()
        };
        let mut acc = CatastropheAccumulator::new(width, depth, cfg)?;
        runner.simulate(g, eta, seed, steps, &mut [&mut acc])?;
        rows.extend(
            (2..=depth).map(|k| (eta, k, acc.from_left_parent[k - 1].events, acc.from_left_parent[k - 1].flooded)),
        );
    }
    Ok(PresetOutput {
        files: BTreeMap::from([("catastrophe_flood.csv".into(), csv(|b| write_catastrophe(b, &rows)))]),
        parameters: json!({
            "width": width, "depth": depth, "window": [start, end], "steps": steps,
            "etas": FLOOD_ETAS, "min_order": 1.0, "numerator": "arriving", "pairing": "next-step", "seed": seed,
        }),
    })
}

/// Large-flood fractions for the table: `(eta, row, fraction)` and the
/// number of bound violations seen.
/// Independent trials averaged per table entry.
pub const TABLE1_TRIALS: usize = 8;

pub fn table1_values(scale: f64, seed: u64, runner: &mut Runner) -> Result<(Vec<(f64, usize, f64)>, u64, u64), CliError> {
    let (width, depth, steps) = (scale_width(1000, scale), 50, scale_duration(100_000, scale).max(2));
    let mut rows = Vec::new();
    let (mut violations, mut checked) = (0, 0);
    for eta in FLOOD_ETAS {
        let mut mean = [0.0; FLOOD_ROWS.len()];
        for t in 0..TABLE1_TRIALS {
            let acc = flood_run(width, depth, steps, eta, trial_seed(seed, t), 0, runner)?;
            violations += acc.violations();
            checked += acc.checked();
            for (m, &k) in mean.iter_mut().zip(&FLOOD_ROWS) {
                *m += acc.row(k).expect("row").large_fraction() / TABLE1_TRIALS as f64;
            }
        }
        rows.extend(FLOOD_ROWS.iter().zip(mean).map(|(&k, m)| (eta, k, m)));
    }
    Ok((rows, violations, checked))
}

fn table1(scale: f64, seed: u64, runner: &mut Runner) -> Result<PresetOutput, CliError> {
    let (rows, _, _) = table1_values(scale, seed, runner)?;
    let steps = scale_duration(100_000, scale).max(2);
    Ok(PresetOutput {
        files: BTreeMap::from([("large_flood.csv".into(), csv(|b| write_large_flood(b, &rows)))]),
        parameters: json!({
            "width": scale_width(1000, scale), "depth": 50, "steps": steps, "burn_in": burn_in(steps),
            "etas": FLOOD_ETAS, "rows": FLOOD_ROWS, "threshold": 5.0, "trials": TABLE1_TRIALS, "seed": seed,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_policy() {
        assert_eq!(scale_width(1_000_000, 0.01), 10_000);
        assert_eq!(scale_width(1000, 0.1), 100);
        assert_eq!(scale_width(49, 1.0), 50);
        assert_eq!(scale_width(10, 0.01), 4);
        assert_eq!(scale_duration(100_000, 0.1), 10_000);
        assert_eq!(scale_duration(300, 0.001), 1);
        assert_eq!(burn_in(10_000), 900);
        assert!(check_scale(0.0).is_err());
        assert!(check_scale(1.5).is_err());
    }

    #[test]
    fn fig5_grid() {
        let etas = fig5_etas();
        assert_eq!(etas.len(), 27);
        assert_eq!(etas[19], 2.0);
        assert_eq!(&etas[20..23], &[3.0, 4.0, 5.0]);
    }
}
