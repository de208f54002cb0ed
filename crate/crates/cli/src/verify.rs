//! The acceptance suite. Each criterion returns a verdict and a one-line
//! account of the numbers it was decided on.

use std::time::Instant;

use num_rational::BigRational;
use num_traits::One;
use rill_core::exact_enum::{verify_fixed_time_iid, verify_martingale};
use rill_core::load_oracle::{cluster_pmf_bruteforce, load_pmf_exact};
use rill_core::stats::{
    ks_distance, left_probability_estimates, CatastropheAccumulator, CatastropheConfig, FreezeTracker,
    Lag1Autocorrelation, Side, SwitchAccumulator,
};
use rill_core::urns::beta_cdf;
use rill_core::{GridGeometry, NodeId};

use crate::error::CliError;
use crate::experiment::{
    averaged_correlation, flood_run, load_histograms, run_preset, switch_rates, table1_values, Preset, Runner,
    FLOOD_ETAS, SWITCH_ETAS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: usize,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Verdict {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {} ({:.1}s): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.detail
        )
    }
}

type Check = fn(&mut Suite) -> Result<(bool, String), CliError>;

pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    pub fast: bool,
    check: Check,
}

pub const CRITERIA: [Criterion; 12] = [
    Criterion { id: 1, title: "exact martingale identity", fast: true, check: c1_martingale },
    Criterion { id: 2, title: "exact fixed-time law and mean load", fast: true, check: c2_fixed_time },
    Criterion { id: 3, title: "cluster law equals walk law", fast: true, check: c3_cross_oracle },
    Criterion { id: 4, title: "simulated loads match the exact law", fast: false, check: c4_dynamics_vs_oracle },
    Criterion { id: 6, title: "top row is Beta(eta, eta)", fast: true, check: c6_beta },
    Criterion { id: 7, title: "switching-rate law and row trend", fast: false, check: c7_switching },
    Criterion { id: 8, title: "load correlation regimes", fast: true, check: c8_correlation },
    Criterion { id: 9, title: "large-flood table trends", fast: false, check: c9_table1 },
    Criterion { id: 10, title: "flood bounds and defined catastrophes", fast: true, check: c10_bounds },
    Criterion { id: 11, title: "thread-count determinism", fast: true, check: c11_determinism },
    Criterion { id: 12, title: "limit regimes", fast: true, check: c12_limits },
    // Runs last: it audits every simulation above.
    Criterion { id: 5, title: "row conservation on every run", fast: true, check: c5_conservation },
];

pub struct Suite {
    pub seed: u64,
    pub level: Level,
    runner: Runner,
    flood_audit: Option<(u64, u64)>,
}

impl Suite {
    pub fn new(seed: u64, level: Level) -> Self {
        Self {
            seed,
            level,
            runner: Runner::checked(),
            flood_audit: None,
        }
    }

    /// Runs the criteria of the level, reporting each verdict as it lands.
    pub fn run(&mut self, mut report: impl FnMut(&Verdict)) -> Vec<Verdict> {
        let mut out = Vec::new();
        let level = self.level;
        for c in CRITERIA.iter().filter(|c| c.fast || level == Level::Full) {
            let t = Instant::now();
            let (pass, detail) = match (c.check)(self) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            let v = Verdict {
                id: c.id,
                title: c.title,
                pass,
                detail,
                seconds: t.elapsed().as_secs_f64(),
            };
            report(&v);
            out.push(v);
        }
        out
    }
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

const EXACT_ETAS: [(i64, i64); 3] = [(1, 2), (1, 1), (2, 1)];

fn c1_martingale(_: &mut Suite) -> Result<(bool, String), CliError> {
    let g = GridGeometry::new(8, 2)?;
    let cones = [g.influence_cone(NodeId::new(1, 3), 0)?, g.influence_cone(NodeId::new(2, 3), 1)?];
    let mut checks = 0;
    let mut failures = Vec::new();
    for cone in &cones {
        for (p, q) in EXACT_ETAS {
            let r = verify_martingale(&g, cone, 3, &rational(p, q))?;
            checks += r.checks;
            failures.extend(r.failures);
        }
    }
    let pass = failures.is_empty() && checks > 0;
    Ok((pass, format!("{checks} exact identities, {} failures", failures.len())))
}

fn c2_fixed_time(_: &mut Suite) -> Result<(bool, String), CliError> {
    let g = GridGeometry::new(8, 2)?;
    let cone = g.influence_cone(NodeId::new(2, 3), 1)?;
    let mut checks = 0;
    let mut failures = 0;
    for (p, q) in EXACT_ETAS {
        let r = verify_fixed_time_iid(&g, &cone, 3, &rational(p, q))?;
        checks += r.checks;
        failures += r.failures.len();
    }
    // The walk law's mean at every depth and horizon.
    let mut means = 0;
    for k in 1..=10 {
        for i in 1..=20 {
            let pmf = load_pmf_exact(k, i)?;
            if !pmf.total().is_one() || pmf.mean() != rational(i.min(k) as i64, 1) {
                failures += 1;
            }
            means += 1;
        }
    }
    Ok((
        failures == 0 && checks > 0,
        format!("{checks} enumeration checks and {means} walk means, {failures} failures"),
    ))
}

fn c3_cross_oracle(_: &mut Suite) -> Result<(bool, String), CliError> {
    let mut mismatches = Vec::new();
    for k in 1..=6 {
        let brute = cluster_pmf_bruteforce(k)?;
        for n in [k, k + 1, k + 7] {
            if load_pmf_exact(k, n)?.probs != brute.probs {
                mismatches.push(format!("k={k} n={n}"));
            }
        }
    }
    Ok((
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "identical for k = 1..6".into()
        } else {
            format!("mismatch at {}", mismatches.join(", "))
        },
    ))
}

fn c4_dynamics_vs_oracle(s: &mut Suite) -> Result<(bool, String), CliError> {
    let steps = 300;
    let hists = load_histograms(100_000, 8, steps, 1.0, s.seed, &mut s.runner)?;
    let mut pass = true;
    let mut worst_tv: f64 = 0.0;
    let mut notes = Vec::new();
    for h in &hists {
        let exact = load_pmf_exact(h.row, steps as usize + 1)?;
        let tv = h.total_variation(&exact);
        worst_tv = worst_tv.max(tv);
        pass &= tv <= 0.02;
        if h.row >= 2 {
            let p1 = h.frequency(1);
            pass &= (p1 - 0.25).abs() <= 0.01;
            notes.push(format!("P1[{}]={p1:.4}", h.row));
        }
        if h.row >= 3 {
            let p2 = h.frequency(2);
            pass &= (p2 - 0.125).abs() <= 0.01;
        }
    }
    let mut spread: f64 = 0.0;
    for l in 1..=4 {
        let f: Vec<f64> = [5, 7, 8].iter().map(|&k| hists[k - 1].frequency(l)).collect();
        let hi = f.iter().cloned().fold(f64::MIN, f64::max);
        let lo = f.iter().cloned().fold(f64::MAX, f64::min);
        spread = spread.max(hi - lo);
    }
    pass &= spread <= 0.005;
    Ok((
        pass,
        format!("max TV {worst_tv:.4}, rows 5/7/8 spread on loads 1..4 {spread:.4}, {}", notes.join(" ")),
    ))
}

fn c5_conservation(s: &mut Suite) -> Result<(bool, String), CliError> {
    let c = s.runner.conservation.as_ref().expect("checked runner");
    let pass = c.ok() && c.steps_checked > 0;
    Ok((
        pass,
        format!("{} steps audited, {} violations", c.steps_checked, c.violations.len()),
    ))
}

fn c6_beta(s: &mut Suite) -> Result<(bool, String), CliError> {
    let g = GridGeometry::new(10_000, 1)?;
    let mut pass = true;
    let mut notes = Vec::new();
    for eta in [0.5, 1.0, 2.0] {
        let state = s.runner.simulate(g, eta, s.seed, 10_000, &mut [])?;
        let p = left_probability_estimates(&state, 1)?;
        let d = ks_distance(&p, |x| beta_cdf(eta, eta, x).unwrap_or(f64::NAN));
        pass &= d <= 0.02;
        notes.push(format!("eta={eta}: KS={d:.4}"));
    }
    Ok((pass, notes.join(", ")))
}

fn c7_switching(s: &mut Suite) -> Result<(bool, String), CliError> {
    let (width, depth, steps) = (10_000, 10, 10_000);
    let g = GridGeometry::new(width, depth)?;
    let mut acc = SwitchAccumulator::new(width, g.node_count());
    let state = s.runner.simulate(g, 1.0, s.seed, steps, &mut [&mut acc])?;
    let close = (0..g.node_count())
        .filter(|&i| {
            let p = state.left_probability_at(i);
            acc.rate(i).map(|r| (r - 2.0 * p * (1.0 - p)).abs() <= 0.05).unwrap_or(false)
        })
        .count();
    let share = close as f64 / g.node_count() as f64;
    let mut pass = share >= 0.99;
    let mut notes = vec![format!("{:.2}% of nodes within 0.05", 100.0 * share)];
    for eta in SWITCH_ETAS {
        let rates = if eta == 1.0 {
            (1..=depth).map(|k| acc.row_average(k)).collect::<Result<Vec<_>, _>>()?
        } else {
            switch_rates(width, depth, steps, eta, 1, s.seed, &mut s.runner)?
        };
        let decreasing = rates[1..].windows(2).all(|w| w[1] < w[0]);
        pass &= decreasing;
        notes.push(format!(
            "eta={eta}: rows 2..10 {:.4}..{:.4}{}",
            rates[1],
            rates[depth - 1],
            if decreasing { "" } else { " NOT decreasing" }
        ));
    }
    Ok((pass, notes.join(", ")))
}

fn c8_correlation(s: &mut Suite) -> Result<(bool, String), CliError> {
    let etas = [0.1, 0.5, 1.0, 2.0, 5.0];
    let mut values = Vec::new();
    for eta in etas {
        values.push(averaged_correlation(eta, s.seed, &mut s.runner)?.1);
    }
    let k10 = averaged_correlation(10.0, s.seed, &mut s.runner)?.1;
    let monotone = values.windows(2).all(|w| w[1] < w[0]);
    let pass = monotone && values[0] > 0.9 && (k10 - 0.24).abs() <= 0.1;
    let shown: Vec<String> = etas.iter().zip(&values).map(|(e, k)| format!("{e}:{k:.3}")).collect();
    Ok((pass, format!("K = {}, eta=10: {k10:.3}", shown.join(" "))))
}

fn c9_table1(s: &mut Suite) -> Result<(bool, String), CliError> {
    let (rows, violations, checked) = table1_values(0.1, s.seed, &mut s.runner)?;
    s.flood_audit = Some((violations, checked));
    let mut pass = true;
    let mut notes = Vec::new();
    for eta in FLOOD_ETAS {
        let f: Vec<f64> = rows.iter().filter(|r| r.0 == eta).map(|r| r.2).collect();
        let increasing = f.windows(2).all(|w| w[1] > w[0]);
        pass &= increasing;
        notes.push(format!("eta={eta}: {:.5} {:.5} {:.5}", f[0], f[1], f[2]));
    }
    let target = 0.01789;
    let row50 = rows.iter().find(|r| r.0 == 1.0 && r.1 == 50).map(|r| r.2).unwrap_or(0.0);
    pass &= row50 >= target / 2.0 && row50 <= target * 2.0;
    Ok((pass, notes.join(", ")))
}

/// Replays a recorded direction history and confirms that every emitted
/// catastrophe sample had a prior send in its direction, and that every
/// defined case was emitted.
fn audit_catastrophes(seed: u64, runner: &mut Runner) -> Result<(bool, usize), CliError> {
    let (width, depth, steps) = (40, 8, 200);
    let g = GridGeometry::new(width, depth)?;
    let cfg = CatastropheConfig {
        record: true,
        ..CatastropheConfig::default()
    };
    let mut acc = CatastropheAccumulator::new(width, depth, cfg)?;
    let mut state = rill_core::init::<u64>(g, 0.7, 1, seed)?;
    state.enable_log(None);
    let mut obs: Vec<&mut dyn rill_core::Observer<u64>> = vec![&mut acc];
    if let Some(c) = runner.conservation.as_mut() {
        obs.push(c);
    }
    state.run(steps, &mut obs)?;
    drop(obs);
    let log = state.log().expect("log enabled");
    let mut expected = 0usize;
    let mut ok = true;
    let mut samples = acc.samples.iter().peekable();
    for n in 1..=steps {
        for i in 0..g.node_count() {
            let v = g.node(i);
            let left = log.went_left(v, n)?;
            let mut prior = 0u32;
            for m in 1..n {
                prior += (log.went_left(v, m)? == left) as u32;
            }
            if prior == 0 {
                continue;
            }
            expected += 1;
            match samples.next() {
                Some(x) => {
                    ok &= x.time == n
                        && x.node == v
                        && (x.side == Side::Left) == left
                        && x.prior_sends == prior
                        && x.ratio.is_finite()
                        && x.ratio > 0.0;
                }
                None => ok = false,
            }
        }
    }
    ok &= samples.next().is_none();
    Ok((ok, expected))
}

fn c10_bounds(s: &mut Suite) -> Result<(bool, String), CliError> {
    let (mut violations, mut checked) = s.flood_audit.unwrap_or((0, 0));
    for eta in FLOOD_ETAS {
        let acc = flood_run(100, 50, 2000, eta, s.seed, 0, &mut s.runner)?;
        violations += acc.violations();
        checked += acc.checked();
    }
    let (cat_ok, samples) = audit_catastrophes(s.seed, &mut s.runner)?;
    Ok((
        violations == 0 && checked > 0 && cat_ok,
        format!(
            "{checked} flood samples, {violations} outside bounds; {samples} catastrophe samples {}",
            if cat_ok { "all defined" } else { "MISMATCH" }
        ),
    ))
}

pub const DETERMINISM_SCALE: f64 = 0.01;

fn c11_determinism(s: &mut Suite) -> Result<(bool, String), CliError> {
    let mut differing = Vec::new();
    let mut files = 0;
    for preset in Preset::ALL {
        let outputs: Vec<_> = [1, 3]
            .into_iter()
            .map(|threads| {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| CliError::config("threads", e.to_string()))?;
                pool.install(|| run_preset(preset, DETERMINISM_SCALE, s.seed, &mut s.runner))
            })
            .collect::<Result<_, CliError>>()?;
        files += outputs[0].files.len();
        if outputs[0] != outputs[1] {
            differing.push(preset.name());
        }
    }
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            format!("{files} files byte-identical across 1 and 3 threads")
        } else {
            format!("differences in {}", differing.join(", "))
        },
    ))
}

fn c12_limits(s: &mut Suite) -> Result<(bool, String), CliError> {
    let g = GridGeometry::new(100, 10)?;
    let mut freeze = FreezeTracker::new(1, 100);
    s.runner.simulate(g, 1e-4, s.seed, 100, &mut [&mut freeze])?;
    let changed = freeze.changed_fraction().unwrap_or(1.0);
    let mut lag = Lag1Autocorrelation::new();
    s.runner.simulate(g, 1e4, s.seed, 1000, &mut [&mut lag])?;
    let r = lag.value()?;
    Ok((
        changed < 0.01 && r.abs() <= 0.05,
        format!("eta=1e-4 changed {:.2}%, eta=1e4 lag-1 autocorrelation {r:.4}", 100.0 * changed),
    ))
}
