use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rill_core::dynamics::snapshot::{SnapshotFormat, SnapshotRecorder};
use rill_core::dynamics::ConservationCheck;
use rill_core::fmt::sig9;
use rill_core::load_oracle::{cluster_pmf_bruteforce, load_pmf_exact};
use rill_core::stats::csv::{write_binned, write_catastrophe, write_correlation, write_large_flood, write_load_histograms, write_switch_rates};
use rill_core::stats::{
    definetti_estimate, load_histogram, CatastropheAccumulator, CatastropheConfig, FloodAccumulator, FloodConfig,
    LoadCorrelationAccumulator, SwitchAccumulator,
};
use rill_core::{init, GridGeometry, Observer, Sediment};
use serde_json::json;

use crate::config::{ExperimentConfig, SnapshotKind, Statistic, DEFAULT_OUT_DIR, OUT_DIR_ENV};
use crate::error::CliError;
use crate::experiment::{run_preset, Preset, Runner};
use crate::verify::{Level, Suite};

/// Runs `f` on a pool of `threads` workers, or the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::config("threads", e.to_string())),
    }
}

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn write_files(dir: &Path, files: &BTreeMap<String, Vec<u8>>) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            fs::write(&path, bytes)?;
            Ok(path)
        })
        .collect()
}

fn write_manifest(dir: &Path, manifest: serde_json::Value) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

fn bytes(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory");
    buf
}

fn relative(paths: &[PathBuf], root: &Path) -> Vec<String> {
    paths
        .iter()
        .map(|p| p.strip_prefix(root).unwrap_or(p).display().to_string())
        .collect()
}

/// One simulation of the run command with the requested statistics.
fn run_one<S: Sediment>(
    cfg: &ExperimentConfig,
    eta: f64,
    rain: S,
    extra: Option<&mut dyn Observer<S>>,
) -> Result<BTreeMap<String, Vec<u8>>, CliError> {
    let g = GridGeometry::new(cfg.width, cfg.depth)?;
    let mut state = init(g, eta, rain, cfg.seed)?;
    let wants = |s: Statistic| cfg.stats.contains(&s);

    let mut correlation = match wants(Statistic::Correlation) {
        true => Some(LoadCorrelationAccumulator::new(g, cfg.width.min(cfg.depth), cfg.depth)?),
        false => None,
    };
    let mut switching = wants(Statistic::Switching).then(|| SwitchAccumulator::new(cfg.width, g.node_count()));
    let mut flood = match wants(Statistic::Flood) {
        true => Some(FloodAccumulator::new(
            cfg.width,
            cfg.depth,
            FloodConfig {
                burn_in: cfg.burn_in,
                ..FloodConfig::default()
            },
        )?),
        false => None,
    };
    let mut catastrophe = match wants(Statistic::Catastrophe) {
        true => Some(CatastropheAccumulator::new(
            cfg.width,
            cfg.depth,
            CatastropheConfig {
                start: cfg.burn_in + 1,
                end: cfg.steps,
                ..CatastropheConfig::default()
            },
        )?),
        false => None,
    };
    let format = match cfg.snapshot_format {
        SnapshotKind::Csv => SnapshotFormat::Csv,
        SnapshotKind::Bin => SnapshotFormat::Binary,
    };
    let mut snapshots = SnapshotRecorder::new(cfg.snapshot_times.iter().copied(), format);

    {
        let mut obs: Vec<&mut dyn Observer<S>> = vec![&mut snapshots];
        if let Some(a) = correlation.as_mut() {
            obs.push(a);
        }
        if let Some(a) = switching.as_mut() {
            obs.push(a);
        }
        if let Some(a) = flood.as_mut() {
            obs.push(a);
        }
        if let Some(a) = catastrophe.as_mut() {
            obs.push(a);
        }
        if let Some(a) = extra {
            obs.push(a);
        }
        state.run(cfg.steps, &mut obs)?;
    }

    let mut files = BTreeMap::new();
    if wants(Statistic::LoadHistogram) {
        let hists = (1..=cfg.depth).map(|k| load_histogram(&state, k)).collect::<Result<Vec<_>, _>>()?;
        files.insert("load_histogram.csv".into(), bytes(|b| write_load_histograms(b, &hists)));
    }
    if let Some(a) = correlation {
        let rows: Vec<_> = a.series.iter().map(|&(n, k)| (eta, n, k)).collect();
        files.insert("load_correlation.csv".into(), bytes(|b| write_correlation(b, &rows)));
    }
    if wants(Statistic::Definetti) {
        let h = definetti_estimate(&state, 100)?;
        let labelled: Vec<_> = h.rows.iter().enumerate().map(|(k, r)| ((k + 1).to_string(), r)).collect();
        files.insert("definetti.csv".into(), bytes(|b| write_binned(b, &labelled)));
    }
    if let Some(a) = switching {
        let rows = (1..=cfg.depth).map(|k| a.row_average(k).map(|r| (eta, k, r))).collect::<Result<Vec<_>, _>>()?;
        files.insert("switch_rates.csv".into(), bytes(|b| write_switch_rates(b, &rows)));
    }
    if let Some(a) = flood {
        let labelled: Vec<_> = a
            .rows
            .iter()
            .enumerate()
            .filter_map(|(k, r)| r.hist.as_ref().map(|h| ((k + 1).to_string(), h)))
            .collect();
        files.insert("flood_ratio.csv".into(), bytes(|b| write_binned(b, &labelled)));
        let large: Vec<_> = a.rows.iter().enumerate().map(|(k, r)| (eta, k + 1, r.large_fraction())).collect();
        files.insert("large_flood.csv".into(), bytes(|b| write_large_flood(b, &large)));
        files.insert(
            "flood_bounds.csv".into(),
            format!("checked,violations\n{},{}\n", a.checked(), a.violations()).into_bytes(),
        );
    }
    if let Some(a) = catastrophe {
        let rows: Vec<_> = (2..=cfg.depth)
            .map(|k| (eta, k, a.from_left_parent[k - 1].events, a.from_left_parent[k - 1].flooded))
            .collect();
        files.insert("catastrophe_flood.csv".into(), bytes(|b| write_catastrophe(b, &rows)));
    }
    let ext = match cfg.snapshot_format {
        SnapshotKind::Csv => "csv",
        SnapshotKind::Bin => "bin",
    };
    for (t, data) in snapshots.snapshots {
        files.insert(format!("snapshot_t{t}.{ext}"), data);
    }
    Ok(files)
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    if cfg.stats.contains(&Statistic::Correlation) && cfg.steps < cfg.depth as u64 {
        return Err(CliError::config("steps", "load correlation needs steps >= depth"));
    }
    if (cfg.stats.contains(&Statistic::Switching) || cfg.stats.contains(&Statistic::Flood)) && cfg.steps < 2 {
        return Err(CliError::config("steps", "switching and flood statistics need steps >= 2"));
    }
    let start = Instant::now();
    let integral = cfg.r.fract() == 0.0 && cfg.r <= u32::MAX as f64;
    let mut written = Vec::new();
    let mut conservation = ConservationCheck::new();
    for &eta in &cfg.eta {
        let files = with_threads(cfg.threads, || {
            if integral {
                run_one::<u64>(cfg, eta, cfg.r as u64, Some(&mut conservation))
            } else {
                run_one::<f64>(cfg, eta, cfg.r, None)
            }
        })??;
        let dir = match cfg.eta.len() {
            1 => cfg.out_dir.clone(),
            _ => cfg.out_dir.join(format!("eta_{}", sig9(eta))),
        };
        written.extend(write_files(&dir, &files)?);
    }
    let mut manifest = json!({
        "command": "run",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "parameters": cfg,
        "outputs": relative(&written, &cfg.out_dir),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    if integral {
        manifest["conservation"] = json!({
            "steps_checked": conservation.steps_checked,
            "violations": conservation.violations.len(),
        });
    }
    written.push(write_manifest(&cfg.out_dir, manifest)?);
    Ok(written)
}

pub fn cmd_experiment(
    preset: Preset,
    scale: f64,
    seed: u64,
    threads: Option<usize>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let start = Instant::now();
    let mut runner = Runner::default();
    let out = with_threads(threads, || run_preset(preset, scale, seed, &mut runner))??;
    let dir = out_dir.join(preset.name());
    let mut written = write_files(&dir, &out.files)?;
    let manifest = json!({
        "command": "experiment",
        "preset": preset,
        "scale": scale,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "threads": threads,
        "parameters": out.parameters,
        "outputs": relative(&written, &dir),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    written.push(write_manifest(&dir, manifest)?);
    Ok(written)
}

/// Exact load law as CSV, from the walk or from cluster enumeration.
pub fn cmd_oracle(depth: usize, time: usize, bruteforce: bool) -> Result<Vec<u8>, CliError> {
    let pmf = if bruteforce {
        cluster_pmf_bruteforce(depth)?
    } else {
        load_pmf_exact(depth, time)?
    };
    let mut buf = Vec::new();
    pmf.write_csv(&mut buf)?;
    Ok(buf)
}

pub fn cmd_verify(level: Level, seed: u64, threads: Option<usize>) -> Result<(), CliError> {
    let verdicts = with_threads(threads, || {
        Suite::new(seed, level).run(|v| println!("{}", v.line()))
    })?;
    let failed: Vec<String> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id.to_string()).collect();
    println!(
        "{} of {} criteria passed",
        verdicts.len() - failed.len(),
        verdicts.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Criteria(failed))
    }
}
