//! Run configuration: a TOML file overlaid with command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "RILL_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "rill-out";

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Etas {
    One(f64),
    Many(Vec<f64>),
}

impl Etas {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Etas::One(e) => vec![*e],
            Etas::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotKind {
    #[default]
    Csv,
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Statistic {
    LoadHistogram,
    Correlation,
    Definetti,
    Switching,
    Flood,
    Catastrophe,
}

/// Everything `run` needs. Every field may come from the file; flags win.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub width: Option<usize>,
    pub depth: Option<usize>,
    pub eta: Option<Etas>,
    pub r: Option<f64>,
    pub seed: Option<u64>,
    pub steps: Option<u64>,
    pub threads: Option<usize>,
    pub scale: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub stats: Option<Vec<Statistic>>,
    pub burn_in: Option<u64>,
    pub snapshot_times: Option<Vec<u64>>,
    pub snapshot_format: Option<SnapshotKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub width: usize,
    pub depth: usize,
    pub eta: Vec<f64>,
    pub r: f64,
    pub seed: u64,
    pub steps: u64,
    pub threads: Option<usize>,
    pub scale: f64,
    pub out_dir: PathBuf,
    pub stats: Vec<Statistic>,
    pub burn_in: u64,
    pub snapshot_times: Vec<u64>,
    pub snapshot_format: SnapshotKind,
}

pub fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<FileConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        // Name the offending key where the parser reports one.
        let key = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.starts_with("unknown field"))
            .map(str::to_string)
            .or_else(|| e.span().map(|s| key_at(text, s)))
            .filter(|k| !k.is_empty())
            .unwrap_or_else(|| "config".into());
        CliError::config(key, msg)
    })
}

/// The key on the line of `span`, whether the span covers the key or its
/// value.
fn key_at(text: &str, span: std::ops::Range<usize>) -> String {
    let line = text[..span.start].rfind('\n').map_or(0, |i| i + 1);
    match text[line..span.start].split_once('=') {
        Some((key, _)) => key,
        None => text[span].split('=').next().unwrap_or(""),
    }
    .trim()
    .to_string()
}

impl FileConfig {
    /// `self` with every field set in `flags` replaced.
    pub fn overlay(self, flags: FileConfig) -> FileConfig {
        FileConfig {
            width: flags.width.or(self.width),
            depth: flags.depth.or(self.depth),
            eta: flags.eta.or(self.eta),
            r: flags.r.or(self.r),
            seed: flags.seed.or(self.seed),
            steps: flags.steps.or(self.steps),
            threads: flags.threads.or(self.threads),
            scale: flags.scale.or(self.scale),
            out_dir: flags.out_dir.or(self.out_dir),
            stats: flags.stats.or(self.stats),
            burn_in: flags.burn_in.or(self.burn_in),
            snapshot_times: flags.snapshot_times.or(self.snapshot_times),
            snapshot_format: flags.snapshot_format.or(self.snapshot_format),
        }
    }

    pub fn resolve(self) -> Result<ExperimentConfig, CliError> {
        let width = self.width.ok_or_else(|| CliError::config("width", "required"))?;
        let depth = self.depth.ok_or_else(|| CliError::config("depth", "required"))?;
        let steps = self.steps.ok_or_else(|| CliError::config("steps", "required"))?;
        let eta = self.eta.map(|e| e.values()).unwrap_or_else(|| vec![1.0]);
        let scale = self.scale.unwrap_or(1.0);
        let r = self.r.unwrap_or(1.0);
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(CliError::config("scale", format!("{scale} is not in (0, 1]")));
        }
        if steps == 0 {
            return Err(CliError::config("steps", "must be at least 1"));
        }
        let width = crate::experiment::scale_width_exact(width, scale);
        let steps = crate::experiment::scale_duration(steps, scale);
        if width < 4 || width % 2 != 0 {
            return Err(CliError::config("width", format!("{width} must be even and at least 4")));
        }
        if depth == 0 {
            return Err(CliError::config("depth", "must be at least 1"));
        }
        if eta.is_empty() || eta.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(CliError::config("eta", format!("{eta:?} must be positive and finite")));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(CliError::config("r", format!("{r} must be positive and finite")));
        }
        if self.threads == Some(0) {
            return Err(CliError::config("threads", "must be at least 1"));
        }
        let burn_in = self.burn_in.unwrap_or_else(|| crate::experiment::burn_in(steps));
        if burn_in >= steps {
            return Err(CliError::config("burn_in", format!("{burn_in} must be below steps = {steps}")));
        }
        let snapshot_times = self.snapshot_times.unwrap_or_default();
        if let Some(t) = snapshot_times.iter().find(|&&t| t == 0 || t > steps) {
            return Err(CliError::config("snapshot_times", format!("{t} is not in 1..={steps}")));
        }
        let out_dir = self
            .out_dir
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        Ok(ExperimentConfig {
            width,
            depth,
            eta,
            r,
            seed: self.seed.unwrap_or(0),
            steps,
            threads: self.threads,
            scale,
            out_dir,
            stats: self.stats.unwrap_or_else(|| vec![Statistic::LoadHistogram]),
            burn_in,
            snapshot_times,
            snapshot_format: self.snapshot_format.unwrap_or_default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> FileConfig {
        FileConfig {
            width: Some(16),
            depth: Some(4),
            steps: Some(10),
            ..Default::default()
        }
    }

    #[test]
    fn unknown_key_is_named() {
        match parse("width = 8\nwidht = 9\n") {
            Err(CliError::Config { key, .. }) => assert_eq!(key, "widht"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_type_is_named() {
        match parse("depth = \"deep\"\n") {
            Err(CliError::Config { key, .. }) => assert_eq!(key, "depth"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn eta_accepts_scalar_or_list() {
        assert_eq!(parse("eta = 2.0").unwrap().eta.unwrap().values(), vec![2.0]);
        assert_eq!(parse("eta = [0.1, 1]").unwrap().eta.unwrap().values(), vec![0.1, 1.0]);
    }

    #[test]
    fn flags_win() {
        let file = parse("width = 8\ndepth = 3\nsteps = 5\nseed = 1").unwrap();
        let flags = FileConfig {
            width: Some(12),
            ..Default::default()
        };
        let c = file.overlay(flags).resolve().unwrap();
        assert_eq!((c.width, c.depth, c.steps, c.seed), (12, 3, 5, 1));
    }

    #[test]
    fn validation_names_keys() {
        let key = |f: FileConfig| match f.resolve() {
            Err(CliError::Config { key, .. }) => key,
            other => panic!("{other:?}"),
        };
        assert_eq!(key(FileConfig { width: Some(5), ..base() }), "width");
        assert_eq!(key(FileConfig { steps: Some(0), ..base() }), "steps");
        assert_eq!(key(FileConfig { eta: Some(Etas::One(-1.0)), ..base() }), "eta");
        assert_eq!(key(FileConfig { r: Some(0.0), ..base() }), "r");
        assert_eq!(key(FileConfig { scale: Some(2.0), ..base() }), "scale");
        assert_eq!(key(FileConfig { burn_in: Some(10), ..base() }), "burn_in");
        assert_eq!(key(FileConfig { snapshot_times: Some(vec![11]), ..base() }), "snapshot_times");
        assert_eq!(key(FileConfig { depth: None, ..base() }), "depth");
    }
}
