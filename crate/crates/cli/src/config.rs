//! Experiment configuration: a plain `key=value` file merged with
//! command-line flags, flags taking precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SweepSnr,
    SweepP,
    SweepDim,
    BoundsGrid,
    ChannelMse,
    ChannelBer,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::SweepSnr => "sweep_snr",
            Experiment::SweepP => "sweep_p",
            Experiment::SweepDim => "sweep_dim",
            Experiment::BoundsGrid => "bounds_grid",
            Experiment::ChannelMse => "channel_mse",
            Experiment::ChannelBer => "channel_ber",
        }
    }

    pub fn is_channel(&self) -> bool {
        matches!(self, Experiment::ChannelMse | Experiment::ChannelBer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Family {
    Blind,
    Em,
    Genie,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Blind, Family::Em, Family::Genie];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Blind => "blind",
            Family::Em => "em",
            Family::Genie => "genie",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub experiment: Experiment,
    pub trials: usize,
    pub dim: usize,
    pub activity_rate: f64,
    pub n0: f64,
    pub snr_points_db: Vec<f64>,
    pub seed: u64,
    pub estimators: Vec<Family>,
    pub output_path: Option<PathBuf>,
    pub summary: bool,
    /// Activity rates visited by `sweep-p` and the bounds grid.
    pub p_points: Vec<f64>,
    /// Dimensions visited by `sweep-dim`.
    pub dim_points: Vec<usize>,
    pub users: usize,
    pub paths: usize,
}

pub const KEYS: [&str; 13] = [
    "trials",
    "dim",
    "p",
    "n0",
    "snr_db",
    "seed",
    "out",
    "summary",
    "estimators",
    "p_list",
    "dim_list",
    "users",
    "paths",
];

/// Raw settings before typing; later inserts override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse_file_contents(text: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected key=value", n + 1)))?;
            raw.set(key.trim(), value.trim())?;
        }
        Ok(raw)
    }

    pub fn read_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse_file_contents(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::config(format!("unknown key '{key}'")));
        }
        self.values.insert(key, value.to_string());
        Ok(())
    }

    pub fn merge(&mut self, other: RawConfig) {
        self.values.extend(other.values);
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn scalar<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::config(format!("invalid value for {key}: '{v}'"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| CliError::config(format!("invalid entry in {key}: '{s}'")))
                })
                .collect(),
        }
    }

    pub fn resolve(&self, experiment: Experiment) -> Result<SweepConfig, CliError> {
        let channel = experiment.is_channel();
        let default_trials = match experiment {
            Experiment::ChannelMse => 1000,
            Experiment::ChannelBer => 3125,
            _ => 10_000,
        };
        let default_snr = match experiment {
            Experiment::BoundsGrid => vec![-20.0, -10.0, 0.0, 10.0, 20.0],
            Experiment::SweepP | Experiment::SweepDim => vec![10.0],
            _ => vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
        };

        let summary = match self.get("summary") {
            None => false,
            Some("true" | "1" | "yes") => true,
            Some("false" | "0" | "no") => false,
            Some(v) => {
                return Err(CliError::config(format!(
                    "invalid value for summary: '{v}'"
                )))
            }
        };
        let estimators = match self.get("estimators") {
            None => Family::ALL.to_vec(),
            Some(v) => {
                let mut fams = Vec::new();
                for s in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let f = Family::ALL
                        .into_iter()
                        .find(|f| f.name() == s)
                        .ok_or_else(|| {
                            CliError::config(format!("unknown estimator family '{s}'"))
                        })?;
                    if !fams.contains(&f) {
                        fams.push(f);
                    }
                }
                fams.sort();
                fams
            }
        };

        let cfg = SweepConfig {
            experiment,
            trials: self.scalar("trials", default_trials)?,
            dim: self.scalar("dim", if channel { 128 } else { 64 })?,
            activity_rate: self.scalar("p", 0.1)?,
            n0: self.scalar("n0", 1.0)?,
            snr_points_db: self.list("snr_db", default_snr)?,
            seed: self.scalar("seed", 0)?,
            estimators,
            output_path: self.get("out").map(PathBuf::from),
            summary,
            p_points: self.list("p_list", vec![0.01, 0.05, 0.1, 0.2, 0.4])?,
            dim_points: self.list("dim_list", vec![16, 64, 256, 1024, 4096])?,
            users: self.scalar("users", 8)?,
            paths: self.scalar("paths", 1)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if !(self.activity_rate > 0.0 && self.activity_rate <= 1.0) {
            return bad(format!("p must lie in (0, 1], got {}", self.activity_rate));
        }
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return bad(format!("n0 must be positive, got {}", self.n0));
        }
        if self.snr_points_db.is_empty() {
            return bad("snr_db needs at least one point".into());
        }
        if self.snr_points_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db entries must be finite".into());
        }
        if self.estimators.is_empty() {
            return bad("at least one estimator family is required".into());
        }
        if self.p_points.is_empty() || self.p_points.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return bad("p_list entries must lie in (0, 1]".into());
        }
        if self.dim_points.is_empty() || self.dim_points.contains(&0) {
            return bad("dim_list entries must be at least 1".into());
        }
        if self.experiment.is_channel() {
            if !self.dim.is_power_of_two() {
                return bad(format!(
                    "channel experiments need a power-of-two dim, got {}",
                    self.dim
                ));
            }
            if self.users == 0 || self.users > self.dim {
                return bad(format!("users must lie in 1..={}", self.dim));
            }
            if self.paths == 0 {
                return bad("paths must be at least 1".into());
            }
        }
        Ok(())
    }
}
