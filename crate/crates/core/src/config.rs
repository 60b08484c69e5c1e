//! Run configuration and its plain-text `key = value` format.
//!
//! ```text
//! # weak Landau damping
//! benchmark = weak_landau_1d
//! Nx = 32
//! Nv = 128
//! tau = 1/16
//! n_steps = 800
//! ```
//!
//! Blank lines and `#` comments are ignored; unknown keys are rejected.
//! Keys left out fall back to the benchmark's defaults.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{NufiError, Result};
use crate::grid::{GridSpec, Precision};
use crate::initial::{Benchmark, InitialCondition, VelocityProfile};

pub const DEFAULT_NX: usize = 32;
pub const DEFAULT_NV: usize = 128;
pub const DEFAULT_VMAX: f64 = 10.0;
pub const DEFAULT_TAU: f64 = 1.0 / 16.0;
pub const DEFAULT_SNAPSHOT_RESOLUTION: usize = 256;

const KEYS: &[&str] = &[
    "benchmark",
    "d",
    "L",
    "Nx",
    "Nv",
    "vmax",
    "tau",
    "n_steps",
    "precision",
    "diagnostics_cadence",
    "snapshot_steps",
    "snapshot_resolution",
    "output_dir",
    "alpha",
    "k",
    "v0",
    "profile",
    "checkpoint",
];

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub initial: InitialCondition,
    pub tau: f64,
    pub n_steps: usize,
    pub precision: Precision,
    pub diagnostics_cadence: usize,
    pub snapshot_steps: Vec<usize>,
    pub snapshot_resolution: usize,
    /// Where outputs go; `None` keeps the run in memory.
    pub output_dir: Option<PathBuf>,
    /// Write the potential history to `history.bin` at the end of the run.
    pub checkpoint: bool,
}

impl RunConfig {
    /// Built-in benchmark on its default box with the given resolution.
    pub fn for_benchmark(
        benchmark: Benchmark,
        nx: usize,
        nv: usize,
        tau: f64,
        n_steps: usize,
    ) -> Result<Self> {
        let initial = InitialCondition::builtin(benchmark)?;
        let l = benchmark.defaults().map(|d| d.box_length).unwrap_or(0.0);
        let grid = GridSpec::new(initial.d, l, nx, nv, DEFAULT_VMAX)?;
        Self::new(grid, initial, tau, n_steps)
    }

    pub fn new(grid: GridSpec, initial: InitialCondition, tau: f64, n_steps: usize) -> Result<Self> {
        let cfg = Self {
            grid,
            initial,
            tau,
            n_steps,
            precision: Precision::Double,
            diagnostics_cadence: 1,
            snapshot_steps: Vec::new(),
            snapshot_resolution: DEFAULT_SNAPSHOT_RESOLUTION,
            output_dir: None,
            checkpoint: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(NufiError::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.diagnostics_cadence == 0 {
            return Err(NufiError::Config("diagnostics_cadence must be >= 1".into()));
        }
        if self.snapshot_resolution == 0 {
            return Err(NufiError::Config("snapshot_resolution must be >= 1".into()));
        }
        if let Some(&s) = self.snapshot_steps.iter().find(|&&s| s > self.n_steps) {
            return Err(NufiError::Config(format!(
                "snapshot step {s} is beyond n_steps = {}",
                self.n_steps
            )));
        }
        self.initial.check_grid(&self.grid)
    }

    /// Simulated end time `n_steps * tau`.
    pub fn t_end(&self) -> f64 {
        self.n_steps as f64 * self.tau
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            NufiError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                NufiError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(NufiError::Config(format!(
                    "line {}: unknown key '{key}'",
                    lineno + 1
                )));
            }
            if !seen.insert(key.to_string()) {
                return Err(NufiError::Config(format!(
                    "line {}: duplicate key '{key}'",
                    lineno + 1
                )));
            }
            pairs.push((key.to_string(), value.trim().to_string()));
        }
        let get = |k: &str| pairs.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());

        let benchmark: Benchmark = get("benchmark")
            .ok_or_else(|| NufiError::Config("missing required key 'benchmark'".into()))?
            .parse()?;
        let defaults = benchmark.defaults();
        let d = match get("d") {
            Some(s) => parse_num::<usize>("d", s)?,
            None => defaults.map(|b| b.d).ok_or_else(|| missing("d", benchmark))?,
        };
        if let Some(b) = defaults {
            if b.d != d {
                return Err(NufiError::Config(format!(
                    "benchmark {benchmark} is {}-dimensional, config sets d = {d}",
                    b.d
                )));
            }
        }
        let l = match get("L") {
            Some(s) => parse_float("L", s)?,
            None => defaults.map(|b| b.box_length).ok_or_else(|| missing("L", benchmark))?,
        };
        let alpha = match get("alpha") {
            Some(s) => parse_float("alpha", s)?,
            None => defaults.map(|b| b.alpha).ok_or_else(|| missing("alpha", benchmark))?,
        };
        let k = match get("k") {
            Some(s) => parse_float("k", s)?,
            None => defaults.map(|b| b.k).ok_or_else(|| missing("k", benchmark))?,
        };
        let profile = match (get("profile"), get("v0")) {
            (Some(name), v0) => {
                let v0 = v0.map(|s| parse_float("v0", s)).transpose()?.unwrap_or(0.0);
                VelocityProfile::parse(name, v0)?
            }
            (None, v0) => {
                let mut p = defaults
                    .map(|b| b.profile)
                    .ok_or_else(|| missing("profile", benchmark))?;
                if let (Some(s), VelocityProfile::CounterStreams { v0: slot }) = (v0, &mut p) {
                    *slot = parse_float("v0", s)?;
                } else if v0.is_some() {
                    return Err(NufiError::Config(
                        "v0 only applies to the counter_streams profile".into(),
                    ));
                }
                p
            }
        };
        let initial = InitialCondition::new(benchmark, d, alpha, k, profile)?;

        let nx = get("Nx").map(|s| parse_num("Nx", s)).transpose()?.unwrap_or(DEFAULT_NX);
        let nv = get("Nv").map(|s| parse_num("Nv", s)).transpose()?.unwrap_or(DEFAULT_NV);
        let vmax = get("vmax")
            .map(|s| parse_float("vmax", s))
            .transpose()?
            .unwrap_or(DEFAULT_VMAX);
        let grid = GridSpec::new(d, l, nx, nv, vmax)?;

        let tau = get("tau").map(|s| parse_float("tau", s)).transpose()?.unwrap_or(DEFAULT_TAU);
        let n_steps = get("n_steps").map(|s| parse_num("n_steps", s)).transpose()?.unwrap_or(0);
        let mut cfg = Self::new_unchecked(grid, initial, tau, n_steps);
        if let Some(s) = get("precision") {
            cfg.precision = parse_precision(s)?;
        }
        if let Some(s) = get("diagnostics_cadence") {
            cfg.diagnostics_cadence = parse_num("diagnostics_cadence", s)?;
        }
        if let Some(s) = get("snapshot_steps") {
            cfg.snapshot_steps = s
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| parse_num("snapshot_steps", t))
                .collect::<Result<_>>()?;
        }
        if let Some(s) = get("snapshot_resolution") {
            cfg.snapshot_resolution = parse_num("snapshot_resolution", s)?;
        }
        if let Some(s) = get("output_dir") {
            cfg.output_dir = Some(PathBuf::from(s));
        }
        if let Some(s) = get("checkpoint") {
            cfg.checkpoint = match s {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                other => {
                    return Err(NufiError::Config(format!(
                        "checkpoint must be true or false, got '{other}'"
                    )))
                }
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn new_unchecked(grid: GridSpec, initial: InitialCondition, tau: f64, n_steps: usize) -> Self {
        Self {
            grid,
            initial,
            tau,
            n_steps,
            precision: Precision::Double,
            diagnostics_cadence: 1,
            snapshot_steps: Vec::new(),
            snapshot_resolution: DEFAULT_SNAPSHOT_RESOLUTION,
            output_dir: None,
            checkpoint: false,
        }
    }
}

fn missing(key: &str, benchmark: Benchmark) -> NufiError {
    NufiError::Config(format!("key '{key}' is required for benchmark {benchmark}"))
}

fn parse_num<N: std::str::FromStr>(key: &str, s: &str) -> Result<N> {
    s.parse()
        .map_err(|_| NufiError::Config(format!("{key}: expected a non-negative integer, got '{s}'")))
}

/// Accepts plain floats, `pi` multiples like `4pi` / `4*pi`, and ratios like `1/16`.
fn parse_float(key: &str, s: &str) -> Result<f64> {
    let bad = || NufiError::Config(format!("{key}: cannot parse '{s}' as a number"));
    if let Some((num, den)) = s.split_once('/') {
        let a = parse_float(key, num.trim())?;
        let b = parse_float(key, den.trim())?;
        if b == 0.0 {
            return Err(bad());
        }
        return Ok(a / b);
    }
    if let Some(prefix) = s.strip_suffix("pi") {
        let prefix = prefix.trim().trim_end_matches('*').trim();
        let m = if prefix.is_empty() {
            1.0
        } else {
            prefix.parse::<f64>().map_err(|_| bad())?
        };
        return Ok(m * std::f64::consts::PI);
    }
    s.parse().map_err(|_| bad())
}

fn parse_precision(s: &str) -> Result<Precision> {
    match s {
        "32" | "single" | "f32" => Ok(Precision::Single),
        "64" | "double" | "f64" => Ok(Precision::Double),
        other => Err(NufiError::Config(format!(
            "precision must be 32 or 64, got '{other}'"
        ))),
    }
}
