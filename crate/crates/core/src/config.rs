//! Run configuration: the `key = value` file format, grid and seed syntax,
//! and validation of every command/parameter combination.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entanglement::WitnessSource;
use crate::error::{Error, Result};
use crate::experiment::{PlanMode, DEFAULT_SEED_COUNT, DEFAULT_TARGET_CONFIDENCE};
use crate::geometry::{PhysicalParams, SetupKind};
use crate::linalg::MAX_DIM;

/// Longest grid or seed list accepted from text input.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    EntropySweep,
    WitnessSweep,
    Measure,
    DecoEstimate,
    GroupOps,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::EntropySweep => "entropy-sweep",
            Command::WitnessSweep => "witness-sweep",
            Command::Measure => "measure",
            Command::DecoEstimate => "deco-estimate",
            Command::GroupOps => "group-ops",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "entropy-sweep" => Ok(Command::EntropySweep),
            "witness-sweep" => Ok(Command::WitnessSweep),
            "measure" => Ok(Command::Measure),
            "deco-estimate" => Ok(Command::DecoEstimate),
            "group-ops" => Ok(Command::GroupOps),
            other => Err(Error::Parse(format!("unknown command {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessMode {
    /// Rebuilt at every evaluated point.
    #[serde(rename = "self")]
    SelfState,
    /// Built once at the reference rate and time.
    Fixed,
}

impl FromStr for WitnessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "self" => Ok(WitnessMode::SelfState),
            "fixed" => Ok(WitnessMode::Fixed),
            other => Err(Error::Parse(format!(
                "unknown witness mode {other:?} (expected self or fixed)"
            ))),
        }
    }
}

/// Evenly spaced inclusive grid written `start:stop:steps`, or a single
/// value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Grid {
    pub fn single(value: f64) -> Self {
        Self {
            start: value,
            stop: value,
            steps: 1,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + span * i as f64 / last
                }
            })
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.start.min(self.stop)
    }

    pub fn max(&self) -> f64 {
        self.start.max(self.stop)
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let grid = match parts[..] {
            [v] => Grid::single(parse_f64("grid value", v)?),
            [a, b, n] => Grid {
                start: parse_f64("grid start", a)?,
                stop: parse_f64("grid stop", b)?,
                steps: n
                    .parse()
                    .map_err(|_| Error::Parse(format!("grid steps {n:?} is not a non-negative integer")))?,
            },
            _ => {
                return Err(Error::Parse(format!(
                    "grid {s:?} must be start:stop:steps or a single value"
                )))
            }
        };
        if grid.steps == 0 || grid.steps > MAX_GRID_POINTS {
            return Err(Error::Parse(format!(
                "grid steps must lie in 1..={MAX_GRID_POINTS}, got {}",
                grid.steps
            )));
        }
        if grid.steps > 1 && grid.stop < grid.start {
            return Err(Error::Parse(format!("grid {s:?} has stop < start")));
        }
        Ok(grid)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.steps)
    }
}

fn parse_f64(what: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what} {s:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("{what} {s:?} is not finite")));
    }
    Ok(v)
}

fn parse_usize(what: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what} {s:?} is not a non-negative integer")))
}

fn parse_u64(what: &str, s: &str) -> Result<u64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what} {s:?} is not a non-negative integer")))
}

/// Comma separated values, each a number or a `start:stop:steps` grid.
pub fn parse_grid_list(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        out.extend(part.parse::<Grid>()?.values());
        if out.len() > MAX_GRID_POINTS {
            return Err(Error::Parse(format!("more than {MAX_GRID_POINTS} values in {s:?}")));
        }
    }
    Ok(out)
}

/// Seeds as a count `N` (seeds `0..N`), a range `a..b` or a list `a,b,c`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let seeds = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse_u64("seed", a)?, parse_u64("seed", b)?);
        if b <= a || (b - a) as usize > MAX_GRID_POINTS {
            return Err(Error::Parse(format!("seed range {s:?} must be nonempty and at most {MAX_GRID_POINTS} long")));
        }
        (a..b).collect()
    } else if s.contains(',') {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| parse_u64("seed", p))
            .collect::<Result<Vec<_>>>()?
    } else {
        let count = parse_u64("seed count", s)?;
        if count as usize > MAX_GRID_POINTS {
            return Err(Error::Parse(format!("seed count {count} exceeds {MAX_GRID_POINTS}")));
        }
        (0..count).collect()
    };
    if seeds.is_empty() {
        return Err(Error::Parse(format!("no seeds in {s:?}")));
    }
    Ok(seeds)
}

/// Splits `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse(format!("line {}: expected key = value", lineno + 1)));
        };
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub setup: SetupKind,
    pub n: usize,
    pub d_levels: usize,
    /// One-based particle indices.
    pub subsystems: Vec<usize>,
    pub gammas: Vec<f64>,
    pub tau_grid: Grid,
    /// Temperatures (K) for the decoherence estimate.
    pub temp_grid: Grid,
    /// Largest budget on the confidence curve; defaults to four times the
    /// median minimal budget.
    pub shots: Option<u64>,
    pub seeds: Vec<u64>,
    pub mode: PlanMode,
    pub witness: WitnessMode,
    pub witness_ref_gamma: f64,
    /// Defaults to the first point of the tau grid.
    pub witness_ref_tau: Option<f64>,
    pub target: f64,
    pub params: PhysicalParams,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            setup: SetupKind::Parallel,
            n: 2,
            d_levels: 2,
            subsystems: vec![2],
            gammas: vec![0.0],
            tau_grid: Grid::single(2.5),
            temp_grid: Grid {
                start: 0.05,
                stop: 5.0,
                steps: 100,
            },
            shots: None,
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            mode: PlanMode::Ungrouped,
            witness: WitnessMode::SelfState,
            witness_ref_gamma: 0.0,
            witness_ref_tau: None,
            target: DEFAULT_TARGET_CONFIDENCE,
            params: PhysicalParams::default(),
            out: None,
        }
    }
}

impl RunConfig {
    /// Defaults overridden by the entries of a `key = value` file.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (key, value) in parse_key_values(text)? {
            cfg.apply(&key, &value)?;
        }
        Ok(cfg)
    }

    /// Sets one option from its textual form.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "command" => self.command = Some(value.parse()?),
            "setup" | "kind" => self.setup = value.parse()?,
            "n" => self.n = parse_usize("n", value)?,
            "d_levels" | "d" => self.d_levels = parse_usize("d_levels", value)?,
            "subsystem" | "subsystems" => {
                self.subsystems = value
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| parse_usize("subsystem", p))
                    .collect::<Result<_>>()?
            }
            "gamma" | "gammas" => self.gammas = parse_grid_list(value)?,
            "tau_grid" | "tau" => self.tau_grid = value.parse()?,
            "temp_grid" => self.temp_grid = value.parse()?,
            "shots" => self.shots = Some(parse_u64("shots", value)?),
            "seeds" => self.seeds = parse_seeds(value)?,
            "mode" => self.mode = value.parse()?,
            "witness" => self.witness = value.parse()?,
            "witness_ref_gamma" => self.witness_ref_gamma = parse_f64("witness_ref_gamma", value)?,
            "witness_ref_tau" => self.witness_ref_tau = Some(parse_f64("witness_ref_tau", value)?),
            "target" => self.target = parse_f64("target", value)?,
            "mass" | "m" => self.params.mass = parse_f64("mass", value)?,
            "d_min" => self.params.d_min = parse_f64("d_min", value)?,
            "delta_x" => self.params.delta_x = parse_f64("delta_x", value)?,
            "out" => self.out = Some(value.to_string()),
            other => return Err(Error::Parse(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    pub fn witness_source(&self) -> WitnessSource {
        match self.witness {
            WitnessMode::SelfState => WitnessSource::SelfState,
            WitnessMode::Fixed => WitnessSource::Fixed {
                gamma: self.witness_ref_gamma,
                tau: self.witness_ref_tau.unwrap_or(self.tau_grid.start),
            },
        }
    }

    /// Zero-based subsystem indices.
    pub fn subsystem_indices(&self) -> Vec<usize> {
        self.subsystems.iter().map(|&s| s - 1).collect()
    }

    /// Checks that `command` can run with these parameters. Messages name
    /// the violated constraint.
    pub fn validate(&self, command: Command) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if command != Command::DecoEstimate {
            if !(2..=3).contains(&self.n) {
                return bad(format!("n must be 2 or 3, got {}", self.n));
            }
            if self.d_levels < 2 {
                return bad(format!("d-levels must be at least 2, got {}", self.d_levels));
            }
            if self.setup == SetupKind::Star && self.n != 3 {
                return bad(format!("star requires n=3, got n={}", self.n));
            }
            if self.setup == SetupKind::Star && self.d_levels != 2 {
                return bad(format!("star requires d-levels=2, got {}", self.d_levels));
            }
            let dim = (self.d_levels as u128).pow(self.n as u32);
            if dim > MAX_DIM as u128 {
                return bad(format!("Hilbert dimension {dim} exceeds the maximum {MAX_DIM}"));
            }
            if self.subsystems.is_empty() {
                return bad("at least one subsystem is required".into());
            }
            if let Some(&s) = self.subsystems.iter().find(|&&s| s == 0 || s > self.n) {
                return bad(format!("subsystem must lie in 1..={}, got {s}", self.n));
            }
            if let Err(e) = self.params.validate() {
                return bad(e.to_string());
            }
            if self.tau_grid.min() < 0.0 {
                return bad(format!("tau grid must be non-negative, got {}", self.tau_grid));
            }
        }
        if matches!(command, Command::WitnessSweep | Command::Measure | Command::GroupOps) {
            if self.gammas.is_empty() {
                return bad("at least one gamma is required".into());
            }
            if let Some(g) = self.gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
                return bad(format!("gamma must be finite and >= 0, got {g}"));
            }
            if self.witness == WitnessMode::Fixed {
                let t_ref = self.witness_ref_tau.unwrap_or(self.tau_grid.start);
                if !(self.witness_ref_gamma >= 0.0 && self.witness_ref_gamma.is_finite()) {
                    return bad(format!("witness reference gamma must be >= 0, got {}", self.witness_ref_gamma));
                }
                if !(t_ref >= 0.0 && t_ref.is_finite()) {
                    return bad(format!("witness reference tau must be >= 0, got {t_ref}"));
                }
            }
        }
        if matches!(command, Command::Measure | Command::GroupOps) && self.subsystems.len() != 1 {
            return bad(format!("{command} takes exactly one subsystem, got {}", self.subsystems.len()));
        }
        if matches!(command, Command::EntropySweep | Command::GroupOps) && self.gammas.len() != 1 {
            return bad(format!("{command} takes exactly one gamma, got {}", self.gammas.len()));
        }
        if command == Command::GroupOps && self.tau_grid.steps != 1 {
            return bad(format!("group-ops takes a single tau, got grid {}", self.tau_grid));
        }
        if matches!(command, Command::Measure | Command::GroupOps) && self.d_levels != 2 {
            return bad(format!(
                "{command} requires d-levels=2 (Pauli decomposition is qubit-only), got {}",
                self.d_levels
            ));
        }
        if command == Command::Measure {
            if self.seeds.is_empty() {
                return bad("measure requires at least one seed".into());
            }
            if !(self.target > 0.0 && self.target < 1.0) {
                return bad(format!("target confidence must lie in (0, 1), got {}", self.target));
            }
        }
        if command == Command::DecoEstimate && (self.temp_grid.min() < 0.05 || self.temp_grid.max() > 10.0) {
            return bad(format!("temperature grid must lie within [0.05, 10] K, got {}", self.temp_grid));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g: Grid = "0:5:11".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 11);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[10], 5.0);
        assert!((v[3] - 1.5).abs() < 1e-15);
        assert_eq!("2.5".parse::<Grid>().unwrap().values(), vec![2.5]);
        for bad in ["", "1:2", "0:1:0", "3:1:4", "a:1:2", "0:inf:3", "0:1:-2"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }

    #[test]
    fn seeds() {
        assert_eq!(parse_seeds("3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("5..8").unwrap(), vec![5, 6, 7]);
        assert_eq!(parse_seeds("9, 4").unwrap(), vec![9, 4]);
        assert!(parse_seeds("0").is_err());
        assert!(parse_seeds("4..4").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn config_file() {
        let text = "
            # three particles
            command = measure
            setup = parallel
            n = 3
            subsystem = 2
            gamma = 0.05, 0.1   # two points
            tau-grid = 2.5
            mode = grouped
            seeds = 0..5
        ";
        let cfg = RunConfig::from_config_str(text).unwrap();
        assert_eq!(cfg.command, Some(Command::Measure));
        assert_eq!(cfg.n, 3);
        assert_eq!(cfg.gammas, vec![0.05, 0.1]);
        assert_eq!(parse_grid_list("0:0.1:3, 0.2").unwrap(), vec![0.0, 0.05, 0.1, 0.2]);
        assert_eq!(cfg.mode, PlanMode::Grouped);
        assert_eq!(cfg.seeds.len(), 5);
        cfg.validate(Command::Measure).unwrap();
    }

    #[test]
    fn config_errors() {
        assert!(RunConfig::from_config_str("n 3").is_err());
        assert!(RunConfig::from_config_str("colour = blue").is_err());
        assert!(RunConfig::from_config_str("n = three").is_err());
    }

    #[test]
    fn invalid_combinations_name_the_constraint() {
        let star = RunConfig {
            setup: SetupKind::Star,
            n: 2,
            ..RunConfig::default()
        };
        let msg = star.validate(Command::WitnessSweep).unwrap_err().to_string();
        assert!(msg.contains("star requires n=3"), "{msg}");
        let qutrit = RunConfig {
            d_levels: 3,
            ..RunConfig::default()
        };
        qutrit.validate(Command::WitnessSweep).unwrap();
        let msg = qutrit.validate(Command::GroupOps).unwrap_err().to_string();
        assert!(msg.contains("d-levels=2"), "{msg}");
        let sub = RunConfig {
            subsystems: vec![3],
            ..RunConfig::default()
        };
        assert!(sub.validate(Command::EntropySweep).is_err());
        let cold = RunConfig {
            temp_grid: Grid::single(0.01),
            ..RunConfig::default()
        };
        assert!(cold.validate(Command::DecoEstimate).is_err());
    }

    #[test]
    fn fixed_witness_reference_defaults_to_first_tau() {
        let cfg = RunConfig {
            witness: WitnessMode::Fixed,
            witness_ref_gamma: 0.05,
            tau_grid: "1:3:5".parse().unwrap(),
            ..RunConfig::default()
        };
        assert_eq!(cfg.witness_source(), WitnessSource::Fixed { gamma: 0.05, tau: 1.0 });
    }
}
