//! Run configuration: a JSON file merged with command-line flags, then
//! completed with per-subcommand defaults.

use deffusion_core::PeriodicPotential;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Deff,
    Mc,
    Fw,
    Smol,
    GraphSim,
    BoundsCheck,
    Gap,
    Sweep,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Deff => "deff",
            Subcommand::Mc => "mc",
            Subcommand::Fw => "fw",
            Subcommand::Smol => "smol",
            Subcommand::GraphSim => "graph-sim",
            Subcommand::BoundsCheck => "bounds-check",
            Subcommand::Gap => "gap",
            Subcommand::Sweep => "sweep",
        }
    }
}

/// A preset name (`pendulum`, `zero`) or explicit Fourier coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    Named(String),
    Coefficients(PeriodicPotential),
}

impl PotentialSpec {
    /// Flag syntax: a preset name, inline JSON, or `@file.json`.
    pub fn parse_flag(text: &str) -> Result<Self, CliError> {
        let text = text.trim();
        if let Some(path) = text.strip_prefix('@') {
            let body = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read potential file {path}: {e}")))?;
            return Ok(Self::Coefficients(PeriodicPotential::from_json(&body)?));
        }
        if text.starts_with('{') {
            return Ok(Self::Coefficients(PeriodicPotential::from_json(text)?));
        }
        Ok(Self::Named(text.to_string()))
    }

    pub fn resolve(&self) -> Result<PeriodicPotential, CliError> {
        match self {
            Self::Named(name) => PeriodicPotential::preset(name)
                .ok_or_else(|| CliError::Usage(format!("unknown potential preset '{name}' (try pendulum or zero)"))),
            Self::Coefficients(v) => {
                v.validate()?;
                Ok(v.clone())
            }
        }
    }
}

/// Friction values: a number, a list, or text of comma-separated items where
/// each item is a number or a geometric range `lo:hi:n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Single(f64),
    List(Vec<f64>),
    Text(String),
}

impl GammaSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let values = match self {
            Self::Single(g) => vec![*g],
            Self::List(v) => v.clone(),
            Self::Text(t) => parse_gamma_text(t)?,
        };
        if values.is_empty() {
            return Err(CliError::Usage("the gamma grid is empty".into()));
        }
        if let Some(bad) = values.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
            return Err(CliError::Usage(format!("gamma must be positive and finite, got {bad}")));
        }
        Ok(values)
    }
}

pub fn parse_gamma_text(text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(parse_f64(x)?),
            [lo, hi, n] => {
                let (lo, hi) = (parse_f64(lo)?, parse_f64(hi)?);
                let n: usize = n
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad point count in range '{item}'")))?;
                if n < 2 || !(lo > 0.0) || !(hi > lo) {
                    return Err(CliError::Usage(format!("range '{item}' needs 0 < lo < hi and n >= 2")));
                }
                let ratio = (hi / lo).ln() / (n - 1) as f64;
                out.extend((0..n).map(|i| if i == n - 1 { hi } else { lo * (ratio * i as f64).exp() }));
            }
            _ => return Err(CliError::Usage(format!("cannot parse gamma item '{item}'"))),
        }
    }
    Ok(out)
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::Usage(format!("not a number: '{s}'")))
}

/// Every field is optional so that a file and the flags can each supply part
/// of it. After [`RunConfig::resolve`] all fields used by the subcommand are
/// set, and the result is echoed into the JSON output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<Subcommand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Hermite levels; chosen from γ when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nh: Option<usize>,
    /// Fourier wavenumbers; chosen from γ when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nk: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_nh: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_nk: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_records: Option<usize>,
    /// Energies per edge in the `fw` table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    /// Grid for the overdamped corrector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Monte Carlo paths per sweep row; 0 skips the simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

pub const DEFAULT_SWEEP_GRID: [f64; 9] = [0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0];
pub const DEFAULT_GAP_GRID: [f64; 3] = [0.1, 0.3, 1.0];

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overridden_by(mut self, flags: RunConfig) -> Self {
        overlay!(self, flags; subcommand, potential, beta, gamma, seed, workers, nh, nk, gap, gap_nh, gap_nk,
            dt, t_end, n_paths, record_stride, n_records, points, z_max, grid, mc_paths, csv, json);
        self
    }

    /// Fills defaults for `cmd` and normalizes the potential and γ grid.
    pub fn resolve(mut self, cmd: Subcommand) -> Result<Resolved, CliError> {
        if let Some(s) = self.subcommand {
            if s != cmd {
                return Err(CliError::Usage(format!(
                    "config file is for '{}' but '{}' was invoked",
                    s.name(),
                    cmd.name()
                )));
            }
        }
        self.subcommand = Some(cmd);
        let potential = self
            .potential
            .clone()
            .unwrap_or_else(|| PotentialSpec::Named("pendulum".into()))
            .resolve()?;
        self.potential = Some(PotentialSpec::Coefficients(potential.clone()));
        let beta = *self.beta.get_or_insert(1.0);
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(CliError::Usage(format!("beta must be positive, got {beta}")));
        }
        self.seed.get_or_insert(0);
        let default_grid: &[f64] = match cmd {
            Subcommand::BoundsCheck | Subcommand::Sweep => &DEFAULT_SWEEP_GRID,
            Subcommand::Gap => &DEFAULT_GAP_GRID,
            Subcommand::Smol => &[10.0],
            _ => &[1.0],
        };
        let gammas = match &self.gamma {
            Some(g) => g.values()?,
            None => default_grid.to_vec(),
        };
        let uses_gamma = !matches!(cmd, Subcommand::Fw | Subcommand::GraphSim);
        self.gamma = uses_gamma.then(|| GammaSpec::List(gammas.clone()));
        match cmd {
            Subcommand::Mc => {
                if gammas.len() != 1 {
                    return Err(CliError::Usage("mc takes a single gamma".into()));
                }
            }
            Subcommand::Deff => {
                self.gap.get_or_insert(false);
                if self.gap == Some(true) {
                    self.gap_nh.get_or_insert(48);
                    self.gap_nk.get_or_insert(16);
                }
            }
            Subcommand::Gap => {
                self.nh.get_or_insert(48);
                self.nk.get_or_insert(16);
            }
            Subcommand::Fw => {
                self.points.get_or_insert(50);
            }
            Subcommand::Smol => {
                self.grid.get_or_insert(512);
            }
            Subcommand::GraphSim => {
                self.t_end.get_or_insert(200.0);
                self.dt.get_or_insert(1e-2);
                self.n_paths.get_or_insert(1000);
                self.n_records.get_or_insert(200);
            }
            Subcommand::Sweep => {
                self.mc_paths.get_or_insert(1000);
            }
            Subcommand::BoundsCheck => {}
        }
        if let (Some(nh), Some(nk)) = (self.nh, self.nk) {
            if nh < 2 || nk < 1 {
                return Err(CliError::Usage(format!("basis needs nh >= 2 and nk >= 1, got ({nh}, {nk})")));
            }
        } else if self.nh.is_some() != self.nk.is_some() {
            return Err(CliError::Usage("nh and nk must be given together".into()));
        }
        if self.csv.is_some() && self.csv == self.json {
            return Err(CliError::Usage("csv and json outputs must differ".into()));
        }
        Ok(Resolved {
            cmd,
            potential,
            beta,
            gammas,
            config: self,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub cmd: Subcommand,
    pub potential: PeriodicPotential,
    pub beta: f64,
    pub gammas: Vec<f64>,
    pub config: RunConfig,
}

impl Resolved {
    pub fn seed(&self) -> u64 {
        self.config.seed.unwrap_or(0)
    }
}
