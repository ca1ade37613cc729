//! Batch front-end for `wpcn-core`: loads a JSON configuration, runs one
//! experiment and writes a tidy CSV or JSON table.
//!
//! Rates are reported in Mbit/s, distances in metres and `α`, `β`, `ξ` as raw
//! ratios. Every file carries the seed and tool version. The JSON layout is
//! described by `docs/output.schema.json`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;
use wpcn_core::{OptimizerOptions, SystemConfig};

pub use error::{CliError, Result};
pub use output::{Cell, Format, Metadata, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Forward,
    Optimize,
    SweepM,
    Surface,
    Asymptotics,
    Oracle,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Forward => "forward",
            Command::Optimize => "optimize",
            Command::SweepM => "sweep-m",
            Command::Surface => "surface",
            Command::Asymptotics => "asymptotics",
            Command::Oracle => "oracle",
        })
    }
}

/// `<alpha points>x<beta points>`, e.g. `200x200`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSize {
    pub alpha: usize,
    pub beta: usize,
}

impl FromStr for GridSize {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected <n>x<n>, got `{s}`"))?;
        let parse = |t: &str| match t.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(format!("grid size `{t}` must be a positive integer")),
        };
        Ok(Self {
            alpha: parse(a)?,
            beta: parse(b)?,
        })
    }
}

impl fmt::Display for GridSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.alpha, self.beta)
    }
}

impl Serialize for GridSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Command-specific switches. Unset options take the per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Flags {
    pub oracle: bool,
    pub asymptotic_init: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub devices: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenarios: Option<PathBuf>,
}

/// Everything that determines one run. Two runs with equal manifests and
/// equal input files produce identical bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    /// Built-in reference configuration when absent.
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub trials: usize,
    /// Standard output when absent.
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub flags: Flags,
}

impl RunManifest {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            config_path: None,
            seed: 42,
            trials: 1000,
            output_path: None,
            format: Format::Csv,
            flags: Flags::default(),
        }
    }

    fn grid(&self, default: usize) -> GridSize {
        self.flags.grid.unwrap_or(GridSize {
            alpha: default,
            beta: default,
        })
    }

    fn optimizer_options(&self) -> OptimizerOptions {
        OptimizerOptions {
            asymptotic_init: self.flags.asymptotic_init,
            ..OptimizerOptions::default()
        }
    }
}

pub const DEFAULT_ORACLE_GRID: usize = 200;
pub const DEFAULT_SURFACE_GRID: usize = 50;

pub fn load(manifest: &RunManifest) -> Result<SystemConfig> {
    match &manifest.config_path {
        Some(path) => config::load_config(path),
        None => Ok(SystemConfig::default()),
    }
}

/// Runs the experiment named by the manifest and returns its table with provenance.
pub fn run(manifest: &RunManifest) -> Result<(Table, Metadata)> {
    let config = load(manifest)?;
    let table = match manifest.command {
        Command::Forward => {
            let scenarios = match &manifest.flags.scenarios {
                Some(path) => config::load_scenarios(path)?,
                None => config::reference_scenarios(config.devices),
            };
            experiments::forward(&config, &scenarios, manifest.trials, manifest.seed)?
        }
        Command::Optimize => {
            let grid = manifest.flags.oracle.then(|| manifest.grid(DEFAULT_ORACLE_GRID));
            experiments::optimize(&config, &manifest.optimizer_options(), grid.map(|g| (g.alpha, g.beta)))?
        }
        Command::SweepM => {
            let list = manifest.flags.m_list.clone().unwrap_or_else(experiments::default_m_list);
            experiments::sweep_m(&config, &list, &manifest.optimizer_options())?
        }
        Command::Surface => {
            let g = manifest.grid(DEFAULT_SURFACE_GRID);
            let devices = manifest.flags.devices.clone().unwrap_or_else(|| vec![1, 2]);
            experiments::surface(&config, g.alpha, g.beta, &devices)?
        }
        Command::Asymptotics => {
            let list = manifest.flags.m_list.clone().unwrap_or_else(experiments::default_m_list);
            experiments::asymptotic_table(&config, &list)?
        }
        Command::Oracle => {
            let g = manifest.grid(DEFAULT_ORACLE_GRID);
            experiments::oracle(&config, g.alpha, g.beta)?
        }
    };
    let meta = Metadata {
        tool: "wpcn",
        version: VERSION,
        command: manifest.command.to_string(),
        seed: manifest.seed,
        trials: (manifest.command == Command::Forward).then_some(manifest.trials),
        config: serde_json::to_value(&config).map_err(|e| CliError::Encode(e.to_string()))?,
        flags: match serde_json::to_value(&manifest.flags) {
            Ok(Value::Object(map)) => map,
            _ => serde_json::Map::new(),
        },
    };
    Ok((table, meta))
}

/// Runs and writes the result; nothing is written when the run fails.
pub fn execute(manifest: &RunManifest) -> Result<()> {
    let (table, meta) = run(manifest)?;
    let bytes = output::encode(&table, &meta, manifest.format)?;
    match &manifest.output_path {
        Some(path) => output::write_atomic(path, &bytes),
        None => std::io::stdout().lock().write_all(&bytes).map_err(|source| CliError::Write {
            path: "<stdout>".into(),
            source,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_size_parses() {
        assert_eq!("200x150".parse::<GridSize>(), Ok(GridSize { alpha: 200, beta: 150 }));
        assert!("200".parse::<GridSize>().is_err());
        assert!("0x3".parse::<GridSize>().is_err());
    }

    #[test]
    fn flags_serialize_kebab_case() {
        let flags = Flags {
            asymptotic_init: true,
            grid: Some(GridSize { alpha: 2, beta: 3 }),
            ..Flags::default()
        };
        let v = serde_json::to_value(&flags).unwrap();
        assert_eq!(v["asymptotic-init"], true);
        assert_eq!(v["grid"], "2x3");
        assert!(v.get("m-list").is_none());
    }

    #[test]
    fn optimize_single_device_puts_all_energy_on_it() {
        let path = std::env::temp_dir().join(format!("wpcn-k1-{}.json", std::process::id()));
        std::fs::write(
            &path,
            r#"{"M": 10, "K": 1, "B": 1e5, "T": 1e-3, "s_max": 1e-4, "P_b": 10,
                "sigma2_un": 1e-12, "c0": 1e-3, "d0": 1, "delta": 3, "d": [6]}"#,
        )
        .unwrap();
        let manifest = RunManifest {
            config_path: Some(path.clone()),
            ..RunManifest::new(Command::Optimize)
        };
        let (table, _) = run(&manifest).unwrap();
        std::fs::remove_file(path).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.floats("xi_1").unwrap(), vec![1.0]);
    }
}
