//! JSON inputs: the system configuration and optional scenario lists.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use wpcn_core::{DecisionVariables, SystemConfig};

use crate::error::{CliError, Result};

/// Reads and validates a configuration. Unknown keys are rejected.
pub fn load_config(path: &Path) -> Result<SystemConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::ReadInput {
        path: path.to_owned(),
        source,
    })?;
    parse_config(&text).map_err(|e| match e {
        CliError::Parse { source, .. } => CliError::Parse {
            path: path.to_owned(),
            source,
        },
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let config: SystemConfig = serde_json::from_str(text).map_err(|source| CliError::Parse {
        path: "<config>".into(),
        source,
    })?;
    Ok(config.validate()?)
}

/// One operating point of a forward experiment.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub alpha: f64,
    pub beta: f64,
    pub xi: Vec<f64>,
}

impl Scenario {
    /// Decision variables checked against `config`; `index` is 1-based and only labels errors.
    pub fn vars(&self, config: &SystemConfig, index: usize) -> Result<DecisionVariables> {
        DecisionVariables::new(self.alpha, self.beta, self.xi.clone())
            .and_then(|v| v.check(config).map(|()| v))
            .map_err(|source| CliError::Scenario { index, source })
    }
}

/// The five reference operating points: a single beam at each device, then equal weights.
pub fn reference_scenarios(devices: usize) -> Vec<Scenario> {
    let mut out: Vec<Scenario> = (0..devices)
        .map(|k| {
            let mut xi = vec![0.0; devices];
            xi[k] = 1.0;
            Scenario {
                alpha: 0.05,
                beta: 0.1,
                xi,
            }
        })
        .collect();
    out.push(Scenario {
        alpha: 0.05,
        beta: 0.1,
        xi: vec![1.0 / devices as f64; devices],
    });
    out
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let text = fs::read_to_string(path).map_err(|source| CliError::ReadInput {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_owned(),
        source,
    })
}
