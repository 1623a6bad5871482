//! Run configuration. Defaults, then the TOML file named by `RAVEL_CONFIG`,
//! then command line flags.

use std::path::{Path, PathBuf};

use ravel::diagram::CONSTITUENT_CAP;
use ravel::invariants::CROSSING_BUDGET;
use ravel::oracle::OracleConfig;
use ravel::rewrite::DEFAULT_BUDGET;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CONFIG_ENV: &str = "RAVEL_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// One JSON document, or one per line for datasets.
    #[default]
    Json,
    /// Human summary.
    Text,
}

/// Enumeration bounds. A zero bound gives an empty dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bounds {
    pub max_summands: usize,
    /// Per summand.
    pub max_crossings: usize,
    pub max_vertices: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_summands: 2, max_crossings: 4, max_vertices: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Flip attempts per rewrite search.
    pub search_budget: usize,
    /// Largest constituent diagram the bracket will evaluate.
    pub crossing_budget: usize,
    /// Most constituent links examined per closure.
    pub constituent_cap: usize,
    pub bounds: Bounds,
    pub refine: bool,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            search_budget: DEFAULT_BUDGET,
            crossing_budget: CROSSING_BUDGET,
            constituent_cap: CONSTITUENT_CAP,
            bounds: Bounds::default(),
            refine: false,
            format: Format::Json,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, CliError> {
        let c: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("search_budget", self.search_budget),
            ("crossing_budget", self.crossing_budget),
            ("constituent_cap", self.constituent_cap),
        ] {
            if v == 0 {
                return Err(CliError::Config(format!("{name} must be positive")));
            }
        }
        if self.crossing_budget > CROSSING_BUDGET {
            return Err(CliError::Config(format!("crossing_budget is at most {CROSSING_BUDGET}")));
        }
        Ok(())
    }

    pub fn oracle(&self) -> OracleConfig {
        OracleConfig {
            search_budget: self.search_budget,
            crossing_budget: self.crossing_budget,
            constituent_cap: self.constituent_cap,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_files_keep_defaults() {
        let c = RunConfig::from_toml("search_budget = 50\n[bounds]\nmax_vertices = 1\n").unwrap();
        assert_eq!(c.search_budget, 50);
        assert_eq!(c.bounds.max_vertices, 1);
        assert_eq!(c.bounds.max_summands, 2);
        assert_eq!(c.crossing_budget, CROSSING_BUDGET);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(RunConfig::from_toml("search_budget = 0").is_err());
        assert!(RunConfig::from_toml("colour = 3").is_err());
        assert!(RunConfig::from_toml("crossing_budget = 99").is_err());
    }
}
