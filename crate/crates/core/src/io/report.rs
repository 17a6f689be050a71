use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineResult;
use crate::error::{Error, Result};
use crate::estimators::IdEstimate;
use crate::metric::{CorrelationMatrix, CorrelationReport};

pub const SCHEMA_VERSION: &str = "1";

/// How the run was invoked: subcommand plus every flag, in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub name: String,
    pub flags: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportResults {
    Id(IdEstimate),
    Correlation(CorrelationReport),
    Matrix(CorrelationMatrix),
    Baseline(BaselineResult),
    /// Files written by data-producing commands.
    Files {
        paths: Vec<String>,
    },
}

/// Wall-clock information. This is the only part of a document that differs
/// between identical runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub stages_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub command: CommandRecord,
    pub results: ReportResults,
    pub timing: Timing,
}

impl ReportDocument {
    pub fn new(command: CommandRecord, results: ReportResults) -> Self {
        let started_unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        ReportDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            command,
            results,
            timing: Timing {
                started_unix_ms,
                stages_ms: BTreeMap::new(),
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
